#pragma once

#include <cstdint>

#include "dhb/error.hpp"
#include "dhb/fingerprint.hpp"
#include "dhb/nn/adam.hpp"

namespace dhb::nn {

struct TrainConfig {
    AdamConfig adam;
    int batch_paths = 256;
    int epochs = 400;
    int patience = 50;           // epochs without evaluation-set improvement
    double eval_fraction = 0.25; // share of training paths held out for early stopping
    double alpha = 0.2;
    std::uint64_t seed = 20240501;
    int hidden_layers = 4;
    int width = 32;
    double dropout = 0.5;

    void validate() const {
        DHB_REQUIRE(alpha > 0.0 && alpha < 1.0, InvalidArgument, "TrainConfig: alpha must lie in (0, 1)");
        DHB_REQUIRE(batch_paths >= 2, InvalidArgument, "TrainConfig: batch_paths must be >= 2");
        DHB_REQUIRE(epochs >= 0 && patience >= 1, InvalidArgument, "TrainConfig: epochs >= 0, patience >= 1");
        DHB_REQUIRE(eval_fraction > 0.0 && eval_fraction < 1.0, InvalidArgument,
                    "TrainConfig: eval_fraction must lie in (0, 1)");
        DHB_REQUIRE(adam.lr > 0.0 && adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 &&
                        adam.eps > 0.0,
                    InvalidArgument, "TrainConfig: invalid Adam settings");
        DHB_REQUIRE(dropout >= 0.0 && dropout < 1.0, InvalidArgument, "TrainConfig: dropout must lie in [0, 1)");
        DHB_REQUIRE(hidden_layers >= 0 && width >= 1, InvalidArgument, "TrainConfig: invalid architecture");
    }

    void hash(Fingerprint& fp) const {
        fp.add(adam.lr).add(adam.beta1).add(adam.beta2).add(adam.eps);
        fp.add(batch_paths).add(epochs).add(patience).add(eval_fraction).add(alpha);
        fp.add(seed).add(hidden_layers).add(width).add(dropout);
    }
};

}  // namespace dhb::nn
