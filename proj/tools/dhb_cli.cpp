// Command-line driver for the scenario / surface / train / evaluate pipeline.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "dhb/pipeline.hpp"

namespace {

enum Exit : int { kOk = 0, kOther = 1, kConfig = 2, kMissing = 3, kMismatch = 4 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> strategy;
    std::optional<double> alpha;
    std::optional<int> paths;
    std::optional<std::string> out;
    bool quiet = false;
};

dhb::RunConfig effective_config(const Options& o) {
    auto c = o.config.empty() ? dhb::default_config() : dhb::load_config(o.config);
    if (o.seed) {
        // One base seed drives every random stream.
        c.seed_train = *o.seed;
        c.seed_test = *o.seed + 1;
        c.seed_reference = *o.seed + 2;
        c.seed_surface = *o.seed + 3;
        c.train.seed = *o.seed + 4;
    }
    if (o.paths) c.n_train = c.n_test = c.n_reference = *o.paths;
    if (o.out) c.output_dir = *o.out;
    c.validate();
    return c;
}

dhb::pipeline::Selection selection(const Options& o, const dhb::RunConfig& c) {
    std::optional<dhb::StrategyTag> s;
    if (o.strategy) s = dhb::parse_strategy(*o.strategy);
    if (o.alpha && !(*o.alpha > 0.0 && *o.alpha < 1.0)) throw dhb::InvalidArgument("--alpha must lie in (0, 1)");
    return dhb::pipeline::select(c, s, o.alpha);
}

}  // namespace

int main(int argc, char** argv) {
    dhb::pipeline::retain_freed_memory();
    CLI::App app{"Deep hedging of Bermudan swaptions under the Swap Market Bergomi Model"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub, bool filters) {
        sub->add_option("--config", o.config, "Run configuration (JSON); defaults to the built-in paper setup");
        sub->add_option("--seed", o.seed, "Base seed overriding every seed in the config");
        sub->add_option("--paths", o.paths, "Path count for train, test and reference scenario sets")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "Output directory");
        sub->add_flag("--quiet", o.quiet, "Suppress progress messages");
        if (filters) {
            sub->add_option("--strategy", o.strategy, "Restrict to one strategy (S_I, S_Max, S_OS, S_IplusS, S_IplusS_M)");
            sub->add_option("--alpha", o.alpha, "Restrict to one CVaR level");
        }
    };

    auto* init = app.add_subcommand("init-config", "Write the default configuration to stdout or a file");
    std::string init_path;
    init->add_option("path", init_path, "Destination file (stdout if omitted)");
    auto* gen = app.add_subcommand("generate-scenarios", "Simulate train, test and reference scenario sets");
    add_common(gen, false);
    auto* surf = app.add_subcommand("build-surfaces", "Pre-compute swaption surfaces for original and reference parameters");
    add_common(surf, false);
    auto* train = app.add_subcommand("train", "Train Bermudan hedge models on the training set");
    add_common(train, true);
    auto* eval = app.add_subcommand("evaluate", "Evaluate trained models on the test set");
    add_common(eval, true);
    auto* xval = app.add_subcommand("cross-validate", "Evaluate trained models on the reference set without retraining");
    add_common(xval, true);
    auto* rep = app.add_subcommand("report", "Aggregate reports into Table 1/2-shaped CSV files");
    add_common(rep, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (init->parsed()) {
            const auto text = dhb::dump_config(dhb::default_config());
            if (init_path.empty()) std::cout << text;
            else dhb::io::write_file_atomic(init_path, text);
            return kOk;
        }
        dhb::pipeline::Context ctx(effective_config(o), [&](const std::string& m) {
            if (!o.quiet) std::cerr << m << '\n';
        });
        namespace pl = dhb::pipeline;
        if (gen->parsed()) {
            pl::generate_scenarios(ctx);
        } else if (surf->parsed()) {
            pl::build_all_surfaces(ctx);
        } else if (train->parsed()) {
            pl::train(ctx, selection(o, ctx.config));
        } else if (eval->parsed()) {
            pl::evaluate(ctx, selection(o, ctx.config), pl::ScenarioKind::Test);
        } else if (xval->parsed()) {
            pl::evaluate(ctx, selection(o, ctx.config), pl::ScenarioKind::Reference);
        } else if (rep->parsed()) {
            for (const auto& [set, n] : pl::report(ctx)) std::cout << set << ": " << n << " rows\n";
        }
        return kOk;
    } catch (const dhb::InvalidArgument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const dhb::MissingArtifact& e) {
        std::cerr << "missing artifact: " << e.what() << '\n';
        return kMissing;
    } catch (const dhb::FingerprintMismatch& e) {
        std::cerr << "fingerprint mismatch: " << e.what() << '\n';
        return kMismatch;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOther;
    }
}
