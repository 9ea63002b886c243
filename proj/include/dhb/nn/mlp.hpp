#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dhb/binary_io.hpp"
#include "dhb/error.hpp"

// Fixed-architecture MLP: hidden blocks Dense -> BatchNorm -> ReLU -> Dropout,
// then a linear or sigmoid head. Batches are column-major, one sample per
// column. All trainable parameters live in one flat vector so the optimiser
// sees a single array.

namespace dhb::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Head { Linear, Sigmoid };

struct MlpSpec {
    int inputs = 1;
    int outputs = 1;
    int hidden_layers = 4;
    int width = 32;
    Head head = Head::Linear;
    double dropout = 0.5;
    double bn_momentum = 0.1;
    double bn_eps = 1e-5;

    void validate() const {
        DHB_REQUIRE(inputs >= 1 && outputs >= 1 && width >= 1 && hidden_layers >= 0, InvalidArgument,
                    "MlpSpec: widths must be >= 1");
        DHB_REQUIRE(dropout >= 0.0 && dropout < 1.0, InvalidArgument, "MlpSpec: dropout must lie in [0, 1)");
    }
};

struct Mode {
    bool batch_stats = false;     // batch-norm from the batch, else running stats
    bool dropout = false;
    bool update_running = false;  // fold batch stats into the running averages
};
inline constexpr Mode kTrain{true, true, true};
inline constexpr Mode kEval{false, false, false};

// Offsets of one hidden block inside the flat parameter vector.
struct LayerSlots {
    Eigen::Index w, b, gamma, beta;
    int rows, cols;
};

class Mlp {
public:
    Mlp() = default;

    Mlp(MlpSpec spec, std::uint64_t seed) : spec_(spec) {
        spec_.validate();
        layout();
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss;
        theta_.setZero();
        for (const auto& L : layers_) {
            const double sd = std::sqrt(2.0 / L.cols);  // He initialisation
            for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(L.rows) * L.cols; ++k) theta_[L.w + k] = sd * gauss(rng);
            theta_.segment(L.gamma, L.rows).setOnes();
        }
        // Output layer starts at zero: hedge 0, exercise probability 1/2.
        running_mean_.assign(layers_.size(), Vector::Zero(spec_.width));
        running_var_.assign(layers_.size(), Vector::Ones(spec_.width));
    }

    [[nodiscard]] const MlpSpec& spec() const { return spec_; }
    [[nodiscard]] Vector& params() { return theta_; }
    [[nodiscard]] const Vector& params() const { return theta_; }
    [[nodiscard]] Eigen::Index n_params() const { return theta_.size(); }
    [[nodiscard]] const std::vector<LayerSlots>& layers() const { return layers_; }
    [[nodiscard]] Eigen::Index out_w() const { return out_w_; }
    [[nodiscard]] Eigen::Index out_b() const { return out_b_; }
    [[nodiscard]] std::vector<Vector>& running_mean() { return running_mean_; }
    [[nodiscard]] std::vector<Vector>& running_var() { return running_var_; }
    [[nodiscard]] const std::vector<Vector>& running_mean() const { return running_mean_; }
    [[nodiscard]] const std::vector<Vector>& running_var() const { return running_var_; }

    // Everything backward() needs from one forward pass.
    struct Tape {
        Mode mode;
        std::vector<Matrix> input;    // block input activations
        std::vector<Matrix> zhat;     // normalised pre-activations
        std::vector<Vector> inv_std;
        std::vector<std::vector<std::uint8_t>> keep;  // dropout keep flags (empty when off)
        Matrix last;                  // input to the head
        Matrix out;                   // head output
    };

    Matrix forward(const Matrix& x, Mode mode, std::mt19937_64* rng = nullptr, Tape* tape = nullptr) {
        DHB_REQUIRE(x.rows() == spec_.inputs, InvalidArgument,
                    "Mlp::forward: expected " + std::to_string(spec_.inputs) + " input rows, got " +
                        std::to_string(x.rows()));
        DHB_REQUIRE(!mode.dropout || spec_.dropout == 0.0 || rng != nullptr, InvalidArgument,
                    "Mlp::forward: dropout needs an rng");
        DHB_REQUIRE(!mode.batch_stats || x.cols() >= 2, InvalidArgument,
                    "Mlp::forward: batch statistics need at least two samples");
        if (tape) {
            *tape = Tape{};
            tape->mode = mode;
        }
        const Eigen::Index n = x.cols();
        const bool drop = mode.dropout && spec_.dropout > 0.0 && rng != nullptr;
        const double keep = 1.0 - spec_.dropout;
        Matrix a = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const auto& L = layers_[l];
            Eigen::Map<const Matrix> W(theta_.data() + L.w, L.rows, L.cols);
            Eigen::Map<const Vector> b(theta_.data() + L.b, L.rows);
            const double* g = theta_.data() + L.gamma;
            const double* be = theta_.data() + L.beta;
            Matrix z(L.rows, n);
            z.noalias() = W * a;
            z.colwise() += b;
            const int R = L.rows;
            Vector mu, var;
            if (mode.batch_stats) {
                mu = Vector::Zero(R);
                var = Vector::Zero(R);
                for (Eigen::Index c = 0; c < n; ++c) mu += z.col(c);
                mu /= static_cast<double>(n);
                for (Eigen::Index c = 0; c < n; ++c) var.array() += (z.col(c) - mu).array().square();
                var /= static_cast<double>(n);
                if (mode.update_running) {
                    const double m = spec_.bn_momentum, nn = static_cast<double>(n);
                    running_mean_[l] = (1.0 - m) * running_mean_[l] + m * mu;
                    running_var_[l] = (1.0 - m) * running_var_[l] + m * var * (nn / (nn - 1.0));
                }
            } else {
                mu = running_mean_[l];
                var = running_var_[l];
            }
            Vector inv = (var.array() + spec_.bn_eps).rsqrt();
            std::vector<std::uint8_t> kept;
            if (drop) kept = dropout_flags(static_cast<std::size_t>(z.size()), keep, *rng);
            // z becomes zhat in place; r = dropout(relu(gamma zhat + beta)).
            Matrix r(L.rows, n);
            const double scale = drop ? 1.0 / keep : 1.0;
            for (Eigen::Index c = 0; c < n; ++c) {
                double* zc = z.data() + c * R;
                double* rc = r.data() + c * R;
                for (int k = 0; k < R; ++k) {
                    const double zh = (zc[k] - mu[k]) * inv[k];
                    zc[k] = zh;
                    rc[k] = std::max(g[k] * zh + be[k], 0.0);
                }
                if (drop) {
                    const std::uint8_t* kc = kept.data() + c * R;
                    for (int k = 0; k < R; ++k) rc[k] *= scale * static_cast<double>(kc[k]);
                }
            }
            if (tape) {
                tape->input.push_back(std::move(a));
                tape->zhat.push_back(std::move(z));
                tape->inv_std.push_back(std::move(inv));
                tape->keep.push_back(std::move(kept));
            }
            a = std::move(r);
        }
        Eigen::Map<const Matrix> Wo(theta_.data() + out_w_, spec_.outputs, last_width());
        Eigen::Map<const Vector> bo(theta_.data() + out_b_, spec_.outputs);
        Matrix o(spec_.outputs, n);
        o.noalias() = Wo * a;
        o.colwise() += bo;
        if (spec_.head == Head::Sigmoid) o = (1.0 + (-o.array()).exp()).inverse().matrix();
        if (tape) {
            tape->last = std::move(a);
            tape->out = o;
        }
        return o;
    }

    // Reverse pass: adds dL/dtheta into grad (same layout as params()) and
    // returns dL/dx.
    Matrix backward(const Tape& tape, const Matrix& d_out, Vector& grad) const {
        DHB_REQUIRE(grad.size() == theta_.size(), InvalidArgument, "Mlp::backward: gradient size mismatch");
        DHB_REQUIRE(d_out.rows() == tape.out.rows() && d_out.cols() == tape.out.cols(), InvalidArgument,
                    "Mlp::backward: output gradient shape mismatch");
        Matrix d = d_out;
        if (spec_.head == Head::Sigmoid) d.array() *= tape.out.array() * (1.0 - tape.out.array());
        Eigen::Map<const Matrix> Wo(theta_.data() + out_w_, spec_.outputs, last_width());
        Eigen::Map<Matrix>(grad.data() + out_w_, spec_.outputs, last_width()).noalias() += d * tape.last.transpose();
        grad.segment(out_b_, spec_.outputs) += d.rowwise().sum();
        Matrix da(last_width(), d.cols());
        da.noalias() = Wo.transpose() * d;
        const Eigen::Index n = d.cols();
        for (std::size_t li = layers_.size(); li-- > 0;) {
            const auto& L = layers_[li];
            const int R = L.rows;
            Eigen::Map<const Matrix> W(theta_.data() + L.w, L.rows, L.cols);
            const double* g = theta_.data() + L.gamma;
            const double* be = theta_.data() + L.beta;
            const auto& zh = tape.zhat[li];
            const auto& kept = tape.keep[li];
            const double scale = 1.0 / (1.0 - spec_.dropout);
            const auto& inv = tape.inv_std[li];
            // da becomes d(zhat) in place; accumulate gamma/beta gradients and
            // the batch-norm sums.
            Vector dg = Vector::Zero(R), db = Vector::Zero(R), s2 = Vector::Zero(R);
            for (Eigen::Index c = 0; c < n; ++c) {
                double* dc = da.data() + c * R;
                const double* zc = zh.data() + c * R;
                if (!kept.empty()) {
                    const std::uint8_t* kc = kept.data() + c * R;
                    for (int k = 0; k < R; ++k) dc[k] *= scale * static_cast<double>(kc[k]);
                }
                for (int k = 0; k < R; ++k) {
                    const double dy = g[k] * zc[k] + be[k] > 0.0 ? dc[k] : 0.0;
                    dg[k] += dy * zc[k];
                    db[k] += dy;
                    const double dzh = dy * g[k];
                    dc[k] = dzh;
                    s2[k] += dzh * zc[k];
                }
            }
            grad.segment(L.gamma, R) += dg;
            grad.segment(L.beta, R) += db;
            if (tape.mode.batch_stats) {
                // s1 = sum dzh = g * db
                const double nn = static_cast<double>(n);
                for (Eigen::Index c = 0; c < n; ++c) {
                    double* dc = da.data() + c * R;
                    const double* zc = zh.data() + c * R;
                    for (int k = 0; k < R; ++k)
                        dc[k] = (nn * dc[k] - g[k] * db[k] - zc[k] * s2[k]) * (inv[k] / nn);
                }
            } else {
                da.array().colwise() *= inv.array();
            }
            Eigen::Map<Matrix>(grad.data() + L.w, L.rows, L.cols).noalias() += da * tape.input[li].transpose();
            grad.segment(L.b, L.rows) += da.rowwise().sum();
            Matrix next(L.cols, n);
            next.noalias() = W.transpose() * da;
            da = std::move(next);
        }
        return da;
    }

    void save(io::Writer& w) const {
        w.u64(static_cast<std::uint64_t>(spec_.inputs));
        w.u64(static_cast<std::uint64_t>(spec_.outputs));
        w.u64(static_cast<std::uint64_t>(spec_.hidden_layers));
        w.u64(static_cast<std::uint64_t>(spec_.width));
        w.u64(spec_.head == Head::Sigmoid ? 1 : 0);
        w.f64(spec_.dropout);
        w.f64(spec_.bn_momentum);
        w.f64(spec_.bn_eps);
        w.array(std::span<const double>(theta_.data(), static_cast<std::size_t>(theta_.size())));
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            w.array(std::span<const double>(running_mean_[l].data(), static_cast<std::size_t>(running_mean_[l].size())));
            w.array(std::span<const double>(running_var_[l].data(), static_cast<std::size_t>(running_var_[l].size())));
        }
    }

    static Mlp load(io::Reader& r) {
        Mlp m;
        m.spec_.inputs = static_cast<int>(r.u64());
        m.spec_.outputs = static_cast<int>(r.u64());
        m.spec_.hidden_layers = static_cast<int>(r.u64());
        m.spec_.width = static_cast<int>(r.u64());
        m.spec_.head = r.u64() == 1 ? Head::Sigmoid : Head::Linear;
        m.spec_.dropout = r.f64();
        m.spec_.bn_momentum = r.f64();
        m.spec_.bn_eps = r.f64();
        m.spec_.validate();
        m.layout();
        auto th = r.array<double>();
        if (static_cast<Eigen::Index>(th.size()) != m.theta_.size()) throw IoError("Mlp::load: parameter count mismatch");
        m.theta_ = Eigen::Map<Vector>(th.data(), m.theta_.size());
        for (std::size_t l = 0; l < m.layers_.size(); ++l) {
            auto mu = r.array<double>();
            auto var = r.array<double>();
            if (mu.size() != static_cast<std::size_t>(m.spec_.width) || var.size() != mu.size())
                throw IoError("Mlp::load: running statistics size mismatch");
            m.running_mean_.push_back(Eigen::Map<Vector>(mu.data(), m.spec_.width));
            m.running_var_.push_back(Eigen::Map<Vector>(var.data(), m.spec_.width));
        }
        return m;
    }

private:
    // Each flag is 1 with probability keep; two 32-bit uniforms per 64-bit draw.
    static std::vector<std::uint8_t> dropout_flags(std::size_t n, double keep, std::mt19937_64& rng) {
        std::vector<std::uint8_t> f(n);
        const auto thr = static_cast<std::uint64_t>(std::ldexp(keep, 32));
        std::size_t k = 0;
        for (; k + 1 < n; k += 2) {
            const std::uint64_t r = rng();
            f[k] = (r & 0xffffffffULL) < thr;
            f[k + 1] = (r >> 32) < thr;
        }
        if (k < n) f[k] = (rng() & 0xffffffffULL) < thr;
        return f;
    }

    [[nodiscard]] int last_width() const { return spec_.hidden_layers > 0 ? spec_.width : spec_.inputs; }

    void layout() {
        layers_.clear();
        Eigen::Index off = 0;
        int in = spec_.inputs;
        for (int l = 0; l < spec_.hidden_layers; ++l) {
            LayerSlots L{};
            L.rows = spec_.width;
            L.cols = in;
            L.w = off;
            off += static_cast<Eigen::Index>(L.rows) * L.cols;
            L.b = off;
            off += L.rows;
            L.gamma = off;
            off += L.rows;
            L.beta = off;
            off += L.rows;
            layers_.push_back(L);
            in = spec_.width;
        }
        out_w_ = off;
        off += static_cast<Eigen::Index>(spec_.outputs) * in;
        out_b_ = off;
        off += spec_.outputs;
        theta_ = Vector::Zero(off);
    }

    MlpSpec spec_;
    std::vector<LayerSlots> layers_;
    Eigen::Index out_w_ = 0, out_b_ = 0;
    Vector theta_;
    std::vector<Vector> running_mean_, running_var_;
};

// Per-feature affine standardisation frozen from training data.
struct Standardizer {
    Vector mean, scale;

    static Standardizer fit(const Matrix& x) {
        Standardizer s;
        const double n = static_cast<double>(x.cols());
        s.mean = x.rowwise().mean();
        Vector var = (x.colwise() - s.mean).array().square().rowwise().sum() / std::max(1.0, n - 1.0);
        s.scale = var.array().sqrt();
        for (Eigen::Index k = 0; k < s.scale.size(); ++k)
            if (!(s.scale[k] > 1e-12)) s.scale[k] = 1.0;  // constant feature (e.g. a matured swap at 0)
        return s;
    }
    [[nodiscard]] Matrix apply(const Matrix& x) const {
        return (x.colwise() - mean).array().colwise() / scale.array();
    }
    void save(io::Writer& w) const {
        w.array(std::span<const double>(mean.data(), static_cast<std::size_t>(mean.size())));
        w.array(std::span<const double>(scale.data(), static_cast<std::size_t>(scale.size())));
    }
    static Standardizer load(io::Reader& r) {
        auto m = r.array<double>();
        auto s = r.array<double>();
        if (m.size() != s.size()) throw IoError("Standardizer::load: size mismatch");
        Standardizer out;
        out.mean = Eigen::Map<Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
        out.scale = Eigen::Map<Vector>(s.data(), static_cast<Eigen::Index>(s.size()));
        return out;
    }
};

}  // namespace dhb::nn
