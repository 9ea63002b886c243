#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "dhb/error.hpp"

namespace dhb::interp {

inline void require_increasing(std::span<const double> x, const char* what) {
    DHB_REQUIRE(x.size() >= 2, InvalidArgument, std::string(what) + ": need at least two nodes");
    for (std::size_t i = 1; i < x.size(); ++i)
        DHB_REQUIRE(x[i] > x[i - 1], InvalidArgument, std::string(what) + ": nodes must be strictly increasing");
}

// Fritsch-Carlson monotone slopes (PCHIP) for y sampled at x. `stride` lets
// the caller run along any axis of a flattened grid.
inline void pchip_slopes(std::span<const double> x, const double* y, std::size_t stride, double* d,
                         std::size_t dstride) {
    const std::size_t n = x.size();
    auto Y = [&](std::size_t i) { return y[i * stride]; };
    auto D = [&](std::size_t i) -> double& { return d[i * dstride]; };
    if (n == 2) {
        double s = (Y(1) - Y(0)) / (x[1] - x[0]);
        D(0) = D(1) = s;
        return;
    }
    auto h = [&](std::size_t i) { return x[i + 1] - x[i]; };
    auto delta = [&](std::size_t i) { return (Y(i + 1) - Y(i)) / h(i); };
    for (std::size_t i = 1; i + 1 < n; ++i) {
        double d0 = delta(i - 1), d1 = delta(i);
        if (d0 * d1 <= 0.0) {
            D(i) = 0.0;
        } else {
            double w1 = 2.0 * h(i) + h(i - 1), w2 = h(i) + 2.0 * h(i - 1);
            D(i) = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    auto end_slope = [](double h0, double h1, double d0, double d1) {
        double s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if (s * d0 <= 0.0) return 0.0;
        if (d0 * d1 <= 0.0 && std::abs(s) > std::abs(3.0 * d0)) return 3.0 * d0;
        return s;
    };
    D(0) = end_slope(h(0), h(1), delta(0), delta(1));
    D(n - 1) = end_slope(h(n - 2), h(n - 3), delta(n - 2), delta(n - 3));
}

// Slopes of the not-a-knot C2 cubic spline through (x, y); same layout as
// pchip_slopes. Falls back to the chord for two nodes and to the parabola
// for three.
inline void spline_slopes(std::span<const double> x, const double* y, std::size_t stride, double* d,
                          std::size_t dstride) {
    const std::size_t n = x.size();
    auto Y = [&](std::size_t i) { return y[i * stride]; };
    auto D = [&](std::size_t i) -> double& { return d[i * dstride]; };
    if (n < 4) {
        pchip_slopes(x, y, stride, d, dstride);
        if (n == 3) {
            const double h0 = x[1] - x[0], h1 = x[2] - x[1];
            const double d0 = (Y(1) - Y(0)) / h0, d1 = (Y(2) - Y(1)) / h1;
            D(1) = (h1 * d0 + h0 * d1) / (h0 + h1);
            D(0) = 2.0 * d0 - D(1);
            D(2) = 2.0 * d1 - D(1);
        }
        return;
    }
    std::vector<double> h(n - 1), del(n - 1), a(n), b(n), c(n), r(n);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        del[i] = (Y(i + 1) - Y(i)) / h[i];
    }
    // Row i: h_i d_{i-1} + 2 (h_{i-1} + h_i) d_i + h_{i-1} d_{i+1} = 3 (h_i del_{i-1} + h_{i-1} del_i).
    for (std::size_t i = 1; i + 1 < n; ++i) {
        a[i] = h[i];
        b[i] = 2.0 * (h[i - 1] + h[i]);
        c[i] = h[i - 1];
        r[i] = 3.0 * (h[i] * del[i - 1] + h[i - 1] * del[i]);
    }
    // Not-a-knot end rows, already reduced to tridiagonal form.
    b[0] = h[1];
    c[0] = h[0] + h[1];
    r[0] = ((h[0] + 2.0 * c[0]) * h[1] * del[0] + h[0] * h[0] * del[1]) / c[0];
    const std::size_t m = n - 1;
    a[m] = h[m - 1] + h[m - 2];
    b[m] = h[m - 2];
    r[m] = (h[m - 1] * h[m - 1] * del[m - 2] + (2.0 * a[m] + h[m - 1]) * h[m - 2] * del[m - 1]) / a[m];
    for (std::size_t i = 1; i < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        r[i] -= w * r[i - 1];
    }
    D(m) = r[m] / b[m];
    for (std::size_t i = m; i-- > 0;) D(i) = (r[i] - c[i] * D(i + 1)) / b[i];
}

// Index i with x[i] <= v < x[i+1], clamped to the valid cell range.
inline std::size_t locate(std::span<const double> x, double v) {
    auto it = std::upper_bound(x.begin(), x.end(), v);
    std::ptrdiff_t i = (it - x.begin()) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(x.size()) - 2);
    return static_cast<std::size_t>(i);
}

struct HermiteBasis {
    double h00, h10, h01, h11;
};

inline HermiteBasis hermite(double u, double h) {
    const double u2 = u * u, u3 = u2 * u;
    return {2 * u3 - 3 * u2 + 1, (u3 - 2 * u2 + u) * h, -2 * u3 + 3 * u2, (u3 - u2) * h};
}

// Bicubic Hermite patch data on a rectilinear (a, b) grid, row-major in a:
// value index = ia * nb + ib.
class BicubicHermite {
public:
    BicubicHermite() = default;

    BicubicHermite(std::vector<double> a, std::vector<double> b, std::vector<double> f)
        : a_(std::move(a)), b_(std::move(b)), f_(std::move(f)) {
        require_increasing(a_, "BicubicHermite a-axis");
        require_increasing(b_, "BicubicHermite b-axis");
        const std::size_t na = a_.size(), nb = b_.size();
        DHB_REQUIRE(f_.size() == na * nb, InvalidArgument, "BicubicHermite: value count mismatch");
        fa_.resize(na * nb);
        fb_.resize(na * nb);
        fab_.resize(na * nb);
        for (std::size_t ib = 0; ib < nb; ++ib) spline_slopes(a_, f_.data() + ib, nb, fa_.data() + ib, nb);
        for (std::size_t ia = 0; ia < na; ++ia) {
            spline_slopes(b_, f_.data() + ia * nb, 1, fb_.data() + ia * nb, 1);
            spline_slopes(b_, fa_.data() + ia * nb, 1, fab_.data() + ia * nb, 1);
        }
    }

    // Arguments are clamped to the grid hull.
    [[nodiscard]] double operator()(double va, double vb) const {
        va = std::clamp(va, a_.front(), a_.back());
        vb = std::clamp(vb, b_.front(), b_.back());
        const std::size_t i = locate(a_, va), j = locate(b_, vb), nb = b_.size();
        const double ha = a_[i + 1] - a_[i], hb = b_[j + 1] - b_[j];
        const auto A = hermite((va - a_[i]) / ha, ha);
        const auto B = hermite((vb - b_[j]) / hb, hb);
        auto at = [&](const std::vector<double>& g, std::size_t di, std::size_t dj) {
            return g[(i + di) * nb + (j + dj)];
        };
        double r = 0.0;
        const double wa[2] = {A.h00, A.h01}, wda[2] = {A.h10, A.h11};
        const double wb[2] = {B.h00, B.h01}, wdb[2] = {B.h10, B.h11};
        for (std::size_t di = 0; di < 2; ++di)
            for (std::size_t dj = 0; dj < 2; ++dj) {
                r += wa[di] * wb[dj] * at(f_, di, dj) + wda[di] * wb[dj] * at(fa_, di, dj) +
                     wa[di] * wdb[dj] * at(fb_, di, dj) + wda[di] * wdb[dj] * at(fab_, di, dj);
            }
        return r;
    }

    [[nodiscard]] const std::vector<double>& a() const { return a_; }
    [[nodiscard]] const std::vector<double>& b() const { return b_; }
    [[nodiscard]] const std::vector<double>& values() const { return f_; }

private:
    std::vector<double> a_, b_, f_, fa_, fb_, fab_;
};

}  // namespace dhb::interp
