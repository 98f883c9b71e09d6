#pragma once

// Shared numerical kernels: finite-difference stencils, classical RK4,
// cubic splines and the closed-form 2x2 symmetric eigensolver.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "palcurv/error.hpp"

namespace palcurv {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

namespace numerics {

// ---------------------------------------------------------------------------
// Finite differences
// ---------------------------------------------------------------------------

struct Stencil {
    int derivative = 1;
    int order = 2;  // formal accuracy order
    std::vector<int> offsets;
    std::vector<double> weights;  // already divided by spacing^derivative
    double spacing = 1.0;

    double apply(std::span<const double> f, std::size_t center) const {
        double acc = 0.0;
        for (std::size_t j = 0; j < offsets.size(); ++j)
            acc += weights[j] * f[static_cast<std::size_t>(static_cast<long>(center) + offsets[j])];
        return acc;
    }
};

// Weights w_j with sum_j w_j o_j^k / k! = delta(k, derivative), k < offsets.size().
inline Stencil make_stencil(int derivative, std::vector<int> offsets, double spacing) {
    const std::size_t n = offsets.size();
    if (derivative < 0 || static_cast<std::size_t>(derivative) >= n)
        throw InvalidArgument("make_stencil: need more offsets than the derivative order");
    if (!(spacing > 0.0)) throw InvalidArgument("make_stencil: spacing must be positive");

    // Augmented Vandermonde system A w = b, A(k, j) = o_j^k / k!.
    std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        double term = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            a[k][j] = term;
            term *= static_cast<double>(offsets[j]) / static_cast<double>(k + 1);
        }
    }
    a[static_cast<std::size_t>(derivative)][n] = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        if (std::abs(a[piv][col]) < 1e-300) throw InvalidArgument("make_stencil: repeated offsets");
        std::swap(a[col], a[piv]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
        }
    }

    Stencil s;
    s.derivative = derivative;
    s.order = static_cast<int>(n) - derivative;
    // Symmetric central stencils gain one order.
    bool symmetric = true;
    for (std::size_t j = 0; j < n; ++j)
        if (offsets[j] != -offsets[n - 1 - j]) symmetric = false;
    if (symmetric && (s.order % 2 == 1)) s.order += 1;
    s.offsets = std::move(offsets);
    s.spacing = spacing;
    s.weights.resize(n);
    const double scale = std::pow(spacing, derivative);
    for (std::size_t j = 0; j < n; ++j) s.weights[j] = a[j][n] / a[j][j] / scale;
    return s;
}

inline Stencil central_stencil(int derivative, int accuracy, double spacing) {
    const int half = (derivative + accuracy - 1) / 2;
    std::vector<int> off;
    for (int k = -half; k <= half; ++k) off.push_back(k);
    return make_stencil(derivative, std::move(off), spacing);
}

// Second-order one-sided stencil anchored at offset 0, pointing in +dir.
inline Stencil one_sided_stencil(int derivative, int dir, double spacing) {
    const int npts = derivative + 2;
    std::vector<int> off;
    for (int k = 0; k < npts; ++k) off.push_back(dir * k);
    return make_stencil(derivative, std::move(off), spacing);
}

inline std::size_t fd_min_samples(int order, int accuracy) {
    return accuracy == 4 ? 5u : static_cast<std::size_t>(order + 2);
}

// Derivative of a uniformly spaced series. Interior samples use central
// stencils of the requested accuracy (2 or 4); the two samples next to each
// end fall back to 2nd-order central, the end samples to 2nd-order one-sided.
inline std::vector<double> fd_derivative(std::span<const double> f, double h, int order, int accuracy) {
    if (order != 1 && order != 2) throw InvalidArgument("fd_derivative: order must be 1 or 2");
    if (accuracy != 2 && accuracy != 4) throw InvalidArgument("fd_derivative: accuracy must be 2 or 4");
    const std::size_t n = f.size();
    if (n < fd_min_samples(order, accuracy))
        throw InvalidArgument("fd_derivative: too few samples (" + std::to_string(n) + ")");

    const Stencil inner = central_stencil(order, accuracy, h);
    const Stencil near_end = central_stencil(order, 2, h);
    const Stencil first = one_sided_stencil(order, +1, h);
    const Stencil last = one_sided_stencil(order, -1, h);
    const std::size_t reach = static_cast<std::size_t>(inner.offsets.back());

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == 0)
            out[i] = first.apply(f, i);
        else if (i == n - 1)
            out[i] = last.apply(f, i);
        else if (i < reach || i + reach >= n)
            out[i] = near_end.apply(f, i);
        else
            out[i] = inner.apply(f, i);
    }
    return out;
}

// Same stencil choice as fd_derivative, evaluated at a single index.
inline double fd_at(std::span<const double> f, std::size_t i, double h, int order, int accuracy = 4) {
    const std::size_t n = f.size();
    if (n < fd_min_samples(order, accuracy) || i >= n)
        throw InvalidArgument("fd_at: too few samples or index out of range");
    const Stencil inner = central_stencil(order, accuracy, h);
    const std::size_t reach = static_cast<std::size_t>(inner.offsets.back());
    if (i == 0) return one_sided_stencil(order, +1, h).apply(f, i);
    if (i == n - 1) return one_sided_stencil(order, -1, h).apply(f, i);
    if (i < reach || i + reach >= n) return central_stencil(order, 2, h).apply(f, i);
    return inner.apply(f, i);
}

// Richardson extrapolation of two estimates with step ratio 2.
inline double richardson(double coarse, double fine, int order) {
    const double r = std::pow(2.0, order);
    return fine + (fine - coarse) / (r - 1.0);
}

inline double observed_order(double err_coarse, double err_fine) {
    return std::log2(err_coarse / err_fine);
}

// ---------------------------------------------------------------------------
// Classical fixed-step RK4 on a planar state
// ---------------------------------------------------------------------------

template <class Field>
Vec2 rk4_step(Field&& field, const Vec2& y, double h) {
    auto stage = [&](int k, const Vec2& at) -> Vec2 {
        try {
            return field(at);
        } catch (Error& e) {
            e.add_context("rk4 stage " + std::to_string(k));
            throw;
        }
    };
    const Vec2 k1 = stage(1, y);
    const Vec2 k2 = stage(2, y + 0.5 * h * k1);
    const Vec2 k3 = stage(3, y + 0.5 * h * k2);
    const Vec2 k4 = stage(4, y + h * k3);
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// ---------------------------------------------------------------------------
// Cubic spline (natural or clamped), C2
// ---------------------------------------------------------------------------

class CubicSpline {
public:
    CubicSpline() = default;

    // Natural boundaries unless end slopes are given (clamped/complete spline).
    CubicSpline(std::vector<double> knots, std::vector<double> values,
                std::optional<double> slope_begin = std::nullopt,
                std::optional<double> slope_end = std::nullopt)
        : x_(std::move(knots)), y_(std::move(values)) {
        const std::size_t n = x_.size();
        if (n != y_.size()) throw InvalidArgument("spline: knots/values size mismatch");
        if (n < 4) throw InvalidArgument("spline: need at least 4 knots");
        for (std::size_t i = 1; i < n; ++i)
            if (!(x_[i] > x_[i - 1])) throw InvalidArgument("spline: knots must be strictly increasing");

        // Tridiagonal system for second derivatives m_i (Thomas algorithm).
        std::vector<double> sub(n, 0.0), diag(n, 0.0), sup(n, 0.0), rhs(n, 0.0);
        if (slope_begin) {
            const double h0 = x_[1] - x_[0];
            diag[0] = h0 / 3.0;
            sup[0] = h0 / 6.0;
            rhs[0] = (y_[1] - y_[0]) / h0 - *slope_begin;
        } else {
            diag[0] = 1.0;
        }
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double hl = x_[i] - x_[i - 1];
            const double hr = x_[i + 1] - x_[i];
            sub[i] = hl / 6.0;
            diag[i] = (hl + hr) / 3.0;
            sup[i] = hr / 6.0;
            rhs[i] = (y_[i + 1] - y_[i]) / hr - (y_[i] - y_[i - 1]) / hl;
        }
        if (slope_end) {
            const double hn = x_[n - 1] - x_[n - 2];
            sub[n - 1] = hn / 6.0;
            diag[n - 1] = hn / 3.0;
            rhs[n - 1] = *slope_end - (y_[n - 1] - y_[n - 2]) / hn;
        } else {
            diag[n - 1] = 1.0;
        }
        for (std::size_t i = 1; i < n; ++i) {
            const double w = sub[i] / diag[i - 1];
            diag[i] -= w * sup[i - 1];
            rhs[i] -= w * rhs[i - 1];
        }
        m_.assign(n, 0.0);
        m_[n - 1] = rhs[n - 1] / diag[n - 1];
        for (std::size_t i = n - 1; i-- > 0;) m_[i] = (rhs[i] - sup[i] * m_[i + 1]) / diag[i];
    }

    double operator()(double x) const { return eval(x, 0); }
    double derivative(double x) const { return eval(x, 1); }
    double second_derivative(double x) const { return eval(x, 2); }

    double front() const { return x_.front(); }
    double back() const { return x_.back(); }

private:
    double eval(double x, int d) const {
        const auto it = std::upper_bound(x_.begin(), x_.end(), x);
        std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
        i = std::min(i, x_.size() - 2);
        const double h = x_[i + 1] - x_[i];
        const double a = (x_[i + 1] - x) / h;
        const double b = (x - x_[i]) / h;
        switch (d) {
            case 0:
                return a * y_[i] + b * y_[i + 1] +
                       ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
            case 1:
                return (y_[i + 1] - y_[i]) / h +
                       (-(3.0 * a * a - 1.0) * m_[i] + (3.0 * b * b - 1.0) * m_[i + 1]) * h / 6.0;
            default:
                return a * m_[i] + b * m_[i + 1];
        }
    }

    std::vector<double> x_, y_, m_;
};

// ---------------------------------------------------------------------------
// 2x2 symmetric eigenproblem [[a, b], [b, c]]
// ---------------------------------------------------------------------------

struct SymEig2 {
    double lambda1 = 0.0;  // lambda1 >= lambda2
    double lambda2 = 0.0;
    Vec2 e1 = Vec2::UnitX();
    Vec2 e2 = Vec2::UnitY();
    bool degenerate = false;  // repeated eigenvalue, any orthonormal pair is valid
};

inline SymEig2 sym_eig2(double a, double b, double c) {
    SymEig2 r;
    const double mean = 0.5 * (a + c);
    const double half_diff = 0.5 * (a - c);
    const double radius = std::hypot(half_diff, b);
    r.lambda1 = mean + radius;
    r.lambda2 = mean - radius;
    const double scale = std::max({std::abs(a), std::abs(b), std::abs(c)});
    r.degenerate = radius <= 1e-15 * scale || radius == 0.0;
    if (r.degenerate) return r;
    const double phi = 0.5 * std::atan2(b, half_diff);
    r.e1 = Vec2(std::cos(phi), std::sin(phi));
    r.e2 = Vec2(-std::sin(phi), std::cos(phi));
    return r;
}

}  // namespace numerics
}  // namespace palcurv
