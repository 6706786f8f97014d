#pragma once

// Uniform 1D grid, node-centered fields with mixed Neumann/Dirichlet boundary
// handling, conservative flux-form operators and trapezoid quadrature. The
// Neumann rows use ghost-point reflection so that the weighted row sum of the
// flux divergence telescopes to exactly zero; the mass identity test depends
// on that.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kvlab {

struct Grid {
    double length = 1.0;
    int n = 3;
    double dx = 0.5;
};

inline Grid make_grid(double length, int n) {
    if (!(length > 0.0)) throw std::invalid_argument("grid length must be positive");
    if (n < 3) throw std::invalid_argument("grid needs at least 3 nodes");
    Grid g;
    g.length = length;
    g.n = n;
    g.dx = length / static_cast<double>(n - 1);
    if (std::fabs(g.dx * (n - 1) - length) > 1e-14 * length)
        throw std::invalid_argument("grid spacing inconsistent with length");
    return g;
}

inline double node_x(const Grid& g, int i) { return g.dx * static_cast<double>(i); }

enum class Bc { neumann, dirichlet0 };

struct Field {
    std::vector<double> values;
    Bc bc = Bc::neumann;
};

inline Field make_neumann(std::vector<double> values) {
    return Field{std::move(values), Bc::neumann};
}

/// Dirichlet fields carry exact zeros at the endpoints; evaluation noise up to
/// 1e-10 relative is snapped, anything larger is rejected.
inline Field make_dirichlet0(std::vector<double> values) {
    if (values.size() < 2) throw std::invalid_argument("field too short");
    double scale = 0.0;
    for (double v : values) scale = std::max(scale, std::fabs(v));
    const double tol = 1e-10 * (1.0 + scale);
    if (std::fabs(values.front()) > tol || std::fabs(values.back()) > tol)
        throw std::invalid_argument("dirichlet0 field must vanish at the endpoints");
    values.front() = 0.0;
    values.back() = 0.0;
    return Field{std::move(values), Bc::dirichlet0};
}

namespace detail {
inline void require_size(const Field& f, const Grid& g, const char* what) {
    if (static_cast<int>(f.values.size()) != g.n)
        throw std::invalid_argument(std::string(what) + ": field size does not match grid");
}
} // namespace detail

/// First derivative, second order in the interior. Neumann boundaries reflect
/// (derivative is exactly 0 there); Dirichlet boundaries use one-sided
/// second-order stencils.
inline std::vector<double> dx1(const Field& f, const Grid& g) {
    detail::require_size(f, g, "dx1");
    const auto& w = f.values;
    const int n = g.n;
    std::vector<double> out(static_cast<std::size_t>(n));
    const double inv2dx = 1.0 / (2.0 * g.dx);
    for (int i = 1; i + 1 < n; ++i) out[i] = (w[i + 1] - w[i - 1]) * inv2dx;
    if (f.bc == Bc::neumann) {
        out[0] = 0.0;
        out[n - 1] = 0.0;
    } else {
        out[0] = (-3.0 * w[0] + 4.0 * w[1] - w[2]) * inv2dx;
        out[n - 1] = (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) * inv2dx;
    }
    return out;
}

/// Second derivative for diagnostics (the implicit solves assemble their own
/// rows). Neumann boundaries use ghost reflection, Dirichlet boundaries a
/// one-sided second-order stencil.
inline std::vector<double> dxx(const Field& f, const Grid& g) {
    detail::require_size(f, g, "dxx");
    const auto& w = f.values;
    const int n = g.n;
    std::vector<double> out(static_cast<std::size_t>(n));
    const double invdx2 = 1.0 / (g.dx * g.dx);
    for (int i = 1; i + 1 < n; ++i) out[i] = (w[i + 1] - 2.0 * w[i] + w[i - 1]) * invdx2;
    if (f.bc == Bc::neumann) {
        out[0] = 2.0 * (w[1] - w[0]) * invdx2;
        out[n - 1] = 2.0 * (w[n - 2] - w[n - 1]) * invdx2;
    } else {
        if (n < 4) throw std::invalid_argument("dxx: dirichlet0 needs at least 4 nodes");
        out[0] = (2.0 * w[0] - 5.0 * w[1] + 4.0 * w[2] - w[3]) * invdx2;
        out[n - 1] = (2.0 * w[n - 1] - 5.0 * w[n - 2] + 4.0 * w[n - 3] - w[n - 4]) * invdx2;
    }
    return out;
}

/// Conservative divergence of c*w_x. Coefficients may be node-centered
/// (size n, averaged to faces) or face-centered (size n-1); they must be
/// positive. Neumann rows impose zero boundary flux through the reflected
/// ghost; Dirichlet rows return 0 because the end values are pinned.
inline std::vector<double> flux_div(std::span<const double> coef, const Field& f, const Grid& g) {
    detail::require_size(f, g, "flux_div");
    const int n = g.n;
    for (double c : coef)
        if (!(c > 0.0)) throw std::invalid_argument("flux_div: coefficients must be positive");
    std::vector<double> faces(static_cast<std::size_t>(n - 1));
    if (static_cast<int>(coef.size()) == n) {
        for (int i = 0; i + 1 < n; ++i) faces[i] = 0.5 * (coef[i] + coef[i + 1]);
    } else if (static_cast<int>(coef.size()) == n - 1) {
        std::copy(coef.begin(), coef.end(), faces.begin());
    } else {
        throw std::invalid_argument("flux_div: coefficient size must be n or n-1");
    }

    const auto& w = f.values;
    const double invdx2 = 1.0 / (g.dx * g.dx);
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 1; i + 1 < n; ++i)
        out[i] = (faces[i] * (w[i + 1] - w[i]) - faces[i - 1] * (w[i] - w[i - 1])) * invdx2;
    if (f.bc == Bc::neumann) {
        out[0] = 2.0 * faces[0] * (w[1] - w[0]) * invdx2;
        out[n - 1] = -2.0 * faces[n - 2] * (w[n - 1] - w[n - 2]) * invdx2;
    } else {
        out[0] = 0.0;
        out[n - 1] = 0.0;
    }
    return out;
}

/// Composite trapezoid rule.
inline double trapezoid(std::span<const double> values, const Grid& g) {
    if (static_cast<int>(values.size()) != g.n)
        throw std::invalid_argument("trapezoid: size does not match grid");
    double acc = 0.5 * (values.front() + values.back());
    for (int i = 1; i + 1 < g.n; ++i) acc += values[i];
    return acc * g.dx;
}

/// Conservative realization of w_x whose trapezoid integral telescopes to
/// exactly w[n-1] - w[0]. Interior rows coincide with the centered first
/// derivative; boundary rows are one-sided.
inline std::vector<double> conservative_dx(std::span<const double> w, const Grid& g) {
    if (static_cast<int>(w.size()) != g.n)
        throw std::invalid_argument("conservative_dx: size does not match grid");
    const int n = g.n;
    std::vector<double> out(static_cast<std::size_t>(n));
    const double inv2dx = 1.0 / (2.0 * g.dx);
    for (int i = 1; i + 1 < n; ++i) out[i] = (w[i + 1] - w[i - 1]) * inv2dx;
    out[0] = (w[1] - w[0]) / g.dx;
    out[n - 1] = (w[n - 1] - w[n - 2]) / g.dx;
    return out;
}

struct FunctionalPack {
    double int_ux2 = 0.0;
    double int_ux4 = 0.0;
    double int_vx2 = 0.0;
    double int_vx4 = 0.0;
    double int_thx2 = 0.0;
    double linf_theta = 0.0;
    double theta_min = 0.0;
};

inline FunctionalPack functional_pack(const Field& u, const Field& v, const Field& theta,
                                      const Grid& g) {
    detail::require_size(u, g, "functional_pack(u)");
    detail::require_size(v, g, "functional_pack(v)");
    detail::require_size(theta, g, "functional_pack(theta)");
    const auto ux = dx1(u, g);
    const auto vx = dx1(v, g);
    const auto thx = dx1(theta, g);
    const std::size_t n = static_cast<std::size_t>(g.n);
    std::vector<double> tmp(n);
    FunctionalPack p;
    auto pow_int = [&](const std::vector<double>& d, int power) {
        for (std::size_t i = 0; i < n; ++i) {
            const double q = d[i] * d[i];
            tmp[i] = power == 2 ? q : q * q;
        }
        return trapezoid(tmp, g);
    };
    p.int_ux2 = pow_int(ux, 2);
    p.int_ux4 = pow_int(ux, 4);
    p.int_vx2 = pow_int(vx, 2);
    p.int_vx4 = pow_int(vx, 4);
    p.int_thx2 = pow_int(thx, 2);
    p.linf_theta = 0.0;
    p.theta_min = theta.values[0];
    for (double t : theta.values) {
        p.linf_theta = std::max(p.linf_theta, std::fabs(t));
        p.theta_min = std::min(p.theta_min, t);
    }
    return p;
}

} // namespace kvlab
