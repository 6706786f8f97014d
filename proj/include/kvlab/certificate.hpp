#pragma once

// The full constant chain behind the large-time existence certificate, the
// energy functional y, and the dominating comparison function yhat. sigma and
// delta_star live in log space: realistic inputs push them far below the
// double-precision underflow threshold (the reference parameter point already
// gives ln(delta_star) ~ -9e3).

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

#include "kvlab/grid.hpp"
#include "kvlab/logspace.hpp"

namespace kvlab {

struct Params {
    double a = 1.0;
    double D = 1.0;
};

inline void check_params(const Params& p) {
    if (!(p.a > 0.0) || !std::isfinite(p.a)) throw std::invalid_argument("a must be positive");
    if (!(p.D > 0.0) || !std::isfinite(p.D)) throw std::invalid_argument("D must be positive");
}

struct Bounds {
    double gamma_lo = 1.0;
    double gamma_hi = 2.0;
    double C_F = 1.0;
    double alpha = 0.5;
    double omega_len = 1.0;
    double M = 1.0;      // bound on the initial gradient mass
    double T_star = 1.0; // certified time horizon
};

inline void check_bounds(const Bounds& b) {
    if (!(b.gamma_lo > 0.0 && b.gamma_hi >= b.gamma_lo))
        throw std::invalid_argument("need 0 < gamma_lo <= gamma_hi");
    if (!(b.alpha > 0.0 && b.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0,1)");
    if (!(b.C_F > 0.0)) throw std::invalid_argument("C_F must be positive");
    if (!(b.omega_len > 0.0)) throw std::invalid_argument("omega_len must be positive");
    if (!(b.M >= 0.0)) throw std::invalid_argument("M must be nonnegative");
    if (!(b.T_star > 0.0)) throw std::invalid_argument("T_star must be positive");
}

struct Certificate {
    double K0 = 0.0;
    double rho = 0.0;
    double k1 = 0.0;
    double Cp = 0.0;  // explicit Poincare constant |Omega|^4
    double Cgn = 0.0; // explicit Gagliardo-Nirenberg constant max{2, 1/|Omega|}
    double K1 = 0.0;
    double K2 = 0.0;
    double beta = 0.0;
    double kappa = 0.0;
    double chi = 0.0;
    double tau = 0.0;
    double s0 = 0.0;
    double log_sigma = 0.0;      // ln sigma, sigma = delta_star^kappa * K2
    double log_delta_star = 0.0; // ln delta_star
};

/// Evaluates the whole constant chain for the given parameters and bounds.
/// Pure: identical inputs produce a bitwise identical certificate.
inline Certificate compute_constants(const Params& p, const Bounds& b) {
    check_params(p);
    check_bounds(b);
    const double a = p.a, D = p.D;
    const double ghi = b.gamma_hi, glo = b.gamma_lo;
    const double om = b.omega_len;

    Certificate c;
    c.K0 = (ghi * ghi / D) * (1.0 + a * a * a * a);
    c.rho = (c.K0 * ghi * ghi + 1.0) / a;
    c.k1 = std::min({D / 2.0, glo, 2.0 * a * c.rho, 4.0 * a * a * a});
    c.Cp = om * om * om * om;
    c.Cgn = std::max(2.0, 1.0 / om);
    const double CF4 = b.C_F * b.C_F * b.C_F * b.C_F;
    c.K1 = std::max({2.0 * (c.K0 * ghi * ghi + 1.0) + c.rho * 32.0 / (a * a * a), 1.0 / glo,
                     8.0 * CF4 * c.Cp, 9.0 * CF4 * om});
    c.beta = (1.0 - b.alpha) / 2.0;
    c.kappa = std::min(c.beta, (2.0 / b.alpha) * (1.0 - c.beta - b.alpha));

    // K2 absorbs the quartic gradient terms: with P = K1, eps = k1 and
    // Phat = 2*P*Cgn, K2 = Phat^2/(2 eps) + Phat^2/a.
    const double Phat = 2.0 * c.K1 * c.Cgn;
    c.K2 = Phat * Phat / (2.0 * c.k1) + Phat * Phat / a;

    c.chi = std::max({1.0, 4.0 * a * a, c.rho});
    c.tau = std::max(9.0 * a, a + c.K1);
    const double ratio = (c.chi * b.M + 1.0) / std::sqrt(c.tau);
    c.s0 = std::max(0.0, std::log(ratio) / c.tau);

    const double two_tau_S = 2.0 * c.tau * (c.s0 + b.T_star);
    const double logK2 = std::log(c.K2);
    c.log_delta_star = std::min(0.0, (-two_tau_S - logK2) / c.kappa);
    c.log_sigma = std::min(logK2, -two_tau_S);

    assert(c.beta > 0.0 && c.beta < 0.5);
    assert(c.kappa > 0.0);
    assert(c.k1 > 0.0);
    assert(c.log_delta_star <= 0.0);
    assert(c.log_sigma + two_tau_S <= 0.0); // yhat stays well-defined on [0, T_star]
    return c;
}

/// Discrete initial gradient mass: int u0t_x^2 + int u0_x^2 + int u0_x^4
/// + int theta0_x^2.
inline double initial_mass(const Field& u0, const Field& u0t, const Field& theta0, const Grid& g) {
    const auto ux = dx1(u0, g);
    const auto utx = dx1(u0t, g);
    const auto thx = dx1(theta0, g);
    const std::size_t n = static_cast<std::size_t>(g.n);
    std::vector<double> tmp(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) tmp[i] = utx[i] * utx[i];
    total += trapezoid(tmp, g);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = ux[i] * ux[i];
    total += trapezoid(tmp, g);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = ux[i] * ux[i] * ux[i] * ux[i];
    total += trapezoid(tmp, g);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = thx[i] * thx[i];
    total += trapezoid(tmp, g);
    return total;
}

/// ln y for a functional sample:
///   y = 1 + delta^(1/2) int th_x^2 + delta^beta rho int u_x^4
///       + int v_x^2 + 4a^2 int u_x^2.
/// The delta-weighted terms flush to zero once ln(delta_star) underflows;
/// y >= 1 always, so the result is exact via log1p.
inline double y_log(const FunctionalPack& pack, const Certificate& c, const Params& p) {
    const double t1 = exp_or_zero(0.5 * c.log_delta_star) * pack.int_thx2;
    const double t2 = exp_or_zero(c.beta * c.log_delta_star) * c.rho * pack.int_ux4;
    const double t3 = pack.int_vx2;
    const double t4 = 4.0 * p.a * p.a * pack.int_ux2;
    return std::log1p(t1 + t2 + t3 + t4);
}

/// ln yhat(t) = (1/2) ln tau + tau (s0 + t) - (1/2) ln(2 - exp(ln sigma + 2 tau (s0+t))).
/// Internals run in extended precision: downstream consistency checks probe
/// this function with finite differences at steps of order 1e-6/tau, where
/// plain double rounding of the tau*(s0+t) term would dominate the residual.
inline double yhat_log(double t, const Certificate& c) {
    const long double tau = static_cast<long double>(c.tau);
    const long double arg = static_cast<long double>(c.s0) + static_cast<long double>(t);
    const long double z =
        static_cast<long double>(c.log_sigma) + 2.0L * tau * arg;
    static const long double ln2 = std::log(2.0L);
    if (!(z < ln2)) throw std::domain_error("yhat undefined: sigma e^{2 tau (s0+t)} >= 2");
    long double denom_log;
    if (z == -std::numeric_limits<long double>::infinity()) {
        denom_log = ln2;
    } else if (z < -ln2) {
        denom_log = ln2 + std::log1p(-std::exp(z - ln2));
    } else {
        denom_log = ln2 + std::log(-std::expm1(z - ln2));
    }
    const long double result = 0.5L * std::log(tau) + tau * arg - 0.5L * denom_log;
    return static_cast<double>(result);
}

} // namespace kvlab
