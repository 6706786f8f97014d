#pragma once

// Temperature-dependent coefficient laws gamma, Gamma, f, F together with the
// declared bounds the existence certificate consumes. Declared Lipschitz
// bounds are metadata supplied by the config author; sampled estimates are
// advisory only, a sup over [0,inf) is not computable from point samples.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

#include "kvlab/expr.hpp"

namespace kvlab {

struct MaterialSet {
    LawExpr gamma, Gamma, f, F;
    double gamma_lo = 1.0; // lower bound for gamma
    double gamma_hi = 1.0; // upper bound for gamma and Gamma
    double C_F = 1.0;      // growth constant of F
    double alpha = 0.5;    // growth exponent of F, in (0,1)
    double lip_gamma = 0.0; // declared sup |gamma'|
    double lip_f = 0.0;     // declared sup |f'|
};

inline void check_material_bounds(const MaterialSet& m) {
    if (!(m.gamma_lo > 0.0) || !std::isfinite(m.gamma_lo))
        throw std::invalid_argument("gamma_lo must be positive and finite");
    if (!(m.gamma_hi >= m.gamma_lo) || !std::isfinite(m.gamma_hi))
        throw std::invalid_argument("gamma_hi must satisfy gamma_lo <= gamma_hi");
    if (!(m.C_F > 0.0) || !std::isfinite(m.C_F))
        throw std::invalid_argument("C_F must be positive and finite");
    if (!(m.alpha > 0.0 && m.alpha < 1.0))
        throw std::invalid_argument("alpha must lie in (0,1)");
    if (!(m.lip_gamma >= 0.0) || !std::isfinite(m.lip_gamma))
        throw std::invalid_argument("lip_gamma must be nonnegative and finite");
    if (!(m.lip_f >= 0.0) || !std::isfinite(m.lip_f))
        throw std::invalid_argument("lip_f must be nonnegative and finite");
}

struct HypothesisRow {
    std::string name;
    bool pass = true;
    bool soft = false; // soft rows warn instead of failing
    double witness_s = 0.0;
    double witness_value = 0.0;
    double bound = 0.0;
    std::string note;
};

struct ValidationReport {
    std::vector<HypothesisRow> rows;
    double est_lip_gamma = 0.0;
    double est_lip_f = 0.0;
    double s_max = 0.0;
    int n_samples = 0;

    bool all_pass() const {
        for (const auto& r : rows)
            if (!r.soft && !r.pass) return false;
        return true;
    }
    const HypothesisRow* row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return &r;
        return nullptr;
    }
};

namespace detail {

// 0 followed by a geometric ladder up to s_max; the laws live on [0,inf) but
// any finite run only ever visits a bounded temperature window.
inline std::vector<double> log_spaced_samples(double s_max, int n_samples) {
    std::vector<double> s;
    s.reserve(static_cast<std::size_t>(n_samples));
    s.push_back(0.0);
    const int m = n_samples - 1;
    if (m == 1) {
        s.push_back(s_max);
        return s;
    }
    const double lo = s_max * 1e-12;
    const double ratio = std::log(s_max / lo);
    for (int j = 0; j < m; ++j)
        s.push_back(lo * std::exp(ratio * static_cast<double>(j) / static_cast<double>(m - 1)));
    s.back() = s_max;
    return s;
}

struct BoundCheck {
    bool pass = true;
    double witness_s = 0.0;
    double witness_value = 0.0;
    double worst_violation = 0.0;
    std::string note;

    void update(double s, double value, double violation) {
        if (violation > worst_violation) {
            worst_violation = violation;
            witness_s = s;
            witness_value = value;
            pass = false;
        }
    }
};

} // namespace detail

/// Samples every hypothesis the theory places on the laws over [0, s_max].
inline ValidationReport validate_material(const MaterialSet& m, double s_max, int n_samples) {
    if (!(s_max > 0.0)) throw std::invalid_argument("s_max must be positive");
    if (n_samples < 2) throw std::invalid_argument("n_samples must be at least 2");
    check_material_bounds(m);

    ValidationReport rep;
    rep.s_max = s_max;
    rep.n_samples = n_samples;

    const std::vector<double> samples = detail::log_spaced_samples(s_max, n_samples);
    const double tol = 1e-12 * (1.0 + std::fabs(m.gamma_hi));

    detail::BoundCheck gamma_low, gamma_high, Gamma_low, Gamma_high, F_growth;
    std::string eval_failure;
    double eval_failure_s = 0.0;

    double est_g = 0.0, est_f = 0.0;
    for (double s : samples) {
        try {
            const double g = m.gamma.eval(s);
            gamma_low.update(s, g, m.gamma_lo - tol - g);
            gamma_high.update(s, g, g - m.gamma_hi - tol);
            const double G = m.Gamma.eval(s);
            Gamma_low.update(s, G, -tol - G);
            Gamma_high.update(s, G, G - m.gamma_hi - tol);
            const double Fv = m.F.eval(s);
            const double growth = m.C_F * std::pow(1.0 + s, m.alpha);
            F_growth.update(s, Fv, std::fabs(Fv) - growth - tol);
            est_g = std::max(est_g, std::fabs(law_derivative(m.gamma, s)));
            est_f = std::max(est_f, std::fabs(law_derivative(m.f, s)));
        } catch (const eval_error& e) {
            if (eval_failure.empty()) {
                eval_failure = e.what();
                eval_failure_s = s;
            }
        }
    }
    rep.est_lip_gamma = est_g;
    rep.est_lip_f = est_f;

    auto push = [&](const std::string& name, const detail::BoundCheck& c, double bound) {
        HypothesisRow r;
        r.name = name;
        r.pass = c.pass;
        r.witness_s = c.witness_s;
        r.witness_value = c.witness_value;
        r.bound = bound;
        rep.rows.push_back(std::move(r));
    };
    push("gamma_lower", gamma_low, m.gamma_lo);
    push("gamma_upper", gamma_high, m.gamma_hi);
    push("Gamma_lower", Gamma_low, 0.0);
    push("Gamma_upper", Gamma_high, m.gamma_hi);

    {
        HypothesisRow r;
        r.name = "F_zero";
        r.bound = 1e-12;
        try {
            const double F0 = m.F.eval(0.0);
            r.witness_s = 0.0;
            r.witness_value = F0;
            r.pass = std::fabs(F0) <= 1e-12;
        } catch (const eval_error& e) {
            r.pass = false;
            r.note = e.what();
        }
        rep.rows.push_back(std::move(r));
    }
    push("F_growth", F_growth, m.C_F);

    if (!eval_failure.empty()) {
        HypothesisRow r;
        r.name = "evaluation";
        r.pass = false;
        r.witness_s = eval_failure_s;
        r.note = eval_failure;
        rep.rows.push_back(std::move(r));
    }

    auto push_lip = [&](const std::string& name, double declared, double estimate) {
        HypothesisRow r;
        r.name = name;
        r.soft = true;
        r.bound = declared;
        r.witness_value = estimate;
        r.pass = estimate <= declared * (1.0 + 1e-6) + 1e-12;
        if (!r.pass) r.note = "sampled derivative exceeds declared bound";
        rep.rows.push_back(std::move(r));
    };
    push_lip("lip_gamma", m.lip_gamma, est_g);
    push_lip("lip_f", m.lip_f, est_f);

    return rep;
}

enum class BuiltinFamily { affine_tanh, power_sublinear, constant };

/// Canonical material instances whose declared bounds are exact.
inline MaterialSet builtin_family(BuiltinFamily family, const std::vector<double>& params) {
    auto fmt = [](double v) { return detail::format_double(v); };
    MaterialSet m;
    switch (family) {
        case BuiltinFamily::affine_tanh: {
            if (params.size() != 2) throw std::invalid_argument("affine_tanh expects {gamma0, delta}");
            const double g0 = params[0], d = params[1];
            if (!(g0 > 0.0)) throw std::invalid_argument("affine_tanh: gamma0 must be positive");
            if (!(d >= 0.0)) throw std::invalid_argument("affine_tanh: delta must be nonnegative");
            m.gamma = parse_law(fmt(g0) + " + " + fmt(d) + "*tanh(s)");
            m.Gamma = m.gamma;
            m.f = parse_law(fmt(d) + "*tanh(s)");
            m.F = parse_law("(1+s)^0.5 - 1");
            m.gamma_lo = g0;
            m.gamma_hi = g0 + d;
            m.C_F = 1.0;
            m.alpha = 0.5;
            m.lip_gamma = d; // sup of d*sech^2 is attained at s = 0
            m.lip_f = d;
            break;
        }
        case BuiltinFamily::power_sublinear: {
            if (params.size() != 2) throw std::invalid_argument("power_sublinear expects {C_F, alpha}");
            const double cf = params[0], al = params[1];
            if (!(cf > 0.0)) throw std::invalid_argument("power_sublinear: C_F must be positive");
            if (!(al > 0.0 && al < 1.0)) throw std::invalid_argument("power_sublinear: alpha must lie in (0,1)");
            m.gamma = parse_law("1");
            m.Gamma = parse_law("1");
            m.f = parse_law("0");
            m.F = parse_law(fmt(cf) + "*((1+s)^" + fmt(al) + " - 1)");
            m.gamma_lo = 1.0;
            m.gamma_hi = 1.0;
            m.C_F = cf;
            m.alpha = al;
            break;
        }
        case BuiltinFamily::constant: {
            if (params.size() != 1) throw std::invalid_argument("constant expects {c}");
            const double c = params[0];
            if (!(c > 0.0)) throw std::invalid_argument("constant: c must be positive");
            m.gamma = parse_law(fmt(c));
            m.Gamma = m.gamma;
            m.f = parse_law("0");
            m.F = parse_law("0");
            m.gamma_lo = c;
            m.gamma_hi = c;
            break;
        }
    }
    check_material_bounds(m);
    return m;
}

} // namespace kvlab
