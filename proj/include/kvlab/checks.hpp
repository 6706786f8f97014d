#pragma once

// Numerical verification of the certified relations along a simulated
// trajectory: the comparison bound ln y <= ln yhat, the per-functional energy
// inequalities (time derivatives realized by centered differences of the
// sampled integrals), and feasibility of the declared Lipschitz data against
// delta_star.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "kvlab/certificate.hpp"
#include "kvlab/logspace.hpp"
#include "kvlab/material.hpp"
#include "kvlab/solver.hpp"

namespace kvlab {

struct ComparisonReport {
    bool all_below = true;      // ln y(t) <= ln yhat(t) at every sample
    double min_margin = std::numeric_limits<double>::infinity(); // min (ln yhat - ln y)
    double min_margin_t = 0.0;
    bool yhat0_ge_chiM1 = true; // reported, not enforced
    bool y0_le_chiM1 = true;    // reported, not enforced
    double ln_yhat0 = 0.0;
    double ln_y0 = 0.0;
    double ln_chiM1 = 0.0;
    std::size_t samples_checked = 0;
};

inline ComparisonReport check_comparison(const Trajectory& traj, const Certificate& c,
                                         const Bounds& b, const Params& p) {
    ComparisonReport rep;
    if (traj.samples.empty()) throw std::invalid_argument("check_comparison: empty trajectory");
    for (const auto& s : traj.samples) {
        const double ly = std::isnan(s.ln_y) ? y_log(s.pack, c, p) : s.ln_y;
        const double lyh = yhat_log(s.t, c);
        const double margin = lyh - ly;
        if (margin < rep.min_margin) {
            rep.min_margin = margin;
            rep.min_margin_t = s.t;
        }
        if (!(ly <= lyh)) rep.all_below = false;
        ++rep.samples_checked;
    }
    const auto& first = traj.samples.front();
    rep.ln_y0 = std::isnan(first.ln_y) ? y_log(first.pack, c, p) : first.ln_y;
    rep.ln_yhat0 = yhat_log(first.t, c);
    rep.ln_chiM1 = std::log(c.chi * b.M + 1.0);
    rep.yhat0_ge_chiM1 = rep.ln_yhat0 >= rep.ln_chiM1;
    rep.y0_le_chiM1 = rep.ln_y0 <= rep.ln_chiM1;
    return rep;
}

struct IneqResult {
    std::string name;
    double max_scaled = -std::numeric_limits<double>::infinity(); // max (LHS-RHS)/(1+|RHS|)
    double max_residual = -std::numeric_limits<double>::infinity();
    double at_t = 0.0;
    bool satisfied = true;
};

struct ResidualTable {
    std::vector<IneqResult> rows;
    bool all_satisfied = true;
    double ineq_tol = 1e-4;

    const IneqResult* row(const std::string& name) const {
        for (const auto& r : rows)
            if (r.name == name) return &r;
        return nullptr;
    }
};

/// Evaluates all tracked energy inequalities at the interior samples.
/// Requires a sampling interval of at most 1e-2 so the centered time
/// differences are meaningful.
inline ResidualTable check_energy_inequalities(const Trajectory& traj, const MaterialSet& m,
                                              const Params& p, const Certificate& c,
                                              double ineq_tol = 1e-4) {
    const auto& smp = traj.samples;
    if (smp.size() < 3)
        throw std::invalid_argument("check_energy_inequalities: need at least 3 samples");
    for (std::size_t k = 0; k + 1 < smp.size(); ++k) {
        const double gap = smp[k + 1].t - smp[k].t;
        if (gap > 1e-2 * (1.0 + 1e-9))
            throw std::invalid_argument(
                "check_energy_inequalities: sampling too sparse (interval " + std::to_string(gap) +
                " > 1e-2); rerun with a smaller sample_stride*dt");
    }
    (void)m;

    const double a = p.a, D = p.D;
    const double d12 = exp_or_zero(0.5 * c.log_delta_star);
    const double d2 = exp_or_zero(2.0 * c.log_delta_star);
    const double d72 = exp_or_zero(3.5 * c.log_delta_star);
    const double dbeta = exp_or_zero(c.beta * c.log_delta_star);
    const double alpha = 1.0 - 2.0 * c.beta; // beta = (1-alpha)/2
    const double dgap = exp_or_zero((1.0 - c.beta) / alpha * c.log_delta_star);

    ResidualTable table;
    table.ineq_tol = ineq_tol;
    table.rows.resize(7);
    table.rows[0].name = "ineq_ux2";      // d/dt int u_x^2 bound
    table.rows[1].name = "ineq_ux4";      // d/dt int u_x^4 bound
    table.rows[2].name = "ineq_vx2";      // d/dt int v_x^2 bound
    table.rows[3].name = "ineq_thx2";     // d/dt int th_x^2 bound
    table.rows[4].name = "ineq_mech";     // superposed mechanical bound
    table.rows[5].name = "ineq_weighted"; // delta-weighted bound
    table.rows[6].name = "ineq_master";   // y' <= sigma y^3 + tau y

    auto update = [&](IneqResult& row, double lhs, double rhs, double t) {
        const double residual = lhs - rhs;
        const double scaled = residual / (1.0 + std::fabs(rhs));
        if (scaled > row.max_scaled) {
            row.max_scaled = scaled;
            row.max_residual = residual;
            row.at_t = t;
        }
        if (scaled > ineq_tol) row.satisfied = false;
    };

    for (std::size_t k = 1; k + 1 < smp.size(); ++k) {
        const Sample& lo = smp[k - 1];
        const Sample& mid = smp[k];
        const Sample& hi = smp[k + 1];
        const double span = hi.t - lo.t;
        auto ddt = [&](double fl, double fh) { return (fh - fl) / span; };
        const double t = mid.t;

        update(table.rows[0],
               0.5 * ddt(lo.pack.int_ux2, hi.pack.int_ux2) + 0.5 * a * mid.pack.int_ux2,
               mid.pack.int_vx2 / (2.0 * a), t);

        update(table.rows[1],
               0.25 * ddt(lo.pack.int_ux4, hi.pack.int_ux4) + 0.5 * a * mid.pack.int_ux4,
               8.0 / (a * a * a) * mid.pack.int_vx4, t);

        update(table.rows[2],
               0.5 * ddt(lo.pack.int_vx2, hi.pack.int_vx2) + 0.5 * mid.ext.int_gamma_vxx2,
               mid.ext.int_g31 + 2.0 * a * mid.pack.int_vx2 +
                   0.25 * a * a * a * mid.pack.int_ux2 + mid.ext.int_f31,
               t);

        update(table.rows[3],
               0.5 * ddt(lo.pack.int_thx2, hi.pack.int_thx2) + 0.5 * D * mid.ext.int_thxx2,
               c.K0 * mid.pack.int_vx4 + c.K0 * mid.pack.int_ux4 + mid.ext.int_F2_uxt2, t);

        update(table.rows[4],
               ddt(lo.pack.int_vx2 + 4.0 * a * a * lo.pack.int_ux2,
                   hi.pack.int_vx2 + 4.0 * a * a * hi.pack.int_ux2) +
                   c.k1 * mid.ext.int_vxx2 + c.k1 * mid.pack.int_ux2,
               d72 * c.K1 * mid.ext.int_thx4 + d12 * c.K1 * mid.pack.int_vx4 +
                   8.0 * a * mid.pack.int_vx2 + d2 * c.K1 * mid.pack.int_thx2,
               t);

        update(table.rows[5],
               ddt(d12 * lo.pack.int_thx2 + dbeta * c.rho * lo.pack.int_ux4,
                   d12 * hi.pack.int_thx2 + dbeta * c.rho * hi.pack.int_ux4) +
                   d12 * c.k1 * mid.ext.int_thxx2 + dbeta * c.k1 * mid.pack.int_ux4,
               dbeta * c.K1 * mid.pack.int_vx4 + dgap * c.K1 * mid.ext.int_thx4 + c.K1, t);

        const double lny_lo = std::isnan(lo.ln_y) ? y_log(lo.pack, c, p) : lo.ln_y;
        const double lny_mid = std::isnan(mid.ln_y) ? y_log(mid.pack, c, p) : mid.ln_y;
        const double lny_hi = std::isnan(hi.ln_y) ? y_log(hi.pack, c, p) : hi.ln_y;
        if (lny_mid < 230.0) {
            const double y_lo = std::exp(lny_lo), y_mid = std::exp(lny_mid),
                         y_hi = std::exp(lny_hi);
            update(table.rows[6], ddt(y_lo, y_hi),
                   exp_or_zero(c.log_sigma + 3.0 * lny_mid) + c.tau * y_mid, t);
        } else {
            // log form: (ln y)' <= sigma y^2 + tau
            const double rhs_log = c.log_sigma + 2.0 * lny_mid;
            const double rhs = (rhs_log > 700.0 ? std::numeric_limits<double>::infinity()
                                                : std::exp(rhs_log)) +
                               c.tau;
            update(table.rows[6], ddt(lny_lo, lny_hi), rhs, t);
        }
    }

    for (const auto& r : table.rows)
        if (!r.satisfied) table.all_satisfied = false;
    return table;
}

struct FeasibilityVerdict {
    bool feasible = true;
    double gap_decades = 0.0; // how many orders of magnitude the material misses delta_star by
};

/// Feasibility of the declared Lipschitz data against the certified
/// threshold: passes when ln(lip) <= ln(delta_star), with lip = 0 passing
/// vacuously.
inline FeasibilityVerdict delta_feasibility(const MaterialSet& m, const Certificate& c) {
    FeasibilityVerdict v;
    static const double ln10 = std::log(10.0);
    for (double lip : {m.lip_gamma, m.lip_f}) {
        if (lip <= 0.0) continue;
        const double gap = (std::log(lip) - c.log_delta_star) / ln10;
        if (gap > 0.0) {
            v.feasible = false;
            v.gap_decades = std::max(v.gap_decades, gap);
        }
    }
    return v;
}

} // namespace kvlab
