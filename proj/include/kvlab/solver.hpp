#pragma once

// Semi-implicit time integration of the substituted parabolic system
//
//   v_t     = (gamma(th) v_x)_x + a v - a^2 u + (f(th))_x
//   u_t     = v - a u
//   th_t    = D th_xx + Gamma(th) |v_x - a u_x|^2 + F(th) (v_x - a u_x)
//
// with Neumann conditions on u, v and homogeneous Dirichlet conditions on th.
// Each step freezes the coefficient laws at th^n, advances (v, u) by backward
// Euler on their linear part (the a^2 u term is folded into the v solve
// through the closed-form u update, which keeps the discrete time increment
// of int(v - a u) a pure boundary-flux term), and advances th by an implicit
// heat step driven by the quadratic sources evaluated at the fresh gradient.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kvlab/certificate.hpp"
#include "kvlab/grid.hpp"
#include "kvlab/material.hpp"
#include "kvlab/tridiag.hpp"

namespace kvlab {

struct InitialData {
    Field u0;     // neumann
    Field u0t;    // neumann
    Field theta0; // dirichlet0
};

struct Thresholds {
    double threshold_w12 = 1e6;
    double threshold_linf = 1e6;
    double pos_tol = 1e-10;
};

struct State {
    double t = 0.0;
    Field u, v, theta;
};

enum class VerdictKind { reached_T, blowup, step_failure };

inline const char* verdict_name(VerdictKind k) {
    switch (k) {
        case VerdictKind::reached_T: return "reached_T";
        case VerdictKind::blowup: return "blowup";
        case VerdictKind::step_failure: return "step_failure";
    }
    return "?";
}

struct Verdict {
    VerdictKind kind = VerdictKind::reached_T;
    double t_end = 0.0;
    std::string reason;
    FunctionalPack final_pack;
};

namespace detail {
inline double one_sided_slope(const std::vector<double>& w, const Grid& g, bool left) {
    const int n = g.n;
    if (left) return (-3.0 * w[0] + 4.0 * w[1] - w[2]) / (2.0 * g.dx);
    return (3.0 * w[n - 1] - 4.0 * w[n - 2] + w[n - 3]) / (2.0 * g.dx);
}
} // namespace detail

inline void check_initial_data(const InitialData& data, const Grid& g) {
    detail::require_size(data.u0, g, "u0");
    detail::require_size(data.u0t, g, "u0t");
    detail::require_size(data.theta0, g, "theta0");
    if (data.u0.bc != Bc::neumann || data.u0t.bc != Bc::neumann)
        throw std::invalid_argument("u0 and u0t must be neumann fields");
    if (data.theta0.bc != Bc::dirichlet0)
        throw std::invalid_argument("theta0 must be a dirichlet0 field");
    for (double v : data.theta0.values)
        if (v < 0.0) throw std::invalid_argument("theta0 must be nonnegative");
    for (const Field* f : {&data.u0, &data.u0t}) {
        const double dl = detail::one_sided_slope(f->values, g, true);
        const double dr = detail::one_sided_slope(f->values, g, false);
        if (std::fabs(dl) > 1e-8 || std::fabs(dr) > 1e-8)
            throw std::invalid_argument(
                "initial data violates discrete Neumann compatibility (boundary slope > 1e-8)");
    }
}

/// Advisory notes about the initial data (never fatal).
inline std::vector<std::string> initial_data_notes(const InitialData& data, const Grid& g) {
    std::vector<std::string> notes;
    const double dl = detail::one_sided_slope(data.theta0.values, g, true);
    const double dr = detail::one_sided_slope(data.theta0.values, g, false);
    if (std::fabs(dl) > 1e-8 || std::fabs(dr) > 1e-8)
        notes.push_back("theta0 has nonzero boundary slope; homogeneous Dirichlet data is used as-is");
    return notes;
}

/// Substitution v0 = u0t + a u0 at t = 0.
inline State init_state(const InitialData& data, const Params& p, const Grid& g) {
    check_params(p);
    check_initial_data(data, g);
    State s;
    s.t = 0.0;
    s.u = data.u0;
    s.theta = data.theta0;
    std::vector<double> v(data.u0.values.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = data.u0t.values[i] + p.a * data.u0.values[i];
    s.v = make_neumann(std::move(v));
    return s;
}

inline double mass(const State& s, const Grid& g, const Params& p) {
    std::vector<double> diff(s.v.values.size());
    for (std::size_t i = 0; i < diff.size(); ++i)
        diff[i] = s.v.values[i] - p.a * s.u.values[i];
    return trapezoid(diff, g);
}

inline double w12_norm_vminusau(const State& s, const Grid& g, const Params& p) {
    const std::size_t n = s.v.values.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = s.v.values[i] - p.a * s.u.values[i];
    Field df{diff, Bc::neumann};
    const auto dfx = dx1(df, g);
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = diff[i] * diff[i];
    double acc = trapezoid(sq, g);
    for (std::size_t i = 0; i < n; ++i) sq[i] = dfx[i] * dfx[i];
    acc += trapezoid(sq, g);
    return std::sqrt(acc);
}

/// Extensibility monitor: a returned reason names the first threshold crossed.
inline std::optional<std::string> detect_blowup(const State& s, const Grid& g, const Params& p,
                                                const Thresholds& th) {
    if (w12_norm_vminusau(s, g, p) > th.threshold_w12) return "w12_vminusau";
    double linf = 0.0, tmin = s.theta.values[0];
    for (double v : s.theta.values) {
        linf = std::max(linf, std::fabs(v));
        tmin = std::min(tmin, v);
    }
    if (linf > th.threshold_linf) return "theta_linf";
    if (tmin < -th.pos_tol) return "theta_negative";
    return std::nullopt;
}

class step_failure_error : public std::runtime_error {
public:
    explicit step_failure_error(const std::string& what) : std::runtime_error(what) {}
};

/// Optional manufactured-solution forcing, evaluated at the target time of
/// the step for every node.
struct Forcing {
    std::function<void(double t_next, std::vector<double>& fv, std::vector<double>& fu,
                       std::vector<double>& fth)>
        eval;
};

class Stepper {
public:
    Stepper(const Grid& g, const MaterialSet& m, const Params& p, const Forcing* forcing = nullptr)
        : grid_(g), mat_(m), par_(p), forcing_(forcing) {
        check_params(p);
        const std::size_t n = static_cast<std::size_t>(g.n);
        gam_.resize(n);
        Gam_.resize(n);
        fc_.resize(n);
        Fc_.resize(n);
        lower_.resize(n);
        diag_.resize(n);
        upper_.resize(n);
        rhs_.resize(n);
        faces_.resize(n - 1);
        fv_.assign(n, 0.0);
        fu_.assign(n, 0.0);
        fth_.assign(n, 0.0);
    }

    /// One IMEX step of size dt; throws step_failure_error on breakdown.
    /// The linear algebra runs in extended precision so that a stationary
    /// state is reproduced to below one double ulp per step.
    void step(State& s, double dt) {
        using real = long double;
        const int n = grid_.n;
        const double dx = grid_.dx, a = par_.a, D = par_.D;
        if (!(dt > 0.0)) throw std::invalid_argument("dt must be positive");
        if (!(dt * a < 1.0)) throw std::invalid_argument("dt*a must stay below 1");

        // freeze the laws at th^n; the laws live on [0, inf), so evaluation
        // clamps the argument at 0 while the field itself keeps its sign
        // (negativity is a monitored verdict, never repaired)
        for (int i = 0; i < n; ++i) {
            const double th = std::max(s.theta.values[i], 0.0);
            gam_[i] = mat_.gamma.eval(th);
            if (!(gam_[i] > 0.0)) throw step_failure_error("gamma(theta) lost positivity");
            Gam_[i] = mat_.Gamma.eval(th);
            fc_[i] = mat_.f.eval(th);
            Fc_[i] = mat_.F.eval(th);
        }
        for (int i = 0; i + 1 < n; ++i)
            faces_[i] = 0.5L * (static_cast<real>(gam_[i]) + static_cast<real>(gam_[i + 1]));

        if (forcing_) forcing_->eval(s.t + dt, fv_, fu_, fth_);

        // v solve: the u update u^{n+1} = (u^n + dt v^{n+1})/(1 + dt a) is
        // substituted into the -a^2 u term, shifting the diagonal by
        // dt^2 a^2/(1+dt a); this keeps the pair (v,u) a clean backward Euler
        // step and the mass increment a pure flux term.
        const real rdt = static_cast<real>(dt);
        const real ra = static_cast<real>(a);
        const real shift = rdt * rdt * ra * ra / (1.0L + rdt * ra);
        const real ucoef = rdt * ra * ra / (1.0L + rdt * ra);
        const real r = rdt / (static_cast<real>(dx) * static_cast<real>(dx));
        const auto fsrc = conservative_dx(fc_, grid_);
        for (int i = 0; i < n; ++i) {
            real lo = 0.0L, up = 0.0L, dg = 0.0L;
            if (i == 0) {
                up = -2.0L * r * faces_[0];
                dg = 1.0L - rdt * ra + shift + 2.0L * r * faces_[0];
            } else if (i == n - 1) {
                lo = -2.0L * r * faces_[n - 2];
                dg = 1.0L - rdt * ra + shift + 2.0L * r * faces_[n - 2];
            } else {
                lo = -r * faces_[i - 1];
                up = -r * faces_[i];
                dg = 1.0L - rdt * ra + shift + r * (faces_[i - 1] + faces_[i]);
            }
            lower_[i] = lo;
            upper_[i] = up;
            diag_[i] = dg;
            rhs_[i] = static_cast<real>(s.v.values[i]) -
                      ucoef * (static_cast<real>(s.u.values[i]) + rdt * fu_[i]) +
                      rdt * static_cast<real>(fsrc[i]) + rdt * static_cast<real>(fv_[i]);
        }
        if (!solver_.solve(lower_, diag_, upper_, rhs_))
            throw step_failure_error("tridiagonal solve failed in the v step");

        // u update (implicit in u, using the fresh v)
        std::vector<double> vnew(static_cast<std::size_t>(n)), unew(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            vnew[i] = static_cast<double>(rhs_[i]);
            unew[i] = static_cast<double>(
                (static_cast<real>(s.u.values[i]) + rdt * (rhs_[i] + static_cast<real>(fu_[i]))) /
                (1.0L + rdt * ra));
        }

        // theta solve with Dirichlet rows pinned to zero; the source uses
        // u_xt = (v - a u)_x at the fresh step values
        std::vector<double> wfield(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) wfield[i] = vnew[i] - a * unew[i];
        const auto w = dx1(Field{wfield, Bc::neumann}, grid_);
        const real rd = rdt * static_cast<real>(D) /
                        (static_cast<real>(dx) * static_cast<real>(dx));
        for (int i = 0; i < n; ++i) {
            if (i == 0 || i == n - 1) {
                lower_[i] = 0.0L;
                upper_[i] = 0.0L;
                diag_[i] = 1.0L;
                rhs_[i] = 0.0L;
            } else {
                lower_[i] = -rd;
                upper_[i] = -rd;
                diag_[i] = 1.0L + 2.0L * rd;
                rhs_[i] = static_cast<real>(s.theta.values[i]) +
                          rdt * (static_cast<real>(Gam_[i]) * w[i] * w[i] +
                                 static_cast<real>(Fc_[i]) * w[i] + static_cast<real>(fth_[i]));
            }
        }
        if (!solver_.solve(lower_, diag_, upper_, rhs_))
            throw step_failure_error("tridiagonal solve failed in the theta step");

        for (int i = 0; i < n; ++i) {
            const double th = static_cast<double>(rhs_[i]);
            if (!std::isfinite(vnew[i]) || !std::isfinite(unew[i]) || !std::isfinite(th))
                throw step_failure_error("non-finite field value after step");
            s.theta.values[i] = th;
        }
        s.v.values = std::move(vnew);
        s.u.values = std::move(unew);
        s.t += dt;
    }

    const Grid& grid() const { return grid_; }
    const MaterialSet& material() const { return mat_; }
    const Params& params() const { return par_; }

private:
    Grid grid_;
    MaterialSet mat_;
    Params par_;
    const Forcing* forcing_;
    BasicTridiagSolver<long double> solver_;
    std::vector<double> gam_, Gam_, fc_, Fc_;
    std::vector<long double> lower_, diag_, upper_, rhs_, faces_;
    std::vector<double> fv_, fu_, fth_;
};

/// Integrals beyond the basic pack that the inequality checker consumes.
struct ExtPack {
    double int_thx4 = 0.0;
    double int_vxx2 = 0.0;
    double int_gamma_vxx2 = 0.0;
    double int_thxx2 = 0.0;
    double int_F2_uxt2 = 0.0;
    double int_g31 = 0.0; // int gamma'(th)^2/gamma(th) v_x^2 th_x^2
    double int_f31 = 0.0; // int f'(th)^2/gamma(th) th_x^2
};

struct Sample {
    double t = 0.0;
    FunctionalPack pack;
    ExtPack ext;
    double mass = 0.0;
    double w12 = 0.0;
    double ln_y = std::numeric_limits<double>::quiet_NaN(); // NaN when no certificate attached
};

struct Trajectory {
    std::vector<Sample> samples;
};

inline Sample make_sample(const State& s, const Grid& g, const MaterialSet& m, const Params& p,
                          const Certificate* cert) {
    Sample smp;
    smp.t = s.t;
    smp.pack = functional_pack(s.u, s.v, s.theta, g);
    smp.mass = mass(s, g, p);
    smp.w12 = w12_norm_vminusau(s, g, p);

    const std::size_t n = static_cast<std::size_t>(g.n);
    const auto vx = dx1(s.v, g);
    const auto thx = dx1(s.theta, g);
    const auto vxx = dxx(s.v, g);
    const auto thxx = dxx(s.theta, g);
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = s.v.values[i] - p.a * s.u.values[i];
    const auto w = dx1(Field{diff, Bc::neumann}, g);

    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = thx[i] * thx[i] * thx[i] * thx[i];
    smp.ext.int_thx4 = trapezoid(tmp, g);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = vxx[i] * vxx[i];
    smp.ext.int_vxx2 = trapezoid(tmp, g);
    // law arguments clamped into the [0, inf) domain as in the stepper
    for (std::size_t i = 0; i < n; ++i) {
        const double th = std::max(s.theta.values[i], 0.0);
        const double gam = m.gamma.eval(th);
        tmp[i] = gam * vxx[i] * vxx[i];
    }
    smp.ext.int_gamma_vxx2 = trapezoid(tmp, g);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = thxx[i] * thxx[i];
    smp.ext.int_thxx2 = trapezoid(tmp, g);
    for (std::size_t i = 0; i < n; ++i) {
        const double F = m.F.eval(std::max(s.theta.values[i], 0.0));
        tmp[i] = F * F * w[i] * w[i];
    }
    smp.ext.int_F2_uxt2 = trapezoid(tmp, g);
    for (std::size_t i = 0; i < n; ++i) {
        const double th = std::max(s.theta.values[i], 0.0);
        const double gam = m.gamma.eval(th);
        const double gp = law_derivative(m.gamma, th);
        tmp[i] = gp * gp / gam * vx[i] * vx[i] * thx[i] * thx[i];
    }
    smp.ext.int_g31 = trapezoid(tmp, g);
    for (std::size_t i = 0; i < n; ++i) {
        const double th = std::max(s.theta.values[i], 0.0);
        const double gam = m.gamma.eval(th);
        const double fp = law_derivative(m.f, th);
        tmp[i] = fp * fp / gam * thx[i] * thx[i];
    }
    smp.ext.int_f31 = trapezoid(tmp, g);

    if (cert) smp.ln_y = y_log(smp.pack, *cert, p);
    return smp;
}

struct RunSettings {
    double dt = 0.0; // resolved step size (already capped)
    double T_star = 1.0;
    int sample_stride = 1;
    Thresholds thresholds;
    double step_change_cap = 0.5;
    int max_halvings = 8;
};

struct RunResult {
    Trajectory traj;
    Verdict verdict;
    State final_state;
    double dt_final = 0.0;
    int halvings = 0;
};

namespace detail {
inline double relative_change(const State& before, const State& after) {
    double worst = 0.0;
    auto scan = [&](const std::vector<double>& a, const std::vector<double>& b) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = std::fabs(b[i] - a[i]) / (1.0 + std::fabs(a[i]));
            if (!(d <= worst)) worst = std::isfinite(d) ? std::max(worst, d)
                                                        : std::numeric_limits<double>::infinity();
        }
    };
    scan(before.u.values, after.u.values);
    scan(before.v.values, after.v.values);
    scan(before.theta.values, after.theta.values);
    return worst;
}
} // namespace detail

/// Fixed-dt march from 0 to T_star with cap-triggered halving. Deterministic:
/// identical inputs give a bitwise identical trajectory.
inline RunResult run(const Grid& g, const InitialData& data, const MaterialSet& m, const Params& p,
                     const RunSettings& settings, const Certificate* cert = nullptr,
                     const Forcing* forcing = nullptr) {
    if (!(settings.dt > 0.0)) throw std::invalid_argument("run: dt must be positive");
    if (settings.sample_stride < 1) throw std::invalid_argument("run: sample_stride must be >= 1");

    RunResult res;
    State s = init_state(data, p, g);
    Stepper stepper(g, m, p, forcing);

    double dt = settings.dt;
    int halvings = 0;
    long step_index = 0;

    res.traj.samples.push_back(make_sample(s, g, m, p, cert));

    const double t_eps = 1e-12 * settings.T_star;
    auto finish = [&](VerdictKind kind, double t_end, std::string reason) {
        res.verdict.kind = kind;
        res.verdict.t_end = t_end;
        res.verdict.reason = std::move(reason);
        res.verdict.final_pack = functional_pack(s.u, s.v, s.theta, g);
        res.final_state = s;
        res.dt_final = dt;
        res.halvings = halvings;
    };

    while (s.t < settings.T_star - t_eps) {
        // absorb accumulation drift into one clipped final step
        const bool last = settings.T_star - s.t <= 1.5 * dt;
        const double dt_eff = last ? settings.T_star - s.t : dt;
        State trial = s;
        bool failed = false;
        std::string failure;
        try {
            stepper.step(trial, dt_eff);
        } catch (const step_failure_error& e) {
            failed = true;
            failure = e.what();
        } catch (const eval_error& e) {
            failed = true;
            failure = std::string("coefficient law evaluation failed: ") + e.what();
        }
        const double rel = failed ? std::numeric_limits<double>::infinity()
                                  : detail::relative_change(s, trial);
        if (rel > settings.step_change_cap) {
            if (halvings >= settings.max_halvings) {
                finish(VerdictKind::step_failure, s.t,
                       failed ? failure
                              : "relative step change exceeded cap after " +
                                    std::to_string(halvings) + " halvings");
                return res;
            }
            dt *= 0.5;
            ++halvings;
            continue;
        }
        s = std::move(trial);
        if (last) s.t = settings.T_star;
        ++step_index;

        const auto reason = detect_blowup(s, g, p, settings.thresholds);
        const bool at_end = s.t >= settings.T_star - t_eps;
        if (reason || at_end || step_index % settings.sample_stride == 0)
            res.traj.samples.push_back(make_sample(s, g, m, p, cert));
        if (reason) {
            finish(VerdictKind::blowup, s.t, *reason);
            return res;
        }
    }
    finish(VerdictKind::reached_T, settings.T_star, "");
    return res;
}

/// Default step size rule: min(0.25 dx, 0.1/(1+a), user dt). The explicit
/// quadratic source limits the step even though diffusion is implicit.
inline double default_dt(const Grid& g, const Params& p, std::optional<double> dt_user) {
    double dt = std::min(0.25 * g.dx, 0.1 / (1.0 + p.a));
    if (dt_user) dt = std::min(dt, *dt_user);
    return dt;
}

} // namespace kvlab
