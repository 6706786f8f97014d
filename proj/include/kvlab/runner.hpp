#pragma once

// Orchestration behind the CLI subcommands: validate, certify, run, sweep,
// mms. All machine-readable output is UTF-8 CSV with headers and LF line
// endings; column orders are frozen and pinned by golden tests.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "kvlab/checks.hpp"
#include "kvlab/config.hpp"
#include "kvlab/mms.hpp"
#include "kvlab/solver.hpp"

namespace kvlab {

inline std::string fmt_g(double v) { return detail::format_double(v); }

inline constexpr const char* kTrajectoryHeader =
    "t,int_ux2,int_ux4,int_vx2,int_vx4,int_thx2,linf_theta,theta_min,mass,w12_vminusau,"
    "y_value_log";
inline constexpr const char* kCertificateHeader =
    "K0,rho,k1,Cp,Cgn,K1,K2,beta,kappa,chi,tau,s0,sigma_log,delta_star_log";
inline constexpr const char* kValidationHeader = "hypothesis,verdict,witness_s,witness_value,bound";
inline constexpr const char* kSweepHeader =
    "delta,lip_gamma,lip_f,ln_delta_star,feasible,verdict,t_end,max_ln_y,margin";
inline constexpr const char* kMmsHeader = "level,n,dx,dt,steps,err_u,err_v,err_theta";

inline std::string trajectory_csv(const Trajectory& traj, const Verdict& verdict) {
    std::string out(kTrajectoryHeader);
    out += '\n';
    for (const auto& s : traj.samples) {
        out += fmt_g(s.t);
        out += ',' + fmt_g(s.pack.int_ux2) + ',' + fmt_g(s.pack.int_ux4) + ',' +
               fmt_g(s.pack.int_vx2) + ',' + fmt_g(s.pack.int_vx4) + ',' +
               fmt_g(s.pack.int_thx2) + ',' + fmt_g(s.pack.linf_theta) + ',' +
               fmt_g(s.pack.theta_min) + ',' + fmt_g(s.mass) + ',' + fmt_g(s.w12) + ',';
        if (!std::isnan(s.ln_y)) out += fmt_g(s.ln_y);
        out += '\n';
    }
    // trailing summary row, padded to the 11 data columns
    out += "verdict,";
    out += verdict_name(verdict.kind);
    out += ',' + fmt_g(verdict.t_end) + ',' + verdict.reason + ",,,,,,,\n";
    return out;
}

inline std::string certificate_csv(const Certificate& c) {
    std::string out(kCertificateHeader);
    out += '\n';
    out += fmt_g(c.K0) + ',' + fmt_g(c.rho) + ',' + fmt_g(c.k1) + ',' + fmt_g(c.Cp) + ',' +
           fmt_g(c.Cgn) + ',' + fmt_g(c.K1) + ',' + fmt_g(c.K2) + ',' + fmt_g(c.beta) + ',' +
           fmt_g(c.kappa) + ',' + fmt_g(c.chi) + ',' + fmt_g(c.tau) + ',' + fmt_g(c.s0) + ',' +
           fmt_g(c.log_sigma) + ',' + fmt_g(c.log_delta_star) + '\n';
    return out;
}

inline std::string validation_csv(const ValidationReport& rep) {
    std::string out(kValidationHeader);
    out += '\n';
    for (const auto& r : rep.rows) {
        out += r.name + ',';
        out += r.pass ? "pass" : (r.soft ? "warn" : "fail");
        out += ',' + fmt_g(r.witness_s) + ',' + fmt_g(r.witness_value) + ',' + fmt_g(r.bound) +
               '\n';
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
}

inline std::string validation_text(const ValidationReport& rep) {
    std::ostringstream os;
    os << "material validation over [0, " << fmt_g(rep.s_max) << "] with " << rep.n_samples
       << " samples\n";
    for (const auto& r : rep.rows) {
        os << "  " << (r.pass ? "pass" : (r.soft ? "WARN" : "FAIL")) << "  " << r.name;
        if (!r.pass)
            os << "  witness s=" << fmt_g(r.witness_s) << " value=" << fmt_g(r.witness_value)
               << " bound=" << fmt_g(r.bound);
        if (!r.note.empty()) os << "  (" << r.note << ")";
        os << "\n";
    }
    os << "  sampled sup|gamma'| ~ " << fmt_g(rep.est_lip_gamma) << ", sampled sup|f'| ~ "
       << fmt_g(rep.est_lip_f) << " (advisory)\n";
    return os.str();
}

inline std::string certificate_text(const Certificate& c, double m_init,
                                    const FeasibilityVerdict& feas) {
    std::ostringstream os;
    os << "certificate constants\n";
    os << "  K0    = " << fmt_g(c.K0) << "\n";
    os << "  rho   = " << fmt_g(c.rho) << "\n";
    os << "  k1    = " << fmt_g(c.k1) << "\n";
    os << "  Cp    = " << fmt_g(c.Cp) << "\n";
    os << "  Cgn   = " << fmt_g(c.Cgn) << "\n";
    os << "  K1    = " << fmt_g(c.K1) << "\n";
    os << "  K2    = " << fmt_g(c.K2) << "\n";
    os << "  beta  = " << fmt_g(c.beta) << "\n";
    os << "  kappa = " << fmt_g(c.kappa) << "\n";
    os << "  chi   = " << fmt_g(c.chi) << "\n";
    os << "  tau   = " << fmt_g(c.tau) << "\n";
    os << "  s0    = " << fmt_g(c.s0) << "\n";
    os << "  ln sigma      = " << fmt_g(c.log_sigma) << "\n";
    os << "  ln delta_star = " << fmt_g(c.log_delta_star) << "\n";
    os << "initial mass of configured data = " << fmt_g(m_init) << "\n";
    os << "declared Lipschitz data " << (feas.feasible ? "feasible" : "infeasible");
    if (!feas.feasible) os << " (misses delta_star by " << fmt_g(feas.gap_decades) << " decades)";
    os << "\n";
    return os.str();
}

struct RunOutcome {
    int exit_code = 0;
    Verdict verdict;
    ComparisonReport comparison;
    RunResult result;
    Certificate cert;
    Bounds bounds;
};

/// validate <config>: checks every declared hypothesis; exit 1 when a hard
/// hypothesis fails.
inline int cmd_validate(const SimConfig& cfg, std::ostream& out,
                        const std::filesystem::path& out_dir, double s_max = 10.0,
                        int n_samples = 4096) {
    const MaterialSet m = build_material(cfg.material);
    const ValidationReport rep = validate_material(m, s_max, n_samples);
    out << validation_text(rep);
    const Grid g = make_grid(cfg.omega_len, cfg.n);
    const InitialData data = build_initial(cfg.initial, g);
    for (const auto& note : initial_data_notes(data, g)) out << "  note: " << note << "\n";
    write_text_file(out_dir / "validation.csv", validation_csv(rep));
    return rep.all_pass() ? 0 : 1;
}

/// certify <config>: prints and writes the full constant chain.
inline int cmd_certify(const SimConfig& cfg, std::ostream& out,
                       const std::filesystem::path& out_dir) {
    const Grid g = make_grid(cfg.omega_len, cfg.n);
    const MaterialSet m = build_material(cfg.material);
    const InitialData data = build_initial(cfg.initial, g);
    const double m_init = initial_mass(data.u0, data.u0t, data.theta0, g);
    const Bounds b = bounds_from(cfg, m_init);
    const Certificate c = compute_constants(Params{cfg.a, cfg.D}, b);
    const FeasibilityVerdict feas = delta_feasibility(m, c);
    out << certificate_text(c, m_init, feas);
    write_text_file(out_dir / "certificate.csv", certificate_csv(c));
    return 0;
}

/// run <config>: validated material, certificate attached, trajectory CSV and
/// a one-line verdict. Blow-up is a scientific outcome (exit 0); only a step
/// failure exits nonzero.
inline RunOutcome cmd_run(const SimConfig& cfg, std::ostream& out,
                          const std::filesystem::path& out_dir) {
    RunOutcome oc;
    const MaterialSet m = build_material(cfg.material);
    const ValidationReport vrep = validate_material(m, /*s_max=*/10.0, /*n_samples=*/2048);
    if (!vrep.all_pass()) {
        out << validation_text(vrep);
        throw std::runtime_error("material validation failed; aborting run");
    }
    const Grid g = make_grid(cfg.omega_len, cfg.n);
    const InitialData data = build_initial(cfg.initial, g);
    for (const auto& note : initial_data_notes(data, g)) out << "note: " << note << "\n";
    const double m_init = initial_mass(data.u0, data.u0t, data.theta0, g);
    oc.bounds = bounds_from(cfg, m_init);
    oc.cert = compute_constants(Params{cfg.a, cfg.D}, oc.bounds);

    const RunSettings settings = run_settings_from(cfg, g);
    oc.result = run(g, data, m, Params{cfg.a, cfg.D}, settings, &oc.cert);
    oc.verdict = oc.result.verdict;
    oc.comparison = check_comparison(oc.result.traj, oc.cert, oc.bounds, Params{cfg.a, cfg.D});

    write_text_file(out_dir / "trajectory.csv", trajectory_csv(oc.result.traj, oc.verdict));
    out << "verdict=" << verdict_name(oc.verdict.kind) << " t_end=" << fmt_g(oc.verdict.t_end);
    if (!oc.verdict.reason.empty()) out << " reason=" << oc.verdict.reason;
    out << " min_margin=" << fmt_g(oc.comparison.min_margin) << "\n";
    oc.exit_code = oc.verdict.kind == VerdictKind::step_failure ? 1 : 0;
    return oc;
}

struct SweepSpec {
    std::vector<double> deltas; // nonnegative, ascending
    int reps = 1;
};

struct SweepRow {
    double delta = 0.0;
    double lip_gamma = 0.0;
    double lip_f = 0.0;
    double ln_delta_star = 0.0;
    bool feasible = true;
    std::string verdict;
    double t_end = 0.0;
    double max_ln_y = 0.0;
    double margin = 0.0;
    bool failed = false;
    std::string error;
};

/// Material for one sweep row: the delta knob scales the variable parts of
/// gamma and f while the declared envelope (and so the certificate) stays
/// fixed across rows.
inline MaterialSet sweep_material(const SimConfig& cfg, double delta) {
    MaterialSet m;
    const std::string d = fmt_g(delta);
    m.gamma = parse_law(fmt_g(cfg.material.gamma_lo) + " + " + d + "*tanh(s)");
    m.Gamma = parse_law(cfg.material.Gamma_text);
    m.f = parse_law(d + "*s/(1+s)^" + fmt_g(1.0 - cfg.material.alpha));
    m.F = parse_law(cfg.material.F_text);
    m.gamma_lo = cfg.material.gamma_lo;
    m.gamma_hi = cfg.material.gamma_hi;
    m.C_F = cfg.material.C_F;
    m.alpha = cfg.material.alpha;
    m.lip_gamma = delta; // sup delta*sech^2 = delta at s=0
    m.lip_f = delta;     // sup of the sublinear profile's slope, also at s=0
    return m;
}

inline SweepRow sweep_one(const SimConfig& cfg, double delta) {
    SweepRow row;
    row.delta = delta;
    try {
        const Grid g = make_grid(cfg.omega_len, cfg.n);
        const MaterialSet m = sweep_material(cfg, delta);
        row.lip_gamma = m.lip_gamma;
        row.lip_f = m.lip_f;
        const InitialData data = build_initial(cfg.initial, g);
        const double m_init = initial_mass(data.u0, data.u0t, data.theta0, g);
        const Bounds b = bounds_from(cfg, m_init);
        const Params p{cfg.a, cfg.D};
        const Certificate c = compute_constants(p, b);
        row.ln_delta_star = c.log_delta_star;
        row.feasible = delta_feasibility(m, c).feasible;

        const RunSettings settings = run_settings_from(cfg, g);
        const RunResult res = run(g, data, m, p, settings, &c);
        row.verdict = verdict_name(res.verdict.kind);
        row.t_end = res.verdict.t_end;
        double max_ln_y = -std::numeric_limits<double>::infinity();
        for (const auto& s : res.traj.samples) max_ln_y = std::max(max_ln_y, s.ln_y);
        row.max_ln_y = max_ln_y;
        row.margin = check_comparison(res.traj, c, b, p).min_margin;
    } catch (const std::exception& e) {
        row.failed = true;
        row.error = e.what();
        row.verdict = "error";
    }
    return row;
}

/// sweep <config> --deltas ...: rows are computed concurrently (they share no
/// mutable state) and written by a single writer in input order.
inline std::vector<SweepRow> run_sweep(const SimConfig& cfg, const SweepSpec& spec,
                                       unsigned max_workers = 0) {
    if (spec.deltas.empty()) throw std::invalid_argument("sweep: empty delta list");
    for (std::size_t i = 0; i < spec.deltas.size(); ++i) {
        if (!(spec.deltas[i] >= 0.0)) throw std::invalid_argument("sweep: deltas must be nonnegative");
        if (i > 0 && spec.deltas[i] < spec.deltas[i - 1])
            throw std::invalid_argument("sweep: deltas must be ascending");
    }
    if (spec.reps < 1) throw std::invalid_argument("sweep: reps must be >= 1");

    std::vector<double> jobs;
    for (double d : spec.deltas)
        for (int r = 0; r < spec.reps; ++r) jobs.push_back(d);

    std::vector<SweepRow> rows(jobs.size());
    unsigned workers = max_workers ? max_workers : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min<unsigned>(workers, static_cast<unsigned>(jobs.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            rows[i] = sweep_one(cfg, jobs[i]);
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out(kSweepHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += fmt_g(r.delta) + ',' + fmt_g(r.lip_gamma) + ',' + fmt_g(r.lip_f) + ',';
        if (r.failed) {
            std::string msg = r.verdict + ": " + r.error;
            for (char& c : msg)
                if (c == ',' || c == '\n') c = ';';
            out += ",," + msg + ",,,\n";
            continue;
        }
        out += fmt_g(r.ln_delta_star) + ',';
        out += r.feasible ? "true" : "false";
        out += ',' + r.verdict + ',' + fmt_g(r.t_end) + ',' + fmt_g(r.max_ln_y) + ',' +
               fmt_g(r.margin) + '\n';
    }
    return out;
}

inline int cmd_sweep(const SimConfig& cfg, const SweepSpec& spec, std::ostream& out,
                     const std::filesystem::path& out_dir, unsigned max_workers = 0) {
    const auto rows = run_sweep(cfg, spec, max_workers);
    write_text_file(out_dir / "sweep.csv", sweep_csv(rows));
    std::size_t ok = 0;
    for (const auto& r : rows)
        if (!r.failed) ++ok;
    out << "sweep finished: " << ok << "/" << rows.size() << " rows completed\n";
    return 0;
}

inline std::string mms_csv(const MmsReport& rep) {
    std::string out(kMmsHeader);
    out += '\n';
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const auto& l = rep.levels[i];
        out += std::to_string(i) + ',' + std::to_string(l.n) + ',' + fmt_g(l.dx) + ',' +
               fmt_g(l.dt) + ',' + std::to_string(l.steps) + ',' + fmt_g(l.err_u) + ',' +
               fmt_g(l.err_v) + ',' + fmt_g(l.err_th) + '\n';
    }
    out += "order,,,,," + fmt_g(rep.order_u) + ',' + fmt_g(rep.order_v) + ',' +
           fmt_g(rep.order_th) + '\n';
    return out;
}

/// mms <config> --levels k: convergence study against the manufactured
/// solution; exit 1 when any observed order drops below 1.5.
inline int cmd_mms(const SimConfig& cfg, int levels, std::ostream& out,
                   const std::filesystem::path& out_dir) {
    const MaterialSet m = build_material(cfg.material);
    const MmsReport rep =
        run_mms(cfg.omega_len, m, Params{cfg.a, cfg.D}, std::min(cfg.T_star, 0.25), levels);
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const auto& l = rep.levels[i];
        out << "level " << i << ": n=" << l.n << " dt=" << fmt_g(l.dt) << " err_u=" << fmt_g(l.err_u)
            << " err_v=" << fmt_g(l.err_v) << " err_theta=" << fmt_g(l.err_th) << "\n";
    }
    out << "observed spatial orders: u=" << fmt_g(rep.order_u) << " v=" << fmt_g(rep.order_v)
        << " theta=" << fmt_g(rep.order_th) << (rep.pass ? "" : "  [FAILED: order below 1.5]")
        << "\n";
    write_text_file(out_dir / "mms.csv", mms_csv(rep));
    return rep.pass ? 0 : 1;
}

} // namespace kvlab
