#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "kvlab/runner.hpp"

using namespace kvlab;
namespace fs = std::filesystem;

namespace {

std::string stationary_config_text() {
    return "[params]\n"
           "omega_len = 1.0\n"
           "n = 64\n"
           "a = 1.5\n"
           "D = 1.0\n"
           "\n"
           "[material]\n"
           "gamma = 1 + 0.5*tanh(s)\n"
           "Gamma = 1\n"
           "f = 0.2*tanh(s)\n"
           "F = (1+s)^0.5 - 1\n"
           "gamma_lo = 1.0\n"
           "gamma_hi = 1.5\n"
           "C_F = 1.0\n"
           "alpha = 0.5\n"
           "lip_gamma = 0.5\n"
           "lip_f = 0.2\n"
           "\n"
           "[initial]\n"
           "u0 = 0.7\n"
           "u0t = 0\n"
           "theta0 = 0\n"
           "\n"
           "[run]\n"
           "T_star = 0.05\n"
           "sample_stride = 4\n";
}

std::string sweep_config_text() {
    return "[params]\n"
           "omega_len = 1.0\n"
           "n = 48\n"
           "a = 1.0\n"
           "D = 1.0\n"
           "\n"
           "[material]\n"
           "gamma = 1\n"
           "Gamma = 1\n"
           "f = 0\n"
           "F = (1+s)^0.5 - 1\n"
           "gamma_lo = 1.0\n"
           "gamma_hi = 2.0\n"
           "C_F = 1.0\n"
           "alpha = 0.5\n"
           "lip_gamma = 0\n"
           "lip_f = 0\n"
           "\n"
           "[initial]\n"
           "u0 = 0.3*exp(-100*(x-0.5)^2)\n"
           "u0t = 0.2*exp(-120*(x-0.5)^2)\n"
           "theta0 = 0.3*sin(3.141592653589793*x)\n"
           "\n"
           "[run]\n"
           "T_star = 0.05\n"
           "sample_stride = 4\n";
}

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::path("runner_test_out") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

} // namespace

TEST_SUITE("runner") {

TEST_CASE("trajectory CSV header and verdict row are frozen") {
    const SimConfig cfg = parse_config(stationary_config_text());
    const fs::path dir = fresh_dir("run");
    std::ostringstream out;
    const RunOutcome oc = cmd_run(cfg, out, dir);
    CHECK(oc.exit_code == 0);
    CHECK(oc.verdict.kind == VerdictKind::reached_T);

    const std::string csv = slurp(dir / "trajectory.csv");
    CHECK(first_line(csv) ==
          "t,int_ux2,int_ux4,int_vx2,int_vx4,int_thx2,linf_theta,theta_min,mass,w12_vminusau,"
          "y_value_log");
    // trailing summary row
    const auto last_nl = csv.rfind('\n', csv.size() - 2);
    const std::string last = csv.substr(last_nl + 1);
    CHECK(last == "verdict,reached_T,0.05,,,,,,,,\n");
    // one-line verdict on stdout
    CHECK(out.str().find("verdict=reached_T") != std::string::npos);
    CHECK(out.str().find("min_margin=") != std::string::npos);
    // y column filled since a certificate is always attached by cmd_run
    std::istringstream rows(csv);
    std::string line;
    std::getline(rows, line); // header
    std::getline(rows, line); // t = 0 row
    CHECK(line.back() != ',');
}

TEST_CASE("y column is empty when no certificate is attached") {
    Trajectory traj;
    Sample s;
    s.t = 0.25;
    s.mass = 1.5; // ln_y stays NaN
    traj.samples.push_back(s);
    Verdict v;
    v.kind = VerdictKind::reached_T;
    v.t_end = 0.25;
    const std::string csv = trajectory_csv(traj, v);
    std::istringstream rows(csv);
    std::string header, line;
    std::getline(rows, header);
    std::getline(rows, line);
    CHECK(line.back() == ','); // trailing empty y_value_log cell
    CHECK(line.substr(0, 5) == "0.25,");
}

TEST_CASE("certificate CSV golden for the reference parameter point") {
    std::string text = stationary_config_text();
    // reshape into the reference point: a = D = 1, gamma_hi = 2, M = 1, T = 1
    text.replace(text.find("a = 1.5"), 7, "a = 1.0");
    text.replace(text.find("gamma_hi = 1.5"), 14, "gamma_hi = 2.0");
    text.replace(text.find("T_star = 0.05"), 13, "T_star = 1.0");
    text.insert(text.find("\n[material]"), "M = 1.0\n");
    const SimConfig cfg = parse_config(text);
    const fs::path dir = fresh_dir("certify");
    std::ostringstream out;
    CHECK(cmd_certify(cfg, out, dir) == 0);
    const std::string csv = slurp(dir / "certificate.csv");
    CHECK(first_line(csv) == "K0,rho,k1,Cp,Cgn,K1,K2,beta,kappa,chi,tau,s0,sigma_log,delta_star_log");
    std::istringstream rows(csv);
    std::string header, data;
    std::getline(rows, header);
    std::getline(rows, data);
    CHECK(data.substr(0, 17) == "8,33,0.5,1,2,1122");
    CHECK(out.str().find("K0    = 8") != std::string::npos);
    CHECK(out.str().find("feasible") != std::string::npos);
}

TEST_CASE("validation CSV emits one row per hypothesis") {
    const SimConfig cfg = parse_config(stationary_config_text());
    const fs::path dir = fresh_dir("validate");
    std::ostringstream out;
    CHECK(cmd_validate(cfg, out, dir) == 0);
    const std::string csv = slurp(dir / "validation.csv");
    CHECK(first_line(csv) == "hypothesis,verdict,witness_s,witness_value,bound");
    for (const char* name : {"gamma_lower", "gamma_upper", "Gamma_lower", "Gamma_upper", "F_zero",
                             "F_growth", "lip_gamma", "lip_f"})
        CHECK(csv.find(name) != std::string::npos);
}

TEST_CASE("cmd_validate exits 1 on a failed hypothesis") {
    std::string text = stationary_config_text();
    text.replace(text.find("gamma_hi = 1.5"), 14, "gamma_hi = 1.2");
    const SimConfig cfg = parse_config(text);
    const fs::path dir = fresh_dir("validate_fail");
    std::ostringstream out;
    CHECK(cmd_validate(cfg, out, dir) == 1);
    CHECK(out.str().find("FAIL") != std::string::npos);
}

TEST_CASE("sweep rows: delta 0 matches the constant-coefficient run and dup rows are bitwise equal") {
    const SimConfig cfg = parse_config(sweep_config_text());
    SweepSpec spec;
    spec.deltas = {0.0, 0.1};
    spec.reps = 2;
    const auto rows = run_sweep(cfg, spec, 2);
    REQUIRE(rows.size() == 4);

    // repetition determinism, bitwise
    CHECK(rows[0].t_end == rows[1].t_end);
    CHECK(rows[0].max_ln_y == rows[1].max_ln_y);
    CHECK(rows[0].margin == rows[1].margin);
    CHECK(rows[2].max_ln_y == rows[3].max_ln_y);

    // ln delta_star does not depend on the sweep knob
    CHECK(rows[0].ln_delta_star == rows[2].ln_delta_star);

    // delta = 0 is feasible and equals the plain constant-coefficient run
    CHECK(rows[0].feasible);
    CHECK(rows[0].lip_gamma == 0.0);
    const fs::path dir = fresh_dir("const_run");
    std::ostringstream out;
    const RunOutcome direct = cmd_run(cfg, out, dir);
    CHECK(rows[0].verdict == verdict_name(direct.verdict.kind));
    CHECK(rows[0].t_end == direct.verdict.t_end);
    double direct_max = -std::numeric_limits<double>::infinity();
    for (const auto& s : direct.result.traj.samples)
        direct_max = std::max(direct_max, s.ln_y);
    CHECK(rows[0].max_ln_y == direct_max);

    // larger delta means larger declared Lipschitz data
    CHECK(rows[2].lip_gamma == 0.1);
    CHECK(rows[2].lip_f == 0.1);
    CHECK(!rows[2].feasible); // delta_star is astronomically small here
}

TEST_CASE("sweep CSV header is frozen and rows stay in spec order") {
    const SimConfig cfg = parse_config(sweep_config_text());
    SweepSpec spec;
    spec.deltas = {0.0, 0.05, 0.1};
    const fs::path dir = fresh_dir("sweep");
    std::ostringstream out;
    CHECK(cmd_sweep(cfg, spec, out, dir, 3) == 0);
    const std::string csv = slurp(dir / "sweep.csv");
    CHECK(first_line(csv) == "delta,lip_gamma,lip_f,ln_delta_star,feasible,verdict,t_end,max_ln_y,margin");
    std::istringstream rows(csv);
    std::string line;
    std::getline(rows, line);
    std::getline(rows, line);
    CHECK(line.substr(0, 2) == "0,");
    std::getline(rows, line);
    CHECK(line.substr(0, 5) == "0.05,");
    std::getline(rows, line);
    CHECK(line.substr(0, 4) == "0.1,");
}

TEST_CASE("sweep input validation") {
    const SimConfig cfg = parse_config(sweep_config_text());
    SweepSpec bad;
    bad.deltas = {0.1, 0.05};
    CHECK_THROWS_AS(run_sweep(cfg, bad), std::invalid_argument);
    bad.deltas = {};
    CHECK_THROWS_AS(run_sweep(cfg, bad), std::invalid_argument);
    bad.deltas = {-0.1};
    CHECK_THROWS_AS(run_sweep(cfg, bad), std::invalid_argument);
}

TEST_CASE("mms CSV shape") {
    std::string text = sweep_config_text();
    const SimConfig cfg = parse_config(text);
    const fs::path dir = fresh_dir("mms");
    std::ostringstream out;
    CHECK(cmd_mms(cfg, 2, out, dir) == 0);
    const std::string csv = slurp(dir / "mms.csv");
    CHECK(first_line(csv) == "level,n,dx,dt,steps,err_u,err_v,err_theta");
    CHECK(csv.find("order,") != std::string::npos);
}

TEST_CASE("blowup is a successful observation: exit 0 with a verdict row") {
    std::string text = sweep_config_text();
    text.insert(text.find("[run]"), "[thresholds]\nthreshold_linf = 0.1\n\n");
    const SimConfig cfg = parse_config(text);
    const fs::path dir = fresh_dir("run_blowup");
    std::ostringstream out;
    const RunOutcome oc = cmd_run(cfg, out, dir);
    CHECK(oc.exit_code == 0);
    CHECK(oc.verdict.kind == VerdictKind::blowup);
    CHECK(out.str().find("verdict=blowup") != std::string::npos);
    CHECK(out.str().find("reason=theta_linf") != std::string::npos);
    const std::string csv = slurp(dir / "trajectory.csv");
    CHECK(csv.find("verdict,blowup,") != std::string::npos);
}

TEST_CASE("run with a failing material aborts") {
    std::string text = stationary_config_text();
    text.replace(text.find("gamma_hi = 1.5"), 14, "gamma_hi = 1.2");
    const SimConfig cfg = parse_config(text);
    const fs::path dir = fresh_dir("run_bad_material");
    std::ostringstream out;
    CHECK_THROWS_AS(cmd_run(cfg, out, dir), std::runtime_error);
}

} // TEST_SUITE
