#include "doctest.h"

#include <string>

#include "kvlab/config.hpp"

using namespace kvlab;

namespace {

std::string minimal_config() {
    return "[params]\n"
           "omega_len = 1.0\n"
           "n = 64\n"
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
           "u0 = 0\n"
           "u0t = 0\n"
           "theta0 = 0.5*sin(3.141592653589793*x)\n"
           "\n"
           "[run]\n"
           "T_star = 0.5\n";
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("minimal config picks documented defaults") {
    const SimConfig cfg = parse_config(minimal_config());
    CHECK(cfg.n == 64);
    CHECK(!cfg.dt_user.has_value());
    CHECK(cfg.sample_stride == 1);
    CHECK(cfg.ineq_tol == 1e-4);
    CHECK(cfg.thresholds.threshold_w12 == 1e6);
    CHECK(cfg.thresholds.pos_tol == 1e-10);
    CHECK(cfg.mode == Mode::run);
    const Grid g = make_grid(cfg.omega_len, cfg.n);
    // dt default: min(0.25 dx, 0.1/(1+a))
    CHECK(default_dt(g, Params{cfg.a, cfg.D}, cfg.dt_user) ==
          doctest::Approx(0.25 / 63.0).epsilon(1e-12));
}

TEST_CASE("unknown keys are rejected with the offending line") {
    std::string text = minimal_config();
    text.insert(text.find("[material]"), "aa = 1\n");
    try {
        parse_config(text);
        FAIL("expected config_error");
    } catch (const config_error& e) {
        CHECK(std::string(e.what()).find("aa") != std::string::npos);
        CHECK(e.line() == 7); // inserted just above [material]
    }
}

TEST_CASE("schema violations") {
    std::string text = minimal_config();
    auto replaced = [&](const std::string& from, const std::string& to) {
        std::string t = minimal_config();
        t.replace(t.find(from), from.size(), to);
        return t;
    };
    CHECK_THROWS_AS(parse_config(replaced("alpha = 0.5", "alpha = 1.5")), config_error);
    CHECK_THROWS_AS(parse_config(replaced("n = 64", "n = 2")), config_error);
    CHECK_THROWS_AS(parse_config(replaced("T_star = 0.5", "T_star = -1")), config_error);
    CHECK_THROWS_AS(parse_config(replaced("a = 1.0", "a = 1.0.0")), config_error);
    CHECK_THROWS_AS(parse_config(replaced("n = 64", "n = 64.5")), config_error);
    // missing required key
    std::string missing = minimal_config();
    missing.erase(missing.find("D = 1.0\n"), 8);
    CHECK_THROWS_AS(parse_config(missing), config_error);
    // malformed section and stray key
    CHECK_THROWS_AS(parse_config("x = 1\n" + minimal_config()), config_error);
    CHECK_THROWS_AS(parse_config(std::string("[weird]\nz = 1\n") + minimal_config()),
                    config_error);
    // duplicate key
    CHECK_THROWS_AS(parse_config(replaced("a = 1.0", "a = 1.0\na = 2.0")), config_error);
    // law text must parse
    CHECK_THROWS_AS(parse_config(replaced("gamma = 1", "gamma = tanh(s")), config_error);
}

TEST_CASE("round trip: load, serialize, load") {
    SimConfig cfg = parse_config(minimal_config());
    const std::string text = serialize_config(cfg);
    const SimConfig again = parse_config(text);
    CHECK(cfg == again);
    CHECK(serialize_config(again) == text);

    // with every optional set
    cfg.M = 2.5;
    cfg.dt_user = 1e-4;
    cfg.sample_stride = 7;
    cfg.mode = Mode::sweep;
    const SimConfig third = parse_config(serialize_config(cfg));
    CHECK(cfg == third);
}

TEST_CASE("build_material and build_initial evaluate law texts") {
    const SimConfig cfg = parse_config(minimal_config());
    const MaterialSet m = build_material(cfg.material);
    CHECK(m.gamma.eval(3.0) == 1.0);
    CHECK(m.F.eval(3.0) == doctest::Approx(1.0).epsilon(1e-14));
    const Grid g = make_grid(cfg.omega_len, cfg.n);
    const InitialData data = build_initial(cfg.initial, g);
    CHECK(data.theta0.values.front() == 0.0);
    CHECK(data.theta0.values.back() == 0.0);
    CHECK(data.theta0.values[g.n / 2] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(data.u0.values[3] == 0.0);
}

TEST_CASE("missing file") {
    CHECK_THROWS_AS(load_config("/nonexistent/path.cfg"), config_error);
}

TEST_CASE("bounds_from uses declared M when present") {
    SimConfig cfg = parse_config(minimal_config());
    Bounds b = bounds_from(cfg, 3.25);
    CHECK(b.M == 3.25); // computed fallback
    cfg.M = 7.0;
    b = bounds_from(cfg, 3.25);
    CHECK(b.M == 7.0);
    CHECK(b.T_star == 0.5);
    CHECK(b.gamma_hi == 2.0);
}

} // TEST_SUITE
