#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "kvlab/grid.hpp"

using namespace kvlab;

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

Field sampled(const Grid& g, Bc bc, double (*fn)(double)) {
    std::vector<double> v(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) v[static_cast<std::size_t>(i)] = fn(node_x(g, i));
    return bc == Bc::neumann ? make_neumann(std::move(v)) : make_dirichlet0(std::move(v));
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::fabs(a[i] - b[i]));
    return worst;
}

// Richardson slope of the max error over successive dx-halvings.
template <typename ErrFn>
double observed_order(ErrFn err, int n0, int levels) {
    std::vector<double> errs;
    for (int l = 0; l < levels; ++l) errs.push_back(err((n0 - 1) * (1 << l) + 1));
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < errs.size(); ++i)
        worst = std::min(worst, std::log2(errs[i - 1] / errs[i]));
    return worst;
}

} // namespace

TEST_SUITE("grid") {

TEST_CASE("grid invariants") {
    const Grid g = make_grid(2.0, 5);
    CHECK(g.dx == 0.5);
    CHECK(node_x(g, 4) == 2.0);
    CHECK_THROWS_AS(make_grid(0.0, 5), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1.0, 2), std::invalid_argument);
}

TEST_CASE("dirichlet0 snaps evaluation noise and rejects real violations") {
    Field f = make_dirichlet0({1.2e-16, 0.5, -3e-16});
    CHECK(f.values.front() == 0.0);
    CHECK(f.values.back() == 0.0);
    CHECK_THROWS_AS(make_dirichlet0({0.1, 0.5, 0.0}), std::invalid_argument);
}

TEST_CASE("dx1 on constants and symmetric parabolas") {
    const Grid g = make_grid(1.0, 101);
    const Field c = sampled(g, Bc::neumann, [](double) { return 3.7; });
    for (double d : dx1(c, g)) CHECK(d == 0.0);

    const Field p = sampled(g, Bc::dirichlet0, [](double x) { return x * (1.0 - x); });
    const auto d = dx1(p, g);
    CHECK(std::fabs(d[50]) <= 1e-12); // midpoint of the parabola
    CHECK(d[0] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d[100] == doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("dx1 matches the analytic derivative of cos(pi x)") {
    const Grid g = make_grid(1.0, 201);
    const Field f = sampled(g, Bc::neumann, [](double x) { return std::cos(kPi * x); });
    const auto d = dx1(f, g);
    std::vector<double> exact(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) exact[static_cast<std::size_t>(i)] = -kPi * std::sin(kPi * node_x(g, i));
    CHECK(max_abs_diff(d, exact) <= 1e-3);
}

TEST_CASE("flux_div boundary rows encode zero flux") {
    const Grid g = make_grid(1.0, 11);
    std::vector<double> ones(11, 1.0);
    const Field w = sampled(g, Bc::neumann, [](double x) { return 2.0 * x + 1.0; });
    const auto d = flux_div(ones, w, g);
    for (int i = 1; i + 1 < g.n; ++i) CHECK(std::fabs(d[i]) <= 1e-12);
    const double invdx2 = 1.0 / (g.dx * g.dx);
    CHECK(d[0] == doctest::Approx(2.0 * (w.values[1] - w.values[0]) * invdx2));
    CHECK(d[10] == doctest::Approx(-2.0 * (w.values[10] - w.values[9]) * invdx2));
}

TEST_CASE("flux_div approximates the Laplacian of cos(pi x)") {
    const Grid g = make_grid(1.0, 201);
    std::vector<double> ones(static_cast<std::size_t>(g.n), 1.0);
    const Field w = sampled(g, Bc::neumann, [](double x) { return std::cos(kPi * x); });
    const auto d = flux_div(ones, w, g);
    std::vector<double> exact(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i)
        exact[static_cast<std::size_t>(i)] = -kPi * kPi * std::cos(kPi * node_x(g, i));
    CHECK(max_abs_diff(d, exact) <= 1e-3);
}

TEST_CASE("flux_div is linear in the coefficient") {
    const Grid g = make_grid(1.0, 33);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> w(static_cast<std::size_t>(g.n));
    for (auto& x : w) x = dist(rng);
    const Field f = make_neumann(w);
    std::vector<double> c1(static_cast<std::size_t>(g.n), 1.0), c2(static_cast<std::size_t>(g.n), 2.0);
    const auto d1 = flux_div(c1, f, g);
    const auto d2 = flux_div(c2, f, g);
    for (int i = 0; i < g.n; ++i) CHECK(d2[i] == doctest::Approx(2.0 * d1[i]).epsilon(1e-15));
}

TEST_CASE("flux_div rejects nonpositive coefficients") {
    const Grid g = make_grid(1.0, 5);
    const Field f = make_neumann({0, 1, 2, 1, 0});
    std::vector<double> c(5, 1.0);
    c[2] = -0.5;
    CHECK_THROWS_AS(flux_div(c, f, g), std::invalid_argument);
}

TEST_CASE("discrete conservation: weighted sum of flux_div vanishes") {
    const Grid g = make_grid(2.5, 97);
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    std::uniform_real_distribution<double> cdist(0.2, 3.0);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> w(static_cast<std::size_t>(g.n)), c(static_cast<std::size_t>(g.n));
        for (auto& x : w) x = dist(rng);
        for (auto& x : c) x = cdist(rng);
        const auto d = flux_div(c, make_neumann(w), g);
        double scale = 0.0;
        for (double v : d) scale = std::max(scale, std::fabs(v));
        CHECK(std::fabs(trapezoid(d, g)) <= 1e-13 * (1.0 + scale));
    }
}

TEST_CASE("trapezoid exactness and the sin integral") {
    const Grid g = make_grid(1.0, 101);
    std::vector<double> ones(static_cast<std::size_t>(g.n), 1.0);
    CHECK(trapezoid(ones, g) == doctest::Approx(1.0).epsilon(1e-15));
    std::vector<double> lin(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) lin[static_cast<std::size_t>(i)] = 0.25 + 3.0 * node_x(g, i);
    CHECK(trapezoid(lin, g) == doctest::Approx(0.25 + 1.5).epsilon(1e-14)); // exact on affine
    std::vector<double> sine(static_cast<std::size_t>(g.n));
    for (int i = 0; i < g.n; ++i) sine[static_cast<std::size_t>(i)] = std::sin(kPi * node_x(g, i));
    CHECK(std::fabs(trapezoid(sine, g) - 2.0 / kPi) <= 1e-3);
}

TEST_CASE("functional_pack on zero and cosine fields") {
    const Grid g = make_grid(1.0, 401);
    const Field zero = sampled(g, Bc::neumann, [](double) { return 0.0; });
    const Field zd = sampled(g, Bc::dirichlet0, [](double) { return 0.0; });
    FunctionalPack p0 = functional_pack(zero, zero, zd, g);
    CHECK(p0.int_ux2 == 0.0);
    CHECK(p0.int_vx4 == 0.0);
    CHECK(p0.linf_theta == 0.0);

    const Field u = sampled(g, Bc::neumann, [](double x) { return std::cos(kPi * x); });
    FunctionalPack p = functional_pack(u, zero, zd, g);
    CHECK(std::fabs(p.int_ux2 - kPi * kPi / 2.0) <= 1e-3);                    // pi^2/2
    CHECK(std::fabs(p.int_ux4 - 3.0 * std::pow(kPi, 4) / 8.0) <= 1e-2);       // 3 pi^4/8
    CHECK(p.int_ux2 >= 0.0);
    CHECK(p.int_ux4 >= 0.0);
}

TEST_CASE("theta extrema tracked by functional_pack") {
    const Grid g = make_grid(1.0, 5);
    const Field zero = sampled(g, Bc::neumann, [](double) { return 0.0; });
    const Field th = make_dirichlet0({0.0, 0.4, -0.2, 0.9, 0.0});
    FunctionalPack p = functional_pack(zero, zero, th, g);
    CHECK(p.linf_theta == 0.9);
    CHECK(p.theta_min == -0.2);
}

TEST_CASE("dx1 and flux_div converge at second order") {
    auto err_dx1 = [](int n) {
        const Grid g = make_grid(1.0, n);
        const Field f = sampled(g, Bc::neumann, [](double x) {
            return std::cos(kPi * x) + 0.3 * std::cos(2.0 * kPi * x);
        });
        const auto d = dx1(f, g);
        double worst = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const double x = node_x(g, i);
            const double exact = -kPi * std::sin(kPi * x) - 0.6 * kPi * std::sin(2.0 * kPi * x);
            worst = std::max(worst, std::fabs(d[i] - exact));
        }
        return worst;
    };
    CHECK(observed_order(err_dx1, 33, 4) >= 1.9);

    auto err_flux = [](int n) {
        const Grid g = make_grid(1.0, n);
        std::vector<double> ones(static_cast<std::size_t>(g.n), 1.0);
        const Field f = sampled(g, Bc::neumann, [](double x) {
            return std::cos(kPi * x) + 0.3 * std::cos(2.0 * kPi * x);
        });
        const auto d = flux_div(ones, f, g);
        double worst = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const double x = node_x(g, i);
            const double exact =
                -kPi * kPi * std::cos(kPi * x) - 1.2 * kPi * kPi * std::cos(2.0 * kPi * x);
            worst = std::max(worst, std::fabs(d[i] - exact));
        }
        return worst;
    };
    CHECK(observed_order(err_flux, 33, 4) >= 1.9);
}

TEST_CASE("conservative_dx telescopes exactly") {
    const Grid g = make_grid(1.0, 41);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    std::vector<double> w(static_cast<std::size_t>(g.n));
    for (auto& x : w) x = dist(rng);
    w.back() = w.front(); // equal boundary values, like f(theta) with Dirichlet theta
    const auto d = conservative_dx(w, g);
    CHECK(std::fabs(trapezoid(d, g)) <= 1e-14 * 10.0);
}

} // TEST_SUITE
