#include <cmath>
#include <numbers>
#include <sstream>

#include "choquard/errors.hpp"
#include "choquard/prng.hpp"
#include "choquard/radial_core.hpp"
#include "doctest.h"

using namespace choquard;

namespace {
constexpr double kPi = std::numbers::pi;
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
}  // namespace

TEST_CASE("uniform grid nodes") {
    auto g = make_grid(1.0, 17, 1.0);
    REQUIRE(g->size() == 17);
    for (std::size_t i = 0; i < 17; ++i) CHECK((*g)[i] == doctest::Approx(i / 16.0).epsilon(1e-15));
    CHECK((*g)[0] == 0.0);
    CHECK((*g)[16] == 1.0);
}

TEST_CASE("grid invariants and argument errors") {
    for (auto g : {default_grid(), make_grid(50, 4097, 1.002), make_grid(3, 16, 1.0)}) {
        double sum = 0.0;
        for (double w : g->weights()) {
            CHECK(w > 0.0);
            sum += w;
        }
        CHECK(rel(sum, g->r_max()) < 1e-12);
        for (std::size_t i = 1; i < g->size(); ++i) CHECK((*g)[i] > (*g)[i - 1]);
    }
    CHECK_THROWS_AS(make_grid(0.0, 100, 1.0), InvalidArgument);
    CHECK_THROWS_AS(make_grid(-1.0, 100, 1.0), InvalidArgument);
    CHECK_THROWS_AS(make_grid(1.0, 15, 1.0), InvalidArgument);
    CHECK_THROWS_AS(make_grid(1.0, 100, 0.5), InvalidArgument);
}

TEST_CASE("default grid layout") {
    auto g = default_grid();
    CHECK(g->size() == 4096);
    CHECK(g->r_max() == doctest::Approx(200.0).epsilon(1e-14));
    CHECK((*g)[400] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK((*g)[1] == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("quadrature oracles") {
    auto g = make_grid(2.0, 4097, 1.0);
    CHECK(std::abs(integrate(sample(g, [](double s) { return s; })) - 2.0) < 1e-12);
    auto g2 = make_grid(50.0, 4097, 1.002);
    CHECK(std::abs(integrate(sample(g2, [](double s) { return std::exp(-s); })) - (1.0 - std::exp(-50.0))) < 1e-8);
}

TEST_CASE("polynomial exactness on nonuniform grids") {
    // Quadratics everywhere; cubics on a uniform grid with an even interval count.
    for (auto g : {default_grid(), make_grid(10, 101, 1.03), make_grid(10, 100, 1.03), make_grid(10, 101, 1.0)}) {
        const double R = g->r_max();
        const int degree = g->scheme().stretch == 1.0 && (g->size() - 1) % 2 == 0 ? 3 : 2;
        for (int k = 0; k <= degree; ++k) {
            const double exact = std::pow(R, k + 1) / (k + 1);
            CHECK(rel(integrate(sample(g, [k](double s) { return std::pow(s, k); })), exact) < 1e-12);
        }
    }
}

TEST_CASE("lp_norm examples") {
    auto g = default_grid();
    // The jump costs O(h) in any nonlinear norm, hence the fine grid.
    CHECK(rel(lp_norm(indicator(make_grid(2, 200001, 1.0), 0, 1), 3), std::cbrt(4 * kPi / 3)) < 1e-5);
    CHECK(lp_norm(sample(g, [](double) { return 0.0; }), 2.5) == 0.0);
    auto e = sample(g, [](double r) { return std::exp(-r * r); });
    const double l2sq = std::pow(kPi, 1.5) / (2 * std::sqrt(2.0));
    CHECK(rel(lp_norm(e, 2), std::sqrt(l2sq)) < 1e-9);
    CHECK_THROWS_AS(lp_norm(e, 0.5), InvalidArgument);
}

TEST_CASE("h1_seminorm examples") {
    auto fine = make_grid(2, 20001, 1.0);
    auto tent = sample(fine, [](double r) { return std::max(0.0, 1.0 - r); });
    CHECK(rel(std::pow(h1_seminorm(tent), 2), 4 * kPi / 3) < 1e-3);
    CHECK(h1_seminorm(sample(default_grid(), [](double) { return 0.0; })) == 0.0);
    const double exact = 1.5 * kPi * std::sqrt(kPi / 2);
    auto e = sample(default_grid(), [](double r) { return std::exp(-r * r); });
    CHECK(rel(std::pow(h1_seminorm(e), 2), exact) < 1e-4);
    auto ef = sample(make_grid(10, 20001, 1.0), [](double r) { return std::exp(-r * r); });
    CHECK(rel(std::pow(h1_seminorm(ef), 2), exact) < 1e-6);
}

TEST_CASE("homogeneity of the norms") {
    auto g = default_grid();
    auto e = sample(g, [](double r) { return std::exp(-r * r) * (1 + 0.3 * std::sin(r)); });
    for (double c : {-2.0, 0.5, 10.0}) {
        CHECK(rel(lp_norm(e.scaled(c), 3), std::abs(c) * lp_norm(e, 3)) < 1e-13);
        CHECK(rel(h1_seminorm(e.scaled(c)), std::abs(c) * h1_seminorm(e)) < 1e-13);
    }
}

TEST_CASE("grid refinement converges at second order or better") {
    std::vector<double> v;
    for (std::size_t n : {1025u, 2049u, 4097u, 8193u})
        v.push_back(lp_norm(sample(make_grid(10, n, 1.0), [](double r) { return std::exp(-r * r); }), 2));
    for (std::size_t k = 1; k < v.size(); ++k) CHECK(rel(v[k], v[k - 1]) < 1e-6);
    const double exact = std::sqrt(std::pow(kPi, 1.5) / (2 * std::sqrt(2.0)));
    // Three successive refinements: each halving of h must shrink the error by 4 at least.
    for (std::size_t k = 1; k + 1 < v.size(); ++k) {
        const double e0 = std::abs(v[k - 1] - exact), e1 = std::abs(v[k] - exact);
        if (e1 > 1e-14) CHECK(e0 / e1 > 3.9);
    }
}

TEST_CASE("resample examples") {
    auto g = default_grid();
    auto e = sample(g, [](double r) { return std::exp(-r); });
    auto same = resample(e, g);
    CHECK(same.values() == e.values());
    auto lin = sample(make_grid(10, 101, 1.0), [](double r) { return r; });
    auto coarse = make_grid(10, 51, 1.0);
    auto lr = resample(lin, coarse);
    for (std::size_t i = 0; i < coarse->size(); ++i) CHECK(std::abs(lr[i] - (*coarse)[i]) < 1e-14);
    auto fine = make_grid(20, 8192, 1.0);
    auto to = make_grid(20, 1024, 1.0);
    auto r = resample(sample(fine, [](double x) { return std::exp(-x); }), to);
    double err = 0.0;
    for (std::size_t i = 0; i < to->size(); ++i) err = std::max(err, std::abs(r[i] - std::exp(-(*to)[i])));
    CHECK(err < 1e-8);
    CHECK_THROWS_AS(resample(lin, make_grid(20, 51, 1.0)), InvalidArgument);
    auto z = resample(lin, make_grid(20, 51, 1.0), Extrapolation::Zero);
    CHECK(z[50] == 0.0);
}

TEST_CASE("resample preserves nonnegativity") {
    auto g = make_grid(10, 257, 1.0);
    auto rng = Xorshift64Star(3);
    std::vector<double> v(g->size());
    for (auto& x : v) x = rng.uniform() < 0.5 ? 0.0 : rng.uniform();
    auto r = resample(RadialProfile(g, v), make_grid(10, 1001, 1.0));
    for (double x : r.values()) CHECK(x >= 0.0);
}

TEST_CASE("radial laplacian is exact for quadratics") {
    auto g = make_grid(5, 301, 1.01);
    auto u = sample(g, [](double r) { return 3.0 - 2.0 * r * r; });
    auto lap = radial_laplacian(u);
    for (std::size_t i = 0; i + 1 < g->size(); ++i) CHECK(std::abs(lap[i] + 12.0) < 1e-8);
}

TEST_CASE("profile invariants") {
    auto g = make_grid(1, 17, 1.0);
    CHECK_THROWS_AS(RadialProfile(g, std::vector<double>(16, 0.0)), InvalidArgument);
    std::vector<double> bad(17, 0.0);
    bad[3] = std::nan("");
    CHECK_THROWS_AS(RadialProfile(g, bad), InvalidArgument);
}

TEST_CASE("CSV round trip is exact") {
    auto g = default_grid();
    auto u = sample(g, [](double r) { return std::exp(-r) / 3.0; });
    std::stringstream ss;
    write_csv(ss, u);
    auto back = read_csv(ss);
    CHECK(back.values() == u.values());
    CHECK(back.grid().nodes() == g->nodes());
}

TEST_CASE("CSV diagnostics name the line") {
    std::stringstream empty;
    CHECK_THROWS_AS(read_csv(empty), DataFormatError);
    std::stringstream bad("r,value\n0,1\n0.5,abc\n");
    try {
        read_csv(bad);
        FAIL("expected DataFormatError");
    } catch (const DataFormatError& e) {
        CHECK(e.line() == 3);
    }
}
