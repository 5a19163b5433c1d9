#include <cmath>
#include <numbers>

#include "choquard/errors.hpp"
#include "choquard/functionals.hpp"
#include "choquard/prng.hpp"
#include "choquard/rearrangement.hpp"
#include "choquard/shooting_solver.hpp"
#include "doctest.h"

using namespace choquard;

namespace {
constexpr double kPi = std::numbers::pi;
double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

RadialProfile gaussian(const GridPtr& g, double scale = 1.0) {
    return sample(g, [scale](double r) { return std::exp(-scale * r * r); });
}

double fd_directional(const RadialProfile& q, const RadialProfile& h, double p, double eps) {
    std::vector<double> a(q.values()), b(q.values());
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] += eps * h[i];
        b[i] -= eps * h[i];
    }
    return (weinstein(RadialProfile(q.grid_ptr(), a), p).value - weinstein(RadialProfile(q.grid_ptr(), b), p).value) /
           (2 * eps);
}
}  // namespace

// The variational sums are second-order accurate, so dilation invariance at
// 1e-6 needs h = 5e-4; the default grid (h = 0.01) reaches 1e-4.
GridPtr fine_grid() {
    static const GridPtr g = make_grid(30.0, 60001, 1.0);
    return g;
}

TEST_CASE("Weinstein homogeneity and dilation invariance") {
    auto g = default_grid();
    auto u = gaussian(g);
    CHECK(rel(weinstein(u.scaled(2.0), 3).value, weinstein(u, 3).value) < 1e-12);
    CHECK(rel(weinstein(gaussian(g, 4.0), 3).value, weinstein(u, 3).value) < 1e-4);
    CHECK(rel(weinstein(gaussian(fine_grid(), 4.0), 3).value, weinstein(gaussian(fine_grid()), 3).value) < 1e-6);
}

TEST_CASE("Weinstein invariances on random profiles") {
    auto g = fine_grid();
    for (std::size_t k = 0; k < 20; ++k) {
        auto rng = Xorshift64Star::derived(2024, k);
        const double c = rng.uniform(0.1, 10.0), lambda = rng.uniform(0.5, 2.0), p = rng.uniform(2.0, 4.9);
        const int m = rng.uniform_int(1, 3);
        double ctr[3], w[3], a[3];
        for (int b = 0; b < m; ++b) {
            ctr[b] = rng.uniform(0, 3);
            w[b] = rng.uniform(0.5, 2);
            a[b] = rng.uniform(0.2, 1.5);
        }
        auto f = [&](double r) {
            double t = 0;
            for (int b = 0; b < m; ++b) t += a[b] * std::exp(-std::pow((r - ctr[b]) / w[b], 2));
            return t;
        };
        auto u = sample(g, f);
        auto ul = sample(g, [&](double r) { return f(lambda * r); });
        const double W = weinstein(u, p).value;
        CHECK(rel(weinstein(u.scaled(c), p).value, W) < 1e-12);
        CHECK(rel(weinstein(ul, p).value, W) < 1e-6);
    }
}

TEST_CASE("Gaussian oracle for W_2") {
    // Closed forms: (3π/2)√(π/2) = 5.90603, π^{3/2}/(2√2) = 1.96870 and
    // D(e^{-2r²}, e^{-2r²}) = π^{3/2}/16 = 0.348019.
    auto v = weinstein(gaussian(default_grid()), 2);
    CHECK(rel(v.grad_sq, 1.5 * kPi * std::sqrt(kPi / 2)) < 1e-4);
    CHECK(rel(v.lp_mass, std::pow(kPi, 1.5) / (2 * std::sqrt(2.0))) < 1e-4);
    CHECK(rel(v.coulomb, std::pow(kPi, 1.5) / 16) < 1e-4);
    CHECK(rel(v.coulomb, 0.3480) < 1e-3);
    CHECK(rel(v.value, 19.3) < 5e-3);
    const double formula = std::sqrt(v.grad_sq) * std::pow(v.lp_mass, 1.5) / v.coulomb;
    CHECK(rel(v.value, formula) < 1e-12);
}

TEST_CASE("Weinstein of zero is undefined") {
    auto g = default_grid();
    CHECK_THROWS_AS(weinstein(sample(g, [](double) { return 0.0; }), 3), UndefinedFunctional);
}

TEST_CASE("FunctionalValue JSON keys") {
    nlohmann::json j = weinstein(gaussian(default_grid()), 3);
    for (const char* key : {"value", "grad_sq", "lp_mass", "coulomb"}) CHECK(j.contains(key));
}

TEST_CASE("Hamiltonian") {
    auto g = default_grid();
    CHECK(hamiltonian_p(sample(g, [](double) { return 0.0; }), 3).value == 0.0);
    auto tent = [](double r) { return std::max(0.0, 1.0 - r); };
    auto h = hamiltonian_p(sample(g, tent), 2);
    CHECK(h.value == 0.5 * h.grad_sq - h.coulomb / 4.0);
    // Independent oracle: Simpson quadrature at n = 2^16 + 1.
    auto fine = make_grid(2.0, 65537, 1.0);
    auto t = sample(fine, tent);
    std::vector<double> sq(t.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = t[i] * t[i];
    const RadialProfile f(fine, sq);
    const double oracle = 0.5 * (4 * kPi / 3) - 0.25 * coulomb_form(f, f);
    CHECK(rel(h.value, oracle) < 1e-4);
}

TEST_CASE("substitution psi to u") {
    auto g = default_grid();
    auto psi = sample(g, [](double r) { return std::exp(-r) * (2 + std::cos(r)); });
    CHECK(substitute_psi(psi, 2).values() == psi.values());
    auto chi = indicator(g, 0, 1);
    auto u = substitute_psi(chi, 3.7);
    for (std::size_t i = 0; i < u.size(); ++i)
        if (chi[i] == 0.0 || chi[i] == 1.0) CHECK(u[i] == chi[i]);
    auto e = substitute_psi(gaussian(g), 4);
    for (std::size_t i = 0; i < e.size(); ++i) CHECK(std::abs(e[i] - std::exp(-0.5 * e.r(i) * e.r(i))) < 1e-14);
    CHECK(rel(std::pow(lp_norm(gaussian(g), 2), 2), std::pow(lp_norm(e, 4), 4)) < 1e-10);
    CHECK_THROWS_AS(substitute_psi(sample(g, [](double r) { return std::cos(r); }), 3), InvalidArgument);
}

TEST_CASE("substitution preserves mass on random profiles") {
    auto g = default_grid();
    for (std::size_t k = 0; k < 10; ++k) {
        const double p = 2.0 + 0.29 * k;
        auto psi = random_bumps(g, 5, k);
        CHECK(rel(std::pow(lp_norm(psi, 2), 2), std::pow(lp_norm(substitute_psi(psi, p), p), p)) < 1e-10);
    }
}

TEST_CASE("EL residual of a non-solution") {
    auto g = default_grid();
    auto q = gaussian(g);
    std::vector<double> qp(q.size());
    for (std::size_t i = 0; i < qp.size(); ++i) qp[i] = std::pow(q[i], 3);
    auto res = el_residual(q, newton_potential(RadialProfile(g, qp)), 3);
    CHECK(res.relative_norm > 0.1);
    CHECK_THROWS_AS(el_residual(sample(g, [](double) { return 0.0; }), newton_potential(RadialProfile(g, qp)), 3),
                    InvalidArgument);
    CHECK_THROWS_AS(el_residual(gaussian(make_grid(10, 100, 1.0)), newton_potential(RadialProfile(g, qp)), 3),
                    InvalidArgument);
}

TEST_CASE("gradient against central differences on the tent") {
    auto g = default_grid();
    auto q = sample(g, [](double r) { return std::max(0.0, 1.0 - r); });
    auto h = gaussian(g);
    const double analytic = variational_pairing(weinstein_gradient(q, 3), h);
    CHECK(rel(fd_directional(q, h, 3, 1e-5), analytic) < 1e-5);
}

TEST_CASE("gradient against central differences on random pairs") {
    auto g = default_grid();
    for (std::size_t k = 0; k < 10; ++k) {
        auto rng = Xorshift64Star::derived(9, k);
        const double p = rng.uniform(2.0, 4.9);
        auto q = random_bumps(g, 100, k);
        auto h = random_bumps(g, 200, k);
        const double analytic = variational_pairing(weinstein_gradient(q, p), h);
        CHECK(rel(fd_directional(q, h, p, 1e-5), analytic) < 1e-5);
    }
}

TEST_CASE("gradient scales inversely with the profile") {
    auto g = default_grid();
    auto q = random_bumps(g, 1, 3);
    auto g1 = weinstein_gradient(q, 3.2);
    auto g2 = weinstein_gradient(q.scaled(4.0), 3.2);
    double scale = 0.0;
    for (double x : g1.values()) scale = std::max(scale, std::abs(x));
    for (std::size_t i = 0; i < g1.size(); ++i) CHECK(std::abs(4.0 * g2[i] - g1[i]) <= 1e-12 * scale);
}

TEST_CASE("normalize_to_EL") {
    auto g = default_grid();
    ShootingConfig cfg;
    cfg.p = 3;
    auto gs = *solve_shooting(cfg, g).ground_state;
    auto n = normalize_to_EL(gs.Q, 3);
    CHECK(std::abs(n.mu - 1.0) < 1e-3);
    CHECK(std::abs(n.lambda - 1.0) < 1e-3);

    auto u = random_bumps(g, 77, 1);
    auto a = normalize_to_EL(u, 3.5), b = normalize_to_EL(u.scaled(2.0), 3.5);
    auto br = resample(b.v, a.v.grid_ptr(), Extrapolation::Zero);
    for (std::size_t i = 0; i < a.v.size(); ++i) CHECK(std::abs(br[i] - a.v[i]) <= 1e-6 * a.v[0]);
    CHECK_THROWS_AS(normalize_to_EL(sample(g, [](double) { return 0.0; }), 3), std::exception);
}
