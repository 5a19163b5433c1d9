#include "choquard/functionals.hpp"

#include <cmath>
#include "json.hpp"
#include <numbers>
#include <string>

#include "choquard/errors.hpp"

namespace choquard {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

struct Cells {
    std::vector<double> first;  // ∫ s ds over the cell
    std::vector<double> self;   // ∫∫ s^2 t^2 / max(s, t) over cell x cell
};

Cells cell_moments(const RadialGrid& g) {
    const auto& x = g.nodes();
    const std::size_t n = x.size();
    Cells c{std::vector<double>(n), std::vector<double>(n)};
    double a = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double b = i + 1 < n ? 0.5 * (x[i] + x[i + 1]) : x[i];
        const double a2 = a * a, b2 = b * b, a3 = a2 * a;
        c.first[i] = 0.5 * (b2 - a2);
        c.self[i] = (2.0 / 3.0) * ((b2 * b2 * b - a2 * a3) / 5.0 - 0.5 * a3 * (b2 - a2));
        a = b;
    }
    return c;
}

std::vector<double> abs_pow(const RadialProfile& u, double p) {
    std::vector<double> f(u.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(std::abs(u[i]), p);
    return f;
}

// Ā_i for the source f; see variational_potential.
std::vector<double> cell_potential(const RadialGrid& g, const std::vector<double>& f) {
    const auto& vol = g.volumes();
    const Cells c = cell_moments(g);
    const std::size_t n = f.size();
    std::vector<double> outer(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) outer[i] = outer[i + 1] + c.first[i + 1] * f[i + 1];
    std::vector<double> a(n);
    double inner = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = (f[i] * c.self[i] + c.first[i] * inner) / vol[i] + outer[i];
        inner += vol[i] * f[i];
    }
    return a;
}

double weighted_sum(const std::vector<double>& w, const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * a[i] * b[i];
    return s;
}

std::vector<double> grad_sq_gradient(const RadialProfile& u) {
    // ∂G/∂u_j / (4π V_j) = -2 Lap(u)_j
    RadialProfile lap = radial_laplacian(u);
    std::vector<double> g(lap.values());
    for (double& v : g) v *= -2.0;
    return g;
}

bool all_zero(const RadialProfile& u) {
    for (double v : u.values())
        if (v != 0.0) return false;
    return true;
}

}  // namespace

void require_exponent(double p, const char* who) {
    if (!(p >= 2.0 && p < 5.0)) throw InvalidArgument(std::string(who) + ": p must lie in [2, 5)");
}

void to_json(nlohmann::json& j, const FunctionalValue& v) {
    j = nlohmann::json{{"value", v.value}, {"grad_sq", v.grad_sq}, {"lp_mass", v.lp_mass}, {"coulomb", v.coulomb}};
}

double variational_grad_sq(const RadialProfile& u) {
    const auto& x = u.grid().nodes();
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < u.size(); ++i) {
        const double rm = 0.5 * (x[i] + x[i + 1]);
        const double d = u[i + 1] - u[i];
        s += rm * rm * d * d / (x[i + 1] - x[i]);
    }
    return kFourPi * s;
}

double variational_lp_mass(const RadialProfile& u, double p) {
    const auto f = abs_pow(u, p);
    double s = 0.0;
    const auto& vol = u.grid().volumes();
    for (std::size_t i = 0; i < f.size(); ++i) s += vol[i] * f[i];
    return kFourPi * s;
}

double variational_coulomb(const RadialProfile& u, double p) {
    const auto f = abs_pow(u, p);
    const auto a = cell_potential(u.grid(), f);
    return kFourPi * weighted_sum(u.grid().volumes(), f, a);
}

RadialProfile variational_potential(const RadialProfile& u, double p) {
    return RadialProfile(u.grid_ptr(), cell_potential(u.grid(), abs_pow(u, p)));
}

double variational_pairing(const RadialProfile& g, const RadialProfile& h) {
    require_same_grid(g, h, "variational_pairing");
    return kFourPi * weighted_sum(g.grid().volumes(), g.values(), h.values());
}

FunctionalValue weinstein(const RadialProfile& u, double p) {
    require_exponent(p, "weinstein");
    FunctionalValue v;
    v.grad_sq = variational_grad_sq(u);
    v.lp_mass = variational_lp_mass(u, p);
    v.coulomb = variational_coulomb(u, p);
    if (all_zero(u) || !(v.coulomb > 0.0) || !(v.grad_sq > 0.0) || !(v.lp_mass > 0.0))
        throw UndefinedFunctional("weinstein: W_p needs u != 0 with positive norms and D > 0");
    const double a = p / (6.0 - p);
    const double b = 2.0 * (5.0 - p) / (6.0 - p);
    v.value = std::exp(a * std::log(v.grad_sq) + b * std::log(v.lp_mass) - std::log(v.coulomb));
    return v;
}

FunctionalValue hamiltonian_p(const RadialProfile& u, double p) {
    require_exponent(p, "hamiltonian_p");
    FunctionalValue v;
    v.grad_sq = variational_grad_sq(u);
    v.lp_mass = variational_lp_mass(u, p);
    v.coulomb = variational_coulomb(u, p);
    v.value = 0.5 * v.grad_sq - v.coulomb / (2.0 * p);
    return v;
}

RadialProfile substitute_psi(const RadialProfile& psi, double p) {
    require_exponent(p, "substitute_psi");
    std::vector<double> u(psi.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        if (psi[i] < 0.0) throw InvalidArgument("substitute_psi: psi must be nonnegative");
        u[i] = std::pow(psi[i], 2.0 / p);
    }
    return RadialProfile(psi.grid_ptr(), std::move(u));
}

ResidualReport el_residual(const RadialProfile& Q, const PotentialProfile& A, double p) {
    require_exponent(p, "el_residual");
    require_same_grid(Q, A.A, "el_residual");
    if (!(Q[0] > 0.0)) throw InvalidArgument("el_residual: Q must be positive at the origin");
    for (double v : Q.values())
        if (v < 0.0) throw InvalidArgument("el_residual: Q must be nonnegative");
    const RadialProfile lap = radial_laplacian(Q);
    const auto& vol = Q.grid().volumes();
    const std::size_t n = Q.size();
    std::vector<double> res(n, 0.0);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double q = std::pow(Q[i], p - 1.0);
        res[i] = -lap[i] + q * (1.0 - A.A[i]);
        num += vol[i] * res[i] * res[i];
        den += vol[i] * q * q;
    }
    return ResidualReport{RadialProfile(Q.grid_ptr(), std::move(res)), std::sqrt(num / den)};
}

RadialProfile weinstein_gradient(const RadialProfile& Q, double p) {
    const FunctionalValue w = weinstein(Q, p);
    const auto f = abs_pow(Q, p);
    const auto abar = cell_potential(Q.grid(), f);
    const auto dg = grad_sq_gradient(Q);
    const double a = p / (6.0 - p);
    const double b = 2.0 * (5.0 - p) / (6.0 - p);
    std::vector<double> g(Q.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        const double u = Q[j];
        const double up1 = std::copysign(std::pow(std::abs(u), p - 1.0), u);
        g[j] = w.value * (a * dg[j] / w.grad_sq + b * p * up1 / w.lp_mass - 2.0 * p * abar[j] * up1 / w.coulomb);
    }
    return RadialProfile(Q.grid_ptr(), std::move(g));
}

NormalizedProfile normalize_to_EL(const RadialProfile& u, double p) {
    require_exponent(p, "normalize_to_EL");
    const double G = variational_grad_sq(u);
    const double M = variational_lp_mass(u, p);
    const double D = variational_coulomb(u, p);
    if (!(M > 0.0) || !(D > 0.0)) throw InvalidArgument("normalize_to_EL: profile has vanishing norms");
    const double c1 = (5.0 - p) * G / M;
    const double c2 = (6.0 - p) * G / D;
    if (!(c1 > 0.0) || !(c2 > 0.0)) throw InvalidArgument("normalize_to_EL: multipliers must be positive");
    const double mu = std::sqrt(c2) / c1;
    const double lambda = std::sqrt(std::pow(mu, p - 2.0) / c1);
    std::vector<double> v(u.values());
    for (double& x : v) x *= mu;
    return NormalizedProfile{RadialProfile(u.grid().scaled(1.0 / lambda), std::move(v)), mu, lambda, c1, c2};
}

}  // namespace choquard
