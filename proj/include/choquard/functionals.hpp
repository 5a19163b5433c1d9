#pragma once

#include "json.hpp"

#include "choquard/radial_core.hpp"
#include "choquard/riesz_potential.hpp"

namespace choquard {

// Discrete variational energies (finite-volume form):
//   G = 4π Σ r_{i+1/2}^2 (u_{i+1} - u_i)^2 / h_i
//   M = 4π Σ V_i |u_i|^p
//   D = 4π Σ_{i,k} |u_i|^p |u_k|^p ∫_{cell i} ∫_{cell k} s^2 t^2 / max(s, t)
// with V_i the dual-cell volumes. D is the exact Coulomb energy of the
// piecewise-constant cell extension of |u|^p, hence symmetric and positive.
// The first variation of these sums, divided by 4π V_j, is the gradient
// density returned by weinstein_gradient.
struct FunctionalValue {
    double value = 0.0;
    double grad_sq = 0.0;
    double lp_mass = 0.0;
    double coulomb = 0.0;
};

void to_json(nlohmann::json& j, const FunctionalValue& v);

double variational_grad_sq(const RadialProfile& u);
double variational_lp_mass(const RadialProfile& u, double p);
double variational_coulomb(const RadialProfile& u, double p);

// Cell-averaged potential of |u|^p; 4π Σ V_i |u_i|^p Ā_i equals the
// variational Coulomb energy.
RadialProfile variational_potential(const RadialProfile& u, double p);

// 4π Σ V_i g_i h_i, the pairing that weinstein_gradient is a density for.
double variational_pairing(const RadialProfile& g, const RadialProfile& h);

// W_p(u) = G^{p/(6-p)} M^{2(5-p)/(6-p)} / D.
FunctionalValue weinstein(const RadialProfile& u, double p);

// ½ G - D / (2p); p = 2 is the classical Hartree energy.
FunctionalValue hamiltonian_p(const RadialProfile& u, double p);

// u = ψ^{2/p}.
RadialProfile substitute_psi(const RadialProfile& psi, double p);

struct ResidualReport {
    RadialProfile residual;
    // ‖residual‖ / ‖Q^{p-1}‖ in the 4π s^2 ds measure, last node excluded.
    double relative_norm = 0.0;
};

// -r^{-2}(r^2 Q')' + Q^{p-1}(1 - A), Laplacian in finite-volume form.
ResidualReport el_residual(const RadialProfile& Q, const PotentialProfile& A, double p);

RadialProfile weinstein_gradient(const RadialProfile& Q, double p);

struct NormalizedProfile {
    RadialProfile v;
    double mu = 1.0;
    double lambda = 1.0;
    double c1 = 1.0;
    double c2 = 1.0;
};

// v(r) = μ u(λ r) with μ = √c2 / c1, λ^2 = μ^{p-2} / c1, where
// c1 = (5-p) G / M and c2 = (6-p) G / D. The result lives on the grid
// r_i / λ so that no interpolation error enters.
NormalizedProfile normalize_to_EL(const RadialProfile& u, double p);

void require_exponent(double p, const char* who);

}  // namespace choquard
