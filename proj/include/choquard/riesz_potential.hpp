#pragma once

#include <string>

#include "choquard/radial_core.hpp"

namespace choquard {

// A(r) = I(f)(r) together with the mass 4π ∫ f s^2 ds of its source.
// I carries the 1/(4π) of the Newton kernel, so 4π r A(r) -> mass.
struct PotentialProfile {
    RadialProfile A;
    double mass = 0.0;
};

// A(r_i) = (1/r_i) ∫_0^{r_i} f s^2 ds + ∫_{r_i}^{r_max} f s ds in O(n).
//
// Evaluated as the node sum Σ_k w_k f_k s_k^2 / max(r_i, s_k) plus a
// diagonal correction for the kernel's kink at s = r_i, so that the
// Coulomb form built on it is exactly symmetric.
PotentialProfile newton_potential(const RadialProfile& f);

// D(f, g) = 4π ∫ I(f) g s^2 ds.
double coulomb_form(const RadialProfile& f, const RadialProfile& g);

// 4π r A(r) / mass, with A interpolated at r.
double tail_ratio(const PotentialProfile& A, double r_eval);

void write_potential_csv(std::ostream& os, const PotentialProfile& A);
void write_potential_csv(const std::string& path, const PotentialProfile& A);

// Node-kernel potential with explicit weights and kink coefficients; shared
// with the variational discretization in functionals.
std::vector<double> node_kernel_potential(const std::vector<double>& x, const std::vector<double>& w,
                                          const std::vector<double>& kink, const std::vector<double>& f);

}  // namespace choquard
