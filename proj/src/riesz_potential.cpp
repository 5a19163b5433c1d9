#include "choquard/riesz_potential.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>

#include "choquard/errors.hpp"

namespace choquard {

std::vector<double> node_kernel_potential(const std::vector<double>& x, const std::vector<double>& w,
                                          const std::vector<double>& kink, const std::vector<double>& f) {
    const std::size_t n = x.size();
    std::vector<double> a(n);
    // outer[i] = Σ_{k>i} w_k s_k f_k
    std::vector<double> outer(n, 0.0);
    for (std::size_t i = n - 1; i-- > 0;) outer[i] = outer[i + 1] + w[i + 1] * x[i + 1] * f[i + 1];
    double inner = 0.0;  // Σ_{k<=i} w_k s_k^2 f_k
    for (std::size_t i = 0; i < n; ++i) {
        inner += w[i] * x[i] * x[i] * f[i];
        a[i] = (i == 0 ? 0.0 : inner / x[i]) + outer[i] + kink[i] * f[i];
    }
    return a;
}

PotentialProfile newton_potential(const RadialProfile& f) {
    for (double v : f.values())
        if (v < 0.0) throw InvalidArgument("newton_potential: source must be nonnegative (pass u^p, not u)");
    const RadialGrid& g = f.grid();
    auto a = node_kernel_potential(g.nodes(), g.weights(), g.kink(), f.values());
    return PotentialProfile{RadialProfile(f.grid_ptr(), std::move(a)), integrate_radial(f)};
}

double coulomb_form(const RadialProfile& f, const RadialProfile& g) {
    require_same_grid(f, g, "coulomb_form");
    for (double v : g.values())
        if (v < 0.0) throw InvalidArgument("coulomb_form: g must be nonnegative");
    const PotentialProfile A = newton_potential(f);
    const auto& w = f.grid().weights();
    const auto& x = f.grid().nodes();
    double s = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * x[i] * x[i] * g[i] * A.A[i];
    return 4.0 * std::numbers::pi * s;
}

double tail_ratio(const PotentialProfile& A, double r_eval) {
    if (!(r_eval > 0.0) || r_eval > A.A.grid().r_max() * (1.0 + 1e-12))
        throw InvalidArgument("tail_ratio: r_eval must lie in (0, r_max]");
    if (!(A.mass > 0.0)) throw UndefinedRatio("tail_ratio: source mass is zero");
    return 4.0 * std::numbers::pi * r_eval * interpolate(A.A, r_eval) / A.mass;
}

void write_potential_csv(std::ostream& os, const PotentialProfile& A) { write_csv(os, A.A, "A"); }

void write_potential_csv(const std::string& path, const PotentialProfile& A) { write_csv(path, A.A, "A"); }

}  // namespace choquard
