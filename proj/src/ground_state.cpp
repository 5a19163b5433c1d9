#include "choquard/ground_state.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "choquard/errors.hpp"
#include "choquard/functionals.hpp"

namespace choquard {

namespace {

struct Norms {
    double grad_sq, lp_mass, coulomb;
};

Norms measure(const RadialProfile& Q, double p) {
    std::vector<double> f(Q.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(Q[i], p);
    const RadialProfile qp(Q.grid_ptr(), std::move(f));
    const double g = h1_seminorm(Q);
    return Norms{g * g, integrate_radial(qp), coulomb_form(qp, qp)};
}

}  // namespace

GroundState make_ground_state(double p, RadialProfile Q, PotentialProfile A, std::string provenance,
                             std::string config_hash) {
    require_exponent(p, "make_ground_state");
    require_same_grid(Q, A.A, "make_ground_state");
    if (!(Q[0] > 0.0)) throw InvalidArgument("make_ground_state: Q(0) must be positive");
    for (double v : Q.values())
        if (v < 0.0) throw InvalidArgument("make_ground_state: Q must be nonnegative");
    const Norms n = measure(Q, p);
    GroundState gs{p, std::move(Q), std::move(A), 0.0, n.grad_sq, n.lp_mass, n.coulomb, std::move(provenance),
                   std::move(config_hash)};
    gs.k = (n.lp_mass / (5.0 - p) + n.grad_sq + n.coulomb / (6.0 - p)) / 3.0;
    return gs;
}

bool has_ground_state_shape(const GroundState& gs, double slack) {
    const auto& q = gs.Q.values();
    const double tol = slack * q[0];
    for (std::size_t i = 0; i + 1 < q.size(); ++i) {
        if (!(q[i] > 0.0)) return false;
        if (q[i + 1] > q[i] + tol) return false;
    }
    return true;
}

double norm_consistency(const GroundState& gs) {
    const Norms n = measure(gs.Q, gs.p);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
    return std::max({rel(n.grad_sq, gs.grad_sq), rel(n.lp_mass, gs.lp_mass), rel(n.coulomb, gs.coulomb)});
}

void write_ground_state_csv(std::ostream& os, const GroundState& gs) {
    os << "r,Q,A\n";
    for (std::size_t i = 0; i < gs.Q.size(); ++i)
        os << format_double(gs.Q.r(i)) << ',' << format_double(gs.Q[i]) << ',' << format_double(gs.A.A[i]) << '\n';
}

GroundState read_ground_state_csv(std::istream& is, double p, std::string provenance) {
    require_exponent(p, "read_ground_state_csv");
    CsvTable t = read_csv_table(is);
    if (t.header != std::vector<std::string>{"r", "Q", "A"})
        throw DataFormatError("line 1: expected header r,Q,A", 1);
    if (t.columns[0].size() < 3) throw DataFormatError("need at least three data rows", 0);
    GridPtr g;
    try {
        g = grid_from_nodes(t.columns[0]);
    } catch (const InvalidArgument& e) {
        throw DataFormatError(std::string("invalid r column: ") + e.what(), 0);
    }
    for (std::size_t i = 0; i < t.columns[1].size(); ++i)
        if (t.columns[1][i] < 0.0)
            throw DataFormatError("line " + std::to_string(i + 2) + ": Q must be nonnegative", i + 2);
    if (!(t.columns[1][0] > 0.0)) throw DataFormatError("line 2: Q(0) must be positive", 2);
    RadialProfile Q(g, std::move(t.columns[1]));
    std::vector<double> f(Q.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(Q[i], p);
    const double mass = integrate_radial(RadialProfile(g, std::move(f)));
    PotentialProfile A{RadialProfile(g, std::move(t.columns[2])), mass};
    try {
        return make_ground_state(p, std::move(Q), std::move(A), std::move(provenance), "");
    } catch (const InvalidArgument& e) {
        throw DataFormatError(std::string("not a ground state: ") + e.what(), 0);
    }
}

std::string config_hash(const nlohmann::json& config) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace choquard
