#include "choquard/verification.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "choquard/errors.hpp"
#include "choquard/prng.hpp"

namespace choquard {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

double rel_dev(double a, double b) {
    const double m = std::max(std::abs(a), std::abs(b));
    return m > 0.0 ? std::abs(a - b) / m : 0.0;
}

RadialProfile power(const RadialProfile& u, double p) {
    std::vector<double> f(u.size());
    for (std::size_t i = 0; i < f.size(); ++i) f[i] = std::pow(std::abs(u[i]), p);
    return RadialProfile(u.grid_ptr(), std::move(f));
}

// Least squares y = a + b x with the coefficient of determination.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    const double slope = sxy / sxx;
    const double r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
    return {slope, r2};
}

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(); }

}  // namespace

void to_json(nlohmann::json& j, const PohozaevReport& r) {
    j = nlohmann::json{{"k1", r.k1},
                       {"k2", r.k2},
                       {"k3", r.k3},
                       {"dev12", r.dev12},
                       {"dev13", r.dev13},
                       {"dev23", r.dev23},
                       {"max_deviation", r.max_deviation},
                       {"pohoz0_residual", r.pohoz0_residual},
                       {"pohoz_residual", r.pohoz_residual}};
}

PohozaevReport pohozaev_report(double p, double grad_sq, double lp_mass, double coulomb) {
    if (p == 5.0 || p == 6.0) throw InvalidArgument("pohozaev_report: p = 5 divides by zero");
    require_exponent(p, "pohozaev_report");
    PohozaevReport r;
    r.k1 = lp_mass / (5.0 - p);
    r.k2 = grad_sq;
    r.k3 = coulomb / (6.0 - p);
    r.dev12 = rel_dev(r.k1, r.k2);
    r.dev13 = rel_dev(r.k1, r.k3);
    r.dev23 = rel_dev(r.k2, r.k3);
    r.max_deviation = std::max({r.dev12, r.dev13, r.dev23});
    r.pohoz0_residual = std::abs(grad_sq + lp_mass - coulomb) / std::abs(coulomb);
    r.pohoz_residual = std::abs(grad_sq - coulomb / (6.0 - p)) / std::abs(grad_sq);
    return r;
}

PohozaevReport pohozaev_report(const GroundState& gs) {
    return pohozaev_report(gs.p, gs.grad_sq, gs.lp_mass, gs.coulomb);
}

void to_json(nlohmann::json& j, const DecayFit& d) {
    j = nlohmann::json{{"exponent", d.exponent},
                       {"r_squared", d.r_squared},
                       {"expected", finite_or_null(d.expected)},
                       {"window", {d.lo, d.hi}},
                       {"samples", d.samples}};
}

DecayFit decay_fit(const RadialProfile& Q, double p, double lo, double hi) {
    require_exponent(p, "decay_fit");
    if (!(lo > 0.0) || !(hi > lo) || hi > Q.grid().r_max() * (1.0 + 1e-12))
        throw InvalidWindow("decay_fit: window must satisfy 0 < lo < hi <= r_max");
    const bool classical = p == 2.0;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < Q.size(); ++i) {
        const double r = Q.r(i);
        if (r < lo || r > hi) continue;
        if (!(Q[i] > 0.0)) throw InvalidWindow("decay_fit: Q must be positive on the window");
        x.push_back(classical ? r : std::log(r));
        y.push_back(classical ? std::log(r * Q[i]) : std::log(Q[i]));
    }
    if (x.size() < 3) throw InvalidWindow("decay_fit: fewer than three nodes in the window");
    const auto [slope, r2] = fit_line(x, y);
    DecayFit d;
    d.exponent = slope;
    d.r_squared = r2;
    d.expected = classical ? std::numeric_limits<double>::quiet_NaN() : -2.0 / (p - 2.0);
    d.lo = lo;
    d.hi = hi;
    d.samples = x.size();
    return d;
}

DecayFit decay_fit(const GroundState& gs, double lo, double hi) { return decay_fit(gs.Q, gs.p, lo, hi); }

DecayFit decay_fit(const GroundState& gs) {
    const double R = gs.Q.grid().r_max();
    return decay_fit(gs, R / 4.0, R / 2.0);
}

void to_json(nlohmann::json& j, const RieszTail& r) {
    j = nlohmann::json{{"r_eval", r.r_eval},
                       {"ratio", r.ratio},
                       {"delta", r.delta},
                       {"sup_inner", r.sup_inner},
                       {"sup_outer", r.sup_outer},
                       {"bounded", r.bounded}};
}

RieszTail riesz_tail_check(const PotentialProfile& A, double p, double r_eval) {
    require_exponent(p, "riesz_tail_check");
    RieszTail t;
    t.r_eval = r_eval;
    t.ratio = tail_ratio(A, r_eval);
    t.delta = 2.0 * (p - 2.0) / (p + 2.0);
    const double R = A.A.grid().r_max();
    bool finite = true;
    for (std::size_t i = 0; i < A.A.size(); ++i) {
        const double r = A.A.r(i);
        if (r < 1.0) continue;
        const double v = A.A[i] * std::pow(r, t.delta);
        if (!std::isfinite(v)) finite = false;
        if (r <= 0.5 * R) t.sup_inner = std::max(t.sup_inner, v);
        if (r >= 0.5 * R) t.sup_outer = std::max(t.sup_outer, v);
    }
    t.bounded = finite && R > 2.0 && t.sup_outer <= t.sup_inner;
    return t;
}

RieszTail riesz_tail_check(const GroundState& gs, double r_eval) { return riesz_tail_check(gs.A, gs.p, r_eval); }

void to_json(nlohmann::json& j, const StraussReport& s) {
    j = nlohmann::json{
        {"exponent", s.exponent}, {"sup", s.sup}, {"r_at_sup", s.r_at_sup}, {"interior", s.interior}};
}

StraussReport strauss_check(const RadialProfile& Q, double p, double grad_norm, double lp_norm_value) {
    require_exponent(p, "strauss_check");
    StraussReport s;
    s.exponent = 4.0 / (p + 2.0);
    const double denom = std::pow(grad_norm, 2.0 / (p + 2.0)) * std::pow(lp_norm_value, p / (p + 2.0));
    const std::size_t n = Q.size();
    std::size_t arg = 0;
    bool finite = std::isfinite(denom) && denom > 0.0;
    std::vector<double> q(n);
    for (std::size_t i = 0; i < n; ++i) {
        q[i] = std::pow(Q.r(i), s.exponent) * Q[i] / denom;
        if (!std::isfinite(q[i])) finite = false;
        if (q[i] > q[arg]) arg = i;
    }
    s.sup = q[arg];
    s.r_at_sup = Q.r(arg);
    // Not rising toward r_max: the last node does not exceed the node at r_max / 2.
    const std::size_t half = Q.grid().locate(0.5 * Q.grid().r_max());
    s.interior = finite && arg + 1 < n && q[n - 1] <= q[half];
    return s;
}

StraussReport strauss_check(const GroundState& gs) {
    return strauss_check(gs.Q, gs.p, std::sqrt(gs.grad_sq), std::pow(gs.lp_mass, 1.0 / gs.p));
}

void to_json(nlohmann::json& j, const UniquenessProbe& u) {
    j = nlohmann::json{{"sup", u.sup},
                       {"r_at_sup", u.r_at_sup},
                       {"r0", u.r0},
                       {"q0", u.q0},
                       {"relative_sup", u.q0 > 0.0 ? u.sup / u.q0 : 0.0},
                       {"both_normalized", u.both_normalized}};
}

UniquenessProbe uniqueness_probe(const GroundState& gs1, const GroundState& gs2, double r0) {
    if (gs1.p != gs2.p) throw InvalidComparison("uniqueness_probe: ground states have different p");
    if (!(r0 >= 0.0)) throw InvalidArgument("uniqueness_probe: r0 must be nonnegative");
    const GridPtr& g = gs1.Q.grid_ptr();
    const double R2 = gs2.Q.grid().r_max();
    const bool same = gs1.Q.grid().same_nodes(gs2.Q.grid());
    std::vector<double> phi(g->size());
    UniquenessProbe u{RadialProfile(g, std::vector<double>(g->size(), 0.0)), 0.0, 0.0, r0, gs1.Q[0], false};
    for (std::size_t i = 0; i < phi.size(); ++i) {
        const double r = (*g)[i];
        double q2, a2;
        if (same) {
            q2 = gs2.Q[i];
            a2 = gs2.A.A[i];
        } else if (r <= R2) {
            q2 = interpolate(gs2.Q, r);
            a2 = interpolate(gs2.A.A, r);
        } else {
            q2 = 0.0;
            a2 = gs2.A.mass / (kFourPi * r);
        }
        phi[i] = std::abs(gs1.Q[i] - q2) + std::abs(gs1.A.A[i] - a2);
        if (r > r0 && phi[i] > u.sup) {
            u.sup = phi[i];
            u.r_at_sup = r;
        }
    }
    u.phi = RadialProfile(g, std::move(phi));
    u.both_normalized = pohozaev_report(gs1).max_deviation < 1e-2 && pohozaev_report(gs2).max_deviation < 1e-2;
    return u;
}

void to_json(nlohmann::json& j, const GNSampling& g) {
    j = nlohmann::json{{"min_ratio", g.min_ratio},
                       {"argmin", g.argmin},
                       {"evaluated", g.evaluated},
                       {"skipped", g.skipped},
                       {"W_ground_state", g.W_ground_state}};
}

RadialProfile gn_test_function(const GridPtr& grid, std::uint64_t seed, std::size_t index) {
    auto rng = Xorshift64Star::derived(seed, index);
    const int bumps = rng.uniform_int(1, 4);
    double c[4], w[4], a[4];
    for (int b = 0; b < bumps; ++b) {
        c[b] = rng.uniform(0.0, 8.0);
        w[b] = rng.uniform(0.3, 3.0);
        a[b] = rng.uniform(0.1, 2.0);
    }
    return sample(grid, [&](double r) {
        double s = 0.0;
        for (int b = 0; b < bumps; ++b) {
            const double z = (r - c[b]) / w[b];
            s += a[b] * std::exp(-z * z);
        }
        return s;
    });
}

GNSampling gn_sampling(const GroundState& gs, std::size_t count, std::uint64_t seed) {
    if (count < 1) throw InvalidArgument("gn_sampling: count must be at least 1");
    GNSampling out;
    out.W_ground_state = weinstein(gs.Q, gs.p).value;
    out.min_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < count; ++k) {
        const RadialProfile u = gn_test_function(gs.Q.grid_ptr(), seed, k);
        double w = 0.0;
        try {
            w = weinstein(u, gs.p).value;
        } catch (const UndefinedFunctional&) {
            ++out.skipped;
            continue;
        }
        ++out.evaluated;
        const double ratio = w / out.W_ground_state;
        if (ratio < out.min_ratio) {
            out.min_ratio = ratio;
            out.argmin = k;
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const VerificationOptions& o) {
    j = nlohmann::json{{"pohozaev_tolerance", o.pohozaev_tolerance},
                       {"residual_tolerance", o.residual_tolerance},
                       {"decay_tolerance", o.decay_tolerance},
                       {"decay_r_squared", o.decay_r_squared},
                       {"riesz_tolerance", o.riesz_tolerance},
                       {"gn_tolerance", o.gn_tolerance},
                       {"norm_tolerance", o.norm_tolerance},
                       {"gn_samples", o.gn_samples},
                       {"seed", o.seed},
                       {"window_lo", o.window_lo ? nlohmann::json(*o.window_lo) : nlohmann::json()},
                       {"window_hi", o.window_hi ? nlohmann::json(*o.window_hi) : nlohmann::json()},
                       {"riesz_radius", o.riesz_radius ? nlohmann::json(*o.riesz_radius) : nlohmann::json()},
                       {"include_decay", o.include_decay}};
}

bool VerificationDocument::all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

const Check* VerificationDocument::find(const std::string& name) const {
    for (const Check& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

void to_json(nlohmann::json& j, const VerificationDocument& d) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Check& c : d.checks)
        arr.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"pass", c.pass}});
    j = nlohmann::json{{"checks", arr}, {"all_pass", d.all_pass()}};
}

VerificationDocument verify_ground_state(const GroundState& gs, const VerificationOptions& opt) {
    VerificationDocument doc;
    const double p = gs.p;
    const double R = gs.Q.grid().r_max();

    doc.checks.push_back(Check{"ground_state_shape", has_ground_state_shape(gs), true, has_ground_state_shape(gs)});
    const double nc = norm_consistency(gs);
    doc.checks.push_back(Check{"norm_consistency", nc, opt.norm_tolerance, nc <= opt.norm_tolerance});

    const PohozaevReport pr = pohozaev_report(gs);
    doc.checks.push_back(
        Check{"pohozaev_deviation", pr, opt.pohozaev_tolerance, pr.max_deviation < opt.pohozaev_tolerance});
    doc.checks.push_back(
        Check{"pohozaev_identity", pr.pohoz0_residual, opt.pohozaev_tolerance, pr.pohoz0_residual < opt.pohozaev_tolerance});
    doc.checks.push_back(
        Check{"pohozaev_virial", pr.pohoz_residual, opt.pohozaev_tolerance, pr.pohoz_residual < opt.pohozaev_tolerance});

    const ResidualReport el = el_residual(gs.Q, gs.A, p);
    doc.checks.push_back(
        Check{"euler_lagrange_residual", el.relative_norm, opt.residual_tolerance, el.relative_norm < opt.residual_tolerance});

    if (opt.include_decay) {
        const double lo = opt.window_lo.value_or(R / 4.0), hi = opt.window_hi.value_or(R / 2.0);
        try {
            const DecayFit d = decay_fit(gs, lo, hi);
            if (p == 2.0) {
                const bool ok = d.exponent < 0.0 && d.r_squared > opt.decay_r_squared;
                doc.checks.push_back(Check{"decay", d, {{"r_squared_min", opt.decay_r_squared}}, ok});
            } else {
                const double err = std::abs(d.exponent - d.expected) / std::abs(d.expected);
                doc.checks.push_back(
                    Check{"decay", d, {{"relative_error_max", opt.decay_tolerance}}, err <= opt.decay_tolerance});
            }
        } catch (const InvalidWindow& e) {
            doc.checks.push_back(Check{"decay", {{"error", e.what()}}, {{"relative_error_max", opt.decay_tolerance}}, false});
        }
    }

    const RieszTail rt = riesz_tail_check(gs, opt.riesz_radius.value_or(R / 2.0));
    doc.checks.push_back(
        Check{"riesz_tail", rt, opt.riesz_tolerance, std::abs(rt.ratio - 1.0) < opt.riesz_tolerance});
    doc.checks.push_back(Check{"riesz_bound", rt, true, rt.bounded});

    const StraussReport st = strauss_check(gs);
    doc.checks.push_back(Check{"strauss", st, true, st.interior});

    if (opt.gn_samples > 0) {
        const GNSampling gn = gn_sampling(gs, opt.gn_samples, opt.seed);
        doc.checks.push_back(
            Check{"gn_optimality", gn, 1.0 - opt.gn_tolerance, gn.min_ratio >= 1.0 - opt.gn_tolerance});
    }
    return doc;
}

VerificationDocument verify_pair(const GroundState& a, const GroundState& b, double phi_tolerance,
                                 double lp_tolerance) {
    VerificationDocument doc;
    const UniquenessProbe u = uniqueness_probe(a, b);
    const bool ok = u.both_normalized && u.sup < phi_tolerance * u.q0;
    doc.checks.push_back(Check{"uniqueness_phi", u, phi_tolerance, ok});
    const double la = std::pow(a.lp_mass, 1.0 / a.p), lb = std::pow(b.lp_mass, 1.0 / b.p);
    const double d = rel_dev(la, lb);
    doc.checks.push_back(Check{"lp_norm_agreement", {{"a", la}, {"b", lb}, {"relative_difference", d}}, lp_tolerance,
                               d < lp_tolerance});
    return doc;
}

GroundState ground_state_from_flow(const NormalizedProfile& np, double p, const std::string& config_hash) {
    // The flow domain ends at the first node where the iterate vanishes:
    // the Dirichlet node, or earlier where an exponential tail underflowed.
    const auto& v = np.v.values();
    std::size_t end = 1;
    while (end < v.size() && v[end - 1] > 0.0) ++end;
    std::vector<double> r(np.v.grid().nodes().begin(), np.v.grid().nodes().begin() + static_cast<std::ptrdiff_t>(end));
    std::vector<double> q(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(end));
    q.back() = 0.0;
    const GridPtr g = end == v.size() ? np.v.grid_ptr() : grid_from_nodes(r);
    RadialProfile Q(g, std::move(q));
    PotentialProfile A = newton_potential(power(Q, p));
    return make_ground_state(p, std::move(Q), std::move(A), "flow", config_hash);
}

}  // namespace choquard
