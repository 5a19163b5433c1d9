#include "choquard/flow_minimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "choquard/errors.hpp"
#include "choquard/prng.hpp"

namespace choquard {

namespace {

struct Evaluation {
    FunctionalValue w;
    std::vector<double> grad;  // weinstein_gradient density
};

Evaluation evaluate(const RadialProfile& u, double p) {
    Evaluation e;
    e.w = weinstein(u, p);
    e.grad = weinstein_gradient(u, p).values();
    return e;
}

// Gradient rescaled to Euler-Lagrange units: G / (2 a W) with a = p / (6 - p).
double el_scale(const Evaluation& e, double p) {
    return e.w.grad_sq * (6.0 - p) / (2.0 * p * e.w.value);
}

// Solves (S + diag(m)) x = rhs on nodes 0..n-2 (Thomas algorithm).
std::vector<double> solve_preconditioner(const RadialGrid& g, const std::vector<double>& mass,
                                         const std::vector<double>& rhs) {
    const auto& x = g.nodes();
    const std::size_t m = x.size() - 1;
    std::vector<double> f(m);
    for (std::size_t i = 0; i < m; ++i) {
        const double rm = 0.5 * (x[i] + x[i + 1]);
        f[i] = rm * rm / (x[i + 1] - x[i]);
    }
    std::vector<double> diag(m), upper(m, 0.0), y(rhs.begin(), rhs.begin() + static_cast<std::ptrdiff_t>(m));
    for (std::size_t i = 0; i < m; ++i) {
        diag[i] = f[i] + (i > 0 ? f[i - 1] : 0.0) + mass[i];
        if (i + 1 < m) upper[i] = -f[i];
    }
    for (std::size_t i = 1; i < m; ++i) {
        const double w = upper[i - 1] / diag[i - 1];  // lower = upper by symmetry
        diag[i] -= w * upper[i - 1];
        y[i] -= w * y[i - 1];
    }
    std::vector<double> sol(m + 1, 0.0);
    sol[m - 1] = y[m - 1] / diag[m - 1];
    for (std::size_t i = m - 1; i-- > 0;) sol[i] = (y[i] - upper[i] * sol[i + 1]) / diag[i];
    return sol;
}

// Density of the gradient of log λ(u), the length scale normalize_to_EL
// would apply:
// 2 log λ = ((p-2)/2)(log G - log D) - (p-1)(log G - log M) + const.
std::vector<double> scale_gradient(const RadialProfile& u, const Evaluation& e, double p) {
    const std::vector<double> lap = radial_laplacian(u).values();
    const std::vector<double> abar = variational_potential(u, p).values();
    const double G = e.w.grad_sq, M = e.w.lp_mass, D = e.w.coulomb;
    std::vector<double> s(u.size());
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double q = std::pow(u[j], p - 1.0);
        s[j] = 0.5 * (0.5 * p * 2.0 * lap[j] / G - (p - 2.0) * p * abar[j] * q / D + (p - 1.0) * p * q / M);
    }
    return s;
}

// EL-unit gradient with the amplitude ray, and the scale direction when the
// scale is pinned, removed by Gram-Schmidt in the V-weighted product.
double projected_norm(const RadialProfile& u, const Evaluation& e, double p, bool pinned) {
    const auto& vol = u.grid().volumes();
    const std::size_t m = u.size() - 1;  // last node is the Dirichlet node
    const double s = el_scale(e, p);
    const double c1 = (5.0 - p) * e.w.grad_sq / e.w.lp_mass;
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double t = 0.0;
        for (std::size_t j = 0; j < m; ++j) t += vol[j] * a[j] * b[j];
        return t;
    };
    auto remove = [&](std::vector<double>& a, const std::vector<double>& b) {
        const double bb = dot(b, b);
        if (!(bb > 0.0)) return;
        const double t = dot(a, b) / bb;
        for (std::size_t j = 0; j < m; ++j) a[j] -= t * b[j];
    };
    std::vector<double> r(e.grad);
    for (double& x : r) x *= s;
    const std::vector<double>& ray = u.values();
    remove(r, ray);
    if (pinned) {
        std::vector<double> sg = scale_gradient(u, e, p);
        remove(sg, ray);
        remove(r, sg);
    }
    std::vector<double> q(m);
    for (std::size_t j = 0; j < m; ++j) q[j] = c1 * std::pow(u[j], p - 1.0);
    return std::sqrt(dot(r, r) / dot(q, q));
}

void require_seed(const RadialProfile& u) {
    bool nonzero = false;
    for (double v : u.values()) {
        if (!std::isfinite(v) || v < 0.0) throw InvalidArgument("minimize_weinstein: seed must be finite and nonnegative");
        if (v > 0.0) nonzero = true;
    }
    if (!nonzero) throw InvalidArgument("minimize_weinstein: seed is identically zero");
}

}  // namespace

GridPtr default_flow_grid() { return make_grid_with_core(1000.0, 8192, 0.005, 800); }

SeedDescriptor SeedDescriptor::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    SeedDescriptor d;
    if (name == "gaussian") {
        d.shape = SeedShape::Gaussian;
    } else if (name == "tent") {
        d.shape = SeedShape::Tent;
    } else {
        throw InvalidArgument("seed shape must be gaussian:W or tent:W, got '" + text + "'");
    }
    if (colon != std::string::npos) {
        const std::string w = text.substr(colon + 1);
        std::size_t used = 0;
        try {
            d.width = std::stod(w, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != w.size()) throw InvalidArgument("seed shape width is not a number: '" + w + "'");
    }
    if (!(d.width > 0.0)) throw InvalidArgument("seed shape width must be positive");
    return d;
}

std::string SeedDescriptor::describe() const {
    switch (shape) {
        case SeedShape::Gaussian: return "gaussian:" + format_double(width);
        case SeedShape::Tent: return "tent:" + format_double(width);
        case SeedShape::Explicit: return "explicit";
    }
    return "unknown";
}

void FlowConfig::validate() const {
    require_exponent(p, "FlowConfig");
    if (seed_shape.shape != SeedShape::Explicit && !(seed_shape.width > 0.0))
        throw InvalidArgument("FlowConfig: seed width must be positive");
    if (seed_shape.shape == SeedShape::Explicit && !seed_shape.profile)
        throw InvalidArgument("FlowConfig: explicit seed needs a profile");
    if (!(seed_shape.amplitude > 0.0)) throw InvalidArgument("FlowConfig: seed amplitude must be positive");
    if (!(initial_step > 0.0) || !(max_step >= initial_step))
        throw InvalidArgument("FlowConfig: need 0 < initial_step <= max_step");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw InvalidArgument("FlowConfig: backtrack must lie in (0, 1)");
    if (!(growth >= 1.0)) throw InvalidArgument("FlowConfig: growth must be >= 1");
    if (!(armijo > 0.0 && armijo < 1.0)) throw InvalidArgument("FlowConfig: armijo must lie in (0, 1)");
    if (!(tolerance > 0.0)) throw InvalidArgument("FlowConfig: tolerance must be positive");
    if (!(pin_threshold > 0.0)) throw InvalidArgument("FlowConfig: pin_threshold must be positive");
    if (max_iterations < 0) throw InvalidArgument("FlowConfig: max_iterations must be >= 0");
}

const GridPtr& FlowConfig::resolved_grid() const {
    if (grid) return grid;
    static const GridPtr def = default_flow_grid();
    return def;
}

void to_json(nlohmann::json& j, const FlowConfig& c) {
    const auto& g = c.resolved_grid();
    const auto& s = g->scheme();
    j = nlohmann::json{{"p", c.p},
                       {"seed_shape", c.seed_shape.describe()},
                       {"seed_amplitude", c.seed_shape.amplitude},
                       {"grid", {{"r_max", g->r_max()},
                                 {"n", g->size()},
                                 {"stretch", s.stretch},
                                 {"core_spacing", s.core_spacing},
                                 {"core_intervals", s.core_intervals}}},
                       {"initial_step", c.initial_step},
                       {"backtrack", c.backtrack},
                       {"growth", c.growth},
                       {"max_step", c.max_step},
                       {"armijo", c.armijo},
                       {"tolerance", c.tolerance},
                       {"max_iterations", c.max_iterations},
                       {"pin_scale", c.pin_scale},
                       {"pin_threshold", c.pin_threshold},
                       {"seed", c.seed}};
}

void to_json(nlohmann::json& j, const FlowResult& r) {
    j = nlohmann::json{{"iterations", r.iterations},
                       {"final_W", r.W},
                       {"gradient_norm", r.gradient_norm},
                       {"stopping_reason", r.stopping_reason}};
}

RadialProfile seed_profile(const FlowConfig& cfg) {
    const GridPtr& g = cfg.resolved_grid();
    const auto& sd = cfg.seed_shape;
    RadialProfile u = [&] {
        switch (sd.shape) {
            case SeedShape::Gaussian:
                return sample(g, [&](double r) { return sd.amplitude * std::exp(-(r / sd.width) * (r / sd.width)); });
            case SeedShape::Tent:
                return sample(g, [&](double r) { return sd.amplitude * std::max(0.0, 1.0 - r / sd.width); });
            case SeedShape::Explicit: break;
        }
        return resample(*sd.profile, g, Extrapolation::Zero).scaled(sd.amplitude);
    }();
    std::vector<double> v(u.values());
    for (double& x : v) x = std::max(x, 0.0);
    v.back() = 0.0;
    return RadialProfile(g, std::move(v));
}

double projected_gradient_norm(const RadialProfile& u, double p, bool pinned) {
    return projected_norm(u, evaluate(u, p), p, pinned);
}

FlowResult minimize_weinstein(const FlowConfig& cfg) {
    cfg.validate();
    return minimize_weinstein_from(cfg, seed_profile(cfg));
}

FlowResult minimize_weinstein_from(const FlowConfig& cfg, RadialProfile start) {
    cfg.validate();
    const double p = cfg.p;
    if (!start.grid().same_nodes(*cfg.resolved_grid()))
        throw InvalidArgument("minimize_weinstein: start profile is not on the flow grid");
    require_seed(start);
    std::vector<double> u(start.values());
    u.back() = 0.0;
    const GridPtr grid = start.grid_ptr();
    const auto& vol = grid->volumes();
    const std::size_t n = u.size();

    RadialProfile cur(grid, u);
    Evaluation e = evaluate(cur, p);
    // The scale is pinned once the shape has settled, so that a rough seed
    // does not fix a poor length scale.
    bool pinned = false;
    FlowResult res{cur, 0, e.w.value, projected_norm(cur, e, p, false), "", {e.w.value}};
    auto engage = [&] {
        if (cfg.pin_scale && !pinned && res.gradient_norm < cfg.pin_threshold) {
            pinned = true;
            res.gradient_norm = projected_norm(cur, e, p, true);
        }
    };
    engage();
    double tau = cfg.initial_step;
    std::vector<double> mass(n), rhs(n), trial(n);

    while (true) {
        if (res.gradient_norm < cfg.tolerance) {
            res.stopping_reason = "tolerance";
            return res;
        }
        if (res.iterations >= cfg.max_iterations) {
            res.stopping_reason = "max_iterations";
            throw NonConvergence("minimize_weinstein: no convergence after " + std::to_string(res.iterations) +
                                     " iterations (gradient norm " + format_double(res.gradient_norm) + ")",
                                 res);
        }
        const double s = el_scale(e, p);
        const double c1 = (5.0 - p) * e.w.grad_sq / e.w.lp_mass;
        for (std::size_t j = 0; j < n; ++j) {
            mass[j] = c1 * vol[j] * std::pow(u[j], p - 2.0);
            rhs[j] = -s * vol[j] * e.grad[j];
        }
        std::vector<double> d = solve_preconditioner(*grid, mass, rhs);
        if (pinned) {
            // Keep λ(u) fixed to first order by projecting d, in the metric
            // of the preconditioner, onto the tangent of its level set.
            // On a truncated domain W keeps decreasing under concentration;
            // without this the iterate drifts toward the grid scale.
            const std::vector<double> sg = scale_gradient(cur, e, p);
            std::vector<double> srhs(n);
            for (std::size_t j = 0; j < n; ++j) srhs[j] = vol[j] * sg[j];
            const std::vector<double> q = solve_preconditioner(*grid, mass, srhs);
            double sd = 0.0, sq = 0.0;
            for (std::size_t j = 0; j + 1 < n; ++j) {
                sd += srhs[j] * d[j];
                sq += srhs[j] * q[j];
            }
            if (sq > 0.0)
                for (std::size_t j = 0; j + 1 < n; ++j) d[j] -= (sd / sq) * q[j];
        }

        bool accepted = false;
        while (!accepted) {
            double slope = 0.0;  // ∂W · (trial - u) / (4π)
            for (std::size_t j = 0; j + 1 < n; ++j) {
                trial[j] = std::max(u[j] + tau * d[j], 0.0);
                slope += vol[j] * e.grad[j] * (trial[j] - u[j]);
            }
            trial[n - 1] = 0.0;
            RadialProfile cand(grid, trial);
            const bool descent = slope < 0.0;
            double w_new = 0.0;
            bool defined = true;
            try {
                w_new = weinstein(cand, p).value;
            } catch (const UndefinedFunctional&) {
                defined = false;
            }
            if (descent && defined && w_new <= e.w.value + cfg.armijo * 4.0 * std::numbers::pi * slope) {
                u = trial;
                cur = std::move(cand);
                e = evaluate(cur, p);
                accepted = true;
                tau = std::min(tau * cfg.growth, cfg.max_step);
            } else {
                tau *= cfg.backtrack;
                if (tau < 1e-14 * cfg.initial_step) {
                    res.stopping_reason = "line_search";
                    throw NonConvergence("minimize_weinstein: line search stalled at iteration " +
                                             std::to_string(res.iterations) + " (gradient norm " +
                                             format_double(res.gradient_norm) + ")",
                                         res);
                }
            }
        }
        ++res.iterations;
        res.u = cur;
        res.W = e.w.value;
        res.gradient_norm = projected_norm(cur, e, p, pinned);
        engage();
        res.history.push_back(e.w.value);
    }
}

RadialProfile perturbed_seed(const FlowConfig& cfg, std::size_t index) {
    const RadialProfile base = seed_profile(cfg);
    auto rng = Xorshift64Star::derived(cfg.seed, index);
    const std::size_t n = base.size();
    std::vector<double> s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = base[i] * (1.0 + 0.2 * rng.uniform(-1.0, 1.0));
    std::vector<double> t(n);
    t[0] = 0.5 * (s[0] + s[1]);  // mirror at the origin
    for (std::size_t i = 1; i + 1 < n; ++i) t[i] = 0.25 * (s[i - 1] + 2.0 * s[i] + s[i + 1]);
    t[n - 1] = 0.0;
    return RadialProfile(base.grid_ptr(), std::move(t));
}

std::vector<RestartResult> perturbed_restarts(const FlowConfig& cfg, std::size_t count) {
    cfg.validate();
    if (count < 2) throw InvalidArgument("perturbed_restarts: count must be at least 2");
    std::vector<RestartResult> done;
    std::vector<std::size_t> failed;
    for (std::size_t k = 0; k < count; ++k) {
        try {
            FlowResult fr = minimize_weinstein_from(cfg, perturbed_seed(cfg, k));
            NormalizedProfile np = normalize_to_EL(fr.u, cfg.p);
            done.push_back(RestartResult{k, std::move(fr), std::move(np)});
        } catch (const NonConvergence&) {
            failed.push_back(k);
        }
    }
    if (!failed.empty()) {
        std::ostringstream msg;
        msg << "perturbed_restarts: " << failed.size() << " of " << count << " runs did not converge (indices";
        for (std::size_t k : failed) msg << ' ' << k;
        msg << ')';
        throw PartialResult(msg.str(), std::move(done), std::move(failed));
    }
    return done;
}

nlohmann::json flow_manifest(const FlowConfig& cfg, const FlowResult& r) {
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["p"] = cfg.p;
    j["config"] = cfg;
    j["iterations"] = r.iterations;
    j["final_W"] = r.W;
    j["gradient_norm"] = r.gradient_norm;
    j["stopping_reason"] = r.stopping_reason;
    return j;
}

}  // namespace choquard
