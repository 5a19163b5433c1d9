#include "choquard/shooting_solver.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>

#include "choquard/dopri5.hpp"
#include "choquard/errors.hpp"
#include "choquard/functionals.hpp"

namespace choquard {

std::string to_string(Classification c) {
    switch (c) {
        case Classification::Crossing:
            return "crossing";
        case Classification::Escaping:
            return "escaping";
        case Classification::Undetermined:
            break;
    }
    return "undetermined";
}

void ShootingConfig::validate() const {
    require_exponent(p, "ShootingConfig");
    if (!(q0 >= 0.0) || !std::isfinite(q0)) throw InvalidArgument("ShootingConfig: q0 must be nonnegative");
    if (!(b_lo < b_hi)) throw InvalidArgument("ShootingConfig: b bracket must be a nonempty interval");
    if (!(r_max > series_radius)) throw InvalidArgument("ShootingConfig: r_max must exceed the series radius");
    if (!(atol > 0.0 && atol <= 1e-2) || !(rtol > 0.0 && rtol <= 1e-2))
        throw InvalidArgument("ShootingConfig: tolerances must lie in (0, 1e-2]");
    if (!(escape_factor > 1.0)) throw InvalidArgument("ShootingConfig: escape factor must exceed 1");
    if (max_bisection < 1 || max_expansions < 0) throw InvalidArgument("ShootingConfig: iteration limits");
    if (!(series_radius > 0.0)) throw InvalidArgument("ShootingConfig: series radius must be positive");
    if (!(trust_tolerance > 0.0)) throw InvalidArgument("ShootingConfig: trust tolerance must be positive");
    if (!(profile_radius > 0.0)) throw InvalidArgument("ShootingConfig: profile radius must be positive");
}

void to_json(nlohmann::json& j, const ShootingConfig& c) {
    j = nlohmann::json{{"p", c.p},
                       {"q0", c.q0},
                       {"b_bracket", {c.b_lo, c.b_hi}},
                       {"r_max", c.r_max},
                       {"atol", c.atol},
                       {"rtol", c.rtol},
                       {"max_bisection", c.max_bisection},
                       {"b_tolerance", c.b_tolerance},
                       {"max_expansions", c.max_expansions},
                       {"crossing_level", c.crossing_level},
                       {"escape_factor", c.escape_factor},
                       {"escape_threshold", c.escape_threshold},
                       {"series_radius", c.series_radius},
                       {"trust_tolerance", c.trust_tolerance},
                       {"profile_radius", c.profile_radius}};
}

void from_json(const nlohmann::json& j, ShootingConfig& c) {
    c = ShootingConfig{};
    c.p = j.at("p").get<double>();
    c.q0 = j.value("q0", c.q0);
    if (j.contains("b_bracket")) {
        c.b_lo = j["b_bracket"].at(0).get<double>();
        c.b_hi = j["b_bracket"].at(1).get<double>();
    }
    c.r_max = j.value("r_max", c.r_max);
    c.atol = j.value("atol", c.atol);
    c.rtol = j.value("rtol", c.rtol);
    c.max_bisection = j.value("max_bisection", c.max_bisection);
    c.b_tolerance = j.value("b_tolerance", c.b_tolerance);
    c.max_expansions = j.value("max_expansions", c.max_expansions);
    c.crossing_level = j.value("crossing_level", c.crossing_level);
    c.escape_factor = j.value("escape_factor", c.escape_factor);
    c.escape_threshold = j.value("escape_threshold", c.escape_threshold);
    c.series_radius = j.value("series_radius", c.series_radius);
    c.trust_tolerance = j.value("trust_tolerance", c.trust_tolerance);
    c.profile_radius = j.value("profile_radius", c.profile_radius);
}

namespace {

// Quintic Hermite on [x0, x1] from values, slopes and second derivatives.
double quintic(double x0, double x1, double y0, double y1, double d0, double d1, double s0, double s1, double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
    const double h0 = 1 - 10 * t3 + 15 * t4 - 6 * t5;
    const double h1 = t - 6 * t3 + 8 * t4 - 3 * t5;
    const double h2 = 0.5 * (t2 - 3 * t3 + 3 * t4 - t5);
    const double h3 = 10 * t3 - 15 * t4 + 6 * t5;
    const double h4 = -4 * t3 + 7 * t4 - 3 * t5;
    const double h5 = 0.5 * (t3 - 2 * t4 + t5);
    return h0 * y0 + h3 * y1 + h * (h1 * d0 + h4 * d1) + h * h * (h2 * s0 + h5 * s1);
}

double quintic_slope(double x0, double x1, double y0, double y1, double d0, double d1, double s0, double s1,
                     double x) {
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    const double g0 = -30 * t2 + 60 * t3 - 30 * t4;
    const double g1 = 1 - 18 * t2 + 32 * t3 - 15 * t4;
    const double g2 = 0.5 * (2 * t - 9 * t2 + 12 * t3 - 5 * t4);
    const double g4 = -12 * t2 + 28 * t3 - 15 * t4;
    const double g5 = 0.5 * (3 * t2 - 8 * t3 + 5 * t4);
    return g0 * (y0 - y1) / h + g1 * d0 + g4 * d1 + h * (g2 * s0 + g5 * s1);
}

std::size_t segment(const std::vector<double>& r, double x) {
    if (r.size() < 2) throw InvalidTrajectory("trajectory has fewer than two samples");
    if (x < r.front() || x > r.back() * (1.0 + 1e-12)) throw InvalidTrajectory("radius outside trajectory");
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t i = it == r.end() ? r.size() - 1 : static_cast<std::size_t>(it - r.begin());
    return std::max<std::size_t>(i, 1) - 1;
}

double eval(const std::vector<double>& r, const std::vector<double>& y, const std::vector<double>& dy,
            const std::vector<double>& ddy, double x) {
    const std::size_t i = segment(r, x);
    return quintic(r[i], r[i + 1], y[i], y[i + 1], dy[i], dy[i + 1], ddy[i], ddy[i + 1], std::min(x, r.back()));
}

double eval_slope(const std::vector<double>& r, const std::vector<double>& y, const std::vector<double>& dy,
                  const std::vector<double>& ddy, double x) {
    const std::size_t i = segment(r, x);
    return quintic_slope(r[i], r[i + 1], y[i], y[i + 1], dy[i], dy[i + 1], ddy[i], ddy[i + 1],
                         std::min(x, r.back()));
}

bool escaping(double Q, double Qp, const ShootingConfig& cfg) {
    return (Qp > 0.0 && Q > cfg.escape_threshold * cfg.q0) || Q > cfg.escape_factor * cfg.q0;
}

using State = std::array<double, 4>;  // Q, Q', B, B'

struct System {
    double p;
    void operator()(double r, const State& y, State& dy) const {
        const double q = std::max(y[0], 0.0);
        const double qp1 = std::pow(q, p - 1.0);
        dy[0] = y[1];
        dy[1] = qp1 * y[2] - 2.0 * y[1] / r;
        dy[2] = y[3];
        dy[3] = qp1 * q - 2.0 * y[3] / r;
    }
};

void push(Trajectory& t, double r, const State& y, const State& dy) {
    t.r.push_back(r);
    t.Q.push_back(y[0]);
    t.Qp.push_back(y[1]);
    t.B.push_back(y[2]);
    t.Bp.push_back(y[3]);
    t.Qpp.push_back(dy[1]);
    t.Bpp.push_back(dy[3]);
}

// First radius where the bracket trajectories disagree beyond tolerance.
double trust_radius(const Trajectory& mid, const Trajectory& lo, const Trajectory& hi, double tol) {
    const double limit = std::min({mid.r.back(), lo.r.back(), hi.r.back()});
    double last = 0.0;
    for (std::size_t i = 0; i < mid.size() && mid.r[i] <= limit; ++i) {
        const double x = mid.r[i];
        const double q = mid.Q[i];
        if (!(q > 0.0) || mid.Qp[i] > 0.0) break;
        const double spread = std::abs(lo.Q_at(x) - hi.Q_at(x));
        if (spread > tol * q) break;
        last = x;
    }
    return last;
}

struct Tail {
    std::vector<double> r, L, y;  // ascending, L = ln Q, y = Q'/Q
};

// Backward integration of the tail in (ln Q, Q'/Q) from R_far to r_m.
Tail integrate_tail(double p, double B_inf, double r_m, double B_m, double R_far, double L_far, double y_far,
                    double rtol, double L_limit) {
    const double c = (B_inf - B_m) * r_m;
    auto rhs = [&](double r, const std::array<double, 2>& s, std::array<double, 2>& ds) {
        const double B = B_inf - c / r;
        ds[0] = s[1];
        ds[1] = std::exp((p - 2.0) * s[0]) * B - s[1] * s[1] - 2.0 * s[1] / r;
    };
    std::array<double, 2> s{L_far, y_far};
    Tail t;
    t.r.push_back(R_far);
    t.L.push_back(s[0]);
    t.y.push_back(s[1]);
    StepControl ctl;
    ctl.atol = 1e-12;
    ctl.rtol = rtol;
    ctl.initial_step = 1e-3 * R_far;
    dopri5<2>(rhs, R_far, r_m, s, ctl, [&](double r, const std::array<double, 2>& st, const std::array<double, 2>&) {
        if (!std::isfinite(st[0]) || !std::isfinite(st[1]) || st[0] > L_limit)
            throw NumericalFailure("tail integration diverged", r);
        t.r.push_back(r);
        t.L.push_back(st[0]);
        t.y.push_back(st[1]);
        return true;
    });
    std::reverse(t.r.begin(), t.r.end());
    std::reverse(t.L.begin(), t.L.end());
    std::reverse(t.y.begin(), t.y.end());
    return t;
}

double asymptotic_slope(double p, double B_inf, double c, double R) {
    if (p == 2.0) {
        const double kappa = std::sqrt(B_inf);
        return -kappa + (c / (2.0 * kappa) - 1.0) / R;
    }
    if (p < 4.0) return -2.0 / (p - 2.0) / R;
    if (p == 4.0) return -1.0 / R - 1.0 / (2.0 * R * std::log(R));
    return -1.0 / R;
}

// Replaces the raw trajectory beyond r_m by the decaying tail solution
// that matches Q(r_m); B follows the exterior Laplace solution.
Trajectory stitch_tail(const Trajectory& raw, double p, double B_inf, double r_m, double R_need, double rtol,
                       double& slope_mismatch) {
    const double Q_m = raw.Q_at(r_m);
    const double B_m = raw.B_at(r_m);
    const double target = std::log(Q_m);
    // Exponential decay forgets the far data quickly; power laws need room.
    const double R_far = p == 2.0 ? std::max(R_need, r_m) + 50.0 / std::sqrt(B_inf) : 10.0 * std::max(R_need, r_m);
    const double c = (B_inf - B_m) * r_m;
    const double y_far = asymptotic_slope(p, B_inf, c, R_far);
    const double L_limit = target + 60.0;
    Tail tail;
    if (p == 2.0) {
        const double guess = target + y_far * (R_far - r_m);
        tail = integrate_tail(p, B_inf, r_m, B_m, R_far, guess, y_far, rtol, guess + 2.0 * (target - guess) + 60.0);
        const double shift = target - tail.L.front();
        for (double& l : tail.L) l += shift;
    } else {
        double lo = target - 400.0, hi = target + 50.0;
        bool have = false;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (mid == lo || mid == hi) break;
            Tail t;
            bool ok = true;
            try {
                t = integrate_tail(p, B_inf, r_m, B_m, R_far, mid, y_far, rtol, L_limit);
            } catch (const NumericalFailure&) {
                ok = false;
            }
            if (ok && t.L.front() <= target) {
                lo = mid;
            } else {
                hi = mid;
            }
            if (ok) {
                tail = std::move(t);
                have = true;
                if (std::abs(tail.L.front() - target) < 1e-13) break;
            }
        }
        if (!have) throw InvalidTrajectory("tail continuation failed to match the trajectory");
        const double shift = target - tail.L.front();
        if (std::abs(shift) > 1e-8) throw InvalidTrajectory("tail continuation did not converge");
    }
    const double y_raw = raw.Qp_at(r_m) / Q_m;
    slope_mismatch = std::abs(tail.y.front() - y_raw) / std::abs(tail.y.front());

    Trajectory out;
    for (std::size_t i = 0; i < raw.size() && raw.r[i] < r_m; ++i) {
        out.r.push_back(raw.r[i]);
        out.Q.push_back(raw.Q[i]);
        out.Qp.push_back(raw.Qp[i]);
        out.B.push_back(raw.B[i]);
        out.Bp.push_back(raw.Bp[i]);
        out.Qpp.push_back(raw.Qpp[i]);
        out.Bpp.push_back(raw.Bpp[i]);
    }
    for (std::size_t i = 0; i < tail.r.size(); ++i) {
        const double r = tail.r[i];
        const double q = std::exp(tail.L[i]);
        out.r.push_back(r);
        out.Q.push_back(q);
        out.Qp.push_back(tail.y[i] * q);
        const double B = B_inf - c / r;
        out.B.push_back(B);
        out.Bp.push_back(c / (r * r));
        out.Qpp.push_back(std::pow(q, p - 1.0) * B - 2.0 * tail.y[i] * q / r);
        out.Bpp.push_back(-2.0 * c / (r * r * r));
    }
    out.termination_radius = out.r.back();
    out.classification = Classification::Undetermined;
    return out;
}

}  // namespace

double Trajectory::Q_at(double x) const { return eval(r, Q, Qp, Qpp, x); }
double Trajectory::B_at(double x) const { return eval(r, B, Bp, Bpp, x); }
double Trajectory::Qp_at(double x) const { return eval_slope(r, Q, Qp, Qpp, x); }
double Trajectory::Bp_at(double x) const { return eval_slope(r, B, Bp, Bpp, x); }

Trajectory integrate_system(const ShootingConfig& cfg, double b) {
    cfg.validate();
    if (!std::isfinite(b)) throw InvalidArgument("integrate_system: b must be finite");
    const double p = cfg.p;
    const double q0 = cfg.q0;
    const double h0 = cfg.series_radius;
    const double q2 = std::pow(q0, p - 1.0) * b / 3.0;
    const double b2 = std::pow(q0, p) / 3.0;
    Trajectory t;
    push(t, 0.0, State{q0, 0.0, b, 0.0}, State{0.0, q2, 0.0, b2});
    State y{q0 + 0.5 * q2 * h0 * h0, q2 * h0, b + 0.5 * b2 * h0 * h0, b2 * h0};
    State dy;
    System{p}(h0, y, dy);
    push(t, h0, y, dy);
    t.classification = Classification::Undetermined;
    const bool watch = q0 > 0.0;
    StepControl ctl;
    ctl.atol = cfg.atol;
    ctl.rtol = cfg.rtol;
    ctl.initial_step = h0;
    const double end = dopri5<4>(System{p}, h0, cfg.r_max, y, ctl, [&](double r, const State& s, const State& ds) {
        push(t, r, s, ds);
        if (!watch) return true;
        if (s[0] <= cfg.crossing_level) {
            t.classification = Classification::Crossing;
            return false;
        }
        if (escaping(s[0], s[1], cfg)) {
            t.classification = Classification::Escaping;
            return false;
        }
        return true;
    });
    t.termination_radius = end;
    return t;
}

Classification classify(const Trajectory& traj, const ShootingConfig& cfg) {
    for (std::size_t i = 0; i < traj.size(); ++i) {
        if (traj.Q[i] <= cfg.crossing_level) return Classification::Crossing;
        if (escaping(traj.Q[i], traj.Qp[i], cfg)) return Classification::Escaping;
    }
    return Classification::Undetermined;
}

double fit_B_infinity(const Trajectory& traj, double r_lo, double r_hi) {
    // B = B_inf - c x with x = 1 / r
    double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double r = traj.r[i];
        if (r < r_lo || r > r_hi || r <= 0.0) continue;
        const double x = 1.0 / r;
        n += 1;
        sx += x;
        sy += traj.B[i];
        sxx += x * x;
        sxy += x * traj.B[i];
    }
    if (n < 3) throw InvalidTrajectory("fit_B_infinity: fewer than three samples in the fit window");
    const double det = n * sxx - sx * sx;
    if (!(std::abs(det) > 0.0)) throw InvalidTrajectory("fit_B_infinity: degenerate fit window");
    return (sy * sxx - sx * sxy) / det;
}

ShootingOutcome find_separatrix(const ShootingConfig& cfg) {
    cfg.validate();
    if (!(cfg.q0 > 0.0)) throw InvalidArgument("find_separatrix: q0 must be positive");
    ShootingOutcome out;
    out.config = cfg;
    double lo = cfg.b_lo, hi = cfg.b_hi;
    Trajectory t_lo = integrate_system(cfg, lo);
    Trajectory t_hi = integrate_system(cfg, hi);
    int expansions = 0;
    while (t_lo.classification != Classification::Crossing || t_hi.classification != Classification::Escaping) {
        if (expansions >= cfg.max_expansions)
            throw NoSeparatrix("find_separatrix: no crossing/escaping bracket after " + std::to_string(expansions) +
                               " expansions");
        const double width = hi - lo;
        if (t_lo.classification != Classification::Crossing) {
            lo = hi - 2.0 * width;
            t_lo = integrate_system(cfg, lo);
        } else {
            hi = lo + 2.0 * width;
            t_hi = integrate_system(cfg, hi);
        }
        ++expansions;
    }
    out.expansions = expansions;

    int it = 0;
    for (; it < cfg.max_bisection && hi - lo >= cfg.b_tolerance; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        Trajectory t = integrate_system(cfg, mid);
        if (t.classification == Classification::Crossing) {
            lo = mid;
            t_lo = std::move(t);
        } else {
            // Undetermined runs sit inside the numerically unresolved window
            // and are grouped with the escaping side.
            hi = mid;
            t_hi = std::move(t);
        }
    }
    out.bisections = it;
    out.bracket_lo = lo;
    out.bracket_hi = hi;
    out.b_star = 0.5 * (lo + hi);
    out.raw = integrate_system(cfg, out.b_star);

    const double step = 1.0 + std::abs(out.b_star);
    for (double d : {0.3, 0.1, 0.03, 0.01}) {
        for (double sgn : {-1.0, 1.0}) {
            const double b = out.b_star + sgn * d * step;
            const Classification c = integrate_system(cfg, b).classification;
            out.probes.push_back({b, c});
            const Classification want = sgn < 0 ? Classification::Crossing : Classification::Escaping;
            if (c != want) out.monotone = false;
        }
    }

    out.trust_radius = trust_radius(out.raw, t_lo, t_hi, cfg.trust_tolerance);
    if (!(out.trust_radius > 10.0 * cfg.series_radius))
        throw InvalidTrajectory("find_separatrix: separatrix trajectory is not resolved");
    const double r_m = out.trust_radius;
    out.B_infinity = fit_B_infinity(out.raw, 0.5 * r_m, r_m);
    out.B_infinity_exterior = out.raw.B_at(r_m) + r_m * out.raw.Bp_at(r_m);
    if (!(out.B_infinity > 0.0)) throw InvalidTrajectory("find_separatrix: B_inf must be positive");

    const double lambda = std::pow(out.B_infinity, -(cfg.p - 1.0) / 2.0);
    const double R_need = 1.01 * lambda * cfg.profile_radius;
    if (r_m >= R_need) {
        out.profile = out.raw;
    } else {
        out.profile = stitch_tail(out.raw, cfg.p, out.B_infinity, r_m, R_need, cfg.rtol, out.tail_slope_mismatch);
        out.tail_continued = true;
    }
    return out;
}

NormalizedSolution rescale_to_normalized(const Trajectory& traj, double p, double B_inf, const GridPtr& grid) {
    require_exponent(p, "rescale_to_normalized");
    if (!(B_inf > 0.0)) throw InvalidTrajectory("rescale_to_normalized: B_inf must be positive");
    const double alpha = 1.0 / B_inf;
    const double lambda = std::pow(B_inf, -(p - 1.0) / 2.0);
    if (lambda * grid->r_max() > traj.r.back() * (1.0 + 1e-12))
        throw InvalidTrajectory("rescale_to_normalized: trajectory too short for the target grid");
    const std::size_t n = grid->size();
    std::vector<double> q(n), a(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = std::min(lambda * (*grid)[i], traj.r.back());
        q[i] = std::max(alpha * traj.Q_at(x), 0.0);
        a[i] = 1.0 - traj.B_at(x) / B_inf;
        f[i] = std::pow(q[i], p);
    }
    RadialProfile Q(grid, std::move(q));
    const double mass = integrate_radial(RadialProfile(grid, std::move(f)));
    return NormalizedSolution{std::move(Q), PotentialProfile{RadialProfile(grid, std::move(a)), mass}, alpha, lambda};
}

ShootingOutcome solve_shooting(ShootingConfig cfg, const GridPtr& grid) {
    cfg.profile_radius = grid->r_max();
    ShootingOutcome out = find_separatrix(cfg);
    NormalizedSolution s = rescale_to_normalized(out.profile, cfg.p, out.B_infinity, grid);
    nlohmann::json j = cfg;
    j["grid"] = {{"r_max", grid->r_max()}, {"n", grid->size()}, {"stretch", grid->scheme().stretch}};
    out.ground_state = make_ground_state(cfg.p, std::move(s.Q), std::move(s.A), "shooting", config_hash(j));
    return out;
}

void to_json(nlohmann::json& j, const ShootingOutcome& o) {
    nlohmann::json probes = nlohmann::json::array();
    for (const auto& pr : o.probes) probes.push_back({{"b", pr.b}, {"classification", to_string(pr.classification)}});
    j = nlohmann::json{{"p", o.config.p},
                       {"b_star", o.b_star},
                       {"B_infinity", o.B_infinity},
                       {"tolerances",
                        {{"atol", o.config.atol}, {"rtol", o.config.rtol}, {"b_tolerance", o.config.b_tolerance}}},
                       {"bracket", {o.bracket_lo, o.bracket_hi}},
                       {"bisections", o.bisections},
                       {"expansions", o.expansions},
                       {"B_infinity_exterior", o.B_infinity_exterior},
                       {"trust_radius", o.trust_radius},
                       {"tail_continued", o.tail_continued},
                       {"tail_slope_mismatch", o.tail_slope_mismatch},
                       {"raw_classification", to_string(o.raw.classification)},
                       {"raw_termination_radius", o.raw.termination_radius},
                       {"monotone_classification", o.monotone},
                       {"probes", probes},
                       {"config", o.config}};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "r,Q,Qp,B,Bp\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        os << format_double(t.r[i]) << ',' << format_double(t.Q[i]) << ',' << format_double(t.Qp[i]) << ','
           << format_double(t.B[i]) << ',' << format_double(t.Bp[i]) << '\n';
}

}  // namespace choquard
