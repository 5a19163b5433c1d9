#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

#include "choquard/errors.hpp"

namespace choquard {

struct StepControl {
    double atol = 1e-10;
    double rtol = 1e-10;
    double initial_step = 1e-4;
    double max_step = 0.0;  // 0: unbounded
    std::size_t max_steps = 10'000'000;
};

// Dormand-Prince 5(4) with FSAL and standard PI-free step control.
// `rhs(t, y, dy)` evaluates the system; `on_step(t, y, dy)` is called after
// every accepted step and returns false to stop. Integration runs from t0
// toward t1 in either direction. Returns the final abscissa reached.
template <std::size_t N, class Rhs, class OnStep>
double dopri5(Rhs&& rhs, double t0, double t1, std::array<double, N>& y, const StepControl& ctl, OnStep&& on_step) {
    using State = std::array<double, N>;
    constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    constexpr double a21 = 1.0 / 5;
    constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                     a65 = -5103.0 / 18656;
    constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                     e6 = 22.0 / 525, e7 = -1.0 / 40;

    const double dir = t1 >= t0 ? 1.0 : -1.0;
    double t = t0;
    double h = std::min(ctl.initial_step, std::abs(t1 - t0));
    State k1, k2, k3, k4, k5, k6, k7, tmp, ynew;
    rhs(t, y, k1);
    std::size_t steps = 0;
    while (dir * (t1 - t) > 0.0) {
        if (++steps > ctl.max_steps) throw NumericalFailure("dopri5: step budget exhausted", t);
        if (ctl.max_step > 0.0) h = std::min(h, ctl.max_step);
        h = std::min(h, std::abs(t1 - t));
        if (h < 1e-14 * std::max(1.0, std::abs(t))) throw NumericalFailure("dopri5: step size underflow", t);
        const double s = dir * h;
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + s * a21 * k1[i];
        rhs(t + c2 * s, tmp, k2);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + s * (a31 * k1[i] + a32 * k2[i]);
        rhs(t + c3 * s, tmp, k3);
        for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + s * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        rhs(t + c4 * s, tmp, k4);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + s * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        rhs(t + c5 * s, tmp, k5);
        for (std::size_t i = 0; i < N; ++i)
            tmp[i] = y[i] + s * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const double tn = (dir * (t1 - (t + s)) <= 0.0) ? t1 : t + s;
        rhs(tn, tmp, k6);
        for (std::size_t i = 0; i < N; ++i)
            ynew[i] = y[i] + s * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        rhs(tn, ynew, k7);
        double err = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double e = s * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = ctl.atol + ctl.rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (e / sc) * (e / sc);
        }
        err = std::sqrt(err / N);
        if (!std::isfinite(err)) {
            h *= 0.2;
            continue;
        }
        if (err <= 1.0) {
            t = tn;
            y = ynew;
            k1 = k7;
            if (!on_step(t, y, k1)) return t;
            const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            h *= fac;
        } else {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        }
    }
    return t;
}

}  // namespace choquard
