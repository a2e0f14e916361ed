#pragma once

// Tensorized adaptive cubature of exp(-h) for d <= 3, used as ground truth in
// benchmarks.  Coordinates are integrated recursively: the innermost level
// evaluates -h, every outer level integrates the level below over a bracket
// found around the conditional minimum given the fixed prefix.  Exponential
// cost in d; intended only as an oracle.

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "objective.hpp"
#include "optimize.hpp"
#include "quadrature.hpp"

namespace ilaplace {

inline double brute_force_integral(const Objective& obj, const ModeInfo& mode,
                                   double rel_tol = 1e-9) {
    const int d = obj.dim;
    if (d > 3) throw DimensionTooLarge("brute_force_integral supports d <= 3, got " + std::to_string(d));
    const double level_tol = rel_tol / d;
    constexpr double tail_drop = 35.0;

    // log integral over coordinates level..d-1 with x[0..level-1] fixed.
    std::function<double(Vector&, int)> log_level = [&](Vector& x, int level) -> double {
        if (level == d) return -evaluate(obj, x);

        double center, scale;
        if (level == 0) {
            center = mode.x_hat[0];
            scale = 1.0 / std::sqrt(mode.V_hat(0, 0));
        } else {
            const Vector fixed = x.head(level);
            Vector z;
            // The linearized init can overshoot into territory where h
            // overflows; the modal tail is the finite fallback.
            try {
                z = conditional_minimize(obj, level, fixed,
                                         approx_conditional_minimum(mode, level, fixed));
            } catch (const NonFiniteObjective&) {
                z = conditional_minimize(obj, level, fixed, mode.x_hat.tail(d - level).eval());
            } catch (const NoConvergence&) {
                z = conditional_minimize(obj, level, fixed, mode.x_hat.tail(d - level).eval());
            }
            x.tail(d - level) = z;
            center = z[0];
            scale = 1.0 / std::sqrt(hessian(obj, x)(level, level));
        }

        auto log_f = [&](double t) {
            Vector y = x;
            y[level] = t;
            return log_level(y, level + 1);
        };
        return normalize_profile(log_f, center, scale, level_tol, 1e-300, tail_drop).log_value;
    };

    Vector x = mode.x_hat;
    return log_level(x, 0);
}

inline double brute_force_integral(const Objective& obj, const Vector& x0, double rel_tol,
                                   double grad_tol, int max_iter = 200) {
    return brute_force_integral(obj, minimize(obj, x0, grad_tol, max_iter), rel_tol);
}

}  // namespace ilaplace
