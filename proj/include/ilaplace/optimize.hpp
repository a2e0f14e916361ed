#pragma once

// Unconstrained minimization of h and minimization over a trailing coordinate
// block with the leading block held fixed.  Damped Newton with Armijo
// backtracking; steepest descent when the Hessian at an iterate is not
// positive definite.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <utility>

#include "objective.hpp"

namespace ilaplace {

struct ModeInfo {
    Vector x_hat;        // minimizer
    double h_hat = 0.0;  // h(x_hat)
    Matrix V_hat;        // Hessian at x_hat (positive definite)
    Matrix chol_lower;   // L with L L^T = V_hat
    double logdet = 0.0; // log |V_hat|
};

namespace detail {

inline double logdet_from_llt(const Eigen::LLT<Matrix>& llt) {
    double ld = 0.0;
    const auto& L = llt.matrixLLT();
    for (Eigen::Index i = 0; i < L.rows(); ++i) ld += std::log(L(i, i));
    return 2.0 * ld;
}

// Armijo backtracking along p from (x, fx) with directional derivative
// slope = g.p.  Non-finite trial values are treated as insufficient decrease.
// Decreases below the rounding granularity of fx are unobservable, so the
// test carries a matching allowance; without it the final Newton steps near
// a stiff minimizer are rejected on rounding noise.  Returns {x_new, f_new}.
template <class ValueFn>
std::pair<Vector, double> armijo_step(ValueFn&& value, const Vector& x, double fx,
                                      const Vector& p, double slope) {
    constexpr double c1 = 1e-4;
    const double noise = 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx));
    double t = 1.0;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
        Vector trial = x + t * p;
        double ft;
        try {
            ft = value(trial);
        } catch (const NonFiniteObjective&) {
            continue;
        }
        if (ft <= fx + c1 * t * slope + noise) return {std::move(trial), ft};
    }
    throw NoConvergence("line search failed to find a decrease");
}

// Newton loop over callables; used for both full and conditional minimization.
// Once the Newton decrement falls below sqrt(eps) relative to |fx| the
// remaining decrease is smaller than the evaluation can resolve, so the full
// step is taken on the quadratic model alone; the gradient test still decides
// convergence.
template <class ValueFn, class GradFn, class HessFn>
std::pair<Vector, double> newton_minimize(ValueFn&& value, GradFn&& grad, HessFn&& hess,
                                          const Vector& x0, double grad_tol, int max_iter) {
    const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    Vector x = x0;
    double fx = value(x);
    for (int iter = 0; iter < max_iter; ++iter) {
        const Vector g = grad(x);
        if (g.lpNorm<Eigen::Infinity>() <= grad_tol * (1.0 + std::abs(fx)))
            return {std::move(x), fx};

        Vector p;
        bool newton_dir = false;
        Eigen::LLT<Matrix> llt(hess(x));
        if (llt.info() == Eigen::Success) {
            p = -llt.solve(g);
            newton_dir = p.allFinite() && g.dot(p) < 0.0;
        }
        if (!newton_dir) p = -g;

        const double slope = g.dot(p);
        if (newton_dir && -0.5 * slope <= sqrt_eps * (1.0 + std::abs(fx))) {
            Vector trial = x + p;
            double ft;
            try {
                ft = value(trial);
            } catch (const NonFiniteObjective&) {
                ft = std::numeric_limits<double>::quiet_NaN();
            }
            if (std::isfinite(ft)) {
                x = std::move(trial);
                fx = ft;
                continue;
            }
        }

        auto [xn, fn] = armijo_step(value, x, fx, p, slope);
        x = std::move(xn);
        fx = fn;
    }
    const Vector g = grad(x);
    if (g.lpNorm<Eigen::Infinity>() <= grad_tol * (1.0 + std::abs(fx))) return {std::move(x), fx};
    throw NoConvergence("no convergence after " + std::to_string(max_iter) + " iterations");
}

}  // namespace detail

// Global minimization.  grad_tol is relative: converged when
// ||grad||_inf <= grad_tol * (1 + |h(x)|).
inline ModeInfo minimize(const Objective& obj, const Vector& x0,
                         double grad_tol = 1e-8, int max_iter = 200) {
    auto [x, fx] = detail::newton_minimize(
        [&](const Vector& v) { return evaluate(obj, v); },
        [&](const Vector& v) { return gradient(obj, v); },
        [&](const Vector& v) { return hessian(obj, v); }, x0, grad_tol, max_iter);

    ModeInfo info;
    info.V_hat = hessian(obj, x);
    Eigen::LLT<Matrix> llt(info.V_hat);
    if (llt.info() != Eigen::Success) throw HessianNotPD("at the minimizer", x);
    info.x_hat = std::move(x);
    info.h_hat = fx;
    info.chol_lower = llt.matrixL();
    info.logdet = detail::logdet_from_llt(llt);
    return info;
}

// Minimize h(fixed, z) over the trailing block z, the leading `fixed_count`
// coordinates pinned at fixed_vals.  Returns the minimizing z.  The free-block
// Hessian at the solution must be positive definite.
inline Vector conditional_minimize(const Objective& obj, int fixed_count, const Vector& fixed_vals,
                                   const Vector& init, double grad_tol = 1e-8, int max_iter = 200) {
    const int d = obj.dim;
    const int nf = d - fixed_count;
    if (fixed_count <= 0 || fixed_count >= d || fixed_vals.size() != fixed_count)
        throw InvalidParameter("conditional_minimize: bad fixed block");
    if (init.size() != nf) throw InvalidParameter("conditional_minimize: bad init size");

    Vector full(d);
    full.head(fixed_count) = fixed_vals;
    auto assemble = [&](const Vector& z) {
        full.tail(nf) = z;
        return full;
    };

    auto [z, fz] = detail::newton_minimize(
        [&](const Vector& v) { return evaluate(obj, assemble(v)); },
        [&](const Vector& v) { return gradient(obj, assemble(v)).tail(nf).eval(); },
        [&](const Vector& v) { return hessian(obj, assemble(v)).bottomRightCorner(nf, nf).eval(); },
        init, grad_tol, max_iter);

    Eigen::LLT<Matrix> llt(hessian(obj, assemble(z)).bottomRightCorner(nf, nf).eval());
    if (llt.info() != Eigen::Success)
        throw HessianNotPD("of the free block at the conditional minimizer", assemble(z));
    return z;
}

// Linearized conditional minimum around the mode:
//   z(y) = z_hat + Vzz^{-1} Vzy (y_hat - y),
// exact for quadratic h, O(n^{-1}) displacement otherwise.
inline Vector approx_conditional_minimum(const ModeInfo& mode, int fixed_count,
                                         const Vector& fixed_vals) {
    const int d = static_cast<int>(mode.x_hat.size());
    const int nf = d - fixed_count;
    if (fixed_count <= 0 || fixed_count >= d || fixed_vals.size() != fixed_count)
        throw InvalidParameter("approx_conditional_minimum: bad fixed block");

    const Vector dy = mode.x_hat.head(fixed_count) - fixed_vals;
    Eigen::LLT<Matrix> llt(mode.V_hat.bottomRightCorner(nf, nf).eval());
    if (llt.info() != Eigen::Success)
        throw HessianNotPD("of the trailing block at the mode");  // impossible for PD V_hat
    return mode.x_hat.tail(nf) + llt.solve(mode.V_hat.bottomLeftCorner(nf, fixed_count) * dy);
}

}  // namespace ilaplace
