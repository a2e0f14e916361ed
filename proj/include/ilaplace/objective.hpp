#pragma once

// Target functions h: R^d -> R wrapped together with optional analytic
// derivatives.  Missing derivatives fall back to central finite differences;
// every evaluation of the underlying function is charged against a shared
// budget so runaway quadrature/optimization loops fail loudly instead of
// spinning.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "errors.hpp"

namespace ilaplace {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double log_2pi = 1.8378770664093454835606594728112352797;

struct EvaluationBudget {
    long long max_evals = 10'000'000;
    std::atomic<long long> eval_count{0};

    void reset(long long new_max = 10'000'000) {
        max_evals = new_max;
        eval_count.store(0, std::memory_order_relaxed);
    }
    void charge() {
        long long c = eval_count.fetch_add(1, std::memory_order_relaxed) + 1;
        if (c > max_evals)
            throw BudgetExhausted("evaluation budget of " + std::to_string(max_evals) + " exhausted");
    }
};

struct Objective {
    int dim = 0;
    std::function<double(const Vector&)> value_fn;
    std::function<Vector(const Vector&)> grad_fn;   // optional
    std::function<Matrix(const Vector&)> hess_fn;   // optional
    // Optional declaration, per gradient component, of which coordinates that
    // component depends on.  Used only by the ordering heuristic.
    std::vector<std::vector<int>> grad_deps;
    std::shared_ptr<EvaluationBudget> budget = std::make_shared<EvaluationBudget>();
};

inline double evaluate(const Objective& obj, const Vector& x) {
    if (x.size() != obj.dim)
        throw InvalidParameter("evaluate: point has size " + std::to_string(x.size()) +
                               ", objective has dim " + std::to_string(obj.dim));
    if (!x.allFinite()) throw NonFiniteObjective(x);
    obj.budget->charge();
    double v = obj.value_fn(x);
    if (!std::isfinite(v)) throw NonFiniteObjective(x);
    return v;
}

namespace detail {
inline const double fd_step_value = std::cbrt(std::numeric_limits<double>::epsilon());
inline const double fd_step_grad = std::sqrt(std::numeric_limits<double>::epsilon());
}  // namespace detail

// Central differences, step cbrt(eps) * (1 + |x_i|) per coordinate.
inline Vector fd_gradient(const Objective& obj, const Vector& x) {
    Vector g(obj.dim);
    Vector xp = x;
    for (int i = 0; i < obj.dim; ++i) {
        const double h = detail::fd_step_value * (1.0 + std::abs(x[i]));
        xp[i] = x[i] + h;
        const double fp = evaluate(obj, xp);
        xp[i] = x[i] - h;
        const double fm = evaluate(obj, xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline Vector gradient(const Objective& obj, const Vector& x) {
    if (x.size() != obj.dim)
        throw InvalidParameter("gradient: point/objective dimension mismatch");
    if (!x.allFinite()) throw NonFiniteObjective(x);
    if (obj.grad_fn) {
        Vector g = obj.grad_fn(x);
        if (!g.allFinite()) throw NonFiniteObjective(x);
        return g;
    }
    return fd_gradient(obj, x);
}

// Central differences of the gradient, step sqrt(eps) * (1 + |x_i|) per leg,
// symmetrized so V(i,j) == V(j,i) holds bit-exactly.
inline Matrix fd_hessian(const Objective& obj, const Vector& x) {
    Matrix m(obj.dim, obj.dim);
    Vector xp = x;
    for (int i = 0; i < obj.dim; ++i) {
        const double h = detail::fd_step_grad * (1.0 + std::abs(x[i]));
        xp[i] = x[i] + h;
        const Vector gp = gradient(obj, xp);
        xp[i] = x[i] - h;
        const Vector gm = gradient(obj, xp);
        xp[i] = x[i];
        m.col(i) = (gp - gm) / (2.0 * h);
    }
    return 0.5 * (m + m.transpose());
}

inline Matrix hessian(const Objective& obj, const Vector& x) {
    if (x.size() != obj.dim)
        throw InvalidParameter("hessian: point/objective dimension mismatch");
    if (!x.allFinite()) throw NonFiniteObjective(x);
    if (obj.hess_fn) {
        Matrix m = obj.hess_fn(x);
        if (!m.allFinite()) throw NonFiniteObjective(x);
        return 0.5 * (m + m.transpose().eval());
    }
    return fd_hessian(obj, x);
}

// View of obj under a coordinate reordering: working coordinate i of the
// returned objective is original coordinate perm[i].  perm must be a bijection
// of {0, ..., dim-1}.
inline Objective permute_objective(const Objective& obj, const std::vector<int>& perm) {
    const int d = obj.dim;
    if (static_cast<int>(perm.size()) != d)
        throw InvalidParameter("permutation size does not match objective dim");
    std::vector<bool> seen(d, false);
    for (int p : perm) {
        if (p < 0 || p >= d || seen[p]) throw InvalidParameter("permutation is not a bijection");
        seen[p] = true;
    }

    auto unpermute = [perm, d](const Vector& w) {
        Vector x(d);
        for (int i = 0; i < d; ++i) x[perm[i]] = w[i];
        return x;
    };

    Objective out;
    out.dim = d;
    out.budget = obj.budget;
    out.value_fn = [obj, unpermute](const Vector& w) { return obj.value_fn(unpermute(w)); };
    if (obj.grad_fn) {
        out.grad_fn = [obj, unpermute, perm, d](const Vector& w) {
            Vector g = obj.grad_fn(unpermute(w));
            Vector gw(d);
            for (int i = 0; i < d; ++i) gw[i] = g[perm[i]];
            return gw;
        };
    }
    if (obj.hess_fn) {
        out.hess_fn = [obj, unpermute, perm, d](const Vector& w) {
            Matrix m = obj.hess_fn(unpermute(w));
            Matrix mw(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) mw(i, j) = m(perm[i], perm[j]);
            return mw;
        };
    }
    return out;
}

// Ordering heuristic: coordinates whose gradient component depends on more of
// the other coordinates come first.  Stable, so models without declared
// dependency sets keep the identity order.
inline std::vector<int> gradient_dependency_order(const Objective& obj) {
    std::vector<int> order(obj.dim);
    for (int i = 0; i < obj.dim; ++i) order[i] = i;
    if (static_cast<int>(obj.grad_deps.size()) != obj.dim) return order;
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return obj.grad_deps[a].size() > obj.grad_deps[b].size();
    });
    return order;
}

}  // namespace ilaplace
