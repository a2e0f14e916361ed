#pragma once

// Standard Laplace approximation and the per-coordinate log profiles whose
// normalizing constants drive the re-normalized (improved) approximation.
// All profiles condition on modal values for the leading block, which makes
// the at-the-mode block determinants cacheable: only the trailing-block
// determinant at the displaced point has to be recomputed per evaluation.

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "objective.hpp"
#include "optimize.hpp"

namespace ilaplace {

// log integral exp(-h) by the Laplace formula:
//   (d/2) log(2 pi) - (1/2) log |V_hat| - h(x_hat).
inline double log_laplace(const ModeInfo& mode) {
    const double d = static_cast<double>(mode.x_hat.size());
    return 0.5 * d * log_2pi - 0.5 * mode.logdet - mode.h_hat;
}

inline double log_laplace(const Objective& obj, const Vector& x0,
                          double grad_tol = 1e-8, int max_iter = 200) {
    return log_laplace(minimize(obj, x0, grad_tol, max_iter));
}

enum class CondStrategy { exact, approximate };

struct ProfileContext {
    Objective obj;          // working (possibly permuted) objective
    ModeInfo mode;          // mode in working coordinates
    std::vector<int> perm;  // working coordinate i = original coordinate perm[i]
    CondStrategy strategy = CondStrategy::exact;
    double grad_tol = 1e-8;
    int max_iter = 200;

    // trailing_logdet[q] = log |V_hat[q:, q:]| for q = 0..d-1, trailing_logdet[d] = 0.
    std::vector<double> trailing_logdet;
    // Cholesky factors of the same trailing blocks, reused by the linearized
    // conditional-minimum path.
    std::vector<Eigen::LLT<Matrix>> trailing_llt;

    int dim() const { return obj.dim; }
};

inline ProfileContext make_profile_context(const Objective& obj, const ModeInfo& mode,
                                           const std::vector<int>& perm,
                                           CondStrategy strategy = CondStrategy::exact,
                                           double grad_tol = 1e-8, int max_iter = 200) {
    const int d = obj.dim;
    ProfileContext ctx;
    ctx.perm = perm;
    ctx.strategy = strategy;
    ctx.grad_tol = grad_tol;
    ctx.max_iter = max_iter;

    bool identity = true;
    for (int i = 0; i < d; ++i) identity = identity && perm[i] == i;
    if (identity) {
        ctx.obj = obj;
        ctx.mode = mode;
    } else {
        ctx.obj = permute_objective(obj, perm);
        ctx.mode.x_hat = Vector(d);
        ctx.mode.V_hat = Matrix(d, d);
        for (int i = 0; i < d; ++i) {
            ctx.mode.x_hat[i] = mode.x_hat[perm[i]];
            for (int j = 0; j < d; ++j) ctx.mode.V_hat(i, j) = mode.V_hat(perm[i], perm[j]);
        }
        ctx.mode.h_hat = mode.h_hat;
        Eigen::LLT<Matrix> llt(ctx.mode.V_hat);
        if (llt.info() != Eigen::Success) throw HessianNotPD("after permutation", ctx.mode.x_hat);
        ctx.mode.chol_lower = llt.matrixL();
        ctx.mode.logdet = detail::logdet_from_llt(llt);
    }

    ctx.trailing_logdet.resize(d + 1);
    ctx.trailing_logdet[d] = 0.0;
    ctx.trailing_llt.reserve(d);
    for (int q = 0; q < d; ++q) {
        Eigen::LLT<Matrix> llt(ctx.mode.V_hat.bottomRightCorner(d - q, d - q).eval());
        if (llt.info() != Eigen::Success)
            throw HessianNotPD("in trailing block " + std::to_string(q + 1), ctx.mode.x_hat);
        ctx.trailing_logdet[q] = detail::logdet_from_llt(llt);
        ctx.trailing_llt.push_back(std::move(llt));
    }
    return ctx;
}

namespace detail {

// Conditional minimum of the trailing block given the leading `nfix` working
// coordinates pinned at `fixed`.  warm, when supplied, carries the previous
// solution across evaluations of the same coordinate's profile.
inline Vector conditional_point(const ProfileContext& ctx, int nfix, const Vector& fixed,
                                Vector* warm) {
    const int d = ctx.dim();
    const int nf = d - nfix;
    const Vector dy = ctx.mode.x_hat.head(nfix) - fixed;
    Vector lin = ctx.mode.x_hat.tail(nf) +
                 ctx.trailing_llt[nfix].solve(ctx.mode.V_hat.bottomLeftCorner(nf, nfix) * dy);
    if (ctx.strategy == CondStrategy::approximate) return lin;

    std::vector<Vector> inits;
    if (warm && warm->size() == nf) inits.push_back(*warm);
    inits.push_back(std::move(lin));
    inits.push_back(ctx.mode.x_hat.tail(nf));
    Vector z;
    for (std::size_t k = 0;; ++k) {
        try {
            z = conditional_minimize(ctx.obj, nfix, fixed, inits[k], ctx.grad_tol, ctx.max_iter);
            break;
        } catch (const NoConvergence&) {
            if (k + 1 == inits.size()) throw;
        } catch (const NonFiniteObjective&) {
            if (k + 1 == inits.size()) throw;
        }
    }
    if (warm) *warm = z;
    return z;
}

inline double trailing_block_logdet(const ProfileContext& ctx, const Vector& x_full, int q) {
    const int nf = ctx.dim() - q;
    Eigen::LLT<Matrix> llt(hessian(ctx.obj, x_full).bottomRightCorner(nf, nf).eval());
    if (llt.info() != Eigen::Success)
        throw HessianNotPD("of the trailing block at the conditional point", x_full);
    return logdet_from_llt(llt);
}

}  // namespace detail

// First-coordinate profile:
//   [h(x_hat) - h(x1, z(x1))] + (1/2)[log|V_hat| - log 2pi - log|V_{2:d}(x1, z(x1))|].
inline double log_profile_marginal(const ProfileContext& ctx, double x1, Vector* warm = nullptr) {
    const int d = ctx.dim();
    Vector fixed(1);
    fixed[0] = x1;
    Vector x_full(d);
    x_full[0] = x1;
    x_full.tail(d - 1) = detail::conditional_point(ctx, 1, fixed, warm);
    const double hv = evaluate(ctx.obj, x_full);
    return (ctx.mode.h_hat - hv) +
           0.5 * (ctx.trailing_logdet[0] - log_2pi - detail::trailing_block_logdet(ctx, x_full, 1));
}

// Coordinate q in 2..d-1 (1-based), conditioning fixed at modal values:
//   [h(x_hat) - h(xhat_{1:q-1}, xq, z)] +
//   (1/2)[log|V_{q:d}(x_hat)| - log 2pi - log|V_{q+1:d}(xhat_{1:q-1}, xq, z)|].
inline double log_profile_conditional(const ProfileContext& ctx, int q, double xq,
                                      Vector* warm = nullptr) {
    const int d = ctx.dim();
    if (q < 2 || q > d - 1) throw InvalidParameter("log_profile_conditional: q out of range");
    Vector fixed(q);
    fixed.head(q - 1) = ctx.mode.x_hat.head(q - 1);
    fixed[q - 1] = xq;
    Vector x_full(d);
    x_full.head(q) = fixed;
    x_full.tail(d - q) = detail::conditional_point(ctx, q, fixed, warm);
    const double hv = evaluate(ctx.obj, x_full);
    return (ctx.mode.h_hat - hv) +
           0.5 * (ctx.trailing_logdet[q - 1] - log_2pi -
                  detail::trailing_block_logdet(ctx, x_full, q));
}

// Last coordinate; no trailing block remains to minimize over:
//   [h(x_hat) - h(xhat_{1:d-1}, xd)] + (1/2)[log V_dd(x_hat) - log 2pi].
inline double log_profile_last(const ProfileContext& ctx, double xd) {
    const int d = ctx.dim();
    Vector x_full = ctx.mode.x_hat;
    x_full[d - 1] = xd;
    const double hv = evaluate(ctx.obj, x_full);
    return (ctx.mode.h_hat - hv) + 0.5 * (ctx.trailing_logdet[d - 1] - log_2pi);
}

// Dispatch on coordinate index (1-based).
inline double log_profile(const ProfileContext& ctx, int q, double t, Vector* warm = nullptr) {
    const int d = ctx.dim();
    if (q < 1 || q > d) throw InvalidParameter("log_profile: q out of range");
    if (q == d) return log_profile_last(ctx, t);
    if (q == 1) return log_profile_marginal(ctx, t, warm);
    return log_profile_conditional(ctx, q, t, warm);
}

// Profile value at the mode, from cached modal-conditioning quantities only:
//   (1/2)(log|V_{q:d}(x_hat)| - log|V_{q+1:d}(x_hat)| - log 2pi).
inline double log_profile_at_mode(const ProfileContext& ctx, int q) {
    if (q < 1 || q > ctx.dim()) throw InvalidParameter("log_profile_at_mode: q out of range");
    return 0.5 * (ctx.trailing_logdet[q - 1] - ctx.trailing_logdet[q] - log_2pi);
}

}  // namespace ilaplace
