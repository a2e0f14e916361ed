#pragma once

// Built-in integrands with analytic derivatives, their samplers, and a
// name-keyed registry used by the benchmark CLI.

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "objective.hpp"
#include "rng.hpp"

namespace ilaplace {

// ---------------------------------------------------------------------------
// Gaussian / quadratic: h(x) = x'Ax / 2.

inline Objective quadratic_objective(const Matrix& a) {
    Objective obj;
    obj.dim = static_cast<int>(a.rows());
    obj.value_fn = [a](const Vector& x) { return 0.5 * x.dot(a * x); };
    obj.grad_fn = [a](const Vector& x) { return (a * x).eval(); };
    obj.hess_fn = [a](const Vector&) { return a; };
    return obj;
}

inline Objective gaussian_objective(int dim) {
    return quadratic_objective(Matrix::Identity(dim, dim));
}

// Random SPD matrix with the requested condition number: Q diag(lambda) Q'
// with Q from a QR of a seeded Gaussian matrix and log-spaced eigenvalues.
// Returns the matrix and log|A| computed from the eigenvalues.
inline std::pair<Matrix, double> random_spd_matrix(int dim, double cond, std::uint64_t seed) {
    if (dim < 1 || !(cond >= 1.0)) throw InvalidParameter("random_spd_matrix: bad dim/cond");
    Rng rng(seed);
    Matrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
    Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();

    double logdet = 0.0;
    Vector lambda(dim);
    for (int i = 0; i < dim; ++i) {
        const double f = dim == 1 ? 0.0 : static_cast<double>(i) / (dim - 1);
        lambda[i] = std::exp(std::log(cond) * (f - 0.5));  // cond^{-1/2} .. cond^{1/2}
        logdet += std::log(lambda[i]);
    }
    Matrix a = q * lambda.asDiagonal() * q.transpose();
    return {0.5 * (a + a.transpose()).eval(), logdet};
}

// ---------------------------------------------------------------------------
// Skew-t: a multivariate t whose first-coordinate marginal is replaced by a
// two-parameter skew form.  Integrates to exactly 1 over R^d; a = c = nu/2
// recovers the multivariate t.

struct SkewTParams {
    int dim = 2;
    double a = 1.5, c = 1.5, nu = 3.0;
};

inline double skew_t_log_const(const SkewTParams& p) {
    const double d = p.dim;
    return std::lgamma(0.5 * (p.nu + d)) - std::lgamma(0.5 * (p.nu + 1.0)) -
           (std::lgamma(p.a) + std::lgamma(p.c) - std::lgamma(p.a + p.c)) -
           0.5 * std::log(p.a + p.c) - (p.a + p.c - 1.0) * std::log(2.0) -
           0.5 * (d - 1.0) * std::log(p.nu * 3.14159265358979323846);
}

namespace detail {

// 1 +/- s for s = y1 / sqrt(ac + y1^2).  The side that cancels is computed
// through the conjugate quotient, which stays exact in the far tails where
// the direct subtraction rounds to zero.
struct SkewSplit {
    double one_plus, one_minus;
};

inline SkewSplit skew_split(double ac, double y1) {
    const double root = std::sqrt(ac + y1 * y1);
    if (y1 >= 0.0) return {1.0 + y1 / root, ac / (root * (root + y1))};
    return {ac / (root * (root - y1)), 1.0 - y1 / root};
}

}  // namespace detail

inline double skew_t_neg_log_density(const SkewTParams& p, const Vector& y) {
    const double d = p.dim;
    const double ssq = y.squaredNorm();
    const double y1 = y[0];
    const auto [sp, sm] = detail::skew_split(p.a + p.c, y1);
    return 0.5 * (p.nu + d) * std::log1p(ssq / p.nu) -
           0.5 * (p.nu + 1.0) * std::log1p(y1 * y1 / p.nu) -
           (p.a + 0.5) * std::log(sp) - (p.c + 0.5) * std::log(sm) - skew_t_log_const(p);
}

inline Objective skew_t_objective(const SkewTParams& p) {
    if (p.dim < 1 || !(p.a > 0.0) || !(p.c > 0.0) || !(p.nu > 0.0))
        throw InvalidParameter("skew-t: dim >= 1 and a, c, nu > 0 required");
    Objective obj;
    obj.dim = p.dim;
    obj.value_fn = [p](const Vector& y) { return skew_t_neg_log_density(p, y); };
    obj.grad_fn = [p](const Vector& y) {
        const int d = p.dim;
        const double a1 = p.nu + y.squaredNorm();
        Vector g = (p.nu + d) / a1 * y;
        const double y1 = y[0];
        const double r = p.a + p.c + y1 * y1;
        const auto [sp, sm] = detail::skew_split(p.a + p.c, y1);
        const double ds = (p.a + p.c) / (r * std::sqrt(r));
        const double gs = (p.a + 0.5) / sp - (p.c + 0.5) / sm;
        g[0] += -(p.nu + 1.0) * y1 / (p.nu + y1 * y1) - gs * ds;
        return g;
    };
    obj.hess_fn = [p](const Vector& y) {
        const int d = p.dim;
        const double a1 = p.nu + y.squaredNorm();
        Matrix m = -2.0 * (p.nu + d) / (a1 * a1) * (y * y.transpose());
        m.diagonal().array() += (p.nu + d) / a1;
        const double y1 = y[0];
        const double t1 = p.nu + y1 * y1;
        const double r = p.a + p.c + y1 * y1;
        const auto [sp, sm] = detail::skew_split(p.a + p.c, y1);
        const double ds = (p.a + p.c) / (r * std::sqrt(r));
        const double d2s = -3.0 * (p.a + p.c) * y1 / (r * r * std::sqrt(r));
        const double gs = (p.a + 0.5) / sp - (p.c + 0.5) / sm;
        const double g2s = -(p.a + 0.5) / (sp * sp) - (p.c + 0.5) / (sm * sm);
        m(0, 0) += -(p.nu + 1.0) * (1.0 / t1 - 2.0 * y1 * y1 / (t1 * t1)) -
                   (g2s * ds * ds + gs * d2s);
        return m;
    };
    return obj;
}

// ---------------------------------------------------------------------------
// Gompertz posterior with independent N(0, prior_sd^2) priors on
// theta = (log alpha, log beta).  Density of one observation:
//   p(y) = alpha beta e^{beta y} e^{alpha} exp(-alpha e^{beta y}).
// The difference e^{t1 + by} - e^{t1} dominates the likelihood far from the
// mode; forming it as a difference of exponentials loses all precision once
// the exponents are large, so every routine below builds it from expm1 with
// the exponents combined before exponentiating.

struct GompertzPosterior {
    std::vector<double> data;
    double prior_sd = 10.0;
};

namespace detail {

// e^{t1}(e^{by} - 1) for by > 0, without cancellation or 0 * inf.
inline double gompertz_exp_diff(double t1, double by) {
    return std::exp(t1 + by + std::log(-std::expm1(-by)));
}

// by * (e^{t1 + by} - 1), guarded against expm1 overflow.
inline double gompertz_bem1(double t1, double by) {
    const double s = t1 + by;
    if (s < 700.0) return by * std::expm1(s);
    return std::exp(s + std::log(by));
}

// by * e^{t1 + by}, guarded the same way.
inline double gompertz_bexp(double t1, double by) {
    const double s = t1 + by;
    if (s < 700.0) return by * std::exp(s);
    return std::exp(s + std::log(by));
}

}  // namespace detail

inline double gompertz_neg_log_posterior(const GompertzPosterior& m, const Vector& theta) {
    const double t1 = theta[0], t2 = theta[1];
    const double beta = std::exp(t2);
    double h = 0.0;
    for (double y : m.data) {
        const double by = beta * y;
        h += detail::gompertz_exp_diff(t1, by) - (t1 + t2 + by);
    }
    const double v = m.prior_sd * m.prior_sd;
    return h + (t1 * t1 + t2 * t2) / (2.0 * v) + std::log(2.0 * 3.14159265358979323846 * v);
}

inline Objective gompertz_objective(const GompertzPosterior& m) {
    if (m.data.empty() || !(m.prior_sd > 0.0))
        throw InvalidParameter("gompertz posterior: data and prior_sd > 0 required");
    Objective obj;
    obj.dim = 2;
    obj.value_fn = [m](const Vector& th) { return gompertz_neg_log_posterior(m, th); };
    obj.grad_fn = [m](const Vector& th) {
        const double t1 = th[0], t2 = th[1];
        const double beta = std::exp(t2);
        Vector g = Vector::Zero(2);
        for (double y : m.data) {
            const double by = beta * y;
            g[0] += detail::gompertz_exp_diff(t1, by) - 1.0;
            g[1] += detail::gompertz_bem1(t1, by) - 1.0;
        }
        const double v = m.prior_sd * m.prior_sd;
        g[0] += t1 / v;
        g[1] += t2 / v;
        return g;
    };
    obj.hess_fn = [m](const Vector& th) {
        const double t1 = th[0], t2 = th[1];
        const double beta = std::exp(t2);
        double h11 = 0.0, h12 = 0.0, h22 = 0.0;
        for (double y : m.data) {
            const double by = beta * y;
            const double bexp = detail::gompertz_bexp(t1, by);
            h11 += detail::gompertz_exp_diff(t1, by);
            h12 += bexp;
            h22 += detail::gompertz_bem1(t1, by) + by * bexp;
        }
        const double v = m.prior_sd * m.prior_sd;
        Matrix out(2, 2);
        out << h11 + 1.0 / v, h12, h12, h22 + 1.0 / v;
        return out;
    };
    return obj;
}

// Inverse CDF of the Gompertz(alpha, beta) distribution.
inline double gompertz_quantile(double alpha, double beta, double u) {
    return std::log1p(-std::log1p(-u) / alpha) / beta;
}

inline std::vector<double> gompertz_sample(double alpha, double beta, int n, std::uint64_t seed) {
    if (!(alpha > 0.0) || !(beta > 0.0) || n < 1)
        throw InvalidParameter("gompertz_sample: alpha, beta > 0 and n >= 1 required");
    Rng rng(seed);
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) y[i] = gompertz_quantile(alpha, beta, rng.uniform01());
    return y;
}

// ---------------------------------------------------------------------------
// Binary random-intercept GLMM, logit link.  h(u) is the joint negative log
// of (responses, random effects) at fixed effect beta and variance sigma2:
//   sum_i [log(1 + e^{beta + u_i}) - y_i (beta + u_i)]
//   + sum_i u_i^2 / (2 sigma2) + (n/2) log(2 pi sigma2).
// Separable in u, so the marginal likelihood factorizes over observations.

struct BinaryGlmm {
    std::vector<int> responses;
    double beta = 0.0;
    double sigma2 = 1.0;
};

namespace detail {
inline double log1p_exp(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
inline double logistic(double z) { return z > 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }
}  // namespace detail

inline double glmm_joint_neg_log(const BinaryGlmm& m, const Vector& u) {
    const int n = static_cast<int>(m.responses.size());
    double h = 0.5 * n * std::log(2.0 * 3.14159265358979323846 * m.sigma2);
    for (int i = 0; i < n; ++i) {
        const double z = m.beta + u[i];
        h += detail::log1p_exp(z) - m.responses[i] * z + u[i] * u[i] / (2.0 * m.sigma2);
    }
    return h;
}

inline Objective glmm_objective(const BinaryGlmm& m) {
    const int n = static_cast<int>(m.responses.size());
    if (n < 1 || !(m.sigma2 > 0.0))
        throw InvalidParameter("glmm: at least one response and sigma2 > 0 required");
    for (int y : m.responses)
        if (y != 0 && y != 1) throw InvalidParameter("glmm: responses must be 0/1");
    Objective obj;
    obj.dim = n;
    obj.value_fn = [m](const Vector& u) { return glmm_joint_neg_log(m, u); };
    obj.grad_fn = [m, n](const Vector& u) {
        Vector g(n);
        for (int i = 0; i < n; ++i)
            g[i] = detail::logistic(m.beta + u[i]) - m.responses[i] + u[i] / m.sigma2;
        return g;
    };
    obj.hess_fn = [m, n](const Vector& u) {
        Matrix h = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            const double p = detail::logistic(m.beta + u[i]);
            h(i, i) = p * (1.0 - p) + 1.0 / m.sigma2;
        }
        return h;
    };
    obj.grad_deps.resize(n);
    for (int i = 0; i < n; ++i) obj.grad_deps[i] = {i};
    return obj;
}

inline std::vector<int> glmm_sample_binary(double beta, double sigma2, int n, std::uint64_t seed) {
    if (!(sigma2 > 0.0) || n < 1) throw InvalidParameter("glmm_sample_binary: bad parameters");
    Rng rng(seed);
    std::vector<int> y(n);
    const double sd = std::sqrt(sigma2);
    for (int i = 0; i < n; ++i) {
        const double u = sd * rng.normal();
        y[i] = rng.uniform01() < detail::logistic(beta + u) ? 1 : 0;
    }
    return y;
}

// ---------------------------------------------------------------------------
// Registry.

struct ModelInstance {
    std::string name;
    std::map<std::string, double> params;  // fully resolved, including defaults
    Objective objective;
    Vector x0;
    std::optional<double> log_truth;  // analytic log integral when known
};

namespace detail {

class ParamReader {
public:
    explicit ParamReader(std::map<std::string, double> p) : params_(std::move(p)) {}
    double get(const std::string& key, double fallback) {
        used_.insert(key);
        auto it = params_.find(key);
        return it == params_.end() ? fallback : it->second;
    }
    void finish(const std::string& model) const {
        for (const auto& [k, v] : params_)
            if (!used_.count(k))
                throw InvalidParameter("model '" + model + "' does not take parameter '" + k + "'");
    }

private:
    std::map<std::string, double> params_;
    std::set<std::string> used_;
};

inline int as_int(double v, const std::string& what) {
    if (!(v >= 1.0) || v != std::floor(v) || v > 1e9)
        throw InvalidParameter(what + " must be a positive integer");
    return static_cast<int>(v);
}

}  // namespace detail

inline ModelInstance make_model(const std::string& name,
                                const std::map<std::string, double>& params = {}) {
    detail::ParamReader pr(params);
    ModelInstance mi;
    mi.name = name;

    if (name == "gaussian") {
        const int d = detail::as_int(pr.get("d", 2), "d");
        pr.finish(name);
        mi.params = {{"d", static_cast<double>(d)}};
        mi.objective = gaussian_objective(d);
        mi.x0 = Vector::Zero(d);
        mi.log_truth = 0.5 * d * log_2pi;
    } else if (name == "quadratic") {
        const int d = detail::as_int(pr.get("d", 2), "d");
        const double cond = pr.get("cond", 10.0);
        const double seed = pr.get("seed", 1.0);
        pr.finish(name);
        auto [a, logdet] = random_spd_matrix(d, cond, static_cast<std::uint64_t>(seed));
        mi.params = {{"d", static_cast<double>(d)}, {"cond", cond}, {"seed", seed}};
        mi.objective = quadratic_objective(a);
        mi.x0 = Vector::Zero(d);
        mi.log_truth = 0.5 * d * log_2pi - 0.5 * logdet;
    } else if (name == "skew-t") {
        SkewTParams p;
        p.dim = detail::as_int(pr.get("d", 2), "d");
        p.a = pr.get("a", 1.5);
        p.c = pr.get("c", 1.5);
        p.nu = pr.get("nu", 3.0);
        pr.finish(name);
        mi.params = {{"d", static_cast<double>(p.dim)}, {"a", p.a}, {"c", p.c}, {"nu", p.nu}};
        mi.objective = skew_t_objective(p);
        mi.x0 = Vector::Zero(p.dim);
        mi.log_truth = 0.0;
    } else if (name == "gompertz-posterior") {
        const int n = detail::as_int(pr.get("n", 20), "n");
        const double seed = pr.get("seed", 1.0);
        const double alpha = pr.get("alpha", 2.0);
        const double beta = pr.get("beta", 3.0);
        const double prior_sd = pr.get("prior_sd", 10.0);
        pr.finish(name);
        GompertzPosterior gp;
        gp.data = gompertz_sample(alpha, beta, n, static_cast<std::uint64_t>(seed));
        gp.prior_sd = prior_sd;
        mi.params = {{"n", static_cast<double>(n)}, {"seed", seed}, {"alpha", alpha},
                     {"beta", beta},                {"prior_sd", prior_sd}};
        mi.objective = gompertz_objective(gp);
        mi.x0 = Vector(2);
        mi.x0 << std::log(alpha), std::log(beta);
    } else if (name == "glmm-binary") {
        const int n = detail::as_int(pr.get("n", 10), "n");
        const double seed = pr.get("seed", 1.0);
        const double beta = pr.get("beta", 2.0);
        const double sigma2 = pr.get("sigma2", 1.0);
        const double gen_beta = pr.get("gen_beta", beta);
        const double gen_sigma2 = pr.get("gen_sigma2", sigma2);
        pr.finish(name);
        BinaryGlmm g;
        g.responses = glmm_sample_binary(gen_beta, gen_sigma2, n, static_cast<std::uint64_t>(seed));
        g.beta = beta;
        g.sigma2 = sigma2;
        mi.params = {{"n", static_cast<double>(n)},   {"seed", seed},
                     {"beta", beta},                  {"sigma2", sigma2},
                     {"gen_beta", gen_beta},          {"gen_sigma2", gen_sigma2}};
        mi.objective = glmm_objective(g);
        mi.x0 = Vector::Zero(n);
    } else {
        throw UnknownModel("unknown model '" + name +
                           "'; known: gaussian, quadratic, skew-t, gompertz-posterior, glmm-binary");
    }
    return mi;
}

}  // namespace ilaplace
