#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ilaplace/ilaplace.hpp"

using ilaplace::Matrix;
using ilaplace::Objective;
using ilaplace::Vector;

namespace {

// Multivariate t negative log density, written from scratch.
double mvt_neg_log_density(int d, double nu, const Vector& y) {
    const double c =
        std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) - 0.5 * d * std::log(nu * M_PI);
    return 0.5 * (nu + d) * std::log1p(y.squaredNorm() / nu) - c;
}

double max_abs_diff(const Vector& a, const Vector& b) {
    return (a - b).lpNorm<Eigen::Infinity>();
}

}  // namespace

TEST_CASE("the skewed density reduces to the multivariate t when a = c = nu/2") {
    for (int d : {1, 2, 4})
        for (double nu : {3.0, 5.0}) {
            ilaplace::SkewTParams p;
            p.dim = d;
            p.nu = nu;
            p.a = p.c = 0.5 * nu;
            ilaplace::Rng rng(17);
            for (int rep = 0; rep < 5; ++rep) {
                Vector y(d);
                for (int i = 0; i < d; ++i) y[i] = 2.0 * rng.normal();
                CHECK(ilaplace::skew_t_neg_log_density(p, y) ==
                      Catch::Approx(mvt_neg_log_density(d, nu, y)).margin(1e-12));
            }
        }
}

TEST_CASE("the univariate symmetric case has the known density at zero") {
    ilaplace::SkewTParams p;
    p.dim = 1;
    p.a = p.c = 1.5;
    p.nu = 3.0;
    Vector zero = Vector::Zero(1);
    const double density = std::exp(-ilaplace::skew_t_neg_log_density(p, zero));
    CHECK(density == Catch::Approx(2.0 / (M_PI * std::sqrt(3.0))).margin(1e-14));
}

TEST_CASE("the bivariate skewed density integrates to one") {
    ilaplace::SkewTParams p;
    p.dim = 2;
    p.a = 1.5;
    p.c = 1.5;
    p.nu = 3.0;
    // Simpson over (u1, u2) after yi = tan(ui); the transformed integrand
    // vanishes smoothly at the boundary.
    const int n = 1600;
    const double lo = -0.5 * M_PI, h = M_PI / n;
    auto f = [&](double u1, double u2) {
        Vector y(2);
        y << std::tan(u1), std::tan(u2);
        const double sec1 = 1.0 / std::cos(u1), sec2 = 1.0 / std::cos(u2);
        return std::exp(-ilaplace::skew_t_neg_log_density(p, y)) * sec1 * sec1 * sec2 * sec2;
    };
    auto w = [&](int i) { return (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0); };
    double total = 0.0;
    for (int i = 0; i <= n; ++i) {
        double row = 0.0;
        for (int j = 0; j <= n; ++j) row += w(j) * f(lo + i * h, lo + j * h);
        total += w(i) * row;
    }
    total *= h * h / 9.0;
    CHECK(total == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("skewed density derivatives match finite differences") {
    ilaplace::SkewTParams p;
    p.dim = 3;
    p.a = 4.0;
    p.c = 1.0;
    p.nu = 3.0;
    const Objective obj = ilaplace::skew_t_objective(p);
    Objective value_only;
    value_only.dim = obj.dim;
    value_only.value_fn = obj.value_fn;

    ilaplace::Rng rng(23);
    for (int rep = 0; rep < 6; ++rep) {
        Vector y(3);
        for (int i = 0; i < 3; ++i) y[i] = 1.5 * rng.normal();
        const Vector g = ilaplace::gradient(obj, y);
        const Vector g_fd = ilaplace::fd_gradient(value_only, y);
        CHECK(max_abs_diff(g, g_fd) < 1e-6 * (1.0 + g.lpNorm<Eigen::Infinity>()));

        const Matrix v = ilaplace::hessian(obj, y);
        const Matrix v_fd = ilaplace::fd_hessian(obj, y);
        CHECK((v - v_fd).lpNorm<Eigen::Infinity>() <
              1e-4 * (1.0 + v.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("skew parameters are validated") {
    ilaplace::SkewTParams p;
    p.dim = 0;
    CHECK_THROWS_AS(ilaplace::skew_t_objective(p), ilaplace::InvalidParameter);
    p.dim = 2;
    p.a = 0.0;
    CHECK_THROWS_AS(ilaplace::skew_t_objective(p), ilaplace::InvalidParameter);
    p.a = 1.0;
    p.nu = -1.0;
    CHECK_THROWS_AS(ilaplace::skew_t_objective(p), ilaplace::InvalidParameter);
}

TEST_CASE("the hazard-model posterior has closed forms for one observation") {
    ilaplace::GompertzPosterior m;
    m.data = {0.5};
    m.prior_sd = 10.0;
    const Objective obj = ilaplace::gompertz_objective(m);

    Vector theta = Vector::Zero(2);  // alpha = beta = 1
    const double e = std::exp(0.5);
    const double expected_h = (e - 1.0) - 0.5 + std::log(2.0 * M_PI * 100.0);
    CHECK(ilaplace::evaluate(obj, theta) == Catch::Approx(expected_h).margin(1e-14));

    const Vector g = ilaplace::gradient(obj, theta);
    CHECK(g[0] == Catch::Approx((e - 1.0) - 1.0).margin(1e-14));
    CHECK(g[1] == Catch::Approx(0.5 * (e - 1.0) - 1.0).margin(1e-14));

    const Matrix v = ilaplace::hessian(obj, theta);
    CHECK(v(0, 0) == Catch::Approx((e - 1.0) + 0.01).margin(1e-14));
    CHECK(v(0, 1) == Catch::Approx(0.5 * e).margin(1e-14));
    CHECK(v(1, 1) == Catch::Approx(0.5 * (e - 1.0) + 0.25 * e + 0.01).margin(1e-14));
}

TEST_CASE("hazard-model derivatives match finite differences") {
    ilaplace::GompertzPosterior m;
    m.data = ilaplace::gompertz_sample(2.0, 3.0, 20, 1);
    const Objective obj = ilaplace::gompertz_objective(m);
    Objective value_only;
    value_only.dim = 2;
    value_only.value_fn = obj.value_fn;

    for (auto [t1, t2] : {std::pair{0.2, 0.9}, {0.78, 1.37}, {-0.5, 0.3}}) {
        Vector th(2);
        th << t1, t2;
        const Vector g = ilaplace::gradient(obj, th);
        const Vector g_fd = ilaplace::fd_gradient(value_only, th);
        CHECK(max_abs_diff(g, g_fd) < 1e-5 * (1.0 + g.lpNorm<Eigen::Infinity>()));

        const Matrix v = ilaplace::hessian(obj, th);
        const Matrix v_fd = ilaplace::fd_hessian(obj, th);
        CHECK((v - v_fd).lpNorm<Eigen::Infinity>() <
              1e-4 * (1.0 + v.lpNorm<Eigen::Infinity>()));
    }
}

TEST_CASE("the exponential-difference kernel avoids cancellation") {
    // e^{t1}(e^{by} - 1) against the reference built from expm1 directly.
    for (double by : {1e-9, 1e-3, 1.0, 50.0}) {
        const double expected = std::exp(2.0) * std::expm1(by);
        CHECK(ilaplace::detail::gompertz_exp_diff(2.0, by) ==
              Catch::Approx(expected).epsilon(1e-13));
    }
    // Past the expm1 overflow point the guarded forms stay finite.
    const double v = ilaplace::detail::gompertz_bem1(710.0, 1e-3);
    CHECK(std::isfinite(v));
    CHECK(std::log(v) == Catch::Approx(710.001 + std::log(1e-3)).margin(1e-10));
    CHECK(std::isfinite(ilaplace::detail::gompertz_bexp(710.0, 1e-3)));
}

TEST_CASE("the hazard sampler follows its distribution") {
    CHECK(ilaplace::gompertz_quantile(2.0, 3.0, 0.0) == 0.0);
    CHECK(ilaplace::gompertz_quantile(2.0, 3.0, 0.5) ==
          Catch::Approx(0.099187761595862053).margin(1e-16));
    CHECK(ilaplace::gompertz_quantile(2.0, 3.0, 0.3) <
          ilaplace::gompertz_quantile(2.0, 3.0, 0.7));

    const int n = 2000;
    std::vector<double> y = ilaplace::gompertz_sample(2.0, 3.0, n, 42);
    std::sort(y.begin(), y.end());
    double ks = 0.0;
    for (int i = 0; i < n; ++i) {
        const double f = -std::expm1(2.0 * (1.0 - std::exp(3.0 * y[i])));  // CDF
        ks = std::max(ks, std::max(f - i / double(n), (i + 1) / double(n) - f));
    }
    CHECK(ks < 1.628 / std::sqrt(double(n)));  // 1% critical value

    CHECK_THROWS_AS(ilaplace::gompertz_sample(0.0, 3.0, 5, 1), ilaplace::InvalidParameter);
    CHECK_THROWS_AS(ilaplace::gompertz_sample(2.0, 3.0, 0, 1), ilaplace::InvalidParameter);
    ilaplace::GompertzPosterior empty;
    CHECK_THROWS_AS(ilaplace::gompertz_objective(empty), ilaplace::InvalidParameter);
}

TEST_CASE("the random-intercept joint has a closed form per observation") {
    ilaplace::BinaryGlmm m;
    m.responses = {0};
    m.beta = 0.0;
    m.sigma2 = 1.0;
    const Objective obj = ilaplace::glmm_objective(m);
    Vector u(1);
    u << 0.3;
    const double expected =
        std::log1p(std::exp(0.3)) + 0.5 * 0.3 * 0.3 + 0.5 * std::log(2.0 * M_PI);
    CHECK(ilaplace::evaluate(obj, u) == Catch::Approx(expected).margin(1e-14));

    const Vector g = ilaplace::gradient(obj, u);
    const double logistic = 1.0 / (1.0 + std::exp(-0.3));
    CHECK(g[0] == Catch::Approx(logistic + 0.3).margin(1e-14));

    const Matrix v = ilaplace::hessian(obj, u);
    CHECK(v(0, 0) == Catch::Approx(logistic * (1.0 - logistic) + 1.0).margin(1e-14));
}

TEST_CASE("random-intercept derivatives match finite differences") {
    ilaplace::BinaryGlmm m;
    m.responses = {1, 0, 1, 1};
    m.beta = 2.0;
    m.sigma2 = 1.5;
    const Objective obj = ilaplace::glmm_objective(m);
    Objective value_only;
    value_only.dim = obj.dim;
    value_only.value_fn = obj.value_fn;

    Vector u(4);
    u << 0.5, -1.0, 0.0, 2.0;
    const Vector g = ilaplace::gradient(obj, u);
    CHECK(max_abs_diff(g, ilaplace::fd_gradient(value_only, u)) < 1e-6);
    const Matrix v = ilaplace::hessian(obj, u);
    CHECK((v - ilaplace::fd_hessian(obj, u)).lpNorm<Eigen::Infinity>() < 1e-5);

    // Each gradient component depends only on its own coordinate.
    REQUIRE(obj.grad_deps.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(obj.grad_deps[i] == std::vector<int>{i});
}

TEST_CASE("random-intercept inputs are validated") {
    ilaplace::BinaryGlmm m;
    m.responses = {0, 2};
    CHECK_THROWS_AS(ilaplace::glmm_objective(m), ilaplace::InvalidParameter);
    m.responses = {};
    CHECK_THROWS_AS(ilaplace::glmm_objective(m), ilaplace::InvalidParameter);
    m.responses = {0, 1};
    m.sigma2 = 0.0;
    CHECK_THROWS_AS(ilaplace::glmm_objective(m), ilaplace::InvalidParameter);
    CHECK_THROWS_AS(ilaplace::glmm_sample_binary(1.0, -1.0, 5, 1), ilaplace::InvalidParameter);

    const std::vector<int> y = ilaplace::glmm_sample_binary(2.0, 1.0, 50, 7);
    CHECK(y.size() == 50);
    for (int yi : y) CHECK((yi == 0 || yi == 1));
    CHECK(y == ilaplace::glmm_sample_binary(2.0, 1.0, 50, 7));
}

TEST_CASE("seeded draws are pinned to their standard values") {
    ilaplace::Rng rng(1);
    CHECK(rng.uniform01() == 0.13387664401253269);
    CHECK(rng.uniform01() == 0.13640703636619728);
    CHECK(rng.uniform01() == 0.45121490384453816);

    ilaplace::Rng rng2(1);
    CHECK(rng2.normal() == 1.3128515289855616);
    CHECK(rng2.normal() == 1.5159465040060629);

    CHECK(ilaplace::mix_seed(1, 0, 0) == 770544052526001461ULL);
    CHECK(ilaplace::mix_seed(1, 2, 3) == 11776908999062698741ULL);
    CHECK(ilaplace::mix_seed(7, 4, 9) == 12681446699838032352ULL);

    ilaplace::Rng rng3(99);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng3.uniform01();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("random SPD matrices hit the requested spectrum") {
    auto [a, logdet] = ilaplace::random_spd_matrix(6, 1000.0, 4);
    CHECK((a - a.transpose()).lpNorm<Eigen::Infinity>() == 0.0);

    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    const Vector ev = es.eigenvalues();
    CHECK(ev.minCoeff() > 0.0);
    CHECK(ev.maxCoeff() / ev.minCoeff() == Catch::Approx(1000.0).epsilon(1e-8));
    CHECK(ev.array().log().sum() == Catch::Approx(logdet).margin(1e-9));

    auto [a2, logdet2] = ilaplace::random_spd_matrix(6, 1000.0, 4);
    (void)logdet2;
    CHECK((a - a2).lpNorm<Eigen::Infinity>() == 0.0);
    auto [a3, logdet3] = ilaplace::random_spd_matrix(6, 1000.0, 5);
    (void)logdet3;
    CHECK((a - a3).lpNorm<Eigen::Infinity>() > 0.0);

    CHECK_THROWS_AS(ilaplace::random_spd_matrix(0, 10.0, 1), ilaplace::InvalidParameter);
    CHECK_THROWS_AS(ilaplace::random_spd_matrix(3, 0.5, 1), ilaplace::InvalidParameter);
}

TEST_CASE("the registry resolves names, defaults, and truth values") {
    const auto gauss = ilaplace::make_model("gaussian");
    CHECK(gauss.objective.dim == 2);
    CHECK(gauss.x0.size() == 2);
    REQUIRE(gauss.log_truth.has_value());
    CHECK(*gauss.log_truth == Catch::Approx(ilaplace::log_2pi).margin(1e-15));

    const auto quad = ilaplace::make_model("quadratic", {{"d", 3.0}, {"cond", 100.0}, {"seed", 2.0}});
    CHECK(quad.objective.dim == 3);
    REQUIRE(quad.log_truth.has_value());
    const Matrix a = ilaplace::hessian(quad.objective, ilaplace::Vector::Zero(3));
    const double logdet = std::log(a.determinant());
    CHECK(*quad.log_truth == Catch::Approx(1.5 * ilaplace::log_2pi - 0.5 * logdet).margin(1e-9));

    const auto skew = ilaplace::make_model("skew-t", {{"d", 4.0}, {"a", 4.0}, {"c", 1.0}});
    CHECK(skew.objective.dim == 4);
    CHECK(skew.params.at("nu") == 3.0);
    REQUIRE(skew.log_truth.has_value());
    CHECK(*skew.log_truth == 0.0);

    const auto gom = ilaplace::make_model("gompertz-posterior", {{"n", 10.0}, {"seed", 3.0}});
    CHECK(gom.objective.dim == 2);
    CHECK(gom.x0[0] == Catch::Approx(std::log(2.0)));
    CHECK(gom.x0[1] == Catch::Approx(std::log(3.0)));
    CHECK_FALSE(gom.log_truth.has_value());

    const auto glmm = ilaplace::make_model("glmm-binary", {{"n", 5.0}});
    CHECK(glmm.objective.dim == 5);
    CHECK(glmm.x0.lpNorm<Eigen::Infinity>() == 0.0);
    CHECK_FALSE(glmm.log_truth.has_value());
}

TEST_CASE("the registry rejects unknown names and stray parameters") {
    CHECK_THROWS_AS(ilaplace::make_model("cauchy"), ilaplace::UnknownModel);
    try {
        ilaplace::make_model("cauchy");
    } catch (const ilaplace::UnknownModel& e) {
        CHECK(std::string(e.what()).find("known:") != std::string::npos);
    }
    CHECK_THROWS_AS(ilaplace::make_model("gaussian", {{"nu", 3.0}}), ilaplace::InvalidParameter);
    CHECK_THROWS_AS(ilaplace::make_model("gaussian", {{"d", 2.5}}), ilaplace::InvalidParameter);
    CHECK_THROWS_AS(ilaplace::make_model("gaussian", {{"d", 0.0}}), ilaplace::InvalidParameter);
    CHECK_THROWS_AS(ilaplace::make_model("gaussian", {{"d", 2e9}}), ilaplace::InvalidParameter);
}
