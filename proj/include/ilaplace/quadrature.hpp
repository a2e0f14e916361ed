#pragma once

// Adaptive 1D quadrature of exp(log_f) on a bracket, working in log space.
// The integrand is rescaled by its peak over the first panel refinement so
// that quantities near the maximum are O(1); the returned value is
// peak + log(integral of the rescaled function).  Panels are refined worst
// error first, the per-panel error being the difference between the 15-point
// Kronrod rule and its embedded 7-point Gauss rule.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace ilaplace {

struct QuadratureResult {
    double log_value = 0.0;
    double abs_err_est = 0.0;  // on the peak-shifted linear scale
    long long n_evals = 0;
    double peak_shift = 0.0;
    int n_panels = 0;
    double lo = 0.0, hi = 0.0;
};

namespace detail {

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule
// (positive half; the rule is symmetric).
inline constexpr std::array<double, 8> gk_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk_wk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gk_wg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct RawPanel {
    double a, b;
    std::array<double, 15> lf;  // log_f at the 15 nodes
};

template <class LogF>
RawPanel eval_panel(LogF&& log_f, double a, double b) {
    RawPanel p{a, b, {}};
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    for (int k = 0; k < 7; ++k) {
        p.lf[k] = log_f(c - hw * gk_x[k]);
        p.lf[14 - k] = log_f(c + hw * gk_x[k]);
    }
    p.lf[7] = log_f(c);
    return p;
}

struct Panel {
    double a, b;
    double integral;  // Kronrod estimate of the shifted integrand
    double err;       // |Kronrod - Gauss|
};

inline Panel finalize_panel(const RawPanel& p, double peak) {
    const double hw = 0.5 * (p.b - p.a);
    double k15 = 0.0, g7 = 0.0;
    for (int k = 0; k < 7; ++k) {
        const double pair = std::exp(p.lf[k] - peak) + std::exp(p.lf[14 - k] - peak);
        k15 += gk_wk[k] * pair;
        if (k % 2 == 1) g7 += gk_wg[k / 2] * pair;
    }
    const double fc = std::exp(p.lf[7] - peak);
    k15 += gk_wk[7] * fc;
    g7 += gk_wg[3] * fc;
    return {p.a, p.b, k15 * hw, std::abs(k15 - g7) * hw};
}

}  // namespace detail

// Outward doubling bracket search: probes center +/- 3 * scale * 2^k until
// log_f has dropped by tail_drop relative to the center on each side.
template <class LogF>
std::pair<double, double> find_support_bounds(LogF&& log_f, double center, double scale,
                                              double tail_drop = 30.0) {
    if (!(scale > 0.0) || !std::isfinite(scale) || !std::isfinite(center))
        throw InvalidParameter("find_support_bounds: bad center/scale");
    const double threshold = log_f(center) - tail_drop;

    auto search = [&](double sign) {
        double step = 3.0 * scale;
        for (int k = 0; k <= 60; ++k, step *= 2.0) {
            const double t = center + sign * step;
            if (log_f(t) <= threshold) return t;
        }
        throw UnboundedProfile("no support bound within 60 step doublings");
    };
    const double hi = search(+1.0);
    const double lo = search(-1.0);
    return {lo, hi};
}

template <class LogF>
QuadratureResult integrate_adaptive(LogF&& log_f, double lo, double hi,
                                    double rel_tol = 1e-8, double abs_tol = 1e-12,
                                    int max_panels = 2000) {
    if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw InvalidParameter("integrate_adaptive: bad bracket");

    QuadratureResult res;
    res.lo = lo;
    res.hi = hi;
    long long evals = 0;
    auto counted = [&](double t) {
        ++evals;
        return log_f(t);
    };

    // First refinement fixes the peak shift.
    const double mid = 0.5 * (lo + hi);
    detail::RawPanel r1 = detail::eval_panel(counted, lo, mid);
    detail::RawPanel r2 = detail::eval_panel(counted, mid, hi);
    double peak = -std::numeric_limits<double>::infinity();
    for (double v : r1.lf) peak = std::max(peak, v);
    for (double v : r2.lf) peak = std::max(peak, v);
    if (!std::isfinite(peak)) peak = 0.0;
    res.peak_shift = peak;

    std::vector<detail::Panel> leaves;
    leaves.reserve(64);
    leaves.push_back(detail::finalize_panel(r1, peak));
    leaves.push_back(detail::finalize_panel(r2, peak));
    auto worse = [](const detail::Panel& x, const detail::Panel& y) { return x.err < y.err; };
    std::make_heap(leaves.begin(), leaves.end(), worse);

    auto totals = [&leaves] {
        double ti = 0.0, te = 0.0;
        for (const auto& p : leaves) {
            ti += p.integral;
            te += p.err;
        }
        return std::pair{ti, te};
    };

    auto [total_i, total_err] = totals();
    while (total_err > std::max(abs_tol, rel_tol * std::abs(total_i)) &&
           static_cast<int>(leaves.size()) < max_panels) {
        std::pop_heap(leaves.begin(), leaves.end(), worse);
        const detail::Panel worst = leaves.back();
        leaves.pop_back();

        const double m = 0.5 * (worst.a + worst.b);
        leaves.push_back(detail::finalize_panel(detail::eval_panel(counted, worst.a, m), peak));
        std::push_heap(leaves.begin(), leaves.end(), worse);
        leaves.push_back(detail::finalize_panel(detail::eval_panel(counted, m, worst.b), peak));
        std::push_heap(leaves.begin(), leaves.end(), worse);

        std::tie(total_i, total_err) = totals();
    }
    if (total_err > std::max(abs_tol, rel_tol * std::abs(total_i)))
        throw ToleranceNotMet("adaptive quadrature hit the panel limit of " +
                              std::to_string(max_panels) + " with error estimate " +
                              std::to_string(total_err));

    // Deterministic final reduction: leaves summed in bracket order.
    std::sort(leaves.begin(), leaves.end(),
              [](const detail::Panel& x, const detail::Panel& y) { return x.a < y.a; });
    double integral = 0.0;
    for (const auto& p : leaves) integral += p.integral;

    res.log_value = peak + std::log(integral);
    res.abs_err_est = total_err;
    res.n_evals = evals;
    res.n_panels = static_cast<int>(leaves.size());
    return res;
}

// Bracket search composed with adaptive integration; the result's n_evals
// counts the bracket probes as well.
template <class LogF>
QuadratureResult normalize_profile(LogF&& log_f, double center, double scale,
                                   double rel_tol = 1e-8, double abs_tol = 1e-12,
                                   double tail_drop = 30.0) {
    long long probe_evals = 0;
    auto counted = [&](double t) {
        ++probe_evals;
        return log_f(t);
    };
    auto [lo, hi] = find_support_bounds(counted, center, scale, tail_drop);
    const long long bound_evals = probe_evals;
    QuadratureResult res = integrate_adaptive(log_f, lo, hi, rel_tol, abs_tol);
    res.n_evals += bound_evals;
    return res;
}

}  // namespace ilaplace
