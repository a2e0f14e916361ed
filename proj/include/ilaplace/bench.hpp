#pragma once

// Benchmark sweeps behind the CLI: the skew-t accuracy grid and the Gompertz
// posterior convergence-rate experiment.  Cells are generated in sorted grid
// order up front and filled in place, so row order never depends on
// completion order; failing cells carry an error string instead of aborting
// the sweep.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cubature.hpp"
#include "engine.hpp"
#include "models.hpp"

namespace ilaplace {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string csv_field(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}

// ---------------------------------------------------------------------------
// Single-run record, the unit every CLI invocation and sweep cell reduces to.

struct RunRecord {
    std::string model;
    std::map<std::string, double> params;
    std::string method;  // laplace | ilaplace-exact | ilaplace-approx | bruteforce
    double log_I = 0.0;
    std::vector<double> log_c_q;
    std::optional<double> truth_log_I;
    double wall_ms = 0.0;
    double quad_rel_tol = 1e-8;
    double grad_tol = 1e-8;
    std::string permutation = "identity";
    int threads = 1;
};

inline EngineOptions engine_options_for(const std::string& method, double quad_rel_tol,
                                        double grad_tol, int threads,
                                        const std::vector<int>& perm = {},
                                        bool use_gradient_order = false) {
    EngineOptions opts;
    opts.strategy = method == "ilaplace-approx" ? CondStrategy::approximate : CondStrategy::exact;
    opts.permutation = perm;
    opts.use_gradient_order = use_gradient_order;
    opts.quad_rel_tol = quad_rel_tol;
    opts.grad_tol = grad_tol;
    opts.parallelism = threads;
    return opts;
}

inline RunRecord run_single(const ModelInstance& mi, const std::string& method,
                            const EngineOptions& opts) {
    RunRecord rec;
    rec.model = mi.name;
    rec.params = mi.params;
    rec.method = method;
    rec.truth_log_I = mi.log_truth;
    rec.quad_rel_tol = opts.quad_rel_tol;
    rec.grad_tol = opts.grad_tol;
    rec.threads = opts.parallelism;

    const auto t0 = std::chrono::steady_clock::now();
    if (method == "laplace") {
        rec.log_I = standard_laplace(mi.objective, mi.x0, opts).log_I_L;
    } else if (method == "ilaplace-exact" || method == "ilaplace-approx") {
        ILaplaceResult r = improved_laplace(mi.objective, mi.x0, opts);
        rec.log_I = r.log_I_iL;
        rec.log_c_q.assign(r.log_c_q.data(), r.log_c_q.data() + r.log_c_q.size());
    } else if (method == "bruteforce") {
        mi.objective.budget->reset(opts.max_evals);
        rec.log_I = brute_force_integral(mi.objective, mi.x0, opts.quad_rel_tol, opts.grad_tol,
                                         opts.max_iter);
    } else {
        throw InvalidParameter("unknown method '" + method +
                               "'; known: laplace, ilaplace-exact, ilaplace-approx, bruteforce");
    }
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

// ---------------------------------------------------------------------------
// Skew-t accuracy grid.  True log integral is 0 for every cell.

struct SkewtBenchConfig {
    std::vector<int> dims = {2, 5, 10, 20, 50};
    std::vector<double> nus = {3.0, 5.0, 10.0, 20.0};
    // (a, c) scenarios; default: mild symmetric and strongly skewed.
    std::vector<std::pair<double, double>> scenarios = {{1.5, 1.5}, {12.0, 0.5}};
    std::vector<std::string> methods = {"laplace", "ilaplace-exact", "ilaplace-approx"};
    double quad_rel_tol = 1e-8;
    double grad_tol = 1e-8;
    int threads = 1;  // sweep-level; each cell runs the engine single-threaded
};

struct SkewtCell {
    double a = 0.0, c = 0.0;
    int d = 0;
    double nu = 0.0;
    std::string method;
    std::optional<double> log_I;
    double wall_ms = 0.0;
    std::string error;
};

inline std::vector<SkewtCell> skewt_benchmark(const SkewtBenchConfig& cfg) {
    std::vector<SkewtCell> cells;
    for (const auto& [a, c] : cfg.scenarios)
        for (int d : cfg.dims)
            for (double nu : cfg.nus)
                for (const auto& method : cfg.methods)
                    cells.push_back(SkewtCell{a, c, d, nu, method, std::nullopt, 0.0, ""});

    detail::run_indexed(static_cast<int>(cells.size()), cfg.threads, [&](int i) {
        SkewtCell& cell = cells[i];
        try {
            ModelInstance mi = make_model("skew-t", {{"d", static_cast<double>(cell.d)},
                                                     {"a", cell.a},
                                                     {"c", cell.c},
                                                     {"nu", cell.nu}});
            RunRecord rec = run_single(
                mi, cell.method, engine_options_for(cell.method, cfg.quad_rel_tol, cfg.grad_tol, 1));
            cell.log_I = rec.log_I;
            cell.wall_ms = rec.wall_ms;
        } catch (const std::exception& e) {
            cell.error = e.what();
        }
    });
    return cells;
}

inline std::string skewt_csv_header() {
    return "model,a,c,d,nu,method,log_I,truth_log_I,wall_time_ms,quad_rel_tol,grad_tol,error";
}

inline std::string skewt_csv_row(const SkewtCell& cell, const SkewtBenchConfig& cfg) {
    std::string row = "skew-t";
    row += "," + format_double(cell.a);
    row += "," + format_double(cell.c);
    row += "," + std::to_string(cell.d);
    row += "," + format_double(cell.nu);
    row += "," + cell.method;
    row += "," + csv_field(cell.log_I);
    row += ",0";
    row += "," + format_double(cell.wall_ms);
    row += "," + format_double(cfg.quad_rel_tol);
    row += "," + format_double(cfg.grad_tol);
    row += "," + csv_field(cell.error);
    return row;
}

// ---------------------------------------------------------------------------
// Gompertz posterior convergence experiment: datasets of growing size, truth
// from the cubature oracle, least-squares slope of log relative error
// against log n per method.

struct GompertzBenchConfig {
    int n_start = 20;
    int steps = 15;
    int reps = 20;
    std::uint64_t seed = 1;
    double alpha = 2.0;
    double beta = 3.0;
    std::vector<std::string> methods = {"laplace", "ilaplace-exact"};
    double quad_rel_tol = 1e-8;
    double grad_tol = 1e-8;
    double truth_rel_tol = 1e-9;
    int threads = 1;
};

// n_1 = n_start, n_i = ceil(n_{i-1} + 1.2 sqrt(n_{i-1})).
inline std::vector<int> gompertz_sample_sizes(int n_start, int steps) {
    std::vector<int> ns;
    double n = n_start;
    for (int i = 0; i < steps; ++i) {
        ns.push_back(static_cast<int>(n));
        n = std::ceil(n + 1.2 * std::sqrt(n));
    }
    return ns;
}

struct GompertzCell {
    int n = 0;
    int rep = 0;
    std::uint64_t dataset_seed = 0;
    std::string method;
    std::optional<double> log_I;
    std::optional<double> truth_log_I;
    std::optional<double> rel_err;  // |exp(log_I - truth) - 1|
    double wall_ms = 0.0;
    std::string error;
};

struct GompertzBenchResult {
    std::vector<GompertzCell> cells;
    // Per method: OLS slope of per-cell log(rel_err) on log(n) over the
    // successful cells with a nonzero error; count of cells that went in.
    std::map<std::string, double> slopes;
    std::map<std::string, int> slope_cells;
};

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const int n = static_cast<int>(x.size());
    double mx = 0.0, my = 0.0;
    for (int i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

inline GompertzBenchResult gompertz_benchmark(const GompertzBenchConfig& cfg) {
    const std::vector<int> ns = gompertz_sample_sizes(cfg.n_start, cfg.steps);
    const int n_methods = static_cast<int>(cfg.methods.size());

    GompertzBenchResult out;
    for (int si = 0; si < cfg.steps; ++si)
        for (int rep = 0; rep < cfg.reps; ++rep) {
            // Kept within 53 bits so the seed survives the CSV double round trip.
            const std::uint64_t ds = mix_seed(cfg.seed, si, rep) >> 11;
            for (const auto& method : cfg.methods) {
                GompertzCell cell;
                cell.n = ns[si];
                cell.rep = rep;
                cell.dataset_seed = ds;
                cell.method = method;
                out.cells.push_back(std::move(cell));
            }
        }

    // One task per dataset: truth is computed once and shared by its methods.
    const int n_datasets = cfg.steps * cfg.reps;
    detail::run_indexed(n_datasets, cfg.threads, [&](int t) {
        GompertzCell* group = &out.cells[t * n_methods];
        std::map<std::string, double> params = {
            {"n", static_cast<double>(group->n)},
            {"seed", static_cast<double>(group->dataset_seed)},
            {"alpha", cfg.alpha},
            {"beta", cfg.beta}};

        std::optional<double> truth;
        std::string truth_error;
        try {
            ModelInstance mi = make_model("gompertz-posterior", params);
            truth = run_single(mi, "bruteforce",
                               engine_options_for("bruteforce", cfg.truth_rel_tol, cfg.grad_tol, 1))
                        .log_I;
        } catch (const std::exception& e) {
            truth_error = std::string("truth: ") + e.what();
        }

        for (int m = 0; m < n_methods; ++m) {
            GompertzCell& cell = group[m];
            cell.truth_log_I = truth;
            if (!truth) {
                cell.error = truth_error;
                continue;
            }
            try {
                ModelInstance mi = make_model("gompertz-posterior", params);
                RunRecord rec = run_single(
                    mi, cell.method,
                    engine_options_for(cell.method, cfg.quad_rel_tol, cfg.grad_tol, 1));
                cell.log_I = rec.log_I;
                cell.wall_ms = rec.wall_ms;
                cell.rel_err = std::abs(std::expm1(rec.log_I - *truth));
            } catch (const std::exception& e) {
                cell.error = e.what();
            }
        }
    });

    // Least-squares slope of per-cell log relative error against log n.
    for (const auto& method : cfg.methods) {
        std::vector<double> lx, ly;
        std::set<int> sizes;
        for (const auto& cell : out.cells)
            if (cell.method == method && cell.rel_err && *cell.rel_err > 0.0) {
                lx.push_back(std::log(static_cast<double>(cell.n)));
                ly.push_back(std::log(*cell.rel_err));
                sizes.insert(cell.n);
            }
        out.slope_cells[method] = static_cast<int>(lx.size());
        if (sizes.size() >= 2) out.slopes[method] = least_squares_slope(lx, ly);
    }
    return out;
}

inline std::string gompertz_csv_header() {
    return "model,n,rep,dataset_seed,alpha,beta,method,log_I,truth_log_I,rel_err,"
           "wall_time_ms,quad_rel_tol,grad_tol,error";
}

inline std::string gompertz_csv_row(const GompertzCell& cell, const GompertzBenchConfig& cfg) {
    std::string row = "gompertz-posterior";
    row += "," + std::to_string(cell.n);
    row += "," + std::to_string(cell.rep);
    row += "," + std::to_string(cell.dataset_seed);
    row += "," + format_double(cfg.alpha);
    row += "," + format_double(cfg.beta);
    row += "," + cell.method;
    row += "," + csv_field(cell.log_I);
    row += "," + csv_field(cell.truth_log_I);
    row += "," + csv_field(cell.rel_err);
    row += "," + format_double(cell.wall_ms);
    row += "," + format_double(cfg.quad_rel_tol);
    row += "," + format_double(cfg.grad_tol);
    row += "," + csv_field(cell.error);
    return row;
}

}  // namespace ilaplace
