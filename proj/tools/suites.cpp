#include "suites.hpp"

#include <cmath>
#include <ostream>
#include <stdexcept>

#include "tbm/io.hpp"
#include "tbm/metrics.hpp"
#include "tbm/parallel.hpp"
#include "tbm/rng.hpp"
#include "tbm/selection.hpp"
#include "tbm/simulate.hpp"

namespace tbm::suites {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample standard deviation (n - 1 denominator), 0 for a single value.
double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::string join_sizes(const std::vector<std::size_t>& v, char sep = 'x') {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(v[i]);
    }
    return out;
}

}  // namespace

std::vector<std::size_t> scaling_dims(std::size_t d1,
                                      const std::vector<std::size_t>& ranks) {
    for (std::size_t r : ranks) {
        if (r < 2) {
            throw std::invalid_argument(
                "scaling suites require every R_k >= 2");
        }
    }
    std::vector<std::size_t> dims(ranks.size());
    dims[0] = d1;
    const double budget =
        static_cast<double>(d1) * std::log(static_cast<double>(ranks[0]));
    for (std::size_t k = 1; k < ranks.size(); ++k) {
        const double dk = budget / std::log(static_cast<double>(ranks[k]));
        dims[k] = std::max<std::size_t>(
            ranks[k], static_cast<std::size_t>(std::llround(dk)));
    }
    return dims;
}

double rescaled_sample_size(const std::vector<std::size_t>& dims,
                            const std::vector<std::size_t>& ranks) {
    double prod = 1.0;
    for (std::size_t k = 1; k < dims.size(); ++k) {
        prod *= static_cast<double>(dims[k]);
    }
    return std::sqrt(prod / std::log(static_cast<double>(ranks[0])));
}

ScalingResult run_scaling(const ScalingConfig& config) {
    if (config.sims < 1 || config.d1_values.empty()) {
        throw std::invalid_argument("scaling suite needs sims and d1 values");
    }
    ScalingResult result;
    result.config = config;
    result.points.resize(config.d1_values.size());
    for (std::size_t p = 0; p < config.d1_values.size(); ++p) {
        result.points[p].dims = scaling_dims(config.d1_values[p], config.ranks);
        result.points[p].n_rescaled =
            rescaled_sample_size(result.points[p].dims, config.ranks);
        result.points[p].rmse.resize(static_cast<std::size_t>(config.sims));
    }

    const std::size_t sims = static_cast<std::size_t>(config.sims);
    parallel_for(result.points.size() * sims, [&](std::size_t job) {
        const std::size_t p = job / sims;
        const std::size_t s = job % sims;
        SimConfig sim;
        sim.dims = result.points[p].dims;
        sim.ranks = config.ranks;
        sim.sigma = config.sigma;
        sim.seed = derive_seed(config.seed, 2 * job);
        const SimOutput data = gen_data(sim);

        FitConfig fit_cfg;
        fit_cfg.ranks = config.ranks;
        fit_cfg.restarts = config.restarts;
        fit_cfg.max_iters = config.max_iters;
        fit_cfg.rel_tol = config.rel_tol;
        fit_cfg.seed = derive_seed(config.seed, 2 * job + 1);
        const BlockModelFit f = fit(data.y, fit_cfg);
        result.points[p].rmse[s] =
            rmse(data.theta_true, assemble_mean(f.model));
    });

    std::vector<double> xs, ys;
    for (ScalingPoint& pt : result.points) {
        pt.rmse_mean = mean_of(pt.rmse);
        pt.rmse_sd = sd_of(pt.rmse);
        xs.push_back(std::log(pt.n_rescaled));
        ys.push_back(std::log(pt.rmse_mean));
    }
    const double xbar = mean_of(xs), ybar = mean_of(ys);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    result.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    return result;
}

ScalingConfig scaling3_defaults(std::uint64_t seed, int sims) {
    ScalingConfig cfg;
    cfg.ranks = {2, 2, 2};
    cfg.d1_values = {20, 30, 40, 50, 60, 70};
    cfg.sigma = 3.0;
    cfg.sims = sims;
    cfg.seed = seed;
    return cfg;
}

ScalingConfig scaling4_defaults(std::uint64_t seed, int sims) {
    ScalingConfig cfg;
    cfg.ranks = {2, 2, 2, 2};
    cfg.d1_values = {10, 13, 16, 20};
    cfg.sigma = 3.0;
    cfg.sims = sims;
    cfg.seed = seed;
    return cfg;
}

BicRowResult run_bic_row(const BicRowConfig& config) {
    BicRowResult result;
    result.config = config;
    result.selected.resize(static_cast<std::size_t>(config.sims));

    parallel_for(static_cast<std::size_t>(config.sims), [&](std::size_t s) {
        SimConfig sim;
        sim.dims = config.dims;
        sim.ranks = config.true_ranks;
        sim.sigma = config.sigma;
        sim.seed = derive_seed(config.seed, 2 * s);
        const SimOutput data = gen_data(sim);

        FitConfig tmpl;
        tmpl.restarts = config.restarts;
        tmpl.max_iters = config.max_iters;
        tmpl.rel_tol = config.rel_tol;
        tmpl.seed = derive_seed(config.seed, 2 * s + 1);
        std::vector<std::pair<std::size_t, std::size_t>> ranges(
            config.dims.size(), {config.rank_lo, config.rank_hi});
        const RankSelection sel =
            select_ranks_coordinate(data.y, ranges, tmpl, config.passes);
        result.selected[s] = sel.best_ranks;
    });

    const std::size_t order = config.dims.size();
    result.mean.resize(order);
    result.sd.resize(order);
    for (std::size_t k = 0; k < order; ++k) {
        std::vector<double> vals;
        vals.reserve(result.selected.size());
        for (const auto& ranks : result.selected) {
            vals.push_back(static_cast<double>(ranks[k]));
        }
        result.mean[k] = mean_of(vals);
        result.sd[k] = sd_of(vals);
    }
    return result;
}

std::vector<BicRowConfig> bic_table_rows(std::uint64_t seed, int sims) {
    std::vector<BicRowConfig> rows;
    const std::vector<std::vector<std::size_t>> dim_sets{{40, 40, 40},
                                                         {40, 40, 80}};
    std::size_t index = 0;
    for (const auto& dims : dim_sets) {
        for (double sigma : {4.0, 8.0, 12.0}) {
            BicRowConfig row;
            row.dims = dims;
            row.true_ranks = {4, 4, 4};
            row.sigma = sigma;
            row.sims = sims;
            row.seed = derive_seed(seed, index++);
            rows.push_back(row);
        }
    }
    for (double sigma : {4.0, 8.0, 12.0}) {
        BicRowConfig row;
        row.dims = {40, 40, 40};
        row.true_ranks = {2, 3, 4};
        row.sigma = sigma;
        row.sims = sims;
        row.seed = derive_seed(seed, index++);
        rows.push_back(row);
    }
    return rows;
}

SparseRowResult run_sparse_row(const SparseRowConfig& config) {
    SparseRowResult result;
    result.config = config;
    result.sims.resize(static_cast<std::size_t>(config.sims));

    parallel_for(static_cast<std::size_t>(config.sims), [&](std::size_t s) {
        SimConfig sim;
        sim.dims = config.dims;
        sim.ranks = config.ranks;
        sim.sigma = config.sigma;
        sim.sparsity_p = config.sparsity_p;
        sim.seed = derive_seed(config.seed, 2 * s);
        const SimOutput data = gen_data(sim);

        FitConfig tmpl;
        tmpl.ranks = config.ranks;
        tmpl.restarts = config.restarts;
        tmpl.max_iters = config.max_iters;
        tmpl.rel_tol = config.rel_tol;
        tmpl.seed = derive_seed(config.seed, 2 * s + 1);

        SelectionGrid grid;
        grid.lambda_candidates =
            default_lambda_grid(data.y, config.ranks, tmpl, config.lambda_count);
        grid.fit_config_template = tmpl;
        grid.fit_config_template.penalty = Penalty::l0(0.0);
        const LambdaSelection sel =
            select_lambda(data.y, config.ranks, grid);

        const BlockModelFit* best = nullptr;
        for (const LambdaCandidate& row : sel.table) {
            if (row.lambda == sel.best_lambda && row.fit) best = &*row.fit;
        }
        const SparsityMetrics m = sparsity_metrics(data.truth, best->model);
        result.sims[s] = {sel.best_lambda, m.estimated_sparsity_rate,
                          m.correct_zero_rate, m.sparsity_error_rate};
    });

    auto collect = [&](auto field) {
        std::vector<double> vals;
        vals.reserve(result.sims.size());
        for (const SparseSimResult& r : result.sims) vals.push_back(r.*field);
        return vals;
    };
    const std::vector<double> lambdas = collect(&SparseSimResult::lambda);
    const std::vector<double> sparsity =
        collect(&SparseSimResult::estimated_sparsity);
    const std::vector<double> zeros = collect(&SparseSimResult::correct_zero_rate);
    const std::vector<double> errs =
        collect(&SparseSimResult::sparsity_error_rate);
    result.mean = {mean_of(lambdas), mean_of(sparsity), mean_of(zeros),
                   mean_of(errs)};
    result.sd = {sd_of(lambdas), sd_of(sparsity), sd_of(zeros), sd_of(errs)};
    return result;
}

std::vector<SparseRowConfig> sparse_table_rows(std::uint64_t seed, int sims) {
    std::vector<SparseRowConfig> rows;
    const std::vector<std::pair<double, double>> combos{
        {0.5, 4.0}, {0.5, 8.0}, {0.8, 8.0}};
    std::size_t index = 0;
    for (const auto& [p, sigma] : combos) {
        SparseRowConfig row;
        row.sparsity_p = p;
        row.sigma = sigma;
        row.sims = sims;
        row.seed = derive_seed(seed, index++);
        rows.push_back(row);
    }
    return rows;
}

// --------------------------- CSV emission ---------------------------------

namespace {

void csv_row(std::ostream& os, std::initializer_list<std::string> cells) {
    bool first = true;
    for (const std::string& c : cells) {
        if (!first) os << ',';
        os << c;
        first = false;
    }
    os << '\n';
}

std::string num(double v) { return format_double(v); }

}  // namespace

void write_scaling_csv(std::ostream& os, const ScalingResult& result) {
    csv_row(os, {"row_type", "ranks", "dims", "n_rescaled", "sim", "metric",
                 "value"});
    const std::string ranks = join_sizes(result.config.ranks);
    for (const ScalingPoint& pt : result.points) {
        const std::string dims = join_sizes(pt.dims);
        for (std::size_t s = 0; s < pt.rmse.size(); ++s) {
            csv_row(os, {"sim", ranks, dims, num(pt.n_rescaled),
                         std::to_string(s), "rmse", num(pt.rmse[s])});
        }
    }
    for (const ScalingPoint& pt : result.points) {
        const std::string dims = join_sizes(pt.dims);
        csv_row(os, {"summary", ranks, dims, num(pt.n_rescaled), "",
                     "rmse_mean", num(pt.rmse_mean)});
        csv_row(os, {"summary", ranks, dims, num(pt.n_rescaled), "", "rmse_sd",
                     num(pt.rmse_sd)});
    }
    csv_row(os, {"summary", ranks, "", "", "", "slope", num(result.slope)});
}

void write_bic_csv(std::ostream& os, const std::vector<BicRowResult>& rows) {
    csv_row(os, {"row_type", "dims", "true_ranks", "sigma", "sim", "metric",
                 "value"});
    for (const BicRowResult& row : rows) {
        const std::string dims = join_sizes(row.config.dims);
        const std::string ranks = join_sizes(row.config.true_ranks);
        const std::string sigma = num(row.config.sigma);
        for (std::size_t s = 0; s < row.selected.size(); ++s) {
            for (std::size_t k = 0; k < row.selected[s].size(); ++k) {
                csv_row(os, {"sim", dims, ranks, sigma, std::to_string(s),
                             "selected_r" + std::to_string(k),
                             std::to_string(row.selected[s][k])});
            }
        }
        for (std::size_t k = 0; k < row.mean.size(); ++k) {
            csv_row(os, {"summary", dims, ranks, sigma, "",
                         "mean_r" + std::to_string(k), num(row.mean[k])});
            csv_row(os, {"summary", dims, ranks, sigma, "",
                         "sd_r" + std::to_string(k), num(row.sd[k])});
        }
    }
}

void write_sparse_csv(std::ostream& os,
                      const std::vector<SparseRowResult>& rows) {
    csv_row(os,
            {"row_type", "p", "sigma", "sim", "metric", "value"});
    const std::vector<std::string> names{"lambda", "estimated_sparsity",
                                         "correct_zero_rate",
                                         "sparsity_error_rate"};
    for (const SparseRowResult& row : rows) {
        const std::string p = num(row.config.sparsity_p);
        const std::string sigma = num(row.config.sigma);
        for (std::size_t s = 0; s < row.sims.size(); ++s) {
            const SparseSimResult& r = row.sims[s];
            const double vals[4] = {r.lambda, r.estimated_sparsity,
                                    r.correct_zero_rate,
                                    r.sparsity_error_rate};
            for (std::size_t i = 0; i < 4; ++i) {
                csv_row(os, {"sim", p, sigma, std::to_string(s), names[i],
                             num(vals[i])});
            }
        }
        const double means[4] = {row.mean.lambda, row.mean.estimated_sparsity,
                                 row.mean.correct_zero_rate,
                                 row.mean.sparsity_error_rate};
        const double sds[4] = {row.sd.lambda, row.sd.estimated_sparsity,
                               row.sd.correct_zero_rate,
                               row.sd.sparsity_error_rate};
        for (std::size_t i = 0; i < 4; ++i) {
            csv_row(os, {"summary", p, sigma, "", "mean_" + names[i],
                         num(means[i])});
            csv_row(os, {"summary", p, sigma, "", "sd_" + names[i],
                         num(sds[i])});
        }
    }
}

}  // namespace tbm::suites
