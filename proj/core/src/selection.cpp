#include "tbm/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace tbm {

namespace {

// Membership complexity in decimal logs. The log base is not a cosmetic
// choice here: p_e mixes a log-free core-parameter count with d_k log R_k
// terms, so rescaling the log rescales the selection pressure on cluster
// counts. Natural logs over-penalize and collapse high-noise selections to
// the smallest candidate; decimal logs keep the criterion informative there
// while still selecting exactly at moderate noise.
double membership_complexity(const std::vector<std::size_t>& dims,
                             const std::vector<std::size_t>& ranks) {
    double bits = 0.0;
    for (std::size_t k = 0; k < dims.size(); ++k) {
        bits += static_cast<double>(dims[k]) *
                std::log10(static_cast<double>(ranks[k]));
    }
    return bits;
}

}  // namespace

double effective_params(const std::vector<std::size_t>& dims,
                        const std::vector<std::size_t>& ranks) {
    if (dims.size() != ranks.size()) {
        throw std::invalid_argument("dims/ranks order mismatch");
    }
    double core_params = 1.0;
    for (std::size_t r : ranks) core_params *= static_cast<double>(r);
    return core_params + membership_complexity(dims, ranks);
}

double effective_params_sparse(const std::vector<std::size_t>& dims,
                               const std::vector<std::size_t>& ranks,
                               const Tensor& sparse_core) {
    if (dims.size() != ranks.size()) {
        throw std::invalid_argument("dims/ranks order mismatch");
    }
    std::size_t nnz = 0;
    for (double v : sparse_core.data()) nnz += (v != 0.0);
    return static_cast<double>(nnz) + membership_complexity(dims, ranks);
}

namespace {

double bic_from_parts(const Tensor& y, double residual, double p_e) {
    const std::vector<std::size_t>& dims = y.dims();
    double log_d_sum = 0.0;
    double d_total = 1.0;
    for (std::size_t d : dims) {
        log_d_sum += std::log(static_cast<double>(d));
        d_total *= static_cast<double>(d);
    }
    // Zero residual gives -infinity, which wins any comparison. An exact
    // fit computed in floating point leaves a residual of rounding dust, so
    // anything below 1e-20 * ||y||_F^2 counts as zero.
    double y_sq = 0.0;
    for (double v : y.data()) y_sq += v * v;
    if (residual <= 1e-20 * y_sq) {
        return -std::numeric_limits<double>::infinity();
    }
    return std::log(residual) + (log_d_sum / d_total) * p_e;
}

}  // namespace

double bic(const Tensor& y, const BlockModelFit& fit) {
    if (fit.penalty.kind != PenaltyKind::none) {
        throw std::invalid_argument("bic requires an unpenalized fit");
    }
    return bic_from_parts(y, fit.residual,
                          effective_params(y.dims(), fit.model.ranks()));
}

double bic_sparse(const Tensor& y, const BlockModelFit& fit) {
    if (fit.penalty.kind == PenaltyKind::none) {
        throw std::invalid_argument("bic_sparse requires an l0 or l1 fit");
    }
    return bic_from_parts(
        y, fit.residual,
        effective_params_sparse(y.dims(), fit.model.ranks(), fit.model.core));
}

std::vector<std::vector<std::size_t>> cartesian_ranks(
    const std::vector<std::pair<std::size_t, std::size_t>>& ranges) {
    for (const auto& [lo, hi] : ranges) {
        if (lo < 1 || hi < lo) {
            throw std::invalid_argument("invalid rank range");
        }
    }
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> cur(ranges.size());
    for (std::size_t k = 0; k < ranges.size(); ++k) cur[k] = ranges[k].first;
    while (true) {
        out.push_back(cur);
        std::size_t k = ranges.size();
        while (k-- > 0) {
            if (++cur[k] <= ranges[k].second) break;
            cur[k] = ranges[k].first;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
    return out;
}

namespace {

RankCandidate evaluate_ranks(const Tensor& y,
                             const std::vector<std::size_t>& ranks,
                             const FitConfig& config_template) {
    RankCandidate row;
    row.ranks = ranks;
    try {
        FitConfig cfg = config_template;
        cfg.ranks = ranks;
        cfg.penalty = Penalty::none();
        BlockModelFit f = fit(y, cfg);
        row.residual = f.residual;
        row.p_e = effective_params(y.dims(), ranks);
        row.bic = bic(y, f);
        row.converged = f.converged;
        row.fit = std::move(f);
    } catch (const std::exception& e) {
        row.error = e.what();
        row.bic = std::numeric_limits<double>::infinity();
    }
    return row;
}

bool better_ranks(const RankCandidate& a, const RankCandidate& b) {
    if (!a.error.empty()) return false;
    if (!b.error.empty()) return true;
    if (a.bic != b.bic) return a.bic < b.bic;
    return a.ranks < b.ranks;  // ties: lexicographically smallest
}

}  // namespace

RankSelection select_ranks(const Tensor& y, const SelectionGrid& grid) {
    if (grid.rank_candidates.empty()) {
        throw std::invalid_argument("empty rank candidate list");
    }
    RankSelection sel;
    sel.table.reserve(grid.rank_candidates.size());
    for (const std::vector<std::size_t>& ranks : grid.rank_candidates) {
        sel.table.push_back(evaluate_ranks(y, ranks, grid.fit_config_template));
    }
    const RankCandidate* best = nullptr;
    for (const RankCandidate& row : sel.table) {
        if (!best || better_ranks(row, *best)) best = &row;
    }
    if (!best || !best->error.empty()) {
        throw std::runtime_error("no rank candidate could be fitted");
    }
    sel.best_ranks = best->ranks;
    return sel;
}

RankSelection select_ranks_coordinate(
    const Tensor& y,
    const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
    FitConfig config_template, int passes) {
    if (ranges.size() != y.order()) {
        throw std::invalid_argument("one rank range per mode required");
    }
    if (passes < 1) throw std::invalid_argument("passes must be >= 1");

    RankSelection sel;
    std::map<std::vector<std::size_t>, std::size_t> seen;
    auto evaluate = [&](const std::vector<std::size_t>& ranks) -> std::size_t {
        auto it = seen.find(ranks);
        if (it != seen.end()) return it->second;
        sel.table.push_back(evaluate_ranks(y, ranks, config_template));
        seen.emplace(ranks, sel.table.size() - 1);
        return sel.table.size() - 1;
    };

    std::vector<std::size_t> current(ranges.size());
    for (std::size_t k = 0; k < ranges.size(); ++k) {
        current[k] = (ranges[k].first + ranges[k].second) / 2;
    }
    for (int pass = 0; pass < passes; ++pass) {
        for (std::size_t k = 0; k < ranges.size(); ++k) {
            std::size_t best_idx = static_cast<std::size_t>(-1);
            for (std::size_t r = ranges[k].first; r <= ranges[k].second; ++r) {
                std::vector<std::size_t> ranks = current;
                ranks[k] = r;
                const std::size_t idx = evaluate(ranks);
                if (best_idx == static_cast<std::size_t>(-1) ||
                    better_ranks(sel.table[idx], sel.table[best_idx])) {
                    best_idx = idx;
                }
            }
            current[k] = sel.table[best_idx].ranks[k];
        }
    }
    const RankCandidate* best = nullptr;
    for (const RankCandidate& row : sel.table) {
        if (!best || better_ranks(row, *best)) best = &row;
    }
    if (!best || !best->error.empty()) {
        throw std::runtime_error("no rank candidate could be fitted");
    }
    sel.best_ranks = best->ranks;
    return sel;
}

LambdaSelection select_lambda(const Tensor& y,
                              const std::vector<std::size_t>& ranks,
                              const SelectionGrid& grid) {
    if (grid.lambda_candidates.empty()) {
        throw std::invalid_argument("empty lambda candidate list");
    }
    if (grid.fit_config_template.penalty.kind == PenaltyKind::none) {
        throw std::invalid_argument(
            "lambda selection requires an l0 or l1 penalty kind");
    }
    LambdaSelection sel;
    sel.table.reserve(grid.lambda_candidates.size());
    for (double lambda : grid.lambda_candidates) {
        LambdaCandidate row;
        row.lambda = lambda;
        try {
            FitConfig cfg = grid.fit_config_template;
            cfg.ranks = ranks;
            cfg.penalty.lambda = lambda;
            BlockModelFit f = fit(y, cfg);
            row.residual = f.residual;
            row.p_e = effective_params_sparse(y.dims(), ranks, f.model.core);
            row.bic = bic_sparse(y, f);
            row.converged = f.converged;
            row.fit = std::move(f);
        } catch (const std::exception& e) {
            row.error = e.what();
            row.bic = std::numeric_limits<double>::infinity();
        }
        sel.table.push_back(std::move(row));
    }
    const LambdaCandidate* best = nullptr;
    for (const LambdaCandidate& row : sel.table) {
        if (!row.error.empty()) continue;
        if (!best || row.bic < best->bic ||
            (row.bic == best->bic && row.lambda < best->lambda)) {
            best = &row;
        }
    }
    if (!best) {
        throw std::runtime_error("no lambda candidate could be fitted");
    }
    sel.best_lambda = best->lambda;
    return sel;
}

std::vector<double> default_lambda_grid(const Tensor& y,
                                        const std::vector<std::size_t>& ranks,
                                        FitConfig config_template, int count) {
    if (count < 2) throw std::invalid_argument("lambda grid needs >= 2 points");
    config_template.ranks = ranks;
    config_template.penalty = Penalty::none();
    const BlockModelFit dense = fit(y, config_template);
    const double sigma_sq = dense.residual / static_cast<double>(y.size());
    if (sigma_sq <= 0.0) return {0.0};
    const double lo = 1e-2 * sigma_sq;
    const double hi = 1e3 * sigma_sq;
    std::vector<double> grid(static_cast<std::size_t>(count));
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] =
            lo * std::exp(step * static_cast<double>(i));
    }
    return grid;
}

}  // namespace tbm
