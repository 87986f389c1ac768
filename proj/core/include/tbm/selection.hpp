#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tbm/estimation.hpp"
#include "tbm/tensor.hpp"

namespace tbm {

/// Effective number of parameters p_e = prod_k R_k + sum_k d_k log10 R_k
/// (log10 R_k = 0 when R_k = 1). The membership term uses decimal logs;
/// see the implementation note on why the base matters.
double effective_params(const std::vector<std::size_t>& dims,
                        const std::vector<std::size_t>& ranks);

/// Sparse variant: ||core||_0 replaces prod_k R_k.
double effective_params_sparse(const std::vector<std::size_t>& dims,
                               const std::vector<std::size_t>& ranks,
                               const Tensor& sparse_core);

/// BIC(R) = log(||y - theta_hat||_F^2) + (sum_k log d_k / prod_k d_k) p_e.
/// A zero residual gives -infinity, which wins any comparison; residuals
/// below 1e-20 * ||y||_F^2 count as zero so that exact fits computed in
/// floating point still tie-break on ranks rather than rounding dust.
/// Requires a fit produced with no penalty.
double bic(const Tensor& y, const BlockModelFit& fit);

/// Same formula with p_e^sparse; the residual term stays unpenalized.
/// Requires an l0 or l1 fit.
double bic_sparse(const Tensor& y, const BlockModelFit& fit);

struct SelectionGrid {
    std::vector<std::vector<std::size_t>> rank_candidates;
    std::vector<double> lambda_candidates;
    FitConfig fit_config_template;
};

/// All rank tuples in the Cartesian product of per-mode ranges [lo, hi].
std::vector<std::vector<std::size_t>> cartesian_ranks(
    const std::vector<std::pair<std::size_t, std::size_t>>& ranges);

struct RankCandidate {
    std::vector<std::size_t> ranks;
    double residual = 0.0;
    double p_e = 0.0;
    double bic = 0.0;
    bool converged = false;
    std::string error;  // non-empty when the candidate failed
    std::optional<BlockModelFit> fit;
};

struct RankSelection {
    std::vector<std::size_t> best_ranks;
    std::vector<RankCandidate> table;
};

/// Fits every candidate with the template config (penalty forced to none)
/// and returns the BIC argmin; ties go to the lexicographically smallest
/// ranks. Per-candidate failures are recorded in the table, not fatal.
RankSelection select_ranks(const Tensor& y, const SelectionGrid& grid);

/// Coordinate-descent search for large grids: starting from the midpoint
/// of each range, optimizes one mode's rank at a time over its range,
/// `passes` times through the modes. Evaluated candidates are memoized.
RankSelection select_ranks_coordinate(
    const Tensor& y,
    const std::vector<std::pair<std::size_t, std::size_t>>& ranges,
    FitConfig config_template, int passes = 2);

struct LambdaCandidate {
    double lambda = 0.0;
    double residual = 0.0;
    double p_e = 0.0;
    double bic = 0.0;
    bool converged = false;
    std::string error;
    std::optional<BlockModelFit> fit;
};

struct LambdaSelection {
    double best_lambda = 0.0;
    std::vector<LambdaCandidate> table;
};

/// BIC over lambda_candidates at fixed ranks, with the template's penalty
/// kind (must be l0 or l1). Ties go to the smallest lambda.
LambdaSelection select_lambda(const Tensor& y,
                              const std::vector<std::size_t>& ranks,
                              const SelectionGrid& grid);

/// Default lambda grid: `count` logarithmically spaced values spanning
/// [1e-2, 1e3] times the noise variance estimated from an unpenalized fit's
/// residual (sigma_hat^2 = residual / prod d_k).
std::vector<double> default_lambda_grid(const Tensor& y,
                                        const std::vector<std::size_t>& ranks,
                                        FitConfig config_template,
                                        int count = 20);

}  // namespace tbm
