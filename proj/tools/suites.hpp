// Benchmark suites behind `tbm benchmark`: end-to-end
// simulate -> fit/select -> evaluate studies with frozen parameters.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tbm/estimation.hpp"

namespace tbm::suites {

// ---------------------------------------------------------------------------
// RMSE scaling studies (order 3 and order 4).
//
// For each d_1, the remaining dimensions are set so that
// d_1 log R_1 ~= d_k log R_k for every mode, and results are reported
// against the rescaled sample size N = sqrt(prod_{k>=2} d_k / log R_1).
// ---------------------------------------------------------------------------

struct ScalingConfig {
    std::vector<std::size_t> ranks;      // every R_k >= 2
    std::vector<std::size_t> d1_values;
    double sigma = 3.0;
    int sims = 10;
    int restarts = 10;
    int max_iters = 100;
    double rel_tol = 1e-10;
    std::uint64_t seed = 0;
};

struct ScalingPoint {
    std::vector<std::size_t> dims;
    double n_rescaled = 0.0;
    std::vector<double> rmse;  // one entry per sim
    double rmse_mean = 0.0;
    double rmse_sd = 0.0;
};

struct ScalingResult {
    ScalingConfig config;
    std::vector<ScalingPoint> points;
    double slope = 0.0;  // least-squares slope of log mean RMSE vs log N
};

/// Balancing rule for the non-leading dimensions.
std::vector<std::size_t> scaling_dims(std::size_t d1,
                                      const std::vector<std::size_t>& ranks);

double rescaled_sample_size(const std::vector<std::size_t>& dims,
                            const std::vector<std::size_t>& ranks);

ScalingResult run_scaling(const ScalingConfig& config);

/// Frozen defaults: d_1 in {20,...,70} (order 3) / {10,...,20} (order 4),
/// sigma = 3, 10 restarts, rel_tol 1e-10.
ScalingConfig scaling3_defaults(std::uint64_t seed, int sims);
ScalingConfig scaling4_defaults(std::uint64_t seed, int sims);

// ---------------------------------------------------------------------------
// BIC cluster-size recovery study.
// ---------------------------------------------------------------------------

struct BicRowConfig {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> true_ranks;
    double sigma = 4.0;
    int sims = 20;
    // Selection searches ranks coordinate-wise over [rank_lo, rank_hi] per
    // mode, two passes, starting from the midpoint.
    std::size_t rank_lo = 2;
    std::size_t rank_hi = 6;
    int passes = 2;
    int restarts = 20;
    int max_iters = 100;
    double rel_tol = 1e-10;
    std::uint64_t seed = 0;
};

struct BicRowResult {
    BicRowConfig config;
    std::vector<std::vector<std::size_t>> selected;  // per sim
    std::vector<double> mean;                        // per mode
    std::vector<double> sd;                          // per mode
};

BicRowResult run_bic_row(const BicRowConfig& config);

/// The nine (dims, ranks, sigma) combinations of the recovery study.
std::vector<BicRowConfig> bic_table_rows(std::uint64_t seed, int sims);

// ---------------------------------------------------------------------------
// Sparse-recovery study (l0 penalty, BIC-selected lambda).
// ---------------------------------------------------------------------------

struct SparseRowConfig {
    std::vector<std::size_t> dims{40, 40, 40};
    std::vector<std::size_t> ranks{4, 4, 4};
    double sparsity_p = 0.5;
    double sigma = 4.0;
    int sims = 20;
    int lambda_count = 20;
    int restarts = 5;
    int max_iters = 100;
    double rel_tol = 1e-10;
    std::uint64_t seed = 0;
};

struct SparseSimResult {
    double lambda = 0.0;
    double estimated_sparsity = 0.0;
    double correct_zero_rate = 0.0;
    double sparsity_error_rate = 0.0;
};

struct SparseRowResult {
    SparseRowConfig config;
    std::vector<SparseSimResult> sims;
    SparseSimResult mean;
    SparseSimResult sd;
};

SparseRowResult run_sparse_row(const SparseRowConfig& config);

/// The three (p, sigma) combinations of the sparse study.
std::vector<SparseRowConfig> sparse_table_rows(std::uint64_t seed, int sims);

// ---------------------------------------------------------------------------
// CSV emission: per-seed rows followed by summary rows whose statistics
// recompute exactly from the per-seed rows.
// ---------------------------------------------------------------------------

void write_scaling_csv(std::ostream& os, const ScalingResult& result);
void write_bic_csv(std::ostream& os, const std::vector<BicRowResult>& rows);
void write_sparse_csv(std::ostream& os,
                      const std::vector<SparseRowResult>& rows);

}  // namespace tbm::suites
