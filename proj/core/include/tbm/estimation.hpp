#pragma once

#include <cstdint>
#include <vector>

#include "tbm/block_model.hpp"
#include "tbm/tensor.hpp"

namespace tbm {

enum class PenaltyKind { none, l0, l1 };

/// Core-tensor penalty lambda * ||C||_rho with rho in {0, 1}.
struct Penalty {
    PenaltyKind kind = PenaltyKind::none;
    double lambda = 0.0;

    static Penalty none() { return {}; }
    static Penalty l0(double lambda) { return {PenaltyKind::l0, lambda}; }
    static Penalty l1(double lambda) { return {PenaltyKind::l1, lambda}; }

    /// lambda * ||core||_rho; 0 for PenaltyKind::none.
    double core_term(const Tensor& core) const;

    void validate() const;
};

struct FitConfig {
    std::vector<std::size_t> ranks;
    int restarts = 10;
    int max_iters = 100;
    double rel_tol = 1e-10;
    Penalty penalty;
    std::uint64_t seed = 0;

    void validate(const std::vector<std::size_t>& dims) const;
};

/// Result of one least-squares block-model fit.
///
/// `objective` is the value the alternating scheme minimizes (the residual
/// sum of squares plus the core penalty when one is set) and always equals
/// the last entry of `objective_trace`, which is recorded once per full
/// sweep. `residual` is the unpenalized ||y - theta_hat||_F^2. With no
/// penalty the trace is non-increasing; this is enforced per update step
/// inside fit().
struct BlockModelFit {
    BlockModel model;
    double objective = 0.0;
    double residual = 0.0;
    std::vector<double> objective_trace;
    int restart_index = 0;
    int iterations_used = 0;
    bool converged = false;
    Penalty penalty;
};

/// ||y - assemble_mean(m)||_F^2 plus the penalty's core term.
double objective(const Tensor& y, const BlockModel& m, const Penalty& penalty);

/// Independent Lloyd's k-means (k-means++ seeding, <= 50 iterations) on the
/// rows of each mode's unfolding. Deterministic given seed; always returns
/// valid memberships (empty clusters repaired).
std::vector<Membership> kmeans_init(const Tensor& y,
                                    const std::vector<std::size_t>& ranks,
                                    std::uint64_t seed);

/// Blockwise sample means: c[r_1..r_K] = mean of y over
/// M_1^{-1}(r_1) x ... x M_K^{-1}(r_K). One pass over y. Marginal
/// non-emptiness on every mode guarantees every block is non-empty.
Tensor update_core(const Tensor& y, const std::vector<Membership>& memberships);

/// Entrywise thresholded block means with block sizes
/// n = prod_k |M_k^{-1}(r_k)|:
///   l0: keep c_ols iff |c_ols| >= sqrt(lambda / n)
///   l1: sign(c_ols) * (|c_ols| - lambda / (2n))_+
/// With lambda = 0 this equals update_core bit-exactly.
Tensor update_core_sparse(const Tensor& y,
                          const std::vector<Membership>& memberships,
                          const Penalty& penalty);

/// Scalar closed form behind update_core_sparse, exposed for reuse and
/// direct testing against a grid oracle.
double threshold_block_mean(double c_ols, double block_size,
                            const Penalty& penalty);

/// Reassigns every mode-`mode` slice to the cluster minimizing its summed
/// squared deviation from the current core, other modes fixed. Ties break
/// to the smallest cluster index; emptied clusters are repaired by moving
/// in the slice with the largest residual.
Membership update_membership(const Tensor& y, const BlockModel& m,
                             std::size_t mode);

/// Alternating least-squares block-model fit: per restart, k-means
/// initialization then {core update; membership update per mode} sweeps
/// until the relative objective decrease drops below rel_tol or max_iters
/// is hit. Returns the restart with the lowest penalized objective (ties:
/// lowest restart index), canonicalized. Restart seeds derive from
/// config.seed via derive_seed(seed, restart); restarts may run
/// concurrently.
BlockModelFit fit(const Tensor& y, const FitConfig& config);

}  // namespace tbm
