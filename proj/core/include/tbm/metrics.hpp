#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tbm/block_model.hpp"
#include "tbm/tensor.hpp"

namespace tbm {

/// Mode-k confusion matrix between a true and an estimated clustering:
/// D[r][r'] = |{i : true label r, estimated label r'}| / d_k.
/// Row sums are the true cluster proportions, column sums the estimated
/// ones, and the total mass is 1.
class ConfusionMatrix {
public:
    ConfusionMatrix(std::size_t true_clusters, std::size_t est_clusters)
        : rows_(true_clusters),
          cols_(est_clusters),
          entries_(true_clusters * est_clusters, 0.0) {}

    std::size_t true_clusters() const { return rows_; }
    std::size_t est_clusters() const { return cols_; }

    double operator()(std::size_t r, std::size_t rp) const {
        return entries_[r * cols_ + rp];
    }
    double& operator()(std::size_t r, std::size_t rp) {
        return entries_[r * cols_ + rp];
    }

    std::vector<double> row_sums() const;
    std::vector<double> col_sums() const;

private:
    std::size_t rows_, cols_;
    std::vector<double> entries_;
};

/// ||theta_true - theta_hat||_F^2 / prod(d_k).
double mse(const Tensor& theta_true, const Tensor& theta_hat);
double rmse(const Tensor& theta_true, const Tensor& theta_hat);

/// Allows differing cluster counts.
ConfusionMatrix confusion(const Membership& truth, const Membership& est);

/// Misclassification rate: the largest second-largest column entry of the
/// confusion matrix, i.e. max over r and pairs a != a' of
/// min{D[a][r], D[a'][r]}. Zero iff the confusion matrix is a permutation
/// of a diagonal matrix (under non-degeneracy). Requires equal cluster
/// counts; report the confusion matrix instead when they differ.
double mcr(const Membership& truth, const Membership& est);

/// Clustering error rate between the entry-level block partitions induced
/// by two block models on the same dims: 1 - RandIndex over all prod(d_k)
/// entries, computed from per-mode contingency tables via the pair-counting
/// closed form (never the O(n^2) pair loop).
double cer(const BlockModel& true_model, const BlockModel& est_model);

struct SparsityMetrics {
    double estimated_sparsity_rate;  // fraction of zero entries in est core
    double correct_zero_rate;        // |est-zero ∩ true-zero| / |true-zero|
    double sparsity_error_rate;      // fraction of entries with support flips
};

/// Entrywise support comparison of two cores of equal dims. The caller is
/// responsible for cluster-label alignment; see the model overload.
SparsityMetrics sparsity_metrics(const Tensor& core_true,
                                 const Tensor& core_est);

/// Aligns the estimated model's clusters to the truth per mode (matching
/// that maximizes the diagonal mass of each confusion matrix) and then
/// compares core supports. Support comparison is only well-defined after
/// alignment.
SparsityMetrics sparsity_metrics(const BlockModel& truth,
                                 const BlockModel& est);

/// Estimated core permuted so its cluster labels line up with the truth's;
/// exposed for reporting.
Tensor align_core_to_truth(const BlockModel& truth, const BlockModel& est);

/// 1 - ||y - theta_hat||_F^2 / ||y - mean(y)||_F^2. Undefined (nullopt)
/// when y is constant.
std::optional<double> variance_explained(const Tensor& y,
                                         const Tensor& theta_hat);

}  // namespace tbm
