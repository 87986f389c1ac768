#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "tbm/tensor.hpp"

namespace tbm {

/// Per-mode cluster assignment: each of d_k slice indices gets a label in
/// [0, num_clusters). Stored as a label vector; the equivalent binary
/// membership matrix (one 1 per row) is a derived view used only by tests.
///
/// Invariant: every cluster is non-empty.
class Membership {
public:
    Membership(std::vector<int> labels, int num_clusters);

    std::size_t size() const { return labels_.size(); }
    int num_clusters() const { return num_clusters_; }
    int label(std::size_t i) const { return labels_[i]; }
    const std::vector<int>& labels() const { return labels_; }

    std::vector<std::size_t> cluster_sizes() const;

    /// Inverse images M^{-1}(r): member indices per cluster, ascending.
    std::vector<std::vector<std::size_t>> inverse() const;

    /// Derived d_k x R_k binary matrix view.
    Matrix as_matrix() const;

    bool operator==(const Membership&) const = default;

private:
    std::vector<int> labels_;
    int num_clusters_ = 0;
};

/// p_r = |{i : label_i = r}| / d_k; nonnegative, sums to 1.
std::vector<double> cluster_proportions(const Membership& m);

double min_cluster_proportion(const Membership& m);

/// Block model (C, {M_k}): a core tensor of block means plus one
/// membership per mode. The assembled mean is blockwise constant.
struct BlockModel {
    Tensor core;
    std::vector<Membership> memberships;

    std::vector<std::size_t> data_dims() const;
    std::vector<std::size_t> ranks() const { return core.dims(); }

    /// Throws if memberships[k].num_clusters != core.dim(k) or the order
    /// disagrees.
    void validate() const;
};

/// Theta[i_1,...,i_K] = core[M_1(i_1),...,M_K(i_K)]. One pass, O(prod d_k).
Tensor assemble_mean(const BlockModel& m);

/// True iff no two order-(K-1) slices of the core along any mode are
/// identical. Exact float equality: simulated and fitted cores are generic;
/// see has_near_duplicate_slices for a tolerance-based diagnostic.
bool is_irreducible(const Tensor& core);

/// Diagnostic companion to is_irreducible: reports slices that are equal
/// up to relative tolerance without being bitwise identical.
bool has_near_duplicate_slices(const Tensor& core, double rel_tol = 1e-9);

/// Minimal gap between blocks. Per mode k with R_k >= 2:
///   delta^(k) = min over pairs r != r' of
///               max over remaining indices of (c_[..r..] - c_[..r'..])^2.
/// Modes with R_k = 1 are reported as undefined (nullopt) and skipped in
/// delta_min. Diagnostic only.
struct BlockGap {
    std::optional<double> delta_min;
    std::vector<std::optional<double>> per_mode;
};
BlockGap block_gap(const Tensor& core);

/// Relabels each mode's clusters in first-occurrence order of labels and
/// permutes the core consistently. The assembled mean is unchanged
/// entrywise; two models equal up to label permutation canonicalize to the
/// same representative.
BlockModel canonicalize(const BlockModel& m);

}  // namespace tbm
