#include "tbm/block_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace tbm {

Membership::Membership(std::vector<int> labels, int num_clusters)
    : labels_(std::move(labels)), num_clusters_(num_clusters) {
    if (num_clusters_ < 1) {
        throw std::invalid_argument("num_clusters must be >= 1");
    }
    if (labels_.empty()) {
        throw std::invalid_argument("membership must cover at least one index");
    }
    std::vector<bool> seen(static_cast<std::size_t>(num_clusters_), false);
    for (int l : labels_) {
        if (l < 0 || l >= num_clusters_) {
            throw std::invalid_argument("cluster label " + std::to_string(l) +
                                        " out of range [0, " +
                                        std::to_string(num_clusters_) + ")");
        }
        seen[static_cast<std::size_t>(l)] = true;
    }
    for (int r = 0; r < num_clusters_; ++r) {
        if (!seen[static_cast<std::size_t>(r)]) {
            throw std::invalid_argument("cluster " + std::to_string(r) +
                                        " is empty");
        }
    }
}

std::vector<std::size_t> Membership::cluster_sizes() const {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(num_clusters_), 0);
    for (int l : labels_) ++sizes[static_cast<std::size_t>(l)];
    return sizes;
}

std::vector<std::vector<std::size_t>> Membership::inverse() const {
    std::vector<std::vector<std::size_t>> inv(
        static_cast<std::size_t>(num_clusters_));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        inv[static_cast<std::size_t>(labels_[i])].push_back(i);
    }
    return inv;
}

Matrix Membership::as_matrix() const {
    Matrix m(labels_.size(), static_cast<std::size_t>(num_clusters_));
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        m(i, static_cast<std::size_t>(labels_[i])) = 1.0;
    }
    return m;
}

std::vector<double> cluster_proportions(const Membership& m) {
    std::vector<double> p(static_cast<std::size_t>(m.num_clusters()));
    const double inv = 1.0 / static_cast<double>(m.size());
    for (int l : m.labels()) p[static_cast<std::size_t>(l)] += inv;
    return p;
}

double min_cluster_proportion(const Membership& m) {
    const std::vector<double> p = cluster_proportions(m);
    return *std::min_element(p.begin(), p.end());
}

std::vector<std::size_t> BlockModel::data_dims() const {
    std::vector<std::size_t> d(memberships.size());
    for (std::size_t k = 0; k < memberships.size(); ++k) {
        d[k] = memberships[k].size();
    }
    return d;
}

void BlockModel::validate() const {
    if (memberships.size() != core.order()) {
        throw std::invalid_argument(
            "block model has " + std::to_string(memberships.size()) +
            " memberships for an order-" + std::to_string(core.order()) +
            " core");
    }
    for (std::size_t k = 0; k < memberships.size(); ++k) {
        if (static_cast<std::size_t>(memberships[k].num_clusters()) !=
            core.dim(k)) {
            throw std::invalid_argument(
                "mode " + std::to_string(k) + " has " +
                std::to_string(memberships[k].num_clusters()) +
                " clusters, core dimension is " + std::to_string(core.dim(k)));
        }
    }
}

Tensor assemble_mean(const BlockModel& m) {
    m.validate();
    const std::vector<std::size_t> dims = m.data_dims();
    const std::size_t K = dims.size();
    const std::vector<std::size_t>& ranks = m.core.dims();

    // Core strides and per-mode index contributions.
    std::vector<std::size_t> stride(K);
    stride[K - 1] = 1;
    for (std::size_t k = K - 1; k-- > 0;) stride[k] = stride[k + 1] * ranks[k + 1];
    std::vector<std::vector<std::size_t>> contrib(K);
    for (std::size_t k = 0; k < K; ++k) {
        contrib[k].resize(dims[k]);
        for (std::size_t i = 0; i < dims[k]; ++i) {
            contrib[k][i] =
                static_cast<std::size_t>(m.memberships[k].label(i)) * stride[k];
        }
    }

    Tensor out(dims);
    const double* core = m.core.data().data();
    double* dst = out.data().data();
    const std::size_t inner = dims[K - 1];
    const std::vector<std::size_t>& last = contrib[K - 1];

    std::vector<std::size_t> idx(K, 0);
    std::size_t pos = 0;
    while (true) {
        std::size_t base = 0;
        for (std::size_t k = 0; k + 1 < K; ++k) base += contrib[k][idx[k]];
        for (std::size_t i = 0; i < inner; ++i) {
            dst[pos++] = core[base + last[i]];
        }
        // Advance the odometer over modes 0..K-2.
        std::size_t k = K - 1;
        while (k-- > 0) {
            if (++idx[k] < dims[k]) break;
            idx[k] = 0;
        }
        if (k == static_cast<std::size_t>(-1)) break;
    }
    return out;
}

namespace {

bool rows_equal_exact(std::span<const double> a, std::span<const double> b) {
    return std::equal(a.begin(), a.end(), b.begin());
}

bool rows_equal_tol(std::span<const double> a, std::span<const double> b,
                    double rel_tol) {
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    }
    const double tol = rel_tol * scale;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > tol) return false;
    }
    return true;
}

}  // namespace

bool is_irreducible(const Tensor& core) {
    for (std::size_t k = 0; k < core.order(); ++k) {
        const Matrix u = unfold(core, k);
        for (std::size_t r = 0; r + 1 < u.rows(); ++r) {
            for (std::size_t s = r + 1; s < u.rows(); ++s) {
                if (rows_equal_exact(u.row(r), u.row(s))) return false;
            }
        }
    }
    return true;
}

bool has_near_duplicate_slices(const Tensor& core, double rel_tol) {
    for (std::size_t k = 0; k < core.order(); ++k) {
        const Matrix u = unfold(core, k);
        for (std::size_t r = 0; r + 1 < u.rows(); ++r) {
            for (std::size_t s = r + 1; s < u.rows(); ++s) {
                if (rows_equal_tol(u.row(r), u.row(s), rel_tol)) return true;
            }
        }
    }
    return false;
}

BlockGap block_gap(const Tensor& core) {
    BlockGap gap;
    gap.per_mode.resize(core.order());
    for (std::size_t k = 0; k < core.order(); ++k) {
        if (core.dim(k) < 2) continue;  // undefined for single-cluster modes
        const Matrix u = unfold(core, k);
        double mode_gap = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r + 1 < u.rows(); ++r) {
            for (std::size_t s = r + 1; s < u.rows(); ++s) {
                double pair_gap = 0.0;
                const std::span<const double> a = u.row(r);
                const std::span<const double> b = u.row(s);
                for (std::size_t c = 0; c < a.size(); ++c) {
                    const double d = a[c] - b[c];
                    pair_gap = std::max(pair_gap, d * d);
                }
                mode_gap = std::min(mode_gap, pair_gap);
            }
        }
        gap.per_mode[k] = mode_gap;
        if (!gap.delta_min || mode_gap < *gap.delta_min) {
            gap.delta_min = mode_gap;
        }
    }
    return gap;
}

BlockModel canonicalize(const BlockModel& m) {
    m.validate();
    const std::size_t K = m.core.order();

    // Per mode: new label = first-occurrence rank of the old label.
    std::vector<std::vector<int>> new_of_old(K);
    std::vector<std::vector<std::size_t>> old_of_new(K);
    std::vector<Membership> relabeled;
    relabeled.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const int R = m.memberships[k].num_clusters();
        new_of_old[k].assign(static_cast<std::size_t>(R), -1);
        old_of_new[k].reserve(static_cast<std::size_t>(R));
        std::vector<int> labels(m.memberships[k].size());
        int next = 0;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            const int old = m.memberships[k].label(i);
            int& mapped = new_of_old[k][static_cast<std::size_t>(old)];
            if (mapped < 0) {
                mapped = next++;
                old_of_new[k].push_back(static_cast<std::size_t>(old));
            }
            labels[i] = mapped;
        }
        relabeled.emplace_back(std::move(labels), R);
    }

    // Gather the core through the inverse permutations.
    Tensor core(m.core.dims());
    std::vector<std::size_t> src(K);
    for (std::size_t lin = 0; lin < core.size(); ++lin) {
        const std::vector<std::size_t> idx = core.multi_index(lin);
        for (std::size_t k = 0; k < K; ++k) src[k] = old_of_new[k][idx[k]];
        core[lin] = m.core.at(src);
    }
    return BlockModel{std::move(core), std::move(relabeled)};
}

}  // namespace tbm
