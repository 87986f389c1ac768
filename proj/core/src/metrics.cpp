#include "tbm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace tbm {

std::vector<double> ConfusionMatrix::row_sums() const {
    std::vector<double> s(rows_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) s[r] += (*this)(r, c);
    }
    return s;
}

std::vector<double> ConfusionMatrix::col_sums() const {
    std::vector<double> s(cols_, 0.0);
    for (std::size_t r = 0; r < rows_; ++r) {
        for (std::size_t c = 0; c < cols_; ++c) s[c] += (*this)(r, c);
    }
    return s;
}

double mse(const Tensor& theta_true, const Tensor& theta_hat) {
    if (!theta_true.same_dims(theta_hat)) {
        throw std::invalid_argument("mse requires identical dims");
    }
    double ss = 0.0;
    const std::vector<double>& a = theta_true.data();
    const std::vector<double>& b = theta_hat.data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        ss += d * d;
    }
    return ss / static_cast<double>(a.size());
}

double rmse(const Tensor& theta_true, const Tensor& theta_hat) {
    return std::sqrt(mse(theta_true, theta_hat));
}

ConfusionMatrix confusion(const Membership& truth, const Membership& est) {
    if (truth.size() != est.size()) {
        throw std::invalid_argument("confusion requires equal lengths");
    }
    ConfusionMatrix d(static_cast<std::size_t>(truth.num_clusters()),
                      static_cast<std::size_t>(est.num_clusters()));
    const double w = 1.0 / static_cast<double>(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) {
        d(static_cast<std::size_t>(truth.label(i)),
          static_cast<std::size_t>(est.label(i))) += w;
    }
    return d;
}

double mcr(const Membership& truth, const Membership& est) {
    if (truth.num_clusters() != est.num_clusters()) {
        throw std::invalid_argument(
            "mcr requires equal cluster counts (got " +
            std::to_string(truth.num_clusters()) + " and " +
            std::to_string(est.num_clusters()) +
            "); compare confusion matrices instead");
    }
    const ConfusionMatrix d = confusion(truth, est);
    double worst = 0.0;
    for (std::size_t c = 0; c < d.est_clusters(); ++c) {
        double largest = 0.0, second = 0.0;
        for (std::size_t r = 0; r < d.true_clusters(); ++r) {
            const double v = d(r, c);
            if (v > largest) {
                second = largest;
                largest = v;
            } else if (v > second) {
                second = v;
            }
        }
        worst = std::max(worst, second);
    }
    return worst;
}

namespace {

// Sum over cells of a per-mode label contingency table, squared; together
// with the Kronecker structure of entry blocks this gives pair counts
// without touching the O(n^2) entry pairs.
double contingency_sumsq(const Membership& a, const Membership& b) {
    const std::size_t ra = static_cast<std::size_t>(a.num_clusters());
    const std::size_t rb = static_cast<std::size_t>(b.num_clusters());
    std::vector<double> counts(ra * rb, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        counts[static_cast<std::size_t>(a.label(i)) * rb +
               static_cast<std::size_t>(b.label(i))] += 1.0;
    }
    double s = 0.0;
    for (double c : counts) s += c * c;
    return s;
}

double sizes_sumsq(const Membership& m) {
    double s = 0.0;
    for (std::size_t c : m.cluster_sizes()) {
        s += static_cast<double>(c) * static_cast<double>(c);
    }
    return s;
}

}  // namespace

double cer(const BlockModel& true_model, const BlockModel& est_model) {
    true_model.validate();
    est_model.validate();
    if (true_model.data_dims() != est_model.data_dims()) {
        throw std::invalid_argument("cer requires models on identical dims");
    }
    const std::size_t K = true_model.memberships.size();
    double n = 1.0;
    double sum_nij_sq = 1.0;  // sum over joint blocks of n_ij^2
    double sum_ai_sq = 1.0;   // sum over true blocks of a_i^2
    double sum_bj_sq = 1.0;   // sum over estimated blocks of b_j^2
    for (std::size_t k = 0; k < K; ++k) {
        const Membership& t = true_model.memberships[k];
        const Membership& e = est_model.memberships[k];
        n *= static_cast<double>(t.size());
        sum_nij_sq *= contingency_sumsq(t, e);
        sum_ai_sq *= sizes_sumsq(t);
        sum_bj_sq *= sizes_sumsq(e);
    }
    if (n < 2.0) return 0.0;

    // Pairs co-clustered in both = S; in truth = P1; in estimate = P2.
    const double s = 0.5 * (sum_nij_sq - n);
    const double p1 = 0.5 * (sum_ai_sq - n);
    const double p2 = 0.5 * (sum_bj_sq - n);
    const double total_pairs = 0.5 * n * (n - 1.0);
    return (p1 + p2 - 2.0 * s) / total_pairs;
}

SparsityMetrics sparsity_metrics(const Tensor& core_true,
                                 const Tensor& core_est) {
    if (!core_true.same_dims(core_est)) {
        throw std::invalid_argument("sparsity metrics require equal core dims");
    }
    const std::size_t n = core_true.size();
    std::size_t est_zero = 0, true_zero = 0, both_zero = 0, disagree = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool tz = core_true[i] == 0.0;
        const bool ez = core_est[i] == 0.0;
        est_zero += ez;
        true_zero += tz;
        both_zero += (tz && ez);
        disagree += (tz != ez);
    }
    SparsityMetrics m{};
    m.estimated_sparsity_rate =
        static_cast<double>(est_zero) / static_cast<double>(n);
    m.correct_zero_rate =
        true_zero == 0 ? 1.0
                       : static_cast<double>(both_zero) /
                             static_cast<double>(true_zero);
    m.sparsity_error_rate =
        static_cast<double>(disagree) / static_cast<double>(n);
    return m;
}

namespace {

// Permutation p maximizing sum_r D(r, p[r]); p[r] is the estimated cluster
// playing true role r. Exhaustive for small R, greedy fallback otherwise.
std::vector<std::size_t> best_alignment(const ConfusionMatrix& d) {
    const std::size_t r = d.true_clusters();
    std::vector<std::size_t> perm(r);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    if (r <= 8) {
        std::vector<std::size_t> trial = perm, best = perm;
        double best_score = -1.0;
        do {
            double score = 0.0;
            for (std::size_t i = 0; i < r; ++i) score += d(i, trial[i]);
            if (score > best_score) {
                best_score = score;
                best = trial;
            }
        } while (std::next_permutation(trial.begin(), trial.end()));
        return best;
    }
    // Greedy: repeatedly take the largest unassigned cell.
    std::vector<bool> row_used(r, false), col_used(r, false);
    for (std::size_t step = 0; step < r; ++step) {
        double best_v = -1.0;
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < r; ++i) {
            if (row_used[i]) continue;
            for (std::size_t j = 0; j < r; ++j) {
                if (col_used[j]) continue;
                if (d(i, j) > best_v) {
                    best_v = d(i, j);
                    bi = i;
                    bj = j;
                }
            }
        }
        perm[bi] = bj;
        row_used[bi] = true;
        col_used[bj] = true;
    }
    return perm;
}

}  // namespace

Tensor align_core_to_truth(const BlockModel& truth, const BlockModel& est) {
    truth.validate();
    est.validate();
    if (truth.data_dims() != est.data_dims()) {
        throw std::invalid_argument("alignment requires models on equal dims");
    }
    if (truth.ranks() != est.ranks()) {
        throw std::invalid_argument("alignment requires equal cluster counts");
    }
    const std::size_t K = truth.core.order();
    std::vector<std::vector<std::size_t>> perm(K);
    for (std::size_t k = 0; k < K; ++k) {
        perm[k] = best_alignment(
            confusion(truth.memberships[k], est.memberships[k]));
    }
    Tensor aligned(est.core.dims());
    std::vector<std::size_t> src(K);
    for (std::size_t lin = 0; lin < aligned.size(); ++lin) {
        const std::vector<std::size_t> idx = aligned.multi_index(lin);
        for (std::size_t k = 0; k < K; ++k) src[k] = perm[k][idx[k]];
        aligned[lin] = est.core.at(src);
    }
    return aligned;
}

SparsityMetrics sparsity_metrics(const BlockModel& truth,
                                 const BlockModel& est) {
    return sparsity_metrics(truth.core, align_core_to_truth(truth, est));
}

std::optional<double> variance_explained(const Tensor& y,
                                         const Tensor& theta_hat) {
    if (!y.same_dims(theta_hat)) {
        throw std::invalid_argument("variance_explained requires equal dims");
    }
    double mean = 0.0;
    for (double v : y.data()) mean += v;
    mean /= static_cast<double>(y.size());
    double tss = 0.0, rss = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double c = y[i] - mean;
        const double r = y[i] - theta_hat[i];
        tss += c * c;
        rss += r * r;
    }
    if (tss == 0.0) return std::nullopt;
    return 1.0 - rss / tss;
}

}  // namespace tbm
