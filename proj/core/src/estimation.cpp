#include "tbm/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "tbm/kmeans.hpp"
#include "tbm/parallel.hpp"
#include "tbm/rng.hpp"

namespace tbm {

double Penalty::core_term(const Tensor& core) const {
    switch (kind) {
        case PenaltyKind::none:
            return 0.0;
        case PenaltyKind::l0: {
            std::size_t nnz = 0;
            for (double v : core.data()) nnz += (v != 0.0);
            return lambda * static_cast<double>(nnz);
        }
        case PenaltyKind::l1: {
            double s = 0.0;
            for (double v : core.data()) s += std::abs(v);
            return lambda * s;
        }
    }
    return 0.0;
}

void Penalty::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
        throw std::invalid_argument("penalty lambda must be finite and >= 0");
    }
}

void FitConfig::validate(const std::vector<std::size_t>& dims) const {
    if (ranks.size() != dims.size()) {
        throw std::invalid_argument("ranks order does not match tensor order");
    }
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        if (ranks[k] < 1 || ranks[k] > dims[k]) {
            throw std::invalid_argument(
                "rank for mode " + std::to_string(k) + " must be in [1, " +
                std::to_string(dims[k]) + "], got " + std::to_string(ranks[k]));
        }
    }
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
    if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
    penalty.validate();
}

double threshold_block_mean(double c_ols, double block_size,
                            const Penalty& penalty) {
    switch (penalty.kind) {
        case PenaltyKind::none:
            return c_ols;
        case PenaltyKind::l0:
            return std::abs(c_ols) >= std::sqrt(penalty.lambda / block_size)
                       ? c_ols
                       : 0.0;
        case PenaltyKind::l1: {
            const double shrunk =
                std::abs(c_ols) - penalty.lambda / (2.0 * block_size);
            return shrunk > 0.0 ? std::copysign(shrunk, c_ols) : 0.0;
        }
    }
    return c_ols;
}

namespace {

// Neumaier-compensated accumulator. Objective values are compared per step
// with a 1e-9 absolute monotonicity budget, so the big reductions cannot
// afford plain left-to-right error growth.
struct Kahan {
    double sum = 0.0;
    double comp = 0.0;
    void add(double x) {
        const double t = sum + x;
        if (std::abs(sum) >= std::abs(x)) {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    double value() const { return sum + comp; }
};

// Alternating-update engine for one restart. Holds the label vectors and
// the current core; every recorded objective is recomputed by a direct
// residual pass so consecutive step values share one code path.
class Fitter {
public:
    Fitter(const Tensor& y, std::vector<std::size_t> ranks, Penalty penalty)
        : y_(y),
          dims_(y.dims()),
          ranks_(std::move(ranks)),
          penalty_(penalty),
          order_(dims_.size()) {
        rank_total_ = 1;
        for (std::size_t r : ranks_) rank_total_ *= r;
        rank_stride_.resize(order_);
        rank_stride_[order_ - 1] = 1;
        for (std::size_t k = order_ - 1; k-- > 0;) {
            rank_stride_[k] = rank_stride_[k + 1] * ranks_[k + 1];
        }
        core_.assign(rank_total_, 0.0);
        block_sums_.assign(rank_total_, 0.0);
        block_n_.assign(rank_total_, 0.0);
    }

    void set_labels(std::vector<std::vector<int>> labels) {
        labels_ = std::move(labels);
        sizes_.assign(order_, {});
        for (std::size_t k = 0; k < order_; ++k) {
            sizes_[k].assign(ranks_[k], 0);
            for (int l : labels_[k]) ++sizes_[k][static_cast<std::size_t>(l)];
        }
    }

    void set_core(const Tensor& core) {
        core_.assign(core.data().begin(), core.data().end());
    }

    /// Core update (OLS block means, thresholded under a penalty), followed
    /// by a direct objective evaluation.
    double core_step() {
        recompute_core();
        return record();
    }

    /// Mode-k membership argmin followed by empty-cluster repair. Appends
    /// one recorded value for the assignment and one per repair move.
    double membership_step(std::size_t k, bool recompute_core_on_repair,
                           std::vector<double>* step_log) {
        assign_mode(k);
        double obj = record();
        if (step_log) step_log->push_back(obj);
        while (true) {
            const auto empty =
                std::find(sizes_[k].begin(), sizes_[k].end(), std::size_t{0});
            if (empty == sizes_[k].end()) break;
            const std::size_t target =
                static_cast<std::size_t>(empty - sizes_[k].begin());
            repair_mode(k, target);
            if (recompute_core_on_repair) recompute_core();
            obj = record();
            if (step_log) step_log->push_back(obj);
        }
        return obj;
    }

    double objective_value() const { return last_objective_; }
    double residual_value() const { return last_rss_; }

    const std::vector<std::vector<int>>& labels() const { return labels_; }

    Tensor core_tensor() const {
        return Tensor(ranks_, core_);
    }

private:
    void recompute_core() {
        std::fill(block_sums_.begin(), block_sums_.end(), 0.0);
        for_each_entry([&](std::size_t block, double v, std::size_t) {
            block_sums_[block] += v;
        });
        // n_b = prod_k cluster sizes; empty blocks (possible only
        // mid-repair) get a zero mean and contribute nothing.
        compute_block_counts();
        for (std::size_t b = 0; b < rank_total_; ++b) {
            if (block_n_[b] == 0.0) {
                core_[b] = 0.0;
                continue;
            }
            const double ols = block_sums_[b] / block_n_[b];
            core_[b] = threshold_block_mean(ols, block_n_[b], penalty_);
        }
    }

    void compute_block_counts() {
        std::vector<double> acc{1.0};
        for (std::size_t k = 0; k < order_; ++k) {
            std::vector<double> next(acc.size() * ranks_[k]);
            for (std::size_t g = 0; g < acc.size(); ++g) {
                for (std::size_t r = 0; r < ranks_[k]; ++r) {
                    next[g * ranks_[k] + r] =
                        acc[g] * static_cast<double>(sizes_[k][r]);
                }
            }
            acc = std::move(next);
        }
        block_n_ = std::move(acc);
    }

    // Walks y in canonical order, calling fn(block_index, value, i_last).
    template <typename Fn>
    void for_each_entry(Fn&& fn) const {
        const std::size_t K = order_;
        const double* src = y_.data().data();
        const std::size_t inner = dims_[K - 1];
        const std::vector<int>& last_labels = labels_[K - 1];
        std::vector<std::size_t> idx(K, 0);
        std::size_t pos = 0;
        while (true) {
            std::size_t base = 0;
            for (std::size_t k = 0; k + 1 < K; ++k) {
                base += static_cast<std::size_t>(labels_[k][idx[k]]) *
                        rank_stride_[k];
            }
            for (std::size_t i = 0; i < inner; ++i) {
                fn(base + static_cast<std::size_t>(last_labels[i]), src[pos],
                   i);
                ++pos;
            }
            std::size_t k = K - 1;
            while (k-- > 0) {
                if (++idx[k] < dims_[k]) break;
                idx[k] = 0;
            }
            if (k == static_cast<std::size_t>(-1)) break;
        }
    }

    double record() {
        Kahan rss;
        for_each_entry([&](std::size_t block, double v, std::size_t) {
            const double d = v - core_[block];
            rss.add(d * d);
        });
        last_rss_ = rss.value();
        last_objective_ = last_rss_ + penalty_core_term();
        return last_objective_;
    }

    double penalty_core_term() const {
        switch (penalty_.kind) {
            case PenaltyKind::none:
                return 0.0;
            case PenaltyKind::l0: {
                std::size_t nnz = 0;
                for (double v : core_) nnz += (v != 0.0);
                return penalty_.lambda * static_cast<double>(nnz);
            }
            case PenaltyKind::l1: {
                double s = 0.0;
                for (double v : core_) s += std::abs(v);
                return penalty_.lambda * s;
            }
        }
        return 0.0;
    }

    // Slice costs against the current core for mode k:
    // cost(a, r) = sum over entries of slice a of (y - c)^2 with the slice
    // assigned to cluster r. Computed from one accumulation pass building
    // S[a][g] = slice/other-block sums, then cost(a, r) =
    // ss_a + sum_g (c[r,g]^2 N_g - 2 c[r,g] S[a,g]).
    void slice_costs(std::size_t k, std::vector<double>& costs,
                     std::vector<double>& slice_ss) const {
        const std::size_t K = order_;
        const std::size_t dk = dims_[k];
        const std::size_t rk = ranks_[k];

        std::size_t g_total = 1;
        std::vector<std::size_t> gstride(K, 0);
        for (std::size_t l = K; l-- > 0;) {
            if (l == k) continue;
            gstride[l] = g_total;
            g_total *= ranks_[l];
        }

        std::vector<double> s(dk * g_total, 0.0);
        slice_ss.assign(dk, 0.0);
        {
            const double* src = y_.data().data();
            const std::size_t inner = dims_[K - 1];
            std::vector<std::size_t> idx(K, 0);
            std::size_t pos = 0;
            while (true) {
                std::size_t gbase = 0;
                for (std::size_t l = 0; l + 1 < K; ++l) {
                    if (l == k) continue;
                    gbase += static_cast<std::size_t>(labels_[l][idx[l]]) *
                             gstride[l];
                }
                if (k == K - 1) {
                    for (std::size_t a = 0; a < inner; ++a) {
                        const double v = src[pos++];
                        s[a * g_total + gbase] += v;
                        slice_ss[a] += v * v;
                    }
                } else {
                    const std::size_t a = idx[k];
                    double* srow = s.data() + a * g_total;
                    double ss = 0.0;
                    const std::size_t gs = gstride[K - 1];
                    for (std::size_t i = 0; i < inner; ++i) {
                        const double v = src[pos++];
                        srow[gbase +
                             static_cast<std::size_t>(labels_[K - 1][i]) * gs] +=
                            v;
                        ss += v * v;
                    }
                    slice_ss[a] += ss;
                }
                std::size_t l = K - 1;
                while (l-- > 0) {
                    if (++idx[l] < dims_[l]) break;
                    idx[l] = 0;
                }
                if (l == static_cast<std::size_t>(-1)) break;
            }
        }

        // N_g: other-mode block sizes in the same g ordering.
        std::vector<double> n_g{1.0};
        for (std::size_t l = 0; l < K; ++l) {
            if (l == k) continue;
            std::vector<double> next(n_g.size() * ranks_[l]);
            for (std::size_t g = 0; g < n_g.size(); ++g) {
                for (std::size_t r = 0; r < ranks_[l]; ++r) {
                    next[g * ranks_[l] + r] =
                        n_g[g] * static_cast<double>(sizes_[l][r]);
                }
            }
            n_g = std::move(next);
        }

        // Mode-k unfolding of the core: cu[r][g].
        std::size_t outer_r = 1, inner_r = 1;
        for (std::size_t l = 0; l < k; ++l) outer_r *= ranks_[l];
        for (std::size_t l = k + 1; l < K; ++l) inner_r *= ranks_[l];
        std::vector<double> cu(rk * g_total);
        for (std::size_t o = 0; o < outer_r; ++o) {
            for (std::size_t r = 0; r < rk; ++r) {
                for (std::size_t j = 0; j < inner_r; ++j) {
                    cu[r * g_total + o * inner_r + j] =
                        core_[(o * rk + r) * inner_r + j];
                }
            }
        }

        std::vector<double> quad(rk, 0.0);  // sum_g c^2 N_g per cluster
        for (std::size_t r = 0; r < rk; ++r) {
            double q = 0.0;
            const double* crow = cu.data() + r * g_total;
            for (std::size_t g = 0; g < g_total; ++g) {
                q += crow[g] * crow[g] * n_g[g];
            }
            quad[r] = q;
        }

        costs.assign(dk * rk, 0.0);
        for (std::size_t a = 0; a < dk; ++a) {
            const double* srow = s.data() + a * g_total;
            for (std::size_t r = 0; r < rk; ++r) {
                const double* crow = cu.data() + r * g_total;
                double dot = 0.0;
                for (std::size_t g = 0; g < g_total; ++g) {
                    dot += crow[g] * srow[g];
                }
                costs[a * rk + r] = slice_ss[a] + quad[r] - 2.0 * dot;
            }
        }
    }

    void assign_mode(std::size_t k) {
        std::vector<double> costs, slice_ss;
        slice_costs(k, costs, slice_ss);
        const std::size_t dk = dims_[k];
        const std::size_t rk = ranks_[k];
        std::fill(sizes_[k].begin(), sizes_[k].end(), std::size_t{0});
        for (std::size_t a = 0; a < dk; ++a) {
            int arg = 0;
            double best = costs[a * rk];
            for (std::size_t r = 1; r < rk; ++r) {
                if (costs[a * rk + r] < best) {
                    best = costs[a * rk + r];
                    arg = static_cast<int>(r);
                }
            }
            labels_[k][a] = arg;
            ++sizes_[k][static_cast<std::size_t>(arg)];
        }
    }

    // Moves the slice with the largest residual (among clusters that can
    // spare one) into the empty cluster `target`.
    void repair_mode(std::size_t k, std::size_t target) {
        // Per-slice residual under the current core.
        std::vector<double> residual(dims_[k], 0.0);
        {
            const std::size_t K = order_;
            const double* src = y_.data().data();
            const std::size_t inner = dims_[K - 1];
            std::vector<std::size_t> idx(K, 0);
            std::size_t pos = 0;
            while (true) {
                std::size_t base = 0;
                for (std::size_t l = 0; l + 1 < K; ++l) {
                    base += static_cast<std::size_t>(labels_[l][idx[l]]) *
                            rank_stride_[l];
                }
                if (k == K - 1) {
                    for (std::size_t i = 0; i < inner; ++i) {
                        const double d =
                            src[pos++] -
                            core_[base +
                                  static_cast<std::size_t>(labels_[K - 1][i])];
                        residual[i] += d * d;
                    }
                } else {
                    double acc = 0.0;
                    for (std::size_t i = 0; i < inner; ++i) {
                        const double d =
                            src[pos++] -
                            core_[base +
                                  static_cast<std::size_t>(labels_[K - 1][i])];
                        acc += d * d;
                    }
                    residual[idx[k]] += acc;
                }
                std::size_t l = K - 1;
                while (l-- > 0) {
                    if (++idx[l] < dims_[l]) break;
                    idx[l] = 0;
                }
                if (l == static_cast<std::size_t>(-1)) break;
            }
        }
        std::size_t donor = dims_[k];
        double worst = -1.0;
        for (std::size_t a = 0; a < dims_[k]; ++a) {
            const std::size_t cur = static_cast<std::size_t>(labels_[k][a]);
            if (sizes_[k][cur] < 2) continue;
            if (residual[a] > worst) {
                worst = residual[a];
                donor = a;
            }
        }
        if (donor == dims_[k]) {
            throw std::logic_error("empty-cluster repair found no donor");
        }
        --sizes_[k][static_cast<std::size_t>(labels_[k][donor])];
        labels_[k][donor] = static_cast<int>(target);
        ++sizes_[k][target];
    }

    const Tensor& y_;
    std::vector<std::size_t> dims_;
    std::vector<std::size_t> ranks_;
    Penalty penalty_;
    std::size_t order_;
    std::size_t rank_total_ = 0;
    std::vector<std::size_t> rank_stride_;
    std::vector<std::vector<int>> labels_;
    std::vector<std::vector<std::size_t>> sizes_;
    std::vector<double> core_;
    std::vector<double> block_sums_;
    std::vector<double> block_n_;
    double last_objective_ = std::numeric_limits<double>::infinity();
    double last_rss_ = std::numeric_limits<double>::infinity();
};

std::vector<std::vector<int>> to_label_vectors(
    const std::vector<Membership>& ms) {
    std::vector<std::vector<int>> labels;
    labels.reserve(ms.size());
    for (const Membership& m : ms) labels.push_back(m.labels());
    return labels;
}

void check_memberships(const Tensor& y, const std::vector<Membership>& ms) {
    if (ms.size() != y.order()) {
        throw std::invalid_argument("membership count does not match order");
    }
    for (std::size_t k = 0; k < ms.size(); ++k) {
        if (ms[k].size() != y.dim(k)) {
            throw std::invalid_argument("membership length mismatch in mode " +
                                        std::to_string(k));
        }
    }
}

}  // namespace

double objective(const Tensor& y, const BlockModel& m, const Penalty& penalty) {
    penalty.validate();
    m.validate();
    if (m.data_dims() != y.dims()) {
        throw std::invalid_argument("model dims do not match tensor dims");
    }
    const Tensor theta = assemble_mean(m);
    Kahan rss;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - theta[i];
        rss.add(d * d);
    }
    return rss.value() + penalty.core_term(m.core);
}

std::vector<Membership> kmeans_init(const Tensor& y,
                                    const std::vector<std::size_t>& ranks,
                                    std::uint64_t seed) {
    if (ranks.size() != y.order()) {
        throw std::invalid_argument("ranks order does not match tensor order");
    }
    std::vector<Membership> out;
    out.reserve(ranks.size());
    for (std::size_t k = 0; k < ranks.size(); ++k) {
        if (ranks[k] < 1 || ranks[k] > y.dim(k)) {
            throw std::invalid_argument("infeasible rank for mode " +
                                        std::to_string(k));
        }
        Rng rng(derive_seed(seed, k));
        const Matrix rows = unfold(y, k);
        KMeansResult km = kmeans(rows, static_cast<int>(ranks[k]), rng);
        out.emplace_back(std::move(km.labels), static_cast<int>(ranks[k]));
    }
    return out;
}

Tensor update_core(const Tensor& y, const std::vector<Membership>& memberships) {
    return update_core_sparse(y, memberships, Penalty::none());
}

Tensor update_core_sparse(const Tensor& y,
                          const std::vector<Membership>& memberships,
                          const Penalty& penalty) {
    penalty.validate();
    check_memberships(y, memberships);
    std::vector<std::size_t> ranks(memberships.size());
    for (std::size_t k = 0; k < memberships.size(); ++k) {
        ranks[k] = static_cast<std::size_t>(memberships[k].num_clusters());
    }
    Fitter f(y, ranks, penalty);
    f.set_labels(to_label_vectors(memberships));
    f.core_step();
    return f.core_tensor();
}

Membership update_membership(const Tensor& y, const BlockModel& m,
                             std::size_t mode) {
    m.validate();
    if (m.data_dims() != y.dims()) {
        throw std::invalid_argument("model dims do not match tensor dims");
    }
    if (mode >= y.order()) {
        throw std::invalid_argument("mode out of range");
    }
    Fitter f(y, m.ranks(), Penalty::none());
    f.set_labels(to_label_vectors(m.memberships));
    f.set_core(m.core);
    f.membership_step(mode, /*recompute_core_on_repair=*/false, nullptr);
    return Membership(f.labels()[mode],
                      static_cast<int>(m.core.dim(mode)));
}

BlockModelFit fit(const Tensor& y, const FitConfig& config) {
    config.validate(y.dims());
    for (double v : y.data()) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("input tensor has non-finite values");
        }
    }
    const bool check_monotone = config.penalty.kind == PenaltyKind::none;

    struct RestartResult {
        double objective = std::numeric_limits<double>::infinity();
        double residual = 0.0;
        std::vector<double> trace;
        int sweeps = 0;
        bool converged = false;
        std::vector<std::vector<int>> labels;
        Tensor core;
    };
    std::vector<RestartResult> results(
        static_cast<std::size_t>(config.restarts));

    parallel_for(static_cast<std::size_t>(config.restarts), [&](std::size_t r) {
        const std::uint64_t restart_seed = derive_seed(config.seed, r);
        std::vector<Membership> init = kmeans_init(y, config.ranks, restart_seed);

        Fitter fitter(y, config.ranks, config.penalty);
        fitter.set_labels(to_label_vectors(init));

        RestartResult& out = results[r];
        std::vector<double> steps;
        double prev_sweep = std::numeric_limits<double>::infinity();
        for (int sweep = 0; sweep < config.max_iters; ++sweep) {
            steps.push_back(fitter.core_step());
            for (std::size_t k = 0; k < y.order(); ++k) {
                fitter.membership_step(k, /*recompute_core_on_repair=*/true,
                                       &steps);
            }
            const double cur = fitter.objective_value();
            out.trace.push_back(cur);
            out.sweeps = sweep + 1;
            if (std::isfinite(prev_sweep)) {
                const double denom =
                    std::max(prev_sweep, std::numeric_limits<double>::min());
                if ((prev_sweep - cur) / denom < config.rel_tol) {
                    out.converged = true;
                    break;
                }
            }
            prev_sweep = cur;
        }
        if (check_monotone) {
            for (std::size_t i = 1; i < steps.size(); ++i) {
                if (steps[i] > steps[i - 1] + 1e-9) {
                    throw std::logic_error(
                        "objective increased during an update step");
                }
            }
        }
        out.objective = fitter.objective_value();
        out.residual = fitter.residual_value();
        out.labels = fitter.labels();
        out.core = fitter.core_tensor();
    });

    // Pure reduction: min objective, ties to the lowest restart index, so
    // the outcome is independent of scheduling.
    std::size_t best = 0;
    for (std::size_t r = 1; r < results.size(); ++r) {
        if (results[r].objective < results[best].objective) best = r;
    }
    RestartResult& win = results[best];

    std::vector<Membership> ms;
    ms.reserve(y.order());
    for (std::size_t k = 0; k < y.order(); ++k) {
        ms.emplace_back(std::move(win.labels[k]),
                        static_cast<int>(config.ranks[k]));
    }
    BlockModelFit result;
    result.model = canonicalize(BlockModel{std::move(win.core), std::move(ms)});
    result.objective = win.objective;
    result.residual = win.residual;
    result.objective_trace = std::move(win.trace);
    result.restart_index = static_cast<int>(best);
    result.iterations_used = win.sweeps;
    result.converged = win.converged;
    result.penalty = config.penalty;
    return result;
}

}  // namespace tbm
