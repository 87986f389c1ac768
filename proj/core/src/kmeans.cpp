#include "tbm/kmeans.hpp"

#include <limits>
#include <stdexcept>

namespace tbm {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, Rng& rng, int max_iters) {
    const std::size_t n = points.rows();
    const std::size_t m = points.cols();
    if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw std::invalid_argument("kmeans: cluster count must be in [1, n]");
    }
    const std::size_t kk = static_cast<std::size_t>(k);

    // k-means++ seeding. When the remaining D^2 mass is zero (duplicate
    // rows), fall back to the smallest unchosen index.
    std::vector<std::vector<double>> centers(kk, std::vector<double>(m));
    std::vector<bool> chosen(n, false);
    std::vector<double> mindist(n, std::numeric_limits<double>::infinity());
    {
        const std::size_t first = static_cast<std::size_t>(rng.next_below(n));
        chosen[first] = true;
        std::span<const double> row = points.row(first);
        std::copy(row.begin(), row.end(), centers[0].begin());
        for (std::size_t i = 0; i < n; ++i) {
            mindist[i] = sq_dist(points.row(i), centers[0]);
        }
        for (std::size_t c = 1; c < kk; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += mindist[i];
            std::size_t pick = n;
            if (total > 0.0) {
                const double target = rng.next_double() * total;
                double acc = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += mindist[i];
                    if (acc >= target) {
                        pick = i;
                        break;
                    }
                }
                if (pick == n) pick = n - 1;  // guard against rounding
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    if (!chosen[i]) {
                        pick = i;
                        break;
                    }
                }
                if (pick == n) pick = 0;
            }
            chosen[pick] = true;
            std::span<const double> prow = points.row(pick);
            std::copy(prow.begin(), prow.end(), centers[c].begin());
            for (std::size_t i = 0; i < n; ++i) {
                mindist[i] = std::min(mindist[i], sq_dist(points.row(i), centers[c]));
            }
        }
    }

    std::vector<int> labels(n, 0);
    std::vector<double> best(n, 0.0);
    std::vector<std::size_t> counts(kk, 0);

    auto assign = [&]() {
        bool changed = false;
        std::fill(counts.begin(), counts.end(), std::size_t{0});
        for (std::size_t i = 0; i < n; ++i) {
            int arg = 0;
            double bd = sq_dist(points.row(i), centers[0]);
            for (std::size_t c = 1; c < kk; ++c) {
                const double d = sq_dist(points.row(i), centers[c]);
                if (d < bd) {
                    bd = d;
                    arg = static_cast<int>(c);
                }
            }
            if (labels[i] != arg) changed = true;
            labels[i] = arg;
            best[i] = bd;
            ++counts[static_cast<std::size_t>(arg)];
        }
        return changed;
    };

    auto repair_empty = [&]() {
        for (std::size_t r = 0; r < kk; ++r) {
            if (counts[r] != 0) continue;
            // Move the farthest point out of a cluster that can spare one.
            std::size_t donor = n;
            double worst = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[static_cast<std::size_t>(labels[i])] < 2) continue;
                if (best[i] > worst) {
                    worst = best[i];
                    donor = i;
                }
            }
            if (donor == n) continue;  // n < k cannot happen; all singletons
            --counts[static_cast<std::size_t>(labels[donor])];
            labels[donor] = static_cast<int>(r);
            ++counts[r];
            best[donor] = 0.0;
        }
    };

    auto update_centers = [&]() {
        for (auto& c : centers) std::fill(c.begin(), c.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            std::span<const double> row = points.row(i);
            std::vector<double>& c = centers[static_cast<std::size_t>(labels[i])];
            for (std::size_t j = 0; j < m; ++j) c[j] += row[j];
        }
        for (std::size_t r = 0; r < kk; ++r) {
            const double inv = 1.0 / static_cast<double>(counts[r]);
            for (double& v : centers[r]) v *= inv;
        }
    };

    KMeansResult result;
    result.clusters = k;
    assign();
    repair_empty();
    for (int iter = 0; iter < max_iters; ++iter) {
        update_centers();
        const bool changed = assign();
        result.iterations = iter + 1;
        if (!changed) {
            result.converged = true;
            break;
        }
        repair_empty();
    }
    repair_empty();
    result.labels = std::move(labels);
    return result;
}

}  // namespace tbm
