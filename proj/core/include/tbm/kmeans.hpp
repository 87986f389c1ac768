#pragma once

#include <cstddef>
#include <vector>

#include "tbm/rng.hpp"
#include "tbm/tensor.hpp"

namespace tbm {

struct KMeansResult {
    std::vector<int> labels;  // one label in [0, k) per row, every cluster non-empty
    int clusters = 0;
    int iterations = 0;
    bool converged = false;
};

/// Lloyd's algorithm on the rows of `points` with k-means++ seeding.
/// Deterministic given the rng stream. Ties break to the smallest center
/// index; clusters that empty during an iteration are repaired by moving in
/// the point farthest from its assigned center. Always returns a valid
/// clustering.
KMeansResult kmeans(const Matrix& points, int k, Rng& rng,
                    int max_iters = 50);

}  // namespace tbm
