#pragma once

#include <cstdint>
#include <vector>

#include "tbm/block_model.hpp"
#include "tbm/tensor.hpp"

namespace tbm {

enum class NoiseKind { gaussian, bernoulli };
enum class MembershipScheme { balanced, multinomial };

/// Fully determines a synthetic dataset: identical configs produce
/// bit-identical outputs.
struct SimConfig {
    std::vector<std::size_t> dims;
    std::vector<std::size_t> ranks;
    NoiseKind noise = NoiseKind::gaussian;
    double sigma = 1.0;         // Gaussian noise level; ignored for Bernoulli
    double sparsity_p = 0.0;    // zero-mass mixture weight for Gaussian cores
    MembershipScheme scheme = MembershipScheme::balanced;
    std::size_t min_size = 1;   // multinomial scheme only
    std::uint64_t seed = 0;

    void validate() const;
};

struct SimOutput {
    Tensor y;
    BlockModel truth;
    Tensor theta_true;  // assemble_mean(truth)
};

/// Core of block means. Gaussian regime: entries are 0 with probability
/// sparsity_p, otherwise Uniform[-3, 3]. Bernoulli regime: entries
/// Uniform[0, 1] (valid probabilities; sparsity_p does not apply).
/// Rejection-resamples until the core is irreducible; fails explicitly
/// after 100 attempts.
Tensor gen_core(const std::vector<std::size_t>& ranks, double sparsity_p,
                NoiseKind noise, std::uint64_t seed);

/// balanced: cluster sizes differ by at most 1, labels assigned by a
/// shuffled round-robin. multinomial: uniform random labels, resampled
/// until every cluster has >= min_size members.
std::vector<Membership> gen_memberships(const std::vector<std::size_t>& dims,
                                        const std::vector<std::size_t>& ranks,
                                        MembershipScheme scheme,
                                        std::size_t min_size,
                                        std::uint64_t seed);

/// theta + iid N(0, sigma^2).
Tensor add_gaussian_noise(const Tensor& theta, double sigma,
                          std::uint64_t seed);

/// Entrywise iid Bernoulli(theta); entries outside [0, 1] are rejected.
Tensor sample_bernoulli(const Tensor& theta, std::uint64_t seed);

/// Gaussian: y = theta_true + iid N(0, sigma^2). Bernoulli: y entrywise
/// iid Bernoulli(block mean). Sub-streams for core, memberships, and noise
/// derive from config.seed.
SimOutput gen_data(const SimConfig& config);

}  // namespace tbm
