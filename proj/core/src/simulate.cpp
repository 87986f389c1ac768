#include "tbm/simulate.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tbm/rng.hpp"

namespace tbm {

namespace {

// Sub-stream tags under derive_seed(seed, tag).
constexpr std::uint64_t kCoreStream = 1;
constexpr std::uint64_t kMembershipStream = 2;
constexpr std::uint64_t kNoiseStream = 3;

}  // namespace

void SimConfig::validate() const {
    if (dims.empty() || dims.size() != ranks.size()) {
        throw std::invalid_argument("dims and ranks must have equal order >= 1");
    }
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (dims[k] < 1 || ranks[k] < 1 || ranks[k] > dims[k]) {
            throw std::invalid_argument("infeasible ranks for mode " +
                                        std::to_string(k));
        }
    }
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("sigma must be finite and >= 0");
    }
    if (!(sparsity_p >= 0.0 && sparsity_p <= 1.0)) {
        throw std::invalid_argument("sparsity_p must be in [0, 1]");
    }
    if (scheme == MembershipScheme::multinomial && min_size < 1) {
        throw std::invalid_argument("min_size must be >= 1");
    }
}

Tensor gen_core(const std::vector<std::size_t>& ranks, double sparsity_p,
                NoiseKind noise, std::uint64_t seed) {
    if (ranks.empty()) throw std::invalid_argument("ranks must be non-empty");
    if (!(sparsity_p >= 0.0 && sparsity_p <= 1.0)) {
        throw std::invalid_argument("sparsity_p must be in [0, 1]");
    }
    Rng rng(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
        Tensor core(ranks);
        for (double& v : core.data()) {
            if (noise == NoiseKind::bernoulli) {
                v = rng.next_double();
            } else if (sparsity_p > 0.0 && rng.next_double() < sparsity_p) {
                v = 0.0;
            } else {
                v = rng.next_uniform(-3.0, 3.0);
            }
        }
        if (is_irreducible(core)) return core;
    }
    throw std::runtime_error(
        "could not draw an irreducible core in 100 attempts");
}

namespace {

std::vector<int> balanced_labels(std::size_t d, std::size_t r, Rng& rng) {
    std::vector<int> labels(d);
    for (std::size_t i = 0; i < d; ++i) {
        labels[i] = static_cast<int>(i % r);  // sizes differ by <= 1
    }
    rng.shuffle(labels);
    return labels;
}

std::vector<int> multinomial_labels(std::size_t d, std::size_t r,
                                    std::size_t min_size, Rng& rng) {
    if (min_size * r > d) {
        throw std::invalid_argument("min_size infeasible for mode size");
    }
    while (true) {
        std::vector<int> labels(d);
        std::vector<std::size_t> counts(r, 0);
        for (std::size_t i = 0; i < d; ++i) {
            const std::size_t l = static_cast<std::size_t>(rng.next_below(r));
            labels[i] = static_cast<int>(l);
            ++counts[l];
        }
        bool ok = true;
        for (std::size_t c : counts) ok = ok && c >= min_size;
        if (ok) return labels;
    }
}

}  // namespace

std::vector<Membership> gen_memberships(const std::vector<std::size_t>& dims,
                                        const std::vector<std::size_t>& ranks,
                                        MembershipScheme scheme,
                                        std::size_t min_size,
                                        std::uint64_t seed) {
    if (dims.size() != ranks.size()) {
        throw std::invalid_argument("dims/ranks order mismatch");
    }
    std::vector<Membership> out;
    out.reserve(dims.size());
    for (std::size_t k = 0; k < dims.size(); ++k) {
        if (ranks[k] < 1 || ranks[k] > dims[k]) {
            throw std::invalid_argument("infeasible ranks for mode " +
                                        std::to_string(k));
        }
        Rng rng(derive_seed(seed, k));
        std::vector<int> labels =
            scheme == MembershipScheme::balanced
                ? balanced_labels(dims[k], ranks[k], rng)
                : multinomial_labels(dims[k], ranks[k], min_size, rng);
        out.emplace_back(std::move(labels), static_cast<int>(ranks[k]));
    }
    return out;
}

Tensor add_gaussian_noise(const Tensor& theta, double sigma,
                          std::uint64_t seed) {
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("sigma must be finite and >= 0");
    }
    Tensor y = theta;
    if (sigma > 0.0) {
        Rng rng(seed);
        for (double& v : y.data()) v += sigma * rng.next_normal();
    }
    return y;
}

Tensor sample_bernoulli(const Tensor& theta, std::uint64_t seed) {
    for (double v : theta.data()) {
        if (v < 0.0 || v > 1.0) {
            throw std::invalid_argument(
                "Bernoulli block means must lie in [0, 1]");
        }
    }
    Tensor y = theta;
    Rng rng(seed);
    for (double& v : y.data()) v = rng.next_double() < v ? 1.0 : 0.0;
    return y;
}

SimOutput gen_data(const SimConfig& config) {
    config.validate();
    Tensor core = gen_core(config.ranks, config.sparsity_p, config.noise,
                           derive_seed(config.seed, kCoreStream));
    std::vector<Membership> memberships =
        gen_memberships(config.dims, config.ranks, config.scheme,
                        config.min_size,
                        derive_seed(config.seed, kMembershipStream));

    SimOutput out;
    out.truth = BlockModel{std::move(core), std::move(memberships)};
    out.theta_true = assemble_mean(out.truth);
    const std::uint64_t noise_seed = derive_seed(config.seed, kNoiseStream);
    out.y = config.noise == NoiseKind::gaussian
                ? add_gaussian_noise(out.theta_true, config.sigma, noise_seed)
                : sample_bernoulli(out.theta_true, noise_seed);
    return out;
}

}  // namespace tbm
