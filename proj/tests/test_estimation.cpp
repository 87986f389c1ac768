#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "oracles.hpp"
#include "tbm/estimation.hpp"
#include "tbm/metrics.hpp"
#include "tbm/rng.hpp"
#include "tbm/simulate.hpp"

using tbm::BlockModel;
using tbm::BlockModelFit;
using tbm::FitConfig;
using tbm::Membership;
using tbm::Penalty;
using tbm::Tensor;

namespace {

tbm::SimConfig easy_config(std::uint64_t seed) {
    tbm::SimConfig cfg;
    cfg.dims = {8, 7, 6};
    cfg.ranks = {2, 3, 2};
    cfg.sigma = 0.0;
    cfg.seed = seed;
    return cfg;
}

void check_trace_non_increasing(const BlockModelFit& fit) {
    for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
        CHECK(fit.objective_trace[i] <= fit.objective_trace[i - 1] + 1e-9);
    }
    CHECK(fit.objective == fit.objective_trace.back());
}

}  // namespace

TEST_SUITE_BEGIN("estimation");

TEST_CASE("objective on worked examples") {
    // Exact model: objective 0.
    BlockModel m{Tensor({1, 1}, {1.0}),
                 {Membership({0, 0}, 1), Membership({0, 0}, 1)}};
    const Tensor theta = assemble_mean(m);
    CHECK(tbm::objective(theta, m, Penalty::none()) == 0.0);

    // y = zeros, theta = all-ones 2x2: ||y - theta||^2 = 4.
    const Tensor zeros({2, 2});
    CHECK(tbm::objective(zeros, m, Penalty::none()) == doctest::Approx(4.0));

    // Adding an l1 penalty with lambda = 2 on the unit core adds 2.
    CHECK(tbm::objective(zeros, m, Penalty::l1(2.0)) == doctest::Approx(6.0));

    CHECK_THROWS_AS(tbm::objective(Tensor({3, 2}), m, Penalty::none()),
                    std::invalid_argument);
}

TEST_CASE("kmeans_init recovers well-separated noiseless partitions") {
    const tbm::SimOutput sim = tbm::gen_data(easy_config(3));
    const std::vector<Membership> init =
        tbm::kmeans_init(sim.y, {2, 3, 2}, 17);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(tbm::mcr(sim.truth.memberships[k], init[k]) == 0.0);
    }
}

TEST_CASE("kmeans_init degenerate cluster counts") {
    const Tensor y = oracle::random_tensor({5, 4}, 2);
    const std::vector<Membership> singletons = tbm::kmeans_init(y, {5, 1}, 1);
    // One cluster per slice: all clusters are singletons.
    const std::vector<std::size_t> sizes = singletons[0].cluster_sizes();
    for (std::size_t s : sizes) CHECK(s == 1);
    // R = 1: everything in one cluster.
    for (std::size_t i = 0; i < 4; ++i) CHECK(singletons[1].label(i) == 0);
}

TEST_CASE("update_core: identity partition returns y itself") {
    const Tensor y = oracle::random_tensor({3, 4}, 5);
    const Tensor core = tbm::update_core(
        y, {Membership({0, 1, 2}, 3), Membership({0, 1, 2, 3}, 4)});
    CHECK(core == y);
}

TEST_CASE("update_core: grand mean for the single-block model") {
    const Tensor y({2, 2}, {1, 2, 3, 4});
    const Tensor core =
        tbm::update_core(y, {Membership({0, 0}, 1), Membership({0, 0}, 1)});
    CHECK(core.size() == 1);
    CHECK(core[0] == doctest::Approx(2.5));
}

TEST_CASE("update_core matches a nested-loop averaging oracle") {
    const Tensor y = oracle::random_tensor({4, 4}, 8, -2, 2);
    const std::vector<Membership> ms{Membership({0, 0, 1, 1}, 2),
                                     Membership({0, 0, 1, 1}, 2)};
    const Tensor core = tbm::update_core(y, ms);
    for (std::size_t r1 = 0; r1 < 2; ++r1) {
        for (std::size_t r2 = 0; r2 < 2; ++r2) {
            double sum = 0.0;
            int count = 0;
            for (std::size_t i = 0; i < 4; ++i) {
                for (std::size_t j = 0; j < 4; ++j) {
                    if (static_cast<std::size_t>(ms[0].label(i)) == r1 &&
                        static_cast<std::size_t>(ms[1].label(j)) == r2) {
                        sum += y.at(std::vector<std::size_t>{i, j});
                        ++count;
                    }
                }
            }
            CHECK(core.at(std::vector<std::size_t>{r1, r2}) ==
                  doctest::Approx(sum / count).epsilon(1e-14));
        }
    }
}

TEST_CASE("threshold closed forms on worked examples") {
    // Hard threshold: c_ols = 1, n = 4, lambda = 8 -> sqrt(2) > 1 -> 0.
    CHECK(tbm::threshold_block_mean(1.0, 4.0, Penalty::l0(8.0)) == 0.0);
    // Soft threshold: c_ols = 2, n = 1, lambda = 2 -> 2 - 1 = 1.
    CHECK(tbm::threshold_block_mean(2.0, 1.0, Penalty::l1(2.0)) ==
          doctest::Approx(1.0));
    // c_ols = -0.4, n = 1, lambda = 2 -> clipped to 0.
    CHECK(tbm::threshold_block_mean(-0.4, 1.0, Penalty::l1(2.0)) == 0.0);
    // Negative values keep their sign.
    CHECK(tbm::threshold_block_mean(-2.0, 1.0, Penalty::l1(2.0)) ==
          doctest::Approx(-1.0));
}

TEST_CASE("update_core_sparse with lambda 0 equals update_core bit-exactly") {
    const Tensor y = oracle::random_tensor({6, 5}, 13);
    const std::vector<Membership> ms{Membership({0, 1, 0, 1, 0, 1}, 2),
                                     Membership({0, 0, 1, 1, 2}, 3)};
    const Tensor dense = tbm::update_core(y, ms);
    CHECK(tbm::update_core_sparse(y, ms, Penalty::l0(0.0)) == dense);
    CHECK(tbm::update_core_sparse(y, ms, Penalty::l1(0.0)) == dense);
    CHECK_THROWS_AS(tbm::update_core_sparse(y, ms, Penalty::l0(-1.0)),
                    std::invalid_argument);
}

TEST_CASE("threshold output minimizes the scalar penalized objective") {
    tbm::Rng rng(55);
    for (int rep = 0; rep < 100; ++rep) {
        const double c_ols = rng.next_uniform(-3, 3);
        const double n = static_cast<double>(1 + rng.next_below(64));
        const double lambda = rng.next_uniform(0, 10);
        const int rho = rep % 2;
        const Penalty pen =
            rho == 0 ? Penalty::l0(lambda) : Penalty::l1(lambda);
        const double closed = tbm::threshold_block_mean(c_ols, n, pen);
        const double grid_best =
            oracle::grid_minimize_threshold(c_ols, n, lambda, rho);
        const double f_closed =
            oracle::scalar_penalized(closed, c_ols, n, lambda, rho);
        const double f_grid =
            oracle::scalar_penalized(grid_best, c_ols, n, lambda, rho);
        CHECK(f_closed <= f_grid + 1e-9);
    }
}

TEST_CASE("update_membership on the worked 3x2 example") {
    // Rows cluster against core values (0, 10).
    const Tensor y({3, 2}, {0.1, 0.1, 9.8, 9.8, 0.2, 0.2});
    BlockModel m{Tensor({2, 1}, {0.0, 10.0}),
                 {Membership({0, 1, 0}, 2), Membership({0, 0}, 1)}};
    const Membership updated = tbm::update_membership(y, m, 0);
    CHECK(updated.labels() == std::vector<int>{0, 1, 0});
}

TEST_CASE("update_membership reproduces labels at zero noise") {
    const tbm::SimOutput sim = tbm::gen_data(easy_config(21));
    for (std::size_t k = 0; k < 3; ++k) {
        // Start from the truth, scramble one mode, and let the argmin
        // restore it (up to nothing: the core is the true one).
        const Membership updated =
            tbm::update_membership(sim.theta_true, sim.truth, k);
        CHECK(tbm::mcr(sim.truth.memberships[k], updated) == 0.0);
    }
}

TEST_CASE("update_membership repairs emptied clusters with the worst slice") {
    // Every row sits near 0, so the argmin empties cluster 1; the repair
    // must move the slice with the largest residual into it.
    const Tensor y({4, 2}, {0.0, 0.0, 0.3, 0.3, 0.1, 0.1, 0.05, 0.05});
    BlockModel m{Tensor({2, 1}, {0.0, 100.0}),
                 {Membership({0, 0, 0, 1}, 2), Membership({0, 0}, 1)}};
    const Membership updated = tbm::update_membership(y, m, 0);
    // Slice 1 (constant 0.3) has the largest residual against core value 0.
    CHECK(updated.labels() == std::vector<int>{0, 1, 0, 0});
    CHECK(updated.cluster_sizes() == std::vector<std::size_t>{3, 1});
}

TEST_CASE("fit results do not depend on the worker count") {
    tbm::SimConfig sim_cfg;
    sim_cfg.dims = {10, 9, 8};
    sim_cfg.ranks = {2, 2, 2};
    sim_cfg.sigma = 2.0;
    sim_cfg.seed = 21;
    const tbm::SimOutput sim = tbm::gen_data(sim_cfg);
    FitConfig cfg;
    cfg.ranks = {2, 2, 2};
    cfg.restarts = 8;
    cfg.seed = 5;

    setenv("TBM_THREADS", "1", 1);
    const BlockModelFit serial = tbm::fit(sim.y, cfg);
    setenv("TBM_THREADS", "4", 1);
    const BlockModelFit threaded = tbm::fit(sim.y, cfg);
    unsetenv("TBM_THREADS");

    CHECK(serial.objective == threaded.objective);
    CHECK(serial.restart_index == threaded.restart_index);
    CHECK(serial.model.core == threaded.model.core);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(serial.model.memberships[k] == threaded.model.memberships[k]);
    }
}

TEST_CASE("update_membership with one cluster assigns everything to it") {
    const Tensor y = oracle::random_tensor({4, 3}, 6);
    BlockModel m{Tensor({1, 3}, {0, 1, 2}),
                 {Membership({0, 0, 0, 0}, 1), Membership({0, 1, 2}, 3)}};
    const Membership updated = tbm::update_membership(y, m, 0);
    for (std::size_t i = 0; i < 4; ++i) CHECK(updated.label(i) == 0);
}

TEST_CASE("fit recovers noiseless data exactly") {
    for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
        const tbm::SimOutput sim = tbm::gen_data(easy_config(seed));
        FitConfig cfg;
        cfg.ranks = {2, 3, 2};
        cfg.restarts = 5;
        cfg.seed = seed;
        const BlockModelFit fit = tbm::fit(sim.y, cfg);
        CHECK(fit.objective <= 1e-18);
        for (std::size_t k = 0; k < 3; ++k) {
            CHECK(tbm::mcr(sim.truth.memberships[k],
                           fit.model.memberships[k]) == 0.0);
        }
        check_trace_non_increasing(fit);
        CHECK(fit.converged);
    }
}

TEST_CASE("multi-restart fit attains the brute-force optimum at toy scale") {
    int hits = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
        tbm::SimConfig sim_cfg;
        sim_cfg.dims = {4, 4, 4};
        sim_cfg.ranks = {2, 2, 2};
        sim_cfg.sigma = 1.0;
        sim_cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
        const tbm::SimOutput sim = tbm::gen_data(sim_cfg);

        FitConfig cfg;
        cfg.ranks = {2, 2, 2};
        cfg.restarts = 20;
        cfg.seed = 7 * static_cast<std::uint64_t>(trial) + 1;
        const BlockModelFit fit = tbm::fit(sim.y, cfg);
        const oracle::BruteForceResult brute =
            oracle::brute_force_fit(sim.y, {2, 2, 2});
        CHECK(fit.objective >= brute.objective - 1e-9);
        if (fit.objective <= brute.objective + 1e-9) ++hits;
        check_trace_non_increasing(fit);
    }
    CHECK(hits >= 18);  // 90%
}

TEST_CASE("sparse fit with lambda 0 equals the dense fit") {
    tbm::SimConfig sim_cfg;
    sim_cfg.dims = {10, 9, 8};
    sim_cfg.ranks = {2, 2, 2};
    sim_cfg.sigma = 1.0;
    sim_cfg.seed = 5;
    const tbm::SimOutput sim = tbm::gen_data(sim_cfg);

    FitConfig dense;
    dense.ranks = {2, 2, 2};
    dense.restarts = 3;
    dense.seed = 9;
    FitConfig sparse = dense;
    sparse.penalty = Penalty::l0(0.0);

    const BlockModelFit a = tbm::fit(sim.y, dense);
    const BlockModelFit b = tbm::fit(sim.y, sparse);
    CHECK(a.objective == b.objective);
    CHECK(a.model.core == b.model.core);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(a.model.memberships[k] == b.model.memberships[k]);
    }
}

TEST_CASE("sparse fit records its penalized trace without asserting "
          "monotonicity") {
    tbm::SimConfig sim_cfg;
    sim_cfg.dims = {12, 12, 12};
    sim_cfg.ranks = {3, 3, 3};
    sim_cfg.sigma = 2.0;
    sim_cfg.sparsity_p = 0.5;
    sim_cfg.seed = 31;
    const tbm::SimOutput sim = tbm::gen_data(sim_cfg);

    FitConfig cfg;
    cfg.ranks = {3, 3, 3};
    cfg.restarts = 4;
    cfg.seed = 2;
    cfg.penalty = Penalty::l0(20.0);
    const BlockModelFit fit = tbm::fit(sim.y, cfg);
    CHECK(!fit.objective_trace.empty());
    CHECK(fit.objective == fit.objective_trace.back());
    CHECK(fit.objective >= fit.residual);  // penalty term is nonnegative
    // The thresholded core really is sparse here.
    std::size_t zeros = 0;
    for (double v : fit.model.core.data()) zeros += (v == 0.0);
    CHECK(zeros > 0);
}

TEST_CASE("fit recovers well-separated Bernoulli block structure") {
    // Binary data with block probabilities pushed toward {0, 1}: the
    // least-squares fit recovers the partitions without any Gaussian
    // assumption.
    tbm::SimConfig sim_cfg;
    sim_cfg.dims = {14, 14, 12};
    sim_cfg.ranks = {2, 2, 2};
    sim_cfg.noise = tbm::NoiseKind::bernoulli;
    tbm::SimOutput sim;
    // Sharpening probabilities toward {0.05, 0.95} can collapse slices;
    // take the first seed whose sharpened core stays irreducible.
    for (std::uint64_t seed = 3;; ++seed) {
        sim_cfg.seed = seed;
        sim = tbm::gen_data(sim_cfg);
        for (double& v : sim.truth.core.data()) v = v < 0.5 ? 0.05 : 0.95;
        if (tbm::is_irreducible(sim.truth.core)) break;
    }
    sim.theta_true = assemble_mean(sim.truth);
    sim.y = tbm::sample_bernoulli(sim.theta_true, 11);

    FitConfig cfg;
    cfg.ranks = {2, 2, 2};
    cfg.restarts = 10;
    cfg.seed = 13;
    const BlockModelFit fit = tbm::fit(sim.y, cfg);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(tbm::mcr(sim.truth.memberships[k], fit.model.memberships[k]) ==
              0.0);
    }
    // Fitted block means are the block success rates, near the truth.
    CHECK(tbm::max_norm(sim.truth.core) <= 1.0);
    CHECK(tbm::rmse(sim.theta_true, assemble_mean(fit.model)) < 0.15);
}

TEST_CASE("fit is deterministic given the seed") {
    tbm::SimConfig sim_cfg;
    sim_cfg.dims = {9, 8, 7};
    sim_cfg.ranks = {2, 3, 2};
    sim_cfg.sigma = 3.0;
    sim_cfg.seed = 77;
    const tbm::SimOutput sim = tbm::gen_data(sim_cfg);

    FitConfig cfg;
    cfg.ranks = {2, 3, 2};
    cfg.restarts = 6;
    cfg.seed = 123;
    const BlockModelFit a = tbm::fit(sim.y, cfg);
    const BlockModelFit b = tbm::fit(sim.y, cfg);
    CHECK(a.objective == b.objective);
    CHECK(a.restart_index == b.restart_index);
    CHECK(a.model.core == b.model.core);
    CHECK(a.objective_trace == b.objective_trace);
}

TEST_CASE("permuting slices permutes the fitted partition") {
    const tbm::SimOutput sim = tbm::gen_data(easy_config(60));
    FitConfig cfg;
    cfg.ranks = {2, 3, 2};
    cfg.restarts = 10;
    cfg.seed = 4;
    const BlockModelFit base = tbm::fit(sim.y, cfg);

    // Permute slices along mode 0 and refit with the same seed stream.
    tbm::Rng rng(99);
    std::vector<std::size_t> perm(sim.y.dim(0));
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    Tensor permuted(sim.y.dims());
    for (std::size_t lin = 0; lin < sim.y.size(); ++lin) {
        std::vector<std::size_t> idx = sim.y.multi_index(lin);
        idx[0] = perm[idx[0]];
        permuted.at(idx) = sim.y[lin];
    }
    const BlockModelFit moved = tbm::fit(permuted, cfg);

    // Induced entry partitions must agree once the permutation is undone.
    const std::vector<int> base_sig = oracle::partition_signature(base.model);
    std::vector<int> moved_sig = oracle::partition_signature(moved.model);
    // moved entry (perm[i0], i1, i2) corresponds to base entry (i0, i1, i2).
    Tensor shape(sim.y.dims());
    std::vector<int> undone(moved_sig.size());
    for (std::size_t lin = 0; lin < undone.size(); ++lin) {
        std::vector<std::size_t> idx = shape.multi_index(lin);
        idx[0] = perm[idx[0]];
        undone[lin] = moved_sig[shape.linear_index(idx)];
    }
    // Relabel both signatures in first-occurrence order before comparing.
    auto normalize = [](std::vector<int> sig) {
        std::vector<int> remap(sig.size(), -1);
        int next = 0;
        for (int& s : sig) {
            if (remap[static_cast<std::size_t>(s)] < 0) {
                remap[static_cast<std::size_t>(s)] = next++;
            }
            s = remap[static_cast<std::size_t>(s)];
        }
        return sig;
    };
    CHECK(normalize(base_sig) == normalize(undone));
}

TEST_CASE("order-1 tensors reduce to one-dimensional clustering") {
    const Tensor y({8}, {0.1, 10.2, -0.1, 9.9, 0.0, 10.1, 0.2, 9.8});
    FitConfig cfg;
    cfg.ranks = {2};
    cfg.restarts = 5;
    cfg.seed = 3;
    const BlockModelFit fit = tbm::fit(y, cfg);
    // Canonical labels: first slice's cluster is 0.
    CHECK(fit.model.memberships[0].labels() ==
          std::vector<int>{0, 1, 0, 1, 0, 1, 0, 1});
    CHECK(fit.model.core[0] == doctest::Approx(0.05));
    CHECK(fit.model.core[1] == doctest::Approx(10.0));
    check_trace_non_increasing(fit);
}

TEST_CASE("fit validates its inputs") {
    const Tensor y = oracle::random_tensor({4, 4}, 3);
    FitConfig cfg;
    cfg.ranks = {5, 2};
    CHECK_THROWS_AS(tbm::fit(y, cfg), std::invalid_argument);

    cfg.ranks = {2, 2};
    cfg.restarts = 0;
    CHECK_THROWS_AS(tbm::fit(y, cfg), std::invalid_argument);

    cfg.restarts = 1;
    Tensor bad = y;
    bad[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(tbm::fit(bad, cfg), std::invalid_argument);
}

TEST_SUITE_END();
