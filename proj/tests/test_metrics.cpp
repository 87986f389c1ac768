#include <doctest.h>

#include <stdexcept>

#include <numeric>

#include "oracles.hpp"
#include "tbm/metrics.hpp"
#include "tbm/rng.hpp"

using tbm::BlockModel;
using tbm::Membership;
using tbm::Tensor;

namespace {

Membership random_membership(std::size_t d, int r, tbm::Rng& rng) {
    std::vector<int> labels(d);
    for (std::size_t i = 0; i < d; ++i) {
        labels[i] = i < static_cast<std::size_t>(r)
                        ? static_cast<int>(i)
                        : static_cast<int>(rng.next_below(
                              static_cast<std::uint64_t>(r)));
    }
    rng.shuffle(labels);
    return Membership(std::move(labels), r);
}

Membership relabel(const Membership& m, const std::vector<int>& perm) {
    std::vector<int> labels(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        labels[i] = perm[static_cast<std::size_t>(m.label(i))];
    }
    return Membership(std::move(labels), m.num_clusters());
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("mse and rmse") {
    const Tensor a = oracle::random_tensor({3, 3}, 1);
    CHECK(tbm::mse(a, a) == 0.0);

    Tensor shifted = a;
    for (double& v : shifted.data()) v += 1.0;
    CHECK(tbm::mse(a, shifted) == doctest::Approx(1.0));

    Tensor x({2, 2}, {1, -1, 0, 0});
    CHECK(tbm::mse(x, Tensor({2, 2})) == doctest::Approx(0.5));
    CHECK(tbm::rmse(x, Tensor({2, 2})) ==
          doctest::Approx(std::sqrt(0.5)));

    CHECK_THROWS_AS(tbm::mse(a, Tensor({2, 2})), std::invalid_argument);
}

TEST_CASE("confusion matrix counting") {
    {
        const Membership t({0, 1, 0, 1}, 2);
        const tbm::ConfusionMatrix d = tbm::confusion(t, t);
        CHECK(d(0, 0) == doctest::Approx(0.5));
        CHECK(d(1, 1) == doctest::Approx(0.5));
        CHECK(d(0, 1) == 0.0);
        CHECK(d(1, 0) == 0.0);
    }
    {
        const Membership t({0, 1, 0, 1}, 2);
        const Membership e({1, 0, 1, 0}, 2);
        const tbm::ConfusionMatrix d = tbm::confusion(t, e);
        CHECK(d(0, 0) == 0.0);
        CHECK(d(0, 1) == doctest::Approx(0.5));
        CHECK(d(1, 0) == doctest::Approx(0.5));
        CHECK(d(1, 1) == 0.0);
    }
    {
        const Membership t({0, 0, 1, 1}, 2);
        const Membership e({0, 1, 1, 1}, 2);
        const tbm::ConfusionMatrix d = tbm::confusion(t, e);
        CHECK(d(0, 0) == doctest::Approx(0.25));
        CHECK(d(0, 1) == doctest::Approx(0.25));
        CHECK(d(1, 0) == 0.0);
        CHECK(d(1, 1) == doctest::Approx(0.5));
    }
}

TEST_CASE("confusion marginals are the cluster proportions") {
    tbm::Rng rng(5);
    for (int rep = 0; rep < 30; ++rep) {
        const Membership t = random_membership(12, 3, rng);
        const Membership e = random_membership(12, 4, rng);
        const tbm::ConfusionMatrix d = tbm::confusion(t, e);
        const std::vector<double> rows = d.row_sums();
        const std::vector<double> cols = d.col_sums();
        const std::vector<double> pt = tbm::cluster_proportions(t);
        const std::vector<double> pe = tbm::cluster_proportions(e);
        double total = 0.0;
        for (std::size_t r = 0; r < rows.size(); ++r) {
            CHECK(rows[r] == doctest::Approx(pt[r]).epsilon(1e-12));
            total += rows[r];
        }
        for (std::size_t c = 0; c < cols.size(); ++c) {
            CHECK(cols[c] == doctest::Approx(pe[c]).epsilon(1e-12));
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("mcr on worked confusion matrices") {
    // Permuted truth: MCR is exactly zero.
    const Membership t({0, 0, 1, 1, 2, 2}, 3);
    const Membership e = relabel(t, {2, 0, 1});
    CHECK(tbm::mcr(t, e) == 0.0);

    // D = [[0.5, 0.1], [0.0, 0.4]]: column second-largests are 0 and 0.1.
    {
        std::vector<int> tl, el;
        for (int i = 0; i < 5; ++i) { tl.push_back(0); el.push_back(0); }
        for (int i = 0; i < 1; ++i) { tl.push_back(0); el.push_back(1); }
        for (int i = 0; i < 4; ++i) { tl.push_back(1); el.push_back(1); }
        const Membership tt(tl, 2), ee(el, 2);
        CHECK(tbm::mcr(tt, ee) == doctest::Approx(0.1));
    }

    // Perfectly split columns: D = [[.25, .25], [.25, .25]] -> 0.25.
    {
        const Membership tt({0, 0, 1, 1}, 2);
        const Membership ee({0, 1, 0, 1}, 2);
        CHECK(tbm::mcr(tt, ee) == doctest::Approx(0.25));
    }

    CHECK_THROWS_AS(tbm::mcr(Membership({0, 1}, 2), Membership({0, 1, 2}, 3)),
                    std::invalid_argument);
}

TEST_CASE("mcr is invariant under relabeling of either side") {
    tbm::Rng rng(17);
    for (int rep = 0; rep < 40; ++rep) {
        const Membership t = random_membership(10, 3, rng);
        const Membership e = random_membership(10, 3, rng);
        const double base = tbm::mcr(t, e);
        std::vector<int> perm{0, 1, 2};
        rng.shuffle(perm);
        CHECK(tbm::mcr(relabel(t, perm), e) == doctest::Approx(base));
        rng.shuffle(perm);
        CHECK(tbm::mcr(t, relabel(e, perm)) == doctest::Approx(base));
    }
}

TEST_CASE("cer of identical partitions is zero and cer is symmetric") {
    tbm::Rng rng(29);
    for (int rep = 0; rep < 10; ++rep) {
        BlockModel a{Tensor({2, 3}, {1, 2, 3, 4, 5, 6}),
                     {random_membership(5, 2, rng), random_membership(4, 3, rng)}};
        BlockModel b{Tensor({2, 3}, {6, 5, 4, 3, 2, 1}),
                     {random_membership(5, 2, rng), random_membership(4, 3, rng)}};
        CHECK(tbm::cer(a, a) == 0.0);
        CHECK(tbm::cer(a, b) == doctest::Approx(tbm::cer(b, a)));
    }
}

TEST_CASE("cer: one trivial block vs all singletons on 4 entries") {
    BlockModel trivial{Tensor({1, 1}, {0.0}),
                       {Membership({0, 0}, 1), Membership({0, 0}, 1)}};
    BlockModel singletons{Tensor({2, 2}, {1, 2, 3, 4}),
                          {Membership({0, 1}, 2), Membership({0, 1}, 2)}};
    CHECK(tbm::cer(trivial, singletons) == doctest::Approx(1.0));
    CHECK(oracle::pair_loop_cer(trivial, singletons) == doctest::Approx(1.0));
}

TEST_CASE("cer closed form equals the pair-loop oracle") {
    tbm::Rng rng(41);
    for (int rep = 0; rep < 25; ++rep) {
        const std::vector<std::size_t> dims{4, 5, 5};  // 100 entries
        BlockModel a{Tensor({2, 2, 3}, std::vector<double>(12, 0.0)),
                     {random_membership(4, 2, rng), random_membership(5, 2, rng),
                      random_membership(5, 3, rng)}};
        BlockModel b{Tensor({2, 3, 2}, std::vector<double>(12, 0.0)),
                     {random_membership(4, 2, rng), random_membership(5, 3, rng),
                      random_membership(5, 2, rng)}};
        CHECK(tbm::cer(a, b) ==
              doctest::Approx(oracle::pair_loop_cer(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("sparsity metrics on aligned cores") {
    {
        Tensor truth({2, 2}, {0, 1, 0, 2});
        CHECK(tbm::sparsity_metrics(truth, truth).sparsity_error_rate == 0.0);
        CHECK(tbm::sparsity_metrics(truth, truth).correct_zero_rate == 1.0);
    }
    {
        Tensor truth({2, 2}, {0, 1, 0, 2});
        Tensor est({2, 2}, {0.5, 1, 0.5, 2});  // all nonzero
        const tbm::SparsityMetrics m = tbm::sparsity_metrics(truth, est);
        CHECK(m.estimated_sparsity_rate == 0.0);
        CHECK(m.correct_zero_rate == 0.0);
        CHECK(m.sparsity_error_rate == doctest::Approx(0.5));
    }
    {
        // No true zeros: correct-zero rate is 1 by convention.
        Tensor truth({2}, {1, 2});
        Tensor est({2}, {0, 2});
        const tbm::SparsityMetrics m = tbm::sparsity_metrics(truth, est);
        CHECK(m.correct_zero_rate == 1.0);
        CHECK(m.estimated_sparsity_rate == doctest::Approx(0.5));
        CHECK(m.sparsity_error_rate == doctest::Approx(0.5));
    }
}

TEST_CASE("model-level sparsity metrics align estimated labels first") {
    // Truth on 4x4 with a zero block; estimate is the same model with both
    // modes' labels swapped. Without alignment every zero lands in the
    // wrong cell.
    const Tensor core({2, 2}, {0, 5, 5, 5});
    BlockModel truth{core,
                     {Membership({0, 0, 1, 1}, 2), Membership({0, 1, 1, 0}, 2)}};
    BlockModel est{Tensor({2, 2}, {5, 5, 5, 0}),
                   {Membership({1, 1, 0, 0}, 2), Membership({1, 0, 0, 1}, 2)}};
    const tbm::SparsityMetrics m = tbm::sparsity_metrics(truth, est);
    CHECK(m.sparsity_error_rate == 0.0);
    CHECK(m.correct_zero_rate == 1.0);
    CHECK(m.estimated_sparsity_rate == doctest::Approx(0.25));

    const Tensor aligned = tbm::align_core_to_truth(truth, est);
    CHECK(aligned == core);
}

TEST_CASE("variance explained") {
    const Tensor y({1, 2}, {0, 2});
    CHECK(tbm::variance_explained(y, y).value() == doctest::Approx(1.0));
    CHECK(tbm::variance_explained(y, Tensor::constant({1, 2}, 1.0)).value() ==
          doctest::Approx(0.0));
    CHECK(tbm::variance_explained(y, Tensor({1, 2}, {0.5, 1.5})).value() ==
          doctest::Approx(0.75));
    CHECK_FALSE(
        tbm::variance_explained(Tensor::constant({2, 2}, 3.0), Tensor({2, 2}))
            .has_value());
}

TEST_SUITE_END();
