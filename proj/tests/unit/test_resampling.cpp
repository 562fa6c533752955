#include "permboot/empirical.hpp"
#include "permboot/errors.hpp"
#include "permboot/resampling.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <map>
#include <set>

using namespace permboot;

namespace {

ResampleDraw identity(std::size_t n) {
    ResampleDraw d;
    d.assignment.resize(n);
    std::iota(d.assignment.begin(), d.assignment.end(), std::size_t{0});
    return d;
}

}  // namespace

TEST_CASE("permutation draws") {
    CHECK(draw_permutation(1, {5, 0}).assignment == std::vector<std::size_t>{0});
    for (std::uint64_t s = 0; s < 50; ++s) {
        auto d = draw_permutation(37, {s, 3});
        CHECK(d.kind == ResampleKind::Permutation);
        std::sort(d.assignment.begin(), d.assignment.end());
        CHECK(d.assignment == identity(37).assignment);
    }
    CHECK(draw_permutation(20, {9, 1}) == draw_permutation(20, {9, 1}));
    CHECK_FALSE(draw_permutation(20, {9, 1}) == draw_permutation(20, {9, 2}));
}

TEST_CASE("bootstrap draws") {
    CHECK(draw_bootstrap(1, {4, 0}).assignment == std::vector<std::size_t>{0});
    CHECK(draw_bootstrap(15, {2, 2}) == draw_bootstrap(15, {2, 2}));
    const std::size_t n = 10, reps = 20000;
    std::vector<double> mult(n, 0.0);
    for (std::size_t r = 0; r < reps; ++r) {
        for (auto i : draw_bootstrap(n, derive_seed({1, 0}, 1, r, 0)).assignment) mult[i] += 1.0;
    }
    for (double m : mult) CHECK(m / reps == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("exhaustive enumeration") {
    const auto all = all_permutations(4);
    CHECK(all.size() == 24);
    std::set<std::vector<std::size_t>> distinct;
    for (const auto& d : all) distinct.insert(d.assignment);
    CHECK(distinct.size() == 24);
    CHECK_THROWS_AS(all_permutations(kMaxExhaustive + 1), ContractError);
}

TEST_CASE("shuffle is uniform over the 24 orderings") {
    std::map<std::vector<std::size_t>, int> freq;
    const int reps = 24000;
    for (int r = 0; r < reps; ++r) freq[draw_permutation(4, derive_seed({3, 0}, 2, r, 0)).assignment]++;
    REQUIRE(freq.size() == 24);
    double chi2 = 0.0;
    for (const auto& [k, c] : freq) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    // 23 degrees of freedom; the 0.999 quantile is 49.7.
    CHECK(chi2 < 49.7);
}

TEST_CASE("bounded integers are uniform") {
    Rng rng({77, 0});
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) counts[rng.below(7)]++;
    for (int c : counts) CHECK(std::abs(c - 10000) < 500);
    for (int i = 0; i < 1000; ++i) {
        const double u = rng.uniform_open();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("derived seeds differ across coordinates") {
    std::set<std::pair<std::uint64_t, std::uint64_t>> seen;
    for (std::uint64_t e = 0; e < 4; ++e) {
        for (std::uint64_t r = 0; r < 10; ++r) {
            for (std::uint64_t b = 0; b < 10; ++b) {
                const auto s = derive_seed({42, 0}, e, r, b);
                seen.insert({s.master, s.stream});
            }
        }
    }
    CHECK(seen.size() == 400);
}

TEST_CASE("resampled group functions") {
    const PooledData p = pool(MultiSampleData::plain({{1.0, 2.0}, {3.0, 5.0, 8.0}}));
    const auto id = resampled_group_ecdfs(p, identity(5));
    CHECK(id[0] == ecdf(std::vector<double>{1.0, 2.0}));
    CHECK(id[1] == ecdf(std::vector<double>{3.0, 5.0, 8.0}));

    const PooledData two = pool(MultiSampleData::plain({{1.0}, {3.0}}));
    ResampleDraw swap;
    swap.assignment = {1, 0};
    const auto sw = resampled_group_ecdfs(two, swap);
    CHECK(sw[0] == ecdf(std::vector<double>{3.0}));
    CHECK(sw[1] == ecdf(std::vector<double>{1.0}));

    ResampleDraw ones;
    ones.kind = ResampleKind::PooledBootstrap;
    ones.assignment.assign(5, 0);
    for (const auto& f : resampled_group_ecdfs(p, ones)) {
        REQUIRE(f.size() == 1);
        CHECK(f.breakpoints()[0] == 1.0);
        CHECK(f.jump(0) == 1.0);
    }
}

TEST_CASE("permutations conserve the pool") {
    const PooledData p = pool(MultiSampleData::plain({{0.5, 1.5, 2.5, 4.0}, {1.0, 3.0, 3.5, 4.5}}));
    const StepFn h = pooled_ecdf(p);
    const std::vector<double> grid{0.75, 1.25, 2.0, 3.25, 4.25};
    for (std::uint64_t s = 0; s < 30; ++s) {
        const auto d = draw_permutation(p, {s, 0});
        const auto fns = resampled_group_ecdfs(p, d);
        const Eigen::MatrixXd c = centered_process(fns, h, p.total(), grid);
        for (Eigen::Index k = 0; k < c.cols(); ++k) CHECK(c(0, k) + c(1, k) == 0.0);
    }
    const auto fns = resampled_group_ecdfs(p, identity(8));
    const std::vector<double> mid{2.0};
    const Eigen::MatrixXd c = centered_process(fns, h, 8, mid);
    // Group 1 has {0.5, 1.5} <= 2 (1/2), pool has 3/8; sqrt(8) (1/2 - 3/8).
    CHECK(c(0, 0) == Catch::Approx(std::sqrt(8.0) * 0.125).epsilon(1e-15));
}

TEST_CASE("censored pairs move together") {
    const PooledData p = pool(MultiSampleData(
        SampleKind::Censored, {{{1.0, true}, {2.0, false}}, {{3.0, true}, {4.0, false}}}));
    ResampleDraw d;
    d.assignment = {3, 2, 1, 0};
    const auto g = resampled_groups(p, d);
    CHECK(g[0][0].value == 4.0);
    CHECK_FALSE(g[0][0].event);
    CHECK(g[0][1].event);
    const auto surv = resampled_group_survival(p, d);
    CHECK(surv[0].at_risk(3.5) == 0.5);
    CHECK(surv[0].uncensored(3.0) == 0.5);
}
