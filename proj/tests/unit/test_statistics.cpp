#include "permboot/errors.hpp"
#include "permboot/laws.hpp"
#include "permboot/statistics.hpp"

#include <catch_amalgamated.hpp>

using namespace permboot;

namespace {

PooledData survival_data(std::uint64_t seed, std::size_t n1, std::size_t n2, bool ties) {
    Rng rng({seed, 0});
    std::vector<std::vector<Observation>> g(2);
    const std::size_t sizes[] = {n1, n2};
    for (std::size_t j = 0; j < 2; ++j) {
        for (std::size_t i = 0; i < sizes[j]; ++i) {
            double t = sample(Exponential{1.0 + 0.5 * j}, rng);
            double c = sample(Exponential{0.5}, rng);
            if (ties) {
                t = std::ceil(t * 4.0) / 4.0;
                c = std::ceil(c * 4.0) / 4.0;
            }
            g[j].push_back({std::min(t, c), t <= c});
        }
    }
    return pool(MultiSampleData(SampleKind::Censored, std::move(g)));
}

PooledData plain_data(std::uint64_t seed, bool ties) {
    Rng rng({seed, 1});
    std::vector<std::vector<double>> g(3);
    for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t i = 0; i < 10 + 5 * j; ++i) {
            double x = sample(Exponential{1.0}, rng);
            g[j].push_back(ties ? std::round(x * 3.0) : x);
        }
    }
    return pool(MultiSampleData::plain(g));
}

void compare(Scenario sc, const PooledData& p, std::span<const double> grid, double tau) {
    auto ev = make_evaluator(sc, p, grid, tau);
    std::vector<double> fast(ev->dim());
    for (std::uint64_t s = 0; s < 25; ++s) {
        const ResampleDraw d = s % 2 ? draw_bootstrap(p, {s, 9}) : draw_permutation(p, {s, 9});
        ev->evaluate(d.assignment, fast);
        const auto slow = reference_statistic(sc, p, d, grid, tau);
        REQUIRE(slow.size() == fast.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast[i] == Catch::Approx(slow[i]).margin(1e-12));
        }
    }
}

}  // namespace

TEST_CASE("scenario names") {
    for (auto s : {Scenario::PlainIndicator, Scenario::SurvivalNA, Scenario::SurvivalKM,
                   Scenario::WilcoxonStat, Scenario::RMST}) {
        CHECK(scenario_from_string(to_string(s)) == s);
    }
    CHECK_THROWS_AS(scenario_from_string("nope"), ContractError);
}

TEST_CASE("indicator evaluator agrees with the step-function route") {
    for (bool ties : {false, true}) {
        const PooledData p = plain_data(ties ? 3 : 4, ties);
        const std::vector<double> grid{0.1, 0.5, 1.0, 2.0, 3.0};
        compare(Scenario::PlainIndicator, p, grid, 0.0);
    }
}

TEST_CASE("Wilcoxon evaluator agrees with the step-function route") {
    for (bool ties : {false, true}) compare(Scenario::WilcoxonStat, plain_data(5, ties), {}, 0.0);
}

TEST_CASE("survival evaluators agree with the step-function route") {
    for (bool ties : {false, true}) {
        const PooledData p = survival_data(ties ? 11 : 12, 30, 40, ties);
        const std::vector<double> grid{0.1, 0.25, 0.5, 0.75};
        for (auto sc : {Scenario::SurvivalNA, Scenario::SurvivalKM, Scenario::RMST}) {
            compare(sc, p, grid, 0.75);
        }
    }
}

TEST_CASE("identity permutation gives zero for a single-valued pool") {
    const PooledData p = pool(MultiSampleData::plain({{2.0, 2.0}, {2.0, 2.0, 2.0}}));
    const std::vector<double> grid{1.0, 2.0, 3.0};
    auto ev = make_evaluator(Scenario::PlainIndicator, p, grid, 0.0);
    std::vector<double> out(ev->dim());
    for (std::uint64_t s = 0; s < 10; ++s) {
        ev->evaluate(draw_permutation(p, {s, 0}).assignment, out);
        for (double v : out) CHECK(v == 0.0);
    }
}
