#include "permboot/empirical.hpp"
#include "permboot/errors.hpp"
#include "permboot/stepfn.hpp"

#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace permboot;

namespace {

StepFn ecdf_of(std::vector<double> xs) { return ecdf(xs); }

StepFn random_step(std::mt19937_64& gen, int jumps, Continuity c = Continuity::Right) {
    std::uniform_real_distribution<double> pos(0.0, 10.0), size(-1.0, 1.0);
    std::vector<double> bps, js;
    for (int i = 0; i < jumps; ++i) bps.push_back(std::round(pos(gen) * 4.0) / 4.0 + 0.25);
    std::sort(bps.begin(), bps.end());
    bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
    for (std::size_t i = 0; i < bps.size(); ++i) js.push_back(size(gen));
    return StepFn(0.0, 11.0, size(gen), bps, js, c);
}

}  // namespace

TEST_CASE("evaluation and left limits") {
    const StepFn f = ecdf_of({1, 2, 3});
    CHECK(f(2.0) == 2.0 / 3.0);
    CHECK(f.left_limit(2.0) == 1.0 / 3.0);
    CHECK(f(0.5) == 0.0);
    CHECK(f(1e300) == 1.0);
    CHECK(f.jump_at(3.0) == f(3.0) - f.left_limit(3.0));

    const StepFn g(0.0, kInf, 1.0, {1.0, 2.0}, {-0.5, -0.5}, Continuity::Left);
    CHECK(g(1.0) == 1.0);
    CHECK(g(1.5) == 0.5);
    CHECK(g.left_limit(1.0) == 1.0);
}

TEST_CASE("construction rejects bad input") {
    CHECK_THROWS_AS(StepFn(0.0, 1.0, 0.0, {0.5, 0.5}, {1.0, 1.0}), ContractError);
    CHECK_THROWS_AS(StepFn(0.0, 1.0, 0.0, {2.0}, {1.0}), ContractError);
    CHECK_THROWS_AS(StepFn(0.0, 1.0, 0.0, {0.5}, {1.0, 2.0}), ContractError);
    CHECK_THROWS_AS(StepFn(2.0, 1.0, 0.0, {}, {}), ContractError);
}

TEST_CASE("total variation") {
    CHECK(total_variation(ecdf_of({1, 2, 3})) == 1.0);
    CHECK(total_variation(StepFn(0.0, 5.0, 0.0, {1.0, 2.0}, {0.5, -0.25})) == 0.75);
    CHECK(total_variation(StepFn::constant(0.0, 1.0, 3.0)) == 0.0);
}

TEST_CASE("Lebesgue-Stieltjes integrals") {
    const StepFn one = StepFn::constant(-kInf, kInf, 1.0);
    CHECK(ls_integral(one, ecdf_of({1, 2, 3}), kInf) == 1.0);
    const StepFn f = ecdf_of({1, 2});
    CHECK(ls_integral(f, f, kInf) == 0.75);
    CHECK(ls_integral(f, StepFn::constant(-kInf, kInf, 4.0), kInf) == 0.0);

    // Origin mass only under the policy.
    const StepFn a(0.0, 5.0, 0.5, {1.0}, {0.5});
    const StepFn g = StepFn::constant(0.0, 5.0, 2.0);
    CHECK(ls_integral(g, a, 5.0) == 1.0);
    CHECK(ls_integral(g, a, 5.0, JumpAtZeroPolicy{true}) == 2.0);
}

TEST_CASE("integral is additive over ranges and bilinear") {
    std::mt19937_64 gen(7);
    for (int rep = 0; rep < 50; ++rep) {
        const StepFn g = random_step(gen, 6), f = random_step(gen, 8), h = random_step(gen, 5);
        const double mid = 4.0, end = 9.0;
        double extra = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            const double u = f.breakpoints()[k];
            if (u > mid && u <= end) extra += g(u) * f.jump(k);
        }
        CHECK(ls_integral(g, f, end) == Catch::Approx(ls_integral(g, f, mid) + extra).margin(1e-13));

        const StepFn fs[] = {f, h};
        const double cs[] = {2.0, -3.0};
        CHECK(ls_integral(g, affine_combine(cs, fs), end) ==
              Catch::Approx(2.0 * ls_integral(g, f, end) - 3.0 * ls_integral(g, h, end)).margin(1e-12));
    }
}

TEST_CASE("integration by parts holds exactly on dyadic data") {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> bps{1.0, 2.0, 3.5, 5.0}, ja, jb;
        std::uniform_int_distribution<int> q(-8, 8);
        for (int k = 0; k < 4; ++k) {
            ja.push_back(q(gen) / 8.0);
            jb.push_back(q(gen) / 16.0);
        }
        const StepFn a(0.0, 6.0, 0.25, bps, ja), b(0.0, 6.0, -0.5, {1.0, 3.0, 5.0}, {jb[0], jb[1], jb[2]});
        for (double t : {0.5, 1.0, 2.5, 3.5, 6.0}) {
            double back = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double u = a.breakpoints()[k];
                if (u <= t) back += b.left_limit(u) * a.jump(k);
            }
            CHECK(ls_integral(a, b, t) + back == a(t) * b(t) - a.base() * b.base());
        }
    }
}

TEST_CASE("affine combinations") {
    const StepFn f = ecdf_of({1, 2, 3});
    const StepFn same[] = {f, f};
    const double pm[] = {1.0, -1.0};
    CHECK(sup_norm(affine_combine(pm, same)) == 0.0);

    const StepFn two[] = {ecdf_of({1}), ecdf_of({3})};
    const double half[] = {0.5, 0.5};
    const StepFn mix = affine_combine(half, two);
    REQUIRE(mix.size() == 2);
    CHECK(mix(1.0) == 0.5);
    CHECK(mix(3.0) == 1.0);

    const StepFn single[] = {f};
    const double unit[] = {1.0};
    CHECK(affine_combine(unit, single) == f);

    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 100; ++rep) {
        const StepFn a = random_step(gen, 5), b = random_step(gen, 7);
        const StepFn fs[] = {a, b};
        const double cs[] = {0.75, -1.5};
        const StepFn c = affine_combine(cs, fs);
        for (double t = 0.0; t <= 11.0; t += 0.125) {
            CHECK(c(t) == 0.75 * a(t) + -1.5 * b(t));
        }
        CHECK(total_variation(c) <= 0.75 * total_variation(a) + 1.5 * total_variation(b) + 1e-12);
    }
    const StepFn mixed[] = {f, with_continuity(f, Continuity::Left)};
    CHECK_THROWS_AS(affine_combine(half, mixed), ContractError);
}

TEST_CASE("text round trip") {
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 20; ++rep) {
        const StepFn f = random_step(gen, 6, rep % 2 ? Continuity::Left : Continuity::Right);
        std::istringstream in(to_text(f));
        CHECK(read_stepfn(in) == f);
    }
    const StepFn g = ecdf_of({-1.0, 2.5});
    std::istringstream in(to_text(g));
    CHECK(read_stepfn(in) == g);
}

TEST_CASE("truncate and map") {
    const StepFn f = ecdf_of({1, 2, 3});
    const StepFn t = truncate(f, 2.0);
    CHECK(t.hi() == 2.0);
    CHECK(t.size() == 2);
    const StepFn sq = map_levels(f, [](double x) { return x * x; });
    CHECK(sq(2.0) == (2.0 / 3.0) * (2.0 / 3.0));
}
