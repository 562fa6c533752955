#include "permboot/empirical.hpp"
#include "permboot/errors.hpp"
#include "permboot/limits.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>

using namespace permboot;

namespace {

const LambdaVector kHalf({0.5, 0.5});

PooledPopulation uniform_pop() { return analytic_population({Uniform{0, 1}, Uniform{0, 1}}, kHalf); }

PooledPopulation exp_survival(double tau) {
    return analytic_survival_population({Exponential{1.0}, Exponential{1.0}}, {std::nullopt, std::nullopt},
                                        kHalf, tau);
}

}  // namespace

TEST_CASE("Brownian bridge covariance") {
    const auto pop = uniform_pop();
    CHECK(bb_cov(pop, 0.5, 0.5) == 0.25);
    CHECK(bb_cov(pop, -1.0, 0.5) == 0.0);
    const auto emp = empirical_population(ecdf(std::vector<double>{1.0, 2.0, 3.0}), kHalf);
    CHECK(bb_cov(emp, 1.0, 2.0) == Catch::Approx(1.0 / 9.0).epsilon(1e-15));
}

TEST_CASE("coefficients") {
    CHECK(perm_coeff(kHalf, 0, 0) == 1.0);
    CHECK(perm_coeff(LambdaVector({0.3, 0.7}), 0, 1) == -1.0);
    CHECK(perm_coeff(LambdaVector({1.0 - 1e-9, 1e-9}), 0, 0) == Catch::Approx(0.0).margin(1e-8));
    CHECK(boot_coeff(kHalf, 1, 1) == 2.0);
    CHECK(boot_coeff(kHalf, 0, 1) == 0.0);
    CHECK(boot_coeff(LambdaVector({0.25, 0.75}), 1, 1) == 4.0 / 3.0);
    const LambdaVector l({0.25, 0.25, 0.5});
    for (std::size_t i = 0; i < 3; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < 3; ++j) s += l.values()[j] * perm_coeff(l, i, j);
        CHECK(s == 0.0);
    }
}

TEST_CASE("indicator kernels") {
    const auto pop = uniform_pop();
    CHECK(indicator_kernel(Variant::Perm, pop, 0, 0, 0.5, 0.5) == 0.25);
    CHECK(indicator_kernel(Variant::Perm, pop, 0, 1, 0.5, 0.5) == -0.25);
    CHECK(indicator_kernel(Variant::Boot, pop, 0, 1, 0.2, 0.7) == 0.0);
    CHECK(indicator_kernel(Variant::Boot, pop, 1, 1, 0.2, 0.7) == Catch::Approx(2.0 * (0.2 - 0.14)));
}

TEST_CASE("C function") {
    const auto pop = exp_survival(3.0);
    for (double t : {0.0, 0.5, 1.0, 2.5}) {
        CHECK(c_function(pop, t) == Catch::Approx(std::expm1(t)).epsilon(1e-12).margin(1e-14));
    }
    // One jump h at u with H-bar(u) = r.
    std::vector<Observation> s{{1.0, true}, {2.0, false}, {3.0, false}, {4.0, false}};
    const HazardBundle b{at_risk_process(s), uncensored_subdist(s), 4.0};
    const auto emp = empirical_survival_population(b, kHalf);
    const double h = 0.25, r = 1.0;
    CHECK(c_function(emp, 0.5) == 0.0);
    CHECK(c_function(emp, 2.0) == Catch::Approx((1.0 - h) * h / r).epsilon(1e-15));
}

TEST_CASE("survival kernels") {
    const auto pop = exp_survival(3.0);
    const double e = std::exp(1.0);
    CHECK(na_kernel(Variant::Perm, pop, 0, 0, 1.0, 1.0) == Catch::Approx(e - 1.0).epsilon(1e-12));
    CHECK(na_kernel(Variant::Perm, pop, 0, 1, 1.0, 2.0) == Catch::Approx(-(e - 1.0)).epsilon(1e-12));
    CHECK(na_kernel(Variant::Boot, pop, 0, 1, 1.0, 2.0) == 0.0);
    CHECK(km_kernel(Variant::Perm, pop, 0, 0, 0.0, 0.0) == 0.0);
    for (double s : {0.5, 1.0}) {
        for (double t : {1.0, 2.0}) {
            const double expected = std::exp(-s) * std::exp(-t) * std::expm1(std::min(s, t));
            CHECK(km_kernel(Variant::Perm, pop, 0, 0, s, t) == Catch::Approx(expected).epsilon(1e-11));
        }
    }
    CHECK(km_kernel(Variant::Boot, pop, 0, 1, 1.0, 2.0) == 0.0);
}

TEST_CASE("cross kernel block") {
    const auto pop = exp_survival(3.0);
    const auto& sp = pop.surv();
    const Eigen::Matrix2d same = survival_cross_kernel(Variant::Perm, pop, 0, 0, 1.0, 1.0);
    const double u = sp.uncensored(1.0);
    CHECK(same(1, 1) == Catch::Approx(u * (1.0 - u)).epsilon(1e-14));
    const Eigen::Matrix2d later = survival_cross_kernel(Variant::Perm, pop, 0, 0, 0.5, 1.5);
    CHECK(later(1, 0) == Catch::Approx(-sp.uncensored(0.5) * sp.at_risk(1.5)).epsilon(1e-14));
    const Eigen::Matrix2d other = survival_cross_kernel(Variant::Perm, pop, 0, 1, 0.5, 1.5);
    CHECK((other + later).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::Matrix2d swapped = survival_cross_kernel(Variant::Perm, pop, 0, 0, 1.5, 0.5);
    CHECK((swapped - later.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("symmetry and positive semidefiniteness") {
    const std::vector<double> grid{0.2, 0.5, 1.0, 1.7, 2.5};
    const auto pop = exp_survival(3.0);
    const auto ind = analytic_population({Exponential{1.0}, Exponential{1.5}}, LambdaVector({0.4, 0.6}));
    for (auto kind : {KernelKind::PermIndicator, KernelKind::BootIndicator}) {
        const Eigen::MatrixXd k = assemble_kernel(kind, Variant::Perm, ind, grid);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(min_eigenvalue(k) >= -1e-10);
    }
    for (auto kind : {KernelKind::PermSurvivalNA, KernelKind::BootSurvivalNA, KernelKind::PermKM,
                      KernelKind::BootKM}) {
        const Eigen::MatrixXd k = assemble_kernel(kind, Variant::Perm, pop, grid);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK(min_eigenvalue(k) >= -1e-10);
        for (Eigen::Index i = 0; i < k.rows(); ++i) CHECK(k(i, i) >= 0.0);
    }
    for (auto v : {Variant::Perm, Variant::Boot}) {
        const Eigen::MatrixXd k = assemble_kernel(KernelKind::SurvivalCross, v, pop, grid);
        CHECK(k.rows() == 20);
        CHECK(min_eigenvalue(k) >= -1e-10);
    }
}

TEST_CASE("plug-in survival population uses exact jump sums") {
    std::vector<Observation> s{{0.5, true}, {1.0, false}, {1.5, true}, {2.0, true}, {2.5, false}};
    const HazardBundle b{at_risk_process(s), uncensored_subdist(s), 2.5};
    const EmpiricalSurvivalPopulation p(b);
    // Jumps 1/5 at 0.5, 1/3 at 1.5, 1/2 at 2.0 with risk fractions 1, 3/5, 2/5.
    const double c = (0.8 * 0.2) / 1.0 + (2.0 / 3.0) * (1.0 / 3.0) / 0.6 + 0.5 * 0.5 / 0.4;
    CHECK(p.c_function(2.5) == Catch::Approx(c).epsilon(1e-15));
    const double k = 0.2 / (0.8 * 1.0) + (1.0 / 3.0) / ((2.0 / 3.0) * 0.6) + 0.5 / (0.5 * 0.4);
    CHECK(p.km_integral(2.5) == Catch::Approx(k).epsilon(1e-15));
    CHECK(p.survival(2.0) == Catch::Approx(0.8 * (2.0 / 3.0) * 0.5).epsilon(1e-15));
}

TEST_CASE("kernel names round trip") {
    for (auto kind : {KernelKind::PermIndicator, KernelKind::BootKM, KernelKind::SurvivalCross}) {
        CHECK(kernel_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(kernel_kind_from_string("bogus"), ContractError);
}
