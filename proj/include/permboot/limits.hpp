#pragma once

#include "permboot/empirical.hpp"
#include "permboot/functionals.hpp"
#include "permboot/laws.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace permboot {

/// Survival quantities of the pooled population on [0, tau].
class SurvivalPopulation {
public:
    virtual ~SurvivalPopulation() = default;

    [[nodiscard]] virtual double tau() const = 0;
    // H-bar(t) = P(Z >= t).
    [[nodiscard]] virtual double at_risk(double t) const = 0;
    // H^uc(t) = P(Z <= t, event) and its left limit.
    [[nodiscard]] virtual double uncensored(double t) const = 0;
    [[nodiscard]] virtual double uncensored_left(double t) const = 0;
    [[nodiscard]] virtual double cumulative_hazard(double t) const = 0;
    [[nodiscard]] virtual double survival(double t) const = 0;
    // C(t) = int_[0,t] (1 - dLambda) / H-bar dLambda.
    [[nodiscard]] virtual double c_function(double t) const = 0;
    // int_[0,t] dLambda / ((1 - dLambda) H-bar).
    [[nodiscard]] virtual double km_integral(double t) const = 0;
};

// Plug-in population built from pooled empirical processes. Integrals are
// exact jump sums.
class EmpiricalSurvivalPopulation final : public SurvivalPopulation {
public:
    explicit EmpiricalSurvivalPopulation(HazardBundle pooled);

    [[nodiscard]] double tau() const override { return bundle_.tau; }
    [[nodiscard]] double at_risk(double t) const override;
    [[nodiscard]] double uncensored(double t) const override;
    [[nodiscard]] double uncensored_left(double t) const override;
    [[nodiscard]] double cumulative_hazard(double t) const override;
    [[nodiscard]] double survival(double t) const override;
    [[nodiscard]] double c_function(double t) const override;
    [[nodiscard]] double km_integral(double t) const override;

    [[nodiscard]] const HazardBundle& bundle() const noexcept { return bundle_; }
    [[nodiscard]] const StepFn& hazard() const noexcept { return lambda_; }
    [[nodiscard]] const StepFn& km() const noexcept { return km_; }
    // Curves of c_function and km_integral; km_integral is absent when a
    // hazard jump equals 1.
    [[nodiscard]] const StepFn& c_curve() const noexcept { return c_; }
    [[nodiscard]] const std::optional<StepFn>& km_integral_curve() const noexcept {
        return km_int_;
    }

private:
    void check(double t) const;

    HazardBundle bundle_;
    StepFn lambda_;
    StepFn km_;
    StepFn c_;
    std::optional<StepFn> km_int_;
    double km_singular_at_ = 0.0;
};

// Population of independent groups with continuous failure laws and optional
// continuous censoring laws, mixed with weights lambda. Integrals use adaptive
// Gauss-Kronrod quadrature.
class AnalyticSurvivalPopulation final : public SurvivalPopulation {
public:
    AnalyticSurvivalPopulation(std::vector<Law> failure, std::vector<std::optional<Law>> censoring,
                               LambdaVector lambdas, double tau);

    [[nodiscard]] double tau() const override { return tau_; }
    [[nodiscard]] double at_risk(double t) const override;
    [[nodiscard]] double uncensored(double t) const override;
    [[nodiscard]] double uncensored_left(double t) const override { return uncensored(t); }
    [[nodiscard]] double cumulative_hazard(double t) const override;
    [[nodiscard]] double survival(double t) const override;
    [[nodiscard]] double c_function(double t) const override;
    [[nodiscard]] double km_integral(double t) const override { return c_function(t); }

    // d H^uc / dt.
    [[nodiscard]] double uncensored_density(double t) const;

private:
    [[nodiscard]] double integrate(const std::function<double(double)>& f, double upto) const;
    void check(double t) const;

    std::vector<Law> failure_;
    std::vector<std::optional<Law>> censoring_;
    LambdaVector lambdas_;
    double tau_;
};

/// Pooled mixture H with group proportions and an optional survival part.
struct PooledPopulation {
    std::function<double(double)> h;
    LambdaVector lambdas;
    std::shared_ptr<const SurvivalPopulation> survival;

    [[nodiscard]] const SurvivalPopulation& surv() const;
};

[[nodiscard]] PooledPopulation empirical_population(const StepFn& pooled_ecdf,
                                                    LambdaVector lambdas);
[[nodiscard]] PooledPopulation analytic_population(const std::vector<Law>& laws,
                                                   LambdaVector lambdas);
[[nodiscard]] PooledPopulation empirical_survival_population(HazardBundle pooled,
                                                             LambdaVector lambdas);
[[nodiscard]] PooledPopulation analytic_survival_population(
    const std::vector<Law>& failure, const std::vector<std::optional<Law>>& censoring,
    LambdaVector lambdas, double tau);

enum class Variant { Perm, Boot };

enum class KernelKind {
    PermIndicator,
    BootIndicator,
    PermSurvivalNA,
    BootSurvivalNA,
    PermKM,
    BootKM,
    SurvivalCross,
};

[[nodiscard]] double bb_cov(const PooledPopulation& pop, double s, double t);
[[nodiscard]] double perm_coeff(const LambdaVector& lambdas, std::size_t i, std::size_t j);
[[nodiscard]] double boot_coeff(const LambdaVector& lambdas, std::size_t i, std::size_t j);
[[nodiscard]] double coeff(Variant v, const LambdaVector& lambdas, std::size_t i, std::size_t j);

[[nodiscard]] double indicator_kernel(Variant v, const PooledPopulation& pop, std::size_t i,
                                      std::size_t j, double s, double t);
[[nodiscard]] double c_function(const PooledPopulation& pop, double t);
[[nodiscard]] double na_kernel(Variant v, const PooledPopulation& pop, std::size_t i,
                               std::size_t j, double s, double t);
[[nodiscard]] double km_kernel(Variant v, const PooledPopulation& pop, std::size_t i,
                               std::size_t j, double s, double t);
// Rows and columns ordered (at-risk, uncensored).
[[nodiscard]] Eigen::Matrix2d survival_cross_kernel(Variant v, const PooledPopulation& pop,
                                                    std::size_t i, std::size_t j, double s,
                                                    double t);

// Scalar kernels by kind; SurvivalCross is not scalar.
[[nodiscard]] double kernel(KernelKind kind, const PooledPopulation& pop, std::size_t i,
                            std::size_t j, double s, double t);

// Covariance matrix over (group, grid point); index i * |grid| + k. For
// SurvivalCross the index is (i * |grid| + k) * 2 + component.
[[nodiscard]] Eigen::MatrixXd assemble_kernel(KernelKind kind, Variant cross_variant,
                                              const PooledPopulation& pop,
                                              std::span<const double> grid);

[[nodiscard]] double min_eigenvalue(const Eigen::MatrixXd& m);

[[nodiscard]] const char* to_string(KernelKind kind);
[[nodiscard]] KernelKind kernel_kind_from_string(const std::string& name);

}  // namespace permboot
