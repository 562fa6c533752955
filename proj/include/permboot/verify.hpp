#pragma once

#include "permboot/empirical.hpp"
#include "permboot/laws.hpp"
#include "permboot/limits.hpp"
#include "permboot/resampling.hpp"
#include "permboot/statistics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace permboot {

enum class ResampleChoice { Perm, Boot, Both };
enum class TargetKind { PlugIn, Limit, FiniteN };

struct GridSpec {
    enum class Mode { Explicit, PooledDeciles, TauFractions };
    Mode mode = Mode::PooledDeciles;
    // Explicit points, or fractions of tau.
    std::vector<double> values;
};

struct TauSpec {
    enum class Mode { None, Fixed, PooledQuantile };
    Mode mode = Mode::None;
    double value = 0.0;
};

struct ToleranceSpec {
    double abs_tol = 0.02;
    double se_multiplier = 4.0;
    // Bootstrap cells pairing different groups must also lie within this many
    // standard errors of zero.
    double independence_se_multiplier = 4.0;
};

struct ExperimentConfig {
    std::string name = "experiment";
    Scenario scenario = Scenario::PlainIndicator;
    std::vector<Law> group_laws;
    std::vector<std::optional<Law>> censoring_laws;  // empty: no censoring
    std::vector<std::size_t> sizes;
    GridSpec grid;
    TauSpec tau;
    std::size_t draws = 1000;
    std::size_t outer_reps = 20;
    ResampleChoice resample = ResampleChoice::Perm;
    SeedSpec seed{42, 0};
    ToleranceSpec tolerance;
    TargetKind target = TargetKind::PlugIn;
    bool exhaustive = false;
    // Total sample sizes for the linearization ladder.
    std::vector<std::size_t> size_ladder;
};

// Throws ContractError on the first violated invariant.
void validate(const ExperimentConfig& config);

struct CellResult {
    std::size_t row = 0;
    std::size_t col = 0;
    double kernel = 0.0;
    double estimate = 0.0;
    double se = 0.0;
    double deviation = 0.0;
    bool cross_group = false;
    bool pass = false;
};

struct ComparisonResult {
    std::string variant;  // "perm", "boot" or "gaussian"
    std::vector<std::string> labels;
    std::vector<CellResult> cells;
    double max_abs_dev = 0.0;
    double pass_fraction = 0.0;
    bool passed = false;
};

struct VerifyReport {
    ExperimentConfig config;
    std::vector<double> mean_grid;
    double mean_tau = 0.0;
    std::size_t redrawn_datasets = 0;
    std::vector<ComparisonResult> comparisons;
    bool passed = false;
    double runtime_seconds = 0.0;  // not part of the serialized report
};

// Simulated dataset number `rep` (after `attempt` redraws).
[[nodiscard]] MultiSampleData simulate_dataset(const ExperimentConfig& config,
                                               const std::vector<std::size_t>& sizes,
                                               std::uint64_t rep, std::uint64_t attempt);

// Realized tau for a dataset (0 when the scenario has no tau).
[[nodiscard]] double realized_tau(const ExperimentConfig& config, const PooledData& data);
[[nodiscard]] std::vector<double> realized_grid(const ExperimentConfig& config,
                                                const PooledData& data, double tau);

// Plug-in (or limit / finite-N) covariance of the scenario statistic.
[[nodiscard]] Eigen::MatrixXd target_kernel(const ExperimentConfig& config, Variant variant,
                                            const PooledData& data, std::span<const double> grid,
                                            double tau);

[[nodiscard]] VerifyReport conditional_cov_experiment(const ExperimentConfig& config,
                                                      std::size_t threads = 0);

// Cellwise comparison of per-replicate estimates against per-replicate targets.
// Cells pairing indices in different blocks of `per_group` are cross-group
// (0: none).
[[nodiscard]] ComparisonResult compare_cells(const std::string& variant,
                                             const std::vector<Eigen::MatrixXd>& estimates,
                                             const std::vector<Eigen::MatrixXd>& kernels,
                                             const ToleranceSpec& tol, std::size_t per_group);

struct LadderStep {
    std::size_t total_size = 0;
    std::size_t draws = 0;
    double median = 0.0;
    double q10 = 0.0;
    double q90 = 0.0;
    double max = 0.0;
};

struct LinearizationReport {
    ExperimentConfig config;
    std::vector<LadderStep> steps;
};

// Sup-norm over the grid of
//   sqrt(N)(phi(resampled) - phi(pooled)) - phi'_pooled(sqrt(N)(resampled - pooled))
// for each draw, summarized per total size on the ladder.
[[nodiscard]] LinearizationReport linearization_residual_experiment(const ExperimentConfig& config,
                                                                    std::size_t threads = 0);
// Residual for one dataset and one draw.
[[nodiscard]] double linearization_residual(Scenario scenario, const PooledData& data,
                                            const ResampleDraw& draw, std::span<const double> grid,
                                            double tau);

enum class FunctionalId { Wilcoxon, ProductIntegral, Quantile };

using StepFunctional = std::function<StepFn(std::span<const StepFn>)>;
using StepDerivative = std::function<StepFn(std::span<const StepFn>, std::span<const StepFn>)>;

struct RatioSequence {
    std::vector<double> t;
    std::vector<std::vector<StepFn>> theta;  // theta_n
    std::vector<std::vector<StepFn>> h;      // h_n
    std::vector<StepFn> theta_limit;
    std::vector<StepFn> h_limit;
};

// sup | (phi(theta_n + t_n h_n) - phi(theta_n)) / t_n - phi'_theta(h) | for each n.
[[nodiscard]] std::vector<double> hadamard_ratio_check(const StepFunctional& phi,
                                                       const StepDerivative& derivative,
                                                       const RatioSequence& seq);
// Built-in smooth sequences theta_n = theta + n^{-1/2} g, h_n = h + n^{-1/2} k
// with t_n = n^{-1/2}; for Quantile the counterexample sequence.
[[nodiscard]] std::vector<double> hadamard_ratio_check(FunctionalId id,
                                                       const std::vector<long long>& n_values);
[[nodiscard]] RatioSequence builtin_ratio_sequence(FunctionalId id,
                                                   const std::vector<long long>& n_values);

/// Draws zero-mean Gaussian vectors with a given covariance through a
/// symmetric square root. Eigenvalues down to -1e-10 (relative) are clipped.
class GaussianSampler {
public:
    explicit GaussianSampler(const Eigen::MatrixXd& covariance);
    [[nodiscard]] Eigen::VectorXd draw(Rng& rng) const;
    [[nodiscard]] const Eigen::MatrixXd& root() const noexcept { return root_; }

private:
    Eigen::MatrixXd root_;
};

[[nodiscard]] double standard_normal(Rng& rng);
[[nodiscard]] Eigen::VectorXd simulate_grid_gaussian(const Eigen::MatrixXd& covariance,
                                                     SeedSpec seed);

// Runs the comparison logic on Gaussian vectors drawn directly from the
// kernel, bypassing resampling.
[[nodiscard]] ComparisonResult calibration_self_test(const Eigen::MatrixXd& covariance,
                                                     std::size_t draws, std::size_t reps,
                                                     const ToleranceSpec& tol, SeedSpec seed,
                                                     std::size_t threads = 0);

struct ExhaustiveOracle {
    std::size_t permutations = 0;
    // Mean of each group ECDF over all permutations equals H_N (compared as
    // integers and as doubles).
    bool mean_exact = false;
    // Mean of the centered process is exactly 0.
    bool centered_mean_zero = false;
    // Enumerated covariance equals N/(N-1) (n_i^{-1} N 1{i=j} - 1)(H_N(min) - H_N H_N).
    bool closed_form_exact = false;
    // The Monte Carlo accumulator fed every permutation reproduces the
    // enumerated covariance bit for bit.
    bool mc_matches_enumeration = false;
    Eigen::MatrixXd group_mean;  // m x |grid|
    std::vector<double> pooled;  // H_N on the grid
    Eigen::MatrixXd enumerated;
    Eigen::MatrixXd monte_carlo;
    Eigen::MatrixXd closed_form;
};

[[nodiscard]] ExhaustiveOracle exhaustive_indicator_oracle(const MultiSampleData& data,
                                                           std::span<const double> grid);

}  // namespace permboot
