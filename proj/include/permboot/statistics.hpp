#pragma once

#include "permboot/empirical.hpp"
#include "permboot/functionals.hpp"
#include "permboot/resampling.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace permboot {

enum class Scenario { PlainIndicator, SurvivalNA, SurvivalKM, WilcoxonStat, RMST };

[[nodiscard]] const char* to_string(Scenario s);
[[nodiscard]] Scenario scenario_from_string(const std::string& name);
[[nodiscard]] bool is_survival(Scenario s);

/**
 * Centered, sqrt(N)-scaled resampled statistic for one dataset:
 *   PlainIndicator  entry j*G+k: sqrt(N) (F*_j(g_k) - H_N(g_k))
 *   SurvivalNA      entry j*G+k: sqrt(N) (Lambda*_j(g_k) - Lambda_N(g_k))
 *   SurvivalKM      entry j*G+k: sqrt(N) (S*_j(g_k) - S_N(g_k))
 *   WilcoxonStat    one entry:   sqrt(N) (psi(F*_1, F*_2)(inf) - psi(H_N, H_N)(inf))
 *   RMST            entry j:     sqrt(N) (RMST(S*_j, tau) - RMST(S_N, tau))
 * Pooled quantities are computed once; each call works from the assignment
 * with counting sweeps over the sorted pooled sample.
 */
class StatisticEvaluator {
public:
    virtual ~StatisticEvaluator() = default;
    [[nodiscard]] virtual std::size_t dim() const = 0;
    virtual void evaluate(std::span<const std::size_t> assignment, std::span<double> out) = 0;
};

[[nodiscard]] std::unique_ptr<StatisticEvaluator> make_evaluator(Scenario scenario,
                                                                 const PooledData& data,
                                                                 std::span<const double> grid,
                                                                 double tau);

// The same statistic through the step-function layer (resampled_group_*,
// nelson_aalen, kaplan_meier, rmst, wilcoxon). Slow; used to cross-check.
[[nodiscard]] std::vector<double> reference_statistic(Scenario scenario, const PooledData& data,
                                                      const ResampleDraw& draw,
                                                      std::span<const double> grid, double tau);

// Pooled at-risk / uncensored processes on [0, inf).
[[nodiscard]] HazardBundle pooled_bundle(const PooledData& data, double tau);

}  // namespace permboot
