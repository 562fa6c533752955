#pragma once

#include "permboot/stepfn.hpp"

#include <optional>

namespace permboot {

// psi(A, B)(upto) = integral over (lo, upto] of A dB.
[[nodiscard]] double wilcoxon(const StepFn& a, const StepFn& b, double upto);
[[nodiscard]] StepFn wilcoxon_curve(const StepFn& a, const StepFn& b);
// t -> int A d(beta) + int alpha dB over (lo, t].
[[nodiscard]] StepFn wilcoxon_derivative(const StepFn& a, const StepFn& b, const StepFn& alpha,
                                         const StepFn& beta);

/// At-risk and uncensored subdistribution processes, used on [0, tau].
struct HazardBundle {
    StepFn at_risk;     // left-continuous, nonincreasing
    StepFn uncensored;  // right-continuous, nondecreasing
    double tau = 0.0;
};

// Cumulative hazard over [0, t], t <= tau. Jump at u is dH^uc(u) / H-bar(u),
// with the mass at 0 counted as a jump.
[[nodiscard]] StepFn nelson_aalen(const HazardBundle& bundle);
// Derivative in the direction (alpha, beta) of (H-bar, H^uc); alpha is
// left-continuous, beta right-continuous.
[[nodiscard]] StepFn nelson_aalen_derivative(const HazardBundle& bundle, const StepFn& alpha,
                                             const StepFn& beta);

struct ProdIntOptions {
    // Integrate over [0, t] and count A(0) as a jump at the origin.
    bool closed_at_zero = false;
    // Jumps must exceed -1 + eps_jump; with 0 a jump of exactly -1 is accepted.
    double eps_jump = 0.0;
};

[[nodiscard]] StepFn product_integral(const StepFn& a, ProdIntOptions options = {});
[[nodiscard]] StepFn prodint_derivative(const StepFn& a, const StepFn& alpha,
                                        ProdIntOptions options = {});

[[nodiscard]] StepFn kaplan_meier(const HazardBundle& bundle);
[[nodiscard]] StepFn km_derivative(const HazardBundle& bundle, const StepFn& alpha,
                                   const StepFn& beta);

// Integral of S over [lo, tau).
[[nodiscard]] double rmst(const StepFn& s, double tau);
// Derivative of rmst along a direction: integral of the direction over [lo, tau).
[[nodiscard]] double rmst_derivative(const StepFn& direction, double tau);

struct QuantileProblem {
    StepFn fn;  // nondecreasing
    double p = 0.5;
    std::optional<double> derivative_at_solution;
};

// Smallest y with fn(y) >= p.
[[nodiscard]] double quantile(const QuantileProblem& problem);
// -alpha(xi_p) / A'(xi_p).
[[nodiscard]] double quantile_derivative(const QuantileProblem& problem, const StepFn& alpha);

}  // namespace permboot
