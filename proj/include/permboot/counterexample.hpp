#pragma once

#include <string>
#include <vector>

namespace permboot {

/// Continuous, nondecreasing, piecewise-linear function through (x[k], y[k]).
class PiecewiseLinear {
public:
    PiecewiseLinear(std::vector<double> x, std::vector<double> y);
    // Slopes given explicitly, so that exact values such as 2 survive rounded knots.
    PiecewiseLinear(std::vector<double> x, std::vector<double> y, std::vector<double> slopes);

    [[nodiscard]] double operator()(double t) const;
    [[nodiscard]] double lo() const noexcept { return x_.front(); }
    [[nodiscard]] double hi() const noexcept { return x_.back(); }
    [[nodiscard]] const std::vector<double>& knots() const noexcept { return x_; }
    // Slope of the segment to the right of t (to the left at hi).
    [[nodiscard]] double slope_at(double t) const;

    // Smallest x with f(x) >= p.
    [[nodiscard]] double quantile(double p) const;
    // quantile of (f + c) at p minus quantile of f at p. Within one segment
    // this is -c / slope, evaluated without forming either quantile.
    [[nodiscard]] double inverse_increment(double c, double p) const;

private:
    [[nodiscard]] std::size_t segment_of_level(double p) const;

    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> s_;
};

// A(x) = x on [0, 2] and the perturbed A_n: slope 2 on (1 - 1/sqrt(n), 1 + 1/sqrt(n)),
// x - 1/sqrt(n) to the left and x + 1/sqrt(n) to the right.
[[nodiscard]] PiecewiseLinear identity_on_0_2();
[[nodiscard]] PiecewiseLinear steepened_identity(long long n);

struct CounterexampleRow {
    long long n = 0;
    double t_n = 0.0;
    double ratio = 0.0;
    double derivative = 0.0;
    double gap = 0.0;
};

// Difference quotients of the p = 1 quantile along A_n + t_n with t_n = 1/sqrt(n).
[[nodiscard]] std::vector<CounterexampleRow> inverse_counterexample(
    const std::vector<long long>& n_values);

// sqrt(n) sup_{|x| <= K/sqrt(n)} |A_n(xi+x) - A_n(xi) - A(xi+x) + A(xi)| for the
// families "counterexample", "identity" (A_n = A) and "smooth"
// (A_n = A + (x - xi)^2 / sqrt(n)), xi = 1.
[[nodiscard]] double increment_condition_probe(const std::string& family, long long n, double k);

}  // namespace permboot
