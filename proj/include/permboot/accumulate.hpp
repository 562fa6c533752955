#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace permboot {

// Neumaier compensated sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x)) {
            comp_ += (sum_ - t) + x;
        } else {
            comp_ += (x - t) + sum_;
        }
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

/// Mean and covariance (divisor n) of a stream of vectors.
class CovarianceAccumulator {
public:
    explicit CovarianceAccumulator(std::size_t dim);

    void add(std::span<const double> x);

    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t count() const noexcept { return count_; }
    [[nodiscard]] Eigen::VectorXd mean() const;
    // (n * Sxy - Sx * Sy) / n^2; a single rounding when the sums are exact.
    [[nodiscard]] Eigen::MatrixXd covariance() const;

private:
    std::size_t dim_;
    std::size_t count_ = 0;
    std::vector<CompensatedSum> sx_;
    std::vector<CompensatedSum> sxy_;  // upper triangle, row major
};

/// Mean and standard error of a scalar sample, accumulated in index order.
struct SampleSummary {
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

[[nodiscard]] SampleSummary summarize(std::span<const double> xs);

// Linear-interpolation quantile (type 7) of an unsorted sample.
[[nodiscard]] double sample_quantile(std::vector<double> xs, double p);

}  // namespace permboot
