#include "permboot/accumulate.hpp"

#include "permboot/errors.hpp"

#include <algorithm>

namespace permboot {

CovarianceAccumulator::CovarianceAccumulator(std::size_t dim)
    : dim_(dim), sx_(dim), sxy_(dim * (dim + 1) / 2) {}

void CovarianceAccumulator::add(std::span<const double> x) {
    if (x.size() != dim_) throw ContractError("CovarianceAccumulator: dimension mismatch");
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dim_; ++a) {
        sx_[a].add(x[a]);
        for (std::size_t b = a; b < dim_; ++b) sxy_[idx++].add(x[a] * x[b]);
    }
    ++count_;
}

Eigen::VectorXd CovarianceAccumulator::mean() const {
    Eigen::VectorXd m(static_cast<Eigen::Index>(dim_));
    const auto n = static_cast<double>(count_);
    for (std::size_t a = 0; a < dim_; ++a) m(static_cast<Eigen::Index>(a)) = sx_[a].value() / n;
    return m;
}

Eigen::MatrixXd CovarianceAccumulator::covariance() const {
    if (count_ == 0) throw ContractError("CovarianceAccumulator: no observations");
    const auto n = static_cast<double>(count_);
    Eigen::MatrixXd c(static_cast<Eigen::Index>(dim_), static_cast<Eigen::Index>(dim_));
    std::size_t idx = 0;
    for (std::size_t a = 0; a < dim_; ++a) {
        for (std::size_t b = a; b < dim_; ++b) {
            const double v =
                (n * sxy_[idx++].value() - sx_[a].value() * sx_[b].value()) / (n * n);
            c(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
            c(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = v;
        }
    }
    return c;
}

SampleSummary summarize(std::span<const double> xs) {
    SampleSummary s;
    s.n = xs.size();
    if (xs.empty()) return s;
    CompensatedSum sum;
    for (double x : xs) sum.add(x);
    s.mean = sum.value() / static_cast<double>(s.n);
    if (s.n > 1) {
        CompensatedSum ss;
        for (double x : xs) ss.add((x - s.mean) * (x - s.mean));
        s.sd = std::sqrt(ss.value() / static_cast<double>(s.n - 1));
        s.se = s.sd / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

double sample_quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw ContractError("sample_quantile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double h = p * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

}  // namespace permboot
