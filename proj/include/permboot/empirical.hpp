#pragma once

#include "permboot/stepfn.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace permboot {

// A plain observation uses `value` only; a censored one is (time, event).
struct Observation {
    double value = 0.0;
    bool event = true;

    friend bool operator==(const Observation&, const Observation&) = default;
};

enum class SampleKind { Plain, Censored };

/// m >= 2 independent groups, all plain or all censored, none empty.
class MultiSampleData {
public:
    MultiSampleData(SampleKind kind, std::vector<std::vector<Observation>> groups);

    [[nodiscard]] static MultiSampleData plain(const std::vector<std::vector<double>>& groups);

    [[nodiscard]] SampleKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t num_groups() const noexcept { return groups_.size(); }
    [[nodiscard]] const std::vector<Observation>& group(std::size_t j) const { return groups_.at(j); }
    [[nodiscard]] const std::vector<std::vector<Observation>>& groups() const noexcept { return groups_; }
    [[nodiscard]] std::vector<std::size_t> sizes() const;
    [[nodiscard]] std::size_t total_size() const;

private:
    SampleKind kind_;
    std::vector<std::vector<Observation>> groups_;
};

/// The pooled sample in group-concatenation order.
struct PooledData {
    SampleKind kind = SampleKind::Plain;
    std::vector<Observation> pooled;
    std::vector<std::size_t> sizes;
    // cumulative[0] = 0, cumulative[j] = n_1 + ... + n_j.
    std::vector<std::size_t> cumulative;

    [[nodiscard]] std::size_t total() const noexcept { return pooled.size(); }
    [[nodiscard]] std::size_t num_groups() const noexcept { return sizes.size(); }
    [[nodiscard]] std::vector<double> values() const;
};

[[nodiscard]] PooledData pool(const MultiSampleData& data);

/// Group proportions; each in (0, 1), summing to 1.
class LambdaVector {
public:
    explicit LambdaVector(std::vector<double> lambdas);
    [[nodiscard]] static LambdaVector from_sizes(std::span<const std::size_t> sizes);

    [[nodiscard]] std::size_t size() const noexcept { return lambdas_.size(); }
    [[nodiscard]] double operator[](std::size_t j) const { return lambdas_.at(j); }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return lambdas_; }

private:
    std::vector<double> lambdas_;
};

// Right-continuous ECDF on (-inf, inf): level k/n after the k-th order statistic.
[[nodiscard]] StepFn ecdf(std::span<const double> sample);

// ECDF of the concatenated pooled sample.
[[nodiscard]] StepFn pooled_ecdf(const PooledData& data);
// The same function as the mixture sum_j (n_j/N) F_j.
[[nodiscard]] StepFn pooled_ecdf_mixture(const PooledData& data);

// Left-continuous t -> (1/n) #{z >= t} on [0, inf).
[[nodiscard]] StepFn at_risk_process(std::span<const Observation> sample);
// Right-continuous t -> (1/n) #{z <= t, event} on [0, inf).
[[nodiscard]] StepFn uncensored_subdist(std::span<const Observation> sample);

[[nodiscard]] std::vector<double> values_of(std::span<const Observation> sample);

}  // namespace permboot
