#include "permboot/empirical.hpp"

#include "permboot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace permboot {

MultiSampleData::MultiSampleData(SampleKind kind, std::vector<std::vector<Observation>> groups)
    : kind_(kind), groups_(std::move(groups)) {
    if (groups_.size() < 2) throw ContractError("MultiSampleData: need at least two groups");
    for (const auto& g : groups_) {
        if (g.empty()) throw ContractError("MultiSampleData: every group must be nonempty");
        for (const auto& obs : g) {
            if (!std::isfinite(obs.value)) throw ContractError("MultiSampleData: non-finite value");
            if (kind_ == SampleKind::Censored && obs.value < 0.0) {
                throw ContractError("MultiSampleData: negative survival time");
            }
        }
    }
}

MultiSampleData MultiSampleData::plain(const std::vector<std::vector<double>>& groups) {
    std::vector<std::vector<Observation>> obs(groups.size());
    for (std::size_t j = 0; j < groups.size(); ++j) {
        obs[j].reserve(groups[j].size());
        for (double x : groups[j]) obs[j].push_back({x, true});
    }
    return MultiSampleData(SampleKind::Plain, std::move(obs));
}

std::vector<std::size_t> MultiSampleData::sizes() const {
    std::vector<std::size_t> n(groups_.size());
    for (std::size_t j = 0; j < n.size(); ++j) n[j] = groups_[j].size();
    return n;
}

std::size_t MultiSampleData::total_size() const {
    std::size_t total = 0;
    for (const auto& g : groups_) total += g.size();
    return total;
}

std::vector<double> PooledData::values() const { return values_of(pooled); }

PooledData pool(const MultiSampleData& data) {
    PooledData out;
    out.kind = data.kind();
    out.sizes = data.sizes();
    out.cumulative.assign(1, 0);
    for (const auto& g : data.groups()) {
        out.pooled.insert(out.pooled.end(), g.begin(), g.end());
        out.cumulative.push_back(out.pooled.size());
    }
    return out;
}

LambdaVector::LambdaVector(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
    if (lambdas_.size() < 2) throw ContractError("LambdaVector: need at least two groups");
    double sum = 0.0;
    for (double l : lambdas_) {
        if (!(l > 0.0 && l < 1.0)) throw ContractError("LambdaVector: proportions must lie in (0,1)");
        sum += l;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ContractError("LambdaVector: proportions must sum to 1");
}

LambdaVector LambdaVector::from_sizes(std::span<const std::size_t> sizes) {
    const auto total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    std::vector<double> l(sizes.size());
    for (std::size_t j = 0; j < sizes.size(); ++j) {
        l[j] = static_cast<double>(sizes[j]) / static_cast<double>(total);
    }
    return LambdaVector(std::move(l));
}

std::vector<double> values_of(std::span<const Observation> sample) {
    std::vector<double> v(sample.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = sample[i].value;
    return v;
}

StepFn ecdf(std::span<const double> sample) {
    if (sample.empty()) throw ContractError("ecdf: empty sample");
    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    std::vector<double> bps, levels;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        bps.push_back(sorted[i]);
        levels.push_back(static_cast<double>(i + 1) / n);
    }
    return StepFn::from_levels(-kInf, kInf, 0.0, std::move(bps), std::move(levels));
}

StepFn pooled_ecdf(const PooledData& data) {
    const auto v = data.values();
    return ecdf(v);
}

StepFn pooled_ecdf_mixture(const PooledData& data) {
    std::vector<StepFn> fns;
    std::vector<double> coeffs;
    const auto total = static_cast<double>(data.total());
    for (std::size_t j = 0; j < data.num_groups(); ++j) {
        std::vector<double> group;
        for (std::size_t i = data.cumulative[j]; i < data.cumulative[j + 1]; ++i) {
            group.push_back(data.pooled[i].value);
        }
        fns.push_back(ecdf(group));
        coeffs.push_back(static_cast<double>(data.sizes[j]) / total);
    }
    return affine_combine(coeffs, fns);
}

namespace {

std::vector<Observation> sorted_survival(std::span<const Observation> sample) {
    if (sample.empty()) throw ContractError("survival process: empty sample");
    std::vector<Observation> s(sample.begin(), sample.end());
    for (const auto& o : s) {
        if (!(o.value >= 0.0)) throw ContractError("survival process: negative time");
    }
    std::sort(s.begin(), s.end(), [](const Observation& a, const Observation& b) {
        return a.value < b.value;
    });
    return s;
}

}  // namespace

StepFn at_risk_process(std::span<const Observation> sample) {
    const auto s = sorted_survival(sample);
    const auto n = static_cast<double>(s.size());
    std::vector<double> bps, levels;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i + 1 < s.size() && s[i + 1].value == s[i].value) continue;
        bps.push_back(s[i].value);
        levels.push_back(static_cast<double>(s.size() - i - 1) / n);
    }
    return StepFn::from_levels(0.0, kInf, 1.0, std::move(bps), std::move(levels), Continuity::Left);
}

StepFn uncensored_subdist(std::span<const Observation> sample) {
    const auto s = sorted_survival(sample);
    const auto n = static_cast<double>(s.size());
    std::size_t events = 0;
    std::size_t at_zero = 0;
    std::vector<double> bps, levels;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i].event) {
            ++events;
            if (s[i].value == 0.0) ++at_zero;
        }
        const bool last_of_tie = i + 1 == s.size() || s[i + 1].value != s[i].value;
        if (last_of_tie && s[i].value > 0.0) {
            bps.push_back(s[i].value);
            levels.push_back(static_cast<double>(events) / n);
        }
    }
    return StepFn::from_levels(0.0, kInf, static_cast<double>(at_zero) / n, std::move(bps),
                               std::move(levels), Continuity::Right);
}

}  // namespace permboot
