#include "permboot/resampling.hpp"

#include "permboot/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace permboot {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

SeedSpec derive_seed(SeedSpec base, std::uint64_t experiment, std::uint64_t rep,
                     std::uint64_t draw) noexcept {
    std::uint64_t s = splitmix64(base.stream ^ splitmix64(experiment));
    s = splitmix64(s ^ splitmix64(rep + 0x632be59bd9b4e019ULL));
    s = splitmix64(s ^ splitmix64(draw + 0x8cb92ba72f3d8dd7ULL));
    return {base.master, s};
}

Rng::Rng(SeedSpec seed) {
    const std::uint64_t a = splitmix64(seed.master);
    const std::uint64_t b = splitmix64(a ^ splitmix64(seed.stream + 0x2545f4914f6cdd1dULL));
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    engine_.seed(seq);
}

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw ContractError("Rng::below: empty range");
    u128 m = static_cast<u128>(next()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
        const std::uint64_t threshold = (0 - n) % n;
        while (low < threshold) {
            m = static_cast<u128>(next()) * n;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::uniform_open() {
    // 53 random bits, shifted off zero.
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

void permute_into(std::vector<std::size_t>& assignment, Rng& rng) {
    std::iota(assignment.begin(), assignment.end(), std::size_t{0});
    for (std::size_t i = assignment.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(assignment[i - 1], assignment[j]);
    }
}

void bootstrap_into(std::vector<std::size_t>& assignment, std::size_t n, Rng& rng) {
    assignment.resize(n);
    for (auto& a : assignment) a = static_cast<std::size_t>(rng.below(n));
}

ResampleDraw draw_permutation(std::size_t n, SeedSpec seed) {
    ResampleDraw d{ResampleKind::Permutation, std::vector<std::size_t>(n)};
    Rng rng(seed);
    permute_into(d.assignment, rng);
    return d;
}

ResampleDraw draw_permutation(const PooledData& data, SeedSpec seed) {
    return draw_permutation(data.total(), seed);
}

ResampleDraw draw_bootstrap(std::size_t n, SeedSpec seed) {
    if (n == 0) throw ContractError("draw_bootstrap: empty pool");
    ResampleDraw d{ResampleKind::PooledBootstrap, {}};
    Rng rng(seed);
    bootstrap_into(d.assignment, n, rng);
    return d;
}

ResampleDraw draw_bootstrap(const PooledData& data, SeedSpec seed) {
    return draw_bootstrap(data.total(), seed);
}

ResampleDraw draw(ResampleKind kind, std::size_t n, SeedSpec seed) {
    return kind == ResampleKind::Permutation ? draw_permutation(n, seed) : draw_bootstrap(n, seed);
}

std::vector<ResampleDraw> all_permutations(std::size_t n) {
    if (n > kMaxExhaustive) {
        throw ContractError("all_permutations: exhaustive enumeration needs N <= " +
                            std::to_string(kMaxExhaustive));
    }
    std::vector<std::size_t> p(n);
    std::iota(p.begin(), p.end(), std::size_t{0});
    std::vector<ResampleDraw> out;
    do {
        out.push_back({ResampleKind::Permutation, p});
    } while (std::next_permutation(p.begin(), p.end()));
    return out;
}

namespace {

void check_draw(const PooledData& data, const ResampleDraw& draw) {
    if (draw.assignment.size() != data.total()) {
        throw ContractError("resample: draw length " + std::to_string(draw.assignment.size()) +
                            " differs from N = " + std::to_string(data.total()));
    }
    for (auto a : draw.assignment) {
        if (a >= data.total()) throw ContractError("resample: assignment index out of range");
    }
}

}  // namespace

std::vector<std::vector<Observation>> resampled_groups(const PooledData& data,
                                                       const ResampleDraw& draw) {
    check_draw(data, draw);
    std::vector<std::vector<Observation>> groups(data.num_groups());
    for (std::size_t j = 0; j < data.num_groups(); ++j) {
        groups[j].reserve(data.sizes[j]);
        for (std::size_t k = data.cumulative[j]; k < data.cumulative[j + 1]; ++k) {
            groups[j].push_back(data.pooled[draw.assignment[k]]);
        }
    }
    return groups;
}

std::vector<StepFn> resampled_group_ecdfs(const PooledData& data, const ResampleDraw& draw) {
    if (data.kind != SampleKind::Plain) {
        throw ContractError("resampled_group_ecdfs: data are censored; use the survival variant");
    }
    std::vector<StepFn> out;
    for (const auto& g : resampled_groups(data, draw)) out.push_back(ecdf(values_of(g)));
    return out;
}

std::vector<SurvivalPair> resampled_group_survival(const PooledData& data,
                                                   const ResampleDraw& draw) {
    if (data.kind != SampleKind::Censored) {
        throw ContractError("resampled_group_survival: data are not censored");
    }
    std::vector<SurvivalPair> out;
    for (const auto& g : resampled_groups(data, draw)) {
        out.push_back({at_risk_process(g), uncensored_subdist(g)});
    }
    return out;
}

Eigen::MatrixXd centered_process(std::span<const StepFn> group_fns, const StepFn& pooled_fn,
                                 std::size_t n, std::span<const double> grid) {
    const double root = std::sqrt(static_cast<double>(n));
    Eigen::MatrixXd out(static_cast<Eigen::Index>(group_fns.size()),
                        static_cast<Eigen::Index>(grid.size()));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double h = pooled_fn(grid[k]);
        for (std::size_t j = 0; j < group_fns.size(); ++j) {
            out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
                root * (group_fns[j](grid[k]) - h);
        }
    }
    return out;
}

}  // namespace permboot
