#pragma once

#include "permboot/empirical.hpp"
#include "permboot/stepfn.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace permboot {

enum class ResampleKind { Permutation, PooledBootstrap };

// assignment[k] is the pooled index (0-based) placed at position k. Group j
// receives positions cumulative[j] .. cumulative[j+1]-1.
struct ResampleDraw {
    ResampleKind kind = ResampleKind::Permutation;
    std::vector<std::size_t> assignment;

    friend bool operator==(const ResampleDraw&, const ResampleDraw&) = default;
};

struct SeedSpec {
    std::uint64_t master = 0;
    std::uint64_t stream = 0;

    friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

[[nodiscard]] std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Stream for draw `draw` of replicate `rep` in experiment `experiment`.
[[nodiscard]] SeedSpec derive_seed(SeedSpec base, std::uint64_t experiment, std::uint64_t rep,
                                   std::uint64_t draw) noexcept;

// Generator owned by one task. Bounded integers use multiply-and-reject, so
// draws are identical on every standard library.
class Rng {
public:
    explicit Rng(SeedSpec seed);

    [[nodiscard]] std::uint64_t next() { return engine_(); }
    // Uniform on {0, ..., n-1}; n > 0.
    [[nodiscard]] std::uint64_t below(std::uint64_t n);
    // Uniform on (0, 1).
    [[nodiscard]] double uniform_open();

private:
    std::mt19937_64 engine_;
};

[[nodiscard]] ResampleDraw draw_permutation(std::size_t n, SeedSpec seed);
[[nodiscard]] ResampleDraw draw_permutation(const PooledData& data, SeedSpec seed);
[[nodiscard]] ResampleDraw draw_bootstrap(std::size_t n, SeedSpec seed);
[[nodiscard]] ResampleDraw draw_bootstrap(const PooledData& data, SeedSpec seed);
[[nodiscard]] ResampleDraw draw(ResampleKind kind, std::size_t n, SeedSpec seed);

// Fisher-Yates / bootstrap fill reusing a caller-owned buffer.
void permute_into(std::vector<std::size_t>& assignment, Rng& rng);
void bootstrap_into(std::vector<std::size_t>& assignment, std::size_t n, Rng& rng);

inline constexpr std::size_t kMaxExhaustive = 8;

// Every permutation of {0..n-1} in lexicographic order; n <= kMaxExhaustive.
[[nodiscard]] std::vector<ResampleDraw> all_permutations(std::size_t n);

[[nodiscard]] std::vector<std::vector<Observation>> resampled_groups(const PooledData& data,
                                                                     const ResampleDraw& draw);
[[nodiscard]] std::vector<StepFn> resampled_group_ecdfs(const PooledData& data,
                                                        const ResampleDraw& draw);

struct SurvivalPair {
    StepFn at_risk;
    StepFn uncensored;
};
[[nodiscard]] std::vector<SurvivalPair> resampled_group_survival(const PooledData& data,
                                                                 const ResampleDraw& draw);

// Entry (j, k) = sqrt(N) (group_fns[j](grid[k]) - pooled_fn(grid[k])).
[[nodiscard]] Eigen::MatrixXd centered_process(std::span<const StepFn> group_fns,
                                               const StepFn& pooled_fn, std::size_t n,
                                               std::span<const double> grid);

}  // namespace permboot
