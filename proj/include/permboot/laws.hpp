#pragma once

#include "permboot/resampling.hpp"

#include <string>
#include <variant>
#include <vector>

namespace permboot {

struct Exponential {
    double rate = 1.0;
};

struct Uniform {
    double lo = 0.0;
    double hi = 1.0;
};

struct PointMasses {
    std::vector<double> values;  // strictly increasing
    std::vector<double> probs;   // positive, summing to 1
};

using Law = std::variant<Exponential, Uniform, PointMasses>;

void validate(const Law& law);
[[nodiscard]] bool is_continuous(const Law& law);
[[nodiscard]] std::string describe(const Law& law);

// P(X <= x) and P(X < x).
[[nodiscard]] double cdf(const Law& law, double x);
[[nodiscard]] double cdf_left(const Law& law, double x);
// Density of a continuous law.
[[nodiscard]] double density(const Law& law, double x);
// Smallest x with cdf(x) >= u, u in (0, 1).
[[nodiscard]] double inverse_cdf(const Law& law, double u);
// Inverse-CDF draw.
[[nodiscard]] double sample(const Law& law, Rng& rng);

}  // namespace permboot
