#include "permboot/laws.hpp"

#include "permboot/errors.hpp"
#include "permboot/io.hpp"

#include <algorithm>
#include <cmath>

namespace permboot {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

void validate(const Law& law) {
    std::visit(Overloaded{
                   [](const Exponential& e) {
                       if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
                           throw ContractError("exponential law needs a positive rate");
                       }
                   },
                   [](const Uniform& u) {
                       if (!(u.lo < u.hi) || !std::isfinite(u.lo) || !std::isfinite(u.hi)) {
                           throw ContractError("uniform law needs finite lo < hi");
                       }
                   },
                   [](const PointMasses& p) {
                       if (p.values.empty() || p.values.size() != p.probs.size()) {
                           throw ContractError("point masses need one probability per value");
                       }
                       double total = 0.0;
                       for (std::size_t k = 0; k < p.values.size(); ++k) {
                           if (k > 0 && !(p.values[k - 1] < p.values[k])) {
                               throw ContractError("point mass values must increase");
                           }
                           if (!(p.probs[k] > 0.0)) {
                               throw ContractError("point mass probabilities must be positive");
                           }
                           total += p.probs[k];
                       }
                       if (std::abs(total - 1.0) > 1e-12) {
                           throw ContractError("point mass probabilities must sum to 1");
                       }
                   },
               },
               law);
}

bool is_continuous(const Law& law) { return !std::holds_alternative<PointMasses>(law); }

std::string describe(const Law& law) {
    return std::visit(
        Overloaded{
            [](const Exponential& e) { return "exponential(" + format_real(e.rate) + ")"; },
            [](const Uniform& u) {
                return "uniform(" + format_real(u.lo) + ", " + format_real(u.hi) + ")";
            },
            [](const PointMasses& p) {
                return "point_masses(" + std::to_string(p.values.size()) + " atoms)";
            },
        },
        law);
}

double cdf(const Law& law, double x) {
    return std::visit(Overloaded{
                          [x](const Exponential& e) { return x <= 0.0 ? 0.0 : -std::expm1(-e.rate * x); },
                          [x](const Uniform& u) {
                              if (x <= u.lo) return 0.0;
                              if (x >= u.hi) return 1.0;
                              return (x - u.lo) / (u.hi - u.lo);
                          },
                          [x](const PointMasses& p) {
                              double c = 0.0;
                              for (std::size_t k = 0; k < p.values.size() && p.values[k] <= x; ++k) {
                                  c += p.probs[k];
                              }
                              return std::min(c, 1.0);
                          },
                      },
                      law);
}

double cdf_left(const Law& law, double x) {
    if (const auto* p = std::get_if<PointMasses>(&law)) {
        double c = 0.0;
        for (std::size_t k = 0; k < p->values.size() && p->values[k] < x; ++k) c += p->probs[k];
        return std::min(c, 1.0);
    }
    return cdf(law, x);
}

double density(const Law& law, double x) {
    return std::visit(Overloaded{
                          [x](const Exponential& e) { return x < 0.0 ? 0.0 : e.rate * std::exp(-e.rate * x); },
                          [x](const Uniform& u) { return (x < u.lo || x > u.hi) ? 0.0 : 1.0 / (u.hi - u.lo); },
                          [](const PointMasses&) -> double {
                              throw ContractError("density: point masses have no density");
                          },
                      },
                      law);
}

double inverse_cdf(const Law& law, double u) {
    if (!(u > 0.0 && u < 1.0)) throw DomainError("inverse_cdf: level must lie in (0, 1)");
    return std::visit(Overloaded{
                          [u](const Exponential& e) { return -std::log1p(-u) / e.rate; },
                          [u](const Uniform& un) { return un.lo + (un.hi - un.lo) * u; },
                          [u](const PointMasses& p) {
                              double c = 0.0;
                              for (std::size_t k = 0; k < p.values.size(); ++k) {
                                  c += p.probs[k];
                                  if (c >= u) return p.values[k];
                              }
                              return p.values.back();
                          },
                      },
                      law);
}

double sample(const Law& law, Rng& rng) { return inverse_cdf(law, rng.uniform_open()); }

}  // namespace permboot
