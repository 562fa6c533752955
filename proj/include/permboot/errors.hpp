#pragma once

#include <stdexcept>
#include <string>

namespace permboot {

// Argument outside the domain of a function or functional (evaluation point
// outside [lo, hi], product-integral jump too close to -1, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Violated precondition on the shape of the inputs (mismatched domains,
// mixed conventions, empty samples, malformed draws).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Division by a vanishing at-risk function or a terminal hazard jump.
class SingularityError : public std::domain_error {
public:
    SingularityError(const std::string& what, double time)
        : std::domain_error(what + " at t = " + std::to_string(time)), time_(time) {}

    [[nodiscard]] double time() const noexcept { return time_; }

private:
    double time_;
};

}  // namespace permboot
