#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace permboot {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Continuity { Right, Left };

// When enabled and the integrator lives on [0, hi], integrals over [0, t]
// pick up the increment f(0) at the origin (f(0-) is taken to be 0).
struct JumpAtZeroPolicy {
    bool enabled = false;
};

/**
 * Piecewise-constant function with finitely many jumps on [lo, hi].
 *
 * The function is stored by its levels: `base` is the value at `lo` before
 * any jump and `levels()[k]` is the value once the jump at `breakpoints()[k]`
 * has occurred. A right-continuous function takes the new level at the
 * breakpoint itself; a left-continuous one takes it strictly after it.
 *
 * Endpoints may be infinite; they are only ever compared, never used in
 * arithmetic. Right-continuous breakpoints lie in (lo, hi], left-continuous
 * ones in [lo, hi).
 *
 * Instances are immutable.
 */
class StepFn {
public:
    StepFn(double lo, double hi, double base, std::vector<double> breakpoints,
           std::vector<double> jumps, Continuity continuity = Continuity::Right);

    [[nodiscard]] static StepFn constant(double lo, double hi, double value,
                                         Continuity continuity = Continuity::Right);
    [[nodiscard]] static StepFn from_levels(double lo, double hi, double base,
                                            std::vector<double> breakpoints,
                                            std::vector<double> levels,
                                            Continuity continuity = Continuity::Right);

    [[nodiscard]] double lo() const noexcept { return lo_; }
    [[nodiscard]] double hi() const noexcept { return hi_; }
    [[nodiscard]] double base() const noexcept { return base_; }
    [[nodiscard]] Continuity continuity() const noexcept { return continuity_; }
    [[nodiscard]] std::size_t size() const noexcept { return breakpoints_.size(); }
    [[nodiscard]] std::span<const double> breakpoints() const noexcept { return breakpoints_; }
    [[nodiscard]] std::span<const double> levels() const noexcept { return levels_; }

    [[nodiscard]] double jump(std::size_t k) const;
    [[nodiscard]] std::vector<double> jumps() const;
    // Level after every jump.
    [[nodiscard]] double final_value() const noexcept;

    [[nodiscard]] double operator()(double t) const;
    [[nodiscard]] double left_limit(double t) const;
    // Jump located exactly at t, 0 if t is not a breakpoint.
    [[nodiscard]] double jump_at(double t) const;

    [[nodiscard]] bool contains(double t) const noexcept { return lo_ <= t && t <= hi_; }

    friend bool operator==(const StepFn&, const StepFn&) = default;

private:
    StepFn() = default;
    void validate() const;

    // Number of breakpoints counted into the value at t.
    [[nodiscard]] std::size_t active_count(double t) const;
    [[nodiscard]] double level_after(std::size_t count) const;

    double lo_ = 0.0;
    double hi_ = 0.0;
    double base_ = 0.0;
    std::vector<double> breakpoints_;
    std::vector<double> levels_;
    Continuity continuity_ = Continuity::Right;
};

[[nodiscard]] double eval(const StepFn& f, double t);
[[nodiscard]] double left_limit(const StepFn& f, double t);
[[nodiscard]] double total_variation(const StepFn& f);
[[nodiscard]] double sup_norm(const StepFn& f);

// Lebesgue-Stieltjes integral of g against f over (lo, upto], or [0, upto]
// with the jump-at-zero policy. f must be right-continuous.
[[nodiscard]] double ls_integral(const StepFn& g, const StepFn& f, double upto,
                                 JumpAtZeroPolicy policy = {});
// The curve t -> ls_integral(g, f, t) on f's domain.
[[nodiscard]] StepFn ls_integral_curve(const StepFn& g, const StepFn& f,
                                       JumpAtZeroPolicy policy = {});

// Pointwise sum of coeffs[i] * fns[i] on the merged breakpoints. Levels are
// accumulated in index order, so eval of the result equals the same sum of
// evals bit for bit.
[[nodiscard]] StepFn affine_combine(std::span<const double> coeffs, std::span<const StepFn> fns);
[[nodiscard]] StepFn scale(const StepFn& f, double c);
[[nodiscard]] StepFn difference(const StepFn& f, const StepFn& g);

// Pointwise op(f, g) on the merged breakpoints; shared domain and convention.
[[nodiscard]] StepFn combine(const StepFn& f, const StepFn& g,
                             const std::function<double(double, double)>& op);
[[nodiscard]] StepFn map_levels(const StepFn& f, const std::function<double(double)>& op);

// Same jumps, other convention (for a right-continuous f, the left-continuous
// version evaluates to f(t-)).
[[nodiscard]] StepFn with_continuity(const StepFn& f, Continuity continuity);
// Drops breakpoints beyond hi and shrinks the domain to [lo, hi].
[[nodiscard]] StepFn truncate(const StepFn& f, double hi);

// Line format: "lo hi convention base" followed by one "breakpoint jump" pair per line.
void write_stepfn(std::ostream& os, const StepFn& f);
[[nodiscard]] std::string to_text(const StepFn& f);
[[nodiscard]] StepFn read_stepfn(std::istream& is);

}  // namespace permboot
