#include "permboot/functionals.hpp"

#include "permboot/errors.hpp"
#include "permboot/io.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace permboot {

namespace {

void require_domain(const StepFn& f, const StepFn& g, const char* op) {
    if (f.lo() != g.lo() || f.hi() != g.hi()) {
        throw ContractError(std::string(op) + ": functions live on different domains");
    }
}

void require_right(const StepFn& f, const char* op) {
    if (f.continuity() != Continuity::Right) {
        throw ContractError(std::string(op) + ": expected a right-continuous function");
    }
}

std::vector<double> merge(std::span<const double> a, std::span<const double> b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void check_bundle(const HazardBundle& b, const char* op) {
    if (b.at_risk.continuity() != Continuity::Left) {
        throw ContractError(std::string(op) + ": at-risk process must be left-continuous");
    }
    require_right(b.uncensored, op);
    if (b.at_risk.lo() != 0.0 || b.uncensored.lo() != 0.0) {
        throw ContractError(std::string(op) + ": survival processes must start at 0");
    }
    if (!(b.tau > 0.0) || b.tau > b.at_risk.hi() || b.tau > b.uncensored.hi()) {
        throw DomainError(std::string(op) + ": tau = " + format_real(b.tau) +
                          " outside the processes' domain");
    }
}

// Returns the jump, with values within rounding below -1 snapped to -1.
double check_jump(double d, double u, double eps) {
    if (eps == 0.0 && d < -1.0 && d >= -1.0 - 1e-12) return -1.0;
    if (d < -1.0 || (eps > 0.0 && d <= -1.0 + eps)) {
        throw DomainError("product_integral: jump too close to -1 (" + format_real(d) +
                          ") at t = " + format_real(u));
    }
    return d;
}

}  // namespace

double wilcoxon(const StepFn& a, const StepFn& b, double upto) {
    require_right(a, "wilcoxon");
    require_domain(a, b, "wilcoxon");
    return ls_integral(a, b, upto);
}

StepFn wilcoxon_curve(const StepFn& a, const StepFn& b) {
    require_right(a, "wilcoxon");
    require_domain(a, b, "wilcoxon");
    return ls_integral_curve(a, b);
}

StepFn wilcoxon_derivative(const StepFn& a, const StepFn& b, const StepFn& alpha,
                           const StepFn& beta) {
    require_domain(a, b, "wilcoxon_derivative");
    require_domain(a, alpha, "wilcoxon_derivative");
    require_domain(a, beta, "wilcoxon_derivative");
    const StepFn terms[] = {ls_integral_curve(a, beta), ls_integral_curve(alpha, b)};
    const double ones[] = {1.0, 1.0};
    return affine_combine(ones, terms);
}

namespace {

struct HazardIncrements {
    double origin = 0.0;
    std::vector<double> times;
    std::vector<double> jumps;
};

// dH^uc(u) / H-bar(u) on [0, tau]. A ratio above 1 by rounding only (the
// uncensored mass at u never exceeds the at-risk mass) is set to 1.
HazardIncrements hazard_increments(const HazardBundle& bundle, const char* op) {
    const auto& hbar = bundle.at_risk;
    const auto& huc = bundle.uncensored;
    auto ratio = [&](double d, double u) {
        const double r = hbar(u);
        if (!(r > 0.0)) throw SingularityError(std::string(op) + ": empty risk set", u);
        const double q = d / r;
        return q > 1.0 && q <= 1.0 + 1e-12 ? 1.0 : q;
    };
    HazardIncrements out;
    if (huc.base() != 0.0) out.origin = ratio(huc.base(), 0.0);
    for (std::size_t k = 0; k < huc.size() && huc.breakpoints()[k] <= bundle.tau; ++k) {
        const double u = huc.breakpoints()[k];
        out.times.push_back(u);
        out.jumps.push_back(ratio(huc.jump(k), u));
    }
    return out;
}

}  // namespace

StepFn nelson_aalen(const HazardBundle& bundle) {
    check_bundle(bundle, "nelson_aalen");
    auto inc = hazard_increments(bundle, "nelson_aalen");
    std::vector<double> levels(inc.times.size());
    double level = inc.origin;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        level += inc.jumps[k];
        levels[k] = level;
    }
    return StepFn::from_levels(0.0, bundle.tau, inc.origin, std::move(inc.times), std::move(levels));
}

StepFn nelson_aalen_derivative(const HazardBundle& bundle, const StepFn& alpha,
                               const StepFn& beta) {
    check_bundle(bundle, "nelson_aalen_derivative");
    require_right(beta, "nelson_aalen_derivative");
    if (alpha.lo() != 0.0 || beta.lo() != 0.0 || alpha.hi() < bundle.tau ||
        beta.hi() < bundle.tau) {
        throw ContractError("nelson_aalen_derivative: directions must cover [0, tau]");
    }
    const auto& hbar = bundle.at_risk;
    const auto& huc = bundle.uncensored;

    auto increment = [&](double u, double dh, double db) {
        if (dh == 0.0 && db == 0.0) return 0.0;
        const double r = hbar(u);
        if (!(r > 0.0)) throw SingularityError("nelson_aalen_derivative: empty risk set", u);
        return db / r - alpha(u) * dh / (r * r);
    };

    const double base = increment(0.0, huc.base(), beta.base());
    std::vector<double> bps, levels;
    double level = base;
    for (double u : merge(huc.breakpoints(), beta.breakpoints())) {
        if (u > bundle.tau) break;
        level += increment(u, huc.jump_at(u), beta.jump_at(u));
        bps.push_back(u);
        levels.push_back(level);
    }
    return StepFn::from_levels(0.0, bundle.tau, base, std::move(bps), std::move(levels));
}

StepFn product_integral(const StepFn& a, ProdIntOptions options) {
    require_right(a, "product_integral");
    double base = 1.0;
    if (options.closed_at_zero) {
        if (a.lo() != 0.0) throw ContractError("product_integral: [0, t] convention needs lo = 0");
        base = 1.0 + check_jump(a.base(), 0.0, options.eps_jump);
    }
    std::vector<double> bps(a.breakpoints().begin(), a.breakpoints().end());
    std::vector<double> levels(bps.size());
    double level = base;
    for (std::size_t k = 0; k < bps.size(); ++k) {
        level *= 1.0 + check_jump(a.jump(k), bps[k], options.eps_jump);
        levels[k] = level;
    }
    return StepFn::from_levels(a.lo(), a.hi(), base, std::move(bps), std::move(levels));
}

StepFn prodint_derivative(const StepFn& a, const StepFn& alpha, ProdIntOptions options) {
    require_right(a, "prodint_derivative");
    require_right(alpha, "prodint_derivative");
    require_domain(a, alpha, "prodint_derivative");

    auto factor = [&](double d, double u) {
        if (check_jump(d, u, options.eps_jump) == -1.0) {
            throw SingularityError("prodint_derivative: hazard jump of -1", u);
        }
        return 1.0 + d;
    };

    double phi = 1.0;
    double correction = 0.0;
    double alpha_start = alpha.base();
    if (options.closed_at_zero) {
        if (a.lo() != 0.0) throw ContractError("prodint_derivative: [0, t] convention needs lo = 0");
        alpha_start = 0.0;
        const double d = a.base();
        const double f = factor(d, 0.0);
        phi = f;
        correction = d * alpha.base() / f;
    }
    const double base = phi * (alpha.base() - alpha_start - correction);

    std::vector<double> bps = merge(a.breakpoints(), alpha.breakpoints());
    std::vector<double> levels(bps.size());
    for (std::size_t k = 0; k < bps.size(); ++k) {
        const double u = bps[k];
        const double d = a.jump_at(u);
        const double f = factor(d, u);
        phi *= f;
        correction += d * alpha.jump_at(u) / f;
        levels[k] = phi * (alpha(u) - alpha_start - correction);
    }
    return StepFn::from_levels(a.lo(), a.hi(), base, std::move(bps), std::move(levels));
}

StepFn kaplan_meier(const HazardBundle& bundle) {
    check_bundle(bundle, "kaplan_meier");
    auto inc = hazard_increments(bundle, "kaplan_meier");
    check_jump(-inc.origin, 0.0, 0.0);
    const double base = 1.0 - inc.origin;
    std::vector<double> levels(inc.times.size());
    double level = base;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        check_jump(-inc.jumps[k], inc.times[k], 0.0);
        level *= 1.0 - inc.jumps[k];
        levels[k] = level;
    }
    return StepFn::from_levels(0.0, bundle.tau, base, std::move(inc.times), std::move(levels));
}

StepFn km_derivative(const HazardBundle& bundle, const StepFn& alpha, const StepFn& beta) {
    const StepFn minus_lambda = scale(nelson_aalen(bundle), -1.0);
    const StepFn minus_dlambda = scale(nelson_aalen_derivative(bundle, alpha, beta), -1.0);
    return prodint_derivative(minus_lambda, minus_dlambda, {.closed_at_zero = true});
}

double rmst(const StepFn& s, double tau) {
    if (!std::isfinite(s.lo()) || !(s.lo() < tau && tau <= s.hi())) {
        throw DomainError("rmst: tau = " + format_real(tau) + " outside the domain");
    }
    double area = 0.0;
    double prev = s.lo();
    double level = s.base();
    for (std::size_t k = 0; k < s.size() && s.breakpoints()[k] < tau; ++k) {
        area += level * (s.breakpoints()[k] - prev);
        prev = s.breakpoints()[k];
        level = s.levels()[k];
    }
    return area + level * (tau - prev);
}

double rmst_derivative(const StepFn& direction, double tau) { return rmst(direction, tau); }

double quantile(const QuantileProblem& problem) {
    const auto& f = problem.fn;
    double prev = f.base();
    for (double v : f.levels()) {
        if (v < prev) throw ContractError("quantile: function must be nondecreasing");
        prev = v;
    }
    if (f.base() >= problem.p) return f.lo();
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (f.levels()[k] >= problem.p) return f.breakpoints()[k];
    }
    throw DomainError("quantile: level " + format_real(problem.p) + " is never reached");
}

double quantile_derivative(const QuantileProblem& problem, const StepFn& alpha) {
    if (!problem.derivative_at_solution || !(*problem.derivative_at_solution > 0.0)) {
        throw ContractError("quantile_derivative: needs a positive derivative at the solution");
    }
    return -alpha(quantile(problem)) / *problem.derivative_at_solution;
}

}  // namespace permboot
