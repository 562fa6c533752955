#include "permboot/limits.hpp"

#include "permboot/errors.hpp"
#include "permboot/io.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>

namespace permboot {

EmpiricalSurvivalPopulation::EmpiricalSurvivalPopulation(HazardBundle pooled)
    : bundle_(std::move(pooled)),
      lambda_(nelson_aalen(bundle_)),
      km_(kaplan_meier(bundle_)),
      c_(StepFn::constant(0.0, bundle_.tau, 0.0)) {
    const double d0 = lambda_.base();
    const double r0 = d0 != 0.0 ? bundle_.at_risk(0.0) : 1.0;
    const double c_base = d0 != 0.0 ? (1.0 - d0) / r0 * d0 : 0.0;
    bool singular = d0 == 1.0;
    if (singular) km_singular_at_ = 0.0;
    const double k_base = (d0 != 0.0 && !singular) ? d0 / ((1.0 - d0) * r0) : 0.0;

    std::vector<double> bps, c_levels, k_bps, k_levels;
    double c = c_base;
    double k = k_base;
    for (std::size_t idx = 0; idx < lambda_.size(); ++idx) {
        const double u = lambda_.breakpoints()[idx];
        const double d = lambda_.jump(idx);
        const double r = bundle_.at_risk(u);
        c += (1.0 - d) / r * d;
        bps.push_back(u);
        c_levels.push_back(c);
        if (!singular) {
            if (d == 1.0) {
                singular = true;
                km_singular_at_ = u;
            } else {
                k += d / ((1.0 - d) * r);
                k_bps.push_back(u);
                k_levels.push_back(k);
            }
        }
    }
    c_ = StepFn::from_levels(0.0, bundle_.tau, c_base, std::move(bps), std::move(c_levels));
    if (!singular) {
        km_int_ = StepFn::from_levels(0.0, bundle_.tau, k_base, std::move(k_bps),
                                      std::move(k_levels));
    } else if (km_singular_at_ > 0.0) {
        // Partial curve before the singular time; evaluation past it throws.
        km_int_ = StepFn::from_levels(0.0, bundle_.tau, k_base, std::move(k_bps),
                                      std::move(k_levels));
    }
    if (!singular) km_singular_at_ = kInf;
}

void EmpiricalSurvivalPopulation::check(double t) const {
    if (!(t >= 0.0 && t <= bundle_.tau)) {
        throw DomainError("survival population: t = " + format_real(t) + " outside [0, tau]");
    }
}

double EmpiricalSurvivalPopulation::at_risk(double t) const {
    check(t);
    return bundle_.at_risk(t);
}

double EmpiricalSurvivalPopulation::uncensored(double t) const {
    check(t);
    return bundle_.uncensored(t);
}

double EmpiricalSurvivalPopulation::uncensored_left(double t) const {
    check(t);
    return t == 0.0 ? 0.0 : bundle_.uncensored.left_limit(t);
}

double EmpiricalSurvivalPopulation::cumulative_hazard(double t) const {
    check(t);
    return lambda_(t);
}

double EmpiricalSurvivalPopulation::survival(double t) const {
    check(t);
    return km_(t);
}

double EmpiricalSurvivalPopulation::c_function(double t) const {
    check(t);
    return c_(t);
}

double EmpiricalSurvivalPopulation::km_integral(double t) const {
    check(t);
    if (t >= km_singular_at_) {
        throw SingularityError("km_integral: hazard jump of 1", km_singular_at_);
    }
    return (*km_int_)(t);
}

AnalyticSurvivalPopulation::AnalyticSurvivalPopulation(std::vector<Law> failure,
                                                       std::vector<std::optional<Law>> censoring,
                                                       LambdaVector lambdas, double tau)
    : failure_(std::move(failure)),
      censoring_(std::move(censoring)),
      lambdas_(std::move(lambdas)),
      tau_(tau) {
    if (failure_.size() != lambdas_.size() || censoring_.size() != lambdas_.size()) {
        throw ContractError("AnalyticSurvivalPopulation: one failure and censoring law per group");
    }
    for (const auto& l : failure_) {
        validate(l);
        if (!is_continuous(l)) {
            throw ContractError("AnalyticSurvivalPopulation: failure laws must be continuous");
        }
    }
    for (const auto& c : censoring_) {
        if (!c) continue;
        validate(*c);
        if (!is_continuous(*c)) {
            throw ContractError("AnalyticSurvivalPopulation: censoring laws must be continuous");
        }
    }
    if (!(tau_ > 0.0) || !std::isfinite(tau_)) {
        throw ContractError("AnalyticSurvivalPopulation: tau must be positive");
    }
    if (!(at_risk(tau_) > 0.0)) {
        throw SingularityError("AnalyticSurvivalPopulation: no mass at risk", tau_);
    }
}

void AnalyticSurvivalPopulation::check(double t) const {
    if (!(t >= 0.0 && t <= tau_)) {
        throw DomainError("survival population: t = " + format_real(t) + " outside [0, tau]");
    }
}

double AnalyticSurvivalPopulation::at_risk(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < failure_.size(); ++i) {
        const double g = censoring_[i] ? 1.0 - cdf_left(*censoring_[i], t) : 1.0;
        s += lambdas_[i] * (1.0 - cdf_left(failure_[i], t)) * g;
    }
    return s;
}

double AnalyticSurvivalPopulation::uncensored_density(double t) const {
    double s = 0.0;
    for (std::size_t i = 0; i < failure_.size(); ++i) {
        const double g = censoring_[i] ? 1.0 - cdf(*censoring_[i], t) : 1.0;
        s += lambdas_[i] * density(failure_[i], t) * g;
    }
    return s;
}

double AnalyticSurvivalPopulation::integrate(const std::function<double(double)>& f,
                                             double upto) const {
    if (upto <= 0.0) return 0.0;
    // Split at the kinks of uniform laws.
    std::vector<double> cuts{0.0, upto};
    auto add_kinks = [&](const Law& law) {
        if (const auto* u = std::get_if<Uniform>(&law)) {
            for (double x : {u->lo, u->hi}) {
                if (x > 0.0 && x < upto) cuts.push_back(x);
            }
        }
    };
    for (const auto& l : failure_) add_kinks(l);
    for (const auto& c : censoring_) {
        if (c) add_kinks(*c);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            f, cuts[k], cuts[k + 1], 20, 1e-13);
    }
    return total;
}

double AnalyticSurvivalPopulation::uncensored(double t) const {
    check(t);
    return integrate([this](double u) { return uncensored_density(u); }, t);
}

double AnalyticSurvivalPopulation::cumulative_hazard(double t) const {
    check(t);
    return integrate([this](double u) { return uncensored_density(u) / at_risk(u); }, t);
}

double AnalyticSurvivalPopulation::survival(double t) const {
    return std::exp(-cumulative_hazard(t));
}

double AnalyticSurvivalPopulation::c_function(double t) const {
    check(t);
    return integrate(
        [this](double u) {
            const double r = at_risk(u);
            return uncensored_density(u) / (r * r);
        },
        t);
}

const SurvivalPopulation& PooledPopulation::surv() const {
    if (!survival) throw ContractError("population has no survival part");
    return *survival;
}

PooledPopulation empirical_population(const StepFn& pooled_ecdf, LambdaVector lambdas) {
    return {[f = pooled_ecdf](double x) { return f(x); }, std::move(lambdas), nullptr};
}

PooledPopulation analytic_population(const std::vector<Law>& laws, LambdaVector lambdas) {
    if (laws.size() != lambdas.size()) throw ContractError("analytic_population: one law per group");
    for (const auto& l : laws) validate(l);
    auto h = [laws, l = lambdas](double x) {
        double s = 0.0;
        for (std::size_t i = 0; i < laws.size(); ++i) s += l[i] * cdf(laws[i], x);
        return s;
    };
    return {h, std::move(lambdas), nullptr};
}

PooledPopulation empirical_survival_population(HazardBundle pooled, LambdaVector lambdas) {
    auto surv = std::make_shared<EmpiricalSurvivalPopulation>(std::move(pooled));
    auto h = [s = surv](double x) { return 1.0 - s->at_risk(x); };
    return {h, std::move(lambdas), std::move(surv)};
}

PooledPopulation analytic_survival_population(const std::vector<Law>& failure,
                                              const std::vector<std::optional<Law>>& censoring,
                                              LambdaVector lambdas, double tau) {
    auto surv = std::make_shared<AnalyticSurvivalPopulation>(failure, censoring, lambdas, tau);
    auto h = [s = surv](double x) { return 1.0 - s->at_risk(x); };
    return {h, std::move(lambdas), std::move(surv)};
}

double bb_cov(const PooledPopulation& pop, double s, double t) {
    return pop.h(std::min(s, t)) - pop.h(s) * pop.h(t);
}

namespace {

void check_groups(const LambdaVector& l, std::size_t i, std::size_t j) {
    if (i >= l.size() || j >= l.size()) throw ContractError("kernel: group index out of range");
}

}  // namespace

double perm_coeff(const LambdaVector& lambdas, std::size_t i, std::size_t j) {
    check_groups(lambdas, i, j);
    return (i == j ? 1.0 / lambdas[i] : 0.0) - 1.0;
}

double boot_coeff(const LambdaVector& lambdas, std::size_t i, std::size_t j) {
    check_groups(lambdas, i, j);
    return i == j ? 1.0 / lambdas[i] : 0.0;
}

double coeff(Variant v, const LambdaVector& lambdas, std::size_t i, std::size_t j) {
    return v == Variant::Perm ? perm_coeff(lambdas, i, j) : boot_coeff(lambdas, i, j);
}

double indicator_kernel(Variant v, const PooledPopulation& pop, std::size_t i, std::size_t j,
                        double s, double t) {
    const double c = coeff(v, pop.lambdas, i, j);
    return c == 0.0 ? 0.0 : c * bb_cov(pop, s, t);
}

double c_function(const PooledPopulation& pop, double t) { return pop.surv().c_function(t); }

double na_kernel(Variant v, const PooledPopulation& pop, std::size_t i, std::size_t j, double s,
                 double t) {
    const double c = coeff(v, pop.lambdas, i, j);
    return c == 0.0 ? 0.0 : c * c_function(pop, std::min(s, t));
}

double km_kernel(Variant v, const PooledPopulation& pop, std::size_t i, std::size_t j, double s,
                 double t) {
    const double c = coeff(v, pop.lambdas, i, j);
    if (c == 0.0) return 0.0;
    const auto& sp = pop.surv();
    return c * sp.survival(s) * sp.survival(t) * sp.km_integral(std::min(s, t));
}

Eigen::Matrix2d survival_cross_kernel(Variant v, const PooledPopulation& pop, std::size_t i,
                                      std::size_t j, double s, double t) {
    const double c = coeff(v, pop.lambdas, i, j);
    const auto& sp = pop.surv();
    const double hb_s = sp.at_risk(s), hb_t = sp.at_risk(t);
    const double hu_s = sp.uncensored(s), hu_t = sp.uncensored(t);
    Eigen::Matrix2d k;
    k(0, 0) = sp.at_risk(std::max(s, t)) - hb_s * hb_t;
    // Cov(at-risk at s, uncensored at t): mass of s <= Z <= t with an event.
    k(0, 1) = (s <= t ? hu_t - sp.uncensored_left(s) : 0.0) - hb_s * hu_t;
    k(1, 0) = (t <= s ? hu_s - sp.uncensored_left(t) : 0.0) - hu_s * hb_t;
    k(1, 1) = sp.uncensored(std::min(s, t)) - hu_s * hu_t;
    return c * k;
}

double kernel(KernelKind kind, const PooledPopulation& pop, std::size_t i, std::size_t j, double s,
              double t) {
    switch (kind) {
        case KernelKind::PermIndicator: return indicator_kernel(Variant::Perm, pop, i, j, s, t);
        case KernelKind::BootIndicator: return indicator_kernel(Variant::Boot, pop, i, j, s, t);
        case KernelKind::PermSurvivalNA: return na_kernel(Variant::Perm, pop, i, j, s, t);
        case KernelKind::BootSurvivalNA: return na_kernel(Variant::Boot, pop, i, j, s, t);
        case KernelKind::PermKM: return km_kernel(Variant::Perm, pop, i, j, s, t);
        case KernelKind::BootKM: return km_kernel(Variant::Boot, pop, i, j, s, t);
        case KernelKind::SurvivalCross: break;
    }
    throw ContractError("kernel: the survival cross kernel is a 2x2 block");
}

Eigen::MatrixXd assemble_kernel(KernelKind kind, Variant cross_variant, const PooledPopulation& pop,
                                std::span<const double> grid) {
    const auto m = pop.lambdas.size();
    const auto g = grid.size();
    if (kind == KernelKind::SurvivalCross) {
        const auto dim = static_cast<Eigen::Index>(2 * m * g);
        Eigen::MatrixXd out(dim, dim);
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t k = 0; k < g; ++k) {
                for (std::size_t j = 0; j < m; ++j) {
                    for (std::size_t l = 0; l < g; ++l) {
                        const auto block =
                            survival_cross_kernel(cross_variant, pop, i, j, grid[k], grid[l]);
                        const auto r = static_cast<Eigen::Index>(2 * (i * g + k));
                        const auto c = static_cast<Eigen::Index>(2 * (j * g + l));
                        out.block<2, 2>(r, c) = block;
                    }
                }
            }
        }
        return out;
    }
    const auto dim = static_cast<Eigen::Index>(m * g);
    Eigen::MatrixXd out(dim, dim);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t k = 0; k < g; ++k) {
            for (std::size_t j = 0; j < m; ++j) {
                for (std::size_t l = 0; l < g; ++l) {
                    out(static_cast<Eigen::Index>(i * g + k), static_cast<Eigen::Index>(j * g + l)) =
                        kernel(kind, pop, i, j, grid[k], grid[l]);
                }
            }
        }
    }
    return out;
}

double min_eigenvalue(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

const char* to_string(KernelKind kind) {
    switch (kind) {
        case KernelKind::PermIndicator: return "perm_indicator";
        case KernelKind::BootIndicator: return "boot_indicator";
        case KernelKind::PermSurvivalNA: return "perm_na";
        case KernelKind::BootSurvivalNA: return "boot_na";
        case KernelKind::PermKM: return "perm_km";
        case KernelKind::BootKM: return "boot_km";
        case KernelKind::SurvivalCross: return "survival_cross";
    }
    return "unknown";
}

KernelKind kernel_kind_from_string(const std::string& name) {
    for (auto k : {KernelKind::PermIndicator, KernelKind::BootIndicator, KernelKind::PermSurvivalNA,
                   KernelKind::BootSurvivalNA, KernelKind::PermKM, KernelKind::BootKM,
                   KernelKind::SurvivalCross}) {
        if (name == to_string(k)) return k;
    }
    throw ContractError("unknown kernel kind '" + name + "'");
}

}  // namespace permboot
