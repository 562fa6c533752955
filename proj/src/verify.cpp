#include "permboot/verify.hpp"

#include "permboot/accumulate.hpp"
#include "permboot/counterexample.hpp"
#include "permboot/errors.hpp"
#include "permboot/functionals.hpp"
#include "permboot/io.hpp"
#include "permboot/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

namespace permboot {

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kDrawStream = 2;
constexpr std::uint64_t kLadderStream = 100;
constexpr std::uint64_t kGaussianStream = 7;
constexpr std::uint64_t kMaxRedraws = 1000;

std::size_t total(const std::vector<std::size_t>& sizes) {
    return std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
}

// Smallest order statistic x with ECDF(x) >= p.
double order_quantile(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    const auto n = static_cast<double>(xs.size());
    auto k = static_cast<std::size_t>(std::ceil(p * n));
    k = std::clamp<std::size_t>(k, 1, xs.size());
    return xs[k - 1];
}

bool tau_supported(const PooledData& data, double tau) {
    for (std::size_t j = 0; j < data.num_groups(); ++j) {
        bool any = false;
        for (std::size_t i = data.cumulative[j]; i < data.cumulative[j + 1]; ++i) {
            if (data.pooled[i].value >= tau) {
                any = true;
                break;
            }
        }
        if (!any) return false;
    }
    return true;
}

std::vector<Variant> variants_of(ResampleChoice c) {
    switch (c) {
        case ResampleChoice::Perm: return {Variant::Perm};
        case ResampleChoice::Boot: return {Variant::Boot};
        case ResampleChoice::Both: return {Variant::Perm, Variant::Boot};
    }
    return {};
}

std::vector<std::string> cell_labels(Scenario scenario, std::size_t groups, std::size_t grid) {
    std::vector<std::string> labels;
    if (scenario == Scenario::WilcoxonStat) return {"w"};
    if (scenario == Scenario::RMST) {
        for (std::size_t j = 0; j < groups; ++j) labels.push_back("g" + std::to_string(j + 1));
        return labels;
    }
    for (std::size_t j = 0; j < groups; ++j) {
        for (std::size_t k = 0; k < grid; ++k) {
            labels.push_back("g" + std::to_string(j + 1) + "[" + std::to_string(k) + "]");
        }
    }
    return labels;
}

// Variance of int H dG2 + int G1 dH with Cov(G_i(s), G_j(t)) = c_ij (H(min) - H(s)H(t)),
// H the pooled ECDF.
double wilcoxon_plugin_variance(const StepFn& h, double c11, double c12, double c22) {
    const auto k = h.size();
    std::vector<double> hv(h.levels().begin(), h.levels().end());
    std::vector<double> a(k), b(k);
    for (std::size_t i = 0; i < k; ++i) {
        a[i] = h.jump(i);
        b[i] = hv[i] - (i + 1 < k ? hv[i + 1] : 1.0);
    }
    CompensatedSum aa, ab, bb;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t l = 0; l < k; ++l) {
            const double s = hv[std::min(i, l)] - hv[i] * hv[l];
            aa.add(a[i] * a[l] * s);
            ab.add(a[i] * b[l] * s);
            bb.add(b[i] * b[l] * s);
        }
    }
    return c11 * aa.value() + 2.0 * c12 * ab.value() + c22 * bb.value();
}

// sum over atoms u of K in [0, tau] of R(u)^2 dK(u), R(u) = int_u^tau S.
double rmst_plugin_form(const EmpiricalSurvivalPopulation& pop, double tau) {
    const StepFn& s = pop.km();
    const auto& k = pop.km_integral_curve();
    if (!k) throw SingularityError("rmst kernel: hazard jump of 1", tau);
    const double whole = rmst(s, tau);
    auto tail = [&](double u) { return u <= 0.0 ? whole : whole - rmst(s, u); };
    CompensatedSum acc;
    const double r0 = tail(0.0);
    acc.add(r0 * r0 * k->base());
    for (std::size_t i = 0; i < k->size(); ++i) {
        const double u = k->breakpoints()[i];
        const double r = tail(u);
        acc.add(r * r * k->jump(i));
    }
    return acc.value();
}

}  // namespace

void validate(const ExperimentConfig& c) {
    const std::size_t m = c.sizes.size();
    if (m < 2) throw ContractError("config: need at least two groups");
    if (c.group_laws.size() != m) throw ContractError("config: one group law per group");
    for (const auto& l : c.group_laws) validate(l);
    if (!c.censoring_laws.empty()) {
        if (c.censoring_laws.size() != m) throw ContractError("config: one censoring law per group");
        for (const auto& l : c.censoring_laws) {
            if (l) validate(*l);
        }
        if (!is_survival(c.scenario)) {
            throw ContractError("config: censoring laws need a survival scenario");
        }
    }
    for (auto n : c.sizes) {
        if (n < 2) throw ContractError("config: every group needs at least two observations");
    }
    if (c.outer_reps < 1) throw ContractError("config: outer_reps must be positive");
    if (!c.exhaustive && c.draws < 100) throw ContractError("config: draws must be at least 100");
    if (c.exhaustive) {
        if (total(c.sizes) > kMaxExhaustive) {
            throw ContractError("config: exhaustive mode needs N <= " +
                                std::to_string(kMaxExhaustive));
        }
        if (c.resample != ResampleChoice::Perm) {
            throw ContractError("config: exhaustive mode enumerates permutations only");
        }
    }
    if (!(c.tolerance.abs_tol > 0.0)) throw ContractError("config: abs_tol must be positive");
    if (!(c.tolerance.se_multiplier >= 2.0)) {
        throw ContractError("config: se_multiplier must be at least 2");
    }
    if (!(c.tolerance.independence_se_multiplier > 0.0)) {
        throw ContractError("config: independence_se_multiplier must be positive");
    }
    const bool surv = is_survival(c.scenario);
    if (surv && c.tau.mode == TauSpec::Mode::None) {
        throw ContractError("config: survival scenarios need tau");
    }
    if (c.tau.mode == TauSpec::Mode::PooledQuantile && !(c.tau.value > 0.0 && c.tau.value < 1.0)) {
        throw ContractError("config: pooled tau quantile must lie in (0, 1)");
    }
    if (c.tau.mode == TauSpec::Mode::Fixed && !(c.tau.value > 0.0)) {
        throw ContractError("config: tau must be positive");
    }
    const bool uses_grid =
        c.scenario != Scenario::WilcoxonStat && c.scenario != Scenario::RMST;
    if (uses_grid) {
        switch (c.grid.mode) {
            case GridSpec::Mode::Explicit:
                if (c.grid.values.empty()) throw ContractError("config: empty grid");
                for (std::size_t k = 1; k < c.grid.values.size(); ++k) {
                    if (!(c.grid.values[k - 1] < c.grid.values[k])) {
                        throw ContractError("config: grid must be strictly increasing");
                    }
                }
                if (surv && c.grid.values.front() < 0.0) {
                    throw ContractError("config: survival grid must be nonnegative");
                }
                break;
            case GridSpec::Mode::PooledDeciles:
                if (surv) throw ContractError("config: survival grids are explicit or tau fractions");
                break;
            case GridSpec::Mode::TauFractions:
                if (!surv) throw ContractError("config: tau fractions need a survival scenario");
                if (c.grid.values.empty()) throw ContractError("config: empty grid");
                for (std::size_t k = 0; k < c.grid.values.size(); ++k) {
                    const double f = c.grid.values[k];
                    if (!(f > 0.0 && f <= 1.0)) {
                        throw ContractError("config: tau fractions must lie in (0, 1]");
                    }
                    if (k > 0 && !(c.grid.values[k - 1] < f)) {
                        throw ContractError("config: tau fractions must increase");
                    }
                }
                break;
        }
    }
    if (c.target == TargetKind::FiniteN && c.scenario != Scenario::PlainIndicator) {
        throw ContractError("config: the finite-N target exists for plain_indicator only");
    }
    if (c.target == TargetKind::Limit) {
        if (c.scenario == Scenario::RMST) {
            throw ContractError("config: no limit target for rmst; use plug-in");
        }
        if (c.scenario != Scenario::PlainIndicator) {
            for (const auto& l : c.group_laws) {
                if (!is_continuous(l)) throw ContractError("config: limit target needs continuous laws");
            }
            for (const auto& l : c.censoring_laws) {
                if (l && !is_continuous(*l)) {
                    throw ContractError("config: limit target needs continuous laws");
                }
            }
        }
    }
    for (auto n : c.size_ladder) {
        if (n < 2 * m) throw ContractError("config: ladder sizes too small for the groups");
    }
}

MultiSampleData simulate_dataset(const ExperimentConfig& config,
                                 const std::vector<std::size_t>& sizes, std::uint64_t rep,
                                 std::uint64_t attempt) {
    Rng rng(derive_seed(config.seed, kDataStream, rep, attempt));
    const bool surv = is_survival(config.scenario);
    std::vector<std::vector<Observation>> groups(sizes.size());
    for (std::size_t j = 0; j < sizes.size(); ++j) {
        groups[j].reserve(sizes[j]);
        for (std::size_t i = 0; i < sizes[j]; ++i) {
            const double t = sample(config.group_laws[j], rng);
            if (surv && !config.censoring_laws.empty() && config.censoring_laws[j]) {
                const double c = sample(*config.censoring_laws[j], rng);
                groups[j].push_back({std::min(t, c), t <= c});
            } else {
                groups[j].push_back({t, true});
            }
        }
    }
    return MultiSampleData(surv ? SampleKind::Censored : SampleKind::Plain, std::move(groups));
}

double realized_tau(const ExperimentConfig& config, const PooledData& data) {
    switch (config.tau.mode) {
        case TauSpec::Mode::None: return 0.0;
        case TauSpec::Mode::Fixed: return config.tau.value;
        case TauSpec::Mode::PooledQuantile: return order_quantile(data.values(), config.tau.value);
    }
    return 0.0;
}

std::vector<double> realized_grid(const ExperimentConfig& config, const PooledData& data,
                                  double tau) {
    if (config.scenario == Scenario::WilcoxonStat || config.scenario == Scenario::RMST) return {};
    switch (config.grid.mode) {
        case GridSpec::Mode::Explicit: return config.grid.values;
        case GridSpec::Mode::PooledDeciles: {
            std::vector<double> g;
            const auto values = data.values();
            for (int k = 1; k <= 9; ++k) g.push_back(order_quantile(values, k / 10.0));
            return g;
        }
        case GridSpec::Mode::TauFractions: {
            std::vector<double> g;
            for (double f : config.grid.values) g.push_back(f == 1.0 ? tau : f * tau);
            return g;
        }
    }
    return {};
}

Eigen::MatrixXd target_kernel(const ExperimentConfig& config, Variant variant,
                              const PooledData& data, std::span<const double> grid, double tau) {
    const LambdaVector lambdas = LambdaVector::from_sizes(data.sizes);
    const bool perm = variant == Variant::Perm;
    switch (config.scenario) {
        case Scenario::PlainIndicator: {
            const PooledPopulation pop = config.target == TargetKind::Limit
                                             ? analytic_population(config.group_laws, lambdas)
                                             : empirical_population(pooled_ecdf(data), lambdas);
            Eigen::MatrixXd k = assemble_kernel(
                perm ? KernelKind::PermIndicator : KernelKind::BootIndicator, variant, pop, grid);
            if (config.target == TargetKind::FiniteN && perm) {
                const auto n = static_cast<double>(data.total());
                k *= n / (n - 1.0);
            }
            return k;
        }
        case Scenario::SurvivalNA:
        case Scenario::SurvivalKM: {
            PooledPopulation pop =
                config.target == TargetKind::Limit
                    ? analytic_survival_population(
                          config.group_laws,
                          config.censoring_laws.empty()
                              ? std::vector<std::optional<Law>>(config.group_laws.size())
                              : config.censoring_laws,
                          lambdas, tau)
                    : empirical_survival_population(pooled_bundle(data, tau), lambdas);
            const bool na = config.scenario == Scenario::SurvivalNA;
            const KernelKind kind = na ? (perm ? KernelKind::PermSurvivalNA : KernelKind::BootSurvivalNA)
                                       : (perm ? KernelKind::PermKM : KernelKind::BootKM);
            return assemble_kernel(kind, variant, pop, grid);
        }
        case Scenario::WilcoxonStat: {
            const double c11 = coeff(variant, lambdas, 0, 0);
            const double c12 = coeff(variant, lambdas, 0, 1);
            const double c22 = coeff(variant, lambdas, 1, 1);
            Eigen::MatrixXd k(1, 1);
            if (config.target == TargetKind::Limit) {
                k(0, 0) = (c11 - 2.0 * c12 + c22) / 12.0;
            } else {
                k(0, 0) = wilcoxon_plugin_variance(pooled_ecdf(data), c11, c12, c22);
            }
            return k;
        }
        case Scenario::RMST: {
            const EmpiricalSurvivalPopulation pop(pooled_bundle(data, tau));
            const double q = rmst_plugin_form(pop, tau);
            const auto m = static_cast<Eigen::Index>(data.num_groups());
            Eigen::MatrixXd k(m, m);
            for (Eigen::Index i = 0; i < m; ++i) {
                for (Eigen::Index j = 0; j < m; ++j) {
                    k(i, j) = coeff(variant, lambdas, static_cast<std::size_t>(i),
                                    static_cast<std::size_t>(j)) *
                              q;
                }
            }
            return k;
        }
    }
    throw ContractError("target_kernel: unknown scenario");
}

ComparisonResult compare_cells(const std::string& variant,
                               const std::vector<Eigen::MatrixXd>& estimates,
                               const std::vector<Eigen::MatrixXd>& kernels,
                               const ToleranceSpec& tol, std::size_t per_group) {
    if (estimates.empty() || estimates.size() != kernels.size()) {
        throw ContractError("compare_cells: need one kernel per estimate");
    }
    ComparisonResult out;
    out.variant = variant;
    const auto dim = static_cast<std::size_t>(estimates.front().rows());
    const bool boot = variant == "boot";
    std::size_t passing = 0;
    std::vector<double> dev(estimates.size()), est(estimates.size()), ker(estimates.size());
    for (std::size_t r = 0; r < dim; ++r) {
        for (std::size_t c = r; c < dim; ++c) {
            for (std::size_t rep = 0; rep < estimates.size(); ++rep) {
                const auto ri = static_cast<Eigen::Index>(r), ci = static_cast<Eigen::Index>(c);
                est[rep] = estimates[rep](ri, ci);
                ker[rep] = kernels[rep](ri, ci);
                dev[rep] = est[rep] - ker[rep];
            }
            const SampleSummary d = summarize(dev);
            CellResult cell;
            cell.row = r;
            cell.col = c;
            cell.kernel = summarize(ker).mean;
            cell.estimate = summarize(est).mean;
            cell.se = d.se;
            cell.deviation = d.mean;
            cell.cross_group = per_group > 0 && r / per_group != c / per_group;
            cell.pass = std::abs(d.mean) <= std::max(tol.abs_tol, tol.se_multiplier * d.se);
            if (boot && cell.cross_group) {
                cell.pass = cell.pass && std::abs(cell.estimate) <=
                                             tol.independence_se_multiplier * summarize(est).se;
            }
            out.max_abs_dev = std::max(out.max_abs_dev, std::abs(d.mean));
            if (cell.pass) ++passing;
            out.cells.push_back(cell);
        }
    }
    out.pass_fraction = static_cast<double>(passing) / static_cast<double>(out.cells.size());
    out.passed = passing == out.cells.size();
    return out;
}

VerifyReport conditional_cov_experiment(const ExperimentConfig& config, std::size_t threads) {
    validate(config);
    const auto start = std::chrono::steady_clock::now();
    const auto variants = variants_of(config.resample);
    const std::size_t reps = config.outer_reps;

    struct RepResult {
        std::vector<Eigen::MatrixXd> estimates;
        std::vector<Eigen::MatrixXd> kernels;
        std::vector<double> grid;
        double tau = 0.0;
        std::size_t redraws = 0;
    };
    std::vector<RepResult> results(reps);

    parallel_for(reps, threads, [&](std::size_t rep) {
        RepResult& res = results[rep];
        std::uint64_t attempt = 0;
        MultiSampleData data = simulate_dataset(config, config.sizes, rep, attempt);
        PooledData pooled = pool(data);
        double tau = realized_tau(config, pooled);
        while (is_survival(config.scenario) && !tau_supported(pooled, tau)) {
            if (++attempt > kMaxRedraws) {
                throw ContractError("verify: no dataset with every group at risk at tau (rep " +
                                    std::to_string(rep) + ")");
            }
            data = simulate_dataset(config, config.sizes, rep, attempt);
            pooled = pool(data);
            tau = realized_tau(config, pooled);
        }
        res.redraws = attempt;
        res.tau = tau;
        res.grid = realized_grid(config, pooled, tau);

        try {
            auto evaluator = make_evaluator(config.scenario, pooled, res.grid, tau);
            std::vector<double> x(evaluator->dim());
            std::vector<std::size_t> assignment(pooled.total());
            for (std::size_t v = 0; v < variants.size(); ++v) {
                CovarianceAccumulator acc(evaluator->dim());
                if (config.exhaustive) {
                    for (const auto& d : all_permutations(pooled.total())) {
                        evaluator->evaluate(d.assignment, x);
                        acc.add(x);
                    }
                } else {
                    for (std::size_t b = 0; b < config.draws; ++b) {
                        Rng rng(derive_seed(config.seed, kDrawStream + v, rep, b));
                        if (variants[v] == Variant::Perm) {
                            permute_into(assignment, rng);
                        } else {
                            bootstrap_into(assignment, pooled.total(), rng);
                        }
                        evaluator->evaluate(assignment, x);
                        acc.add(x);
                    }
                }
                res.estimates.push_back(acc.covariance());
                res.kernels.push_back(target_kernel(config, variants[v], pooled, res.grid, tau));
            }
        } catch (const SingularityError& e) {
            const auto s = derive_seed(config.seed, kDataStream, rep, attempt);
            throw SingularityError(std::string(e.what()) + " (dataset rep " + std::to_string(rep) +
                                       ", seed " + std::to_string(s.master) + "/" +
                                       std::to_string(s.stream) + ")",
                                   e.time());
        }
    });

    VerifyReport report;
    report.config = config;
    const std::size_t g = results.front().grid.size();
    report.mean_grid.assign(g, 0.0);
    for (std::size_t k = 0; k < g; ++k) {
        CompensatedSum s;
        for (const auto& r : results) s.add(r.grid[k]);
        report.mean_grid[k] = s.value() / static_cast<double>(reps);
    }
    CompensatedSum tau_sum;
    for (const auto& r : results) {
        tau_sum.add(r.tau);
        report.redrawn_datasets += r.redraws;
    }
    report.mean_tau = tau_sum.value() / static_cast<double>(reps);

    const std::size_t m = config.sizes.size();
    const std::size_t per_group = config.scenario == Scenario::WilcoxonStat ? 1
                                  : config.scenario == Scenario::RMST        ? 1
                                                                             : g;
    report.passed = true;
    for (std::size_t v = 0; v < variants.size(); ++v) {
        std::vector<Eigen::MatrixXd> est, ker;
        for (const auto& r : results) {
            est.push_back(r.estimates[v]);
            ker.push_back(r.kernels[v]);
        }
        auto cmp = compare_cells(variants[v] == Variant::Perm ? "perm" : "boot", est, ker,
                                 config.tolerance,
                                 config.scenario == Scenario::WilcoxonStat ? 0 : per_group);
        cmp.labels = cell_labels(config.scenario, m, g);
        report.passed = report.passed && cmp.passed;
        report.comparisons.push_back(std::move(cmp));
    }
    report.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

double linearization_residual(Scenario scenario, const PooledData& data, const ResampleDraw& draw,
                              std::span<const double> grid, double tau) {
    const double root = std::sqrt(static_cast<double>(data.total()));
    double sup = 0.0;
    if (scenario == Scenario::PlainIndicator || scenario == Scenario::WilcoxonStat) {
        const auto groups = resampled_group_ecdfs(data, draw);
        const StepFn h = pooled_ecdf(data);
        if (scenario == Scenario::PlainIndicator) {
            for (const auto& f : groups) {
                const StepFn g = scale(difference(f, h), root);
                for (double t : grid) sup = std::max(sup, std::abs(root * (f(t) - h(t)) - g(t)));
            }
            return sup;
        }
        const StepFn g1 = scale(difference(groups[0], h), root);
        const StepFn g2 = scale(difference(groups[1], h), root);
        const StepFn stat = wilcoxon_curve(groups[0], groups[1]);
        const StepFn base = wilcoxon_curve(h, h);
        const StepFn lin = wilcoxon_derivative(h, h, g1, g2);
        for (double t : grid) {
            sup = std::max(sup, std::abs(root * (stat(t) - base(t)) - lin(t)));
        }
        return sup;
    }
    const HazardBundle pooled = pooled_bundle(data, tau);
    const StepFn na_pooled = nelson_aalen(pooled);
    const StepFn km_pooled = kaplan_meier(pooled);
    for (const auto& g : resampled_group_survival(data, draw)) {
        const HazardBundle b{g.at_risk, g.uncensored, tau};
        const StepFn alpha = scale(difference(g.at_risk, pooled.at_risk), root);
        const StepFn beta = scale(difference(g.uncensored, pooled.uncensored), root);
        if (scenario == Scenario::SurvivalNA) {
            const StepFn na = nelson_aalen(b);
            const StepFn lin = nelson_aalen_derivative(pooled, alpha, beta);
            for (double t : grid) {
                sup = std::max(sup, std::abs(root * (na(t) - na_pooled(t)) - lin(t)));
            }
        } else if (scenario == Scenario::SurvivalKM) {
            const StepFn km = kaplan_meier(b);
            const StepFn lin = km_derivative(pooled, alpha, beta);
            for (double t : grid) {
                sup = std::max(sup, std::abs(root * (km(t) - km_pooled(t)) - lin(t)));
            }
        } else {
            const double lhs = root * (rmst(kaplan_meier(b), tau) - rmst(km_pooled, tau));
            const double lin = rmst_derivative(km_derivative(pooled, alpha, beta), tau);
            sup = std::max(sup, std::abs(lhs - lin));
        }
    }
    return sup;
}

LinearizationReport linearization_residual_experiment(const ExperimentConfig& config,
                                                      std::size_t threads) {
    validate(config);
    if (config.size_ladder.empty()) throw ContractError("linearization: empty size ladder");
    LinearizationReport report;
    report.config = config;
    const std::size_t base_total = total(config.sizes);
    const bool perm = config.resample != ResampleChoice::Boot;

    for (std::size_t step = 0; step < config.size_ladder.size(); ++step) {
        const std::size_t n_total = config.size_ladder[step];
        std::vector<std::size_t> sizes(config.sizes.size());
        std::size_t assigned = 0;
        for (std::size_t j = 0; j + 1 < sizes.size(); ++j) {
            sizes[j] = static_cast<std::size_t>(std::llround(
                static_cast<double>(n_total) * static_cast<double>(config.sizes[j]) /
                static_cast<double>(base_total)));
            assigned += sizes[j];
        }
        sizes.back() = n_total - assigned;

        ExperimentConfig cfg = config;
        cfg.seed = derive_seed(config.seed, kLadderStream, step, 0);
        cfg.seed.master = config.seed.master;
        std::vector<std::vector<double>> residuals(config.outer_reps);
        parallel_for(config.outer_reps, threads, [&](std::size_t rep) {
            std::uint64_t attempt = 0;
            PooledData pooled = pool(simulate_dataset(cfg, sizes, rep, attempt));
            double tau = realized_tau(cfg, pooled);
            while (is_survival(cfg.scenario) && !tau_supported(pooled, tau)) {
                if (++attempt > kMaxRedraws) {
                    throw ContractError("linearization: no dataset with every group at risk at tau");
                }
                pooled = pool(simulate_dataset(cfg, sizes, rep, attempt));
                tau = realized_tau(cfg, pooled);
            }
            std::vector<double> grid = realized_grid(cfg, pooled, tau);
            if (cfg.scenario == Scenario::WilcoxonStat) {
                const auto values = pooled.values();
                for (int k = 1; k <= 9; ++k) grid.push_back(order_quantile(values, k / 10.0));
            }
            auto& out = residuals[rep];
            for (std::size_t b = 0; b < cfg.draws; ++b) {
                const SeedSpec s = derive_seed(cfg.seed, kDrawStream, rep, b);
                const ResampleDraw d =
                    perm ? draw_permutation(pooled, s) : draw_bootstrap(pooled, s);
                out.push_back(linearization_residual(cfg.scenario, pooled, d, grid, tau));
            }
        });
        std::vector<double> all;
        for (const auto& r : residuals) all.insert(all.end(), r.begin(), r.end());
        LadderStep ls;
        ls.total_size = n_total;
        ls.draws = all.size();
        ls.median = sample_quantile(all, 0.5);
        ls.q10 = sample_quantile(all, 0.1);
        ls.q90 = sample_quantile(all, 0.9);
        ls.max = *std::max_element(all.begin(), all.end());
        report.steps.push_back(ls);
    }
    return report;
}

std::vector<double> hadamard_ratio_check(const StepFunctional& phi,
                                         const StepDerivative& derivative,
                                         const RatioSequence& seq) {
    if (seq.theta.size() != seq.t.size() || seq.h.size() != seq.t.size()) {
        throw ContractError("hadamard_ratio_check: sequences differ in length");
    }
    const StepFn reference = derivative(seq.theta_limit, seq.h_limit);
    std::vector<double> out;
    for (std::size_t n = 0; n < seq.t.size(); ++n) {
        const double t = seq.t[n];
        std::vector<StepFn> moved;
        for (std::size_t k = 0; k < seq.theta[n].size(); ++k) {
            const StepFn parts[] = {seq.theta[n][k], seq.h[n][k]};
            const double coeffs[] = {1.0, t};
            moved.push_back(affine_combine(coeffs, parts));
        }
        StepFn moved_value = StepFn::constant(0.0, 1.0, 0.0);
        StepFn base_value = StepFn::constant(0.0, 1.0, 0.0);
        try {
            moved_value = phi(moved);
            base_value = phi(seq.theta[n]);
        } catch (const std::domain_error& e) {
            throw DomainError("hadamard_ratio_check: index " + std::to_string(n) + ": " + e.what());
        }
        const StepFn parts[] = {moved_value, base_value, reference};
        const double coeffs[] = {1.0 / t, -1.0 / t, -1.0};
        out.push_back(sup_norm(affine_combine(coeffs, parts)));
    }
    return out;
}

namespace {

constexpr int kRatioGrid = 32;

StepFn grid_fn(const std::function<double(double)>& level) {
    std::vector<double> bps, levels;
    for (int k = 1; k <= kRatioGrid; ++k) {
        const double x = static_cast<double>(k) / kRatioGrid;
        bps.push_back(x);
        levels.push_back(level(x));
    }
    return StepFn::from_levels(0.0, 1.0, level(0.0), std::move(bps), std::move(levels));
}

StepFn plus(const StepFn& a, const StepFn& b, double c) {
    const StepFn parts[] = {a, b};
    const double coeffs[] = {1.0, c};
    return affine_combine(coeffs, parts);
}

}  // namespace

RatioSequence builtin_ratio_sequence(FunctionalId id, const std::vector<long long>& n_values) {
    RatioSequence seq;
    std::vector<StepFn> theta, g, h, k;
    if (id == FunctionalId::Wilcoxon) {
        theta = {grid_fn([](double x) { return x; }), grid_fn([](double x) { return x * x; })};
        g = {grid_fn([](double x) { return 0.3 * std::sin(2.0 * std::numbers::pi * x); }),
             grid_fn([](double x) { return 0.2 * x * (1.0 - x); })};
        h = {grid_fn([](double x) { return std::cos(3.0 * x); }),
             grid_fn([](double x) { return std::pow(x, 1.5); })};
        k = {grid_fn([](double x) { return 0.5 * x; }),
             grid_fn([](double x) { return -0.25 * x * x; })};
    } else if (id == FunctionalId::ProductIntegral) {
        theta = {grid_fn([](double x) { return 0.8 * std::sin(5.0 * x); })};
        g = {grid_fn([](double x) { return 0.3 * std::cos(2.0 * x) - 0.3; })};
        h = {grid_fn([](double x) { return x * (2.0 - x); })};
        k = {grid_fn([](double x) { return 0.5 * std::sin(7.0 * x); })};
    } else {
        throw ContractError("builtin_ratio_sequence: the quantile uses the counterexample table");
    }
    seq.theta_limit = theta;
    seq.h_limit = h;
    for (long long n : n_values) {
        if (n < 1) throw ContractError("builtin_ratio_sequence: n must be positive");
        const double t = 1.0 / std::sqrt(static_cast<double>(n));
        std::vector<StepFn> tn, hn;
        for (std::size_t i = 0; i < theta.size(); ++i) {
            tn.push_back(plus(theta[i], g[i], t));
            hn.push_back(plus(h[i], k[i], t));
        }
        seq.t.push_back(t);
        seq.theta.push_back(std::move(tn));
        seq.h.push_back(std::move(hn));
    }
    return seq;
}

std::vector<double> hadamard_ratio_check(FunctionalId id, const std::vector<long long>& n_values) {
    if (id == FunctionalId::Quantile) {
        std::vector<double> gaps;
        for (const auto& row : inverse_counterexample(n_values)) gaps.push_back(row.gap);
        return gaps;
    }
    const RatioSequence seq = builtin_ratio_sequence(id, n_values);
    if (id == FunctionalId::Wilcoxon) {
        return hadamard_ratio_check(
            [](std::span<const StepFn> a) { return wilcoxon_curve(a[0], a[1]); },
            [](std::span<const StepFn> a, std::span<const StepFn> d) {
                return wilcoxon_derivative(a[0], a[1], d[0], d[1]);
            },
            seq);
    }
    return hadamard_ratio_check(
        [](std::span<const StepFn> a) { return product_integral(a[0]); },
        [](std::span<const StepFn> a, std::span<const StepFn> d) {
            return prodint_derivative(a[0], d[0]);
        },
        seq);
}

double standard_normal(Rng& rng) {
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& covariance) {
    if (covariance.rows() != covariance.cols()) {
        throw ContractError("GaussianSampler: covariance must be square");
    }
    if (covariance.size() == 0) {
        root_ = covariance;
        return;
    }
    const Eigen::MatrixXd sym = 0.5 * (covariance + covariance.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    const Eigen::VectorXd ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -1e-10 * scale) {
        throw ContractError("GaussianSampler: covariance is not positive semidefinite (eigenvalue " +
                            format_real(ev.minCoeff()) + ")");
    }
    const Eigen::VectorXd roots = ev.cwiseMax(0.0).cwiseSqrt();
    root_ = es.eigenvectors() * roots.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd GaussianSampler::draw(Rng& rng) const {
    Eigen::VectorXd z(root_.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = standard_normal(rng);
    return root_ * z;
}

Eigen::VectorXd simulate_grid_gaussian(const Eigen::MatrixXd& covariance, SeedSpec seed) {
    Rng rng(seed);
    return GaussianSampler(covariance).draw(rng);
}

ComparisonResult calibration_self_test(const Eigen::MatrixXd& covariance, std::size_t draws,
                                       std::size_t reps, const ToleranceSpec& tol, SeedSpec seed,
                                       std::size_t threads) {
    const GaussianSampler sampler(covariance);
    const auto dim = static_cast<std::size_t>(covariance.rows());
    std::vector<Eigen::MatrixXd> estimates(reps), kernels(reps, covariance);
    parallel_for(reps, threads, [&](std::size_t rep) {
        Rng rng(derive_seed(seed, kGaussianStream, rep, 0));
        CovarianceAccumulator acc(dim);
        std::vector<double> x(dim);
        for (std::size_t b = 0; b < draws; ++b) {
            const Eigen::VectorXd v = sampler.draw(rng);
            for (std::size_t i = 0; i < dim; ++i) x[i] = v(static_cast<Eigen::Index>(i));
            acc.add(x);
        }
        estimates[rep] = acc.covariance();
    });
    auto out = compare_cells("gaussian", estimates, kernels, tol, dim);
    for (std::size_t i = 0; i < dim; ++i) out.labels.push_back("x" + std::to_string(i));
    return out;
}

ExhaustiveOracle exhaustive_indicator_oracle(const MultiSampleData& data,
                                             std::span<const double> grid) {
    if (data.kind() != SampleKind::Plain) throw ContractError("exhaustive oracle: plain data only");
    const PooledData pooled = pool(data);
    const std::size_t n = pooled.total();
    const std::size_t m = pooled.num_groups();
    const std::size_t g = grid.size();
    const std::size_t dim = m * g;
    const auto perms = all_permutations(n);
    const auto p = static_cast<std::int64_t>(perms.size());
    const auto nn = static_cast<std::int64_t>(n);

    std::vector<std::int64_t> pooled_count(g);
    for (std::size_t k = 0; k < g; ++k) {
        for (const auto& o : pooled.pooled) pooled_count[k] += o.value <= grid[k] ? 1 : 0;
    }
    auto pooled_min = [&](std::size_t k, std::size_t l) {
        return grid[k] <= grid[l] ? pooled_count[k] : pooled_count[l];
    };

    std::vector<std::int64_t> s1(dim, 0), s2(dim * dim, 0), c(dim);
    auto evaluator = make_evaluator(Scenario::PlainIndicator, pooled, grid, 0.0);
    CovarianceAccumulator acc(dim);
    std::vector<double> x(dim);
    for (const auto& d : perms) {
        for (std::size_t j = 0; j < m; ++j) {
            for (std::size_t k = 0; k < g; ++k) {
                std::int64_t cnt = 0;
                for (std::size_t pos = pooled.cumulative[j]; pos < pooled.cumulative[j + 1]; ++pos) {
                    cnt += pooled.pooled[d.assignment[pos]].value <= grid[k] ? 1 : 0;
                }
                c[j * g + k] = cnt;
            }
        }
        for (std::size_t a = 0; a < dim; ++a) {
            s1[a] += c[a];
            for (std::size_t b = 0; b < dim; ++b) s2[a * dim + b] += c[a] * c[b];
        }
        evaluator->evaluate(d.assignment, x);
        acc.add(x);
    }

    ExhaustiveOracle out;
    out.permutations = perms.size();
    const StepFn h = pooled_ecdf(pooled);
    for (double t : grid) out.pooled.push_back(h(t));
    out.group_mean.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(g));
    out.mean_exact = true;
    for (std::size_t j = 0; j < m; ++j) {
        const auto nj = static_cast<std::int64_t>(pooled.sizes[j]);
        for (std::size_t k = 0; k < g; ++k) {
            const std::int64_t sum = s1[j * g + k];
            const double mean = static_cast<double>(sum) / static_cast<double>(nj * p);
            out.group_mean(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = mean;
            out.mean_exact = out.mean_exact && sum * nn == pooled_count[k] * nj * p &&
                             mean == out.pooled[k];
        }
    }
    const Eigen::VectorXd centered_mean = acc.mean();
    out.centered_mean_zero = (centered_mean.array() == 0.0).all();

    const auto d = static_cast<Eigen::Index>(dim);
    out.enumerated.resize(d, d);
    out.closed_form.resize(d, d);
    out.closed_form_exact = true;
    for (std::size_t a = 0; a < dim; ++a) {
        const std::size_t j = a / g, k = a % g;
        const auto nj = static_cast<std::int64_t>(pooled.sizes[j]);
        for (std::size_t b = 0; b < dim; ++b) {
            const std::size_t i = b / g, l = b % g;
            const auto ni = static_cast<std::int64_t>(pooled.sizes[i]);
            const std::int64_t num = nn * (p * s2[a * dim + b] - s1[a] * s1[b]);
            const std::int64_t den = p * p * nj * ni;
            out.enumerated(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                static_cast<double>(num) / static_cast<double>(den);

            const std::int64_t delta = j == i ? 1 : 0;
            const std::int64_t bridge = nn * pooled_min(k, l) - pooled_count[k] * pooled_count[l];
            const std::int64_t lhs = nn * (p * s2[a * dim + b] - s1[a] * s1[b]) * (nn - 1) * nn * nn;
            const std::int64_t rhs = nn * (nn * delta - nj) * ni * p * p * bridge;
            out.closed_form_exact = out.closed_form_exact && lhs == rhs;

            const double hn_k = out.pooled[k], hn_l = out.pooled[l];
            const double hmin = grid[k] <= grid[l] ? hn_k : hn_l;
            const auto nd = static_cast<double>(n);
            out.closed_form(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) =
                nd / (nd - 1.0) * (static_cast<double>(delta) * nd / static_cast<double>(nj) - 1.0) *
                (hmin - hn_k * hn_l);
        }
    }
    out.monte_carlo = acc.covariance();
    out.mc_matches_enumeration = (out.monte_carlo.array() == out.enumerated.array()).all();
    return out;
}

}  // namespace permboot
