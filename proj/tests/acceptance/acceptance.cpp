// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "permboot/counterexample.hpp"
#include "permboot/empirical.hpp"
#include "permboot/functionals.hpp"
#include "permboot/io.hpp"
#include "permboot/parallel.hpp"
#include "permboot/report.hpp"
#include "permboot/verify.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

using namespace permboot;

namespace {

int failures = 0;

void report(int id, const std::string& what, bool pass, const std::string& detail) {
    std::cout << "criterion " << id << " [" << what << "]: " << (pass ? "PASS" : "FAIL") << "  "
              << detail << std::endl;
    if (!pass) ++failures;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ExperimentConfig indicator_config(ResampleChoice r) {
    ExperimentConfig c;
    c.name = r == ResampleChoice::Perm ? "perm_indicator" : "boot_indicator";
    c.scenario = Scenario::PlainIndicator;
    c.group_laws = {Exponential{1.0}, Exponential{1.5}};
    c.sizes = {200, 200};
    c.grid.mode = GridSpec::Mode::PooledDeciles;
    c.outer_reps = 100;
    c.draws = 2000;
    c.resample = r;
    c.seed = {42, 0};
    c.target = TargetKind::PlugIn;
    return c;
}

ExperimentConfig na_config() {
    ExperimentConfig c;
    c.name = "na_perm";
    c.scenario = Scenario::SurvivalNA;
    c.group_laws = {Exponential{1.0}, Exponential{1.0}};
    c.censoring_laws = {Law{Exponential{0.5}}, Law{Exponential{0.5}}};
    c.sizes = {300, 300};
    c.grid = {GridSpec::Mode::TauFractions, {0.2, 0.4, 0.6, 0.8, 1.0}};
    c.tau = {TauSpec::Mode::PooledQuantile, 0.8};
    c.outer_reps = 100;
    c.draws = 2000;
    c.resample = ResampleChoice::Perm;
    c.seed = {42, 0};
    c.target = TargetKind::Limit;
    c.tolerance.abs_tol = 0.05;
    return c;
}

std::string summary(const VerifyReport& r) {
    std::ostringstream os;
    for (const auto& c : r.comparisons) {
        std::size_t failed = 0;
        double worst_ratio = 0.0;
        for (const auto& cell : c.cells) {
            if (!cell.pass) ++failed;
            if (cell.se > 0) worst_ratio = std::max(worst_ratio, std::abs(cell.deviation) / cell.se);
        }
        os << c.variant << ": " << c.cells.size() - failed << "/" << c.cells.size()
           << " cells, max|dev| " << num(c.max_abs_dev) << ", max|dev|/SE " << num(worst_ratio) << "; ";
    }
    os << "redraws " << r.redrawn_datasets << ", " << num(r.runtime_seconds) << " s";
    return os.str();
}

std::string criterion_cov(int id, const std::string& what, const ExperimentConfig& c,
                          std::size_t threads) {
    const VerifyReport r = conditional_cov_experiment(c, threads);
    report(id, what, r.passed, summary(r));
    return dump_json(report_to_json(r));
}

void criterion3() {
    const auto data = MultiSampleData::plain({{0.5, 2.25}, {1.25, 3.5}});
    const std::vector<double> grid{1.0, 2.0, 3.0};
    const ExhaustiveOracle o = exhaustive_indicator_oracle(data, grid);

    ExperimentConfig c;
    c.name = "exhaustive";
    c.group_laws = {Uniform{0, 1}, Uniform{0, 1}};
    c.sizes = {2, 2};
    c.grid = {GridSpec::Mode::Explicit, {0.25, 0.5, 0.75}};
    c.exhaustive = true;
    c.outer_reps = 20;
    c.target = TargetKind::FiniteN;
    c.tolerance.abs_tol = 1e-15;
    const VerifyReport r = conditional_cov_experiment(c, 0);
    const bool pass = o.permutations == 24 && o.mean_exact && o.centered_mean_zero &&
                      o.closed_form_exact && o.mc_matches_enumeration && r.passed;
    std::ostringstream os;
    os << "24 permutations; mean == H_N: " << o.mean_exact << ", MC == enumeration: "
       << o.mc_matches_enumeration << ", closed form: " << o.closed_form_exact
       << ", simulated datasets vs finite-N kernel max|dev| " << num(r.comparisons[0].max_abs_dev);
    report(3, "exhaustive oracle", pass, os.str());
}

void criterion5() {
    std::vector<Observation> s{{1.0, true}, {2.0, false}, {3.0, true}};
    const HazardBundle b{at_risk_process(s), uncensored_subdist(s), 3.0};
    const StepFn km = kaplan_meier(b);
    const double r = rmst(km, 3.0);
    const double e1 = std::abs(km(1.0) - 2.0 / 3.0), e2 = std::abs(km(2.0) - 2.0 / 3.0),
                 e3 = std::abs(km(3.0)), e4 = std::abs(r - 7.0 / 3.0);
    const double worst = std::max({e1, e2, e3, e4});
    report(5, "Kaplan-Meier exactness", worst <= 1e-15,
           "S = (" + format_real(km(1.0)) + ", " + format_real(km(2.0)) + ", " +
               format_real(km(3.0)) + "), RMST(3) = " + format_real(r) + ", max error " + num(worst));
}

void criterion6() {
    Rng rng({2024, 6});
    double worst = 0.0;
    auto random_fn = [&] {
        const auto jumps = rng.below(21);
        std::vector<double> bps;
        for (std::uint64_t i = 0; i < jumps; ++i) bps.push_back(3.0 * rng.uniform_open());
        std::sort(bps.begin(), bps.end());
        bps.erase(std::unique(bps.begin(), bps.end()), bps.end());
        std::vector<double> js;
        for (std::size_t i = 0; i < bps.size(); ++i) js.push_back(-0.9 + 2.9 * rng.uniform_open());
        return StepFn(0.0, 3.0, 0.0, bps, js);
    };
    for (int pair = 0; pair < 1000; ++pair) {
        const StepFn a = random_fn(), b = random_fn();
        const StepFn pa = product_integral(a), pb = product_integral(b);
        const StepFn d = difference(b, a);
        std::vector<double> points(d.breakpoints().begin(), d.breakpoints().end());
        points.push_back(3.0);
        for (double t : points) {
            double rhs = 0.0, scale = std::abs(pa(t)) + std::abs(pb(t));
            for (std::size_t k = 0; k < d.size() && d.breakpoints()[k] <= t; ++k) {
                const double u = d.breakpoints()[k];
                const double term = pb.left_limit(u) * d.jump(k) * (pa(t) / pa(u));
                rhs += term;
                scale += std::abs(term);
            }
            worst = std::max(worst, std::abs(pb(t) - pa(t) - rhs) / scale);
        }
    }
    report(6, "Duhamel identity", worst <= 1e-12, "max relative residual " + num(worst));
}

void criterion7(std::size_t threads) {
    ExperimentConfig w;
    w.name = "wilcoxon_ladder";
    w.scenario = Scenario::WilcoxonStat;
    w.group_laws = {Exponential{1.0}, Exponential{1.5}};
    w.sizes = {50, 50};
    w.size_ladder = {100, 400, 1600};
    w.outer_reps = 20;
    w.draws = 100;
    w.seed = {42, 0};

    ExperimentConfig k;
    k.name = "km_ladder";
    k.scenario = Scenario::SurvivalKM;
    k.group_laws = {Exponential{1.0}, Exponential{1.0}};
    k.censoring_laws = {Law{Exponential{0.5}}, Law{Exponential{0.5}}};
    k.sizes = {50, 50};
    k.grid = {GridSpec::Mode::TauFractions, {1.0}};
    k.tau = {TauSpec::Mode::PooledQuantile, 0.8};
    k.size_ladder = {100, 400, 1600};
    k.outer_reps = 20;
    k.draws = 100;
    k.seed = {42, 0};

    bool pass = true;
    std::ostringstream os;
    for (auto* c : {&w, &k}) {
        const ExperimentConfig& cfg = *c;
        const auto r = linearization_residual_experiment(cfg, threads);
        bool decreasing = true;
        for (std::size_t i = 1; i < r.steps.size(); ++i) {
            decreasing = decreasing && r.steps[i].median < r.steps[i - 1].median;
        }
        const bool halved = r.steps.back().median < 0.5 * r.steps.front().median;
        pass = pass && decreasing && halved;
        os << cfg.name << " medians";
        for (const auto& s : r.steps) os << " " << num(s.median);
        os << "; ";
    }
    report(7, "linearization residual", pass, os.str());
}

void criterion8() {
    const std::vector<long long> ns{1, 4, 25, 100, 10000};
    bool pass = true;
    for (const auto& row : inverse_counterexample(ns)) {
        pass = pass && row.ratio == -0.5 && row.derivative == -1.0 && row.gap == 0.5;
    }
    double probe_min = 1e300, probe_max = -1e300, identity_max = 0.0;
    for (long long n : ns) {
        const double p = increment_condition_probe("counterexample", n, 1.0);
        probe_min = std::min(probe_min, p);
        probe_max = std::max(probe_max, p);
        identity_max = std::max(identity_max, increment_condition_probe("identity", n, 1.0));
    }
    pass = pass && probe_min == 1.0 && probe_max == 1.0 && identity_max == 0.0;
    report(8, "quantile counterexample", pass,
           "ratio -1/2, derivative -1, gap 1/2 for n in {1,4,25,100,10^4}; probe " + num(probe_min) +
               ".." + num(probe_max) + ", identity probe " + num(identity_max));
}

void criterion9() {
    const std::vector<long long> ns{4, 16, 64, 256, 1024};
    bool pass = true;
    std::ostringstream os;
    for (auto [id, name] : {std::pair{FunctionalId::Wilcoxon, "wilcoxon"},
                            std::pair{FunctionalId::ProductIntegral, "product integral"}}) {
        const auto dev = hadamard_ratio_check(id, ns);
        const double factor = dev.front() / dev.back();
        pass = pass && factor >= 4.0;
        os << name << " " << num(dev.front()) << " -> " << num(dev.back()) << " (x" << num(factor)
           << "); ";
    }
    report(9, "difference-quotient convergence", pass, os.str());
}

}  // namespace

int main() {
    const std::size_t threads = default_threads();
    const std::size_t other = threads > 2 ? 2 : threads + 1;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const auto c1 = indicator_config(ResampleChoice::Perm);
        const auto c2 = indicator_config(ResampleChoice::Boot);
        const auto c4 = na_config();
        const std::string r1 = criterion_cov(1, "permutation covariance", c1, threads);
        const std::string r2 = criterion_cov(2, "pooled bootstrap covariance", c2, threads);
        criterion3();
        const std::string r4 = criterion_cov(4, "Nelson-Aalen permutation limit", c4, threads);
        criterion5();
        criterion6();
        criterion7(threads);
        criterion8();
        criterion9();

        const auto t10 = std::chrono::steady_clock::now();
        const bool same = dump_json(report_to_json(conditional_cov_experiment(c1, other))) == r1 &&
                          dump_json(report_to_json(conditional_cov_experiment(c2, other))) == r2 &&
                          dump_json(report_to_json(conditional_cov_experiment(c4, other))) == r4;
        report(10, "determinism", same,
               "reports of criteria 1, 2, 4 with " + std::to_string(threads) + " and " +
                   std::to_string(other) + " threads " + (same ? "identical" : "differ") + ", " +
                   num(seconds_since(t10)) + " s");
    } catch (const std::exception& e) {
        std::cout << "aborted: " << e.what() << std::endl;
        return 2;
    }
    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed")
              << " in " << num(seconds_since(t0)) << " s" << std::endl;
    return failures == 0 ? 0 : 1;
}
