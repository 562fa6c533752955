#include "permboot/cli.hpp"

#include "permboot/counterexample.hpp"
#include "permboot/errors.hpp"
#include "permboot/functionals.hpp"
#include "permboot/io.hpp"
#include "permboot/parallel.hpp"
#include "permboot/report.hpp"
#include "permboot/verify.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

namespace permboot::cli {

namespace {

using nlohmann::json;

struct Options {
    std::string config_path;
    std::string input_path;
    std::string output_path;
    std::string csv_prefix;
    std::string dump_fn;
    std::string format = "json";
    std::string mode = "cov";
    std::string variant;
    std::string group;
    std::string fn = "km";
    bool to_stdout = false;
    bool exhaustive = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> draws;
    std::optional<std::size_t> threads;
    std::optional<double> tau;
    std::uint64_t rep = 0;
    std::vector<long long> n_values{1, 4, 25, 100, 10000};
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ContractError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

template <typename T>
std::optional<T> env_number(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    try {
        std::size_t pos = 0;
        const auto x = std::stoull(v, &pos);
        if (pos != std::string(v).size()) throw std::invalid_argument(name);
        return static_cast<T>(x);
    } catch (const std::exception&) {
        throw UsageError(std::string("environment variable ") + name + " is not an integer");
    }
}

std::size_t thread_count(const Options& o) {
    if (o.threads) return *o.threads;
    if (auto t = env_number<std::size_t>("PERMBOOT_THREADS")) return *t;
    return default_threads();
}

ExperimentConfig load_config(const Options& o) {
    if (o.config_path.empty()) throw UsageError("--config is required");
    ExperimentConfig c = parse_config(read_text(o.config_path));
    if (o.seed) {
        c.seed.master = *o.seed;
    } else if (auto s = env_number<std::uint64_t>("PERMBOOT_SEED")) {
        c.seed.master = *s;
    }
    if (o.draws) c.draws = *o.draws;
    if (o.exhaustive) c.exhaustive = true;
    validate(c);
    return c;
}

void emit(const Options& o, std::ostream& out, const std::string& contents) {
    if (!o.output_path.empty()) write_file_atomic(o.output_path, contents);
    if (o.to_stdout) out << contents;
    if (o.output_path.empty() && !o.to_stdout) throw UsageError("give --output or --stdout");
}

PooledData first_dataset(const ExperimentConfig& c, std::uint64_t rep, double& tau,
                         std::vector<double>& grid) {
    const PooledData p = pool(simulate_dataset(c, c.sizes, rep, 0));
    tau = realized_tau(c, p);
    grid = realized_grid(c, p, tau);
    return p;
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
    const ExperimentConfig c = load_config(o);
    std::ostringstream os;
    write_samples_csv(os, simulate_dataset(c, c.sizes, o.rep, 0));
    emit(o, out, os.str());
    err << "simulated dataset " << o.rep << " (" << c.name << ")\n";
    return kOk;
}

HazardBundle group_bundle(const std::vector<Observation>& g, double tau) {
    return HazardBundle{at_risk_process(g), uncensored_subdist(g), tau};
}

int cmd_analyze(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.input_path.empty()) throw UsageError("--input is required");
    if (!o.tau) throw UsageError("--tau is required");
    const double tau = *o.tau;
    const SampleTable table = read_sample_table(std::filesystem::path(o.input_path));
    if (table.kind != SampleKind::Censored) {
        throw ContractError("analyze needs a group,time,status file");
    }
    std::ostringstream csv;
    csv << "group,time,na,km\n";
    json groups = json::array();
    for (std::size_t j = 0; j < table.groups.size(); ++j) {
        const auto& g = table.groups[j];
        const HazardBundle b = group_bundle(g, tau);
        const StepFn na = nelson_aalen(b);
        const StepFn km = kaplan_meier(b);
        std::vector<double> times;
        for (const auto& obs : g) {
            if (obs.value <= tau) times.push_back(obs.value);
        }
        std::sort(times.begin(), times.end());
        times.erase(std::unique(times.begin(), times.end()), times.end());
        for (double t : times) {
            csv << table.labels[j] << ',' << format_real(t) << ',' << format_real(na(t)) << ','
                << format_real(km(t)) << '\n';
        }
        std::size_t events = 0;
        for (const auto& obs : g) events += obs.event ? 1 : 0;
        groups.push_back({{"group", table.labels[j]},
                          {"n", g.size()},
                          {"events", events},
                          {"na_tau", na(tau)},
                          {"km_tau", km(tau)},
                          {"rmst", rmst(km, tau)}});
        if (!o.dump_fn.empty()) {
            write_file_atomic(o.dump_fn + "_" + table.labels[j] + "_na.txt", to_text(na));
            write_file_atomic(o.dump_fn + "_" + table.labels[j] + "_km.txt", to_text(km));
        }
    }
    if (o.format == "csv") {
        emit(o, out, csv.str());
    } else {
        emit(o, out, dump_json({{"tau", tau}, {"groups", groups}}));
    }
    err << "analyzed " << table.groups.size() << " group(s)\n";
    return kOk;
}

int cmd_kernel(const Options& o, std::ostream& out, std::ostream& err) {
    const ExperimentConfig c = load_config(o);
    Variant v = c.resample == ResampleChoice::Boot ? Variant::Boot : Variant::Perm;
    if (o.variant == "boot") v = Variant::Boot;
    if (o.variant == "perm") v = Variant::Perm;
    double tau = 0.0;
    std::vector<double> grid;
    const PooledData p = first_dataset(c, o.rep, tau, grid);
    const Eigen::MatrixXd k = target_kernel(c, v, p, grid, tau);
    std::vector<std::string> labels;
    const auto lambdas = LambdaVector::from_sizes(p.sizes);
    const std::size_t per = k.rows() / static_cast<Eigen::Index>(p.num_groups()) > 0
                                ? static_cast<std::size_t>(k.rows()) / p.num_groups()
                                : 1;
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
        if (c.scenario == Scenario::WilcoxonStat) {
            labels.emplace_back("w");
        } else {
            const auto idx = static_cast<std::size_t>(i);
            labels.push_back("g" + std::to_string(idx / per + 1) +
                             (c.scenario == Scenario::RMST ? std::string()
                                                           : "[" + std::to_string(idx % per) + "]"));
        }
    }
    std::vector<double> lv(lambdas.values().begin(), lambdas.values().end());
    const json header = {{"kind", std::string(to_string(c.scenario)) + "/" +
                                      (v == Variant::Perm ? "perm" : "boot")},
                         {"target", config_to_json(c)["target"]},
                         {"lambda", lv},
                         {"grid", grid},
                         {"tau", tau}};
    emit(o, out, "# " + header.dump() + "\n" + matrix_csv(labels, k));
    err << "kernel of dimension " << k.rows() << "\n";
    return kOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
    const ExperimentConfig c = load_config(o);
    const std::size_t threads = thread_count(o);
    if (o.mode == "linearization") {
        const auto r = linearization_residual_experiment(c, threads);
        emit(o, out, dump_json(report_to_json(r)));
        for (const auto& s : r.steps) {
            err << "N=" << s.total_size << " median residual " << format_real(s.median) << "\n";
        }
        return kOk;
    }
    if (o.mode != "cov") throw UsageError("--mode must be cov or linearization");
    err << "verify " << c.name << ": " << c.outer_reps << " datasets x "
        << (c.exhaustive ? std::string("all permutations") : std::to_string(c.draws) + " draws")
        << " on " << threads << " thread(s)\n";
    const VerifyReport r = conditional_cov_experiment(c, threads);
    emit(o, out, dump_json(report_to_json(r)));
    if (!o.csv_prefix.empty()) {
        for (const auto& cmp : r.comparisons) {
            write_file_atomic(o.csv_prefix + "_" + cmp.variant + "_kernel.csv",
                              matrix_csv(cmp.labels, comparison_matrix(cmp, "kernel")));
            write_file_atomic(o.csv_prefix + "_" + cmp.variant + "_estimate.csv",
                              matrix_csv(cmp.labels, comparison_matrix(cmp, "estimate")));
        }
    }
    for (const auto& cmp : r.comparisons) {
        err << cmp.variant << ": max |dev| " << format_real(cmp.max_abs_dev) << ", pass fraction "
            << format_real(cmp.pass_fraction) << "\n";
    }
    err << (r.passed ? "PASS" : "FAIL") << " in " << r.runtime_seconds << " s\n";
    return r.passed ? kOk : kVerifyFailed;
}

int cmd_counterexample(const Options& o, std::ostream& out, std::ostream& /*err*/) {
    const auto rows = inverse_counterexample(o.n_values);
    if (o.format == "csv") {
        std::ostringstream os;
        os << "n,t_n,ratio,derivative,gap\n";
        for (const auto& r : rows) {
            os << r.n << ',' << format_real(r.t_n) << ',' << format_real(r.ratio) << ','
               << format_real(r.derivative) << ',' << format_real(r.gap) << '\n';
        }
        emit(o, out, os.str());
    } else {
        json j = json::array();
        for (const auto& r : rows) {
            j.push_back({{"n", r.n},
                         {"t_n", r.t_n},
                         {"ratio", r.ratio},
                         {"derivative", r.derivative},
                         {"gap", r.gap}});
        }
        emit(o, out, dump_json({{"rows", j}}));
    }
    return kOk;
}

int cmd_dump_fn(const Options& o, std::ostream& out, std::ostream& /*err*/) {
    if (o.input_path.empty()) throw UsageError("--input is required");
    const SampleTable table = read_sample_table(std::filesystem::path(o.input_path));
    std::size_t j = 0;
    if (!o.group.empty()) {
        const auto it = std::find(table.labels.begin(), table.labels.end(), o.group);
        if (it == table.labels.end()) throw ContractError("no group '" + o.group + "'");
        j = static_cast<std::size_t>(it - table.labels.begin());
    }
    const auto& g = table.groups[j];
    StepFn f = StepFn::constant(0.0, 1.0, 0.0);
    if (o.fn == "ecdf") {
        f = ecdf(values_of(g));
    } else {
        if (!o.tau) throw UsageError("--tau is required for na and km");
        if (table.kind != SampleKind::Censored) throw ContractError("na and km need survival data");
        const HazardBundle b = group_bundle(g, *o.tau);
        if (o.fn == "na") {
            f = nelson_aalen(b);
        } else if (o.fn == "km") {
            f = kaplan_meier(b);
        } else {
            throw UsageError("--fn must be ecdf, na or km");
        }
    }
    emit(o, out, to_text(f));
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Permutation and pooled-bootstrap empirical process toolkit", "permboot"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", "permboot 0.1.0");

    auto common = [&](CLI::App* s) {
        s->add_option("--output,-o", o.output_path, "Output file (written atomically)");
        s->add_flag("--stdout", o.to_stdout, "Also write the output to stdout");
    };
    auto seeded = [&](CLI::App* s) {
        s->add_option("--config,-c", o.config_path, "Experiment config (JSON)")->required();
        s->add_option("--seed", o.seed, "Master seed (overrides PERMBOOT_SEED and the config)");
        s->add_option("--rep", o.rep, "Dataset index");
    };

    auto* simulate = app.add_subcommand("simulate", "Write one simulated dataset as CSV");
    seeded(simulate);
    common(simulate);

    auto* analyze = app.add_subcommand("analyze", "Nelson-Aalen, Kaplan-Meier and RMST per group");
    analyze->add_option("--input,-i", o.input_path, "group,time,status CSV")->required();
    analyze->add_option("--tau", o.tau, "Upper time limit")->required();
    analyze->add_option("--format", o.format, "json (summary) or csv (curves)")
        ->check(CLI::IsMember({"json", "csv"}));
    analyze->add_option("--dump-fn", o.dump_fn, "Prefix for step-function text dumps");
    common(analyze);

    auto* kernel = app.add_subcommand("kernel", "Assembled grid covariance kernel as CSV");
    seeded(kernel);
    kernel->add_option("--variant", o.variant, "perm or boot")
        ->check(CLI::IsMember({"perm", "boot"}));
    common(kernel);

    auto* verify = app.add_subcommand("verify", "Monte Carlo check of covariance kernels");
    seeded(verify);
    verify->add_option("--draws", o.draws, "Resamples per dataset");
    verify->add_flag("--exhaustive", o.exhaustive, "Enumerate all permutations (N <= 8)");
    verify->add_option("--threads", o.threads, "Worker threads (overrides PERMBOOT_THREADS)");
    verify->add_option("--mode", o.mode, "cov or linearization")
        ->check(CLI::IsMember({"cov", "linearization"}));
    verify->add_option("--csv", o.csv_prefix, "Prefix for kernel and estimate CSV matrices");
    common(verify);

    auto* counter = app.add_subcommand("counterexample", "Quantile difference-quotient table");
    counter->add_option("--n", o.n_values, "Comma separated n values")->delimiter(',');
    counter->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    common(counter);

    auto* dump = app.add_subcommand("dump-fn", "Step function of one group in text form");
    dump->add_option("--input,-i", o.input_path, "Sample CSV")->required();
    dump->add_option("--group", o.group, "Group label (default: first)");
    dump->add_option("--fn", o.fn, "ecdf, na or km")->check(CLI::IsMember({"ecdf", "na", "km"}));
    dump->add_option("--tau", o.tau, "Upper time limit");
    common(dump);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << "permboot 0.1.0\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*simulate) return cmd_simulate(o, out, err);
        if (*analyze) return cmd_analyze(o, out, err);
        if (*kernel) return cmd_kernel(o, out, err);
        if (*verify) return cmd_verify(o, out, err);
        if (*counter) return cmd_counterexample(o, out, err);
        if (*dump) return cmd_dump_fn(o, out, err);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    }
    return kUsage;
}

}  // namespace permboot::cli
