#include "permboot/report.hpp"

#include "permboot/errors.hpp"
#include "permboot/io.hpp"

#include <set>
#include <sstream>

namespace permboot {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ContractError(where + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ContractError(where + ": unknown key '" + key + "'");
    }
}

template <typename T>
T get(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ContractError(where + ": missing '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ContractError(where + ": bad '" + key + "': " + e.what());
    }
}

std::size_t get_count(const json& j, const std::string& key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        throw ContractError(where + ": '" + key + "' must be a nonnegative integer");
    }
    return v.get<std::size_t>();
}

std::vector<std::size_t> get_counts(const json& j, const std::string& key) {
    if (!j.at(key).is_array()) throw ContractError("config: '" + key + "' must be an array");
    std::vector<std::size_t> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
            throw ContractError("config: '" + key + "' entries must be nonnegative integers");
        }
        out.push_back(v.get<std::size_t>());
    }
    return out;
}

const char* resample_name(ResampleChoice c) {
    switch (c) {
        case ResampleChoice::Perm: return "perm";
        case ResampleChoice::Boot: return "boot";
        case ResampleChoice::Both: return "both";
    }
    return "perm";
}

const char* target_name(TargetKind t) {
    switch (t) {
        case TargetKind::PlugIn: return "plug-in";
        case TargetKind::Limit: return "limit";
        case TargetKind::FiniteN: return "finite-n";
    }
    return "plug-in";
}

}  // namespace

json law_to_json(const Law& law) {
    return std::visit(
        [](const auto& l) -> json {
            using T = std::decay_t<decltype(l)>;
            if constexpr (std::is_same_v<T, Exponential>) {
                return {{"law", "exponential"}, {"rate", l.rate}};
            } else if constexpr (std::is_same_v<T, Uniform>) {
                return {{"law", "uniform"}, {"lo", l.lo}, {"hi", l.hi}};
            } else {
                return {{"law", "point_masses"}, {"values", l.values}, {"probs", l.probs}};
            }
        },
        law);
}

Law law_from_json(const json& j) {
    const std::string where = "law";
    const auto kind = get<std::string>(j, "law", where);
    Law law;
    if (kind == "exponential") {
        check_keys(j, {"law", "rate"}, where);
        law = Exponential{get<double>(j, "rate", where)};
    } else if (kind == "uniform") {
        check_keys(j, {"law", "lo", "hi"}, where);
        law = Uniform{get<double>(j, "lo", where), get<double>(j, "hi", where)};
    } else if (kind == "point_masses") {
        check_keys(j, {"law", "values", "probs"}, where);
        law = PointMasses{get<std::vector<double>>(j, "values", where),
                          get<std::vector<double>>(j, "probs", where)};
    } else {
        throw ContractError("law: unknown kind '" + kind + "'");
    }
    validate(law);
    return law;
}

ExperimentConfig config_from_json(const json& j) {
    const std::string where = "config";
    check_keys(j,
               {"name", "scenario", "group_laws", "censoring_laws", "sizes", "grid", "tau", "draws",
                "outer_reps", "resample", "seed", "tolerance", "target", "exhaustive",
                "size_ladder"},
               where);
    ExperimentConfig c;
    if (j.contains("name")) c.name = get<std::string>(j, "name", where);
    c.scenario = scenario_from_string(get<std::string>(j, "scenario", where));
    if (!j.contains("group_laws") || !j.at("group_laws").is_array()) {
        throw ContractError("config: 'group_laws' must be an array");
    }
    for (const auto& l : j.at("group_laws")) c.group_laws.push_back(law_from_json(l));
    if (j.contains("censoring_laws")) {
        if (!j.at("censoring_laws").is_array()) {
            throw ContractError("config: 'censoring_laws' must be an array");
        }
        for (const auto& l : j.at("censoring_laws")) {
            if (l.is_null()) {
                c.censoring_laws.emplace_back();
            } else {
                c.censoring_laws.emplace_back(law_from_json(l));
            }
        }
    }
    if (!j.contains("sizes")) throw ContractError("config: missing 'sizes'");
    c.sizes = get_counts(j, "sizes");

    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        if (g.is_string()) {
            if (g.get<std::string>() != "pooled-deciles") {
                throw ContractError("config: grid string must be 'pooled-deciles'");
            }
            c.grid.mode = GridSpec::Mode::PooledDeciles;
        } else if (g.is_array()) {
            c.grid.mode = GridSpec::Mode::Explicit;
            c.grid.values = g.get<std::vector<double>>();
        } else {
            check_keys(g, {"tau_fractions"}, "grid");
            c.grid.mode = GridSpec::Mode::TauFractions;
            c.grid.values = get<std::vector<double>>(g, "tau_fractions", "grid");
        }
    }
    if (j.contains("tau") && !j.at("tau").is_null()) {
        const auto& t = j.at("tau");
        if (t.is_number()) {
            c.tau = {TauSpec::Mode::Fixed, t.get<double>()};
        } else {
            check_keys(t, {"pooled_quantile"}, "tau");
            c.tau = {TauSpec::Mode::PooledQuantile, get<double>(t, "pooled_quantile", "tau")};
        }
    }
    if (j.contains("draws")) c.draws = get_count(j, "draws", where);
    if (j.contains("outer_reps")) c.outer_reps = get_count(j, "outer_reps", where);
    if (j.contains("resample")) {
        const auto r = get<std::string>(j, "resample", where);
        if (r == "perm") {
            c.resample = ResampleChoice::Perm;
        } else if (r == "boot") {
            c.resample = ResampleChoice::Boot;
        } else if (r == "both") {
            c.resample = ResampleChoice::Both;
        } else {
            throw ContractError("config: resample must be perm, boot or both");
        }
    }
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (s.is_number_unsigned()) {
            c.seed = {s.get<std::uint64_t>(), 0};
        } else {
            check_keys(s, {"master", "stream"}, "seed");
            c.seed.master = get<std::uint64_t>(s, "master", "seed");
            if (s.contains("stream")) c.seed.stream = get<std::uint64_t>(s, "stream", "seed");
        }
    }
    if (j.contains("tolerance")) {
        const auto& t = j.at("tolerance");
        check_keys(t, {"abs_tol", "se_multiplier", "independence_se_multiplier"}, "tolerance");
        if (t.contains("abs_tol")) c.tolerance.abs_tol = get<double>(t, "abs_tol", "tolerance");
        if (t.contains("se_multiplier")) {
            c.tolerance.se_multiplier = get<double>(t, "se_multiplier", "tolerance");
        }
        if (t.contains("independence_se_multiplier")) {
            c.tolerance.independence_se_multiplier =
                get<double>(t, "independence_se_multiplier", "tolerance");
        }
    }
    if (j.contains("target")) {
        const auto t = get<std::string>(j, "target", where);
        if (t == "plug-in") {
            c.target = TargetKind::PlugIn;
        } else if (t == "limit") {
            c.target = TargetKind::Limit;
        } else if (t == "finite-n") {
            c.target = TargetKind::FiniteN;
        } else {
            throw ContractError("config: target must be plug-in, limit or finite-n");
        }
    }
    if (j.contains("exhaustive")) c.exhaustive = get<bool>(j, "exhaustive", where);
    if (j.contains("size_ladder")) c.size_ladder = get_counts(j, "size_ladder");
    validate(c);
    return c;
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ContractError(std::string("config: invalid JSON: ") + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["scenario"] = to_string(c.scenario);
    j["group_laws"] = json::array();
    for (const auto& l : c.group_laws) j["group_laws"].push_back(law_to_json(l));
    if (!c.censoring_laws.empty()) {
        j["censoring_laws"] = json::array();
        for (const auto& l : c.censoring_laws) {
            j["censoring_laws"].push_back(l ? law_to_json(*l) : json(nullptr));
        }
    }
    j["sizes"] = c.sizes;
    switch (c.grid.mode) {
        case GridSpec::Mode::PooledDeciles: j["grid"] = "pooled-deciles"; break;
        case GridSpec::Mode::Explicit: j["grid"] = c.grid.values; break;
        case GridSpec::Mode::TauFractions: j["grid"] = {{"tau_fractions", c.grid.values}}; break;
    }
    switch (c.tau.mode) {
        case TauSpec::Mode::None: j["tau"] = nullptr; break;
        case TauSpec::Mode::Fixed: j["tau"] = c.tau.value; break;
        case TauSpec::Mode::PooledQuantile: j["tau"] = {{"pooled_quantile", c.tau.value}}; break;
    }
    j["draws"] = c.draws;
    j["outer_reps"] = c.outer_reps;
    j["resample"] = resample_name(c.resample);
    j["seed"] = {{"master", c.seed.master}, {"stream", c.seed.stream}};
    j["tolerance"] = {{"abs_tol", c.tolerance.abs_tol},
                      {"se_multiplier", c.tolerance.se_multiplier},
                      {"independence_se_multiplier", c.tolerance.independence_se_multiplier}};
    j["target"] = target_name(c.target);
    j["exhaustive"] = c.exhaustive;
    if (!c.size_ladder.empty()) j["size_ladder"] = c.size_ladder;
    return j;
}

json comparison_to_json(const ComparisonResult& cmp) {
    json cells = json::array();
    for (const auto& c : cmp.cells) {
        cells.push_back({{"row", c.row},
                         {"col", c.col},
                         {"kernel", c.kernel},
                         {"estimate", c.estimate},
                         {"se", c.se},
                         {"deviation", c.deviation},
                         {"cross_group", c.cross_group},
                         {"pass", c.pass}});
    }
    return {{"variant", cmp.variant},
            {"labels", cmp.labels},
            {"max_abs_dev", cmp.max_abs_dev},
            {"pass_fraction", cmp.pass_fraction},
            {"passed", cmp.passed},
            {"cells", std::move(cells)}};
}

json report_to_json(const VerifyReport& r) {
    json comparisons = json::array();
    for (const auto& c : r.comparisons) comparisons.push_back(comparison_to_json(c));
    return {{"kind", "conditional_covariance"},
            {"config", config_to_json(r.config)},
            {"seed", {{"master", r.config.seed.master}, {"stream", r.config.seed.stream}}},
            {"mean_grid", r.mean_grid},
            {"mean_tau", r.mean_tau},
            {"redrawn_datasets", r.redrawn_datasets},
            {"passed", r.passed},
            {"comparisons", std::move(comparisons)}};
}

json report_to_json(const LinearizationReport& r) {
    json steps = json::array();
    for (const auto& s : r.steps) {
        steps.push_back({{"total_size", s.total_size},
                         {"draws", s.draws},
                         {"median", s.median},
                         {"q10", s.q10},
                         {"q90", s.q90},
                         {"max", s.max}});
    }
    return {{"kind", "linearization_residual"},
            {"config", config_to_json(r.config)},
            {"seed", {{"master", r.config.seed.master}, {"stream", r.config.seed.stream}}},
            {"steps", std::move(steps)}};
}

std::string dump_json(const json& j) { return j.dump(2) + "\n"; }

Eigen::MatrixXd comparison_matrix(const ComparisonResult& cmp, const std::string& field) {
    if (field != "kernel" && field != "estimate") {
        throw ContractError("comparison_matrix: field must be kernel or estimate");
    }
    std::size_t dim = 0;
    for (const auto& c : cmp.cells) dim = std::max(dim, c.col + 1);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                              static_cast<Eigen::Index>(dim));
    for (const auto& c : cmp.cells) {
        const double v = field == "kernel" ? c.kernel : c.estimate;
        const auto r = static_cast<Eigen::Index>(c.row), k = static_cast<Eigen::Index>(c.col);
        m(r, k) = v;
        m(k, r) = v;
    }
    return m;
}

std::string matrix_csv(const std::vector<std::string>& labels, const Eigen::MatrixXd& m) {
    if (static_cast<Eigen::Index>(labels.size()) != m.rows() || m.rows() != m.cols()) {
        throw ContractError("matrix_csv: labels do not match the matrix");
    }
    std::ostringstream os;
    os << "label";
    for (const auto& l : labels) os << ',' << l;
    os << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        os << labels[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < m.cols(); ++k) os << ',' << format_real(m(i, k));
        os << '\n';
    }
    return os.str();
}

}  // namespace permboot
