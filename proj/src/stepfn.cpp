#include "permboot/stepfn.hpp"

#include "permboot/errors.hpp"
#include "permboot/io.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace permboot {

namespace {

void require_same_shape(const StepFn& f, const StepFn& g, const char* op) {
    if (f.continuity() != g.continuity()) {
        throw ContractError(std::string(op) + ": mixed continuity conventions");
    }
    if (f.lo() != g.lo() || f.hi() != g.hi()) {
        throw ContractError(std::string(op) + ": functions live on different domains");
    }
}

// Merged, strictly increasing breakpoints of several functions.
std::vector<double> merged_breakpoints(std::span<const StepFn* const> fns) {
    std::vector<double> all;
    std::size_t total = 0;
    for (const StepFn* f : fns) total += f->size();
    all.reserve(total);
    for (const StepFn* f : fns) {
        all.insert(all.end(), f->breakpoints().begin(), f->breakpoints().end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

// Walks one function's levels along a merged breakpoint list.
class LevelCursor {
public:
    explicit LevelCursor(const StepFn& f) : f_(f) {}

    double advance_to(double u) {
        const auto bps = f_.breakpoints();
        while (next_ < bps.size() && bps[next_] <= u) ++next_;
        return next_ == 0 ? f_.base() : f_.levels()[next_ - 1];
    }

private:
    const StepFn& f_;
    std::size_t next_ = 0;
};

// Removes breakpoints whose level repeats the previous one.
void drop_flat(double base, std::vector<double>& bps, std::vector<double>& levels) {
    std::size_t out = 0;
    double prev = base;
    for (std::size_t k = 0; k < bps.size(); ++k) {
        if (levels[k] == prev) continue;
        bps[out] = bps[k];
        levels[out] = levels[k];
        prev = levels[k];
        ++out;
    }
    bps.resize(out);
    levels.resize(out);
}

}  // namespace

StepFn::StepFn(double lo, double hi, double base, std::vector<double> breakpoints,
               std::vector<double> jumps, Continuity continuity)
    : lo_(lo), hi_(hi), base_(base), breakpoints_(std::move(breakpoints)), continuity_(continuity) {
    if (jumps.size() != breakpoints_.size()) {
        throw ContractError("StepFn: breakpoints and jumps differ in length");
    }
    levels_.resize(jumps.size());
    double level = base_;
    for (std::size_t k = 0; k < jumps.size(); ++k) {
        level += jumps[k];
        levels_[k] = level;
    }
    validate();
    drop_flat(base_, breakpoints_, levels_);
}

StepFn StepFn::constant(double lo, double hi, double value, Continuity continuity) {
    return from_levels(lo, hi, value, {}, {}, continuity);
}

StepFn StepFn::from_levels(double lo, double hi, double base, std::vector<double> breakpoints,
                           std::vector<double> levels, Continuity continuity) {
    if (levels.size() != breakpoints.size()) {
        throw ContractError("StepFn: breakpoints and levels differ in length");
    }
    StepFn f;
    f.lo_ = lo;
    f.hi_ = hi;
    f.base_ = base;
    f.breakpoints_ = std::move(breakpoints);
    f.levels_ = std::move(levels);
    f.continuity_ = continuity;
    f.validate();
    drop_flat(f.base_, f.breakpoints_, f.levels_);
    return f;
}

void StepFn::validate() const {
    if (std::isnan(lo_) || std::isnan(hi_) || !(lo_ < hi_)) {
        throw ContractError("StepFn: domain requires lo < hi");
    }
    if (!std::isfinite(base_)) throw ContractError("StepFn: base value must be finite");
    for (std::size_t k = 0; k < breakpoints_.size(); ++k) {
        const double u = breakpoints_[k];
        const bool inside = continuity_ == Continuity::Right ? (lo_ < u && u <= hi_)
                                                             : (lo_ <= u && u < hi_);
        if (!inside || !std::isfinite(u)) {
            throw ContractError("StepFn: breakpoint " + format_real(u) + " outside the domain");
        }
        if (k > 0 && !(breakpoints_[k - 1] < u)) {
            throw ContractError("StepFn: breakpoints must be strictly increasing");
        }
        if (!std::isfinite(levels_[k])) throw ContractError("StepFn: non-finite level");
    }
}

std::size_t StepFn::active_count(double t) const {
    if (continuity_ == Continuity::Right) {
        return static_cast<std::size_t>(
            std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t) - breakpoints_.begin());
    }
    return static_cast<std::size_t>(
        std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t) - breakpoints_.begin());
}

double StepFn::level_after(std::size_t count) const {
    return count == 0 ? base_ : levels_[count - 1];
}

double StepFn::jump(std::size_t k) const {
    if (k >= levels_.size()) throw ContractError("StepFn: jump index out of range");
    return levels_[k] - level_after(k);
}

std::vector<double> StepFn::jumps() const {
    std::vector<double> out(levels_.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = jump(k);
    return out;
}

double StepFn::final_value() const noexcept {
    return levels_.empty() ? base_ : levels_.back();
}

double StepFn::operator()(double t) const {
    if (!contains(t)) {
        throw DomainError("StepFn: evaluation point " + format_real(t) + " outside [" +
                          format_real(lo_) + ", " + format_real(hi_) + "]");
    }
    return level_after(active_count(t));
}

double StepFn::left_limit(double t) const {
    if (!(lo_ < t && t <= hi_)) {
        throw DomainError("StepFn: left limit at " + format_real(t) + " needs lo < t <= hi");
    }
    const auto count = static_cast<std::size_t>(
        std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t) - breakpoints_.begin());
    return level_after(count);
}

double StepFn::jump_at(double t) const {
    const auto it = std::lower_bound(breakpoints_.begin(), breakpoints_.end(), t);
    if (it == breakpoints_.end() || *it != t) return 0.0;
    return jump(static_cast<std::size_t>(it - breakpoints_.begin()));
}

double eval(const StepFn& f, double t) { return f(t); }

double left_limit(const StepFn& f, double t) { return f.left_limit(t); }

double total_variation(const StepFn& f) {
    double tv = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k) tv += std::abs(f.jump(k));
    return tv;
}

double sup_norm(const StepFn& f) {
    double s = std::abs(f.base());
    for (double v : f.levels()) s = std::max(s, std::abs(v));
    return s;
}

namespace {

void require_integrator(const StepFn& f) {
    if (f.continuity() != Continuity::Right) {
        throw ContractError("ls_integral: the integrator must be right-continuous");
    }
}

double origin_term(const StepFn& g, const StepFn& f, JumpAtZeroPolicy policy) {
    if (!policy.enabled || f.lo() != 0.0) return 0.0;
    return g(0.0) * f.base();
}

}  // namespace

double ls_integral(const StepFn& g, const StepFn& f, double upto, JumpAtZeroPolicy policy) {
    require_integrator(f);
    if (!f.contains(upto)) {
        throw DomainError("ls_integral: upper limit " + format_real(upto) + " outside the domain");
    }
    double sum = origin_term(g, f, policy);
    const auto bps = f.breakpoints();
    for (std::size_t k = 0; k < bps.size() && bps[k] <= upto; ++k) {
        sum += g(bps[k]) * f.jump(k);
    }
    return sum;
}

StepFn ls_integral_curve(const StepFn& g, const StepFn& f, JumpAtZeroPolicy policy) {
    require_integrator(f);
    const double base = origin_term(g, f, policy);
    const auto bps = f.breakpoints();
    std::vector<double> levels(bps.size());
    double sum = base;
    for (std::size_t k = 0; k < bps.size(); ++k) {
        sum += g(bps[k]) * f.jump(k);
        levels[k] = sum;
    }
    return StepFn::from_levels(f.lo(), f.hi(), base, {bps.begin(), bps.end()}, std::move(levels),
                               Continuity::Right);
}

StepFn affine_combine(std::span<const double> coeffs, std::span<const StepFn> fns) {
    if (fns.empty() || coeffs.size() != fns.size()) {
        throw ContractError("affine_combine: need one coefficient per function");
    }
    std::vector<const StepFn*> ptrs;
    ptrs.reserve(fns.size());
    for (const StepFn& f : fns) {
        require_same_shape(fns.front(), f, "affine_combine");
        ptrs.push_back(&f);
    }
    auto bps = merged_breakpoints(ptrs);

    double base = 0.0;
    for (std::size_t i = 0; i < fns.size(); ++i) base += coeffs[i] * fns[i].base();

    std::vector<LevelCursor> cursors;
    cursors.reserve(fns.size());
    for (const StepFn& f : fns) cursors.emplace_back(f);
    std::vector<double> levels(bps.size());
    for (std::size_t k = 0; k < bps.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < fns.size(); ++i) acc += coeffs[i] * cursors[i].advance_to(bps[k]);
        levels[k] = acc;
    }
    const auto& f0 = fns.front();
    return StepFn::from_levels(f0.lo(), f0.hi(), base, std::move(bps), std::move(levels),
                               f0.continuity());
}

StepFn scale(const StepFn& f, double c) {
    return map_levels(f, [c](double v) { return c * v; });
}

StepFn difference(const StepFn& f, const StepFn& g) {
    return combine(f, g, [](double a, double b) { return a - b; });
}

StepFn combine(const StepFn& f, const StepFn& g, const std::function<double(double, double)>& op) {
    require_same_shape(f, g, "combine");
    const StepFn* ptrs[] = {&f, &g};
    auto bps = merged_breakpoints(ptrs);
    LevelCursor cf(f), cg(g);
    std::vector<double> levels(bps.size());
    for (std::size_t k = 0; k < bps.size(); ++k) {
        levels[k] = op(cf.advance_to(bps[k]), cg.advance_to(bps[k]));
    }
    return StepFn::from_levels(f.lo(), f.hi(), op(f.base(), g.base()), std::move(bps),
                               std::move(levels), f.continuity());
}

StepFn map_levels(const StepFn& f, const std::function<double(double)>& op) {
    std::vector<double> levels(f.levels().begin(), f.levels().end());
    for (double& v : levels) v = op(v);
    return StepFn::from_levels(f.lo(), f.hi(), op(f.base()),
                               {f.breakpoints().begin(), f.breakpoints().end()}, std::move(levels),
                               f.continuity());
}

StepFn with_continuity(const StepFn& f, Continuity continuity) {
    if (continuity == f.continuity()) return f;
    std::vector<double> bps;
    std::vector<double> levels;
    double base = f.base();
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double u = f.breakpoints()[k];
        if (continuity == Continuity::Left && u >= f.hi()) continue;
        if (continuity == Continuity::Right && u <= f.lo()) {
            base = f.levels()[k];
            continue;
        }
        bps.push_back(u);
        levels.push_back(f.levels()[k]);
    }
    return StepFn::from_levels(f.lo(), f.hi(), base, std::move(bps), std::move(levels), continuity);
}

StepFn truncate(const StepFn& f, double hi) {
    if (!(f.lo() < hi && hi <= f.hi())) {
        throw DomainError("truncate: new upper end " + format_real(hi) + " outside the domain");
    }
    std::vector<double> bps;
    std::vector<double> levels;
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double u = f.breakpoints()[k];
        const bool keep = f.continuity() == Continuity::Right ? u <= hi : u < hi;
        if (!keep) break;
        bps.push_back(u);
        levels.push_back(f.levels()[k]);
    }
    return StepFn::from_levels(f.lo(), hi, f.base(), std::move(bps), std::move(levels),
                               f.continuity());
}

void write_stepfn(std::ostream& os, const StepFn& f) {
    os << format_real(f.lo()) << ' ' << format_real(f.hi()) << ' '
       << (f.continuity() == Continuity::Right ? "right" : "left") << ' ' << format_real(f.base())
       << '\n';
    for (std::size_t k = 0; k < f.size(); ++k) {
        os << format_real(f.breakpoints()[k]) << ' ' << format_real(f.jump(k)) << '\n';
    }
}

std::string to_text(const StepFn& f) {
    std::ostringstream os;
    write_stepfn(os, f);
    return os.str();
}

StepFn read_stepfn(std::istream& is) {
    std::string header;
    while (std::getline(is, header) && header.find_first_not_of(" \t\r") == std::string::npos) {
    }
    std::istringstream hs(header);
    std::string lo, hi, conv, base;
    if (!(hs >> lo >> hi >> conv >> base)) throw ContractError("read_stepfn: malformed header");
    Continuity c;
    if (conv == "right") {
        c = Continuity::Right;
    } else if (conv == "left") {
        c = Continuity::Left;
    } else {
        throw ContractError("read_stepfn: unknown convention '" + conv + "'");
    }
    std::vector<double> bps, jumps;
    std::string line;
    while (std::getline(is, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream ls(line);
        std::string u, j;
        if (!(ls >> u >> j)) throw ContractError("read_stepfn: malformed line '" + line + "'");
        bps.push_back(parse_real(u));
        jumps.push_back(parse_real(j));
    }
    return StepFn(parse_real(lo), parse_real(hi), parse_real(base), std::move(bps),
                  std::move(jumps), c);
}

}  // namespace permboot
