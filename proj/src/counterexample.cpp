#include "permboot/counterexample.hpp"

#include "permboot/errors.hpp"
#include "permboot/io.hpp"

#include <algorithm>
#include <cmath>

namespace permboot {

namespace {

std::vector<double> slopes_of(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> s(x.size() - 1);
    for (std::size_t k = 0; k + 1 < x.size(); ++k) s[k] = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
    return s;
}

}  // namespace

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y)
    : PiecewiseLinear(x, y, x.size() >= 2 && x.size() == y.size() ? slopes_of(x, y)
                                                                   : std::vector<double>{}) {}

PiecewiseLinear::PiecewiseLinear(std::vector<double> x, std::vector<double> y,
                                 std::vector<double> slopes)
    : x_(std::move(x)), y_(std::move(y)), s_(std::move(slopes)) {
    if (x_.size() < 2 || x_.size() != y_.size()) {
        throw ContractError("PiecewiseLinear: need at least two knots with one value each");
    }
    if (s_.size() + 1 != x_.size()) throw ContractError("PiecewiseLinear: one slope per segment");
    for (std::size_t k = 1; k < x_.size(); ++k) {
        if (!(x_[k - 1] < x_[k])) throw ContractError("PiecewiseLinear: knots must increase");
        if (y_[k] < y_[k - 1]) throw ContractError("PiecewiseLinear: values must be nondecreasing");
        const double chord = (y_[k] - y_[k - 1]) / (x_[k] - x_[k - 1]);
        if (std::abs(chord - s_[k - 1]) > 1e-9 * std::max(1.0, std::abs(chord))) {
            throw ContractError("PiecewiseLinear: slope disagrees with the knots");
        }
    }
}

double PiecewiseLinear::slope_at(double t) const {
    if (!(lo() <= t && t <= hi())) {
        throw DomainError("PiecewiseLinear: " + format_real(t) + " outside the domain");
    }
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    if (it == x_.end()) return s_.back();
    return s_[static_cast<std::size_t>(it - x_.begin()) - 1];
}

double PiecewiseLinear::operator()(double t) const {
    if (!(lo() <= t && t <= hi())) {
        throw DomainError("PiecewiseLinear: " + format_real(t) + " outside the domain");
    }
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    if (it == x_.end()) return y_.back();
    const auto k = static_cast<std::size_t>(it - x_.begin()) - 1;
    if (t == x_[k]) return y_[k];
    return y_[k] + s_[k] * (t - x_[k]);
}

std::size_t PiecewiseLinear::segment_of_level(double p) const {
    if (p > y_.back()) {
        throw DomainError("PiecewiseLinear: level " + format_real(p) + " is never reached");
    }
    std::size_t k = 0;
    while (y_[k + 1] < p) ++k;
    return k;
}

double PiecewiseLinear::quantile(double p) const {
    if (y_.front() >= p) return x_.front();
    const auto k = segment_of_level(p);
    if (y_[k + 1] == p) {
        // Leftmost knot at that level.
        std::size_t j = k + 1;
        while (j > 0 && y_[j - 1] == p) --j;
        return x_[j];
    }
    return x_[k] + (p - y_[k]) / s_[k];
}

double PiecewiseLinear::inverse_increment(double c, double p) const {
    const double xi = quantile(p);
    const double target = p - c;
    if (target > y_.front()) {
        const auto k = segment_of_level(target);
        const double slope = s_[k];
        if (x_[k] <= xi && xi <= x_[k + 1] && slope > 0.0 && y_[k] < p && p <= y_[k + 1]) {
            return -c / slope;
        }
    }
    return quantile(target) - xi;
}

PiecewiseLinear identity_on_0_2() { return PiecewiseLinear({0.0, 2.0}, {0.0, 2.0}, {1.0}); }

PiecewiseLinear steepened_identity(long long n) {
    if (n < 1) throw ContractError("steepened_identity: n must be positive");
    const double t = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<double> x{0.0};
    std::vector<double> y{1.0 - t > 0.0 ? -t : -1.0};
    std::vector<double> s;
    if (1.0 - t > 0.0) {
        x.push_back(1.0 - t);
        y.push_back(1.0 - 2.0 * t);
        s.push_back(1.0);
    }
    x.push_back(1.0);
    y.push_back(1.0);
    s.push_back(2.0);
    if (1.0 + t < 2.0) {
        x.push_back(1.0 + t);
        y.push_back(1.0 + 2.0 * t);
        s.push_back(2.0);
    }
    x.push_back(2.0);
    y.push_back(1.0 + t < 2.0 ? 2.0 + t : 3.0);
    s.push_back(1.0 + t < 2.0 ? 1.0 : 2.0);
    return PiecewiseLinear(std::move(x), std::move(y), std::move(s));
}

std::vector<CounterexampleRow> inverse_counterexample(const std::vector<long long>& n_values) {
    const PiecewiseLinear a = identity_on_0_2();
    std::vector<CounterexampleRow> rows;
    for (long long n : n_values) {
        const PiecewiseLinear an = steepened_identity(n);
        CounterexampleRow row;
        row.n = n;
        row.t_n = 1.0 / std::sqrt(static_cast<double>(n));
        row.ratio = an.inverse_increment(row.t_n, 1.0) / row.t_n;
        // alpha = 1 and A' = 1 at the solution xi = 1.
        const double xi = a.quantile(1.0);
        row.derivative = -1.0 / a.slope_at(xi);
        row.gap = std::abs(row.ratio - row.derivative);
        rows.push_back(row);
    }
    return rows;
}

double increment_condition_probe(const std::string& family, long long n, double k) {
    if (n < 1) throw ContractError("increment_condition_probe: n must be positive");
    if (!(k > 0.0)) throw ContractError("increment_condition_probe: K must be positive");
    const double t = 1.0 / std::sqrt(static_cast<double>(n));
    // Offsets x around xi = 1 stay inside [0, 2].
    const double w = std::min(k * t, 1.0);

    if (family == "identity") return 0.0;
    if (family == "smooth") return t * w * w / t;
    if (family != "counterexample") {
        throw ContractError("increment_condition_probe: unknown family '" + family + "'");
    }
    // D(x) = A_n(1+x) - A_n(1) - A(1+x) + A(1): slope 1 on [-t, t], flat outside.
    std::vector<double> xs{-1.0}, ds{-t}, ss;
    if (t < 1.0) {
        xs.push_back(-t);
        ds.push_back(-t);
        ss.push_back(0.0);
    }
    xs.push_back(0.0);
    ds.push_back(0.0);
    ss.push_back(1.0);
    if (t < 1.0) {
        xs.push_back(t);
        ds.push_back(t);
        ss.push_back(1.0);
    }
    xs.push_back(1.0);
    ds.push_back(t);
    ss.push_back(t < 1.0 ? 0.0 : 1.0);
    const PiecewiseLinear d(xs, ds, ss);

    double sup = std::max(std::abs(d(-w)), std::abs(d(w)));
    for (double x : d.knots()) {
        if (std::abs(x) <= w) sup = std::max(sup, std::abs(d(x)));
    }
    return sup / t;
}

}  // namespace permboot
