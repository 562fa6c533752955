#include "permboot/statistics.hpp"

#include "permboot/errors.hpp"
#include "permboot/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace permboot {

const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::PlainIndicator: return "plain_indicator";
        case Scenario::SurvivalNA: return "survival_na";
        case Scenario::SurvivalKM: return "survival_km";
        case Scenario::WilcoxonStat: return "wilcoxon";
        case Scenario::RMST: return "rmst";
    }
    return "unknown";
}

Scenario scenario_from_string(const std::string& name) {
    for (auto s : {Scenario::PlainIndicator, Scenario::SurvivalNA, Scenario::SurvivalKM,
                   Scenario::WilcoxonStat, Scenario::RMST}) {
        if (name == to_string(s)) return s;
    }
    throw ContractError("unknown scenario '" + name + "'");
}

bool is_survival(Scenario s) {
    return s == Scenario::SurvivalNA || s == Scenario::SurvivalKM || s == Scenario::RMST;
}

HazardBundle pooled_bundle(const PooledData& data, double tau) {
    return {at_risk_process(data.pooled), uncensored_subdist(data.pooled), tau};
}

namespace {

class IndicatorEvaluator final : public StatisticEvaluator {
public:
    IndicatorEvaluator(const PooledData& data, std::span<const double> grid)
        : sizes_(data.sizes),
          cumulative_(data.cumulative),
          grid_size_(grid.size()),
          root_(std::sqrt(static_cast<double>(data.total()))),
          counts_(data.num_groups() * (grid.size() + 1)) {
        const StepFn h = pooled_ecdf(data);
        for (double g : grid) pooled_.push_back(h(g));
        for (const auto& obs : data.pooled) {
            bins_.push_back(static_cast<std::size_t>(
                std::lower_bound(grid.begin(), grid.end(), obs.value) - grid.begin()));
        }
    }

    std::size_t dim() const override { return sizes_.size() * grid_size_; }

    void evaluate(std::span<const std::size_t> assignment, std::span<double> out) override {
        std::fill(counts_.begin(), counts_.end(), 0);
        const std::size_t width = grid_size_ + 1;
        for (std::size_t j = 0; j < sizes_.size(); ++j) {
            for (std::size_t pos = cumulative_[j]; pos < cumulative_[j + 1]; ++pos) {
                ++counts_[j * width + bins_[assignment[pos]]];
            }
            const auto n = static_cast<double>(sizes_[j]);
            std::size_t c = 0;
            for (std::size_t k = 0; k < grid_size_; ++k) {
                c += counts_[j * width + k];
                out[j * grid_size_ + k] = root_ * (static_cast<double>(c) / n - pooled_[k]);
            }
        }
    }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> cumulative_;
    std::size_t grid_size_;
    double root_;
    std::vector<double> pooled_;
    std::vector<std::size_t> bins_;
    std::vector<std::size_t> counts_;
};

class SurvivalEvaluator final : public StatisticEvaluator {
public:
    SurvivalEvaluator(Scenario scenario, const PooledData& data, std::span<const double> grid,
                      double tau)
        : scenario_(scenario),
          sizes_(data.sizes),
          cumulative_(data.cumulative),
          grid_(grid.begin(), grid.end()),
          tau_(tau),
          root_(std::sqrt(static_cast<double>(data.total()))) {
        if (data.kind != SampleKind::Censored) {
            throw ContractError("survival statistic: data are not censored");
        }
        for (double g : grid_) {
            if (!(g >= 0.0 && g <= tau)) {
                throw ContractError("survival statistic: grid must lie in [0, tau]");
            }
        }
        for (const auto& obs : data.pooled) times_.push_back(obs.value);
        std::sort(times_.begin(), times_.end());
        times_.erase(std::unique(times_.begin(), times_.end()), times_.end());
        for (const auto& obs : data.pooled) {
            index_.push_back(static_cast<std::size_t>(
                std::lower_bound(times_.begin(), times_.end(), obs.value) - times_.begin()));
            event_.push_back(obs.event ? 1 : 0);
        }
        within_tau_ = static_cast<std::size_t>(
            std::upper_bound(times_.begin(), times_.end(), tau) - times_.begin());
        for (double g : grid_) {
            grid_pos_.push_back(static_cast<std::size_t>(
                std::upper_bound(times_.begin(), times_.end(), g) - times_.begin()));
        }
        counts_.resize(times_.size());
        events_.resize(times_.size());

        const HazardBundle bundle = pooled_bundle(data, tau);
        if (scenario_ == Scenario::SurvivalNA) {
            const StepFn na = nelson_aalen(bundle);
            for (double g : grid_) pooled_.push_back(na(g));
        } else if (scenario_ == Scenario::SurvivalKM) {
            const StepFn km = kaplan_meier(bundle);
            for (double g : grid_) pooled_.push_back(km(g));
        } else {
            pooled_.push_back(rmst(kaplan_meier(bundle), tau));
        }
    }

    std::size_t dim() const override {
        return scenario_ == Scenario::RMST ? sizes_.size() : sizes_.size() * grid_.size();
    }

    void evaluate(std::span<const std::size_t> assignment, std::span<double> out) override {
        for (std::size_t j = 0; j < sizes_.size(); ++j) {
            std::fill(counts_.begin(), counts_.end(), 0);
            std::fill(events_.begin(), events_.end(), 0);
            for (std::size_t pos = cumulative_[j]; pos < cumulative_[j + 1]; ++pos) {
                const std::size_t i = assignment[pos];
                ++counts_[index_[i]];
                events_[index_[i]] += event_[i];
            }
            sweep(j, out);
        }
    }

private:
    void sweep(std::size_t j, std::span<double> out) const {
        const std::size_t n = sizes_[j];
        std::size_t removed = 0;
        double lambda = 0.0;
        double surv = 1.0;
        double area = 0.0;
        double prev = 0.0;
        std::size_t k = 0;
        const std::size_t g = grid_.size();
        auto record = [&](double value) {
            out[j * g + k] = root_ * (value - pooled_[k]);
            ++k;
        };
        for (std::size_t d = 0; d <= within_tau_; ++d) {
            while (k < g && grid_pos_[k] == d && scenario_ != Scenario::RMST) {
                record(scenario_ == Scenario::SurvivalNA ? lambda : surv);
            }
            if (d == within_tau_) break;
            area += surv * (times_[d] - prev);
            prev = times_[d];
            if (events_[d] > 0) {
                const double jump = static_cast<double>(events_[d]) /
                                    static_cast<double>(n - removed);
                lambda += jump;
                surv *= 1.0 - jump;
            }
            removed += counts_[d];
        }
        if (scenario_ == Scenario::RMST) {
            area += surv * (tau_ - prev);
            out[j] = root_ * (area - pooled_[0]);
        }
    }

    Scenario scenario_;
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> cumulative_;
    std::vector<double> grid_;
    double tau_;
    double root_;
    std::vector<double> times_;
    std::vector<std::size_t> index_;
    std::vector<std::size_t> event_;
    std::size_t within_tau_ = 0;
    std::vector<std::size_t> grid_pos_;
    std::vector<double> pooled_;
    std::vector<std::size_t> counts_;
    std::vector<std::size_t> events_;
};

class WilcoxonEvaluator final : public StatisticEvaluator {
public:
    explicit WilcoxonEvaluator(const PooledData& data)
        : cumulative_(data.cumulative),
          n1_(data.sizes.at(0)),
          n2_(data.sizes.at(1)),
          root_(std::sqrt(static_cast<double>(data.total()))) {
        std::vector<double> values = data.values();
        std::vector<double> distinct = values;
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (double v : values) {
            rank_.push_back(static_cast<std::size_t>(
                std::lower_bound(distinct.begin(), distinct.end(), v) - distinct.begin()));
        }
        c1_.resize(distinct.size());
        c2_.resize(distinct.size());
        std::vector<std::uint64_t> all(distinct.size());
        for (auto r : rank_) ++all[r];
        std::uint64_t cum = 0, total = 0;
        for (auto c : all) {
            cum += c;
            total += cum * c;
        }
        const auto n = static_cast<double>(data.total());
        pooled_ = static_cast<double>(total) / (n * n);
    }

    std::size_t dim() const override { return 1; }

    void evaluate(std::span<const std::size_t> assignment, std::span<double> out) override {
        std::fill(c1_.begin(), c1_.end(), 0);
        std::fill(c2_.begin(), c2_.end(), 0);
        for (std::size_t pos = cumulative_[0]; pos < cumulative_[1]; ++pos) ++c1_[rank_[assignment[pos]]];
        for (std::size_t pos = cumulative_[1]; pos < cumulative_[2]; ++pos) ++c2_[rank_[assignment[pos]]];
        std::uint64_t cum = 0, total = 0;
        for (std::size_t r = 0; r < c1_.size(); ++r) {
            cum += c1_[r];
            total += cum * c2_[r];
        }
        const double w = static_cast<double>(total) / (static_cast<double>(n1_) * static_cast<double>(n2_));
        out[0] = root_ * (w - pooled_);
    }

private:
    std::vector<std::size_t> cumulative_;
    std::size_t n1_;
    std::size_t n2_;
    double root_;
    double pooled_ = 0.0;
    std::vector<std::size_t> rank_;
    std::vector<std::uint64_t> c1_;
    std::vector<std::uint64_t> c2_;
};

}  // namespace

std::unique_ptr<StatisticEvaluator> make_evaluator(Scenario scenario, const PooledData& data,
                                                   std::span<const double> grid, double tau) {
    switch (scenario) {
        case Scenario::PlainIndicator:
            if (data.kind != SampleKind::Plain) {
                throw ContractError("plain_indicator statistic: data are censored");
            }
            return std::make_unique<IndicatorEvaluator>(data, grid);
        case Scenario::WilcoxonStat:
            if (data.kind != SampleKind::Plain) {
                throw ContractError("wilcoxon statistic: data are censored");
            }
            return std::make_unique<WilcoxonEvaluator>(data);
        case Scenario::SurvivalNA:
        case Scenario::SurvivalKM:
        case Scenario::RMST:
            return std::make_unique<SurvivalEvaluator>(scenario, data, grid, tau);
    }
    throw ContractError("make_evaluator: unknown scenario");
}

std::vector<double> reference_statistic(Scenario scenario, const PooledData& data,
                                        const ResampleDraw& draw, std::span<const double> grid,
                                        double tau) {
    const double root = std::sqrt(static_cast<double>(data.total()));
    std::vector<double> out;
    if (scenario == Scenario::PlainIndicator) {
        const auto groups = resampled_group_ecdfs(data, draw);
        const auto m = centered_process(groups, pooled_ecdf(data), data.total(), grid);
        for (Eigen::Index j = 0; j < m.rows(); ++j) {
            for (Eigen::Index k = 0; k < m.cols(); ++k) out.push_back(m(j, k));
        }
        return out;
    }
    if (scenario == Scenario::WilcoxonStat) {
        const auto groups = resampled_group_ecdfs(data, draw);
        const StepFn h = pooled_ecdf(data);
        out.push_back(root * (wilcoxon(groups[0], groups[1], kInf) - wilcoxon(h, h, kInf)));
        return out;
    }
    const HazardBundle pooled = pooled_bundle(data, tau);
    const auto groups = resampled_group_survival(data, draw);
    if (scenario == Scenario::RMST) {
        const double base = rmst(kaplan_meier(pooled), tau);
        for (const auto& g : groups) {
            out.push_back(root * (rmst(kaplan_meier({g.at_risk, g.uncensored, tau}), tau) - base));
        }
        return out;
    }
    const bool na = scenario == Scenario::SurvivalNA;
    const StepFn pooled_fn = na ? nelson_aalen(pooled) : kaplan_meier(pooled);
    for (const auto& g : groups) {
        const HazardBundle b{g.at_risk, g.uncensored, tau};
        const StepFn f = na ? nelson_aalen(b) : kaplan_meier(b);
        for (double t : grid) out.push_back(root * (f(t) - pooled_fn(t)));
    }
    return out;
}

}  // namespace permboot
