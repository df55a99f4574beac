#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "albi/core.hpp"
#include "albi/errors.hpp"
#include "albi/learner.hpp"
#include "albi/metrics.hpp"
#include "albi/rng.hpp"

namespace albi::strategies {

enum class StrategyKind { Random, Uncertainty, Adaptive, AdaptiveUncertainty, Fal };

inline const char* to_string(StrategyKind k) {
    switch (k) {
        case StrategyKind::Random: return "random";
        case StrategyKind::Uncertainty: return "uncertainty";
        case StrategyKind::Adaptive: return "adaptive";
        case StrategyKind::AdaptiveUncertainty: return "adaptive_uncertainty";
        case StrategyKind::Fal: return "fal";
    }
    return "?";
}

inline StrategyKind strategy_kind_from_string(const std::string& s) {
    if (s == "random") return StrategyKind::Random;
    if (s == "uncertainty") return StrategyKind::Uncertainty;
    if (s == "adaptive") return StrategyKind::Adaptive;
    if (s == "adaptive_uncertainty") return StrategyKind::AdaptiveUncertainty;
    if (s == "fal") return StrategyKind::Fal;
    throw ConfigInvalid("unknown strategy: " + s);
}

struct StrategyConfig {
    StrategyKind kind = StrategyKind::Random;
    double p = 0.5;
    double alpha = 0.5;
    metrics::FairnessTarget fairness_target = metrics::FairnessTarget::AccGap;
    int fal_candidate_cap = 50;

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0)) throw ConfigInvalid("strategy p must lie in [0,1]");
        if (!(alpha >= 0.0 && alpha <= 1.0))
            throw ConfigInvalid("strategy alpha must lie in [0,1]");
        if (fal_candidate_cap < 1)
            throw ConfigInvalid("fal_candidate_cap must be a positive integer");
    }
};

/// Everything a selection call may read. The model must have been trained on
/// exactly the current labeled set's observed labels.
struct SelectionContext {
    const learner::Model& model;
    const Dataset& dataset;
    const PoolState& pool;
    GroupId g0;
    GroupId g1;
    Rng& rng;
    std::function<void(const std::string&)> warn = {};

    void emit_warning(const std::string& msg) const {
        if (warn) warn(msg);
    }
};

namespace detail {

inline int group_index(const SelectionContext& ctx, GroupId g) {
    if (g == ctx.g0) return 0;
    if (g == ctx.g1) return 1;
    throw UnknownGroup(g.value);
}

inline void require_pool(const PoolState& pool, int batch) {
    if (batch <= 0) throw ConfigInvalid("selection batch must be positive");
    const int available = static_cast<int>(pool.unlabeled_ids().size());
    if (available < batch) throw PoolExhausted(batch, available);
}

/// Entropy of the model's prediction for every unlabeled id, indexed by id.
inline std::vector<double> pool_entropies(const SelectionContext& ctx) {
    std::vector<double> h(static_cast<std::size_t>(ctx.dataset.size()), 0.0);
    for (int id : ctx.pool.unlabeled_ids())
        h[static_cast<std::size_t>(id)] =
            learner::entropy_bits(learner::predict_proba(ctx.model, ctx.dataset.at(id).features));
    return h;
}

/// Ids sorted by (entropy descending, id ascending), the uncertainty order.
inline std::vector<int> entropy_order(const SelectionContext& ctx,
                                      const std::vector<double>& h) {
    std::vector<int> ids = ctx.pool.unlabeled_ids();
    std::sort(ids.begin(), ids.end(), [&](int a, int b) {
        const double ha = h[static_cast<std::size_t>(a)];
        const double hb = h[static_cast<std::size_t>(b)];
        if (ha != hb) return ha > hb;
        return a < b;
    });
    return ids;
}

inline metrics::EvalFrame labeled_frame(const SelectionContext& ctx,
                                        const learner::Model& model) {
    metrics::EvalFrame frame;
    frame.g0 = ctx.g0;
    frame.g1 = ctx.g1;
    for (int id : ctx.pool.labeled_ids()) {
        const Instance& inst = ctx.dataset.at(id);
        frame.predictions.push_back(learner::predict_label(model, inst.features));
        frame.labels.push_back(inst.observed_label);
        frame.groups.push_back(inst.group);
    }
    return frame;
}

/// std::nullopt when the target's gap is undefined on the frame.
inline std::optional<double> try_target_gap(metrics::FairnessTarget target,
                                            const metrics::EvalFrame& frame) {
    try {
        return metrics::target_gap_magnitude(target, frame);
    } catch (const EmptyGroup&) {
    } catch (const NoPositives&) {
    } catch (const NoNegatives&) {
    }
    return std::nullopt;
}

}  // namespace detail

/// Returns the group whose per-group statistic (accuracy, TPR, or 1 - FPR,
/// matching the target) is lower on the current labeled set under observed
/// labels. Ties go to g0.
inline GroupId identify_disadvantaged(const SelectionContext& ctx,
                                      metrics::FairnessTarget target) {
    long long n[2] = {0, 0}, correct[2] = {0, 0};
    long long pos[2] = {0, 0}, tp[2] = {0, 0};
    long long neg[2] = {0, 0}, fp[2] = {0, 0};
    for (int id : ctx.pool.labeled_ids()) {
        const Instance& inst = ctx.dataset.at(id);
        const int gi = detail::group_index(ctx, inst.group);
        const int pred = learner::predict_label(ctx.model, inst.features);
        ++n[gi];
        if (pred == inst.observed_label) ++correct[gi];
        if (inst.observed_label == 1) {
            ++pos[gi];
            if (pred == 1) ++tp[gi];
        } else {
            ++neg[gi];
            if (pred == 1) ++fp[gi];
        }
    }
    double stat[2];
    for (int gi = 0; gi < 2; ++gi) {
        const int group = gi == 0 ? ctx.g0.value : ctx.g1.value;
        switch (target) {
            case metrics::FairnessTarget::AccGap:
                if (n[gi] == 0)
                    throw MetricUndefined("no labeled instances in group " +
                                          std::to_string(group));
                stat[gi] = static_cast<double>(correct[gi]) / static_cast<double>(n[gi]);
                break;
            case metrics::FairnessTarget::TprGap:
                if (pos[gi] == 0)
                    throw MetricUndefined("no labeled positives in group " +
                                          std::to_string(group));
                stat[gi] = static_cast<double>(tp[gi]) / static_cast<double>(pos[gi]);
                break;
            case metrics::FairnessTarget::FprGap:
                if (neg[gi] == 0)
                    throw MetricUndefined("no labeled negatives in group " +
                                          std::to_string(group));
                stat[gi] = 1.0 - static_cast<double>(fp[gi]) / static_cast<double>(neg[gi]);
                break;
        }
    }
    return stat[1] < stat[0] ? ctx.g1 : ctx.g0;
}

namespace detail {

/// Target statistic with accuracy fallback when the target is undefined.
inline GroupId identify_or_fallback(const SelectionContext& ctx,
                                    metrics::FairnessTarget target) {
    try {
        return identify_disadvantaged(ctx, target);
    } catch (const MetricUndefined&) {
        if (target == metrics::FairnessTarget::AccGap) throw;
        ctx.emit_warning("fairness target undefined on labeled set; identifying by accuracy");
        return identify_disadvantaged(ctx, metrics::FairnessTarget::AccGap);
    }
}

}  // namespace detail

inline std::vector<int> select_random(const SelectionContext& ctx, int batch) {
    detail::require_pool(ctx.pool, batch);
    std::vector<int> remaining = ctx.pool.unlabeled_ids();
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
        const auto idx = ctx.rng.below(remaining.size());
        out.push_back(remaining[static_cast<std::size_t>(idx)]);
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(idx));
    }
    return out;
}

inline std::vector<int> select_uncertainty(const SelectionContext& ctx, int batch) {
    detail::require_pool(ctx.pool, batch);
    const auto h = detail::pool_entropies(ctx);
    auto order = detail::entropy_order(ctx, h);
    order.resize(static_cast<std::size_t>(batch));
    return order;
}

inline std::vector<int> select_adaptive(const SelectionContext& ctx,
                                        const StrategyConfig& config, int batch) {
    detail::require_pool(ctx.pool, batch);
    const GroupId disadvantaged = detail::identify_or_fallback(ctx, config.fairness_target);
    std::vector<int> remaining = ctx.pool.unlabeled_ids();
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
        bool restrict_to_group;
        if (config.p <= 0.0)
            restrict_to_group = false;
        else if (config.p >= 1.0)
            restrict_to_group = true;
        else
            restrict_to_group = ctx.rng.bernoulli(config.p);

        std::vector<int> group_pool;
        if (restrict_to_group) {
            for (int id : remaining)
                if (ctx.dataset.at(id).group == disadvantaged) group_pool.push_back(id);
            if (group_pool.empty()) {
                ctx.emit_warning("disadvantaged-group pool exhausted; drawing from full pool");
                restrict_to_group = false;
            }
        }
        const std::vector<int>& view = restrict_to_group ? group_pool : remaining;
        const auto idx = ctx.rng.below(view.size());
        const int chosen = view[static_cast<std::size_t>(idx)];
        out.push_back(chosen);
        remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));
    }
    return out;
}

inline std::vector<int> select_adaptive_uncertainty(const SelectionContext& ctx,
                                                    const StrategyConfig& config, int batch) {
    detail::require_pool(ctx.pool, batch);
    const GroupId disadvantaged = detail::identify_or_fallback(ctx, config.fairness_target);
    const auto h = detail::pool_entropies(ctx);
    std::vector<int> remaining = ctx.pool.unlabeled_ids();
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(batch));
    auto better = [&](int a, int b) {
        const double ha = h[static_cast<std::size_t>(a)];
        const double hb = h[static_cast<std::size_t>(b)];
        if (ha != hb) return ha > hb;
        return a < b;
    };
    for (int i = 0; i < batch; ++i) {
        bool restrict_to_group;
        if (config.p <= 0.0)
            restrict_to_group = false;
        else if (config.p >= 1.0)
            restrict_to_group = true;
        else
            restrict_to_group = ctx.rng.bernoulli(config.p);

        int chosen = -1;
        for (int id : remaining) {
            if (restrict_to_group && ctx.dataset.at(id).group != disadvantaged) continue;
            if (chosen < 0 || better(id, chosen)) chosen = id;
        }
        if (chosen < 0) {
            ctx.emit_warning("disadvantaged-group pool exhausted; drawing from full pool");
            for (int id : remaining)
                if (chosen < 0 || better(id, chosen)) chosen = id;
        }
        out.push_back(chosen);
        remaining.erase(std::find(remaining.begin(), remaining.end(), chosen));
    }
    return out;
}

inline std::vector<int> select_fal(const SelectionContext& ctx, const StrategyConfig& config,
                                   int batch) {
    detail::require_pool(ctx.pool, batch);
    const auto h = detail::pool_entropies(ctx);
    auto order = detail::entropy_order(ctx, h);
    const auto cap = static_cast<std::size_t>(
        std::max(config.fal_candidate_cap, batch));
    if (order.size() > cap) order.resize(cap);
    std::vector<int>& candidates = order;

    if (config.alpha == 1.0) {
        candidates.resize(static_cast<std::size_t>(batch));
        return candidates;
    }

    const auto current_frame = detail::labeled_frame(ctx, ctx.model);
    const auto f_current = detail::try_target_gap(config.fairness_target, current_frame);
    if (!f_current) {
        ctx.emit_warning("fairness target undefined on labeled set; selecting by uncertainty");
        candidates.resize(static_cast<std::size_t>(batch));
        return candidates;
    }

    std::vector<learner::TrainRow> base_rows =
        learner::observed_rows(ctx.dataset, ctx.pool.labeled_ids());

    std::vector<double> improvement(candidates.size(), 0.0);
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const Instance& cand = ctx.dataset.at(candidates[c]);
        const double p1 = learner::predict_proba(ctx.model, cand.features);
        double expected = 0.0;
        for (int y = 0; y <= 1; ++y) {
            std::vector<learner::TrainRow> rows = base_rows;
            rows.push_back(learner::TrainRow{cand.features, y});
            const learner::Model retrained =
                learner::train(rows, ctx.dataset.feature_dim(), ctx.model.hyper);

            metrics::EvalFrame after = detail::labeled_frame(ctx, retrained);
            after.predictions.push_back(learner::predict_label(retrained, cand.features));
            after.labels.push_back(y);
            after.groups.push_back(cand.group);
            const auto f_after = detail::try_target_gap(config.fairness_target, after);
            const double delta = *f_current - (f_after ? *f_after : *f_current);
            expected += (y == 1 ? p1 : 1.0 - p1) * delta;
        }
        improvement[c] = expected;
    }

    auto min_max = [](const std::vector<double>& v) {
        double lo = v[0], hi = v[0];
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        return std::pair<double, double>(lo, hi);
    };
    auto normalized = [&](double x, std::pair<double, double> range) {
        return range.second > range.first ? (x - range.first) / (range.second - range.first)
                                          : 0.0;
    };
    std::vector<double> cand_entropy(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c)
        cand_entropy[c] = h[static_cast<std::size_t>(candidates[c])];
    const auto h_range = min_max(cand_entropy);
    const auto i_range = min_max(improvement);

    std::vector<std::pair<double, int>> scored(candidates.size());
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const double score = config.alpha * normalized(cand_entropy[c], h_range) +
                             (1.0 - config.alpha) * normalized(improvement[c], i_range);
        scored[c] = {score, candidates[c]};
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) out.push_back(scored[static_cast<std::size_t>(i)].second);
    return out;
}

inline std::vector<int> select(const SelectionContext& ctx, const StrategyConfig& config,
                               int batch) {
    config.validate();
    switch (config.kind) {
        case StrategyKind::Random: return select_random(ctx, batch);
        case StrategyKind::Uncertainty: return select_uncertainty(ctx, batch);
        case StrategyKind::Adaptive: return select_adaptive(ctx, config, batch);
        case StrategyKind::AdaptiveUncertainty:
            return select_adaptive_uncertainty(ctx, config, batch);
        case StrategyKind::Fal: return select_fal(ctx, config, batch);
    }
    throw ConfigInvalid("unknown strategy kind");
}

}  // namespace albi::strategies
