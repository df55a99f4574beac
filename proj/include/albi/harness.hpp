#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "albi/core.hpp"
#include "albi/errors.hpp"
#include "albi/learner.hpp"
#include "albi/metrics.hpp"
#include "albi/rng.hpp"
#include "albi/strategies.hpp"

namespace albi::harness {

struct ExperimentConfig {
    std::string dataset_source;
    strategies::StrategyConfig strategy;
    int budget = 0;
    int batch_size = 1;
    int per_group_seed = 0;
    double train_fraction = 0.7;
    int repetitions = 1;
    std::uint64_t base_seed = 0;
    std::vector<metrics::MetricKind> metric_kinds;
    GroupId g0{0};
    GroupId g1{1};
    learner::Hyperparams hyper;
    bool budget_counts_seed = false;

    /// Labels actually acquired by the loop (the seed set may or may not
    /// count against the budget).
    int acquirable() const {
        return budget_counts_seed ? budget - 2 * per_group_seed : budget;
    }

    int iterations() const { return acquirable() / batch_size; }

    void validate() const {
        strategy.validate();
        hyper.validate();
        if (budget < 0) throw ConfigInvalid("budget must be non-negative");
        if (batch_size < 1) throw ConfigInvalid("batch_size must be a positive integer");
        if (per_group_seed < 0) throw ConfigInvalid("per_group_seed must be non-negative");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw ConfigInvalid("train_fraction must lie in (0,1)");
        if (repetitions < 1) throw ConfigInvalid("repetitions must be at least 1");
        if (metric_kinds.empty()) throw ConfigInvalid("at least one metric must be configured");
        if (g0 == g1) throw ConfigInvalid("g0 and g1 must differ");
        if (acquirable() < 0)
            throw ConfigInvalid("budget too small to cover the initial labeled set");
        if (acquirable() % batch_size != 0)
            throw ConfigInvalid("acquired label count must be divisible by batch_size");
    }
};

struct TrajectoryPoint {
    int iteration = 0;
    int n_labeled = 0;
    metrics::MetricKind metric = metrics::MetricKind::Accuracy;
    LabelKind label_kind = LabelKind::Observed;
    double value = 0.0;
};

struct MetricTrajectory {
    std::vector<TrajectoryPoint> points;
};

struct RepetitionResult {
    int repetition = 0;
    std::uint64_t seed = 0;
    MetricTrajectory trajectory;
    std::vector<std::string> warnings;
    bool aborted = false;
    std::string abort_reason;
};

struct AggregatePoint {
    int iteration = 0;
    int n_labeled = 0;
    metrics::MetricKind metric = metrics::MetricKind::Accuracy;
    LabelKind label_kind = LabelKind::Observed;
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<RepetitionResult> repetitions;
    std::vector<AggregatePoint> aggregate;
    bool partial = false;
};

struct ConfidenceInterval {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

struct DivergenceReport {
    metrics::MetricKind metric = metrics::MetricKind::Accuracy;
    double observed_trend_slope = 0.0;
    double gold_trend_slope = 0.0;
    bool sign_flip = false;
    bool opposite_trend = false;
};

/// Student-t interval: mean +/- t_{(1+level)/2, n-1} * s / sqrt(n).
inline ConfidenceInterval confidence_interval(const std::vector<double>& samples,
                                              double level) {
    if (samples.size() < 2) throw TooFewSamples(samples.size());
    if (!(level > 0.0 && level < 1.0)) throw ConfigInvalid("confidence level must lie in (0,1)");
    const auto n = static_cast<double>(samples.size());
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= n;
    double ss = 0.0;
    for (double x : samples) ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    const boost::math::students_t dist(n - 1.0);
    const double t = boost::math::quantile(dist, (1.0 + level) / 2.0);
    const double half = t * sd / std::sqrt(n);
    return {mean, mean - half, mean + half};
}

namespace detail {

inline metrics::EvalFrame test_frame(const Dataset& test, LabelKind kind, GroupId g0,
                                     GroupId g1, const std::vector<int>& predictions) {
    metrics::EvalFrame frame;
    frame.g0 = g0;
    frame.g1 = g1;
    frame.predictions = predictions;
    frame.labels.reserve(test.instances().size());
    frame.groups.reserve(test.instances().size());
    for (const auto& inst : test.instances()) {
        frame.labels.push_back(kind == LabelKind::Observed ? inst.observed_label
                                                           : inst.gold_label);
        frame.groups.push_back(inst.group);
    }
    return frame;
}

inline RepetitionResult run_repetition(const Dataset& dataset, const ExperimentConfig& config,
                                       int repetition) {
    RepetitionResult result;
    result.repetition = repetition;
    result.seed = config.base_seed ^ static_cast<std::uint64_t>(repetition);
    try {
        Rng rng(result.seed);
        auto [train_set, test_set] = split_dataset(dataset, config.train_fraction, rng);
        PoolState pool = initial_labeled_set(train_set, config.per_group_seed, rng);
        const int total_iterations = config.iterations();

        for (int iter = 0;; ++iter) {
            const auto rows = learner::observed_rows(train_set, pool.labeled_ids());
            const learner::Model model =
                learner::train(rows, train_set.feature_dim(), config.hyper);

            std::vector<int> predictions;
            predictions.reserve(test_set.instances().size());
            for (const auto& inst : test_set.instances())
                predictions.push_back(learner::predict_label(model, inst.features));

            const int n_labeled = static_cast<int>(pool.labeled_ids().size());
            for (LabelKind kind : {LabelKind::Observed, LabelKind::Gold}) {
                const auto frame =
                    test_frame(test_set, kind, config.g0, config.g1, predictions);
                for (metrics::MetricKind mk : config.metric_kinds)
                    result.trajectory.points.push_back(TrajectoryPoint{
                        iter, n_labeled, mk, kind, metrics::evaluate(mk, frame)});
            }

            if (iter == total_iterations) break;
            strategies::SelectionContext ctx{
                model,     train_set, pool, config.g0, config.g1, rng,
                [&](const std::string& msg) { result.warnings.push_back(msg); }};
            const auto chosen = strategies::select(ctx, config.strategy, config.batch_size);
            pool.acquire(chosen);
        }
    } catch (const Error& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        result.trajectory.points.clear();
    }
    return result;
}

}  // namespace detail

/// Aggregate mean and 95% Student-t interval per (iteration, metric,
/// label kind), computed over non-aborted repetitions. With a single value
/// the interval collapses to the point.
inline std::vector<AggregatePoint> aggregate_points(
    const std::vector<RepetitionResult>& repetitions) {
    std::map<std::tuple<int, int, int, int>, std::vector<double>> buckets;
    std::map<std::tuple<int, int, int, int>, int> n_labeled_of;
    for (const auto& rep : repetitions) {
        if (rep.aborted) continue;
        for (const auto& pt : rep.trajectory.points) {
            const auto key = std::make_tuple(pt.iteration, static_cast<int>(pt.metric),
                                             static_cast<int>(pt.label_kind), 0);
            buckets[key].push_back(pt.value);
            n_labeled_of[key] = pt.n_labeled;
        }
    }
    std::vector<AggregatePoint> out;
    out.reserve(buckets.size());
    for (const auto& [key, values] : buckets) {
        AggregatePoint pt;
        pt.iteration = std::get<0>(key);
        pt.metric = static_cast<metrics::MetricKind>(std::get<1>(key));
        pt.label_kind = static_cast<LabelKind>(std::get<2>(key));
        pt.n_labeled = n_labeled_of.at(key);
        if (values.size() >= 2) {
            const auto ci = confidence_interval(values, 0.95);
            pt.mean = ci.mean;
            pt.lo = ci.lo;
            pt.hi = ci.hi;
        } else {
            pt.mean = values.front();
            pt.lo = pt.mean;
            pt.hi = pt.mean;
        }
        out.push_back(pt);
    }
    std::sort(out.begin(), out.end(), [](const AggregatePoint& a, const AggregatePoint& b) {
        return std::make_tuple(a.iteration, static_cast<int>(a.metric),
                               static_cast<int>(a.label_kind)) <
               std::make_tuple(b.iteration, static_cast<int>(b.metric),
                               static_cast<int>(b.label_kind));
    });
    return out;
}

/// Runs the full acquisition protocol: per repetition, split, seed the
/// labeled pool, then alternate train / dual-evaluate / select / reveal until
/// the budget is exhausted, closing with a final evaluation. Repetition r is
/// seeded with base_seed xor r, so execution order (and `parallel`) never
/// changes results.
inline ExperimentResult run_experiment(const Dataset& dataset, const ExperimentConfig& config,
                                       int parallel = 1) {
    config.validate();
    if (parallel < 1) throw ConfigInvalid("parallel worker count must be positive");

    ExperimentResult result;
    result.config = config;
    result.repetitions.resize(static_cast<std::size_t>(config.repetitions));

    if (parallel == 1 || config.repetitions == 1) {
        for (int r = 0; r < config.repetitions; ++r)
            result.repetitions[static_cast<std::size_t>(r)] =
                detail::run_repetition(dataset, config, r);
    } else {
        std::vector<std::thread> workers;
        const int n_workers = std::min(parallel, config.repetitions);
        for (int w = 0; w < n_workers; ++w)
            workers.emplace_back([&, w] {
                for (int r = w; r < config.repetitions; r += n_workers)
                    result.repetitions[static_cast<std::size_t>(r)] =
                        detail::run_repetition(dataset, config, r);
            });
        for (auto& t : workers) t.join();
    }

    for (const auto& rep : result.repetitions)
        if (rep.aborted) result.partial = true;
    result.aggregate = aggregate_points(result.repetitions);
    return result;
}

namespace detail {

inline double ols_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

}  // namespace detail

/// Least-squares trend of the aggregate mean against n_labeled, one slope per
/// label kind, plus the two divergence flags.
inline DivergenceReport detect_divergence(const ExperimentResult& result,
                                          metrics::MetricKind metric) {
    std::vector<double> x_obs, y_obs, x_gold, y_gold;
    for (const auto& pt : result.aggregate) {
        if (pt.metric != metric) continue;
        if (pt.label_kind == LabelKind::Observed) {
            x_obs.push_back(pt.n_labeled);
            y_obs.push_back(pt.mean);
        } else {
            x_gold.push_back(pt.n_labeled);
            y_gold.push_back(pt.mean);
        }
    }
    if (x_obs.size() < 3 || x_gold.size() < 3)
        throw TooFewPoints(std::min(x_obs.size(), x_gold.size()));

    DivergenceReport report;
    report.metric = metric;
    report.observed_trend_slope = detail::ols_slope(x_obs, y_obs);
    report.gold_trend_slope = detail::ols_slope(x_gold, y_gold);
    report.sign_flip = y_obs.back() * y_gold.back() < 0.0;
    report.opposite_trend = report.observed_trend_slope * report.gold_trend_slope < 0.0;
    return report;
}

struct ComparisonRow {
    std::string strategy;
    double observed_mean = 0.0;
    double observed_lo = 0.0;
    double observed_hi = 0.0;
    double gold_mean = 0.0;
    double gold_lo = 0.0;
    double gold_hi = 0.0;
};

struct StrategyComparison {
    metrics::MetricKind metric = metrics::MetricKind::Accuracy;
    std::vector<ComparisonRow> rows;
    std::string observed_argmin;
    std::string gold_argmin;
    bool model_selection_hazard = false;
};

namespace detail {

inline AggregatePoint final_point(const ExperimentResult& result, metrics::MetricKind metric,
                                  LabelKind kind) {
    const AggregatePoint* best = nullptr;
    for (const auto& pt : result.aggregate)
        if (pt.metric == metric && pt.label_kind == kind &&
            (!best || pt.iteration > best->iteration))
            best = &pt;
    if (!best)
        throw IncompatibleResults(std::string("no aggregate points for metric ") +
                                  metrics::to_string(metric));
    return *best;
}

}  // namespace detail

/// Final-iteration mean and interval per strategy under both label kinds.
/// Flags a model-selection hazard when the best-looking strategy (smallest
/// |mean|) differs between observed and gold evaluation.
inline StrategyComparison compare_strategies(
    const std::map<std::string, ExperimentResult>& results, metrics::MetricKind metric) {
    if (results.empty()) throw IncompatibleResults("no results to compare");
    const ExperimentResult& first = results.begin()->second;
    for (const auto& [name, res] : results) {
        const auto& a = first.config;
        const auto& b = res.config;
        if (a.dataset_source != b.dataset_source || a.budget != b.budget ||
            a.batch_size != b.batch_size || a.per_group_seed != b.per_group_seed ||
            a.train_fraction != b.train_fraction || a.budget_counts_seed != b.budget_counts_seed)
            throw IncompatibleResults("result " + name +
                                      " was produced under a different protocol");
        bool has_metric = false;
        for (auto mk : b.metric_kinds) has_metric = has_metric || mk == metric;
        if (!has_metric)
            throw IncompatibleResults("result " + name + " did not record metric " +
                                      metrics::to_string(metric));
    }

    StrategyComparison cmp;
    cmp.metric = metric;
    const ComparisonRow* best_obs = nullptr;
    const ComparisonRow* best_gold = nullptr;
    cmp.rows.reserve(results.size());
    for (const auto& [name, res] : results) {
        const auto obs = detail::final_point(res, metric, LabelKind::Observed);
        const auto gold = detail::final_point(res, metric, LabelKind::Gold);
        cmp.rows.push_back(ComparisonRow{name, obs.mean, obs.lo, obs.hi, gold.mean, gold.lo,
                                         gold.hi});
    }
    for (const auto& row : cmp.rows) {
        if (!best_obs || std::abs(row.observed_mean) < std::abs(best_obs->observed_mean))
            best_obs = &row;
        if (!best_gold || std::abs(row.gold_mean) < std::abs(best_gold->gold_mean))
            best_gold = &row;
    }
    cmp.observed_argmin = best_obs->strategy;
    cmp.gold_argmin = best_gold->strategy;
    cmp.model_selection_hazard = cmp.rows.size() > 1 && cmp.observed_argmin != cmp.gold_argmin;
    return cmp;
}

}  // namespace albi::harness
