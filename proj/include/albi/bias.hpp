#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "albi/core.hpp"
#include "albi/errors.hpp"
#include "albi/rng.hpp"

namespace albi::bias {

/// Per-instance crowd annotations: instance id -> (annotator id -> binary label).
struct AnnotationTable {
    std::map<int, std::map<int, int>> rows;

    bool empty() const { return rows.empty(); }

    std::vector<int> annotator_ids() const {
        std::vector<int> ids;
        for (const auto& [inst, by_annotator] : rows)
            for (const auto& [annotator, label] : by_annotator) {
                (void)inst;
                (void)label;
                ids.push_back(annotator);
            }
        std::sort(ids.begin(), ids.end());
        ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
        return ids;
    }
};

struct LabelerStats {
    int annotator_id = 0;
    double accuracy = 0.0;
    double disparity = 0.0;
    bool disparity_defined = false;
    long long n_labeled = 0;
    std::map<GroupId, std::optional<double>> per_group_accuracy;
};

/// How an annotator's cross-group performance disparity is measured.
enum class DisparityMeasure { AbsAccuracyGap, AbsFprGap };

inline const char* to_string(DisparityMeasure m) {
    switch (m) {
        case DisparityMeasure::AbsAccuracyGap: return "abs_accuracy_gap";
        case DisparityMeasure::AbsFprGap: return "abs_fpr_gap";
    }
    return "?";
}

inline DisparityMeasure disparity_measure_from_string(const std::string& s) {
    if (s == "abs_accuracy_gap") return DisparityMeasure::AbsAccuracyGap;
    if (s == "abs_fpr_gap") return DisparityMeasure::AbsFprGap;
    throw ConfigInvalid("unknown disparity measure: " + s);
}

/// Rewrites gold labels so both groups end at the reference group's positive
/// rate: k = round(n_low * (p_ref - p_low)) observed-negative instances of the
/// low-rate group, chosen uniformly, get gold_label 1. Everything else keeps
/// gold_label == observed_label. Observed labels are untouched.
inline Dataset parity_flip(const Dataset& dataset, GroupId low_rate_group,
                           GroupId reference_group, Rng& rng) {
    const double p_low = positive_rate(dataset, low_rate_group, LabelKind::Observed);
    const double p_ref = positive_rate(dataset, reference_group, LabelKind::Observed);
    if (p_low > p_ref) throw RateOrderViolated(p_low, p_ref);

    std::vector<int> negatives;
    long long n_low = 0;
    for (const auto& inst : dataset.instances()) {
        if (inst.group != low_rate_group) continue;
        ++n_low;
        if (inst.observed_label == 0) negatives.push_back(inst.id);
    }
    const auto k = static_cast<std::size_t>(
        detail::round_half_up(static_cast<double>(n_low) * (p_ref - p_low)));
    if (k > negatives.size())
        throw InsufficientNegatives(static_cast<int>(k), static_cast<int>(negatives.size()));

    const std::vector<int> flip_ids = rng.sample_without_replacement(negatives, k);
    std::vector<char> flip(dataset.size(), 0);
    for (int id : flip_ids) flip[static_cast<std::size_t>(id)] = 1;

    std::vector<Instance> out = dataset.instances();
    for (auto& inst : out)
        inst.gold_label = flip[static_cast<std::size_t>(inst.id)] ? 1 : inst.observed_label;
    return Dataset(std::move(out), dataset.feature_dim(), dataset.name());
}

using FlipRateMap = std::map<std::pair<GroupId, int>, double>;

/// Rewrites observed labels by flipping each instance's gold label
/// independently with the (group, gold-label)-specific rate. Missing map
/// entries mean rate 0. Gold labels are untouched. One rng draw per instance
/// regardless of rate, so draw alignment is stable across rate settings.
inline Dataset group_noise(const Dataset& dataset_with_gold, const FlipRateMap& flip_rates,
                           Rng& rng) {
    for (const auto& [key, rate] : flip_rates)
        if (!(rate >= 0.0 && rate <= 1.0))
            throw RateOutOfRange(rate);

    std::vector<Instance> out = dataset_with_gold.instances();
    for (auto& inst : out) {
        double rate = 0.0;
        if (auto it = flip_rates.find({inst.group, inst.gold_label}); it != flip_rates.end())
            rate = it->second;
        const bool flip = rng.bernoulli(rate);
        inst.observed_label = flip ? 1 - inst.gold_label : inst.gold_label;
    }
    return Dataset(std::move(out), dataset_with_gold.feature_dim(), dataset_with_gold.name());
}

/// Per-annotator accuracy against gold, with a cross-group disparity under the
/// chosen measure. Disparity is 0 and flagged undefined when the annotator
/// covers only one group (or, under AbsFprGap, lacks gold-negatives in one).
inline std::vector<LabelerStats> labeler_stats(
    const AnnotationTable& table, const Dataset& dataset_with_gold, GroupId g0, GroupId g1,
    DisparityMeasure measure = DisparityMeasure::AbsAccuracyGap) {
    struct Tally {
        long long n = 0, correct = 0;
        long long n_g[2] = {0, 0}, correct_g[2] = {0, 0};
        long long gold_neg_g[2] = {0, 0}, false_pos_g[2] = {0, 0};
    };
    std::map<int, Tally> tallies;
    for (const auto& [instance_id, by_annotator] : table.rows) {
        if (instance_id < 0 || instance_id >= dataset_with_gold.size())
            throw UnknownInstance(instance_id);
        const Instance& inst = dataset_with_gold.at(instance_id);
        const int gi = inst.group == g0 ? 0 : (inst.group == g1 ? 1 : -1);
        if (gi < 0) throw UnknownGroup(inst.group.value);
        for (const auto& [annotator, label] : by_annotator) {
            if ((label & ~1) != 0) throw InvalidDataset("annotation labels must be binary");
            Tally& t = tallies[annotator];
            ++t.n;
            ++t.n_g[gi];
            if (label == inst.gold_label) {
                ++t.correct;
                ++t.correct_g[gi];
            }
            if (inst.gold_label == 0) {
                ++t.gold_neg_g[gi];
                if (label == 1) ++t.false_pos_g[gi];
            }
        }
    }

    std::vector<LabelerStats> out;
    out.reserve(tallies.size());
    for (const auto& [annotator, t] : tallies) {
        LabelerStats s;
        s.annotator_id = annotator;
        s.n_labeled = t.n;
        s.accuracy = static_cast<double>(t.correct) / static_cast<double>(t.n);
        for (int gi = 0; gi < 2; ++gi) {
            const GroupId g = gi == 0 ? g0 : g1;
            if (t.n_g[gi] > 0)
                s.per_group_accuracy[g] =
                    static_cast<double>(t.correct_g[gi]) / static_cast<double>(t.n_g[gi]);
            else
                s.per_group_accuracy[g] = std::nullopt;
        }
        switch (measure) {
            case DisparityMeasure::AbsAccuracyGap: {
                const auto& a0 = s.per_group_accuracy[g0];
                const auto& a1 = s.per_group_accuracy[g1];
                if (a0 && a1) {
                    s.disparity = std::abs(*a0 - *a1);
                    s.disparity_defined = true;
                }
                break;
            }
            case DisparityMeasure::AbsFprGap: {
                if (t.gold_neg_g[0] > 0 && t.gold_neg_g[1] > 0) {
                    const double f0 = static_cast<double>(t.false_pos_g[0]) /
                                      static_cast<double>(t.gold_neg_g[0]);
                    const double f1 = static_cast<double>(t.false_pos_g[1]) /
                                      static_cast<double>(t.gold_neg_g[1]);
                    s.disparity = std::abs(f0 - f1);
                    s.disparity_defined = true;
                }
                break;
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

/// Rewrites each instance's observed label to the one given by its
/// highest-disparity annotator (ties to the lowest annotator id). Gold labels
/// are untouched. Purely a function of (table, gold labels, groups).
inline Dataset worst_labeler_observed(const AnnotationTable& table,
                                      const Dataset& dataset_with_gold, GroupId g0, GroupId g1,
                                      DisparityMeasure measure = DisparityMeasure::AbsAccuracyGap) {
    const auto stats = labeler_stats(table, dataset_with_gold, g0, g1, measure);
    std::map<int, double> disparity_of;
    for (const auto& s : stats) disparity_of[s.annotator_id] = s.disparity;

    std::vector<Instance> out = dataset_with_gold.instances();
    for (auto& inst : out) {
        const auto row = table.rows.find(inst.id);
        if (row == table.rows.end() || row->second.empty()) throw UncoveredInstance(inst.id);
        int best_annotator = -1;
        double best_disparity = -1.0;
        for (const auto& [annotator, label] : row->second) {
            (void)label;
            const double d = disparity_of.at(annotator);
            if (d > best_disparity) {
                best_disparity = d;
                best_annotator = annotator;
            }
        }
        inst.observed_label = row->second.at(best_annotator);
    }
    return Dataset(std::move(out), dataset_with_gold.feature_dim(), dataset_with_gold.name());
}

}  // namespace albi::bias
