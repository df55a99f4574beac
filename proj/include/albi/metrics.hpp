#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "albi/core.hpp"
#include "albi/errors.hpp"

namespace albi::metrics {

/// One evaluation's raw material: aligned prediction/label/group triples plus
/// the role assignment of the two groups.
struct EvalFrame {
    std::vector<int> predictions;
    std::vector<int> labels;
    std::vector<GroupId> groups;
    GroupId g0;
    GroupId g1;

    void validate() const {
        if (predictions.empty() || predictions.size() != labels.size() ||
            predictions.size() != groups.size())
            throw InvalidDataset("evaluation frame vectors must be non-empty and equal-length");
        if (g0 == g1) throw InvalidDataset("g0 and g1 must differ");
        bool seen0 = false, seen1 = false;
        for (std::size_t i = 0; i < groups.size(); ++i) {
            if ((predictions[i] & ~1) != 0 || (labels[i] & ~1) != 0)
                throw InvalidDataset("predictions and labels must be binary");
            seen0 = seen0 || groups[i] == g0;
            seen1 = seen1 || groups[i] == g1;
        }
        if (!seen0) throw EmptyGroup(g0.value);
        if (!seen1) throw EmptyGroup(g1.value);
    }
};

struct GroupConfusion {
    long long tp = 0;
    long long fp = 0;
    long long tn = 0;
    long long fn = 0;

    long long total() const { return tp + fp + tn + fn; }
};

struct BiasAuditReport {
    double agreement_g0 = 0.0;
    double agreement_g1 = 0.0;
    bool biased = false;
    double tolerance = 0.0;
};

inline GroupConfusion group_confusion(const EvalFrame& frame, GroupId group) {
    frame.validate();
    if (group != frame.g0 && group != frame.g1) throw UnknownGroup(group.value);
    GroupConfusion c;
    for (std::size_t i = 0; i < frame.groups.size(); ++i) {
        if (frame.groups[i] != group) continue;
        if (frame.labels[i] == 1)
            (frame.predictions[i] == 1 ? c.tp : c.fn)++;
        else
            (frame.predictions[i] == 1 ? c.fp : c.tn)++;
    }
    return c;
}

namespace detail {

inline double group_accuracy(const GroupConfusion& c, GroupId g) {
    if (c.total() == 0) throw EmptyGroup(g.value);
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

inline double group_tpr(const GroupConfusion& c, GroupId g) {
    if (c.tp + c.fn == 0) throw NoPositives(g.value);
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline double group_fpr(const GroupConfusion& c, GroupId g) {
    if (c.fp + c.tn == 0) throw NoNegatives(g.value);
    return static_cast<double>(c.fp) / static_cast<double>(c.fp + c.tn);
}

}  // namespace detail

/// Accuracy difference, g0 term first: Acc(g0) - Acc(g1).
inline double acc_gap(const EvalFrame& frame) {
    const auto c0 = group_confusion(frame, frame.g0);
    const auto c1 = group_confusion(frame, frame.g1);
    return detail::group_accuracy(c0, frame.g0) - detail::group_accuracy(c1, frame.g1);
}

inline double abs_acc_gap(const EvalFrame& frame) { return std::abs(acc_gap(frame)); }

/// True-positive-rate difference, g1 term first: TPR(g1) - TPR(g0).
/// Note the opposite group order to acc_gap.
inline double tpr_gap(const EvalFrame& frame) {
    const auto c0 = group_confusion(frame, frame.g0);
    const auto c1 = group_confusion(frame, frame.g1);
    const double r0 = detail::group_tpr(c0, frame.g0);
    const double r1 = detail::group_tpr(c1, frame.g1);
    return r1 - r0;
}

inline double abs_tpr_gap(const EvalFrame& frame) { return std::abs(tpr_gap(frame)); }

/// False-positive-rate difference, same orientation as tpr_gap:
/// FPR(g1) - FPR(g0).
inline double fpr_gap(const EvalFrame& frame) {
    const auto c0 = group_confusion(frame, frame.g0);
    const auto c1 = group_confusion(frame, frame.g1);
    const double r0 = detail::group_fpr(c0, frame.g0);
    const double r1 = detail::group_fpr(c1, frame.g1);
    return r1 - r0;
}

inline double abs_fpr_gap(const EvalFrame& frame) { return std::abs(fpr_gap(frame)); }

/// Overall (group-blind) accuracy.
inline double accuracy(const EvalFrame& frame) {
    frame.validate();
    long long correct = 0;
    for (std::size_t i = 0; i < frame.predictions.size(); ++i)
        correct += frame.predictions[i] == frame.labels[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(frame.predictions.size());
}

/// Per-group observed/gold agreement rates. `biased` iff the agreement
/// difference exceeds `tolerance`.
inline BiasAuditReport label_bias_audit(const Dataset& dataset, GroupId g0, GroupId g1,
                                        double tolerance = 0.0) {
    if (!dataset.has_group(g0)) throw EmptyGroup(g0.value);
    if (!dataset.has_group(g1)) throw EmptyGroup(g1.value);
    long long n0 = 0, n1 = 0, agree0 = 0, agree1 = 0;
    for (const auto& inst : dataset.instances()) {
        const bool agrees = inst.observed_label == inst.gold_label;
        if (inst.group == g0) {
            ++n0;
            agree0 += agrees ? 1 : 0;
        } else if (inst.group == g1) {
            ++n1;
            agree1 += agrees ? 1 : 0;
        }
    }
    BiasAuditReport report;
    report.agreement_g0 = static_cast<double>(agree0) / static_cast<double>(n0);
    report.agreement_g1 = static_cast<double>(agree1) / static_cast<double>(n1);
    report.tolerance = tolerance;
    report.biased = std::abs(report.agreement_g0 - report.agreement_g1) > tolerance;
    return report;
}

enum class MetricKind {
    AccGap,
    AbsAccGap,
    TprGap,
    AbsTprGap,
    FprGap,
    AbsFprGap,
    Accuracy,
};

inline const char* to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::AccGap: return "acc_gap";
        case MetricKind::AbsAccGap: return "abs_acc_gap";
        case MetricKind::TprGap: return "tpr_gap";
        case MetricKind::AbsTprGap: return "abs_tpr_gap";
        case MetricKind::FprGap: return "fpr_gap";
        case MetricKind::AbsFprGap: return "abs_fpr_gap";
        case MetricKind::Accuracy: return "accuracy";
    }
    return "?";
}

inline MetricKind metric_kind_from_string(const std::string& s) {
    if (s == "acc_gap") return MetricKind::AccGap;
    if (s == "abs_acc_gap") return MetricKind::AbsAccGap;
    if (s == "tpr_gap") return MetricKind::TprGap;
    if (s == "abs_tpr_gap") return MetricKind::AbsTprGap;
    if (s == "fpr_gap") return MetricKind::FprGap;
    if (s == "abs_fpr_gap") return MetricKind::AbsFprGap;
    if (s == "accuracy") return MetricKind::Accuracy;
    throw ConfigInvalid("unknown metric: " + s);
}

inline double evaluate(MetricKind kind, const EvalFrame& frame) {
    switch (kind) {
        case MetricKind::AccGap: return acc_gap(frame);
        case MetricKind::AbsAccGap: return abs_acc_gap(frame);
        case MetricKind::TprGap: return tpr_gap(frame);
        case MetricKind::AbsTprGap: return abs_tpr_gap(frame);
        case MetricKind::FprGap: return fpr_gap(frame);
        case MetricKind::AbsFprGap: return abs_fpr_gap(frame);
        case MetricKind::Accuracy: return accuracy(frame);
    }
    throw ConfigInvalid("unknown metric kind");
}

/// Whether the metric is signed (can flip sign between label kinds).
inline bool is_signed_gap(MetricKind kind) {
    return kind == MetricKind::AccGap || kind == MetricKind::TprGap ||
           kind == MetricKind::FprGap;
}

/// The group statistic a fairness-aware strategy compares across groups.
enum class FairnessTarget { AccGap, TprGap, FprGap };

inline const char* to_string(FairnessTarget t) {
    switch (t) {
        case FairnessTarget::AccGap: return "acc_gap";
        case FairnessTarget::TprGap: return "tpr_gap";
        case FairnessTarget::FprGap: return "fpr_gap";
    }
    return "?";
}

inline FairnessTarget fairness_target_from_string(const std::string& s) {
    if (s == "acc_gap") return FairnessTarget::AccGap;
    if (s == "tpr_gap") return FairnessTarget::TprGap;
    if (s == "fpr_gap") return FairnessTarget::FprGap;
    throw ConfigInvalid("unknown fairness target: " + s);
}

/// Magnitude of the target's gap on a frame; the quantity fairness-aware
/// selection tries to shrink.
inline double target_gap_magnitude(FairnessTarget target, const EvalFrame& frame) {
    switch (target) {
        case FairnessTarget::AccGap: return abs_acc_gap(frame);
        case FairnessTarget::TprGap: return abs_tpr_gap(frame);
        case FairnessTarget::FprGap: return abs_fpr_gap(frame);
    }
    throw ConfigInvalid("unknown fairness target");
}

}  // namespace albi::metrics
