#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "albi/bias.hpp"
#include "albi/metrics.hpp"
#include "test_util.hpp"

using albi::Dataset;
using albi::GroupId;
using albi::LabelKind;
using albi::Rng;
using albi::bias::AnnotationTable;
using albi::bias::DisparityMeasure;
using albi::bias::FlipRateMap;
using testutil::make_dataset;

namespace {

const GroupId g0{0};
const GroupId g1{1};

// Low-rate group: 100 instances, 10 observed-positive. Reference group: 100
// instances, 30 observed-positive.
Dataset parity_fixture() {
    return make_dataset(
        100, 100,
        [](int id, int g) {
            if (g == 0) return id < 10 ? 1 : 0;
            return id < 130 ? 1 : 0;
        },
        [](int, int) { return 0; });
}

// All gold labels 0; annotators' per-group accuracies are set by which ids
// they mislabel as 1.
AnnotationTable table_with_wrong_sets(const std::map<int, std::set<int>>& wrong_of) {
    AnnotationTable table;
    for (int id = 0; id < 20; ++id)
        for (const auto& [annotator, wrong] : wrong_of)
            table.rows[id][annotator] = wrong.count(id) ? 1 : 0;
    return table;
}

Dataset gold_zero_dataset() {
    return make_dataset(
        10, 10, [](int, int) { return 0; }, [](int, int) { return 0; });
}

}  // namespace

TEST(ParityFlip, EqualizesGoldPositiveRates) {
    const auto data = parity_fixture();
    Rng rng(11);
    const auto flipped = albi::bias::parity_flip(data, g0, g1, rng);

    EXPECT_DOUBLE_EQ(albi::positive_rate(flipped, g0, LabelKind::Gold), 0.3);
    EXPECT_DOUBLE_EQ(albi::positive_rate(flipped, g1, LabelKind::Gold), 0.3);

    int flips = 0;
    for (int id = 0; id < flipped.size(); ++id) {
        const auto& before = data.at(id);
        const auto& after = flipped.at(id);
        EXPECT_EQ(after.observed_label, before.observed_label);
        EXPECT_EQ(after.group.value, before.group.value);
        EXPECT_EQ(after.features, before.features);
        if (after.gold_label != after.observed_label) {
            ++flips;
            EXPECT_EQ(after.group, g0);
            EXPECT_EQ(before.observed_label, 0);
            EXPECT_EQ(after.gold_label, 1);
        }
    }
    EXPECT_EQ(flips, 20);
}

TEST(ParityFlip, EqualRatesFlipNothing) {
    const auto data = make_dataset(
        10, 10, [](int id, int) { return id % 2; }, [](int, int) { return 0; });
    Rng rng(2);
    const auto flipped = albi::bias::parity_flip(data, g0, g1, rng);
    for (const auto& inst : flipped.instances())
        EXPECT_EQ(inst.gold_label, inst.observed_label);
}

TEST(ParityFlip, RateOrderViolationRejected) {
    const auto data = parity_fixture();
    Rng rng(2);
    EXPECT_THROW(albi::bias::parity_flip(data, g1, g0, rng), albi::RateOrderViolated);
}

TEST(ParityFlip, DeterministicGivenSeed) {
    const auto data = parity_fixture();
    Rng a(77), b(77), c(78);
    const auto f1 = albi::bias::parity_flip(data, g0, g1, a);
    const auto f2 = albi::bias::parity_flip(data, g0, g1, b);
    const auto f3 = albi::bias::parity_flip(data, g0, g1, c);
    bool same_as_third = true;
    for (int id = 0; id < f1.size(); ++id) {
        EXPECT_EQ(f1.at(id).gold_label, f2.at(id).gold_label);
        same_as_third = same_as_third && f1.at(id).gold_label == f3.at(id).gold_label;
    }
    EXPECT_FALSE(same_as_third);
}

TEST(ParityFlip, RateDifferenceBoundedOnRandomInputs) {
    Rng rng(31337);
    for (int trial = 0; trial < 20; ++trial) {
        const int n_low = 20 + static_cast<int>(rng.below(80));
        const int n_ref = 20 + static_cast<int>(rng.below(80));
        const int pos_low = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_low / 2)));
        const int pos_ref =
            n_ref / 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_ref / 2)));
        const auto data = make_dataset(
            n_low, n_ref,
            [&](int id, int g) {
                if (g == 0) return id < pos_low ? 1 : 0;
                return id < n_low + pos_ref ? 1 : 0;
            },
            [](int, int) { return 0; });
        if (albi::positive_rate(data, g0, LabelKind::Observed) >
            albi::positive_rate(data, g1, LabelKind::Observed))
            continue;
        const auto flipped = albi::bias::parity_flip(data, g0, g1, rng);
        const double diff = albi::positive_rate(flipped, g0, LabelKind::Gold) -
                            albi::positive_rate(flipped, g1, LabelKind::Gold);
        EXPECT_LE(std::abs(diff), 1.0 / n_low + 1e-12);
    }
}

TEST(GroupNoise, ZeroRatesAreIdentity) {
    const auto data = make_dataset(
        10, 10, [](int, int) { return 0; }, [](int id, int) { return id % 2; });
    Rng rng(5);
    const auto noisy = albi::bias::group_noise(data, {}, rng);
    for (const auto& inst : noisy.instances()) {
        EXPECT_EQ(inst.observed_label, inst.gold_label);
        EXPECT_EQ(inst.gold_label, data.at(inst.id).gold_label);
    }
}

TEST(GroupNoise, RateOneFlipsEveryTargetedInstance) {
    const auto data = make_dataset(
        10, 10, [](int, int) { return 0; }, [](int id, int) { return id % 2; });
    Rng rng(5);
    FlipRateMap rates{{{g0, 1}, 1.0}};
    const auto noisy = albi::bias::group_noise(data, rates, rng);
    for (const auto& inst : noisy.instances()) {
        EXPECT_EQ(inst.gold_label, data.at(inst.id).gold_label);
        if (inst.group == g0 && inst.gold_label == 1)
            EXPECT_EQ(inst.observed_label, 0);
        else
            EXPECT_EQ(inst.observed_label, inst.gold_label);
    }
}

TEST(GroupNoise, EmpiricalFlipFractionNearRate) {
    // 1000 gold-positive g0 instances.
    const auto data = make_dataset(
        1000, 50, [](int, int) { return 0; }, [](int, int g) { return g == 0 ? 1 : 0; });
    Rng rng(99);
    FlipRateMap rates{{{g0, 1}, 0.3}};
    const auto noisy = albi::bias::group_noise(data, rates, rng);
    int flipped = 0;
    for (const auto& inst : noisy.instances())
        if (inst.group == g0 && inst.observed_label != inst.gold_label) ++flipped;
    EXPECT_NEAR(flipped / 1000.0, 0.3, 0.05);
}

TEST(GroupNoise, ZeroRateEntriesDoNotShiftDraws) {
    const auto data = make_dataset(
        50, 50, [](int, int) { return 0; }, [](int id, int) { return id % 2; });
    Rng a(4), b(4);
    FlipRateMap with_zero{{{g0, 1}, 0.5}, {{g1, 0}, 0.0}};
    FlipRateMap without{{{g0, 1}, 0.5}};
    const auto na = albi::bias::group_noise(data, with_zero, a);
    const auto nb = albi::bias::group_noise(data, without, b);
    for (int id = 0; id < na.size(); ++id)
        EXPECT_EQ(na.at(id).observed_label, nb.at(id).observed_label);
}

TEST(GroupNoise, FlipSetsNestUnderGrowingRate) {
    const auto data = make_dataset(
        200, 200, [](int, int) { return 0; }, [](int id, int) { return id % 2; });
    Rng a(12), b(12);
    FlipRateMap low{{{g0, 1}, 0.3}, {{g1, 0}, 0.3}};
    FlipRateMap high{{{g0, 1}, 0.6}, {{g1, 0}, 0.6}};
    const auto nl = albi::bias::group_noise(data, low, a);
    const auto nh = albi::bias::group_noise(data, high, b);
    for (int id = 0; id < nl.size(); ++id) {
        const bool flipped_low = nl.at(id).observed_label != nl.at(id).gold_label;
        const bool flipped_high = nh.at(id).observed_label != nh.at(id).gold_label;
        if (flipped_low) {
            EXPECT_TRUE(flipped_high);
        }
    }
}

TEST(GroupNoise, SymmetricRatesPassAuditAtBinomialTolerance) {
    const int n = 2000;
    const auto data = make_dataset(
        n, n, [](int, int) { return 0; }, [](int id, int) { return id % 2; });
    const double rate = 0.2;
    FlipRateMap rates{{{g0, 0}, rate}, {{g0, 1}, rate}, {{g1, 0}, rate}, {{g1, 1}, rate}};
    Rng rng(2718);
    const auto noisy = albi::bias::group_noise(data, rates, rng);
    const double sigma_diff = std::sqrt(2.0 * rate * (1.0 - rate) / n);
    const auto report = albi::metrics::label_bias_audit(noisy, g0, g1, 3.0 * sigma_diff);
    EXPECT_FALSE(report.biased);
}

TEST(GroupNoise, OutOfRangeRateRejected) {
    const auto data = gold_zero_dataset();
    Rng rng(1);
    FlipRateMap bad{{{g0, 0}, 1.5}};
    EXPECT_THROW(albi::bias::group_noise(data, bad, rng), albi::RateOutOfRange);
    FlipRateMap negative{{{g0, 0}, -0.1}};
    EXPECT_THROW(albi::bias::group_noise(data, negative, rng), albi::RateOutOfRange);
}

TEST(LabelerStats, PerfectAnnotator) {
    const auto data = gold_zero_dataset();
    const auto table = table_with_wrong_sets({{1, {}}});
    const auto stats = albi::bias::labeler_stats(table, data, g0, g1);
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_EQ(stats[0].annotator_id, 1);
    EXPECT_DOUBLE_EQ(stats[0].accuracy, 1.0);
    EXPECT_DOUBLE_EQ(stats[0].disparity, 0.0);
    EXPECT_TRUE(stats[0].disparity_defined);
    EXPECT_EQ(stats[0].n_labeled, 20);
}

TEST(LabelerStats, HandCountedDisparity) {
    // g0 accuracy 2/4, g1 accuracy 4/4 -> disparity 0.5.
    const auto data = make_dataset(
        4, 4, [](int, int) { return 0; }, [](int, int) { return 0; });
    AnnotationTable table;
    for (int id = 0; id < 8; ++id) table.rows[id][3] = id < 2 ? 1 : 0;
    const auto stats = albi::bias::labeler_stats(table, data, g0, g1);
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_DOUBLE_EQ(stats[0].per_group_accuracy.at(g0).value(), 0.5);
    EXPECT_DOUBLE_EQ(stats[0].per_group_accuracy.at(g1).value(), 1.0);
    EXPECT_DOUBLE_EQ(stats[0].disparity, 0.5);
    EXPECT_DOUBLE_EQ(stats[0].accuracy, 0.75);
}

TEST(LabelerStats, SingleGroupCoverageIsFlagged) {
    const auto data = gold_zero_dataset();
    AnnotationTable table;
    for (int id = 0; id < 10; ++id) table.rows[id][7] = 0;
    const auto stats = albi::bias::labeler_stats(table, data, g0, g1);
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_TRUE(stats[0].per_group_accuracy.at(g0).has_value());
    EXPECT_FALSE(stats[0].per_group_accuracy.at(g1).has_value());
    EXPECT_FALSE(stats[0].disparity_defined);
    EXPECT_DOUBLE_EQ(stats[0].disparity, 0.0);
}

TEST(LabelerStats, UnknownInstanceRejected) {
    const auto data = gold_zero_dataset();
    AnnotationTable table;
    table.rows[99][1] = 0;
    EXPECT_THROW(albi::bias::labeler_stats(table, data, g0, g1), albi::UnknownInstance);
}

TEST(LabelerStats, FprDisparityMeasure) {
    // Gold negatives everywhere; annotator 9's false-positive rates: g0 1/10,
    // g1 6/10 -> disparity 0.5.
    const auto data = gold_zero_dataset();
    AnnotationTable table;
    for (int id = 0; id < 20; ++id)
        table.rows[id][9] = (id == 0 || (id >= 10 && id < 16)) ? 1 : 0;
    const auto stats =
        albi::bias::labeler_stats(table, data, g0, g1, DisparityMeasure::AbsFprGap);
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_NEAR(stats[0].disparity, 0.5, 1e-12);
    EXPECT_TRUE(stats[0].disparity_defined);
}

TEST(LabelerStats, FprMeasureUndefinedWithoutGoldNegatives) {
    // g1 instances are all gold-positive, so the annotator has no g1
    // false-positive denominator.
    const auto data = make_dataset(
        4, 4, [](int, int) { return 0; }, [](int, int g) { return g; });
    AnnotationTable table;
    for (int id = 0; id < 8; ++id) table.rows[id][2] = 0;
    const auto stats =
        albi::bias::labeler_stats(table, data, g0, g1, DisparityMeasure::AbsFprGap);
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_FALSE(stats[0].disparity_defined);
    EXPECT_DOUBLE_EQ(stats[0].disparity, 0.0);
}

TEST(WorstLabeler, SingleAnnotatorVerbatim) {
    const auto data = gold_zero_dataset();
    AnnotationTable table;
    for (int id = 0; id < 20; ++id) table.rows[id][4] = id % 3 == 0 ? 1 : 0;
    const auto out = albi::bias::worst_labeler_observed(table, data, g0, g1);
    for (const auto& inst : out.instances()) {
        EXPECT_EQ(inst.observed_label, inst.id % 3 == 0 ? 1 : 0);
        EXPECT_EQ(inst.gold_label, data.at(inst.id).gold_label);
    }
}

TEST(WorstLabeler, PicksMaxDisparityAnnotator) {
    // Disparities: annotator 1 -> 0.1, annotator 2 -> 0.5, annotator 3 -> 0.3.
    const auto data = gold_zero_dataset();
    const auto table = table_with_wrong_sets(
        {{1, {3}}, {2, {0, 1, 2, 3, 4}}, {3, {1, 2, 3}}});
    const auto out = albi::bias::worst_labeler_observed(table, data, g0, g1);
    // Instance 0: labels are 1->0, 2->1, 3->0; the 0.5-disparity annotator wins.
    EXPECT_EQ(out.at(0).observed_label, 1);
    for (int id = 0; id < 20; ++id)
        EXPECT_EQ(out.at(id).observed_label, id < 5 ? 1 : 0);
}

TEST(WorstLabeler, TieBreaksToLowerAnnotatorId) {
    // Annotators 4 and 5 are tied at disparity 0.2, so the lower id supplies
    // every label and annotator 5's mistakes at 10 and 11 never surface.
    const auto data = gold_zero_dataset();
    const auto table = table_with_wrong_sets({{4, {0, 1}}, {5, {10, 11}}});
    const auto out = albi::bias::worst_labeler_observed(table, data, g0, g1);
    EXPECT_EQ(out.at(0).observed_label, 1);
    EXPECT_EQ(out.at(10).observed_label, 0);
    EXPECT_EQ(out.at(2).observed_label, 0);
}

TEST(WorstLabeler, DeterministicAcrossRuns) {
    const auto data = gold_zero_dataset();
    const auto table = table_with_wrong_sets({{1, {0, 5}}, {2, {10, 15}}, {3, {2}}});
    const auto a = albi::bias::worst_labeler_observed(table, data, g0, g1);
    const auto b = albi::bias::worst_labeler_observed(table, data, g0, g1);
    for (int id = 0; id < a.size(); ++id)
        EXPECT_EQ(a.at(id).observed_label, b.at(id).observed_label);
}

TEST(WorstLabeler, UncoveredInstanceRejected) {
    const auto data = gold_zero_dataset();
    AnnotationTable table;
    for (int id = 0; id < 19; ++id) table.rows[id][1] = 0;
    try {
        albi::bias::worst_labeler_observed(table, data, g0, g1);
        FAIL() << "expected UncoveredInstance";
    } catch (const albi::UncoveredInstance& e) {
        EXPECT_NE(std::string(e.what()).find("19"), std::string::npos);
    }
}

TEST(WorstLabeler, MatchesExhaustiveArgmaxOracle) {
    // 20 instances, 5 annotators, partial but full-coverage table.
    const auto data = make_dataset(
        10, 10, [](int, int) { return 0; }, [](int id, int) { return (id / 2) % 2; });
    Rng rng(1234);
    AnnotationTable table;
    for (int id = 0; id < 20; ++id) {
        bool covered = false;
        for (int annotator = 0; annotator < 5; ++annotator) {
            if (rng.next_double() < 0.6) {
                table.rows[id][annotator] = static_cast<int>(rng.below(2));
                covered = true;
            }
        }
        if (!covered) table.rows[id][id % 5] = static_cast<int>(rng.below(2));
    }

    // Independent recount of per-annotator per-group accuracies.
    std::map<int, std::map<int, std::pair<int, int>>> tally;  // annotator -> group -> (n, correct)
    for (const auto& [id, by_annotator] : table.rows)
        for (const auto& [annotator, label] : by_annotator) {
            auto& [n, correct] = tally[annotator][data.at(id).group.value];
            ++n;
            if (label == data.at(id).gold_label) ++correct;
        }
    std::map<int, double> oracle_disparity;
    for (const auto& [annotator, by_group] : tally) {
        const bool both = by_group.count(0) && by_group.count(1);
        if (!both) {
            oracle_disparity[annotator] = 0.0;
            continue;
        }
        const auto [n0, c0] = by_group.at(0);
        const auto [n1, c1] = by_group.at(1);
        oracle_disparity[annotator] =
            std::abs(static_cast<double>(c0) / n0 - static_cast<double>(c1) / n1);
    }

    const auto out = albi::bias::worst_labeler_observed(table, data, g0, g1);
    for (int id = 0; id < 20; ++id) {
        int best = -1;
        double best_d = -1.0;
        for (const auto& [annotator, label] : table.rows.at(id)) {
            (void)label;
            if (oracle_disparity.at(annotator) > best_d) {
                best_d = oracle_disparity.at(annotator);
                best = annotator;
            }
        }
        EXPECT_EQ(out.at(id).observed_label, table.rows.at(id).at(best))
            << "instance " << id;
    }
}

TEST(DisparityMeasureNames, RoundTrip) {
    for (DisparityMeasure m : {DisparityMeasure::AbsAccuracyGap, DisparityMeasure::AbsFprGap})
        EXPECT_EQ(albi::bias::disparity_measure_from_string(albi::bias::to_string(m)), m);
    EXPECT_THROW(albi::bias::disparity_measure_from_string("x"), albi::ConfigInvalid);
}
