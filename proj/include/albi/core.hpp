#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "albi/errors.hpp"
#include "albi/rng.hpp"

namespace albi {

/// Identifier of a (binary) demographic group. Which concrete id plays the
/// g0 / g1 role in a metric is assigned by the caller, never hardcoded.
struct GroupId {
    int value = 0;
    friend bool operator==(GroupId a, GroupId b) { return a.value == b.value; }
    friend bool operator!=(GroupId a, GroupId b) { return a.value != b.value; }
    friend bool operator<(GroupId a, GroupId b) { return a.value < b.value; }
};

/// Which label an evaluation is computed against: the label available at
/// acquisition time (possibly bias-contaminated) or the gold standard.
enum class LabelKind { Observed, Gold };

inline const char* to_string(LabelKind k) {
    return k == LabelKind::Observed ? "observed" : "gold";
}

struct Instance {
    int id = 0;
    std::vector<double> features;
    GroupId group;
    int observed_label = 0;
    int gold_label = 0;
    std::map<int, int> annotations;  // annotator id -> binary label; empty when none
};

/// Immutable instance store. Ids are dense 0..n-1 and double as indices;
/// exactly two groups appear and both are non-empty.
class Dataset {
public:
    Dataset(std::vector<Instance> instances, int feature_dim, std::string name)
        : instances_(std::move(instances)), feature_dim_(feature_dim), name_(std::move(name)) {
        validate();
    }

    const std::vector<Instance>& instances() const { return instances_; }
    const Instance& at(int id) const { return instances_[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(instances_.size()); }
    int feature_dim() const { return feature_dim_; }
    const std::string& name() const { return name_; }

    /// The two group ids, ascending.
    std::pair<GroupId, GroupId> groups() const { return groups_; }

    bool has_group(GroupId g) const { return g == groups_.first || g == groups_.second; }

    std::vector<int> ids_of_group(GroupId g) const {
        std::vector<int> out;
        for (const auto& inst : instances_)
            if (inst.group == g) out.push_back(inst.id);
        return out;
    }

private:
    void validate() {
        if (instances_.empty()) throw InvalidDataset("dataset is empty");
        if (feature_dim_ < 0) throw InvalidDataset("negative feature dimension");
        std::set<int> group_values;
        for (std::size_t i = 0; i < instances_.size(); ++i) {
            const Instance& inst = instances_[i];
            if (inst.id != static_cast<int>(i))
                throw InvalidDataset("instance ids must be dense 0..n-1 in order, got id " +
                                     std::to_string(inst.id) + " at index " + std::to_string(i));
            if (static_cast<int>(inst.features.size()) != feature_dim_)
                throw InvalidDataset("instance " + std::to_string(inst.id) + " has " +
                                     std::to_string(inst.features.size()) + " features, expected " +
                                     std::to_string(feature_dim_));
            if ((inst.observed_label != 0 && inst.observed_label != 1) ||
                (inst.gold_label != 0 && inst.gold_label != 1))
                throw InvalidDataset("labels must be binary (instance " +
                                     std::to_string(inst.id) + ")");
            group_values.insert(inst.group.value);
        }
        if (group_values.size() != 2)
            throw InvalidDataset("dataset must contain exactly two groups, found " +
                                 std::to_string(group_values.size()));
        auto it = group_values.begin();
        groups_.first = GroupId{*it++};
        groups_.second = GroupId{*it};
    }

    std::vector<Instance> instances_;
    int feature_dim_;
    std::string name_;
    std::pair<GroupId, GroupId> groups_;
};

/// Labeled/unlabeled partition of a training dataset's ids, evolving across
/// acquisition rounds. Mutated only by its single owner (the harness loop).
class PoolState {
public:
    PoolState(std::vector<int> labeled, std::vector<int> unlabeled)
        : labeled_(std::move(labeled)), unlabeled_(std::move(unlabeled)) {
        std::sort(labeled_.begin(), labeled_.end());
        std::sort(unlabeled_.begin(), unlabeled_.end());
        for (int id : labeled_)
            if (std::binary_search(unlabeled_.begin(), unlabeled_.end(), id))
                throw InvalidDataset("id " + std::to_string(id) + " both labeled and unlabeled");
    }

    /// Sorted ascending.
    const std::vector<int>& labeled_ids() const { return labeled_; }
    const std::vector<int>& unlabeled_ids() const { return unlabeled_; }
    int iteration() const { return iteration_; }

    bool is_labeled(int id) const {
        return std::binary_search(labeled_.begin(), labeled_.end(), id);
    }

    /// Moves `ids` from the unlabeled to the labeled side and counts one
    /// completed acquisition round.
    void acquire(const std::vector<int>& ids) {
        for (int id : ids) {
            auto it = std::lower_bound(unlabeled_.begin(), unlabeled_.end(), id);
            if (it == unlabeled_.end() || *it != id)
                throw InvalidDataset("acquired id " + std::to_string(id) + " is not unlabeled");
            unlabeled_.erase(it);
            labeled_.insert(std::lower_bound(labeled_.begin(), labeled_.end(), id), id);
        }
        ++iteration_;
    }

private:
    std::vector<int> labeled_;
    std::vector<int> unlabeled_;
    int iteration_ = 0;
};

namespace detail {

/// Round half up.
inline long long round_half_up(double x) {
    return static_cast<long long>(std::floor(x + 0.5));
}

inline Dataset reindex(const Dataset& src, const std::vector<int>& ids, const std::string& name) {
    std::vector<int> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    std::vector<Instance> out;
    out.reserve(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        Instance inst = src.at(sorted[i]);
        inst.id = static_cast<int>(i);
        out.push_back(std::move(inst));
    }
    return Dataset(std::move(out), src.feature_dim(), name);
}

}  // namespace detail

/// Group-stratified random split. Each group contributes round-half-up
/// n_g * train_fraction instances to the train side; the rest form the test
/// side. Draw protocol: groups in ascending id order, each group's id list
/// (ascending) is shuffled once and the first k ids go to train. Both output
/// datasets are reindexed to dense ids, preserving relative instance order.
inline std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset, double train_fraction,
                                                 Rng& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw FractionOutOfRange(train_fraction);
    const auto [ga, gb] = dataset.groups();
    std::vector<int> train_ids, test_ids;
    for (GroupId g : {ga, gb}) {
        std::vector<int> ids = dataset.ids_of_group(g);
        if (ids.size() < 2)
            throw GroupTooSmall("group " + std::to_string(g.value) +
                                " has fewer than 2 instances");
        const long long k = detail::round_half_up(static_cast<double>(ids.size()) * train_fraction);
        if (k <= 0 || k >= static_cast<long long>(ids.size()))
            throw GroupTooSmall("fraction " + std::to_string(train_fraction) +
                                " leaves group " + std::to_string(g.value) +
                                " empty on one side of the split");
        rng.shuffle(ids);
        train_ids.insert(train_ids.end(), ids.begin(), ids.begin() + k);
        test_ids.insert(test_ids.end(), ids.begin() + k, ids.end());
    }
    return {detail::reindex(dataset, train_ids, dataset.name()),
            detail::reindex(dataset, test_ids, dataset.name())};
}

/// Uniformly samples `per_group` ids per group as the initial labeled set.
/// Groups are processed in ascending id order.
inline PoolState initial_labeled_set(const Dataset& train, int per_group, Rng& rng) {
    if (per_group < 0) throw GroupTooSmall("per_group must be non-negative");
    const auto [ga, gb] = train.groups();
    std::vector<int> labeled;
    for (GroupId g : {ga, gb}) {
        std::vector<int> ids = train.ids_of_group(g);
        if (static_cast<int>(ids.size()) < per_group)
            throw GroupTooSmall("group " + std::to_string(g.value) + " has only " +
                                std::to_string(ids.size()) + " training instances, need " +
                                std::to_string(per_group));
        auto chosen = rng.sample_without_replacement(ids, static_cast<std::size_t>(per_group));
        labeled.insert(labeled.end(), chosen.begin(), chosen.end());
    }
    std::sort(labeled.begin(), labeled.end());
    std::vector<int> unlabeled;
    for (int id = 0; id < train.size(); ++id)
        if (!std::binary_search(labeled.begin(), labeled.end(), id)) unlabeled.push_back(id);
    return PoolState(std::move(labeled), std::move(unlabeled));
}

/// Fraction of the group's instances carrying label 1 under `kind`.
inline double positive_rate(const Dataset& dataset, GroupId group, LabelKind kind) {
    if (!dataset.has_group(group)) throw UnknownGroup(group.value);
    long long n = 0, pos = 0;
    for (const auto& inst : dataset.instances()) {
        if (inst.group != group) continue;
        ++n;
        const int label = kind == LabelKind::Observed ? inst.observed_label : inst.gold_label;
        pos += label;
    }
    return static_cast<double>(pos) / static_cast<double>(n);
}

}  // namespace albi
