#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "albi/core.hpp"

namespace testutil {

inline albi::Instance inst(int id, std::vector<double> features, int group, int observed,
                           int gold) {
    albi::Instance x;
    x.id = id;
    x.features = std::move(features);
    x.group = albi::GroupId{group};
    x.observed_label = observed;
    x.gold_label = gold;
    return x;
}

/// n0 group-0 instances followed by n1 group-1 instances; feature 0 is the id,
/// labels come from the callbacks (id, group) -> {0,1}.
inline albi::Dataset make_dataset(int n0, int n1,
                                  const std::function<int(int, int)>& observed,
                                  const std::function<int(int, int)>& gold,
                                  int feature_dim = 1) {
    std::vector<albi::Instance> rows;
    rows.reserve(static_cast<std::size_t>(n0 + n1));
    for (int id = 0; id < n0 + n1; ++id) {
        const int g = id < n0 ? 0 : 1;
        std::vector<double> f(static_cast<std::size_t>(feature_dim), 0.0);
        f[0] = id;
        rows.push_back(inst(id, std::move(f), g, observed(id, g), gold(id, g)));
    }
    return albi::Dataset(std::move(rows), feature_dim, "toy");
}

}  // namespace testutil
