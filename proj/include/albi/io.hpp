#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "json.hpp"

#include "albi/bias.hpp"
#include "albi/core.hpp"
#include "albi/errors.hpp"
#include "albi/harness.hpp"
#include "albi/metrics.hpp"
#include "albi/strategies.hpp"

namespace albi::io {

using json = nlohmann::ordered_json;

/// Shortest round-trip decimal form; bit-stable across runs and platforms.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Write-to-temp then rename, so a crash never leaves a partial file at the
/// final path.
inline void atomic_write(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("rename failed: " + tmp.string() + " -> " + path.string());
}

/// Embedding-CSV form of a dataset, gold column included.
inline std::string dataset_csv(const Dataset& dataset) {
    std::string out = "id";
    for (int f = 0; f < dataset.feature_dim(); ++f) out += ",f" + std::to_string(f);
    out += ",group,observed,gold\n";
    for (const auto& inst : dataset.instances()) {
        out += std::to_string(inst.id);
        for (double v : inst.features) {
            out += ',';
            out += format_double(v);
        }
        out += ',' + std::to_string(inst.group.value);
        out += ',' + std::to_string(inst.observed_label);
        out += ',' + std::to_string(inst.gold_label);
        out += '\n';
    }
    return out;
}

inline std::string annotations_csv(const bias::AnnotationTable& table) {
    std::string out = "instance_id,annotator_id,label\n";
    for (const auto& [instance, by_annotator] : table.rows)
        for (const auto& [annotator, label] : by_annotator)
            out += std::to_string(instance) + ',' + std::to_string(annotator) + ',' +
                   std::to_string(label) + '\n';
    return out;
}

inline std::string trajectory_csv(const harness::ExperimentResult& result) {
    std::string out = "repetition,iteration,n_labeled,metric,label_kind,value\n";
    for (const auto& rep : result.repetitions)
        for (const auto& pt : rep.trajectory.points) {
            out += std::to_string(rep.repetition);
            out += ',' + std::to_string(pt.iteration);
            out += ',' + std::to_string(pt.n_labeled);
            out += ',';
            out += metrics::to_string(pt.metric);
            out += ',';
            out += to_string(pt.label_kind);
            out += ',' + format_double(pt.value) + '\n';
        }
    return out;
}

inline json config_json(const harness::ExperimentConfig& config,
                        strategies::StrategyKind strategy_kind) {
    json j;
    j["dataset"] = config.dataset_source;
    j["strategy"] = strategies::to_string(strategy_kind);
    j["budget"] = config.budget;
    j["batch_size"] = config.batch_size;
    j["per_group_seed"] = config.per_group_seed;
    j["train_fraction"] = config.train_fraction;
    j["repetitions"] = config.repetitions;
    j["base_seed"] = config.base_seed;
    j["budget_counts_seed"] = config.budget_counts_seed;
    j["g0"] = config.g0.value;
    j["g1"] = config.g1.value;
    json names = json::array();
    for (auto mk : config.metric_kinds) names.push_back(metrics::to_string(mk));
    j["metrics"] = names;
    return j;
}

inline json summary_json(const harness::ExperimentResult& result) {
    json j;
    j["config"] = config_json(result.config, result.config.strategy.kind);
    j["partial"] = result.partial;
    json aborted = json::array();
    for (const auto& rep : result.repetitions)
        if (rep.aborted) {
            json a;
            a["repetition"] = rep.repetition;
            a["reason"] = rep.abort_reason;
            aborted.push_back(a);
        }
    j["aborted"] = aborted;
    json aggregate = json::array();
    for (const auto& pt : result.aggregate) {
        json p;
        p["iteration"] = pt.iteration;
        p["n_labeled"] = pt.n_labeled;
        p["metric"] = metrics::to_string(pt.metric);
        p["label_kind"] = to_string(pt.label_kind);
        p["mean"] = pt.mean;
        p["lo"] = pt.lo;
        p["hi"] = pt.hi;
        aggregate.push_back(p);
    }
    j["aggregate"] = aggregate;
    json divergence;
    for (auto mk : result.config.metric_kinds) {
        try {
            const auto report = harness::detect_divergence(result, mk);
            json d;
            d["observed_trend_slope"] = report.observed_trend_slope;
            d["gold_trend_slope"] = report.gold_trend_slope;
            d["sign_flip"] = report.sign_flip;
            d["opposite_trend"] = report.opposite_trend;
            divergence[metrics::to_string(mk)] = d;
        } catch (const TooFewPoints&) {
        }
    }
    j["divergence"] = divergence;
    return j;
}

/// Rebuilds the skeleton of a result (config echo + aggregate curve) from a
/// summary document; enough for cross-run comparison.
inline harness::ExperimentResult result_from_summary(const json& j) {
    harness::ExperimentResult result;
    const auto& c = j.at("config");
    result.config.dataset_source = c.at("dataset").get<std::string>();
    result.config.strategy.kind =
        strategies::strategy_kind_from_string(c.at("strategy").get<std::string>());
    result.config.budget = c.at("budget").get<int>();
    result.config.batch_size = c.at("batch_size").get<int>();
    result.config.per_group_seed = c.at("per_group_seed").get<int>();
    result.config.train_fraction = c.at("train_fraction").get<double>();
    result.config.repetitions = c.at("repetitions").get<int>();
    result.config.base_seed = c.at("base_seed").get<std::uint64_t>();
    result.config.budget_counts_seed = c.at("budget_counts_seed").get<bool>();
    result.config.g0 = GroupId{c.at("g0").get<int>()};
    result.config.g1 = GroupId{c.at("g1").get<int>()};
    for (const auto& name : c.at("metrics"))
        result.config.metric_kinds.push_back(
            metrics::metric_kind_from_string(name.get<std::string>()));
    result.partial = j.at("partial").get<bool>();
    for (const auto& p : j.at("aggregate")) {
        harness::AggregatePoint pt;
        pt.iteration = p.at("iteration").get<int>();
        pt.n_labeled = p.at("n_labeled").get<int>();
        pt.metric = metrics::metric_kind_from_string(p.at("metric").get<std::string>());
        pt.label_kind = p.at("label_kind").get<std::string>() == "gold" ? LabelKind::Gold
                                                                        : LabelKind::Observed;
        pt.mean = p.at("mean").get<double>();
        pt.lo = p.at("lo").get<double>();
        pt.hi = p.at("hi").get<double>();
        result.aggregate.push_back(pt);
    }
    return result;
}

inline json audit_json(const metrics::BiasAuditReport& report) {
    json j;
    j["agreement_g0"] = report.agreement_g0;
    j["agreement_g1"] = report.agreement_g1;
    j["biased"] = report.biased;
    j["tolerance"] = report.tolerance;
    return j;
}

inline json labeler_stats_json(const std::vector<bias::LabelerStats>& stats, GroupId g0,
                               GroupId g1) {
    json arr = json::array();
    for (const auto& s : stats) {
        json j;
        j["annotator_id"] = s.annotator_id;
        j["accuracy"] = s.accuracy;
        j["disparity"] = s.disparity;
        j["disparity_defined"] = s.disparity_defined;
        j["n_labeled"] = s.n_labeled;
        json per_group;
        for (GroupId g : {g0, g1}) {
            const auto it = s.per_group_accuracy.find(g);
            const std::string key = "g" + std::to_string(g.value);
            if (it != s.per_group_accuracy.end() && it->second.has_value())
                per_group[key] = *it->second;
            else
                per_group[key] = nullptr;
        }
        j["per_group_accuracy"] = per_group;
        arr.push_back(j);
    }
    return arr;
}

inline json comparison_json(const harness::StrategyComparison& cmp) {
    json j;
    j["metric"] = metrics::to_string(cmp.metric);
    json rows = json::array();
    for (const auto& row : cmp.rows) {
        json r;
        r["strategy"] = row.strategy;
        r["observed_mean"] = row.observed_mean;
        r["observed_lo"] = row.observed_lo;
        r["observed_hi"] = row.observed_hi;
        r["gold_mean"] = row.gold_mean;
        r["gold_lo"] = row.gold_lo;
        r["gold_hi"] = row.gold_hi;
        rows.push_back(r);
    }
    j["rows"] = rows;
    j["observed_argmin"] = cmp.observed_argmin;
    j["gold_argmin"] = cmp.gold_argmin;
    j["model_selection_hazard"] = cmp.model_selection_hazard;
    return j;
}

inline std::string comparison_csv(const harness::StrategyComparison& cmp) {
    std::string out =
        "strategy,observed_mean,observed_lo,observed_hi,gold_mean,gold_lo,gold_hi\n";
    for (const auto& row : cmp.rows) {
        out += row.strategy;
        out += ',' + format_double(row.observed_mean);
        out += ',' + format_double(row.observed_lo);
        out += ',' + format_double(row.observed_hi);
        out += ',' + format_double(row.gold_mean);
        out += ',' + format_double(row.gold_lo);
        out += ',' + format_double(row.gold_hi);
        out += '\n';
    }
    return out;
}

}  // namespace albi::io
