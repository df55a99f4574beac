#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "albi/errors.hpp"
#include "albi/harness.hpp"
#include "albi/ingest.hpp"
#include "albi/metrics.hpp"
#include "albi/strategies.hpp"

namespace albi::config {

/// Flat key-value file with [section] headers, # or ; comments, and
/// `key = value` lines. Reads are tracked so unknown keys can be rejected.
class IniFile {
  public:
    static IniFile parse(const std::string& text, std::string origin) {
        IniFile ini;
        ini.origin_ = std::move(origin);
        std::string section;
        std::size_t line_no = 0;
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const std::size_t eol = std::min(text.find('\n', pos), text.size());
            std::string line = text.substr(pos, eol - pos);
            pos = eol + 1;
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            line = ingest::detail::trim(line);
            if (line.empty() || line[0] == '#' || line[0] == ';') continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ParseError(ini.origin_ + ":" + std::to_string(line_no) +
                                     ": malformed section header");
                section = ingest::detail::trim(line.substr(1, line.size() - 2));
                if (section.empty())
                    throw ParseError(ini.origin_ + ":" + std::to_string(line_no) +
                                     ": empty section name");
                ini.sections_[section];
                continue;
            }
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ParseError(ini.origin_ + ":" + std::to_string(line_no) +
                                 ": expected key = value");
            const std::string key = ingest::detail::trim(line.substr(0, eq));
            const std::string value = ingest::detail::trim(line.substr(eq + 1));
            if (key.empty())
                throw ParseError(ini.origin_ + ":" + std::to_string(line_no) + ": empty key");
            if (section.empty())
                throw ParseError(ini.origin_ + ":" + std::to_string(line_no) +
                                 ": key outside any section");
            if (!ini.sections_[section].emplace(key, value).second)
                throw ParseError(ini.origin_ + ":" + std::to_string(line_no) +
                                 ": duplicate key '" + key + "'");
        }
        return ini;
    }

    static IniFile load(const std::string& path) {
        return parse(ingest::detail::read_file(path), path);
    }

    const std::string& origin() const { return origin_; }

    bool has(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        return s != sections_.end() && s->second.count(key) > 0;
    }

    bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

    std::string get(const std::string& section, const std::string& key) const {
        const auto s = sections_.find(section);
        if (s == sections_.end() || s->second.count(key) == 0)
            throw ConfigInvalid(origin_ + ": missing required key [" + section + "] " + key);
        consumed_.insert({section, key});
        return s->second.at(key);
    }

    std::string get_or(const std::string& section, const std::string& key,
                       const std::string& fallback) const {
        if (!has(section, key)) return fallback;
        return get(section, key);
    }

    /// All key-value pairs of a section, marking them consumed.
    std::map<std::string, std::string> section(const std::string& name) const {
        const auto s = sections_.find(name);
        if (s == sections_.end())
            throw ConfigInvalid(origin_ + ": missing required section [" + name + "]");
        for (const auto& [key, value] : s->second) {
            (void)value;
            consumed_.insert({name, key});
        }
        return s->second;
    }

    double get_double(const std::string& section, const std::string& key) const {
        return ingest::detail::parse_double(get(section, key), "[" + section + "] " + key);
    }
    double get_double_or(const std::string& section, const std::string& key,
                         double fallback) const {
        if (!has(section, key)) return fallback;
        return get_double(section, key);
    }
    long long get_int(const std::string& section, const std::string& key) const {
        return ingest::detail::parse_int(get(section, key), "[" + section + "] " + key);
    }
    long long get_int_or(const std::string& section, const std::string& key,
                         long long fallback) const {
        if (!has(section, key)) return fallback;
        return get_int(section, key);
    }
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = get(section, key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ConfigInvalid(origin_ + ": [" + section + "] " + key +
                            " must be true or false, got '" + v + "'");
    }
    std::vector<std::string> get_list(const std::string& section, const std::string& key) const {
        const std::string raw = get(section, key);
        std::vector<std::string> items;
        std::size_t start = 0;
        while (start <= raw.size()) {
            const std::size_t comma = std::min(raw.find(',', start), raw.size());
            const std::string item = ingest::detail::trim(raw.substr(start, comma - start));
            if (!item.empty()) items.push_back(item);
            start = comma + 1;
        }
        if (items.empty())
            throw ConfigInvalid(origin_ + ": [" + section + "] " + key + " must be a non-empty list");
        return items;
    }
    std::vector<double> get_vector(const std::string& section, const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : get_list(section, key))
            out.push_back(ingest::detail::parse_double(item, "[" + section + "] " + key));
        return out;
    }

    /// Rejects keys that no parser consumed, so typos fail loudly.
    void ensure_fully_consumed() const {
        for (const auto& [section, keys] : sections_)
            for (const auto& [key, value] : keys) {
                (void)value;
                if (consumed_.count({section, key}) == 0)
                    throw ConfigInvalid(origin_ + ": unknown key [" + section + "] " + key);
            }
    }

  private:
    std::string origin_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    mutable std::set<std::pair<std::string, std::string>> consumed_;
};

struct DatasetSource {
    enum class Kind { EmbeddingCsv, TabularCsv, Synthetic };
    Kind kind = Kind::EmbeddingCsv;
    std::string path;
    std::string schema_path;
    int feature_dim = 100;
    std::uint64_t seed = 0;

    std::string describe() const {
        switch (kind) {
            case Kind::EmbeddingCsv:
                return "embedding_csv:" + path +
                       "(dim=" + (feature_dim == 0 ? "auto" : std::to_string(feature_dim)) + ")";
            case Kind::TabularCsv: return "tabular_csv:" + path + "(schema=" + schema_path + ")";
            case Kind::Synthetic:
                return "synthetic:" + path + "(seed=" + std::to_string(seed) + ")";
        }
        return "?";
    }
};

inline ingest::TabularSchema parse_schema(const IniFile& ini) {
    ingest::TabularSchema schema;
    for (const auto& [name, role] : ini.section("columns"))
        schema.columns[name] = ingest::column_role_from_string(role);
    schema.positive_class = ini.get("labels", "positive");
    for (const auto& [value, id] : ini.section("groups"))
        schema.group_values[value] =
            static_cast<int>(ingest::detail::parse_int(id, "[groups] " + value));
    ini.ensure_fully_consumed();
    schema.validate();
    return schema;
}

inline ingest::TabularSchema load_schema(const std::string& path) {
    return parse_schema(IniFile::load(path));
}

inline ingest::SyntheticSpec parse_synth_spec(const IniFile& ini) {
    ingest::SyntheticSpec spec;
    spec.n_g0 = static_cast<int>(ini.get_int("size", "n_g0"));
    spec.n_g1 = static_cast<int>(ini.get_int("size", "n_g1"));
    spec.feature_dim = static_cast<int>(ini.get_int("size", "feature_dim"));
    spec.spread = ini.get_double("distribution", "spread");
    spec.means[0][0] = ini.get_vector("distribution", "mean_g0_neg");
    spec.means[0][1] = ini.get_vector("distribution", "mean_g0_pos");
    spec.means[1][0] = ini.get_vector("distribution", "mean_g1_neg");
    spec.means[1][1] = ini.get_vector("distribution", "mean_g1_pos");
    spec.positive_fraction[0] = ini.get_double_or("distribution", "positive_fraction_g0", 0.5);
    spec.positive_fraction[1] = ini.get_double_or("distribution", "positive_fraction_g1", 0.5);
    spec.rule_weights = ini.get_vector("rule", "weights");
    spec.rule_bias = ini.get_double_or("rule", "bias", 0.0);
    const std::pair<const char*, std::pair<int, int>> noise_keys[] = {
        {"flip_g0_neg", {0, 0}}, {"flip_g0_pos", {0, 1}},
        {"flip_g1_neg", {1, 0}}, {"flip_g1_pos", {1, 1}}};
    for (const auto& [key, gk] : noise_keys) {
        const double rate = ini.get_double_or("noise", key, 0.0);
        if (rate != 0.0) spec.flip_rates[{GroupId{gk.first}, gk.second}] = rate;
    }
    ini.ensure_fully_consumed();
    spec.validate();
    return spec;
}

inline ingest::SyntheticSpec load_synth_spec(const std::string& path) {
    return parse_synth_spec(IniFile::load(path));
}

struct RunSpec {
    DatasetSource source;
    harness::ExperimentConfig experiment;
};

inline DatasetSource parse_dataset_source(const IniFile& ini) {
    DatasetSource source;
    const std::string kind = ini.get("dataset", "kind");
    if (kind == "embedding_csv") {
        source.kind = DatasetSource::Kind::EmbeddingCsv;
        source.path = ini.get("dataset", "path");
        const std::string dim = ini.get_or("dataset", "feature_dim", "100");
        source.feature_dim =
            dim == "auto" ? 0 : static_cast<int>(ingest::detail::parse_int(dim, "feature_dim"));
    } else if (kind == "tabular_csv") {
        source.kind = DatasetSource::Kind::TabularCsv;
        source.path = ini.get("dataset", "path");
        source.schema_path = ini.get("dataset", "schema");
    } else if (kind == "synthetic") {
        source.kind = DatasetSource::Kind::Synthetic;
        source.path = ini.get("dataset", "path");
        source.seed = static_cast<std::uint64_t>(ini.get_int_or("dataset", "seed", 0));
    } else {
        throw ConfigInvalid(ini.origin() + ": [dataset] kind must be embedding_csv, tabular_csv, "
                                           "or synthetic, got '" +
                            kind + "'");
    }
    return source;
}

inline RunSpec parse_run_spec(const IniFile& ini) {
    RunSpec spec;
    spec.source = parse_dataset_source(ini);

    auto& strat = spec.experiment.strategy;
    strat.kind = strategies::strategy_kind_from_string(ini.get("strategy", "kind"));
    strat.p = ini.get_double_or("strategy", "p", 0.5);
    strat.alpha = ini.get_double_or("strategy", "alpha", 0.5);
    strat.fairness_target = metrics::fairness_target_from_string(
        ini.get_or("strategy", "fairness_target", "acc_gap"));
    strat.fal_candidate_cap =
        static_cast<int>(ini.get_int_or("strategy", "fal_candidate_cap", 50));

    auto& exp = spec.experiment;
    exp.dataset_source = spec.source.describe();
    exp.budget = static_cast<int>(ini.get_int("protocol", "budget"));
    exp.batch_size = static_cast<int>(ini.get_int_or("protocol", "batch_size", 1));
    exp.per_group_seed = static_cast<int>(ini.get_int_or("protocol", "per_group_seed", 0));
    exp.train_fraction = ini.get_double_or("protocol", "train_fraction", 0.7);
    exp.repetitions = static_cast<int>(ini.get_int_or("protocol", "repetitions", 1));
    exp.base_seed = static_cast<std::uint64_t>(ini.get_int_or("protocol", "base_seed", 0));
    exp.budget_counts_seed = ini.get_bool_or("protocol", "budget_counts_seed", false);
    exp.g0 = GroupId{static_cast<int>(ini.get_int_or("protocol", "g0", 0))};
    exp.g1 = GroupId{static_cast<int>(ini.get_int_or("protocol", "g1", 1))};
    if (ini.has("protocol", "metrics")) {
        for (const auto& name : ini.get_list("protocol", "metrics"))
            exp.metric_kinds.push_back(metrics::metric_kind_from_string(name));
    } else {
        exp.metric_kinds = {metrics::MetricKind::AccGap,    metrics::MetricKind::AbsAccGap,
                            metrics::MetricKind::TprGap,    metrics::MetricKind::AbsTprGap,
                            metrics::MetricKind::FprGap,    metrics::MetricKind::AbsFprGap,
                            metrics::MetricKind::Accuracy};
    }

    exp.hyper.learning_rate = ini.get_double_or("learner", "learning_rate", 0.1);
    exp.hyper.l2_penalty = ini.get_double_or("learner", "l2_penalty", 1e-4);
    exp.hyper.max_epochs = static_cast<int>(ini.get_int_or("learner", "max_epochs", 2000));
    exp.hyper.convergence_tol = ini.get_double_or("learner", "convergence_tol", 1e-6);

    ini.ensure_fully_consumed();
    exp.validate();
    return spec;
}

inline RunSpec load_run_spec(const std::string& path) {
    return parse_run_spec(IniFile::load(path));
}

/// Relative data paths inside a run config resolve against the config file's
/// directory, so runs are reproducible from any working directory.
inline std::string resolve_relative(const std::string& base_file, const std::string& path) {
    const std::filesystem::path p(path);
    if (p.is_absolute()) return path;
    return (std::filesystem::path(base_file).parent_path() / p).string();
}

inline Dataset resolve_dataset(const DatasetSource& source) {
    switch (source.kind) {
        case DatasetSource::Kind::EmbeddingCsv:
            return ingest::load_embeddings(source.path, source.feature_dim);
        case DatasetSource::Kind::TabularCsv:
            return ingest::load_tabular(source.path, load_schema(source.schema_path));
        case DatasetSource::Kind::Synthetic: {
            Rng rng(source.seed);
            return ingest::generate_synthetic(load_synth_spec(source.path), rng);
        }
    }
    throw ConfigInvalid("unknown dataset source kind");
}

}  // namespace albi::config
