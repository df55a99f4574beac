#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "albi/bias.hpp"
#include "albi/core.hpp"
#include "albi/errors.hpp"
#include "albi/rng.hpp"

namespace albi::ingest {

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// RFC 4180 CSV: quoted fields may contain commas, newlines, and doubled
/// quotes; records end at LF or CRLF.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text,
                                                       const std::string& origin) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
        } else {
            field.push_back(c);
            field_started = true;
        }
    }
    if (in_quotes) throw ParseError(origin + ": unterminated quoted field");
    if (!field.empty() || !record.empty()) end_record();
    return records;
}

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && (s[a] == ' ' || s[a] == '\t')) ++a;
    while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t')) --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw ParseError("");
        return v;
    } catch (...) {
        throw ParseError("cannot parse " + what + " as a number: '" + s + "'");
    }
}

inline long long parse_int(const std::string& s, const std::string& what) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw ParseError("");
        return v;
    } catch (...) {
        throw ParseError("cannot parse " + what + " as an integer: '" + s + "'");
    }
}

inline int parse_binary(const std::string& s, const std::string& what) {
    const long long v = parse_int(s, what);
    if (v != 0 && v != 1) throw ParseError(what + " must be 0 or 1, got '" + s + "'");
    return static_cast<int>(v);
}

}  // namespace detail

enum class ColumnRole { Numeric, Categorical, Group, ObservedLabel, GoldLabel, Ignore };

inline const char* to_string(ColumnRole r) {
    switch (r) {
        case ColumnRole::Numeric: return "numeric";
        case ColumnRole::Categorical: return "categorical";
        case ColumnRole::Group: return "group";
        case ColumnRole::ObservedLabel: return "observed_label";
        case ColumnRole::GoldLabel: return "gold_label";
        case ColumnRole::Ignore: return "ignore";
    }
    return "?";
}

inline ColumnRole column_role_from_string(const std::string& s) {
    if (s == "numeric") return ColumnRole::Numeric;
    if (s == "categorical") return ColumnRole::Categorical;
    if (s == "group") return ColumnRole::Group;
    if (s == "observed_label") return ColumnRole::ObservedLabel;
    if (s == "gold_label") return ColumnRole::GoldLabel;
    if (s == "ignore") return ColumnRole::Ignore;
    throw SchemaMismatch("unknown column role: " + s);
}

struct TabularSchema {
    std::map<std::string, ColumnRole> columns;
    std::string positive_class;
    std::map<std::string, int> group_values;

    void validate() const {
        int n_group = 0, n_observed = 0, n_gold = 0;
        for (const auto& [name, role] : columns) {
            (void)name;
            n_group += role == ColumnRole::Group;
            n_observed += role == ColumnRole::ObservedLabel;
            n_gold += role == ColumnRole::GoldLabel;
        }
        if (n_group != 1) throw SchemaMismatch("schema must declare exactly one group column");
        if (n_observed != 1)
            throw SchemaMismatch("schema must declare exactly one observed_label column");
        if (n_gold > 1) throw SchemaMismatch("schema allows at most one gold_label column");
        if (positive_class.empty())
            throw SchemaMismatch("schema must declare the positive label value");
        std::set<int> ids;
        for (const auto& [value, id] : group_values) {
            (void)value;
            ids.insert(id);
        }
        if (ids.size() != 2)
            throw SchemaMismatch("schema group mapping must target exactly two group ids");
    }
};

struct TabularLoadReport {
    int rows_loaded = 0;
    int rows_dropped = 0;
    std::vector<std::string> warnings;
    std::map<std::string, std::pair<double, double>> numeric_stats;
    std::map<std::string, std::vector<std::string>> categories;
};

/// Loads a header-rowed CSV under the schema: numeric columns are z-scored
/// over the loaded population, categoricals one-hot encoded in first-seen
/// order, rows with a missing value ('' or '?') in any used column dropped.
/// Without a gold column, gold starts equal to observed.
inline Dataset load_tabular(const std::string& path, const TabularSchema& schema,
                            TabularLoadReport* report = nullptr) {
    schema.validate();
    const auto records = detail::parse_csv(detail::read_file(path), path);
    if (records.empty()) throw ParseError(path + ": empty input");

    const auto& header = records.front();
    std::vector<ColumnRole> roles(header.size());
    std::set<std::string> schema_cols;
    for (const auto& [name, role] : schema.columns) {
        (void)role;
        schema_cols.insert(name);
    }
    for (std::size_t c = 0; c < header.size(); ++c) {
        const std::string name = detail::trim(header[c]);
        const auto it = schema.columns.find(name);
        if (it == schema.columns.end())
            throw SchemaMismatch(path + ": column '" + name + "' not covered by the schema");
        roles[c] = it->second;
        schema_cols.erase(name);
    }
    if (!schema_cols.empty())
        throw SchemaMismatch(path + ": schema column '" + *schema_cols.begin() +
                             "' missing from the file");

    TabularLoadReport local_report;
    TabularLoadReport& rep = report ? *report : local_report;

    std::vector<std::vector<std::string>> rows;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (rec.size() != header.size())
            throw ParseError(path + ": row " + std::to_string(r + 1) + " has " +
                             std::to_string(rec.size()) + " fields, expected " +
                             std::to_string(header.size()));
        std::vector<std::string> fields(rec.size());
        bool missing = false;
        for (std::size_t c = 0; c < rec.size(); ++c) {
            fields[c] = detail::trim(rec[c]);
            if (roles[c] != ColumnRole::Ignore && (fields[c].empty() || fields[c] == "?"))
                missing = true;
        }
        if (missing)
            ++rep.rows_dropped;
        else
            rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw EmptyAfterFiltering();
    rep.rows_loaded = static_cast<int>(rows.size());

    struct ColumnPlan {
        std::size_t index;
        std::string name;
        ColumnRole role;
        std::vector<std::string> categories;
        double mean = 0.0;
        double sd = 1.0;
    };
    std::vector<ColumnPlan> feature_cols;
    std::size_t group_col = 0, observed_col = 0;
    std::optional<std::size_t> gold_col;
    for (std::size_t c = 0; c < header.size(); ++c) {
        switch (roles[c]) {
            case ColumnRole::Numeric:
            case ColumnRole::Categorical:
                feature_cols.push_back({c, detail::trim(header[c]), roles[c], {}, 0.0, 1.0});
                break;
            case ColumnRole::Group: group_col = c; break;
            case ColumnRole::ObservedLabel: observed_col = c; break;
            case ColumnRole::GoldLabel: gold_col = c; break;
            case ColumnRole::Ignore: break;
        }
    }

    for (auto& plan : feature_cols) {
        if (plan.role == ColumnRole::Numeric) {
            double sum = 0.0;
            for (const auto& row : rows)
                sum += detail::parse_double(row[plan.index], "column " + plan.name);
            plan.mean = sum / static_cast<double>(rows.size());
            double ss = 0.0;
            for (const auto& row : rows) {
                const double v = detail::parse_double(row[plan.index], "column " + plan.name);
                ss += (v - plan.mean) * (v - plan.mean);
            }
            plan.sd = std::sqrt(ss / static_cast<double>(rows.size()));
            if (plan.sd == 0.0) {
                rep.warnings.push_back("column " + plan.name +
                                       " is constant; standardized to all zeros");
            }
            rep.numeric_stats[plan.name] = {plan.mean, plan.sd};
        } else {
            std::set<std::string> seen;
            for (const auto& row : rows)
                if (seen.insert(row[plan.index]).second)
                    plan.categories.push_back(row[plan.index]);
            rep.categories[plan.name] = plan.categories;
        }
    }

    int dim = 0;
    for (const auto& plan : feature_cols)
        dim += plan.role == ColumnRole::Numeric ? 1 : static_cast<int>(plan.categories.size());

    std::vector<Instance> instances;
    instances.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& row = rows[r];
        Instance inst;
        inst.id = static_cast<int>(r);
        inst.features.reserve(static_cast<std::size_t>(dim));
        for (const auto& plan : feature_cols) {
            if (plan.role == ColumnRole::Numeric) {
                const double v = detail::parse_double(row[plan.index], "column " + plan.name);
                inst.features.push_back(plan.sd == 0.0 ? 0.0 : (v - plan.mean) / plan.sd);
            } else {
                for (const auto& cat : plan.categories)
                    inst.features.push_back(row[plan.index] == cat ? 1.0 : 0.0);
            }
        }
        const auto git = schema.group_values.find(row[group_col]);
        if (git == schema.group_values.end())
            throw NonBinaryGroup(path + ": unmapped group value '" + row[group_col] + "'");
        inst.group = GroupId{git->second};
        inst.observed_label = row[observed_col] == schema.positive_class ? 1 : 0;
        inst.gold_label =
            gold_col ? (row[*gold_col] == schema.positive_class ? 1 : 0) : inst.observed_label;
        instances.push_back(std::move(inst));
    }
    return Dataset(std::move(instances), dim,
                   std::filesystem::path(path).filename().string());
}

/// Loads the embedding CSV `id,f0..f99,group,observed[,gold]`. Features pass
/// through verbatim. `expected_dim` 0 means infer from the header.
inline Dataset load_embeddings(const std::string& path, int expected_dim = 100) {
    const auto records = detail::parse_csv(detail::read_file(path), path);
    if (records.empty()) throw ParseError(path + ": empty input");

    const auto& header = records.front();
    if (header.size() < 4 || detail::trim(header[0]) != "id")
        throw ParseError(path + ": header must be id,f0..,group,observed[,gold]");
    std::size_t n_features = 0;
    while (1 + n_features < header.size() &&
           detail::trim(header[1 + n_features]) == "f" + std::to_string(n_features))
        ++n_features;
    const std::size_t after = 1 + n_features;
    const bool has_gold = header.size() == after + 3;
    if (!(header.size() == after + 2 || has_gold) ||
        detail::trim(header[after]) != "group" || detail::trim(header[after + 1]) != "observed" ||
        (has_gold && detail::trim(header[after + 2]) != "gold"))
        throw ParseError(path + ": header must be id,f0..,group,observed[,gold]");
    if (expected_dim > 0 && static_cast<int>(n_features) != expected_dim)
        throw DimensionMismatch(path + ": expected " + std::to_string(expected_dim) +
                                " feature columns, found " + std::to_string(n_features));

    std::vector<Instance> instances;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (rec.size() != header.size())
            throw DimensionMismatch(path + ": row " + std::to_string(r + 1) + " has " +
                                    std::to_string(rec.size()) + " fields, expected " +
                                    std::to_string(header.size()));
        Instance inst;
        inst.id = static_cast<int>(detail::parse_int(detail::trim(rec[0]), "id"));
        inst.features.reserve(n_features);
        for (std::size_t f = 0; f < n_features; ++f)
            inst.features.push_back(
                detail::parse_double(detail::trim(rec[1 + f]), "f" + std::to_string(f)));
        inst.group = GroupId{static_cast<int>(detail::parse_int(detail::trim(rec[after]), "group"))};
        inst.observed_label = detail::parse_binary(detail::trim(rec[after + 1]), "observed");
        inst.gold_label = has_gold ? detail::parse_binary(detail::trim(rec[after + 2]), "gold")
                                   : inst.observed_label;
        instances.push_back(std::move(inst));
    }
    if (instances.empty()) throw ParseError(path + ": no data rows");
    std::sort(instances.begin(), instances.end(),
              [](const Instance& a, const Instance& b) { return a.id < b.id; });
    return Dataset(std::move(instances), static_cast<int>(n_features),
                   std::filesystem::path(path).filename().string());
}

/// Loads the annotation CSV `instance_id,annotator_id,label`.
inline bias::AnnotationTable load_annotations(const std::string& path) {
    const auto records = detail::parse_csv(detail::read_file(path), path);
    if (records.empty()) throw ParseError(path + ": empty input");
    const auto& header = records.front();
    if (header.size() != 3 || detail::trim(header[0]) != "instance_id" ||
        detail::trim(header[1]) != "annotator_id" || detail::trim(header[2]) != "label")
        throw ParseError(path + ": header must be instance_id,annotator_id,label");

    bias::AnnotationTable table;
    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.size() == 1 && rec[0].empty()) continue;
        if (rec.size() != 3)
            throw ParseError(path + ": row " + std::to_string(r + 1) +
                             " must have exactly 3 fields");
        const int instance =
            static_cast<int>(detail::parse_int(detail::trim(rec[0]), "instance_id"));
        const int annotator =
            static_cast<int>(detail::parse_int(detail::trim(rec[1]), "annotator_id"));
        const int label = detail::parse_binary(detail::trim(rec[2]), "label");
        auto& by_annotator = table.rows[instance];
        if (!by_annotator.emplace(annotator, label).second)
            throw DuplicateAnnotation(instance, annotator);
    }
    if (table.rows.empty()) throw ParseError(path + ": no data rows");
    return table;
}

/// Two-group Gaussian generator: class drawn per group's positive fraction,
/// features from the (group, class) mean with shared isotropic spread, gold
/// from the linear rule, observed from gold via the flip rates.
struct SyntheticSpec {
    int n_g0 = 0;
    int n_g1 = 0;
    int feature_dim = 0;
    std::array<std::array<std::vector<double>, 2>, 2> means;  // [group][class]
    double spread = 1.0;
    std::vector<double> rule_weights;
    double rule_bias = 0.0;
    std::array<double, 2> positive_fraction = {0.5, 0.5};
    bias::FlipRateMap flip_rates;

    void validate() const {
        if (n_g0 < 4 || n_g1 < 4) throw SpecInvalid("need at least 4 instances per group");
        if (feature_dim < 1) throw SpecInvalid("feature_dim must be positive");
        if (!(spread > 0.0)) throw SpecInvalid("spread must be positive");
        for (int g = 0; g < 2; ++g)
            for (int c = 0; c < 2; ++c)
                if (static_cast<int>(means[static_cast<std::size_t>(g)][static_cast<std::size_t>(c)]
                                         .size()) != feature_dim)
                    throw SpecInvalid("mean vector for group " + std::to_string(g) + ", class " +
                                      std::to_string(c) + " must have feature_dim entries");
        if (static_cast<int>(rule_weights.size()) != feature_dim)
            throw SpecInvalid("rule weights must have feature_dim entries");
        for (double f : positive_fraction)
            if (!(f >= 0.0 && f <= 1.0)) throw SpecInvalid("positive fractions must lie in [0,1]");
        for (const auto& [key, rate] : flip_rates) {
            (void)key;
            if (!(rate >= 0.0 && rate <= 1.0)) throw SpecInvalid("flip rates must lie in [0,1]");
        }
    }
};

inline Dataset generate_synthetic(const SyntheticSpec& spec, Rng& rng) {
    spec.validate();
    std::vector<Instance> instances;
    instances.reserve(static_cast<std::size_t>(spec.n_g0 + spec.n_g1));
    int next_id = 0;
    for (int g = 0; g < 2; ++g) {
        const int n = g == 0 ? spec.n_g0 : spec.n_g1;
        for (int i = 0; i < n; ++i) {
            Instance inst;
            inst.id = next_id++;
            inst.group = GroupId{g};
            const int cls =
                rng.bernoulli(spec.positive_fraction[static_cast<std::size_t>(g)]) ? 1 : 0;
            const auto& mean =
                spec.means[static_cast<std::size_t>(g)][static_cast<std::size_t>(cls)];
            inst.features.reserve(static_cast<std::size_t>(spec.feature_dim));
            for (int d = 0; d < spec.feature_dim; ++d)
                inst.features.push_back(mean[static_cast<std::size_t>(d)] +
                                        spec.spread * rng.gaussian());
            double z = spec.rule_bias;
            for (int d = 0; d < spec.feature_dim; ++d)
                z += spec.rule_weights[static_cast<std::size_t>(d)] *
                     inst.features[static_cast<std::size_t>(d)];
            inst.gold_label = z >= 0.0 ? 1 : 0;
            inst.observed_label = inst.gold_label;
            instances.push_back(std::move(inst));
        }
    }
    const Dataset clean(std::move(instances), spec.feature_dim, "synthetic");
    return bias::group_noise(clean, spec.flip_rates, rng);
}

}  // namespace albi::ingest
