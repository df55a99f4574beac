#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "albi/albi.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

using albi::io::json;

albi::GroupId gid(int v) { return albi::GroupId{v}; }

int cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out_path) {
    const auto spec = albi::config::load_synth_spec(spec_path);
    albi::Rng rng(seed);
    const auto dataset = albi::ingest::generate_synthetic(spec, rng);
    albi::io::atomic_write(out_path, albi::io::dataset_csv(dataset));
    std::cerr << "wrote " << dataset.size() << " instances to " << out_path << "\n";
    return 0;
}

albi::bias::FlipRateMap parse_flip_args(const std::vector<std::string>& flips) {
    albi::bias::FlipRateMap rates;
    for (const auto& raw : flips) {
        const auto c1 = raw.find(':');
        const auto c2 = raw.find(':', c1 == std::string::npos ? c1 : c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw albi::ConfigInvalid("--flip expects group:gold:rate, got '" + raw + "'");
        const int group = static_cast<int>(
            albi::ingest::detail::parse_int(raw.substr(0, c1), "--flip group"));
        const int gold = albi::ingest::detail::parse_binary(
            raw.substr(c1 + 1, c2 - c1 - 1), "--flip gold label");
        const double rate =
            albi::ingest::detail::parse_double(raw.substr(c2 + 1), "--flip rate");
        rates[{gid(group), gold}] = rate;
    }
    return rates;
}

struct InjectArgs {
    std::string method;
    std::string data;
    std::string out;
    std::uint64_t seed = 0;
    int low = 0;
    int ref = 1;
    std::vector<std::string> flips;
    std::string annotations;
    int g0 = 0;
    int g1 = 1;
    std::string measure = "abs_accuracy_gap";
};

int cmd_inject(const InjectArgs& args) {
    const auto dataset = albi::ingest::load_embeddings(args.data, 0);
    albi::Dataset out = [&] {
        if (args.method == "parity-flip") {
            albi::Rng rng(args.seed);
            return albi::bias::parity_flip(dataset, gid(args.low), gid(args.ref), rng);
        }
        if (args.method == "group-noise") {
            albi::Rng rng(args.seed);
            return albi::bias::group_noise(dataset, parse_flip_args(args.flips), rng);
        }
        if (args.annotations.empty())
            throw albi::ConfigInvalid("--annotations is required for worst-labeler");
        const auto table = albi::ingest::load_annotations(args.annotations);
        return albi::bias::worst_labeler_observed(
            table, dataset, gid(args.g0), gid(args.g1),
            albi::bias::disparity_measure_from_string(args.measure));
    }();
    albi::io::atomic_write(args.out, albi::io::dataset_csv(out));
    std::cerr << "wrote " << out.size() << " instances to " << args.out << "\n";
    return 0;
}

int cmd_audit(const std::string& data, int g0, int g1, double tolerance,
              const std::string& annotations, const std::string& measure) {
    const auto dataset = albi::ingest::load_embeddings(data, 0);
    const auto report = albi::metrics::label_bias_audit(dataset, gid(g0), gid(g1), tolerance);
    json j = albi::io::audit_json(report);
    if (!annotations.empty()) {
        const auto table = albi::ingest::load_annotations(annotations);
        const auto stats =
            albi::bias::labeler_stats(table, dataset, gid(g0), gid(g1),
                                      albi::bias::disparity_measure_from_string(measure));
        j["labelers"] = albi::io::labeler_stats_json(stats, gid(g0), gid(g1));
        for (const auto& s : stats)
            if (!s.disparity_defined)
                std::cerr << "warning: annotator " << s.annotator_id
                          << " covers one group only; disparity treated as 0\n";
    }
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, int parallel) {
    const auto start = std::chrono::steady_clock::now();
    const std::string raw_config = albi::ingest::detail::read_file(config_path);
    const auto ini = albi::config::IniFile::parse(raw_config, config_path);
    const auto spec = albi::config::parse_run_spec(ini);

    albi::config::DatasetSource resolved = spec.source;
    resolved.path = albi::config::resolve_relative(config_path, resolved.path);
    if (!resolved.schema_path.empty())
        resolved.schema_path = albi::config::resolve_relative(config_path, resolved.schema_path);
    const auto dataset = albi::config::resolve_dataset(resolved);

    std::cerr << "dataset: " << spec.experiment.dataset_source << " (" << dataset.size()
              << " instances)\n"
              << "strategy: " << albi::strategies::to_string(spec.experiment.strategy.kind)
              << ", repetitions: " << spec.experiment.repetitions
              << ", iterations: " << spec.experiment.iterations() << ", workers: " << parallel
              << "\n";

    const auto result = albi::harness::run_experiment(dataset, spec.experiment, parallel);

    const std::filesystem::path dir(out_dir);
    albi::io::atomic_write(dir / "trajectory.csv", albi::io::trajectory_csv(result));
    albi::io::atomic_write(dir / "summary.json", albi::io::summary_json(result).dump(2) + "\n");

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json manifest;
    manifest["tool"] = "albi";
    manifest["version"] = kVersion;
    manifest["command"] = "run";
    manifest["config_path"] = config_path;
    manifest["config"] = raw_config;
    manifest["dataset"] = spec.experiment.dataset_source;
    manifest["base_seed"] = spec.experiment.base_seed;
    json seeds = json::array();
    for (const auto& rep : result.repetitions) seeds.push_back(rep.seed);
    manifest["seeds"] = seeds;
    manifest["parallel"] = parallel;
    manifest["partial"] = result.partial;
    manifest["duration_seconds"] = seconds;
    json artifacts;
    artifacts["trajectory"] = "trajectory.csv";
    artifacts["summary"] = "summary.json";
    manifest["artifacts"] = artifacts;
    albi::io::atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");

    int survivors = 0;
    for (const auto& rep : result.repetitions) {
        if (rep.aborted)
            std::cerr << "repetition " << rep.repetition << " aborted: " << rep.abort_reason
                      << "\n";
        else
            ++survivors;
        for (const auto& w : rep.warnings)
            std::cerr << "repetition " << rep.repetition << ": " << w << "\n";
    }
    std::cerr << "run complete in " << seconds << " s, artifacts in " << dir.string() << "\n";
    if (survivors == 0) {
        std::cerr << "error: every repetition aborted\n";
        return 1;
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& metric_name,
                const std::string& out_csv) {
    const auto metric = albi::metrics::metric_kind_from_string(metric_name);
    std::map<std::string, albi::harness::ExperimentResult> results;
    for (const auto& dir : dirs) {
        const auto path = (std::filesystem::path(dir) / "summary.json").string();
        json summary;
        try {
            summary = json::parse(albi::ingest::detail::read_file(path));
        } catch (const json::exception& e) {
            throw albi::ParseError(path + ": " + e.what());
        }
        auto result = albi::io::result_from_summary(summary);
        std::string name = albi::strategies::to_string(result.config.strategy.kind);
        if (results.count(name)) name += " (" + dir + ")";
        if (results.count(name))
            throw albi::IncompatibleResults("duplicate strategy result from " + dir);
        results.emplace(std::move(name), std::move(result));
    }
    const auto cmp = albi::harness::compare_strategies(results, metric);
    if (!out_csv.empty()) albi::io::atomic_write(out_csv, albi::io::comparison_csv(cmp));
    std::cout << albi::io::comparison_json(cmp).dump(2) << "\n";
    if (cmp.model_selection_hazard)
        std::cerr << "note: model selection hazard, observed-best '" << cmp.observed_argmin
                  << "' differs from gold-best '" << cmp.gold_argmin << "'\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pool-based active learning under label bias"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    auto* synth = app.add_subcommand("synth", "generate a synthetic two-group dataset");
    std::string synth_spec, synth_out;
    std::uint64_t synth_seed = 0;
    synth->add_option("spec", synth_spec, "synthetic spec file")->required();
    synth->add_option("--seed", synth_seed, "generation seed (default 0)");
    synth->add_option("--out", synth_out, "output dataset CSV")->required();

    auto* inject = app.add_subcommand("inject", "rewrite labels through a bias pathway");
    InjectArgs ia;
    inject->add_option("--method", ia.method, "parity-flip, group-noise, or worst-labeler")
        ->required()
        ->check(CLI::IsMember({"parity-flip", "group-noise", "worst-labeler"}));
    inject->add_option("data", ia.data, "input dataset CSV")->required();
    inject->add_option("--out", ia.out, "output dataset CSV")->required();
    inject->add_option("--seed", ia.seed, "rng seed (default 0)");
    inject->add_option("--low", ia.low, "low-rate group id (parity-flip, default 0)");
    inject->add_option("--ref", ia.ref, "reference group id (parity-flip, default 1)");
    inject->add_option("--flip", ia.flips, "group:gold:rate (group-noise, repeatable)");
    inject->add_option("--annotations", ia.annotations, "annotation CSV (worst-labeler)");
    inject->add_option("--g0", ia.g0, "group id in the g0 role (worst-labeler, default 0)");
    inject->add_option("--g1", ia.g1, "group id in the g1 role (worst-labeler, default 1)");
    inject->add_option("--measure", ia.measure, "abs_accuracy_gap or abs_fpr_gap");

    auto* audit = app.add_subcommand("audit", "report observed/gold agreement per group");
    std::string audit_data, audit_annotations, audit_measure = "abs_accuracy_gap";
    int audit_g0 = 0, audit_g1 = 1;
    double audit_tolerance = 0.0;
    audit->add_option("data", audit_data, "dataset CSV")->required();
    audit->add_option("--g0", audit_g0, "group id in the g0 role (default 0)");
    audit->add_option("--g1", audit_g1, "group id in the g1 role (default 1)");
    audit->add_option("--tolerance", audit_tolerance, "bias flag tolerance (default 0)");
    audit->add_option("--annotations", audit_annotations, "annotation CSV for labeler stats");
    audit->add_option("--measure", audit_measure, "abs_accuracy_gap or abs_fpr_gap");

    auto* run = app.add_subcommand("run", "execute an experiment config");
    std::string run_config, run_out_dir;
    int run_parallel = 0;
    run->add_option("config", run_config, "experiment config file")->required();
    auto* out_dir_opt = run->add_option("--out-dir", run_out_dir, "artifact directory");
    auto* parallel_opt =
        run->add_option("--parallel", run_parallel, "worker count for repetitions");

    auto* compare = app.add_subcommand("compare", "compare finished runs on one metric");
    std::vector<std::string> compare_dirs;
    std::string compare_metric, compare_out_csv;
    compare->add_option("dirs", compare_dirs, "run output directories")->required();
    compare->add_option("--metric", compare_metric, "metric to compare on")->required();
    compare->add_option("--out-csv", compare_out_csv, "also write the table as CSV here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) return cmd_synth(synth_spec, synth_seed, synth_out);
        if (inject->parsed()) return cmd_inject(ia);
        if (audit->parsed())
            return cmd_audit(audit_data, audit_g0, audit_g1, audit_tolerance, audit_annotations,
                             audit_measure);
        if (run->parsed()) {
            if (out_dir_opt->count() == 0) {
                const char* env = std::getenv("ALBI_OUT_DIR");
                if (!env || !*env)
                    throw albi::ConfigInvalid("--out-dir (or ALBI_OUT_DIR) is required");
                run_out_dir = env;
            }
            if (parallel_opt->count() == 0) {
                const char* env = std::getenv("ALBI_PARALLEL");
                run_parallel =
                    env && *env
                        ? static_cast<int>(albi::ingest::detail::parse_int(env, "ALBI_PARALLEL"))
                        : 1;
            }
            return cmd_run(run_config, run_out_dir, run_parallel);
        }
        if (compare->parsed()) return cmd_compare(compare_dirs, compare_metric, compare_out_csv);
    } catch (const albi::Error& e) {
        std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
        return std::string(e.kind()) == "Error" ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
