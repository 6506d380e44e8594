// Command-line harness: synthesize streams, execute continual-learning runs,
// sweep the k x strategy grid, and render transfer tables.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "gausstin/gausstin.hpp"

namespace fs = std::filesystem;
using namespace gausstin;

namespace {

struct Options {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string strategy;
    int k = 0;
    unsigned jobs = 1;
};

std::string resolve_out_dir(const Options& opt) {
    if (!opt.out_dir.empty()) return opt.out_dir;
    if (const char* env = std::getenv("GAUSSTIN_OUT"); env && *env) return env;
    return "./out";
}

FullConfig resolve_config(const Options& opt) {
    FullConfig cfg = opt.config_path.empty() ? FullConfig{} : load_config(opt.config_path);
    if (opt.seed_set) cfg.experiment.seed = opt.seed;
    if (!opt.strategy.empty()) cfg.experiment.strategy = strategy_from_name(opt.strategy);
    if (opt.k > 0) cfg.experiment.k = static_cast<std::size_t>(opt.k);
    return cfg;
}

struct RunArtifacts {
    RunRecord record;
    std::vector<StageSnapshot> snapshots;
    std::vector<std::string> task_order;
    std::string model_json;
    double wall_clock_s = 0.0;
};

RunArtifacts execute_one(const TaskStream& stream, ExperimentConfig cfg) {
    const auto start = std::chrono::steady_clock::now();
    const RunResult result = run_experiment(stream, cfg);
    const auto stop = std::chrono::steady_clock::now();

    RunArtifacts art;
    art.record.strategy = std::string(strategy_name(cfg.strategy));
    art.record.k = cfg.k;
    art.record.seed = cfg.seed;
    art.record.matrix = result.matrix;
    art.snapshots = result.snapshots;
    art.task_order = result.task_order;
    art.model_json = model_to_json(result.model);
    art.wall_clock_s = std::chrono::duration<double>(stop - start).count();
    return art;
}

std::string run_file_stem(const RunRecord& r) {
    return r.strategy + "_k" + std::to_string(r.k) + "_s" + std::to_string(r.seed);
}

void write_run_files(const fs::path& out, const RunArtifacts& art) {
    fs::create_directories(out / "records");
    fs::create_directories(out / "buffers");
    fs::create_directories(out / "models");
    const std::string stem = run_file_stem(art.record);
    detail::write_file((out / "records" / (stem + ".json")).string(),
                       run_record_to_json(art.record, art.task_order) + "\n");
    std::string lines;
    for (const StageSnapshot& snap : art.snapshots)
        for (const Exemplar& e : snap.contents) lines += exemplar_to_json(e, snap.stage) + "\n";
    detail::write_file((out / "buffers" / (stem + ".jsonl")).string(), lines);
    detail::write_file((out / "models" / (stem + ".json")).string(), art.model_json + "\n");
}

void write_manifest(const fs::path& out, const FullConfig& cfg,
                    const std::vector<RunArtifacts>& runs) {
    std::string body = "{\"version\":";
    jsonw::string(body, kVersion);
    body += ",\"config_hash\":";
    char hash[20];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(canonical_config_string(cfg))));
    jsonw::string(body, hash);
    body += ",\"seeds\":[";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i) body += ',';
        body += std::to_string(runs[i].record.seed);
    }
    body += "],\"artifacts\":[";
    bool first = true;
    for (const char* name : {"results.csv", "report.md"}) {
        if (!first) body += ',';
        first = false;
        jsonw::string(body, (out / name).string());
    }
    for (const RunArtifacts& art : runs) {
        body += ',';
        jsonw::string(body, (out / "records" / (run_file_stem(art.record) + ".json")).string());
        body += ',';
        jsonw::string(body, (out / "buffers" / (run_file_stem(art.record) + ".jsonl")).string());
        body += ',';
        jsonw::string(body, (out / "models" / (run_file_stem(art.record) + ".json")).string());
    }
    body += "],\"runs\":[";
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (i) body += ',';
        body += "{\"strategy\":";
        jsonw::string(body, runs[i].record.strategy);
        body += ",\"k\":" + std::to_string(runs[i].record.k);
        body += ",\"seed\":" + std::to_string(runs[i].record.seed);
        body += ",\"wall_clock_s\":";
        jsonw::number(body, runs[i].wall_clock_s);
        body += '}';
    }
    body += "]}\n";
    detail::write_file((out / "manifest.json").string(), body);
}

// Execute a list of (strategy, k, seed) combinations, optionally across
// worker threads; results keep the submission order.
std::vector<RunArtifacts> execute_all(const TaskStream& stream,
                                      const std::vector<ExperimentConfig>& runs, unsigned jobs) {
    std::vector<RunArtifacts> results(runs.size());
    if (jobs <= 1 || runs.size() <= 1) {
        for (std::size_t i = 0; i < runs.size(); ++i) results[i] = execute_one(stream, runs[i]);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    const unsigned n_workers = std::min<unsigned>(jobs, static_cast<unsigned>(runs.size()));
    std::vector<std::exception_ptr> errors(n_workers);
    for (unsigned w = 0; w < n_workers; ++w)
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = next.fetch_add(1); i < runs.size(); i = next.fetch_add(1))
                    results[i] = execute_one(stream, runs[i]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (std::thread& t : workers) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

void finish_outputs(const fs::path& out, const FullConfig& cfg,
                    const std::vector<RunArtifacts>& runs) {
    fs::create_directories(out);
    std::vector<RunRecord> records;
    for (const RunArtifacts& art : runs) records.push_back(art.record);
    const Summary summary = summarize(records);
    render_tables(summary, out.string());
    for (const RunArtifacts& art : runs) write_run_files(out, art);
    write_manifest(out, cfg, runs);
}

std::vector<ExperimentConfig> repetition_configs(const ExperimentConfig& base) {
    std::vector<ExperimentConfig> runs;
    for (std::size_t r = 0; r < base.repetitions; ++r) {
        ExperimentConfig cfg = base;
        cfg.seed = mix_seed(base.seed, seed_tag::repetition, r);
        runs.push_back(cfg);
    }
    return runs;
}

int cmd_synth(const Options& opt) {
    const FullConfig cfg = resolve_config(opt);
    if (cfg.stream.path.empty())
        throw ConfigError("synth: set stream.path in the config to name the output file");
    SynthSpec spec = cfg.stream.synth;
    spec.labeled_prefix_k = cfg.experiment.k;
    const TaskStream stream = synth_stream(spec);
    write_stream(stream, cfg.stream.path);
    std::cout << "wrote " << cfg.stream.path << " (" << stream.tasks.size() << " tasks, dim "
              << stream.dim << ", " << stream.class_count << " classes)\n";
    return 0;
}

int cmd_run(const Options& opt) {
    const FullConfig cfg = resolve_config(opt);
    const TaskStream stream = resolve_stream(cfg);
    const fs::path out = resolve_out_dir(opt);

    const std::vector<ExperimentConfig> runs = repetition_configs(cfg.experiment);
    const std::vector<RunArtifacts> results = execute_all(stream, runs, opt.jobs);
    finish_outputs(out, cfg, results);

    // descriptor bank export for audit, one file per repetition seed
    fs::create_directories(out);
    for (const ExperimentConfig& run_cfg : runs) {
        if (run_cfg.strategy == Strategy::GaussTinNoPrompt) continue;
        std::vector<TaskDescriptor> bank;
        const std::uint64_t desc_seed = mix_seed(run_cfg.seed, seed_tag::descriptor);
        for (const TaskDataset& task : stream.tasks)
            bank.push_back(make_descriptor(task.task_id, run_cfg.p_dim, desc_seed));
        detail::write_file((out / ("descriptors_s" + std::to_string(run_cfg.seed) + ".json")).string(),
                           descriptors_to_json(bank) + "\n");
    }

    std::cout << "wrote " << (out / "results.csv").string() << "\n";
    return 0;
}

int run_sweep(const Options& opt, const std::vector<Strategy>& strategies) {
    const FullConfig cfg = resolve_config(opt);
    const TaskStream stream = resolve_stream(cfg);
    const fs::path out = resolve_out_dir(opt);

    const std::vector<std::size_t> default_ks = {1, 5, 8, 10};
    std::vector<std::size_t> ks;
    if (opt.k > 0) {
        ks.push_back(static_cast<std::size_t>(opt.k));
    } else {
        for (std::size_t k : default_ks)
            if (k <= stream.tasks.size()) ks.push_back(k);
    }
    if (ks.empty()) throw ConfigError("grid: stream too small for any default k");

    std::vector<ExperimentConfig> runs;
    for (Strategy strategy : strategies) {
        const std::vector<std::size_t> strategy_ks =
            strategy == Strategy::Joint ? std::vector<std::size_t>{ks.front()} : ks;
        for (std::size_t k : strategy_ks) {
            ExperimentConfig base = cfg.experiment;
            base.strategy = strategy;
            base.k = k;
            for (const ExperimentConfig& rep : repetition_configs(base)) runs.push_back(rep);
        }
    }
    const std::vector<RunArtifacts> results = execute_all(stream, runs, opt.jobs);
    finish_outputs(out, cfg, results);
    std::cout << "wrote " << (out / "results.csv").string() << " (" << runs.size() << " runs)\n";
    return 0;
}

int cmd_grid(const Options& opt) {
    if (!opt.strategy.empty())
        return run_sweep(opt, {strategy_from_name(opt.strategy)});
    return run_sweep(opt, {Strategy::SeqFinetune, Strategy::GaussTin, Strategy::Joint});
}

int cmd_ablate(const Options& opt) {
    return run_sweep(
        opt, {Strategy::GaussTin, Strategy::GaussTinNoPrompt, Strategy::GaussTinNoGMM});
}

int cmd_report(const Options& opt) {
    const fs::path out = resolve_out_dir(opt);
    const fs::path records_dir = out / "records";
    if (!fs::is_directory(records_dir))
        throw Error("report: no records directory under " + out.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(records_dir))
        if (entry.path().extension() == ".json") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    std::vector<RunRecord> records;
    for (const fs::path& file : files)
        records.push_back(run_record_from_json(detail::read_file(file.string())));
    if (records.empty()) throw EmptySummary("report: no run records found");
    render_tables(summarize(records), out.string());
    std::cout << "wrote " << (out / "results.csv").string() << " from " << records.size()
              << " records\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gauss-Tin continual-learning harness"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config_path, "TOML configuration file");
    app.add_option("--seed", opt.seed, "override experiment seed")->each([&](const std::string&) {
        opt.seed_set = true;
    });
    app.add_option("--jobs", opt.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--out", opt.out_dir, "output directory (overrides GAUSSTIN_OUT)");
    app.add_option("--strategy", opt.strategy, "override strategy by name");
    app.add_option("--k", opt.k, "override labeled prefix size")->check(CLI::PositiveNumber);

    auto* synth = app.add_subcommand("synth", "write a synthetic stream file");
    auto* run = app.add_subcommand("run", "execute one experiment config");
    auto* grid = app.add_subcommand("grid", "sweep k x strategy x seeds");
    auto* report = app.add_subcommand("report", "aggregate saved records and render tables");
    auto* ablate = app.add_subcommand("ablate", "run the with/without prompt and GMM trio");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) return cmd_synth(opt);
        if (run->parsed()) return cmd_run(opt);
        if (grid->parsed()) return cmd_grid(opt);
        if (report->parsed()) return cmd_report(opt);
        if (ablate->parsed()) return cmd_ablate(opt);
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const KOutOfRange& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const InvalidSpec& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
