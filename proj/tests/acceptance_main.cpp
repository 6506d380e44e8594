// Acceptance suite: one checked criterion per section, one pass/fail line
// each. Exits non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gausstin/gausstin.hpp"

namespace fs = std::filesystem;
using namespace gausstin;

namespace {

int g_failures = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << number << ". " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << std::endl;
    if (!ok) ++g_failures;
}

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(4);
    ss << v;
    return ss.str();
}

// ---- shared experiment fixtures ----

// Conflicting-boundary stream: every task reuses the same four blob
// locations under a permuted labeling, so tasks are only separable through
// the descriptor coordinates. Feature scale is kept near the unit descriptor
// scale so neither signal drowns the other.
TaskStream adversarial_stream(std::size_t tasks) {
    SynthSpec spec;
    spec.tasks = tasks;
    spec.classes_per_task = 4;
    spec.dim = 16;
    spec.train_per_class = 15;
    spec.eval_per_class = 20;
    spec.separation = 10.0;
    spec.noise = 0.025;
    spec.conflicting = true;
    spec.seed = 2024;
    return synth_stream(spec);
}

// alpha = 0 keeps selection identical (pure max-min diversity) across the
// full method and the no-GMM ablation, so the comparison isolates the
// generative path itself.
ExperimentConfig experiment_config(Strategy strategy, std::size_t k, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.strategy = strategy;
    cfg.k = k;
    cfg.seed = seed;
    cfg.buffer_capacity = 20;
    cfg.alpha = 0.0;
    cfg.train.epochs = 3;
    cfg.train.learning_rate = 0.5;
    cfg.train.batch_size = 32;
    return cfg;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// ---- criteria ----

void criterion_em_monotonicity() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> d_pick(1, 8);
    std::uniform_int_distribution<std::size_t> n_pick(6, 2000);
    std::uniform_int_distribution<std::size_t> k_pick(1, 6);
    std::uniform_real_distribution<double> value(-6.0, 6.0);

    bool monotone = true;
    std::string detail;
    for (int fit = 0; fit < 100 && monotone; ++fit) {
        const std::size_t d = d_pick(rng);
        const std::size_t n = std::max<std::size_t>(n_pick(rng), 6);
        std::vector<std::vector<double>> data(n, std::vector<double>(d));
        for (auto& row : data)
            for (double& v : row) v = value(rng);
        FitConfig cfg;
        cfg.n_components = std::min(k_pick(rng), n);
        cfg.seed = rng();
        cfg.init_method = fit % 2 ? InitMethod::RandomPoints : InitMethod::KmeansPP;
        const GaussianMixture gmm = fit_em(data, cfg);
        for (std::size_t i = 1; i < gmm.fit_trace.size(); ++i)
            if (gmm.fit_trace[i] < gmm.fit_trace[i - 1] - 1e-9) {
                monotone = false;
                detail = "fit " + std::to_string(fit) + " decreased at iteration " + std::to_string(i);
            }
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed < 30.0;
    report(1, "EM monotone log-likelihood over 100 randomized fits", monotone && in_time,
           detail.empty() ? fmt(elapsed) + " s" : detail);
}

void criterion_parameter_recovery() {
    int successes = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::vector<std::vector<double>> data;
        data.reserve(5000);
        for (int i = 0; i < 5000; ++i) {
            const double base = unit(rng) < 0.5 ? 0.0 : 10.0;
            data.push_back({base + gauss(rng), base + gauss(rng)});
        }
        FitConfig cfg;
        cfg.n_components = 2;
        cfg.seed = seed * 31;
        const GaussianMixture gmm = fit_em(data, cfg);

        const bool swap = gmm.components[0].mean[0] > gmm.components[1].mean[0];
        const GaussianComponent& lo = gmm.components[swap ? 1 : 0];
        const GaussianComponent& hi = gmm.components[swap ? 0 : 1];
        bool ok = true;
        for (int d = 0; d < 2; ++d) {
            ok = ok && std::abs(lo.mean[d] - 0.0) <= 0.1;
            ok = ok && std::abs(hi.mean[d] - 10.0) <= 0.1;
        }
        ok = ok && std::abs(lo.weight - 0.5) <= 0.05 && std::abs(hi.weight - 0.5) <= 0.05;
        if (ok) ++successes;
    }
    report(2, "parameter recovery of a 10-sigma-separated mixture", successes >= 19,
           std::to_string(successes) + "/20 seeds");
}

void criterion_metric_fidelity() {
    std::mt19937_64 rng(202);
    std::uniform_int_distribution<std::size_t> T_pick(2, 10);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    bool ok = true;
    std::string detail;
    for (int rep = 0; rep < 1000 && ok; ++rep) {
        const std::size_t T = T_pick(rng);
        std::uniform_int_distribution<std::size_t> k_pick(1, T);
        AccuracyMatrix R;
        R.tasks = T;
        R.trained_tasks = T;
        R.first_k = k_pick(rng);
        for (std::size_t r = 0; r + R.first_k <= T; ++r) {
            std::vector<double> row(T);
            for (double& v : row) v = unit(rng);
            R.rows.push_back(std::move(row));
        }
        for (std::size_t i = 2; i <= T && ok; ++i) {
            double sum = 0.0;
            for (std::size_t j = 1; j < i; ++j) {
                const std::size_t ri = i <= R.first_k ? 0 : i - R.first_k;
                const std::size_t rj = j <= R.first_k ? 0 : j - R.first_k;
                sum += R.rows[ri][j - 1] - R.rows[rj][j - 1];
            }
            if (std::abs(bwt(R, i) - sum / static_cast<double>(i - 1)) > 1e-12) {
                ok = false;
                detail = "bwt mismatch";
            }
        }
        for (std::size_t i = R.first_k; i < T && ok; ++i) {
            double sum = 0.0;
            const std::size_t ri = i <= R.first_k ? 0 : i - R.first_k;
            for (std::size_t j = i + 1; j <= T; ++j) sum += R.rows[ri][j - 1];
            if (std::abs(fwt(R, i, T) - sum / static_cast<double>(T - i)) > 1e-12) {
                ok = false;
                detail = "fwt mismatch";
            }
        }
    }

    AccuracyMatrix hand;
    hand.tasks = 2;
    hand.trained_tasks = 2;
    hand.first_k = 1;
    hand.rows = {{0.9, 0.4}, {0.8, 0.7}};
    if (std::abs(bwt(hand, 2) - (-0.1)) > 1e-12) {
        ok = false;
        detail = "two-task hand example";
    }
    AccuracyMatrix single;
    single.tasks = 3;
    single.trained_tasks = 3;
    single.first_k = 1;
    single.rows = {{0.5, 0.1, 0.2}, {0.1, 0.5, 0.6}, {0.1, 0.2, 0.5}};
    if (std::abs(fwt(single, 2, 3) - 0.6) > 1e-12) {
        ok = false;
        detail = "single-term fwt example";
    }
    report(3, "bwt/fwt agree with brute-force recomputation on 1000 matrices", ok, detail);
}

struct OrderingResults {
    std::vector<double> seq_bwt, gt_bwt, gt_acc, joint_acc;
    double elapsed_s = 0.0;
};

OrderingResults run_ordering_experiments() {
    const auto start = std::chrono::steady_clock::now();
    OrderingResults out;
    const TaskStream stream = adversarial_stream(10);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const RunResult seq = run_experiment(stream, experiment_config(Strategy::SeqFinetune, 1, seed));
        const RunResult gt = run_experiment(stream, experiment_config(Strategy::GaussTin, 1, seed));
        const RunResult joint = run_experiment(stream, experiment_config(Strategy::Joint, 1, seed));
        out.seq_bwt.push_back(bwt(seq.matrix, 10));
        out.gt_bwt.push_back(bwt(gt.matrix, 10));
        out.gt_acc.push_back(mean_final_accuracy(gt.matrix));
        out.joint_acc.push_back(mean_final_accuracy(joint.matrix));
    }
    out.elapsed_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return out;
}

void criterion_forgetting(const OrderingResults& r) {
    const double seq = mean_of(r.seq_bwt);
    report(4, "sequential fine-tuning forgets on the adversarial stream", seq < 0.0,
           "mean BWT " + fmt(seq * 100.0) + " pp");
}

void criterion_ordering(const OrderingResults& r) {
    const double seq = mean_of(r.seq_bwt);
    const double gt = mean_of(r.gt_bwt);
    const double gt_acc = mean_of(r.gt_acc);
    const double joint_acc = mean_of(r.joint_acc);
    const bool margin = gt >= seq + 0.02;
    const bool positive = gt > 0.0;
    const bool upper_bound = joint_acc >= gt_acc - 0.01;
    const bool in_time = r.elapsed_s < 300.0;
    report(5, "replay ordering: GaussTin over lower bound, under joint",
           margin && positive && upper_bound && in_time,
           "BWT " + fmt(gt * 100.0) + " vs " + fmt(seq * 100.0) + " pp, acc " +
               fmt(gt_acc * 100.0) + " vs joint " + fmt(joint_acc * 100.0) + " pp, " +
               fmt(r.elapsed_s) + " s");
}

void criterion_ablation() {
    const TaskStream stream = [] {
        SynthSpec spec;
        spec.tasks = 12;
        spec.classes_per_task = 4;
        spec.dim = 16;
        spec.train_per_class = 15;
        spec.eval_per_class = 20;
        spec.separation = 10.0;
        spec.noise = 0.025;
        spec.conflicting = true;
        spec.seed = 4096;
        return synth_stream(spec);
    }();

    const std::vector<std::size_t> ks = {1, 5, 8, 10};
    std::map<Strategy, std::map<std::size_t, std::vector<double>>> bwts;
    for (Strategy strategy :
         {Strategy::GaussTin, Strategy::GaussTinNoPrompt, Strategy::GaussTinNoGMM})
        for (std::size_t k : ks)
            for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                const RunResult r = run_experiment(stream, experiment_config(strategy, k, seed));
                bwts[strategy][k].push_back(bwt(r.matrix, 12));
            }

    // mean BWT averaged over the seeds-by-k grid, per strategy
    std::vector<double> full_all, noprompt_all, nogmm_all;
    for (std::size_t k : ks) {
        for (double v : bwts[Strategy::GaussTin][k]) full_all.push_back(v);
        for (double v : bwts[Strategy::GaussTinNoPrompt][k]) noprompt_all.push_back(v);
        for (double v : bwts[Strategy::GaussTinNoGMM][k]) nogmm_all.push_back(v);
    }
    const double grand_full = mean_of(full_all);
    const double grand_noprompt = mean_of(noprompt_all);
    const double grand_nogmm = mean_of(nogmm_all);
    const bool slack_ok =
        grand_full >= grand_noprompt - 0.005 && grand_full >= grand_nogmm - 0.005;
    const bool strict_ok = grand_full > grand_noprompt && grand_full > grand_nogmm;
    report(6, "full method dominates both ablations on mean BWT", slack_ok && strict_ok,
           "grand means " + fmt(grand_full * 100.0) + " vs " + fmt(grand_noprompt * 100.0) +
               " (no prompt) / " + fmt(grand_nogmm * 100.0) + " (no GMM) pp");
}

void criterion_determinism(const std::string& cli) {
    bool ok = false;
    std::string detail;
    if (cli.empty() || !fs::exists(cli)) {
        detail = "CLI binary not found";
    } else {
        const fs::path base = fs::temp_directory_path() / "gausstin_acceptance";
        fs::remove_all(base);
        fs::create_directories(base);
        const fs::path cfg_path = base / "run.toml";
        std::ofstream cfg(cfg_path);
        cfg << "[stream]\ntasks = 4\nclasses_per_task = 2\ndim = 8\ntrain_per_class = 12\n"
               "eval_per_class = 6\nconflicting = true\n\n[experiment]\nk = 1\nseed = 7\n"
               "repetitions = 2\nstrategy = \"gauss-tin\"\n";
        cfg.close();

        const auto run_once = [&](const fs::path& out) {
            const std::string cmd = "\"" + cli + "\" --config \"" + cfg_path.string() +
                                    "\" --out \"" + out.string() + "\" run > /dev/null 2>&1";
            return std::system(cmd.c_str());
        };
        const int rc1 = run_once(base / "a");
        const int rc2 = run_once(base / "b");
        if (rc1 != 0 || rc2 != 0) {
            detail = "CLI run failed";
        } else {
            const auto read = [](const fs::path& p) {
                std::ifstream in(p, std::ios::binary);
                std::ostringstream ss;
                ss << in.rdbuf();
                return ss.str();
            };
            const std::string a = read(base / "a" / "results.csv");
            const std::string b = read(base / "b" / "results.csv");
            ok = !a.empty() && a == b;
            if (!ok) detail = "results.csv differ";
        }
    }
    report(7, "identical config and seed give byte-identical results.csv", ok, detail);
}

void criterion_capacity_and_leakage() {
    bool ok = true;
    std::string detail;

    // random buffer operation sequences
    std::mt19937_64 rng(303);
    for (int round = 0; round < 200 && ok; ++round) {
        std::uniform_int_distribution<std::size_t> cap_pick(10, 50);
        const std::size_t cap = cap_pick(rng);
        ReplayBuffer buf(cap);
        for (int op = 0; op < 30; ++op) {
            std::uniform_int_distribution<std::size_t> task_pick(0, 7);
            std::uniform_int_distribution<std::size_t> count_pick(0, cap + 10);
            const std::size_t count = count_pick(rng);
            Exemplar e;
            e.features = {0.0};
            e.source_task = "t" + std::to_string(task_pick(rng));
            std::vector<Exemplar> entries(count, e);
            try {
                buf.update(e.source_task, entries);
                if (count > cap) {
                    ok = false;
                    detail = "oversized update accepted";
                }
            } catch (const CapacityExceeded&) {
                if (count <= cap) {
                    ok = false;
                    detail = "valid update rejected";
                }
            }
            for (const auto& [id, list] : buf.slots())
                if (list.size() > cap) {
                    ok = false;
                    detail = "capacity exceeded";
                }
        }
    }

    // replay runs never cite a task that has not been trained yet
    const TaskStream stream = adversarial_stream(6);
    for (Strategy strategy :
         {Strategy::GaussTin, Strategy::GaussTinNoPrompt, Strategy::GaussTinNoGMM}) {
        for (std::uint64_t seed = 1; seed <= 3 && ok; ++seed) {
            const ExperimentConfig cfg = experiment_config(strategy, 2, seed);
            const RunResult result = run_experiment(stream, cfg);
            std::set<std::string> seen;
            for (std::size_t t = 0; t < cfg.k; ++t) seen.insert(stream.tasks[t].task_id);
            std::size_t next_task = cfg.k;
            for (const StageSnapshot& snap : result.snapshots) {
                if (snap.stage > 0) seen.insert(stream.tasks[next_task++].task_id);
                for (const Exemplar& e : snap.contents) {
                    if (!seen.count(e.source_task)) {
                        ok = false;
                        detail = "future task replayed: " + e.source_task;
                    }
                    if (e.features.size() !=
                        stream.dim + (cfg.conditioned() ? cfg.p_dim : std::size_t{0})) {
                        ok = false;
                        detail = "exemplar dimensionality drifted";
                    }
                }
            }
        }
    }
    report(8, "buffer capacity and no-future-leakage hold under random sequences", ok, detail);
}

void criterion_gradient_check() {
    std::mt19937_64 rng(404);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double h = 1e-5;
    bool ok = true;
    double worst = 0.0;
    for (int instance = 0; instance < 50; ++instance) {
        std::uniform_int_distribution<int> d_pick(1, 5), c_pick(2, 5), n_pick(1, 6);
        const int dim = d_pick(rng), classes = c_pick(rng), n = n_pick(rng);
        SoftmaxModel m = make_model(dim, classes);
        for (double& w : m.weights) w = 0.7 * gauss(rng);
        for (double& b : m.bias) b = 0.7 * gauss(rng);
        TrainingSet set;
        std::uniform_int_distribution<int> label_pick(0, classes - 1);
        for (int i = 0; i < n; ++i) {
            std::vector<double> x(dim);
            for (double& v : x) v = gauss(rng);
            set.features.push_back(std::move(x));
            set.labels.push_back(label_pick(rng));
        }
        const Gradients g = cross_entropy_gradient(m, set);
        for (std::size_t j = 0; j < m.weights.size() + m.bias.size(); ++j) {
            SoftmaxModel plus = m, minus = m;
            double analytic;
            if (j < m.weights.size()) {
                plus.weights[j] += h;
                minus.weights[j] -= h;
                analytic = g.weights[j];
            } else {
                plus.bias[j - m.weights.size()] += h;
                minus.bias[j - m.weights.size()] -= h;
                analytic = g.bias[j - m.weights.size()];
            }
            const double fd =
                (cross_entropy_loss(plus, set) - cross_entropy_loss(minus, set)) / (2 * h);
            const double rel =
                std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
            worst = std::max(worst, rel);
            if (rel > 1e-4) ok = false;
        }
    }
    report(9, "analytic gradient matches central differences on 50 instances", ok,
           "worst relative error " + fmt(worst));
}

void criterion_grid_shape(const std::string& cli) {
    bool ok = false;
    std::string detail;
    if (cli.empty() || !fs::exists(cli)) {
        detail = "CLI binary not found";
    } else {
        const fs::path base = fs::temp_directory_path() / "gausstin_grid_shape";
        fs::remove_all(base);
        fs::create_directories(base);
        const fs::path cfg_path = base / "grid.toml";
        std::ofstream cfg(cfg_path);
        cfg << "[stream]\ntasks = 12\nclasses_per_task = 2\ndim = 6\ntrain_per_class = 8\n"
               "eval_per_class = 4\nconflicting = true\n\n[experiment]\nseed = 5\nrepetitions = 1\n";
        cfg.close();
        const std::string cmd = "\"" + cli + "\" --config \"" + cfg_path.string() + "\" --out \"" +
                                (base / "out").string() + "\" grid > /dev/null 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            detail = "CLI grid failed";
        } else {
            std::ifstream md(base / "out" / "report.md");
            std::string line, header;
            while (std::getline(md, line))
                if (line.rfind("| Method |", 0) == 0) {
                    header = line;
                    break;
                }
            const std::string expected =
                "| Method | FWT D_k1 | FWT D_k5 | FWT D_k8 | FWT D_k10 "
                "| BWT D_k1 | BWT D_k5 | BWT D_k8 | BWT D_k10 |";
            if (header != expected) {
                detail = "header mismatch";
            } else {
                const Summary summary = parse_results_csv((base / "out" / "results.csv").string());
                ok = true;
                for (const std::string strategy : {"seq-finetune", "gauss-tin"})
                    for (std::size_t k : {1, 5, 8, 10})
                        for (const std::string metric : {"fwt", "bwt"})
                            if (!summary.count({strategy, k, metric})) {
                                ok = false;
                                detail = "missing " + strategy + " k=" + std::to_string(k) + " " + metric;
                            }
                if (ok && !summary.count({"joint", 1, "acc"})) {
                    ok = false;
                    detail = "missing joint accuracy cell";
                }
            }
        }
    }
    report(10, "grid report cells match the four-k by two-metric table layout", ok, detail);
}

}  // namespace

int main(int argc, char** argv) {
    std::string cli;
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--cli" && i + 1 < argc)
            cli = argv[++i];
        else
            only = std::atoi(arg.c_str());
    }

    const auto want = [&](int n) { return only == 0 || only == n; };

    if (want(1)) criterion_em_monotonicity();
    if (want(2)) criterion_parameter_recovery();
    if (want(3)) criterion_metric_fidelity();
    if (want(4) || want(5)) {
        const OrderingResults r = run_ordering_experiments();
        if (want(4)) criterion_forgetting(r);
        if (want(5)) criterion_ordering(r);
    }
    if (want(6)) criterion_ablation();
    if (want(7)) criterion_determinism(cli);
    if (want(8)) criterion_capacity_and_leakage();
    if (want(9)) criterion_gradient_check();
    if (want(10)) criterion_grid_shape(cli);

    if (g_failures) {
        std::cout << g_failures << " criterion(s) failed" << std::endl;
        return 1;
    }
    std::cout << "all acceptance criteria passed" << std::endl;
    return 0;
}
