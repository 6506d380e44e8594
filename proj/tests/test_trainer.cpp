#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "gausstin/trainer.hpp"

using namespace gausstin;

namespace {

TaskStream conflicting_stream(std::size_t tasks, std::uint64_t seed, std::size_t k = 1) {
    SynthSpec spec;
    spec.tasks = tasks;
    spec.classes_per_task = 2;
    spec.dim = 6;
    spec.train_per_class = 20;
    spec.eval_per_class = 10;
    spec.separation = 8.0;
    spec.noise = 1.0;
    spec.conflicting = true;
    spec.seed = seed;
    spec.labeled_prefix_k = k;
    return synth_stream(spec);
}

ExperimentConfig base_config(Strategy strategy, std::size_t k, std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.strategy = strategy;
    cfg.k = k;
    cfg.seed = seed;
    cfg.gmm.n_components = 3;
    cfg.buffer_capacity = 10;
    cfg.train.epochs = 3;
    cfg.train.learning_rate = 0.1;
    return cfg;
}

}  // namespace

TEST_CASE("initialization trains on exactly the prefix", "[trainer]") {
    const TaskStream stream = conflicting_stream(3, 5);
    const ExperimentConfig cfg = base_config(Strategy::GaussTin, 1, 11);
    const InitResult init = run_initialization(stream, cfg);

    // rebuild the same prefix training job by hand; identical parameters mean
    // nothing but tasks[0] entered the model
    const TaskDescriptor desc =
        make_descriptor(stream.tasks[0].task_id, cfg.p_dim, mix_seed(cfg.seed, seed_tag::descriptor));
    TrainingSet prefix;
    for (const Sample& s : stream.tasks[0].train) {
        prefix.features.push_back(condition(s.features, desc));
        prefix.labels.push_back(s.label);
    }
    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = mix_seed(cfg.seed, seed_tag::init_train);
    const SoftmaxModel expected =
        train(make_model(stream.dim + cfg.p_dim, stream.class_count), prefix, train_cfg);
    REQUIRE(init.model.weights == expected.weights);
    REQUIRE(init.model.bias == expected.bias);
}

TEST_CASE("replay initialization fills one bounded slot per prefix task", "[trainer]") {
    const TaskStream stream = conflicting_stream(6, 7, 5);
    ExperimentConfig cfg = base_config(Strategy::GaussTin, 5, 3);
    cfg.buffer_capacity = 20;
    const InitResult init = run_initialization(stream, cfg);
    REQUIRE(init.buffer.task_count() == 5);
    for (const auto& [task_id, entries] : init.buffer.slots()) {
        REQUIRE(entries.size() <= 20);
        REQUIRE(!entries.empty());
    }
}

TEST_CASE("sequential fine-tuning keeps the buffer empty", "[trainer]") {
    const TaskStream stream = conflicting_stream(3, 9);
    const InitResult init = run_initialization(stream, base_config(Strategy::SeqFinetune, 2, 3));
    REQUIRE(init.buffer.task_count() == 0);

    const InitResult joint = run_initialization(stream, base_config(Strategy::Joint, 2, 3));
    REQUIRE(joint.buffer.task_count() == 0);
}

TEST_CASE("joint training produces a single-row matrix", "[trainer]") {
    const TaskStream stream = conflicting_stream(4, 2);
    const RunResult result = run_experiment(stream, base_config(Strategy::Joint, 1, 5));
    REQUIRE(result.matrix.rows.size() == 1);
    REQUIRE(result.matrix.rows[0].size() == 4);
    REQUIRE(result.matrix.first_k == 4);
}

TEST_CASE("staged runs record one row per model", "[trainer]") {
    const TaskStream stream = conflicting_stream(5, 21);
    for (std::size_t k : {1, 3, 5}) {
        const RunResult result = run_experiment(stream, base_config(Strategy::GaussTin, k, 1));
        REQUIRE(result.matrix.rows.size() == stream.tasks.size() - k + 1);
        REQUIRE(result.matrix.first_k == k);
        REQUIRE(result.matrix.tasks == 5);
        for (const auto& row : result.matrix.rows) {
            REQUIRE(row.size() == 5);
            for (double v : row) {
                REQUIRE(v >= 0.0);
                REQUIRE(v <= 1.0);
            }
        }
    }
}

TEST_CASE("sequential fine-tuning forgets on conflicting tasks", "[trainer]") {
    // oracle: tasks whose raw-space boundaries oppose each other force
    // Acc(M_2, D_1) < Acc(M_1, D_1)
    int forgot = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TaskStream stream = conflicting_stream(2, seed);
        const RunResult r = run_experiment(stream, base_config(Strategy::SeqFinetune, 1, seed));
        if (r.matrix.acc(2, 1) < r.matrix.acc(1, 1)) ++forgot;
    }
    REQUIRE(forgot == 5);
}

TEST_CASE("replay beats sequential fine-tuning on backward transfer", "[trainer]") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TaskStream stream = conflicting_stream(4, seed);
        const RunResult seq = run_experiment(stream, base_config(Strategy::SeqFinetune, 1, seed));
        const RunResult gt = run_experiment(stream, base_config(Strategy::GaussTin, 1, seed));
        REQUIRE(bwt(gt.matrix, 4) >= bwt(seq.matrix, 4));
    }
}

TEST_CASE("rerunning a config is bit-identical", "[trainer]") {
    const TaskStream stream = conflicting_stream(4, 31);
    for (Strategy strategy : kAllStrategies) {
        const ExperimentConfig cfg = base_config(strategy, 2, 17);
        const RunResult a = run_experiment(stream, cfg);
        const RunResult b = run_experiment(stream, cfg);
        REQUIRE(a.matrix.rows == b.matrix.rows);
    }
}

TEST_CASE("replay never leaks exemplars from unseen tasks", "[trainer]") {
    const TaskStream stream = conflicting_stream(6, 13);
    for (Strategy strategy :
         {Strategy::GaussTin, Strategy::GaussTinNoPrompt, Strategy::GaussTinNoGMM}) {
        const RunResult result = run_experiment(stream, base_config(strategy, 2, 23));
        std::set<std::string> seen;
        for (std::size_t t = 0; t < 2; ++t) seen.insert(stream.tasks[t].task_id);
        std::size_t next_stage_task = 2;
        for (const StageSnapshot& snap : result.snapshots) {
            if (snap.stage > 0) seen.insert(stream.tasks[next_stage_task++].task_id);
            for (const Exemplar& e : snap.contents) REQUIRE(seen.count(e.source_task) == 1);
        }
    }
}

TEST_CASE("no-prompt mode keeps raw dimensionality end to end", "[trainer]") {
    const TaskStream stream = conflicting_stream(3, 3);
    const RunResult result =
        run_experiment(stream, base_config(Strategy::GaussTinNoPrompt, 1, 2));
    REQUIRE(result.model.input_dim == stream.dim);
    for (const StageSnapshot& snap : result.snapshots)
        for (const Exemplar& e : snap.contents) REQUIRE(e.features.size() == stream.dim);
}

TEST_CASE("no-gmm mode replays real reservoir rows", "[trainer]") {
    const TaskStream stream = conflicting_stream(3, 19);
    const RunResult result = run_experiment(stream, base_config(Strategy::GaussTinNoGMM, 1, 4));
    REQUIRE(!result.snapshots.empty());
    for (const StageSnapshot& snap : result.snapshots)
        for (const Exemplar& e : snap.contents) REQUIRE(e.method == ExemplarMethod::ReservoirReal);
}

TEST_CASE("held-out tasks become eval-only columns", "[trainer]") {
    const TaskStream stream = conflicting_stream(6, 29);
    ExperimentConfig cfg = base_config(Strategy::GaussTin, 1, 7);
    cfg.held_out_tasks = 2;
    const RunResult result = run_experiment(stream, cfg);
    REQUIRE(result.matrix.tasks == 6);
    REQUIRE(result.matrix.trained_tasks == 4);
    REQUIRE(result.matrix.rows.size() == 4);  // init + 3 stages
    REQUIRE(result.task_order.size() == 6);
}

TEST_CASE("pseudo-label mode runs the full pipeline", "[trainer]") {
    const TaskStream stream = conflicting_stream(3, 37);
    ExperimentConfig cfg = base_config(Strategy::GaussTin, 1, 8);
    cfg.pseudo_labels = true;
    const RunResult result = run_experiment(stream, cfg);
    REQUIRE(result.matrix.rows.size() == 3);
}

TEST_CASE("config validation rejects out-of-range settings", "[trainer]") {
    const TaskStream stream = conflicting_stream(3, 41);
    ExperimentConfig cfg = base_config(Strategy::GaussTin, 1, 1);
    cfg.buffer_capacity = 9;
    REQUIRE_THROWS_AS(run_experiment(stream, cfg), ConfigError);
    cfg = base_config(Strategy::GaussTin, 7, 1);
    REQUIRE_THROWS_AS(run_experiment(stream, cfg), KOutOfRange);
    cfg = base_config(Strategy::GaussTin, 1, 1);
    cfg.alpha = 1.5;
    REQUIRE_THROWS_AS(run_experiment(stream, cfg), ConfigError);
}
