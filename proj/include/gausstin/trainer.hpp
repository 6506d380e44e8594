#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "gausstin/conditioning.hpp"
#include "gausstin/errors.hpp"
#include "gausstin/gmm.hpp"
#include "gausstin/learner.hpp"
#include "gausstin/metrics.hpp"
#include "gausstin/replay.hpp"
#include "gausstin/rng.hpp"
#include "gausstin/stream.hpp"

namespace gausstin {

enum class Strategy { SeqFinetune, GaussTin, GaussTinNoPrompt, GaussTinNoGMM, Joint };

inline constexpr std::array<Strategy, 5> kAllStrategies = {
    Strategy::SeqFinetune, Strategy::GaussTin, Strategy::GaussTinNoPrompt,
    Strategy::GaussTinNoGMM, Strategy::Joint};

inline std::string_view strategy_name(Strategy s) {
    switch (s) {
        case Strategy::SeqFinetune: return "seq-finetune";
        case Strategy::GaussTin: return "gauss-tin";
        case Strategy::GaussTinNoPrompt: return "gauss-tin-no-prompt";
        case Strategy::GaussTinNoGMM: return "gauss-tin-no-gmm";
        case Strategy::Joint: return "joint";
    }
    return "gauss-tin";
}

inline Strategy strategy_from_name(std::string_view name) {
    for (Strategy s : kAllStrategies)
        if (strategy_name(s) == name) return s;
    throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

struct ExperimentConfig {
    std::size_t k = 1;
    FitConfig gmm;                    // per-task fit seeds are derived from the master seed
    std::size_t buffer_capacity = 20; // valid range 10..50
    std::size_t m_per_class = 0;      // 0 derives ceil(4 * capacity / classes in task)
    double alpha = 0.5;
    TrainConfig train;
    Strategy strategy = Strategy::GaussTin;
    std::uint64_t seed = 0;
    std::size_t repetitions = 1;
    std::size_t p_dim = 8;
    std::size_t held_out_tasks = 0;  // post-prefix tasks kept as eval-only columns
    bool pseudo_labels = false;      // label unlabeled stages with current-model predictions

    bool conditioned() const { return strategy != Strategy::GaussTinNoPrompt; }
    bool uses_replay() const {
        return strategy == Strategy::GaussTin || strategy == Strategy::GaussTinNoPrompt ||
               strategy == Strategy::GaussTinNoGMM;
    }
    double selection_alpha() const {
        return strategy == Strategy::GaussTinNoPrompt ? 1.0 : alpha;
    }
};

inline void validate_config(const ExperimentConfig& cfg, const TaskStream& stream) {
    if (stream.tasks.empty()) throw ConfigError("experiment: stream has no tasks");
    if (cfg.k < 1 || cfg.k > stream.tasks.size())
        throw KOutOfRange("experiment: k = " + std::to_string(cfg.k) + " outside [1, " +
                          std::to_string(stream.tasks.size()) + "]");
    if (cfg.buffer_capacity < 10 || cfg.buffer_capacity > 50)
        throw ConfigError("experiment: buffer capacity outside [10, 50]");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 1.0)) throw ConfigError("experiment: alpha outside [0, 1]");
    if (cfg.train.epochs < 1) throw ConfigError("experiment: epochs must be >= 1");
    if (!(cfg.train.learning_rate > 0.0)) throw ConfigError("experiment: learning_rate must be > 0");
    if (cfg.p_dim < 1) throw ConfigError("experiment: p_dim must be >= 1");
    if (cfg.repetitions < 1) throw ConfigError("experiment: repetitions must be >= 1");
    if (cfg.held_out_tasks >= stream.tasks.size() - cfg.k + 1 && cfg.held_out_tasks > 0)
        throw ConfigError("experiment: held_out_tasks leaves no stages");
}

struct StageSnapshot {
    std::size_t stage = 0;  // 0 is initialization
    std::string trained_task;
    std::vector<Exemplar> contents;  // full buffer after the stage's update
};

struct InitResult {
    SoftmaxModel model;
    ReplayBuffer buffer;
};

struct RunResult {
    AccuracyMatrix matrix;
    std::vector<StageSnapshot> snapshots;
    SoftmaxModel model;
    std::vector<std::string> task_order;  // column order of the matrix
};

namespace detail {

// Resolved per-run state: reordered tasks, descriptors, and conditioned eval
// views shared by every stage.
struct RunContext {
    const ExperimentConfig* cfg = nullptr;
    std::vector<const TaskDataset*> tasks;  // held-out tasks moved to the back
    std::size_t trained_count = 0;          // tasks that receive a training stage
    std::vector<TaskDescriptor> descriptors;
    std::vector<std::vector<std::vector<double>>> eval_features;
    std::vector<std::vector<int>> eval_labels;
    std::size_t feature_dim = 0;
    int classes = 0;
};

inline RunContext make_context(const TaskStream& stream, const ExperimentConfig& cfg) {
    validate_config(cfg, stream);
    RunContext ctx;
    ctx.cfg = &cfg;

    const std::size_t T = stream.tasks.size();
    std::vector<std::size_t> order(T);
    for (std::size_t t = 0; t < T; ++t) order[t] = t;
    if (cfg.held_out_tasks > 0) {
        std::vector<std::size_t> post;
        for (std::size_t t = cfg.k; t < T; ++t) post.push_back(t);
        std::mt19937_64 rng(mix_seed(cfg.seed, seed_tag::held_out));
        std::shuffle(post.begin(), post.end(), rng);
        std::set<std::size_t> held(post.begin(), post.begin() + cfg.held_out_tasks);
        order.clear();
        for (std::size_t t = 0; t < T; ++t)
            if (!held.count(t)) order.push_back(t);
        for (std::size_t t = 0; t < T; ++t)
            if (held.count(t)) order.push_back(t);
    }
    for (std::size_t t : order) ctx.tasks.push_back(&stream.tasks[t]);
    ctx.trained_count = T - cfg.held_out_tasks;

    ctx.feature_dim = stream.dim + (cfg.conditioned() ? cfg.p_dim : 0);
    ctx.classes = stream.class_count;

    const std::uint64_t desc_seed = mix_seed(cfg.seed, seed_tag::descriptor);
    for (const TaskDataset* task : ctx.tasks) {
        ctx.descriptors.push_back(make_descriptor(task->task_id, cfg.p_dim, desc_seed));
        std::vector<std::vector<double>> feats;
        std::vector<int> labels;
        for (const Sample& s : task->eval) {
            feats.push_back(cfg.conditioned() ? condition(s.features, ctx.descriptors.back())
                                              : s.features);
            labels.push_back(s.label);
        }
        ctx.eval_features.push_back(std::move(feats));
        ctx.eval_labels.push_back(std::move(labels));
    }
    return ctx;
}

inline std::vector<double> evaluate_all(const RunContext& ctx, const SoftmaxModel& model) {
    std::vector<double> row;
    row.reserve(ctx.tasks.size());
    for (std::size_t t = 0; t < ctx.tasks.size(); ++t)
        row.push_back(accuracy(model, ctx.eval_features[t], ctx.eval_labels[t]));
    return row;
}

// Task train split as it enters the pipeline: raw features, labels replaced
// by current-model predictions in pseudo-label mode.
inline TaskDataset stage_view(const RunContext& ctx, std::size_t t, const SoftmaxModel* model) {
    const ExperimentConfig& cfg = *ctx.cfg;
    TaskDataset view = *ctx.tasks[t];
    if (cfg.pseudo_labels && model)
        for (Sample& s : view.train)
            s.label = predict(*model, cfg.conditioned() ? condition(s.features, ctx.descriptors[t])
                                                        : std::vector<double>(s.features));
    return view;
}

// The same view with features conditioned per the run mode.
inline TaskDataset conditioned_view(const RunContext& ctx, std::size_t t, TaskDataset view) {
    if (ctx.cfg->conditioned())
        for (Sample& s : view.train) s.features = condition(s.features, ctx.descriptors[t]);
    return view;
}

inline TrainingSet to_training_set(const TaskDataset& view) {
    TrainingSet set;
    for (const Sample& s : view.train) {
        set.features.push_back(s.features);
        set.labels.push_back(s.label);
    }
    return set;
}

inline std::size_t class_count_of(const TaskDataset& task) {
    std::set<int> labels;
    for (const Sample& s : task.train) labels.insert(s.label);
    return labels.size();
}

// Generate (or reservoir-pick), select, and store exemplars for one task.
// view carries raw features; conditioning happens inside the replay ops.
inline void refresh_buffer(const RunContext& ctx, const TaskDataset& view, std::size_t t,
                           ReplayBuffer& buffer) {
    const ExperimentConfig& cfg = *ctx.cfg;
    const TaskDescriptor* desc = cfg.conditioned() ? &ctx.descriptors[t] : nullptr;
    const std::size_t budget = cfg.buffer_capacity;
    std::vector<Exemplar> selected;
    if (cfg.strategy == Strategy::GaussTinNoGMM) {
        const std::vector<Exemplar> pool = reservoir_candidates(
            view, desc, 4 * budget, mix_seed(cfg.seed, seed_tag::reservoir, t));
        selected = select_exemplars(pool, nullptr, budget, cfg.selection_alpha());
    } else {
        FitConfig fit_cfg = cfg.gmm;
        fit_cfg.seed = mix_seed(cfg.seed, seed_tag::generator_fit, t);
        const TaskGenerator gen = fit_task_generator(view, desc, fit_cfg);
        const std::size_t classes = class_count_of(view);
        const std::size_t m = cfg.m_per_class > 0
                                  ? cfg.m_per_class
                                  : std::max<std::size_t>(1, (4 * budget + classes - 1) / classes);
        const std::vector<Exemplar> pool =
            generate_exemplars(gen, m, mix_seed(cfg.seed, seed_tag::generator_sample, t));
        selected = select_exemplars(pool, &gen, budget, cfg.selection_alpha());
    }
    buffer.update(view.task_id, std::move(selected));
}

inline InitResult run_initialization_impl(const RunContext& ctx) {
    const ExperimentConfig& cfg = *ctx.cfg;
    SoftmaxModel model = make_model(ctx.feature_dim, ctx.classes);

    TrainingSet prefix;
    for (std::size_t t = 0; t < cfg.k; ++t) {
        const TaskDataset view = conditioned_view(ctx, t, stage_view(ctx, t, nullptr));
        for (const Sample& s : view.train) {
            prefix.features.push_back(s.features);
            prefix.labels.push_back(s.label);
        }
    }
    TrainConfig train_cfg = cfg.train;
    train_cfg.seed = mix_seed(cfg.seed, seed_tag::init_train);
    model = train(std::move(model), prefix, train_cfg);

    ReplayBuffer buffer(cfg.buffer_capacity);
    if (cfg.uses_replay())
        for (std::size_t t = 0; t < cfg.k; ++t)
            refresh_buffer(ctx, stage_view(ctx, t, nullptr), t, buffer);
    return InitResult{std::move(model), std::move(buffer)};
}

}  // namespace detail

/// Fig-1 left box: train on the labeled prefix D_l and, for replay
/// strategies, fill the buffer for every prefix task.
inline InitResult run_initialization(const TaskStream& stream, const ExperimentConfig& cfg) {
    const detail::RunContext ctx = detail::make_context(stream, cfg);
    return detail::run_initialization_impl(ctx);
}

/// Full protocol: initialization, then per-stage train/evaluate/refresh in
/// stream order. Joint training ignores staging and fits one model on every
/// trainable task at the staged strategies' total epoch budget.
inline RunResult run_experiment(const TaskStream& stream, const ExperimentConfig& cfg) {
    const detail::RunContext ctx = detail::make_context(stream, cfg);
    const std::size_t T = ctx.tasks.size();

    RunResult result;
    for (const TaskDataset* task : ctx.tasks) result.task_order.push_back(task->task_id);
    result.matrix.tasks = T;
    result.matrix.trained_tasks = ctx.trained_count;

    if (cfg.strategy == Strategy::Joint) {
        SoftmaxModel model = make_model(ctx.feature_dim, ctx.classes);
        TrainingSet all;
        for (std::size_t t = 0; t < ctx.trained_count; ++t) {
            const TaskDataset view =
                detail::conditioned_view(ctx, t, detail::stage_view(ctx, t, nullptr));
            for (const Sample& s : view.train) {
                all.features.push_back(s.features);
                all.labels.push_back(s.label);
            }
        }
        TrainConfig train_cfg = cfg.train;
        train_cfg.epochs = cfg.train.epochs * static_cast<int>(ctx.trained_count);
        train_cfg.seed = mix_seed(cfg.seed, seed_tag::init_train);
        model = train(std::move(model), all, train_cfg);

        result.matrix.first_k = ctx.trained_count;
        result.matrix.rows.push_back(detail::evaluate_all(ctx, model));
        result.model = std::move(model);
        return result;
    }

    result.matrix.first_k = cfg.k;
    InitResult init = detail::run_initialization_impl(ctx);
    SoftmaxModel model = std::move(init.model);
    ReplayBuffer buffer = std::move(init.buffer);
    result.matrix.rows.push_back(detail::evaluate_all(ctx, model));

    if (cfg.uses_replay()) {
        StageSnapshot snap;
        snap.stage = 0;
        snap.trained_task = ctx.tasks[cfg.k - 1]->task_id;
        for (const auto& [id, entries] : buffer.slots())
            snap.contents.insert(snap.contents.end(), entries.begin(), entries.end());
        result.snapshots.push_back(std::move(snap));
    }

    for (std::size_t t = cfg.k; t < ctx.trained_count; ++t) {
        const std::size_t stage = t - cfg.k + 1;
        const TaskDataset view = detail::stage_view(ctx, t, &model);
        const TaskDataset cond = detail::conditioned_view(ctx, t, view);

        TrainingSet set = cfg.uses_replay()
                              ? merge_training_set(buffer, cond,
                                                   mix_seed(cfg.seed, seed_tag::merge_shuffle, stage))
                              : detail::to_training_set(cond);
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = mix_seed(cfg.seed, seed_tag::stage_train, stage);
        model = train(std::move(model), set, train_cfg);

        result.matrix.rows.push_back(detail::evaluate_all(ctx, model));

        if (cfg.uses_replay()) {
            detail::refresh_buffer(ctx, view, t, buffer);
            StageSnapshot snap;
            snap.stage = stage;
            snap.trained_task = view.task_id;
            for (const auto& [id, entries] : buffer.slots())
                snap.contents.insert(snap.contents.end(), entries.begin(), entries.end());
            result.snapshots.push_back(std::move(snap));
        }
    }
    result.model = std::move(model);
    return result;
}

}  // namespace gausstin
