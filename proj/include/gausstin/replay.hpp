#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "gausstin/conditioning.hpp"
#include "gausstin/errors.hpp"
#include "gausstin/gmm.hpp"
#include "gausstin/rng.hpp"
#include "gausstin/stream.hpp"

namespace gausstin {

enum class ExemplarMethod { GmmSampled, ReservoirReal };

inline std::string_view exemplar_method_name(ExemplarMethod m) {
    return m == ExemplarMethod::GmmSampled ? "gmm-sampled" : "reservoir-real";
}

/// A replay sample standing in for a past task.
struct Exemplar {
    std::vector<double> features;  // conditioned or raw, per pipeline mode
    int label = 0;
    std::string source_task;
    ExemplarMethod method = ExemplarMethod::GmmSampled;
    double score = 0.0;
};

/// Class-conditional mixtures for one task; samples inherit the label of the
/// mixture that generated them.
struct TaskGenerator {
    std::string task_id;
    std::vector<std::pair<int, GaussianMixture>> class_mixtures;  // ascending label
    bool conditioned = false;

    const GaussianMixture* mixture_for(int label) const {
        for (const auto& [l, mix] : class_mixtures)
            if (l == label) return &mix;
        return nullptr;
    }
};

/// Fit one mixture per class present in the task's train split, on conditioned
/// features when a descriptor is given. K per class never exceeds the class
/// sample count, so single-sample classes degrade to one floored component.
inline TaskGenerator fit_task_generator(const TaskDataset& task, const TaskDescriptor* desc,
                                        const FitConfig& cfg) {
    if (task.train.empty())
        throw TooFewSamples("fit_task_generator: task '" + task.task_id + "' has no train samples");

    std::map<int, std::vector<std::vector<double>>> by_class;
    for (const Sample& s : task.train) {
        std::vector<double> f = desc ? condition(s.features, *desc) : s.features;
        by_class[s.label].push_back(std::move(f));
    }

    TaskGenerator gen;
    gen.task_id = task.task_id;
    gen.conditioned = desc != nullptr;
    for (auto& [label, rows] : by_class) {
        FitConfig class_cfg = cfg;
        class_cfg.n_components = std::min<std::size_t>(cfg.n_components, rows.size());
        class_cfg.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(label));
        gen.class_mixtures.emplace_back(label, fit_em(rows, class_cfg));
    }
    return gen;
}

/// m_per_class draws from every class mixture, labeled by their generator.
inline std::vector<Exemplar> generate_exemplars(const TaskGenerator& gen, std::size_t m_per_class,
                                                std::uint64_t seed) {
    if (m_per_class < 1) throw Error("generate_exemplars: m_per_class must be >= 1");
    std::vector<Exemplar> out;
    out.reserve(gen.class_mixtures.size() * m_per_class);
    for (const auto& [label, mix] : gen.class_mixtures) {
        const MixtureSamples draws =
            sample(mix, m_per_class, mix_seed(seed, static_cast<std::uint64_t>(label)));
        for (std::size_t i = 0; i < m_per_class; ++i) {
            Exemplar e;
            e.features = draws.points[i];
            e.label = label;
            e.source_task = gen.task_id;
            e.method = ExemplarMethod::GmmSampled;
            out.push_back(std::move(e));
        }
    }
    return out;
}

/// Uniform reservoir sample of real train rows, for the replay path that
/// skips generative modeling. Features are conditioned when a descriptor is
/// given.
inline std::vector<Exemplar> reservoir_candidates(const TaskDataset& task,
                                                  const TaskDescriptor* desc, std::size_t pool_size,
                                                  std::uint64_t seed) {
    if (pool_size < 1) throw Error("reservoir_candidates: pool_size must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<const Sample*> reservoir;
    reservoir.reserve(pool_size);
    for (std::size_t i = 0; i < task.train.size(); ++i) {
        if (reservoir.size() < pool_size) {
            reservoir.push_back(&task.train[i]);
        } else {
            std::uniform_int_distribution<std::size_t> pick(0, i);
            const std::size_t j = pick(rng);
            if (j < pool_size) reservoir[j] = &task.train[i];
        }
    }
    std::vector<Exemplar> out;
    out.reserve(reservoir.size());
    for (const Sample* s : reservoir) {
        Exemplar e;
        e.features = desc ? condition(s->features, *desc) : s->features;
        e.label = s->label;
        e.source_task = task.task_id;
        e.method = ExemplarMethod::ReservoirReal;
        out.push_back(std::move(e));
    }
    return out;
}

/// Greedy pick maximizing alpha * relevance + (1 - alpha) * diversity, where
/// relevance is the candidate's log-density under its own class mixture
/// (min-max normalized over the pool) and diversity is the distance to the
/// nearest already-selected exemplar (max-min greedy; 0 while nothing is
/// selected). The diversity term is normalized by the pool's largest pairwise
/// distance so both terms share the [0, 1] scale. Ties resolve to the lowest
/// candidate index. A null generator drops the relevance term, leaving pure
/// diversity selection.
inline std::vector<Exemplar> select_exemplars(const std::vector<Exemplar>& candidates,
                                              const TaskGenerator* gen, std::size_t budget,
                                              double alpha) {
    if (budget < 1) throw Error("select_exemplars: budget must be >= 1");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("select_exemplars: alpha must be in [0, 1]");
    if (candidates.empty()) throw EmptyCandidates("select_exemplars: no candidates");
    if (budget >= candidates.size()) return candidates;

    const std::size_t n = candidates.size();
    std::vector<double> relevance(n, 0.0);
    if (gen) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            const GaussianMixture* mix = gen->mixture_for(candidates[i].label);
            if (!mix)
                throw Error("select_exemplars: no mixture for label " +
                            std::to_string(candidates[i].label));
            relevance[i] = log_density(*mix, candidates[i].features);
            lo = std::min(lo, relevance[i]);
            hi = std::max(hi, relevance[i]);
        }
        const double span = hi - lo;
        for (double& r : relevance) r = span > 0.0 ? (r - lo) / span : 1.0;
    }

    double dist_scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            dist_scale = std::max(
                dist_scale, detail::squared_distance(candidates[i].features, candidates[j].features));
    dist_scale = dist_scale > 0.0 ? std::sqrt(dist_scale) : 1.0;

    std::vector<double> min_dist(n, 0.0);  // distance to nearest selected; 0 before the first pick
    std::vector<char> selected(n, 0);
    std::vector<Exemplar> out;
    out.reserve(budget);
    for (std::size_t round = 0; round < budget; ++round) {
        std::size_t best = n;
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (selected[i]) continue;
            const double score = alpha * relevance[i] + (1.0 - alpha) * min_dist[i] / dist_scale;
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        selected[best] = 1;
        Exemplar chosen = candidates[best];
        chosen.score = best_score;
        out.push_back(std::move(chosen));
        for (std::size_t i = 0; i < n; ++i) {
            if (selected[i]) continue;
            const double d = std::sqrt(
                detail::squared_distance(candidates[i].features, candidates[best].features));
            min_dist[i] = round == 0 ? d : std::min(min_dist[i], d);
        }
    }
    return out;
}

/// Bounded per-task exemplar store, the replay memory R_{t-1}. Slots keep
/// first-insertion order; an update replaces a task's entries wholesale.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity_per_task) : capacity_(capacity_per_task) {
        if (capacity_ < 10 || capacity_ > 50)
            throw CapacityExceeded("ReplayBuffer: capacity_per_task " + std::to_string(capacity_) +
                                   " outside [10, 50]");
    }

    std::size_t capacity_per_task() const { return capacity_; }

    void update(const std::string& task_id, std::vector<Exemplar> selected) {
        if (selected.size() > capacity_)
            throw CapacityExceeded("ReplayBuffer: " + std::to_string(selected.size()) +
                                   " exemplars exceed capacity " + std::to_string(capacity_));
        for (auto& [id, entries] : slots_) {
            if (id == task_id) {
                entries = std::move(selected);
                return;
            }
        }
        slots_.emplace_back(task_id, std::move(selected));
    }

    const std::vector<Exemplar>* entries(const std::string& task_id) const {
        for (const auto& [id, list] : slots_)
            if (id == task_id) return &list;
        return nullptr;
    }

    std::size_t task_count() const { return slots_.size(); }

    std::size_t total_size() const {
        std::size_t n = 0;
        for (const auto& [id, list] : slots_) n += list.size();
        return n;
    }

    const std::vector<std::pair<std::string, std::vector<Exemplar>>>& slots() const {
        return slots_;
    }

  private:
    std::size_t capacity_;
    std::vector<std::pair<std::string, std::vector<Exemplar>>> slots_;
};

/// Buffered exemplars concatenated with the stage's train split, shuffled
/// deterministically by seed.
inline TrainingSet merge_training_set(const ReplayBuffer& buf, const TaskDataset& stage,
                                      std::uint64_t seed) {
    if (stage.train.empty())
        throw TooFewSamples("merge_training_set: stage '" + stage.task_id + "' has no train samples");
    TrainingSet set;
    for (const auto& [id, entries] : buf.slots())
        for (const Exemplar& e : entries) {
            set.features.push_back(e.features);
            set.labels.push_back(e.label);
        }
    for (const Sample& s : stage.train) {
        set.features.push_back(s.features);
        set.labels.push_back(s.label);
    }
    std::vector<std::size_t> order(set.features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    TrainingSet shuffled;
    shuffled.features.reserve(order.size());
    shuffled.labels.reserve(order.size());
    for (std::size_t i : order) {
        shuffled.features.push_back(std::move(set.features[i]));
        shuffled.labels.push_back(set.labels[i]);
    }
    return shuffled;
}

}  // namespace gausstin
