#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "gausstin/errors.hpp"
#include "gausstin/rng.hpp"

namespace gausstin {

enum class Split { Train, Eval };

// The six Natural Instructions task categories.
enum class Category { QG, AG, CF, IAG, MM, VF };

inline constexpr std::array<Category, 6> kAllCategories = {Category::QG, Category::AG, Category::CF,
                                                           Category::IAG, Category::MM, Category::VF};

inline std::string_view category_name(Category c) {
    switch (c) {
        case Category::QG: return "QG";
        case Category::AG: return "AG";
        case Category::CF: return "CF";
        case Category::IAG: return "IAG";
        case Category::MM: return "MM";
        case Category::VF: return "VF";
    }
    return "QG";
}

inline Category category_from_name(std::string_view s) {
    for (Category c : kAllCategories)
        if (category_name(c) == s) return c;
    throw UnknownCategory("unknown category '" + std::string(s) + "'");
}

struct Sample {
    std::string task_id;
    std::string sample_id;
    std::vector<double> features;
    int label = 0;
    Split split = Split::Train;
};

struct TaskDataset {
    std::string task_id;
    Category category = Category::QG;
    std::vector<Sample> train;
    std::vector<Sample> eval;

    std::size_t size() const { return train.size() + eval.size(); }
};

/// Ordered task sequence with a labeled prefix of length k. tasks[0..k) form
/// D_l; the remainder is consumed stage by stage as D_u.
struct TaskStream {
    std::vector<TaskDataset> tasks;
    std::size_t labeled_prefix_k = 1;
    std::size_t dim = 0;
    int class_count = 0;
};

/// Feature rows paired with labels; the unit the learner trains on.
struct TrainingSet {
    std::vector<std::vector<double>> features;
    std::vector<int> labels;

    std::size_t size() const { return features.size(); }
};

struct SynthSpec {
    std::size_t tasks = 10;
    std::size_t classes_per_task = 4;
    std::size_t dim = 16;
    std::size_t train_per_class = 40;
    std::size_t eval_per_class = 20;
    double separation = 10.0;  // cluster separation s
    double noise = 1.0;        // within-blob sigma
    std::uint64_t seed = 0;
    std::size_t labeled_prefix_k = 1;
    // When set, every task reuses one shared set of blob locations under a
    // per-task label permutation, so raw-space decision boundaries collide
    // across tasks.
    bool conflicting = false;
};

namespace detail {

inline std::vector<double> gaussian_vector(std::size_t dim, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> v(dim);
    for (double& x : v) x = scale * gauss(rng);
    return v;
}

}  // namespace detail

/// Deterministic synthetic stream: one isotropic Gaussian blob per
/// (task, class) pair, blob centers scaled so the expected pairwise distance
/// is at least separation * noise. Labels are globally unique per
/// (task, class), giving a shared label space across the stream.
inline TaskStream synth_stream(const SynthSpec& spec) {
    if (spec.tasks < 1 || spec.classes_per_task < 1 || spec.dim < 1 || spec.train_per_class < 1 ||
        spec.eval_per_class < 1)
        throw InvalidSpec("synth_stream: all counts must be >= 1");
    if (!(spec.separation > 0.0) || !(spec.noise > 0.0))
        throw InvalidSpec("synth_stream: separation and noise must be > 0");
    if (spec.labeled_prefix_k < 1 || spec.labeled_prefix_k > spec.tasks)
        throw KOutOfRange("synth_stream: k = " + std::to_string(spec.labeled_prefix_k) +
                          " outside [1, " + std::to_string(spec.tasks) + "]");

    std::mt19937_64 rng(spec.seed);
    const double center_scale = spec.separation * spec.noise;

    std::vector<std::vector<double>> shared_centers;
    if (spec.conflicting)
        for (std::size_t c = 0; c < spec.classes_per_task; ++c)
            shared_centers.push_back(detail::gaussian_vector(spec.dim, center_scale, rng));

    std::normal_distribution<double> gauss(0.0, 1.0);
    TaskStream stream;
    stream.dim = spec.dim;
    stream.labeled_prefix_k = spec.labeled_prefix_k;
    stream.class_count = static_cast<int>(spec.tasks * spec.classes_per_task);

    for (std::size_t t = 0; t < spec.tasks; ++t) {
        TaskDataset task;
        task.task_id = "t" + std::to_string(t);
        task.category = kAllCategories[t % kAllCategories.size()];

        std::vector<std::size_t> location(spec.classes_per_task);
        for (std::size_t c = 0; c < spec.classes_per_task; ++c) location[c] = c;
        if (spec.conflicting) std::shuffle(location.begin(), location.end(), rng);

        std::size_t serial = 0;
        for (std::size_t c = 0; c < spec.classes_per_task; ++c) {
            const std::vector<double> center =
                spec.conflicting ? shared_centers[location[c]]
                                 : detail::gaussian_vector(spec.dim, center_scale, rng);
            const int label = static_cast<int>(t * spec.classes_per_task + c);
            const auto blob_sample = [&](Split split) {
                Sample s;
                s.task_id = task.task_id;
                s.sample_id = task.task_id + "-" + std::to_string(serial++);
                s.label = label;
                s.split = split;
                s.features.resize(spec.dim);
                for (std::size_t d = 0; d < spec.dim; ++d)
                    s.features[d] = center[d] + spec.noise * gauss(rng);
                return s;
            };
            for (std::size_t i = 0; i < spec.train_per_class; ++i)
                task.train.push_back(blob_sample(Split::Train));
            for (std::size_t i = 0; i < spec.eval_per_class; ++i)
                task.eval.push_back(blob_sample(Split::Eval));
        }
        stream.tasks.push_back(std::move(task));
    }
    return stream;
}

/// The per-stage unlabeled subsets D_t^u: every task beyond the prefix, in
/// stream order. Their union is D_u and they are pairwise disjoint.
inline std::vector<TaskDataset> stage_subsets(const TaskStream& stream) {
    std::vector<TaskDataset> stages;
    for (std::size_t t = stream.labeled_prefix_k; t < stream.tasks.size(); ++t)
        stages.push_back(stream.tasks[t]);
    return stages;
}

}  // namespace gausstin
