#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gausstin/errors.hpp"
#include "gausstin/rng.hpp"

namespace gausstin {

/// Fixed per-task unit vector standing in for a task-specific instruction
/// prompt. A pure function of (task_id, p_dim, seed).
struct TaskDescriptor {
    std::string task_id;
    std::vector<double> vector;    // unit L2 norm
    std::string instruction_text;  // human-readable template, documentation only
};

inline TaskDescriptor make_descriptor(const std::string& task_id, std::size_t p_dim,
                                      std::uint64_t seed) {
    if (p_dim < 1) throw Error("make_descriptor: p_dim must be >= 1");

    std::mt19937_64 rng(mix_seed(seed, fnv1a64(task_id)));
    std::normal_distribution<double> gauss(0.0, 1.0);

    TaskDescriptor desc;
    desc.task_id = task_id;
    desc.vector.resize(p_dim);
    double norm2 = 0.0;
    for (double& v : desc.vector) {
        v = gauss(rng);
        norm2 += v * v;
    }
    if (norm2 <= 0.0) {
        desc.vector.assign(p_dim, 0.0);
        desc.vector[0] = 1.0;
    } else {
        const double inv = 1.0 / std::sqrt(norm2);
        for (double& v : desc.vector) v *= inv;
    }
    desc.instruction_text =
        "Group task '" + task_id + "' samples by similarity and pick its most representative exemplars.";
    return desc;
}

/// z = [x ; descriptor]: the first d entries are x, unchanged.
inline std::vector<double> condition(std::span<const double> x, const TaskDescriptor& desc) {
    for (double v : x)
        if (!std::isfinite(v)) throw NonFiniteInput("condition: non-finite feature entry");
    std::vector<double> z;
    z.reserve(x.size() + desc.vector.size());
    z.insert(z.end(), x.begin(), x.end());
    z.insert(z.end(), desc.vector.begin(), desc.vector.end());
    return z;
}

}  // namespace gausstin
