#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "gausstin/errors.hpp"

namespace gausstin {

/// Acc(M_i, D_j) grid. rows[r] holds the accuracies of one trained model over
/// all T tasks; row 0 belongs to the initialization model M_k and row r > 0 to
/// the model after the r-th continual stage, i.e. M_{k+r}. Task and model
/// indices below are 1-based to match the transfer formulas.
struct AccuracyMatrix {
    std::vector<std::vector<double>> rows;
    std::size_t first_k = 1;       // prefix size; row 0 is the model trained through task first_k
    std::size_t tasks = 0;         // T
    std::size_t trained_tasks = 0; // tasks with a model; < T only when some are held out as eval-only

    std::size_t row_for_model(std::size_t i) const {
        if (i < 1 || i > trained_tasks)
            throw IndexError("AccuracyMatrix: model index " + std::to_string(i));
        return i <= first_k ? 0 : i - first_k;
    }

    /// Accuracy of M_i on task D_j, both 1-based. Prefix tasks share the
    /// initialization model.
    double acc(std::size_t i, std::size_t j) const {
        if (j < 1 || j > tasks) throw IndexError("AccuracyMatrix: task index " + std::to_string(j));
        return rows[row_for_model(i)][j - 1];
    }
};

/// Backward transfer after task i: mean over earlier tasks of the accuracy
/// change relative to the model that had just trained on them.
inline double bwt(const AccuracyMatrix& R, std::size_t i) {
    if (i < 2) throw IndexError("bwt: needs i >= 2, got " + std::to_string(i));
    double sum = 0.0;
    for (std::size_t j = 1; j <= i - 1; ++j) sum += R.acc(i, j) - R.acc(j, j);
    return sum / static_cast<double>(i - 1);
}

/// Forward transfer at task i: mean accuracy of M_i on the not-yet-trained
/// tasks i+1..T.
inline double fwt(const AccuracyMatrix& R, std::size_t i, std::size_t T) {
    if (T != R.tasks)
        throw IndexError("fwt: T = " + std::to_string(T) + " does not match matrix with " +
                         std::to_string(R.tasks) + " tasks");
    if (i >= T) throw IndexError("fwt: needs i < T, got i = " + std::to_string(i));
    double sum = 0.0;
    for (std::size_t j = i + 1; j <= T; ++j) sum += R.acc(i, j);
    return sum / static_cast<double>(T - i);
}

inline double fwt(const AccuracyMatrix& R, std::size_t i) { return fwt(R, i, R.tasks); }

/// Mean accuracy of the final model over every task's eval split.
inline double mean_final_accuracy(const AccuracyMatrix& R) {
    if (R.rows.empty()) throw IndexError("mean_final_accuracy: empty matrix");
    const auto& last = R.rows.back();
    double sum = 0.0;
    for (double v : last) sum += v;
    return sum / static_cast<double>(last.size());
}

/// One completed experiment run, the unit of aggregation.
struct RunRecord {
    std::string strategy;
    std::size_t k = 1;
    std::uint64_t seed = 0;
    AccuracyMatrix matrix;
};

struct SummaryKey {
    std::string strategy;
    std::size_t k = 1;
    std::string metric;  // "fwt", "bwt" or "acc", raw [0, 1] scale

    bool operator<(const SummaryKey& o) const {
        if (strategy != o.strategy) return strategy < o.strategy;
        if (k != o.k) return k < o.k;
        return metric < o.metric;
    }
    bool operator==(const SummaryKey& o) const {
        return strategy == o.strategy && k == o.k && metric == o.metric;
    }
};

struct SummaryCell {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::size_t n_seeds = 0;
};

using Summary = std::map<SummaryKey, SummaryCell>;

namespace detail {

inline SummaryCell aggregate(const std::vector<double>& values) {
    SummaryCell cell;
    cell.n_seeds = values.size();
    for (double v : values) cell.mean += v;
    cell.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - cell.mean) * (v - cell.mean);
    cell.stddev = std::sqrt(var / static_cast<double>(values.size()));
    return cell;
}

}  // namespace detail

/// Per-(strategy, k, metric) mean and population std over seeds. Staged
/// strategies contribute post-initialization FWT, final-model BWT, and final
/// mean accuracy; joint training only has the accuracy cell.
inline Summary summarize(const std::vector<RunRecord>& records) {
    std::map<SummaryKey, std::vector<double>> groups;
    for (const RunRecord& r : records) {
        const bool joint = r.strategy == "joint";
        if (!joint && r.k < r.matrix.tasks)
            groups[{r.strategy, r.k, "fwt"}].push_back(fwt(r.matrix, r.k));
        if (!joint && r.matrix.trained_tasks >= 2)
            groups[{r.strategy, r.k, "bwt"}].push_back(bwt(r.matrix, r.matrix.trained_tasks));
        groups[{r.strategy, r.k, "acc"}].push_back(mean_final_accuracy(r.matrix));
    }
    Summary summary;
    for (const auto& [key, values] : groups) summary[key] = detail::aggregate(values);
    return summary;
}

}  // namespace gausstin
