#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gausstin/errors.hpp"
#include "gausstin/rng.hpp"

namespace gausstin {

/// One diagonal-covariance mixture component.
struct GaussianComponent {
    double weight = 1.0;
    std::vector<double> mean;
    std::vector<double> variances;  // diagonal of the covariance, all >= cov_floor
};

enum class InitMethod { KmeansPP, RandomPoints };

struct FitConfig {
    std::size_t n_components = 6;
    std::size_t max_iterations = 200;
    double rel_tolerance = 1e-6;
    double cov_floor = 1e-6;
    InitMethod init_method = InitMethod::KmeansPP;
    std::uint64_t seed = 0;
};

/// Fitted mixture. Immutable once returned by fit_em; safe to share across threads.
struct GaussianMixture {
    std::vector<GaussianComponent> components;
    std::size_t dim = 0;
    std::vector<double> fit_trace;  // mean log-likelihood recorded at each EM iteration
    bool converged = false;
    std::size_t iterations = 0;
};

namespace detail {

inline constexpr double kLogTwoPi = 1.8378770664093454836;

inline double component_log_density(const GaussianComponent& c, std::span<const double> x) {
    double acc = 0.0;
    for (std::size_t d = 0; d < c.mean.size(); ++d) {
        const double diff = x[d] - c.mean[d];
        acc -= 0.5 * (kLogTwoPi + std::log(c.variances[d])) + diff * diff / (2.0 * c.variances[d]);
    }
    return acc;
}

inline double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

inline void check_vector(const GaussianMixture& gmm, std::span<const double> x, const char* op) {
    if (x.size() != gmm.dim)
        throw DimensionMismatch(std::string(op) + ": vector has length " + std::to_string(x.size()) +
                                ", mixture dim is " + std::to_string(gmm.dim));
}

}  // namespace detail

/// log sum_k pi_k N(x; mu_k, Sigma_k), via log-sum-exp. Finite for finite x.
inline double log_density(const GaussianMixture& gmm, std::span<const double> x) {
    detail::check_vector(gmm, x, "log_density");
    std::vector<double> lp(gmm.components.size());
    for (std::size_t k = 0; k < gmm.components.size(); ++k)
        lp[k] = std::log(gmm.components[k].weight) + detail::component_log_density(gmm.components[k], x);
    return detail::log_sum_exp(lp);
}

/// Posterior component probabilities for x. Non-negative, sums to 1.
inline std::vector<double> responsibilities(const GaussianMixture& gmm, std::span<const double> x) {
    detail::check_vector(gmm, x, "responsibilities");
    std::vector<double> lp(gmm.components.size());
    for (std::size_t k = 0; k < gmm.components.size(); ++k)
        lp[k] = std::log(gmm.components[k].weight) + detail::component_log_density(gmm.components[k], x);
    const double lse = detail::log_sum_exp(lp);
    double sum = 0.0;
    for (double& v : lp) {
        v = std::exp(v - lse);
        sum += v;
    }
    for (double& v : lp) v /= sum;
    return lp;
}

struct MixtureSamples {
    std::vector<std::vector<double>> points;
    std::vector<std::size_t> components;  // generating component per row
};

/// Ancestral sampling: categorical component choice, then a coordinate-wise
/// Gaussian draw. Bit-stable for a given seed.
inline MixtureSamples sample(const GaussianMixture& gmm, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw Error("sample: n must be >= 1");
    if (gmm.components.empty()) throw Error("sample: mixture has no components");

    std::vector<double> cumulative(gmm.components.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < gmm.components.size(); ++k) {
        acc += gmm.components[k].weight;
        cumulative[k] = acc;
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    MixtureSamples out;
    out.points.reserve(n);
    out.components.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = unit(rng) * acc;
        std::size_t k = 0;
        while (k + 1 < cumulative.size() && u >= cumulative[k]) ++k;
        const GaussianComponent& c = gmm.components[k];
        std::vector<double> x(gmm.dim);
        for (std::size_t d = 0; d < gmm.dim; ++d)
            x[d] = c.mean[d] + std::sqrt(c.variances[d]) * gauss(rng);
        out.points.push_back(std::move(x));
        out.components.push_back(k);
    }
    return out;
}

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        const double diff = a[d] - b[d];
        s += diff * diff;
    }
    return s;
}

// kmeans++ seeding: first center uniform, then D^2 sampling. Ties and
// zero-mass fallbacks resolve to the lowest untaken index.
inline std::vector<std::size_t> kmeanspp_centers(const std::vector<std::vector<double>>& data,
                                                 std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = data.size();
    std::vector<std::size_t> centers;
    centers.reserve(k);
    std::vector<char> taken(n, 0);

    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    std::size_t c0 = first(rng);
    centers.push_back(c0);
    taken[c0] = 1;

    std::vector<double> dist2(n);
    for (std::size_t i = 0; i < n; ++i) dist2[i] = squared_distance(data[i], data[c0]);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (centers.size() < k) {
        double total = 0.0;
        for (double v : dist2) total += v;
        std::size_t next = n;
        if (total > 0.0) {
            const double u = unit(rng) * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                cum += dist2[i];
                if (u < cum) {
                    next = i;
                    break;
                }
            }
            if (next == n) next = n - 1;  // u landed on the last slab boundary
        }
        if (next == n || taken[next]) {
            next = n;
            for (std::size_t i = 0; i < n; ++i)
                if (!taken[i]) {
                    next = i;
                    break;
                }
            if (next == n) next = 0;  // every point already a center; duplicates allowed
        }
        centers.push_back(next);
        taken[next] = 1;
        for (std::size_t i = 0; i < n; ++i)
            dist2[i] = std::min(dist2[i], squared_distance(data[i], data[next]));
    }
    return centers;
}

inline std::vector<std::size_t> random_point_centers(std::size_t n, std::size_t k,
                                                     std::mt19937_64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace detail

/// EM fit of a diagonal-covariance mixture. Stops when the relative change in
/// mean log-likelihood drops below cfg.rel_tolerance or after
/// cfg.max_iterations. The recorded fit_trace is non-decreasing.
inline GaussianMixture fit_em(const std::vector<std::vector<double>>& data, const FitConfig& cfg) {
    const std::size_t n = data.size();
    const std::size_t K = cfg.n_components;
    if (K < 1) throw Error("fit_em: n_components must be >= 1");
    if (cfg.max_iterations < 1) throw Error("fit_em: max_iterations must be >= 1");
    if (!(cfg.cov_floor > 0.0)) throw Error("fit_em: cov_floor must be > 0");
    if (n < K)
        throw TooFewSamples("fit_em: " + std::to_string(n) + " samples for " + std::to_string(K) +
                            " components");
    const std::size_t dim = data[0].size();
    if (dim == 0) throw DimensionMismatch("fit_em: empty feature vectors");
    for (std::size_t i = 0; i < n; ++i) {
        if (data[i].size() != dim)
            throw DimensionMismatch("fit_em: row " + std::to_string(i) + " has length " +
                                    std::to_string(data[i].size()) + ", expected " +
                                    std::to_string(dim));
        for (double v : data[i])
            if (!std::isfinite(v)) throw NonFiniteInput("fit_em: non-finite entry in row " + std::to_string(i));
    }

    // Per-dimension variance of the whole set; fallback spread for degenerate clusters.
    std::vector<double> global_mean(dim, 0.0), global_var(dim, 0.0);
    for (const auto& row : data)
        for (std::size_t d = 0; d < dim; ++d) global_mean[d] += row[d];
    for (std::size_t d = 0; d < dim; ++d) global_mean[d] /= static_cast<double>(n);
    for (const auto& row : data)
        for (std::size_t d = 0; d < dim; ++d) {
            const double diff = row[d] - global_mean[d];
            global_var[d] += diff * diff;
        }
    for (std::size_t d = 0; d < dim; ++d)
        global_var[d] = std::max(global_var[d] / static_cast<double>(n), cfg.cov_floor);

    std::mt19937_64 rng(cfg.seed);
    const std::vector<std::size_t> centers = cfg.init_method == InitMethod::KmeansPP
                                                 ? detail::kmeanspp_centers(data, K, rng)
                                                 : detail::random_point_centers(n, K, rng);

    GaussianMixture gmm;
    gmm.dim = dim;
    gmm.components.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        gmm.components[k].weight = 1.0 / static_cast<double>(K);
        gmm.components[k].mean = data[centers[k]];
        gmm.components[k].variances.assign(dim, 0.0);
    }

    // Initial variances: spread of the points nearest to each seed, floored.
    {
        std::vector<std::size_t> assign(n);
        std::vector<std::size_t> counts(K, 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = detail::squared_distance(data[i], gmm.components[0].mean);
            for (std::size_t k = 1; k < K; ++k) {
                const double d2 = detail::squared_distance(data[i], gmm.components[k].mean);
                if (d2 < best_d) {
                    best_d = d2;
                    best = k;
                }
            }
            assign[i] = best;
            ++counts[best];
        }
        for (std::size_t i = 0; i < n; ++i) {
            const auto& mu = gmm.components[assign[i]].mean;
            auto& var = gmm.components[assign[i]].variances;
            for (std::size_t d = 0; d < dim; ++d) {
                const double diff = data[i][d] - mu[d];
                var[d] += diff * diff;
            }
        }
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t d = 0; d < dim; ++d)
                gmm.components[k].variances[d] =
                    counts[k] > 0
                        ? std::max(gmm.components[k].variances[d] / static_cast<double>(counts[k]),
                                   cfg.cov_floor)
                        : global_var[d];
    }

    std::vector<double> resp(n * K);
    std::vector<double> lp(K), log_w(K), log_const(K);
    std::vector<std::vector<double>> inv2(K, std::vector<double>(dim));

    double prev_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t iter = 1; iter <= cfg.max_iterations; ++iter) {
        for (std::size_t k = 0; k < K; ++k) {
            const auto& c = gmm.components[k];
            log_w[k] = std::log(c.weight);
            double lc = 0.0;
            for (std::size_t d = 0; d < dim; ++d) {
                lc -= 0.5 * (detail::kLogTwoPi + std::log(c.variances[d]));
                inv2[k][d] = 0.5 / c.variances[d];
            }
            log_const[k] = lc;
        }

        // E-step; also tracks the lowest-density point for component rescue.
        double ll_sum = 0.0;
        double worst_ll = std::numeric_limits<double>::infinity();
        std::size_t worst_idx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& x = data[i];
            for (std::size_t k = 0; k < K; ++k) {
                const auto& mu = gmm.components[k].mean;
                double q = 0.0;
                for (std::size_t d = 0; d < dim; ++d) {
                    const double diff = x[d] - mu[d];
                    q += diff * diff * inv2[k][d];
                }
                lp[k] = log_w[k] + log_const[k] - q;
            }
            const double lse = detail::log_sum_exp(lp);
            ll_sum += lse;
            if (lse < worst_ll) {
                worst_ll = lse;
                worst_idx = i;
            }
            for (std::size_t k = 0; k < K; ++k) resp[i * K + k] = std::exp(lp[k] - lse);
        }
        const double ll = ll_sum / static_cast<double>(n);
        gmm.fit_trace.push_back(ll);
        gmm.iterations = iter;

        if (iter > 1) {
            const double rel = std::abs(ll - prev_ll) / std::max(1.0, std::abs(prev_ll));
            if (rel < cfg.rel_tolerance) {
                gmm.converged = true;
                break;
            }
        }
        prev_ll = ll;

        // M-step with variance floor; an emptied component is reseeded at the
        // lowest-density point.
        std::vector<double> nk(K, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < K; ++k) nk[k] += resp[i * K + k];

        double nk_total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            auto& c = gmm.components[k];
            if (nk[k] > 0.0 && std::isfinite(nk[k])) {
                std::fill(c.mean.begin(), c.mean.end(), 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = resp[i * K + k];
                    for (std::size_t d = 0; d < dim; ++d) c.mean[d] += r * data[i][d];
                }
                for (std::size_t d = 0; d < dim; ++d) c.mean[d] /= nk[k];
                std::fill(c.variances.begin(), c.variances.end(), 0.0);
                for (std::size_t i = 0; i < n; ++i) {
                    const double r = resp[i * K + k];
                    for (std::size_t d = 0; d < dim; ++d) {
                        const double diff = data[i][d] - c.mean[d];
                        c.variances[d] += r * diff * diff;
                    }
                }
                for (std::size_t d = 0; d < dim; ++d)
                    c.variances[d] = std::max(c.variances[d] / nk[k], cfg.cov_floor);
            } else {
                c.mean = data[worst_idx];
                c.variances = global_var;
                nk[k] = 1.0;
            }
            nk_total += nk[k];
        }
        for (std::size_t k = 0; k < K; ++k) gmm.components[k].weight = nk[k] / nk_total;
    }

    double wsum = 0.0;
    for (const auto& c : gmm.components) wsum += c.weight;
    for (auto& c : gmm.components) c.weight /= wsum;
    return gmm;
}

}  // namespace gausstin
