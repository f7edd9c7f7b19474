#pragma once

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldt/errors.hpp"
#include "ldt/rng.hpp"

namespace ldt {

enum class ClusterMethod { kmeans, kmedoids };

inline ClusterMethod cluster_method_from_name(const std::string& name) {
    if (name == "kmeans") return ClusterMethod::kmeans;
    if (name == "kmedoids") return ClusterMethod::kmedoids;
    throw ConfigError("unknown clustering method: " + name + " (expected kmeans | kmedoids)");
}

inline std::string cluster_method_name(ClusterMethod m) {
    return m == ClusterMethod::kmeans ? "kmeans" : "kmedoids";
}

/// Clustering result: labels per point, centers (free centroids for
/// k-means, member indices for k-medoids), and the total within-cluster
/// squared distance.
struct ClusterModel {
    int k = 0;
    ClusterMethod method = ClusterMethod::kmeans;
    std::vector<int> labels;
    std::vector<Eigen::VectorXd> centers; // k centroids (k-means) or medoid points
    std::vector<int> medoid_indices;      // empty for k-means
    double inertia = 0.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline void check_cluster_inputs(const std::vector<Eigen::VectorXd>& points, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (points.empty()) throw ConfigError("no points to cluster");
    if (static_cast<std::size_t>(k) > points.size())
        throw ConfigError("k = " + std::to_string(k) + " exceeds point count " +
                          std::to_string(points.size()));
    const auto dim = points.front().size();
    for (const auto& p : points)
        if (p.size() != dim) throw UsageError("clustering points have mixed dimensions");
}

/// k-means++ seeding: first center uniform, then proportional to squared
/// distance from the nearest chosen center.
inline std::vector<Eigen::VectorXd> kmeanspp_init(const std::vector<Eigen::VectorXd>& points,
                                                  int k, Rng& rng) {
    const std::size_t n = points.size();
    std::vector<Eigen::VectorXd> centers;
    centers.push_back(points[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1))]);
    std::vector<double> d2(n);
    while (centers.size() < static_cast<std::size_t>(k)) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) best = std::min(best, (points[i] - c).squaredNorm());
            d2[i] = best;
            total += best;
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            const double r = rng.uniform(0.0, total);
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (r < acc) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        }
        centers.push_back(points[pick]);
    }
    return centers;
}

inline int nearest_center(const Eigen::VectorXd& p, const std::vector<Eigen::VectorXd>& centers) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = (p - centers[c]).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(c);
        }
    }
    return best;
}

} // namespace detail

/// Lloyd's algorithm with k-means++ seeding, best of `restarts` restarts by
/// inertia. An emptied cluster is repaired by re-centering it on the point
/// farthest from its assigned centroid.
inline ClusterModel kmeans(const std::vector<Eigen::VectorXd>& points, int k, int restarts = 10,
                           int max_iter = 300, double tol = 1e-8, std::uint64_t seed = 0) {
    detail::check_cluster_inputs(points, k);
    const std::size_t n = points.size();

    ClusterModel best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < restarts; ++restart) {
        Rng rng(derive_seed(seed, "kmeans_restart", static_cast<std::uint64_t>(restart)));
        auto centers = detail::kmeanspp_init(points, k, rng);
        std::vector<int> labels(n, 0);
        double prev_inertia = std::numeric_limits<double>::infinity();
        double inertia = 0.0;
        for (int iter = 0; iter < max_iter; ++iter) {
            for (std::size_t i = 0; i < n; ++i) labels[i] = detail::nearest_center(points[i], centers);
            // repair empty clusters with the farthest point
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            for (const int lab : labels) counts[static_cast<std::size_t>(lab)] += 1;
            for (int c = 0; c < k; ++c) {
                if (counts[static_cast<std::size_t>(c)] > 0) continue;
                std::size_t farthest = 0;
                double far_d = -1.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (counts[static_cast<std::size_t>(labels[i])] <= 1) continue;
                    const double d =
                        (points[i] - centers[static_cast<std::size_t>(labels[i])]).squaredNorm();
                    if (d > far_d) {
                        far_d = d;
                        farthest = i;
                    }
                }
                counts[static_cast<std::size_t>(labels[farthest])] -= 1;
                labels[farthest] = c;
                counts[static_cast<std::size_t>(c)] = 1;
                centers[static_cast<std::size_t>(c)] = points[farthest];
            }
            // recompute centroids
            std::vector<Eigen::VectorXd> sums(static_cast<std::size_t>(k),
                                              Eigen::VectorXd::Zero(points[0].size()));
            std::fill(counts.begin(), counts.end(), 0);
            for (std::size_t i = 0; i < n; ++i) {
                sums[static_cast<std::size_t>(labels[i])] += points[i];
                counts[static_cast<std::size_t>(labels[i])] += 1;
            }
            for (int c = 0; c < k; ++c)
                if (counts[static_cast<std::size_t>(c)] > 0)
                    centers[static_cast<std::size_t>(c)] =
                        sums[static_cast<std::size_t>(c)] /
                        static_cast<double>(counts[static_cast<std::size_t>(c)]);
            inertia = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                inertia += (points[i] - centers[static_cast<std::size_t>(labels[i])]).squaredNorm();
            if (prev_inertia - inertia < tol) break;
            prev_inertia = inertia;
        }
        // final assignment against the converged centroids
        for (std::size_t i = 0; i < n; ++i) labels[i] = detail::nearest_center(points[i], centers);
        inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            inertia += (points[i] - centers[static_cast<std::size_t>(labels[i])]).squaredNorm();
        if (inertia < best.inertia) {
            best.k = k;
            best.method = ClusterMethod::kmeans;
            best.labels = labels;
            best.centers = centers;
            best.inertia = inertia;
            best.seed = seed;
        }
    }
    return best;
}

/// PAM-style alternation: assign to the nearest medoid, then move each
/// medoid to the cluster member minimizing within-cluster squared distance
/// (lowest index on ties), until no improvement. Best of `restarts`.
inline ClusterModel kmedoids(const std::vector<Eigen::VectorXd>& points, int k, int restarts = 10,
                             std::uint64_t seed = 0) {
    detail::check_cluster_inputs(points, k);
    const auto n = static_cast<int>(points.size());

    const auto cost_of = [&](const std::vector<int>& medoids, std::vector<int>& labels) {
        double cost = 0.0;
        for (int i = 0; i < n; ++i) {
            double best_d = std::numeric_limits<double>::infinity();
            int best_c = 0;
            for (std::size_t c = 0; c < medoids.size(); ++c) {
                const double d = (points[static_cast<std::size_t>(i)] -
                                  points[static_cast<std::size_t>(medoids[c])]).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best_c = static_cast<int>(c);
                }
            }
            labels[static_cast<std::size_t>(i)] = best_c;
            cost += best_d;
        }
        // a medoid always belongs to its own cluster, even among duplicates
        for (std::size_t c = 0; c < medoids.size(); ++c)
            labels[static_cast<std::size_t>(medoids[c])] = static_cast<int>(c);
        return cost;
    };

    ClusterModel best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int restart = 0; restart < restarts; ++restart) {
        Rng rng(derive_seed(seed, "kmedoids_restart", static_cast<std::uint64_t>(restart)));
        // sample k distinct start indices
        std::vector<int> pool(static_cast<std::size_t>(n));
        std::iota(pool.begin(), pool.end(), 0);
        rng.shuffle(pool);
        std::vector<int> medoids(pool.begin(), pool.begin() + k);

        std::vector<int> labels(static_cast<std::size_t>(n), 0);
        double cost = cost_of(medoids, labels);
        for (int iter = 0; iter < 100; ++iter) {
            auto proposal = medoids;
            for (int c = 0; c < k; ++c) {
                // lowest candidate index wins within-cluster cost ties
                int best_member = -1;
                double best_within = std::numeric_limits<double>::infinity();
                for (int cand = 0; cand < n; ++cand) {
                    if (labels[static_cast<std::size_t>(cand)] != c) continue;
                    double within = 0.0;
                    for (int i = 0; i < n; ++i)
                        if (labels[static_cast<std::size_t>(i)] == c)
                            within += (points[static_cast<std::size_t>(i)] -
                                       points[static_cast<std::size_t>(cand)]).squaredNorm();
                    if (within < best_within) {
                        best_within = within;
                        best_member = cand;
                    }
                }
                if (best_member >= 0) proposal[static_cast<std::size_t>(c)] = best_member;
            }
            if (proposal == medoids) break;
            // reassignment after a medoid move never raises the cost
            medoids = proposal;
            cost = cost_of(medoids, labels);
        }
        if (cost < best.inertia) {
            best.k = k;
            best.method = ClusterMethod::kmedoids;
            best.labels = labels;
            best.medoid_indices = medoids;
            best.centers.clear();
            for (const int m : medoids) best.centers.push_back(points[static_cast<std::size_t>(m)]);
            best.inertia = cost;
            best.seed = seed;
        }
    }
    return best;
}

} // namespace ldt
