#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "ldt/errors.hpp"
#include "ldt/forecast.hpp"
#include "ldt/training.hpp"

namespace ldt {

/// Cross-tabulation of two labelings of the same entities.
struct ConfusionMatrix {
    std::vector<std::vector<long>> counts; // counts[i][j] = #{a == i && b == j}
    long n = 0;

    int k() const { return static_cast<int>(counts.size()); }
};

inline ConfusionMatrix confusion_matrix(const std::vector<int>& labels_a,
                                        const std::vector<int>& labels_b, int k) {
    if (labels_a.size() != labels_b.size())
        throw UsageError("confusion_matrix: label vectors differ in length");
    if (k < 1) throw UsageError("confusion_matrix: k must be >= 1");
    ConfusionMatrix m;
    m.counts.assign(static_cast<std::size_t>(k), std::vector<long>(static_cast<std::size_t>(k), 0));
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        const int a = labels_a[i];
        const int b = labels_b[i];
        if (a < 0 || a >= k || b < 0 || b >= k)
            throw UsageError("confusion_matrix: label out of range [0, k)");
        m.counts[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] += 1;
        m.n += 1;
    }
    return m;
}

struct PermutationAccuracy {
    double accuracy = 0.0;
    std::vector<int> permutation; // permutation[i] = column matched to row i
};

/// Maximal diagonal fraction over all column reorderings: exhaustive for
/// k <= 8, exact bitmask-DP assignment above.
inline PermutationAccuracy permutation_accuracy(const ConfusionMatrix& m) {
    const int k = m.k();
    if (k == 0 || m.n == 0) throw UsageError("permutation_accuracy: empty matrix");
    PermutationAccuracy best;
    best.permutation.assign(static_cast<std::size_t>(k), 0);
    if (k <= 8) {
        std::vector<int> perm(static_cast<std::size_t>(k));
        std::iota(perm.begin(), perm.end(), 0);
        long best_sum = -1;
        do {
            long sum = 0;
            for (int i = 0; i < k; ++i)
                sum += m.counts[static_cast<std::size_t>(i)]
                               [static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
            if (sum > best_sum) {
                best_sum = sum;
                best.permutation = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        best.accuracy = static_cast<double>(best_sum) / static_cast<double>(m.n);
        return best;
    }
    // assignment DP over column subsets: dp[mask] = best sum using the first
    // popcount(mask) rows with columns in mask
    const std::size_t full = (std::size_t{1} << k) - 1;
    std::vector<long> dp(full + 1, -1);
    std::vector<int> choice(full + 1, -1);
    dp[0] = 0;
    for (std::size_t mask = 0; mask < full; ++mask) {
        if (dp[mask] < 0) continue;
        const int row = __builtin_popcountll(mask);
        for (int col = 0; col < k; ++col) {
            if (mask & (std::size_t{1} << col)) continue;
            const std::size_t next = mask | (std::size_t{1} << col);
            const long cand =
                dp[mask] + m.counts[static_cast<std::size_t>(row)][static_cast<std::size_t>(col)];
            if (cand > dp[next]) {
                dp[next] = cand;
                choice[next] = col;
            }
        }
    }
    std::size_t mask = full;
    for (int row = k - 1; row >= 0; --row) {
        const int col = choice[mask];
        best.permutation[static_cast<std::size_t>(row)] = col;
        mask &= ~(std::size_t{1} << col);
    }
    best.accuracy = static_cast<double>(dp[full]) / static_cast<double>(m.n);
    return best;
}

namespace detail {

inline double choose2(double x) { return x * (x - 1.0) / 2.0; }

/// Same co-membership structure (equality as partitions, up to relabeling).
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    std::map<int, int> fa, fb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int ca = fa.emplace(a[i], static_cast<int>(fa.size())).first->second;
        const int cb = fb.emplace(b[i], static_cast<int>(fb.size())).first->second;
        if (ca != cb) return false;
    }
    return true;
}

} // namespace detail

/// Pair-counting adjusted Rand index in [-1, 1]; 1.0 for identical
/// partitions including relabelings. When the correction denominator
/// degenerates (both partitions trivial), identical partitions score 1.0
/// and anything else 0.0.
inline double adjusted_rand_index(const std::vector<int>& labels_a,
                                  const std::vector<int>& labels_b) {
    if (labels_a.size() != labels_b.size())
        throw UsageError("adjusted_rand_index: label vectors differ in length");
    if (labels_a.size() < 2) throw UsageError("adjusted_rand_index: need at least 2 entities");

    std::map<int, int> ia, ib;
    for (const int v : labels_a) ia.emplace(v, static_cast<int>(ia.size()));
    for (const int v : labels_b) ib.emplace(v, static_cast<int>(ib.size()));
    const auto ka = ia.size();
    const auto kb = ib.size();
    std::vector<std::vector<long>> table(ka, std::vector<long>(kb, 0));
    std::vector<long> row(ka, 0), col(kb, 0);
    for (std::size_t i = 0; i < labels_a.size(); ++i) {
        const auto r = static_cast<std::size_t>(ia.at(labels_a[i]));
        const auto c = static_cast<std::size_t>(ib.at(labels_b[i]));
        table[r][c] += 1;
        row[r] += 1;
        col[c] += 1;
    }
    double index = 0.0;
    for (const auto& r : table)
        for (const long v : r) index += detail::choose2(static_cast<double>(v));
    double sum_a = 0.0, sum_b = 0.0;
    for (const long v : row) sum_a += detail::choose2(static_cast<double>(v));
    for (const long v : col) sum_b += detail::choose2(static_cast<double>(v));
    const double pairs = detail::choose2(static_cast<double>(labels_a.size()));
    const double expected = sum_a * sum_b / pairs;
    const double maximum = 0.5 * (sum_a + sum_b);
    if (maximum == expected)
        return detail::same_partition(labels_a, labels_b) ? 1.0 : 0.0;
    return (index - expected) / (maximum - expected);
}

/// Cross-time concordance of cluster assignments for one entity set.
struct StabilityReport {
    ConfusionMatrix matrix;
    double accuracy = 0.0; // permutation accuracy = the stability metric
    std::vector<int> best_permutation;
    double ari = 0.0;
    long n = 0;
};

/// Stability between assignments of the same entities at two points in
/// time: max-permutation confusion-diagonal fraction plus ARI.
inline StabilityReport cluster_stability(const std::map<std::string, int>& labels_t1,
                                         const std::map<std::string, int>& labels_t2, int k) {
    std::vector<std::string> only_a, only_b;
    for (const auto& [fips, _] : labels_t1)
        if (!labels_t2.count(fips)) only_a.push_back(fips);
    for (const auto& [fips, _] : labels_t2)
        if (!labels_t1.count(fips)) only_b.push_back(fips);
    if (!only_a.empty() || !only_b.empty()) {
        std::string msg = "cluster_stability: entity sets differ;";
        for (const auto& f : only_a) msg += " -" + f;
        for (const auto& f : only_b) msg += " +" + f;
        throw UsageError(msg);
    }
    std::vector<int> a, b;
    for (const auto& [fips, label] : labels_t1) {
        a.push_back(label);
        b.push_back(labels_t2.at(fips));
    }
    StabilityReport rep;
    rep.matrix = confusion_matrix(a, b, k);
    const auto acc = permutation_accuracy(rep.matrix);
    rep.accuracy = acc.accuracy;
    rep.best_permutation = acc.permutation;
    rep.ari = adjusted_rand_index(a, b);
    rep.n = rep.matrix.n;
    return rep;
}

/// Table-style relative error between two stable-entity counts:
/// |n_actual - n_embedding| / n_actual, and its integer-percent rounding.
inline double stable_count_error(long n_actual, long n_embedding) {
    if (n_actual <= 0) throw UsageError("stable_count_error: n_actual must be positive");
    return std::abs(static_cast<double>(n_actual - n_embedding)) / static_cast<double>(n_actual);
}

inline long stable_count_error_percent(long n_actual, long n_embedding) {
    return std::llround(100.0 * stable_count_error(n_actual, n_embedding));
}

/// Signed relative error of the recursive forecast at each horizon.
struct HorizonError {
    int horizon = 0;
    double rel_err_infections = 0.0;
    double rel_err_deaths = 0.0;
};

struct HorizonCurve {
    std::vector<HorizonError> rows;
    bool truncated = false; // horizon exceeded the test segment
};

/// Roll the model out from the train cut and compare each horizon day
/// against the withheld actuals: (pred - actual) / (actual + eps).
inline HorizonCurve horizon_errors(const LstmParams& model, const EntityRecord& entity,
                                   int horizons, int test_days = 30, double epsilon = 1e-8) {
    if (horizons < 1) throw ConfigError("horizons must be >= 1");
    const auto split = split_train_test(entity.series, test_days);
    HorizonCurve curve;
    int h = horizons;
    if (h > static_cast<int>(split.test.days())) {
        h = static_cast<int>(split.test.days());
        curve.truncated = true;
    }
    const auto preds = forecast_rollout(model, split.train, entity.statics, h);
    for (int d = 1; d <= h; ++d) {
        const auto idx = static_cast<std::size_t>(d - 1);
        HorizonError row;
        row.horizon = d;
        row.rel_err_infections =
            (preds[idx][0] - split.test.infections[idx]) / (split.test.infections[idx] + epsilon);
        row.rel_err_deaths =
            (preds[idx][1] - split.test.deaths[idx]) / (split.test.deaths[idx] + epsilon);
        curve.rows.push_back(row);
    }
    return curve;
}

/// Trailing mean over min(window, t+1) elements; the warm-up prefix uses
/// whatever history exists.
inline std::vector<double> moving_average(const std::vector<double>& series, int window = 10) {
    if (window < 1) throw ConfigError("moving_average window must be >= 1");
    std::vector<double> out(series.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < series.size(); ++t) {
        acc += series[t];
        if (t >= static_cast<std::size_t>(window)) acc -= series[t - static_cast<std::size_t>(window)];
        const auto count = std::min<std::size_t>(static_cast<std::size_t>(window), t + 1);
        out[t] = acc / static_cast<double>(count);
    }
    return out;
}

} // namespace ldt
