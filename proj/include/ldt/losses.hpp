#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ldt/errors.hpp"

namespace ldt {

enum class LossKind { mse_abs, rmse_rel };

inline LossKind loss_from_name(const std::string& name) {
    if (name == "mse_abs") return LossKind::mse_abs;
    if (name == "rmse_rel") return LossKind::rmse_rel;
    throw ConfigError("unknown loss: " + name + " (expected mse_abs | rmse_rel)");
}

inline std::string loss_name(LossKind kind) {
    return kind == LossKind::mse_abs ? "mse_abs" : "rmse_rel";
}

/// Training objective selection. epsilon guards the relative-error
/// denominator (target side only); penalty_weight is the non-monotonicity
/// hinge weight of rmse_rel.
struct LossSpec {
    LossKind kind = LossKind::rmse_rel;
    double epsilon = 1e-8;
    double penalty_weight = 100.0;

    void validate() const {
        if (!(epsilon > 0.0)) throw ConfigError("loss epsilon must be > 0");
        if (penalty_weight < 0.0) throw ConfigError("loss penalty weight must be >= 0");
    }
};

struct LossResult {
    double value = 0.0;
    std::vector<double> grad; // d value / d pred_t
};

namespace detail {
inline void check_loss_inputs(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size())
        throw ShapeError("loss: pred length " + std::to_string(pred.size()) +
                         " != target length " + std::to_string(target.size()));
    if (pred.empty())
        throw ShapeError("loss: empty sequences");
    for (const double v : pred)
        if (!std::isfinite(v)) throw DataError("loss: non-finite prediction");
    for (const double v : target)
        if (!std::isfinite(v)) throw DataError("loss: non-finite target");
}
} // namespace detail

/// Mean squared error: mean_t (pred_t - target_t)^2.
inline LossResult mse_abs(std::span<const double> pred, std::span<const double> target) {
    detail::check_loss_inputs(pred, target);
    const double n = static_cast<double>(pred.size());
    LossResult r;
    r.grad.resize(pred.size());
    for (std::size_t t = 0; t < pred.size(); ++t) {
        const double d = pred[t] - target[t];
        r.value += d * d / n;
        r.grad[t] = 2.0 * d / n;
    }
    return r;
}

/// Relative mean squared error with a non-monotonicity hinge:
///   mean_t ((pred_t - target_t)/(target_t + eps))^2
///   + lambda * mean_{t>=1} max(0, pred_{t-1} - pred_t)
/// The hinge subgradient is 0 at exact ties.
inline LossResult rmse_rel(std::span<const double> pred, std::span<const double> target,
                           const LossSpec& spec = LossSpec{}) {
    detail::check_loss_inputs(pred, target);
    spec.validate();
    const std::size_t n = pred.size();
    LossResult r;
    r.grad.assign(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
        const double denom = target[t] + spec.epsilon;
        const double d = (pred[t] - target[t]) / denom;
        r.value += d * d / static_cast<double>(n);
        r.grad[t] += 2.0 * d / (denom * static_cast<double>(n));
    }
    if (n >= 2 && spec.penalty_weight > 0.0) {
        const double pairs = static_cast<double>(n - 1);
        for (std::size_t t = 1; t < n; ++t) {
            const double drop = pred[t - 1] - pred[t];
            if (drop > 0.0) {
                r.value += spec.penalty_weight * drop / pairs;
                r.grad[t - 1] += spec.penalty_weight / pairs;
                r.grad[t] -= spec.penalty_weight / pairs;
            }
        }
    }
    return r;
}

/// Dispatch on the configured loss kind.
inline LossResult evaluate_loss(const LossSpec& spec, std::span<const double> pred,
                                std::span<const double> target) {
    return spec.kind == LossKind::mse_abs ? mse_abs(pred, target) : rmse_rel(pred, target, spec);
}

} // namespace ldt
