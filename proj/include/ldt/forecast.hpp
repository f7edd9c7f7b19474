#pragma once

#include <vector>

#include "ldt/data.hpp"
#include "ldt/nn.hpp"

namespace ldt {

/// Recursive multi-step forecast: prime the model with the given series
/// prefix (seeded from statics when the model takes them), then roll the
/// head output back in as input for `horizon` steps. Returns one
/// [infections, deaths] vector per future day.
inline std::vector<Eigen::VectorXd> forecast_rollout(const LstmParams& model,
                                                     const CaseSeries& prefix,
                                                     const Eigen::VectorXd& statics,
                                                     int horizon) {
    if (horizon < 1) throw ConfigError("forecast horizon must be >= 1");
    if (prefix.days() == 0) throw DataError("forecast_rollout: empty series prefix");
    std::vector<Eigen::VectorXd> inputs;
    for (std::size_t t = 0; t < prefix.days(); ++t)
        inputs.push_back(Eigen::Vector2d(prefix.infections[t], prefix.deaths[t]));

    const auto& cfg = model.config;
    ForwardResult fwd = cfg.static_dim > 0 ? lstm_forward_seeded(model, inputs, statics)
                                           : lstm_forward(model, inputs, LstmState::zero(cfg));
    // the output at the last primed step is the first future day
    extend_autoregressive(model, fwd, horizon - 1);
    return {fwd.outputs.end() - horizon, fwd.outputs.end()};
}

} // namespace ldt
