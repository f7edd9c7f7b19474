#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldt/errors.hpp"
#include "ldt/rng.hpp"

namespace ldt {

/// Architecture of one model. All models compared within a study share
/// hidden_size so their state vectors are equidimensional.
struct ModelConfig {
    int hidden_size = 64;
    int num_layers = 1;
    int input_dim = 2;   // per-day channels, e.g. normalized infections + deaths
    int output_dim = 2;
    int static_dim = 0;  // 0 disables the static seed projection
    std::uint64_t rng_seed = 0;
    bool use_forget_gate = true; // false pins f == 1 (original no-forget-gate cell)

    void validate() const {
        if (hidden_size < 1) throw ConfigError("hidden_size must be >= 1");
        if (num_layers < 1 || num_layers > 3) throw ConfigError("num_layers must be in {1,2,3}");
        if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
        if (output_dim < 1) throw ConfigError("output_dim must be >= 1");
        if (static_dim < 0) throw ConfigError("static_dim must be >= 0");
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Gate order used everywhere: input, forget, output, candidate.
inline constexpr int kNumGates = 4;
enum GateIndex : int { kGateIn = 0, kGateForget = 1, kGateOut = 2, kGateCand = 3 };

struct LstmLayerParams {
    std::array<Eigen::MatrixXd, kNumGates> w_x; // hidden x layer_input
    std::array<Eigen::MatrixXd, kNumGates> w_h; // hidden x hidden
    std::array<Eigen::VectorXd, kNumGates> b;   // hidden
    Eigen::MatrixXd w_seed; // hidden x static_dim; 0x0 when seeding is disabled
    Eigen::VectorXd b_seed; // hidden; size 0 when seeding is disabled
};

/// Flat view of one parameter tensor; the fixed enumeration order defines
/// initialization draws, optimizer state layout, and checkpoint layout.
struct TensorRef {
    std::string name;
    double* data = nullptr;
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    bool is_bias = false;

    Eigen::Index size() const { return rows * cols; }
};

struct LstmParams {
    ModelConfig config;
    std::vector<LstmLayerParams> layers;
    Eigen::MatrixXd w_out; // output_dim x hidden
    Eigen::VectorXd b_out;

    /// All-zero parameter set with the shapes implied by the config.
    static LstmParams zeros(const ModelConfig& cfg) {
        cfg.validate();
        LstmParams p;
        p.config = cfg;
        p.layers.resize(static_cast<std::size_t>(cfg.num_layers));
        for (int l = 0; l < cfg.num_layers; ++l) {
            const int in_dim = l == 0 ? cfg.input_dim : cfg.hidden_size;
            auto& layer = p.layers[static_cast<std::size_t>(l)];
            for (int g = 0; g < kNumGates; ++g) {
                layer.w_x[g] = Eigen::MatrixXd::Zero(cfg.hidden_size, in_dim);
                layer.w_h[g] = Eigen::MatrixXd::Zero(cfg.hidden_size, cfg.hidden_size);
                layer.b[g] = Eigen::VectorXd::Zero(cfg.hidden_size);
            }
            if (cfg.static_dim > 0) {
                layer.w_seed = Eigen::MatrixXd::Zero(cfg.hidden_size, cfg.static_dim);
                layer.b_seed = Eigen::VectorXd::Zero(cfg.hidden_size);
            }
        }
        p.w_out = Eigen::MatrixXd::Zero(cfg.output_dim, cfg.hidden_size);
        p.b_out = Eigen::VectorXd::Zero(cfg.output_dim);
        return p;
    }

    std::size_t parameter_count() const;
    bool all_finite() const;
};

namespace detail {
inline const char* gate_tag(int g) {
    switch (g) {
        case kGateIn: return "in";
        case kGateForget: return "forget";
        case kGateOut: return "out";
        default: return "cand";
    }
}
} // namespace detail

/// Enumerate every parameter tensor in a fixed, documented order.
inline std::vector<TensorRef> tensor_refs(LstmParams& p) {
    std::vector<TensorRef> refs;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& layer = p.layers[l];
        const std::string prefix = "layer" + std::to_string(l) + ".";
        for (int g = 0; g < kNumGates; ++g)
            refs.push_back({prefix + "w_x." + detail::gate_tag(g), layer.w_x[g].data(),
                            layer.w_x[g].rows(), layer.w_x[g].cols(), false});
        for (int g = 0; g < kNumGates; ++g)
            refs.push_back({prefix + "w_h." + detail::gate_tag(g), layer.w_h[g].data(),
                            layer.w_h[g].rows(), layer.w_h[g].cols(), false});
        for (int g = 0; g < kNumGates; ++g)
            refs.push_back({prefix + "b." + detail::gate_tag(g), layer.b[g].data(),
                            layer.b[g].size(), 1, true});
        if (p.config.static_dim > 0) {
            refs.push_back({prefix + "w_seed", layer.w_seed.data(), layer.w_seed.rows(),
                            layer.w_seed.cols(), false});
            refs.push_back({prefix + "b_seed", layer.b_seed.data(), layer.b_seed.size(), 1, true});
        }
    }
    refs.push_back({"head.w_out", p.w_out.data(), p.w_out.rows(), p.w_out.cols(), false});
    refs.push_back({"head.b_out", p.b_out.data(), p.b_out.size(), 1, true});
    return refs;
}

inline std::vector<TensorRef> tensor_refs(const LstmParams& p) {
    return tensor_refs(const_cast<LstmParams&>(p));
}

inline std::size_t LstmParams::parameter_count() const {
    std::size_t n = 0;
    for (const auto& ref : tensor_refs(*this)) n += static_cast<std::size_t>(ref.size());
    return n;
}

inline bool LstmParams::all_finite() const {
    for (const auto& ref : tensor_refs(*this))
        for (Eigen::Index i = 0; i < ref.size(); ++i)
            if (!std::isfinite(ref.data[i])) return false;
    return true;
}

/// Fresh parameters: weights uniform in [-1/sqrt(hidden), +1/sqrt(hidden)],
/// biases zero except the forget-gate bias at +1. Deterministic in rng_seed.
inline LstmParams init_params(const ModelConfig& cfg) {
    cfg.validate();
    LstmParams p = LstmParams::zeros(cfg);
    const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.hidden_size));
    Rng rng(derive_seed(cfg.rng_seed, "init_params"));
    for (auto& ref : tensor_refs(p)) {
        if (ref.is_bias) continue;
        for (Eigen::Index i = 0; i < ref.size(); ++i)
            ref.data[i] = rng.uniform(-bound, bound);
    }
    for (auto& layer : p.layers)
        layer.b[kGateForget].setConstant(1.0);
    return p;
}

/// Per-layer hidden and cell vectors.
struct LstmState {
    std::vector<Eigen::VectorXd> h;
    std::vector<Eigen::VectorXd> c;

    static LstmState zero(const ModelConfig& cfg) {
        LstmState s;
        s.h.assign(static_cast<std::size_t>(cfg.num_layers),
                   Eigen::VectorXd::Zero(cfg.hidden_size));
        s.c = s.h;
        return s;
    }
};

/// Initialize the hidden state from static features: h0 = tanh(W_seed p + b)
/// per layer, cell state zero. The projection is a trained parameter;
/// gradients reach it through backward() when the trace records the vector.
inline LstmState seed_hidden(const LstmParams& params, const Eigen::VectorXd& static_vec) {
    const auto& cfg = params.config;
    if (cfg.static_dim <= 0)
        throw UsageError("seed_hidden: model has no static seed projection (static_dim == 0)");
    if (static_vec.size() != cfg.static_dim)
        throw ShapeError("seed_hidden: static vector length " + std::to_string(static_vec.size()) +
                         " != static_dim " + std::to_string(cfg.static_dim));
    for (Eigen::Index i = 0; i < static_vec.size(); ++i)
        if (!std::isfinite(static_vec[i])) throw DataError("seed_hidden: non-finite static feature");
    LstmState s = LstmState::zero(cfg);
    for (int l = 0; l < cfg.num_layers; ++l) {
        const auto& layer = params.layers[static_cast<std::size_t>(l)];
        s.h[static_cast<std::size_t>(l)] =
            (layer.w_seed * static_vec + layer.b_seed).array().tanh().matrix();
    }
    return s;
}

/// Everything backward() needs for exact gradients of one forward pass.
struct LstmTrace {
    struct StepCache {
        Eigen::VectorXd x, h_prev, c_prev;
        Eigen::VectorXd i, f, o, g; // post-activation gates and candidate
        Eigen::VectorXd c, tanh_c, h;
    };

    ModelConfig config;
    Eigen::VectorXd static_vec;           // size 0 when the pass was not seeded
    std::vector<Eigen::VectorXd> h0, c0;  // initial state per layer
    std::vector<std::vector<StepCache>> steps; // [t][layer]
    std::vector<Eigen::VectorXd> outputs;      // head output per step
    std::vector<std::uint8_t> fed_back;        // step input was previous output

    std::size_t length() const { return steps.size(); }
};

struct ForwardResult {
    std::vector<Eigen::VectorXd> outputs;
    LstmState final_state;
    LstmTrace trace;
};

namespace detail {

inline Eigen::VectorXd sigmoid(const Eigen::VectorXd& v) {
    return (1.0 / (1.0 + (-v.array()).exp())).matrix();
}

/// Advance one timestep in place; appends the step cache to the trace.
inline Eigen::VectorXd lstm_step(const LstmParams& params, const Eigen::VectorXd& input,
                                 LstmState& state, LstmTrace& trace, bool fed_back) {
    const auto& cfg = params.config;
    std::vector<LstmTrace::StepCache> caches(static_cast<std::size_t>(cfg.num_layers));
    Eigen::VectorXd x = input;
    for (int l = 0; l < cfg.num_layers; ++l) {
        const auto& layer = params.layers[static_cast<std::size_t>(l)];
        auto& cache = caches[static_cast<std::size_t>(l)];
        auto& h = state.h[static_cast<std::size_t>(l)];
        auto& c = state.c[static_cast<std::size_t>(l)];
        cache.x = x;
        cache.h_prev = h;
        cache.c_prev = c;
        cache.i = sigmoid(layer.w_x[kGateIn] * x + layer.w_h[kGateIn] * h + layer.b[kGateIn]);
        cache.f = cfg.use_forget_gate
                      ? sigmoid(layer.w_x[kGateForget] * x + layer.w_h[kGateForget] * h +
                                layer.b[kGateForget])
                      : Eigen::VectorXd::Ones(cfg.hidden_size);
        cache.o = sigmoid(layer.w_x[kGateOut] * x + layer.w_h[kGateOut] * h + layer.b[kGateOut]);
        cache.g = (layer.w_x[kGateCand] * x + layer.w_h[kGateCand] * h + layer.b[kGateCand])
                      .array()
                      .tanh()
                      .matrix();
        cache.c = (cache.f.array() * c.array() + cache.i.array() * cache.g.array()).matrix();
        cache.tanh_c = cache.c.array().tanh().matrix();
        cache.h = (cache.o.array() * cache.tanh_c.array()).matrix();
        c = cache.c;
        h = cache.h;
        x = cache.h; // input to the layer above
    }
    Eigen::VectorXd out = params.w_out * state.h.back() + params.b_out;
    trace.steps.push_back(std::move(caches));
    trace.outputs.push_back(out);
    trace.fed_back.push_back(fed_back ? 1 : 0);
    return out;
}

inline void check_initial(const ModelConfig& cfg, const LstmState& initial) {
    if (initial.h.size() != static_cast<std::size_t>(cfg.num_layers) ||
        initial.c.size() != static_cast<std::size_t>(cfg.num_layers))
        throw ShapeError("initial state has wrong layer count");
    for (const auto& v : initial.h)
        if (v.size() != cfg.hidden_size) throw ShapeError("initial hidden vector has wrong length");
    for (const auto& v : initial.c)
        if (v.size() != cfg.hidden_size) throw ShapeError("initial cell vector has wrong length");
}

} // namespace detail

/// Run the stack over an input sequence. The trace caches every activation
/// needed for exact backpropagation through time.
inline ForwardResult lstm_forward(const LstmParams& params,
                                  const std::vector<Eigen::VectorXd>& inputs,
                                  const LstmState& initial) {
    const auto& cfg = params.config;
    if (inputs.empty()) throw ShapeError("lstm_forward: empty input sequence");
    detail::check_initial(cfg, initial);
    for (const auto& x : inputs) {
        if (x.size() != cfg.input_dim)
            throw ShapeError("lstm_forward: input vector length " + std::to_string(x.size()) +
                             " != input_dim " + std::to_string(cfg.input_dim));
        for (Eigen::Index i = 0; i < x.size(); ++i)
            if (!std::isfinite(x[i])) throw DataError("lstm_forward: non-finite input");
    }
    ForwardResult r;
    r.trace.config = cfg;
    r.trace.h0 = initial.h;
    r.trace.c0 = initial.c;
    r.final_state = initial;
    for (const auto& x : inputs)
        r.outputs.push_back(detail::lstm_step(params, x, r.final_state, r.trace, false));
    return r;
}

/// Forward pass whose initial hidden state is seeded from static features.
/// Records the static vector so backward() extends gradients to W_seed.
inline ForwardResult lstm_forward_seeded(const LstmParams& params,
                                         const std::vector<Eigen::VectorXd>& inputs,
                                         const Eigen::VectorXd& static_vec) {
    ForwardResult r = lstm_forward(params, inputs, seed_hidden(params, static_vec));
    r.trace.static_vec = static_vec;
    return r;
}

/// Continue a forward pass autoregressively: each extra step consumes the
/// previous step's head output as input. Requires output_dim == input_dim.
inline void extend_autoregressive(const LstmParams& params, ForwardResult& r, int extra_steps) {
    const auto& cfg = params.config;
    if (extra_steps <= 0) return;
    if (cfg.output_dim != cfg.input_dim)
        throw UsageError("autoregressive rollout requires output_dim == input_dim");
    if (r.outputs.empty()) throw UsageError("autoregressive rollout needs a primed sequence");
    for (int s = 0; s < extra_steps; ++s) {
        const Eigen::VectorXd next_input = r.outputs.back();
        r.outputs.push_back(detail::lstm_step(params, next_input, r.final_state, r.trace, true));
    }
}

struct BackwardResult {
    LstmParams grads;                      // same shape family as LstmParams
    std::vector<Eigen::VectorXd> d_inputs; // gradient w.r.t. each step input
};

/// Exact BPTT for the recurrence produced by lstm_forward (+ rollout).
/// d_outputs[t] is dLoss/d(head output at step t); entries may be empty
/// (treated as zero). Autoregressive feedback is differentiated through:
/// the gradient w.r.t. a fed-back input flows into the producing output.
inline BackwardResult backward(const LstmParams& params, const LstmTrace& trace,
                               const std::vector<Eigen::VectorXd>& d_outputs) {
    const auto& cfg = params.config;
    if (!(trace.config == cfg)) throw UsageError("backward: trace was built for a different config");
    const std::size_t T = trace.length();
    if (T == 0) throw UsageError("backward: empty trace");
    if (d_outputs.size() != T)
        throw UsageError("backward: d_outputs length " + std::to_string(d_outputs.size()) +
                         " != trace length " + std::to_string(T));

    BackwardResult res;
    res.grads = LstmParams::zeros(cfg);
    res.d_inputs.assign(T, Eigen::VectorXd());
    const std::size_t L = static_cast<std::size_t>(cfg.num_layers);

    std::vector<Eigen::VectorXd> dh_next(L, Eigen::VectorXd::Zero(cfg.hidden_size));
    std::vector<Eigen::VectorXd> dc_next(L, Eigen::VectorXd::Zero(cfg.hidden_size));
    Eigen::VectorXd dx_fed_back; // dx at layer 0 of step t+1 when that input was fed back

    for (std::size_t t = T; t-- > 0;) {
        Eigen::VectorXd d_out = d_outputs[t].size() > 0
                                    ? d_outputs[t]
                                    : Eigen::VectorXd::Zero(cfg.output_dim);
        if (d_out.size() != cfg.output_dim)
            throw ShapeError("backward: d_output has wrong length at step " + std::to_string(t));
        if (t + 1 < T && trace.fed_back[t + 1]) d_out += dx_fed_back;

        const auto& step = trace.steps[t];
        res.grads.w_out.noalias() += d_out * step.back().h.transpose();
        res.grads.b_out += d_out;

        Eigen::VectorXd dh_above = params.w_out.transpose() * d_out;
        for (std::size_t l = L; l-- > 0;) {
            const auto& cache = step[l];
            const auto& layer = params.layers[l];
            auto& glayer = res.grads.layers[l];

            const Eigen::VectorXd dh = dh_above + dh_next[l];
            const Eigen::VectorXd d_o = (dh.array() * cache.tanh_c.array()).matrix();
            Eigen::VectorXd dc =
                dc_next[l] +
                (dh.array() * cache.o.array() * (1.0 - cache.tanh_c.array().square())).matrix();

            const Eigen::VectorXd d_i = (dc.array() * cache.g.array()).matrix();
            const Eigen::VectorXd d_g = (dc.array() * cache.i.array()).matrix();

            Eigen::VectorXd dnet_i =
                (d_i.array() * cache.i.array() * (1.0 - cache.i.array())).matrix();
            Eigen::VectorXd dnet_o =
                (d_o.array() * cache.o.array() * (1.0 - cache.o.array())).matrix();
            Eigen::VectorXd dnet_g = (d_g.array() * (1.0 - cache.g.array().square())).matrix();
            Eigen::VectorXd dnet_f = Eigen::VectorXd::Zero(cfg.hidden_size);
            if (cfg.use_forget_gate) {
                const Eigen::VectorXd d_f = (dc.array() * cache.c_prev.array()).matrix();
                dnet_f = (d_f.array() * cache.f.array() * (1.0 - cache.f.array())).matrix();
            }
            dc_next[l] = (dc.array() * cache.f.array()).matrix();

            const std::array<const Eigen::VectorXd*, kNumGates> dnets = {&dnet_i, &dnet_f,
                                                                         &dnet_o, &dnet_g};
            Eigen::VectorXd dx = Eigen::VectorXd::Zero(cache.x.size());
            Eigen::VectorXd dh_prev = Eigen::VectorXd::Zero(cfg.hidden_size);
            for (int g = 0; g < kNumGates; ++g) {
                if (g == kGateForget && !cfg.use_forget_gate) continue;
                glayer.w_x[g].noalias() += *dnets[g] * cache.x.transpose();
                glayer.w_h[g].noalias() += *dnets[g] * cache.h_prev.transpose();
                glayer.b[g] += *dnets[g];
                dx.noalias() += layer.w_x[g].transpose() * *dnets[g];
                dh_prev.noalias() += layer.w_h[g].transpose() * *dnets[g];
            }
            dh_next[l] = dh_prev;
            dh_above = dx; // becomes dh for the layer below at this step
        }
        res.d_inputs[t] = dh_above;
        dx_fed_back = dh_above;
    }

    // Initial state came from the static seed projection: h0 = tanh(net0).
    if (trace.static_vec.size() > 0) {
        for (std::size_t l = 0; l < L; ++l) {
            const Eigen::VectorXd dnet0 =
                (dh_next[l].array() * (1.0 - trace.h0[l].array().square())).matrix();
            res.grads.layers[l].w_seed.noalias() += dnet0 * trace.static_vec.transpose();
            res.grads.layers[l].b_seed += dnet0;
        }
    }
    return res;
}

} // namespace ldt
