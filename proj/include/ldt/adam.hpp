#pragma once

#include <cmath>
#include <string>

#include "ldt/errors.hpp"
#include "ldt/nn.hpp"

namespace ldt {

/// Adam with bias correction; standard defaults.
struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators, parameter-shaped.
struct AdamState {
    AdamConfig cfg;
    long step_count = 0;
    LstmParams m;
    LstmParams v;

    static AdamState init(const ModelConfig& model_cfg, AdamConfig cfg = {}) {
        AdamState st;
        st.cfg = cfg;
        st.m = LstmParams::zeros(model_cfg);
        st.v = LstmParams::zeros(model_cfg);
        return st;
    }
};

/// Scale gradients so their global L2 norm is at most max_norm.
/// Returns the factor applied (1.0 when already within bounds).
inline double clip_gradients(LstmParams& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& ref : tensor_refs(grads))
        for (Eigen::Index i = 0; i < ref.size(); ++i) sq += ref.data[i] * ref.data[i];
    const double norm = std::sqrt(sq);
    if (!(norm > max_norm)) return 1.0;
    const double factor = max_norm / norm;
    for (auto& ref : tensor_refs(grads))
        for (Eigen::Index i = 0; i < ref.size(); ++i) ref.data[i] *= factor;
    return factor;
}

/// One Adam update in place. Rejects non-finite gradients before touching
/// any state so a failed step leaves params and moments untouched.
inline void adam_step(LstmParams& params, const LstmParams& grads, AdamState& st) {
    if (!(params.config == grads.config))
        throw UsageError("adam_step: gradient shapes do not match parameters");
    if (!grads.all_finite())
        throw TrainingError("adam_step: non-finite gradient, step rejected");

    st.step_count += 1;
    const double bc1 = 1.0 - std::pow(st.cfg.beta1, static_cast<double>(st.step_count));
    const double bc2 = 1.0 - std::pow(st.cfg.beta2, static_cast<double>(st.step_count));

    auto p_refs = tensor_refs(params);
    auto g_refs = tensor_refs(const_cast<LstmParams&>(grads));
    auto m_refs = tensor_refs(st.m);
    auto v_refs = tensor_refs(st.v);
    for (std::size_t k = 0; k < p_refs.size(); ++k) {
        double* p = p_refs[k].data;
        const double* g = g_refs[k].data;
        double* m = m_refs[k].data;
        double* v = v_refs[k].data;
        const Eigen::Index n = p_refs[k].size();
        for (Eigen::Index i = 0; i < n; ++i) {
            m[i] = st.cfg.beta1 * m[i] + (1.0 - st.cfg.beta1) * g[i];
            v[i] = st.cfg.beta2 * v[i] + (1.0 - st.cfg.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= st.cfg.lr * m_hat / (std::sqrt(v_hat) + st.cfg.epsilon);
        }
    }
    if (!params.all_finite())
        throw TrainingError("adam_step: parameters became non-finite");
}

} // namespace ldt
