#include "scene/adamw.hpp"

#include <cmath>

namespace scene {

void AdamwState::init(const std::vector<ParamRef>& params) {
    m.clear();
    v.clear();
    for (const ParamRef& p : params) {
        m.emplace_back(static_cast<std::size_t>(p.tensor->numel()), 0.0);
        v.emplace_back(static_cast<std::size_t>(p.tensor->numel()), 0.0);
    }
    step = 0;
}

void adamw_step(std::vector<ParamRef>& params, AdamwState& state, const AdamwConfig& cfg) {
    if (!state.initialized()) {
        state.init(params);
    }
    if (state.m.size() != params.size()) {
        throw ValueError("adamw_step: state does not match parameter list");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& theta = *params[pi].tensor;
        auto g = theta.grad();
        auto w = theta.data();
        auto& m = state.m[pi];
        auto& v = state.v[pi];
        if (m.size() != w.size()) {
            throw ValueError("adamw_step: moment size mismatch for " + params[pi].name);
        }
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!std::isfinite(g[i])) {
                throw ValueError("adamw_step: non-finite gradient in parameter '" +
                                 params[pi].name + "'");
            }
            if (cfg.weight_decay != 0.0) {
                w[i] -= cfg.lr * cfg.weight_decay * w[i];
            }
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

}  // namespace scene
