#include "tplas/training/optimizer.hpp"

#include <cmath>
#include <sstream>

namespace tplas::training {

using models::ParamArrays;

OptimState make_state(const ParamArrays& params, const OptimHyper& hyper) {
    OptimState state;
    state.hyper = hyper;
    for (const auto& p : params) {
        state.m.emplace_back(p.size(), 0.0);
        state.v.emplace_back(p.size(), 0.0);
    }
    return state;
}

namespace {

void check_step_inputs(const ParamArrays& params, const ParamArrays& grads,
                       const OptimState& state) {
    if (!(state.hyper.lr >= 0.0)) throw TrainingError("learning rate must be >= 0");
    if (grads.size() != params.size() || state.m.size() != params.size() ||
        state.v.size() != params.size()) {
        throw TrainingError("optimizer: params, grads and moments are not congruent");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i].size() != params[i].size() || state.m[i].size() != params[i].size() ||
            state.v[i].size() != params[i].size()) {
            throw TrainingError("optimizer: array " + std::to_string(i) + " is not congruent");
        }
        for (std::size_t k = 0; k < grads[i].size(); ++k) {
            if (!std::isfinite(grads[i][k])) {
                std::ostringstream msg;
                msg << "non-finite gradient " << grads[i][k] << " at array " << i << ", index "
                    << k << " (step " << state.t + 1 << ")";
                throw TrainingError(msg.str());
            }
        }
    }
}

}  // namespace

std::pair<ParamArrays, OptimState> adamw_step(ParamArrays params, const ParamArrays& grads,
                                              OptimState state) {
    check_step_inputs(params, grads, state);
    const auto& hp = state.hyper;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double bc1 = 1.0 - std::pow(hp.beta1, t);
    const double bc2 = 1.0 - std::pow(hp.beta2, t);
    const double decay = 1.0 - hp.lr * hp.weight_decay;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& theta = params[i];
        auto& m = state.m[i];
        auto& v = state.v[i];
        const auto& g = grads[i];
        for (std::size_t k = 0; k < theta.size(); ++k) {
            m[k] = hp.beta1 * m[k] + (1.0 - hp.beta1) * g[k];
            v[k] = hp.beta2 * v[k] + (1.0 - hp.beta2) * g[k] * g[k];
            const double m_hat = m[k] / bc1;
            const double v_hat = v[k] / bc2;
            theta[k] = theta[k] * decay - hp.lr * m_hat / (std::sqrt(v_hat) + hp.eps);
        }
    }
    return {std::move(params), std::move(state)};
}

std::pair<ParamArrays, OptimState> sgd_step(ParamArrays params, const ParamArrays& grads,
                                            OptimState state) {
    check_step_inputs(params, grads, state);
    state.t += 1;
    for (std::size_t i = 0; i < params.size(); ++i) {
        for (std::size_t k = 0; k < params[i].size(); ++k) {
            params[i][k] -= state.hyper.lr * grads[i][k];
        }
    }
    return {std::move(params), std::move(state)};
}

}  // namespace tplas::training
