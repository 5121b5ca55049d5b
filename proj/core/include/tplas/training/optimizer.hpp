#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>

#include "tplas/models/forecaster.hpp"

namespace tplas::training {

/// Thrown when an update cannot proceed (non-finite gradient, incongruent arrays).
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct OptimHyper {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct OptimState {
    models::ParamArrays m;
    models::ParamArrays v;
    std::size_t t = 0;
    OptimHyper hyper;
};

/// Zeroed moments congruent to `params`.
OptimState make_state(const models::ParamArrays& params, const OptimHyper& hyper);

/// One AdamW update: decay applied to the params directly, then the bias-corrected Adam step.
std::pair<models::ParamArrays, OptimState> adamw_step(models::ParamArrays params,
                                                      const models::ParamArrays& grads,
                                                      OptimState state);

/// Plain gradient step theta <- theta - lr * g (moments unused, t still counts steps).
std::pair<models::ParamArrays, OptimState> sgd_step(models::ParamArrays params,
                                                    const models::ParamArrays& grads,
                                                    OptimState state);

}  // namespace tplas::training
