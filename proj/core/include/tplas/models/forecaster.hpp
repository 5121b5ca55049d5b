#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tplas/core/types.hpp"
#include "tplas/data/window.hpp"

namespace tplas::models {

/// One flat array per checkpoint param, in checkpoint order.
using ParamArrays = std::vector<std::vector<double>>;

struct ParamSlot {
    std::string name;
    std::vector<std::size_t> shape;
    std::size_t size() const;
};

/// Throws ModelError on an invalid spec.
void validate_spec(const ForecasterSpec& spec);

/// Names and shapes of the params `spec` implies. Empty for naive_seasonal.
std::vector<ParamSlot> param_layout(const ForecasterSpec& spec);

/// Fresh weights: uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero biases. Deterministic in seed.
Checkpoint init_params(const ForecasterSpec& spec, std::uint64_t seed);

/// h x C forecast for an l x C context. Throws ModelError on a shape mismatch.
Matrix predict(const Checkpoint& ckpt, MatrixView context);

struct GradResult {
    ParamArrays grads;
    double loss = 0.0;
};

/// Gradient of the batch loss L = mean over (sample, step, channel) of the squared error.
GradResult grad(const Checkpoint& ckpt, std::span<const data::Sample> batch);

/// Batch loss as in grad(), without the backward pass.
double loss(const Checkpoint& ckpt, std::span<const data::Sample> batch);

ParamArrays param_values(const Checkpoint& ckpt);
/// Copy of `ckpt` with its param values replaced; arrays must be congruent.
Checkpoint with_params(const Checkpoint& ckpt, ParamArrays values);

/// Centered moving average with edge replication; kernel must be odd.
std::vector<double> moving_average(std::span<const double> x, std::size_t kernel);

}  // namespace tplas::models
