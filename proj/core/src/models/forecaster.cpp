#include "tplas/models/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace tplas::models {

std::size_t ParamSlot::size() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

void validate_spec(const ForecasterSpec& spec) {
    const auto l = spec.context_length;
    if (l < 1 || spec.horizon < 1 || spec.channels < 1) {
        throw ModelError("spec: context length, horizon and channels must be >= 1");
    }
    switch (spec.kind) {
        case ModelKind::naive_seasonal:
            if (spec.season_length < 1 || spec.season_length > l) {
                throw ModelError("spec: season length must be in [1, l]");
            }
            break;
        case ModelKind::linear_direct:
            if (spec.kernel_size % 2 == 0 || spec.kernel_size > l) {
                throw ModelError("spec: moving-average kernel must be odd and <= l (got " +
                                 std::to_string(spec.kernel_size) + ", l = " + std::to_string(l) +
                                 ")");
            }
            break;
        case ModelKind::mlp:
            if (spec.hidden.empty()) throw ModelError("spec: mlp needs at least one hidden layer");
            for (auto w : spec.hidden) {
                if (w < 1) throw ModelError("spec: mlp hidden widths must be >= 1");
            }
            break;
    }
}

std::vector<ParamSlot> param_layout(const ForecasterSpec& spec) {
    validate_spec(spec);
    const auto l = spec.context_length;
    const auto h = spec.horizon;
    std::vector<ParamSlot> slots;
    switch (spec.kind) {
        case ModelKind::naive_seasonal:
            break;
        case ModelKind::linear_direct:
            slots.push_back({"trend.weight", {h, l}});
            slots.push_back({"trend.bias", {h}});
            slots.push_back({"remainder.weight", {h, l}});
            slots.push_back({"remainder.bias", {h}});
            break;
        case ModelKind::mlp: {
            std::size_t in = l;
            std::size_t layer = 0;
            auto add_layer = [&](std::size_t out) {
                slots.push_back({"layers." + std::to_string(layer) + ".weight", {out, in}});
                slots.push_back({"layers." + std::to_string(layer) + ".bias", {out}});
                in = out;
                ++layer;
            };
            for (auto w : spec.hidden) add_layer(w);
            add_layer(h);
            break;
        }
    }
    return slots;
}

Checkpoint init_params(const ForecasterSpec& spec, std::uint64_t seed) {
    Checkpoint ckpt;
    ckpt.spec = spec;
    ckpt.provenance.regime = Regime::init;
    ckpt.provenance.seed = seed;
    std::mt19937_64 rng(seed);
    for (auto& slot : param_layout(spec)) {
        NamedArray arr{slot.name, slot.shape, std::vector<double>(slot.size(), 0.0)};
        if (slot.shape.size() == 2) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(slot.shape[1]));
            std::uniform_real_distribution<double> dist(-bound, bound);
            for (auto& v : arr.values) v = dist(rng);
        }
        ckpt.params.push_back(std::move(arr));
    }
    return ckpt;
}

std::vector<double> moving_average(std::span<const double> x, std::size_t kernel) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    std::vector<double> out(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::ptrdiff_t j = -half; j <= half; ++j) {
            sum += x[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i + j, 0, n - 1))];
        }
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(kernel);
    }
    return out;
}

namespace {

void check_layout(const Checkpoint& ckpt) {
    const auto layout = param_layout(ckpt.spec);
    if (layout.size() != ckpt.params.size()) {
        throw ModelError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                         " param arrays, spec implies " + std::to_string(layout.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        if (ckpt.params[i].values.size() != layout[i].size()) {
            throw ModelError("param '" + layout[i].name + "' has " +
                             std::to_string(ckpt.params[i].values.size()) + " values, expected " +
                             std::to_string(layout[i].size()));
        }
    }
}

void check_context(const ForecasterSpec& spec, MatrixView x) {
    if (x.rows() != spec.context_length || x.cols() != spec.channels) {
        throw ModelError("context shape " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + " does not match spec " +
                         std::to_string(spec.context_length) + "x" +
                         std::to_string(spec.channels));
    }
}

void check_target(const ForecasterSpec& spec, MatrixView y) {
    if (y.rows() != spec.horizon || y.cols() != spec.channels) {
        throw ModelError("target shape " + std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()) + " does not match spec " +
                         std::to_string(spec.horizon) + "x" + std::to_string(spec.channels));
    }
}

std::vector<double> column(MatrixView x, std::size_t c) {
    std::vector<double> col(x.rows());
    for (std::size_t t = 0; t < x.rows(); ++t) col[t] = x(t, c);
    return col;
}

// out[j] = b[j] + sum_i W[j, i] * in[i], W row-major (out x in)
void affine(const std::vector<double>& w, const std::vector<double>& b,
            std::span<const double> in, std::span<double> out) {
    const std::size_t n_in = in.size();
    for (std::size_t j = 0; j < out.size(); ++j) {
        const double* row = w.data() + j * n_in;
        double acc = b[j];
        for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * in[i];
        out[j] = acc;
    }
}

// Per-channel forward state kept for the backward pass.
struct LinearTrace {
    std::vector<double> trend;
    std::vector<double> remainder;
};

void linear_forward(const Checkpoint& ckpt, std::span<const double> x, std::span<double> out,
                    LinearTrace& trace) {
    trace.trend = moving_average(x, ckpt.spec.kernel_size);
    trace.remainder.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) trace.remainder[i] = x[i] - trace.trend[i];
    std::vector<double> tmp(out.size());
    affine(ckpt.params[0].values, ckpt.params[1].values, trace.trend, out);
    affine(ckpt.params[2].values, ckpt.params[3].values, trace.remainder, tmp);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += tmp[j];
}

struct MlpTrace {
    std::vector<std::vector<double>> activations;  // input, then post-ReLU hidden layers
};

void mlp_forward(const Checkpoint& ckpt, std::span<const double> x, std::span<double> out,
                 MlpTrace& trace) {
    const std::size_t layers = ckpt.params.size() / 2;
    trace.activations.resize(layers);
    trace.activations[0].assign(x.begin(), x.end());
    for (std::size_t k = 0; k + 1 < layers; ++k) {
        auto& next = trace.activations[k + 1];
        next.resize(ckpt.params[2 * k + 1].values.size());
        affine(ckpt.params[2 * k].values, ckpt.params[2 * k + 1].values, trace.activations[k], next);
        for (auto& v : next) v = v > 0.0 ? v : 0.0;
    }
    affine(ckpt.params[2 * (layers - 1)].values, ckpt.params[2 * (layers - 1) + 1].values,
           trace.activations[layers - 1], out);
}

void naive_forward(const ForecasterSpec& spec, MatrixView x, Matrix& out) {
    const std::size_t s = spec.season_length;
    const std::size_t l = spec.context_length;
    for (std::size_t j = 0; j < spec.horizon; ++j) {
        const std::size_t src = l - s + (j % s);
        for (std::size_t c = 0; c < spec.channels; ++c) out(j, c) = x(src, c);
    }
}

// Accumulates dL/dparams for one channel given dL/dout.
void linear_backward(const LinearTrace& trace, std::span<const double> dout, ParamArrays& g) {
    const std::size_t l = trace.trend.size();
    for (std::size_t j = 0; j < dout.size(); ++j) {
        const double d = dout[j];
        if (d == 0.0) continue;
        double* gt = g[0].data() + j * l;
        double* gr = g[2].data() + j * l;
        for (std::size_t i = 0; i < l; ++i) {
            gt[i] += d * trace.trend[i];
            gr[i] += d * trace.remainder[i];
        }
        g[1][j] += d;
        g[3][j] += d;
    }
}

void mlp_backward(const Checkpoint& ckpt, const MlpTrace& trace, std::span<const double> dout,
                  ParamArrays& g) {
    const std::size_t layers = ckpt.params.size() / 2;
    std::vector<double> delta(dout.begin(), dout.end());
    for (std::size_t k = layers; k-- > 0;) {
        const auto& in = trace.activations[k];
        const std::size_t n_in = in.size();
        double* gw = g[2 * k].data();
        double* gb = g[2 * k + 1].data();
        for (std::size_t j = 0; j < delta.size(); ++j) {
            const double d = delta[j];
            if (d == 0.0) continue;
            gb[j] += d;
            double* row = gw + j * n_in;
            for (std::size_t i = 0; i < n_in; ++i) row[i] += d * in[i];
        }
        if (k == 0) break;
        const auto& w = ckpt.params[2 * k].values;
        std::vector<double> prev(n_in, 0.0);
        for (std::size_t j = 0; j < delta.size(); ++j) {
            const double d = delta[j];
            if (d == 0.0) continue;
            const double* row = w.data() + j * n_in;
            for (std::size_t i = 0; i < n_in; ++i) prev[i] += d * row[i];
        }
        // ReLU derivative: post-activation zero means the unit was inactive.
        for (std::size_t i = 0; i < n_in; ++i) {
            if (in[i] <= 0.0) prev[i] = 0.0;
        }
        delta = std::move(prev);
    }
}

}  // namespace

Matrix predict(const Checkpoint& ckpt, MatrixView context) {
    const auto& spec = ckpt.spec;
    check_context(spec, context);
    Matrix out(spec.horizon, spec.channels);
    if (spec.kind == ModelKind::naive_seasonal) {
        naive_forward(spec, context, out);
        return out;
    }
    check_layout(ckpt);
    std::vector<double> y(spec.horizon);
    LinearTrace lt;
    MlpTrace mt;
    for (std::size_t c = 0; c < spec.channels; ++c) {
        const auto x = column(context, c);
        if (spec.kind == ModelKind::linear_direct) {
            linear_forward(ckpt, x, y, lt);
        } else {
            mlp_forward(ckpt, x, y, mt);
        }
        for (std::size_t j = 0; j < spec.horizon; ++j) out(j, c) = y[j];
    }
    return out;
}

GradResult grad(const Checkpoint& ckpt, std::span<const data::Sample> batch) {
    const auto& spec = ckpt.spec;
    if (!ckpt.trainable()) throw ModelError("model not trainable");
    if (batch.empty()) throw ModelError("grad: empty batch");
    check_layout(ckpt);

    GradResult result;
    for (const auto& p : ckpt.params) result.grads.emplace_back(p.values.size(), 0.0);

    const double scale =
        1.0 / static_cast<double>(batch.size() * spec.horizon * spec.channels);
    std::vector<double> y(spec.horizon);
    std::vector<double> dout(spec.horizon);
    LinearTrace lt;
    MlpTrace mt;
    long double sse = 0.0L;
    for (const auto& sample : batch) {
        check_context(spec, sample.context);
        check_target(spec, sample.target);
        for (std::size_t c = 0; c < spec.channels; ++c) {
            const auto x = column(sample.context, c);
            if (spec.kind == ModelKind::linear_direct) {
                linear_forward(ckpt, x, y, lt);
            } else {
                mlp_forward(ckpt, x, y, mt);
            }
            for (std::size_t j = 0; j < spec.horizon; ++j) {
                const double err = y[j] - sample.target(j, c);
                sse += static_cast<long double>(err) * err;
                dout[j] = 2.0 * err * scale;
            }
            if (spec.kind == ModelKind::linear_direct) {
                linear_backward(lt, dout, result.grads);
            } else {
                mlp_backward(ckpt, mt, dout, result.grads);
            }
        }
    }
    result.loss = static_cast<double>(sse) * scale;
    return result;
}

double loss(const Checkpoint& ckpt, std::span<const data::Sample> batch) {
    if (batch.empty()) throw ModelError("loss: empty batch");
    long double sse = 0.0L;
    for (const auto& sample : batch) {
        check_target(ckpt.spec, sample.target);
        const Matrix y = predict(ckpt, sample.context);
        for (std::size_t j = 0; j < y.rows(); ++j) {
            for (std::size_t c = 0; c < y.cols(); ++c) {
                const double err = y(j, c) - sample.target(j, c);
                sse += static_cast<long double>(err) * err;
            }
        }
    }
    return static_cast<double>(
        sse / static_cast<long double>(batch.size() * ckpt.spec.horizon * ckpt.spec.channels));
}

ParamArrays param_values(const Checkpoint& ckpt) {
    ParamArrays out;
    out.reserve(ckpt.params.size());
    for (const auto& p : ckpt.params) out.push_back(p.values);
    return out;
}

Checkpoint with_params(const Checkpoint& ckpt, ParamArrays values) {
    if (values.size() != ckpt.params.size()) {
        throw ModelError("with_params: " + std::to_string(values.size()) + " arrays for " +
                         std::to_string(ckpt.params.size()) + " params");
    }
    Checkpoint out = ckpt;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i].size() != out.params[i].values.size()) {
            throw ModelError("with_params: array '" + out.params[i].name + "' is not congruent");
        }
        out.params[i].values = std::move(values[i]);
    }
    return out;
}

}  // namespace tplas::models
