#pragma once

// Test-side reference implementations. They share no code with the library beyond the
// Checkpoint/Sample data types, and compute in long double where precision matters.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "tplas/core/types.hpp"
#include "tplas/data/window.hpp"

namespace oracle {

using LD = long double;
using Params = std::vector<std::vector<LD>>;

inline Params params_of(const tplas::Checkpoint& ckpt) {
    Params out;
    for (const auto& p : ckpt.params) out.emplace_back(p.values.begin(), p.values.end());
    return out;
}

/// Smallest |pre-activation| seen in any hidden unit, for rejecting draws near ReLU kinks.
struct ForwardStats {
    LD min_abs_preact = INFINITY;
};

/// Per-channel forecast of one context column, straight from the model definitions.
inline std::vector<LD> forward_channel(const tplas::ForecasterSpec& spec, const Params& w,
                                       const std::vector<LD>& x, ForwardStats* stats = nullptr) {
    const std::size_t l = spec.context_length;
    const std::size_t h = spec.horizon;
    std::vector<LD> y(h, 0.0L);
    switch (spec.kind) {
        case tplas::ModelKind::naive_seasonal: {
            const std::size_t s = spec.season_length;
            for (std::size_t i = 0; i < h; ++i) y[i] = x[l - s + i % s];
            break;
        }
        case tplas::ModelKind::linear_direct: {
            const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(spec.kernel_size / 2);
            std::vector<LD> trend(l), rem(l);
            for (std::size_t t = 0; t < l; ++t) {
                LD acc = 0;
                for (std::ptrdiff_t d = -half; d <= half; ++d) {
                    const auto idx = std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(t) + d, 0,
                                                                static_cast<std::ptrdiff_t>(l) - 1);
                    acc += x[static_cast<std::size_t>(idx)];
                }
                trend[t] = acc / static_cast<LD>(spec.kernel_size);
                rem[t] = x[t] - trend[t];
            }
            for (std::size_t i = 0; i < h; ++i) {
                LD acc = w[1][i] + w[3][i];
                for (std::size_t t = 0; t < l; ++t) {
                    acc += w[0][i * l + t] * trend[t] + w[2][i * l + t] * rem[t];
                }
                y[i] = acc;
            }
            break;
        }
        case tplas::ModelKind::mlp: {
            std::vector<LD> a = x;
            const std::size_t layers = w.size() / 2;
            for (std::size_t k = 0; k < layers; ++k) {
                const auto& W = w[2 * k];
                const auto& b = w[2 * k + 1];
                const std::size_t out = b.size();
                const std::size_t in = a.size();
                std::vector<LD> z(out);
                for (std::size_t o = 0; o < out; ++o) {
                    LD acc = b[o];
                    for (std::size_t i = 0; i < in; ++i) acc += W[o * in + i] * a[i];
                    z[o] = acc;
                }
                if (k + 1 < layers) {
                    for (auto& v : z) {
                        if (stats) stats->min_abs_preact = std::min(stats->min_abs_preact, std::fabs(v));
                        v = v > 0 ? v : 0;
                    }
                }
                a = std::move(z);
            }
            y = a;
            break;
        }
    }
    return y;
}

/// L = (1 / (B h C)) * sum of squared errors.
inline LD loss(const tplas::ForecasterSpec& spec, const Params& w,
               std::span<const tplas::data::Sample> batch, ForwardStats* stats = nullptr) {
    LD total = 0;
    std::size_t count = 0;
    for (const auto& s : batch) {
        for (std::size_t c = 0; c < s.context.cols(); ++c) {
            std::vector<LD> x(s.context.rows());
            for (std::size_t t = 0; t < x.size(); ++t) x[t] = s.context(t, c);
            const auto y = forward_channel(spec, w, x, stats);
            for (std::size_t i = 0; i < y.size(); ++i) {
                const LD e = y[i] - s.target(i, c);
                total += e * e;
                ++count;
            }
        }
    }
    return total / static_cast<LD>(count);
}

/// Central finite differences of `loss` with respect to every parameter.
inline std::vector<std::vector<double>> numeric_grad(const tplas::ForecasterSpec& spec,
                                                     const Params& w,
                                                     std::span<const tplas::data::Sample> batch,
                                                     LD step = 1e-5L) {
    std::vector<std::vector<double>> g(w.size());
    Params probe = w;
    for (std::size_t a = 0; a < w.size(); ++a) {
        g[a].resize(w[a].size());
        for (std::size_t k = 0; k < w[a].size(); ++k) {
            probe[a][k] = w[a][k] + step;
            const LD up = loss(spec, probe, batch);
            probe[a][k] = w[a][k] - step;
            const LD down = loss(spec, probe, batch);
            probe[a][k] = w[a][k];
            g[a][k] = static_cast<double>((up - down) / (2 * step));
        }
    }
    return g;
}

/// Least squares over the affine family y_j = w_j . x + b_j, pooled over (window, channel).
/// Returns the minimum attainable mean squared error and the fitted [w | b] per output step.
struct LeastSquares {
    double mse = 0.0;
    Eigen::MatrixXd coef;  // h x (l + 1)
};

inline LeastSquares least_squares(std::span<const tplas::data::Sample> samples) {
    const std::size_t l = samples.front().context.rows();
    const std::size_t h = samples.front().target.rows();
    const std::size_t C = samples.front().context.cols();
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size() * C);
    Eigen::MatrixXd X(n, static_cast<Eigen::Index>(l + 1));
    Eigen::MatrixXd Y(n, static_cast<Eigen::Index>(h));
    Eigen::Index r = 0;
    for (const auto& s : samples) {
        for (std::size_t c = 0; c < C; ++c, ++r) {
            for (std::size_t t = 0; t < l; ++t) X(r, static_cast<Eigen::Index>(t)) = s.context(t, c);
            X(r, static_cast<Eigen::Index>(l)) = 1.0;
            for (std::size_t i = 0; i < h; ++i) Y(r, static_cast<Eigen::Index>(i)) = s.target(i, c);
        }
    }
    const Eigen::MatrixXd B = X.colPivHouseholderQr().solve(Y);
    const Eigen::MatrixXd resid = X * B - Y;
    LeastSquares out;
    out.mse = resid.squaredNorm() / static_cast<double>(resid.size());
    out.coef = B.transpose();
    return out;
}

/// Largest eigenvalue of the mean outer product of [x, 1] feature rows.
inline double feature_gram_max_eig(std::span<const tplas::data::Sample> samples) {
    const std::size_t l = samples.front().context.rows();
    const std::size_t C = samples.front().context.cols();
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(l + 1),
                                              static_cast<Eigen::Index>(l + 1));
    Eigen::VectorXd z(static_cast<Eigen::Index>(l + 1));
    for (const auto& s : samples) {
        for (std::size_t c = 0; c < C; ++c) {
            for (std::size_t t = 0; t < l; ++t) z(static_cast<Eigen::Index>(t)) = s.context(t, c);
            z(static_cast<Eigen::Index>(l)) = 1.0;
            G += z * z.transpose();
        }
    }
    G /= static_cast<double>(samples.size() * C);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    return es.eigenvalues().maxCoeff();
}

/// Mean squared error of paired values, long double accumulation.
inline double mse(std::span<const double> a, std::span<const double> b) {
    LD acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const LD d = static_cast<LD>(a[i]) - b[i];
        acc += d * d;
    }
    return static_cast<double>(acc / static_cast<LD>(a.size()));
}

/// Median of a copy of `v`.
inline double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
