#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tplas/core/types.hpp"
#include "tplas/data/dataset.hpp"
#include "tplas/data/window.hpp"

namespace tplas::metrics {

/// Maps a batch of l x C contexts to h x C forecasts.
using BatchPredictor = std::function<std::vector<Matrix>(std::span<const MatrixView>)>;

BatchPredictor predictor_for(const Checkpoint& ckpt);

/// Mean squared error over every window, horizon step and channel of `windows`.
/// Throws DataError when there are no windows.
double mse_eval(const BatchPredictor& predictor, const data::WindowSet& windows);
double mse_eval(const Checkpoint& ckpt, const data::WindowSet& windows);

struct MomentReport {
    std::size_t n = 0;
    double e_y2 = 0.0;
    double e_yhaty = 0.0;
    double e_yhat2 = 0.0;
    double mse_exact = 0.0;
    double mu_hat = 0.0;
    double sigma2_hat = 0.0;
    double mean_y = 0.0;
    /// 1 + sigma2_hat + mu_hat^2: the MSE predicted for N(0,1) targets independent of forecasts.
    double independence_approx = 0.0;
    /// |mse_exact - independence_approx|.
    double assumption_gap = 0.0;
    /// 2 * (e_yhaty - mu_hat * mean_y): the cross term independence drops.
    double covariance_term = 0.0;
};

/// Exact sample moments of paired forecasts/targets. Throws std::invalid_argument if n < 2
/// or the spans differ in length.
MomentReport moment_decomposition(std::span<const double> forecasts,
                                  std::span<const double> targets);

/// Fills the ratio rows of `table`: per (model, p), r_zero = inc/zero, r_full = inc/full,
/// r_fz = full/zero. A ratio is absent unless both constituents exist.
MetricsTable ratio_metrics(MetricsTable table);

struct ForgettingMatrix {
    /// rows[p][q] for q <= p: MSE after round p on partition q's test windows.
    std::vector<std::vector<double>> rows;
    /// forgetting[p]: mean_{q<p} F[p][q] > F[p][p]. Always false for p = 0.
    std::vector<bool> forgetting;

    double at(std::size_t p, std::size_t q) const { return rows.at(p).at(q); }
};

ForgettingMatrix forgetting_matrix(std::span<const BatchPredictor> rounds,
                                   const data::PartitionedSeries& data);
ForgettingMatrix forgetting_matrix(std::span<const Checkpoint> rounds,
                                   const data::PartitionedSeries& data);

struct PlasticityTrend {
    double slope = 0.0;
    std::vector<std::size_t> spike_indices;
};

inline constexpr double kDefaultSpikeFactor = 2.0;

/// OLS slope of r_p against p over defined values; p is a spike when
/// r_p > spike_factor * median of the defined values before it (at least two required).
/// Throws std::invalid_argument with fewer than three defined values.
PlasticityTrend plasticity_trend(std::span<const std::optional<double>> r_values,
                                 double spike_factor = kDefaultSpikeFactor);
PlasticityTrend plasticity_trend(std::span<const double> r_values,
                                 double spike_factor = kDefaultSpikeFactor);

}  // namespace tplas::metrics
