#include "tplas/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tplas/models/forecaster.hpp"

namespace tplas::metrics {

BatchPredictor predictor_for(const Checkpoint& ckpt) {
    return [&ckpt](std::span<const MatrixView> contexts) {
        std::vector<Matrix> out;
        out.reserve(contexts.size());
        for (const auto& x : contexts) out.push_back(models::predict(ckpt, x));
        return out;
    };
}

double mse_eval(const BatchPredictor& predictor, const data::WindowSet& windows) {
    if (windows.empty()) throw DataError("mse_eval: no test windows");
    constexpr std::size_t kChunk = 256;
    long double sse = 0.0L;
    std::size_t count = 0;
    std::vector<MatrixView> contexts;
    for (std::size_t first = 0; first < windows.size(); first += kChunk) {
        const std::size_t last = std::min(windows.size(), first + kChunk);
        contexts.clear();
        for (std::size_t k = first; k < last; ++k) contexts.push_back(windows[k].context);
        const auto forecasts = predictor(contexts);
        if (forecasts.size() != contexts.size()) {
            throw std::runtime_error("predictor returned " + std::to_string(forecasts.size()) +
                                     " forecasts for " + std::to_string(contexts.size()) +
                                     " contexts");
        }
        for (std::size_t k = first; k < last; ++k) {
            const auto target = windows[k].target;
            const auto& yhat = forecasts[k - first];
            if (yhat.rows() != target.rows() || yhat.cols() != target.cols()) {
                throw std::runtime_error("forecast shape does not match target shape");
            }
            for (std::size_t i = 0; i < target.size(); ++i) {
                const double err = yhat.data()[i] - target.data()[i];
                if (!std::isfinite(err)) throw std::runtime_error("non-finite forecast");
                sse += static_cast<long double>(err) * err;
            }
            count += target.size();
        }
    }
    return static_cast<double>(sse / static_cast<long double>(count));
}

double mse_eval(const Checkpoint& ckpt, const data::WindowSet& windows) {
    return mse_eval(predictor_for(ckpt), windows);
}

MomentReport moment_decomposition(std::span<const double> forecasts,
                                  std::span<const double> targets) {
    if (forecasts.size() != targets.size()) {
        throw std::invalid_argument("moment_decomposition: forecasts and targets differ in length");
    }
    if (forecasts.size() < 2) throw std::invalid_argument("moment_decomposition: need n >= 2");
    const auto n = static_cast<long double>(forecasts.size());
    long double sy2 = 0, syy = 0, sy2hat = 0, sse = 0, syhat = 0, sy = 0;
    for (std::size_t i = 0; i < forecasts.size(); ++i) {
        const long double yh = forecasts[i];
        const long double y = targets[i];
        sy2 += y * y;
        syy += yh * y;
        sy2hat += yh * yh;
        sse += (yh - y) * (yh - y);
        syhat += yh;
        sy += y;
    }
    MomentReport r;
    r.n = forecasts.size();
    r.e_y2 = static_cast<double>(sy2 / n);
    r.e_yhaty = static_cast<double>(syy / n);
    r.e_yhat2 = static_cast<double>(sy2hat / n);
    r.mse_exact = static_cast<double>(sse / n);
    r.mu_hat = static_cast<double>(syhat / n);
    r.mean_y = static_cast<double>(sy / n);
    long double var = 0;
    for (double yh : forecasts) {
        const long double d = yh - static_cast<long double>(r.mu_hat);
        var += d * d;
    }
    r.sigma2_hat = static_cast<double>(var / n);
    r.independence_approx = 1.0 + r.sigma2_hat + r.mu_hat * r.mu_hat;
    r.assumption_gap = std::abs(r.mse_exact - r.independence_approx);
    r.covariance_term = 2.0 * (r.e_yhaty - r.mu_hat * r.mean_y);
    return r;
}

MetricsTable ratio_metrics(MetricsTable table) {
    std::vector<RatioRow> rows;
    for (const auto& id : table.model_ids()) {
        std::map<std::size_t, bool> ps;
        for (const auto& r : table.rows()) {
            if (r.model_id == id) ps[r.p] = true;
        }
        for (const auto& [p, _] : ps) {
            const auto inc = table.find(id, Regime::incremental, p);
            const auto zero = table.find(id, Regime::zero, p);
            const auto full = table.find(id, Regime::full, p);
            RatioRow row{id, p, std::nullopt, std::nullopt, std::nullopt};
            if (inc && zero) row.r_zero = Ratio{*inc, *zero};
            if (inc && full) row.r_full = Ratio{*inc, *full};
            if (full && zero) row.r_fz = Ratio{*full, *zero};
            if (row.r_zero || row.r_full || row.r_fz) rows.push_back(std::move(row));
        }
    }
    table.set_ratio_rows(std::move(rows));
    return table;
}

ForgettingMatrix forgetting_matrix(std::span<const BatchPredictor> rounds,
                                   const data::PartitionedSeries& data) {
    if (rounds.size() > data.count()) {
        throw std::invalid_argument("forgetting_matrix: more rounds than partitions");
    }
    ForgettingMatrix fm;
    for (std::size_t p = 0; p < rounds.size(); ++p) {
        std::vector<double> row;
        for (std::size_t q = 0; q <= p; ++q) {
            row.push_back(mse_eval(rounds[p], data.windows(q, Split::test)));
        }
        bool forgets = false;
        if (p > 0) {
            double mean_old = 0.0;
            for (std::size_t q = 0; q < p; ++q) mean_old += row[q];
            mean_old /= static_cast<double>(p);
            forgets = mean_old > row[p];
        }
        fm.rows.push_back(std::move(row));
        fm.forgetting.push_back(forgets);
    }
    return fm;
}

ForgettingMatrix forgetting_matrix(std::span<const Checkpoint> rounds,
                                   const data::PartitionedSeries& data) {
    std::vector<BatchPredictor> predictors;
    for (const auto& ckpt : rounds) predictors.push_back(predictor_for(ckpt));
    return forgetting_matrix(predictors, data);
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

PlasticityTrend plasticity_trend(std::span<const std::optional<double>> r_values,
                                 double spike_factor) {
    std::vector<double> xs;
    std::vector<double> ys;
    for (std::size_t p = 0; p < r_values.size(); ++p) {
        if (r_values[p]) {
            xs.push_back(static_cast<double>(p));
            ys.push_back(*r_values[p]);
        }
    }
    if (xs.size() < 3) {
        throw std::invalid_argument("plasticity_trend: need at least 3 defined values, got " +
                                    std::to_string(xs.size()));
    }
    const auto n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    PlasticityTrend trend;
    trend.slope = sxy / sxx;

    std::vector<double> prior;
    for (std::size_t p = 0; p < r_values.size(); ++p) {
        if (!r_values[p]) continue;
        if (prior.size() >= 2 && *r_values[p] > spike_factor * median(prior)) {
            trend.spike_indices.push_back(p);
        }
        prior.push_back(*r_values[p]);
    }
    return trend;
}

PlasticityTrend plasticity_trend(std::span<const double> r_values, double spike_factor) {
    std::vector<std::optional<double>> values(r_values.begin(), r_values.end());
    return plasticity_trend(values, spike_factor);
}

}  // namespace tplas::metrics
