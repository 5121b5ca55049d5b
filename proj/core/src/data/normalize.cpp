#include "tplas/data/normalize.hpp"

#include <cmath>
#include <sstream>

namespace tplas::data {

NormStats fit_norm(MatrixView rows, Diagnostics* diag) {
    if (rows.rows() == 0) throw DataError("fit_norm: empty range");
    const std::size_t n = rows.rows();
    const std::size_t channels = rows.cols();
    NormStats stats{std::vector<double>(channels, 0.0), std::vector<double>(channels, 0.0)};
    for (std::size_t c = 0; c < channels; ++c) {
        long double sum = 0.0L;
        for (std::size_t t = 0; t < n; ++t) sum += rows(t, c);
        const double mean = static_cast<double>(sum / static_cast<long double>(n));
        long double sq = 0.0L;
        for (std::size_t t = 0; t < n; ++t) {
            const long double d = rows(t, c) - mean;
            sq += d * d;
        }
        double sd = static_cast<double>(std::sqrt(sq / static_cast<long double>(n)));
        if (sd < kStdFloor) {
            if (diag) {
                std::ostringstream msg;
                msg << "channel " << c << " is constant over the fit range (std " << sd
                    << "); std floored to " << kStdFloor;
                diag->warn(msg.str());
            }
            sd = kStdFloor;
        }
        stats.mean[c] = mean;
        stats.std[c] = sd;
    }
    return stats;
}

NormStats fit_norm(const TimeSeries& series, Range range, Diagnostics* diag) {
    if (range.empty()) throw DataError("fit_norm: empty range");
    if (range.end > series.length()) throw DataError("fit_norm: range ends past the series");
    return fit_norm(series.values().row_block(range.begin, range.size()), diag);
}

namespace {
void check_width(std::size_t cols, const NormStats& stats) {
    if (stats.mean.size() != cols || stats.std.size() != cols) {
        throw DataError("normalization stats cover " + std::to_string(stats.mean.size()) +
                        " channels, data has " + std::to_string(cols));
    }
}
}  // namespace

Matrix apply_norm(MatrixView values, const NormStats& stats) {
    check_width(values.cols(), stats);
    Matrix out(values.rows(), values.cols());
    for (std::size_t t = 0; t < values.rows(); ++t) {
        for (std::size_t c = 0; c < values.cols(); ++c) {
            out(t, c) = (values(t, c) - stats.mean[c]) / stats.std[c];
        }
    }
    return out;
}

TimeSeries apply_norm(const TimeSeries& series, const NormStats& stats) {
    return TimeSeries(apply_norm(series.values().view(), stats), series.channel_names(),
                      series.interval_seconds(), series.origin());
}

WindowSample apply_norm(const WindowSample& window, const NormStats& stats) {
    return {apply_norm(window.context.view(), stats), apply_norm(window.target.view(), stats),
            window.anchor};
}

Matrix invert_norm(MatrixView values, const NormStats& stats) {
    check_width(values.cols(), stats);
    Matrix out(values.rows(), values.cols());
    for (std::size_t t = 0; t < values.rows(); ++t) {
        for (std::size_t c = 0; c < values.cols(); ++c) {
            out(t, c) = values(t, c) * stats.std[c] + stats.mean[c];
        }
    }
    return out;
}

}  // namespace tplas::data
