#pragma once

#include "tplas/core/diagnostics.hpp"
#include "tplas/core/types.hpp"

namespace tplas::data {

inline constexpr double kStdFloor = 1e-8;

/// Per-channel mean and population std over `range`. A std below kStdFloor is floored and
/// reported in `diag`.
NormStats fit_norm(const TimeSeries& series, Range range, Diagnostics* diag = nullptr);
NormStats fit_norm(MatrixView rows, Diagnostics* diag = nullptr);

Matrix apply_norm(MatrixView values, const NormStats& stats);
TimeSeries apply_norm(const TimeSeries& series, const NormStats& stats);
WindowSample apply_norm(const WindowSample& window, const NormStats& stats);

Matrix invert_norm(MatrixView values, const NormStats& stats);

}  // namespace tplas::data
