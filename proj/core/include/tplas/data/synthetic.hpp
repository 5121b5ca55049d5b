#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tplas/core/types.hpp"

namespace tplas::data {

enum class ShiftKind { mean_shift, variance_shift, period_shift, trend_break };

const char* to_string(ShiftKind kind);
ShiftKind shift_kind_from_string(const std::string& name);

/// Stationary regime each channel starts in: AR(1) noise around a sinusoidal season.
struct BaseProcess {
    std::vector<double> ar{0.5};  // one entry, broadcast to all channels, or one per channel
    double period = 24.0;
    double amplitude = 1.0;
    double noise_std = 1.0;
};

struct ShiftEvent {
    std::size_t at_partition = 0;
    ShiftKind kind = ShiftKind::mean_shift;
    double magnitude = 0.0;
};

struct ShiftScript {
    BaseProcess base;
    std::vector<ShiftEvent> events;
};

struct EventRecord {
    std::size_t partition = 0;
    ShiftKind kind = ShiftKind::mean_shift;
    double magnitude = 0.0;
    std::size_t step = 0;
};

struct SyntheticSeries {
    TimeSeries series;
    std::vector<EventRecord> events;
};

std::vector<std::string> validate_script(const ShiftScript& script, std::size_t channels,
                                         std::size_t partitions);

/// Deterministic in (script, T, C, P, seed). Each event takes effect at the first step of its
/// partition (partition boundaries as in make_partitions) and persists afterwards.
SyntheticSeries gen_synthetic(const ShiftScript& script, std::size_t length, std::size_t channels,
                              std::size_t partitions, std::uint64_t seed);

}  // namespace tplas::data
