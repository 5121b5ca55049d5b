#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tplas/core/types.hpp"

namespace tplas::data {

struct CsvSchema {
    /// Column holding timestamps; ignored for values. Its first cell becomes the series origin.
    std::optional<std::string> time_column;
    /// Value columns in output order. Empty selects every non-time column in file order.
    std::vector<std::string> value_columns;
    char delimiter = ',';
    double interval_seconds = 1.0;
};

/// Reads a headed CSV into a TimeSeries. Errors cite (data row, value column), both 1-based.
TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});

/// Writes `series` with a leading "step" column, values at round-trip precision.
void write_csv(const TimeSeries& series, const std::filesystem::path& path, char delimiter = ',');

}  // namespace tplas::data
