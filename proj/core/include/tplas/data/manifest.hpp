#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>

#include "tplas/core/types.hpp"
#include "tplas/data/synthetic.hpp"

namespace tplas::data {

enum class DataSource { csv, synthetic };

struct DatasetManifest {
    std::string name;
    std::size_t channels = 0;
    std::size_t length = 0;
    double interval_seconds = 1.0;
    DataSource source = DataSource::csv;
    std::string checksum;  // crc32 of the raw value buffer, hex

    bool operator==(const DatasetManifest&) const = default;
};

DatasetManifest make_manifest(const TimeSeries& series, std::string name, DataSource source);

/// JSON document stored next to a generated CSV: manifest, script echo, seed and event log.
std::string synthetic_manifest_json(const DatasetManifest& manifest, const ShiftScript& script,
                                    std::size_t partitions, std::uint64_t seed,
                                    const std::vector<EventRecord>& events);

}  // namespace tplas::data
