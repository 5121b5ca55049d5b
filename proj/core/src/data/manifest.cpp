#include "tplas/data/manifest.hpp"

#include <nlohmann/json.hpp>

#include "tplas/core/checksum.hpp"

namespace tplas::data {

DatasetManifest make_manifest(const TimeSeries& series, std::string name, DataSource source) {
    return {std::move(name),
            series.channels(),
            series.length(),
            series.interval_seconds(),
            source,
            hex32(crc32_of(std::span<const double>(series.values().values())))};
}

std::string synthetic_manifest_json(const DatasetManifest& manifest, const ShiftScript& script,
                                    std::size_t partitions, std::uint64_t seed,
                                    const std::vector<EventRecord>& events) {
    nlohmann::ordered_json doc;
    doc["name"] = manifest.name;
    doc["source"] = manifest.source == DataSource::csv ? "csv" : "synthetic";
    doc["T"] = manifest.length;
    doc["C"] = manifest.channels;
    doc["P"] = partitions;
    doc["interval_seconds"] = manifest.interval_seconds;
    doc["checksum"] = manifest.checksum;
    doc["seed"] = seed;

    nlohmann::ordered_json base;
    base["ar"] = script.base.ar;
    base["period"] = script.base.period;
    base["amplitude"] = script.base.amplitude;
    base["noise_std"] = script.base.noise_std;
    nlohmann::ordered_json scripted = nlohmann::ordered_json::array();
    for (const auto& ev : script.events) {
        scripted.push_back(
            {{"at_partition", ev.at_partition}, {"kind", to_string(ev.kind)}, {"magnitude", ev.magnitude}});
    }
    doc["script"] = {{"base", base}, {"events", scripted}};

    nlohmann::ordered_json log = nlohmann::ordered_json::array();
    for (const auto& ev : events) {
        log.push_back({{"partition", ev.partition},
                       {"kind", to_string(ev.kind)},
                       {"magnitude", ev.magnitude},
                       {"step", ev.step}});
    }
    doc["events"] = log;
    return doc.dump(2) + "\n";
}

}  // namespace tplas::data
