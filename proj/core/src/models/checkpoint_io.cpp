#include "tplas/models/checkpoint_io.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "tplas/core/checksum.hpp"
#include "tplas/models/forecaster.hpp"

namespace tplas::models {

using json = nlohmann::ordered_json;

namespace {

constexpr std::string_view kTrailer = "\ncrc32 ";

json spec_to_json(const ForecasterSpec& spec) {
    json j;
    j["kind"] = to_string(spec.kind);
    j["context_length"] = spec.context_length;
    j["horizon"] = spec.horizon;
    j["channels"] = spec.channels;
    j["season_length"] = spec.season_length;
    j["kernel_size"] = spec.kernel_size;
    j["hidden"] = spec.hidden;
    return j;
}

ForecasterSpec spec_from_json(const json& j) {
    ForecasterSpec spec;
    spec.kind = model_kind_from_string(j.at("kind").get<std::string>());
    spec.context_length = j.at("context_length").get<std::size_t>();
    spec.horizon = j.at("horizon").get<std::size_t>();
    spec.channels = j.at("channels").get<std::size_t>();
    spec.season_length = j.at("season_length").get<std::size_t>();
    spec.kernel_size = j.at("kernel_size").get<std::size_t>();
    spec.hidden = j.at("hidden").get<std::vector<std::size_t>>();
    return spec;
}

std::string body_of(const Checkpoint& ckpt) {
    json doc;
    doc["format_version"] = ckpt.format_version;
    doc["spec"] = spec_to_json(ckpt.spec);
    json prov;
    prov["regime"] = to_string(ckpt.provenance.regime);
    prov["partitions_seen"] = ckpt.provenance.partitions_seen;
    prov["seed"] = ckpt.provenance.seed;
    prov["epochs"] = ckpt.provenance.epochs;
    doc["provenance"] = prov;
    json params = json::array();
    for (const auto& p : ckpt.params) {
        json arr;
        arr["name"] = p.name;
        arr["shape"] = p.shape;
        arr["values"] = p.values;
        params.push_back(std::move(arr));
    }
    doc["params"] = std::move(params);
    return doc.dump();
}

// Name of the last param array that begins before byte `pos`, if any.
std::string array_at(const std::string& body, std::size_t pos) {
    constexpr std::string_view key = "\"name\":\"";
    const auto at = body.rfind(key, std::min(pos, body.size()));
    if (at == std::string::npos) return {};
    const auto start = at + key.size();
    const auto end = body.find('"', start);
    if (end == std::string::npos) return body.substr(start);
    return body.substr(start, end - start);
}

}  // namespace

std::string to_text(const Checkpoint& ckpt) {
    const std::string body = body_of(ckpt);
    return body + std::string(kTrailer) + hex32(crc32_of(body)) + "\n";
}

Checkpoint from_text(const std::string& text) {
    const auto trailer_at = text.rfind(kTrailer);
    const bool has_trailer = trailer_at != std::string::npos;
    const std::string body = has_trailer ? text.substr(0, trailer_at) : text;

    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::parse_error& e) {
        const auto name = array_at(body, e.byte);
        if (!name.empty()) {
            throw ModelError("checkpoint truncated or corrupt in array '" + name + "' (byte " +
                             std::to_string(e.byte) + ")");
        }
        throw ModelError(std::string("checkpoint is not valid JSON: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        ckpt.format_version = doc.at("format_version").get<int>();
        if (ckpt.format_version != kCheckpointFormatVersion) {
            throw ModelError("checkpoint format version " + std::to_string(ckpt.format_version) +
                             " is not supported (expected " +
                             std::to_string(kCheckpointFormatVersion) + ")");
        }
        ckpt.spec = spec_from_json(doc.at("spec"));
        const auto& prov = doc.at("provenance");
        ckpt.provenance.regime = regime_from_string(prov.at("regime").get<std::string>());
        ckpt.provenance.partitions_seen =
            prov.at("partitions_seen").get<std::vector<std::size_t>>();
        ckpt.provenance.seed = prov.at("seed").get<std::uint64_t>();
        ckpt.provenance.epochs = prov.at("epochs").get<std::size_t>();
        for (const auto& arr : doc.at("params")) {
            ckpt.params.push_back({arr.at("name").get<std::string>(),
                                   arr.at("shape").get<std::vector<std::size_t>>(),
                                   arr.at("values").get<std::vector<double>>()});
        }
    } catch (const json::exception& e) {
        throw ModelError(std::string("checkpoint has a malformed field: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ModelError(std::string("checkpoint has a malformed field: ") + e.what());
    }

    const auto layout = param_layout(ckpt.spec);
    if (layout.size() != ckpt.params.size()) {
        throw ModelError("checkpoint holds " + std::to_string(ckpt.params.size()) +
                         " param arrays, spec implies " + std::to_string(layout.size()));
    }
    for (std::size_t i = 0; i < layout.size(); ++i) {
        const auto& p = ckpt.params[i];
        if (p.name != layout[i].name || p.shape != layout[i].shape) {
            throw ModelError("checkpoint array " + std::to_string(i) + " is '" + p.name +
                             "', expected '" + layout[i].name + "' with matching shape");
        }
        if (p.values.size() != layout[i].size()) {
            throw ModelError("checkpoint array '" + p.name + "' has " +
                             std::to_string(p.values.size()) + " values, expected " +
                             std::to_string(layout[i].size()));
        }
    }

    if (!has_trailer) throw ModelError("checkpoint is missing its crc32 trailer");
    std::string stored = text.substr(trailer_at + kTrailer.size());
    while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
    // The checksum covers the canonical body, so re-serialize before comparing.
    const std::string expected = hex32(crc32_of(body_of(ckpt)));
    if (stored != expected || body != body_of(ckpt)) {
        throw ModelError("checkpoint checksum failure (stored " + stored + ", computed " +
                         expected + ")");
    }
    return ckpt;
}

void save(const Checkpoint& ckpt, const std::filesystem::path& path) {
    const std::string text = to_text(ckpt);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ModelError("cannot write checkpoint '" + tmp.string() + "'");
        out << text;
        if (!out) throw ModelError("failed writing checkpoint '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ModelError("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return from_text(buf.str());
    } catch (const ModelError& e) {
        throw ModelError(path.string() + ": " + e.what());
    }
}

std::string checksum(const Checkpoint& ckpt) { return hex32(crc32_of(body_of(ckpt))); }

}  // namespace tplas::models
