#include "tplas/runner/config.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tplas/data/partition.hpp"
#include "tplas/data/window.hpp"
#include "tplas/models/checkpoint_io.hpp"
#include "tplas/models/forecaster.hpp"

namespace tplas::runner {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({"cannot read '" + path.string() + "'"});
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// Collects schema findings while reading a JSON object, so one pass reports every problem.
class Reader {
public:
    Reader(std::vector<std::string>& findings, const json& obj, std::string where,
           std::set<std::string> allowed)
        : findings_(findings), obj_(obj), where_(std::move(where)) {
        if (!obj_.is_object()) {
            findings_.push_back(where_ + ": expected an object");
            return;
        }
        for (const auto& [key, _] : obj_.items()) {
            if (!allowed.count(key)) findings_.push_back(where_ + ": unknown key '" + key + "'");
        }
    }

    bool has(const char* key) const { return obj_.is_object() && obj_.contains(key); }
    const json& at(const char* key) const { return obj_.at(key); }
    std::string path(const char* key) const { return where_ + "." + key; }

    template <class T>
    void read(const char* key, T& out, bool required = false) {
        if (!has(key)) {
            if (required) findings_.push_back(where_ + ": missing required key '" + key + "'");
            return;
        }
        try {
            out = obj_.at(key).get<T>();
        } catch (const json::exception&) {
            findings_.push_back(path(key) + ": wrong type");
        }
    }

    void problem(const std::string& what) { findings_.push_back(where_ + ": " + what); }

private:
    std::vector<std::string>& findings_;
    const json& obj_;
    std::string where_;
};

std::vector<double> ar_from(const json& j) {
    if (j.is_number()) return {j.get<double>()};
    return j.get<std::vector<double>>();
}

data::ShiftScript read_script(const json& j, const std::string& where,
                              std::vector<std::string>& findings) {
    data::ShiftScript script;
    Reader r(findings, j, where, {"base", "events"});
    if (r.has("base")) {
        const auto& b = r.at("base");
        Reader rb(findings, b, r.path("base"), {"ar", "period", "amplitude", "noise_std"});
        if (rb.has("ar")) {
            try {
                script.base.ar = ar_from(b.at("ar"));
            } catch (const json::exception&) {
                rb.problem("ar must be a number or a list of numbers");
            }
        }
        rb.read("period", script.base.period);
        rb.read("amplitude", script.base.amplitude);
        rb.read("noise_std", script.base.noise_std);
    }
    if (r.has("events")) {
        const auto& ev = r.at("events");
        if (!ev.is_array()) {
            r.problem("events must be a list");
        } else {
            for (std::size_t i = 0; i < ev.size(); ++i) {
                Reader re(findings, ev[i], r.path("events") + "[" + std::to_string(i) + "]",
                          {"at_partition", "kind", "magnitude"});
                data::ShiftEvent e;
                std::string kind;
                re.read("at_partition", e.at_partition, true);
                re.read("kind", kind, true);
                re.read("magnitude", e.magnitude, true);
                if (!kind.empty()) {
                    try {
                        e.kind = data::shift_kind_from_string(kind);
                    } catch (const std::exception& ex) {
                        re.problem(ex.what());
                    }
                }
                script.events.push_back(e);
            }
        }
    }
    return script;
}

data::CsvSchema read_schema(Reader& r, std::vector<std::string>& findings) {
    data::CsvSchema schema;
    std::string time_column;
    r.read("time_column", time_column);
    if (!time_column.empty()) schema.time_column = time_column;
    r.read("value_columns", schema.value_columns);
    std::string delim = ",";
    r.read("delimiter", delim);
    if (delim.size() != 1) {
        r.problem("delimiter must be a single character");
    } else {
        schema.delimiter = delim[0];
    }
    r.read("interval_seconds", schema.interval_seconds);
    (void)findings;
    return schema;
}

DatasetSource read_source(const json& j, const std::string& where, const fs::path& base,
                          std::vector<std::string>& findings) {
    Reader r(findings, j, where, {"csv", "synthetic"});
    if (r.has("csv") == r.has("synthetic")) {
        r.problem("exactly one of 'csv' or 'synthetic' is required");
        return SyntheticSource{};
    }
    if (r.has("csv")) {
        const auto& c = r.at("csv");
        Reader rc(findings, c, r.path("csv"),
                  {"path", "time_column", "value_columns", "delimiter", "interval_seconds"});
        CsvSource src;
        std::string path;
        rc.read("path", path, true);
        src.path = fs::path(path).is_absolute() ? fs::path(path) : base / path;
        src.schema = read_schema(rc, findings);
        return src;
    }
    const auto& s = r.at("synthetic");
    Reader rs(findings, s, r.path("synthetic"),
              {"length", "channels", "seed", "partitions", "script"});
    SyntheticSource src;
    rs.read("length", src.length, true);
    rs.read("channels", src.channels);
    rs.read("seed", src.seed);
    std::size_t parts = 0;
    rs.read("partitions", parts);
    if (parts) src.partitions = parts;
    if (rs.has("script")) src.script = read_script(s.at("script"), rs.path("script"), findings);
    return src;
}

training::TrainConfig read_train(const json& j, const std::string& where,
                                 training::TrainConfig cfg, std::vector<std::string>& findings) {
    Reader r(findings, j, where,
             {"epochs", "batch_size", "lr", "shuffle", "optimizer", "beta1", "beta2", "eps",
              "weight_decay"});
    r.read("epochs", cfg.epochs);
    r.read("batch_size", cfg.batch_size);
    r.read("lr", cfg.lr);
    r.read("shuffle", cfg.shuffle);
    std::string opt;
    r.read("optimizer", opt);
    if (!opt.empty()) {
        try {
            cfg.optimizer = training::optimizer_from_string(opt);
        } catch (const std::exception& e) {
            r.problem(e.what());
        }
    }
    r.read("beta1", cfg.beta1);
    r.read("beta2", cfg.beta2);
    r.read("eps", cfg.eps);
    r.read("weight_decay", cfg.weight_decay);
    return cfg;
}

plugin::Capabilities read_caps(const json& j, const std::string& where,
                               std::vector<std::string>& findings) {
    Reader r(findings, j, where, {"trainable", "max_horizon", "max_context", "channels"});
    try {
        return plugin::decode_capabilities(j);
    } catch (const plugin::PluginError& e) {
        r.problem(e.what());
        return {};
    }
}

ModelEntry read_model(const json& j, std::size_t index, const ExperimentConfig& cfg,
                      const fs::path& base, std::vector<std::string>& findings) {
    const std::string where = "models[" + std::to_string(index) + "]";
    Reader r(findings, j, where,
             {"id", "kind", "season_length", "kernel_size", "hidden", "horizon", "pretrained",
              "plugin"});
    ModelEntry m;
    r.read("id", m.id);
    m.context_length = cfg.context_length;
    m.horizon = cfg.horizon;
    r.read("horizon", m.horizon);
    if (r.has("plugin") == r.has("kind")) {
        r.problem("exactly one of 'kind' (native model) or 'plugin' is required");
        return m;
    }
    if (r.has("plugin")) {
        if (r.has("pretrained")) r.problem("'pretrained' applies to native models only");
        const auto& p = r.at("plugin");
        Reader rp(findings, p, r.path("plugin"),
                  {"command", "timeout_s", "handshake_timeout_s", "capabilities"});
        plugin::PluginDescriptor d;
        rp.read("command", d.command, true);
        if (!d.command.empty() && !fs::path(d.command.front()).is_absolute() &&
            d.command.front().find('/') != std::string::npos) {
            d.command.front() = (base / d.command.front()).string();
        }
        double timeout = 10.0;
        double handshake = 10.0;
        rp.read("timeout_s", timeout);
        rp.read("handshake_timeout_s", handshake);
        d.message_timeout = std::chrono::milliseconds(static_cast<long long>(timeout * 1000.0));
        d.handshake_timeout =
            std::chrono::milliseconds(static_cast<long long>(handshake * 1000.0));
        if (rp.has("capabilities")) {
            d.declared = read_caps(p.at("capabilities"), rp.path("capabilities"), findings);
        }
        if (m.id.empty()) m.id = "plugin" + std::to_string(index);
        m.plugin = std::move(d);
        return m;
    }
    ForecasterSpec spec;
    std::string kind;
    r.read("kind", kind);
    try {
        spec.kind = model_kind_from_string(kind);
    } catch (const std::exception& e) {
        r.problem(e.what());
    }
    spec.context_length = m.context_length;
    spec.horizon = m.horizon;
    spec.channels = 0;  // filled in from the dataset
    r.read("season_length", spec.season_length);
    r.read("kernel_size", spec.kernel_size);
    r.read("hidden", spec.hidden);
    std::string pretrained;
    r.read("pretrained", pretrained);
    if (!pretrained.empty()) {
        m.pretrained = fs::path(pretrained).is_absolute() ? fs::path(pretrained) : base / pretrained;
    }
    if (m.id.empty()) m.id = to_string(spec.kind);
    m.native = spec;
    return m;
}

json script_to_json(const data::ShiftScript& s) {
    json j;
    j["base"]["ar"] = s.base.ar;
    j["base"]["period"] = s.base.period;
    j["base"]["amplitude"] = s.base.amplitude;
    j["base"]["noise_std"] = s.base.noise_std;
    j["events"] = json::array();
    for (const auto& e : s.events) {
        json ev;
        ev["at_partition"] = e.at_partition;
        ev["kind"] = data::to_string(e.kind);
        ev["magnitude"] = e.magnitude;
        j["events"].push_back(ev);
    }
    return j;
}

json source_to_json(const DatasetSource& src) {
    json j;
    if (const auto* c = std::get_if<CsvSource>(&src)) {
        j["csv"]["path"] = c->path.string();
        if (c->schema.time_column) j["csv"]["time_column"] = *c->schema.time_column;
        j["csv"]["value_columns"] = c->schema.value_columns;
        j["csv"]["delimiter"] = std::string(1, c->schema.delimiter);
        j["csv"]["interval_seconds"] = c->schema.interval_seconds;
    } else {
        const auto& s = std::get<SyntheticSource>(src);
        j["synthetic"]["length"] = s.length;
        j["synthetic"]["channels"] = s.channels;
        j["synthetic"]["seed"] = s.seed;
        if (s.partitions) j["synthetic"]["partitions"] = *s.partitions;
        j["synthetic"]["script"] = script_to_json(s.script);
    }
    return j;
}

json train_to_json(const training::TrainConfig& t) {
    json j;
    j["epochs"] = t.epochs;
    j["batch_size"] = t.batch_size;
    j["lr"] = t.lr;
    j["shuffle"] = t.shuffle;
    j["optimizer"] = training::to_string(t.optimizer);
    j["beta1"] = t.beta1;
    j["beta2"] = t.beta2;
    j["eps"] = t.eps;
    j["weight_decay"] = t.weight_decay;
    return j;
}

bool executable_on_path(const std::string& name) {
    if (name.find('/') != std::string::npos) return ::access(name.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::stringstream ss(path);
    std::string dir;
    while (std::getline(ss, dir, ':')) {
        if (dir.empty()) dir = ".";
        if (::access((fs::path(dir) / name).c_str(), X_OK) == 0) return true;
    }
    return false;
}

bool writable_dir_or_creatable(const fs::path& dir) {
    std::error_code ec;
    fs::path p = fs::absolute(dir, ec);
    if (ec) return false;
    while (!p.empty()) {
        if (fs::exists(p, ec)) return fs::is_directory(p, ec) && ::access(p.c_str(), W_OK) == 0;
        if (p == p.parent_path()) break;
        p = p.parent_path();
    }
    return false;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> findings)
    : std::runtime_error("invalid config: " + join(findings, "; ")),
      findings_(std::move(findings)) {}

const char* to_string(RestartMode mode) {
    return mode == RestartMode::chained ? "chained" : "pristine";
}

std::string cell_id(const std::string& model_id, std::uint64_t seed) {
    return model_id + "@s" + std::to_string(seed);
}

data::ShiftScript parse_shift_script(const std::string& json_text) {
    std::vector<std::string> findings;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("script is not valid JSON: ") + e.what()});
    }
    auto script = read_script(j, "script", findings);
    if (!findings.empty()) throw ConfigError(findings);
    return script;
}

GeneratorSpec load_generator(const fs::path& path) {
    std::vector<std::string> findings;
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError({path.string() + ": not valid JSON: " + e.what()});
    }
    GeneratorSpec g;
    Reader r(findings, j, "generator",
             {"name", "length", "channels", "partitions", "seed", "script"});
    r.read("name", g.name);
    r.read("length", g.source.length, true);
    r.read("channels", g.source.channels);
    r.read("partitions", g.partitions);
    r.read("seed", g.source.seed);
    if (r.has("script")) g.source.script = read_script(j.at("script"), "generator.script", findings);
    g.source.partitions = g.partitions;
    if (findings.empty()) {
        if (g.source.length < g.partitions) {
            findings.push_back("generator: length " + std::to_string(g.source.length) +
                               " is smaller than partitions " + std::to_string(g.partitions));
        }
        for (auto& f : data::validate_script(g.source.script, g.source.channels, g.partitions)) {
            findings.push_back("generator.script: " + f);
        }
    }
    if (!findings.empty()) throw ConfigError(findings);
    return g;
}

ExperimentConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    std::vector<std::string> findings;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
    }
    ExperimentConfig cfg;
    Reader r(findings, j, "config",
             {"name", "dataset", "partitions", "ratio", "context_length", "horizon",
              "normalization", "models", "regimes", "train", "pretrain", "incremental_restart",
              "seeds", "output_dir", "spike_factor"});
    r.read("name", cfg.name);
    if (r.has("dataset")) {
        cfg.dataset = read_source(j.at("dataset"), "config.dataset", base_dir, findings);
    } else {
        r.problem("missing required key 'dataset'");
    }
    r.read("partitions", cfg.partitions);
    if (r.has("ratio")) {
        try {
            const auto v = j.at("ratio").get<std::vector<double>>();
            if (v.size() != 3) throw std::invalid_argument("");
            cfg.ratio = {v[0], v[1], v[2]};
        } catch (const std::exception&) {
            r.problem("ratio must be a list of three numbers [train, val, test]");
        }
    }
    r.read("context_length", cfg.context_length);
    r.read("horizon", cfg.horizon);
    std::string norm;
    r.read("normalization", norm);
    if (!norm.empty()) {
        try {
            cfg.normalization = data::norm_scope_from_string(norm);
        } catch (const std::exception& e) {
            r.problem(e.what());
        }
    }
    if (r.has("train")) cfg.train = read_train(j.at("train"), "config.train", cfg.train, findings);
    if (r.has("models")) {
        const auto& ms = j.at("models");
        if (!ms.is_array()) {
            r.problem("models must be a list");
        } else {
            for (std::size_t i = 0; i < ms.size(); ++i) {
                cfg.models.push_back(read_model(ms[i], i, cfg, base_dir, findings));
            }
        }
    } else {
        r.problem("missing required key 'models'");
    }
    if (r.has("regimes")) {
        std::vector<std::string> names;
        r.read("regimes", names);
        cfg.regimes.clear();
        for (const auto& n : names) {
            try {
                const auto reg = regime_from_string(n);
                if (reg != Regime::zero && reg != Regime::incremental && reg != Regime::full) {
                    throw std::invalid_argument("regime '" + n + "' cannot be requested");
                }
                if (std::find(cfg.regimes.begin(), cfg.regimes.end(), reg) != cfg.regimes.end()) {
                    throw std::invalid_argument("regime '" + n + "' listed twice");
                }
                cfg.regimes.push_back(reg);
            } catch (const std::exception& e) {
                r.problem(e.what());
            }
        }
        std::sort(cfg.regimes.begin(), cfg.regimes.end(), [](Regime a, Regime b) {
            auto rank = [](Regime x) {
                return x == Regime::zero ? 0 : x == Regime::incremental ? 1 : 2;
            };
            return rank(a) < rank(b);
        });
    }
    if (r.has("pretrain")) {
        const auto& p = j.at("pretrain");
        Reader rp(findings, p, "config.pretrain", {"corpus", "train"});
        PretrainConfig pc;
        if (rp.has("corpus") && p.at("corpus").is_array()) {
            const auto& corpus = p.at("corpus");
            for (std::size_t i = 0; i < corpus.size(); ++i) {
                pc.corpus.push_back(read_source(
                    corpus[i], "config.pretrain.corpus[" + std::to_string(i) + "]", base_dir,
                    findings));
            }
        } else {
            rp.problem("corpus must be a list of dataset sources");
        }
        if (rp.has("train")) {
            pc.train = read_train(p.at("train"), "config.pretrain.train", cfg.train, findings);
        }
        cfg.pretrain = std::move(pc);
    }
    std::string restart;
    r.read("incremental_restart", restart);
    if (restart == "pristine") {
        cfg.restart = RestartMode::pristine;
    } else if (!restart.empty() && restart != "chained") {
        r.problem("incremental_restart must be 'chained' or 'pristine'");
    }
    r.read("seeds", cfg.seeds);
    std::string out;
    r.read("output_dir", out);
    if (!out.empty()) cfg.output_dir = out;
    if (cfg.output_dir.is_relative()) cfg.output_dir = base_dir / cfg.output_dir;
    r.read("spike_factor", cfg.spike_factor);

    if (!findings.empty()) throw ConfigError(findings);
    return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
    const auto text = read_file(path);
    try {
        return parse_config(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
    } catch (const ConfigError& e) {
        auto f = e.findings();
        for (auto& s : f) s = path.string() + ": " + s;
        throw ConfigError(f);
    }
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["dataset"] = source_to_json(cfg.dataset);
    j["partitions"] = cfg.partitions;
    j["ratio"] = {cfg.ratio.train, cfg.ratio.val, cfg.ratio.test};
    j["context_length"] = cfg.context_length;
    j["horizon"] = cfg.horizon;
    j["normalization"] = data::to_string(cfg.normalization);
    j["models"] = json::array();
    for (const auto& m : cfg.models) {
        json mj;
        mj["id"] = m.id;
        mj["horizon"] = m.horizon;
        if (m.native) {
            mj["kind"] = to_string(m.native->kind);
            mj["season_length"] = m.native->season_length;
            mj["kernel_size"] = m.native->kernel_size;
            mj["hidden"] = m.native->hidden;
            if (m.pretrained) mj["pretrained"] = m.pretrained->string();
        } else if (m.plugin) {
            mj["plugin"]["command"] = m.plugin->command;
            mj["plugin"]["timeout_s"] = m.plugin->message_timeout.count() / 1000.0;
            mj["plugin"]["handshake_timeout_s"] = m.plugin->handshake_timeout.count() / 1000.0;
            if (m.plugin->declared) {
                mj["plugin"]["capabilities"] = plugin::encode_capabilities(*m.plugin->declared);
            }
        }
        j["models"].push_back(mj);
    }
    j["regimes"] = json::array();
    for (auto reg : cfg.regimes) j["regimes"].push_back(to_string(reg));
    j["train"] = train_to_json(cfg.train);
    if (cfg.pretrain) {
        j["pretrain"]["corpus"] = json::array();
        for (const auto& s : cfg.pretrain->corpus) j["pretrain"]["corpus"].push_back(source_to_json(s));
        if (cfg.pretrain->train) j["pretrain"]["train"] = train_to_json(*cfg.pretrain->train);
    }
    j["incremental_restart"] = to_string(cfg.restart);
    j["seeds"] = cfg.seeds;
    j["output_dir"] = cfg.output_dir.string();
    j["spike_factor"] = cfg.spike_factor;
    return j.dump(2);
}

TimeSeries materialize(const DatasetSource& source, std::size_t experiment_partitions) {
    if (const auto* c = std::get_if<CsvSource>(&source)) return data::load_csv(c->path, c->schema);
    const auto& s = std::get<SyntheticSource>(source);
    return data::gen_synthetic(s.script, s.length, s.channels,
                               s.partitions.value_or(experiment_partitions), s.seed)
        .series;
}

namespace {

// Series length and channel count of a source, or a finding.
std::optional<std::pair<std::size_t, std::size_t>> probe_source(
    const DatasetSource& src, const std::string& where, std::size_t partitions,
    std::vector<std::string>& findings) {
    if (const auto* c = std::get_if<CsvSource>(&src)) {
        std::error_code ec;
        if (!fs::is_regular_file(c->path, ec)) {
            findings.push_back(where + ": CSV file '" + c->path.string() + "' does not exist");
            return std::nullopt;
        }
        try {
            const auto ts = data::load_csv(c->path, c->schema);
            return std::pair{ts.length(), ts.channels()};
        } catch (const std::exception& e) {
            findings.push_back(where + ": " + e.what());
            return std::nullopt;
        }
    }
    const auto& s = std::get<SyntheticSource>(src);
    bool ok = true;
    if (s.length < 1) {
        findings.push_back(where + ": synthetic length must be >= 1");
        ok = false;
    }
    if (s.channels < 1) {
        findings.push_back(where + ": synthetic channels must be >= 1");
        ok = false;
    }
    const std::size_t parts = s.partitions.value_or(partitions);
    if (parts >= 1 && s.length >= parts) {
        for (auto& f : data::validate_script(s.script, std::max<std::size_t>(s.channels, 1), parts)) {
            findings.push_back(where + ".script: " + f);
            ok = false;
        }
    }
    if (!ok) return std::nullopt;
    return std::pair{s.length, s.channels};
}

}  // namespace

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
    std::vector<std::string> findings;
    if (cfg.partitions < 1) findings.push_back("partitions must be >= 1");
    if (!(cfg.ratio.train > 0 && cfg.ratio.val > 0 && cfg.ratio.test > 0)) {
        findings.push_back("ratio parts must all be positive");
    }
    if (cfg.context_length < 1) findings.push_back("context_length must be >= 1");
    if (cfg.horizon < 1) findings.push_back("horizon must be >= 1");
    if (cfg.seeds.empty()) findings.push_back("seeds must list at least one seed");
    if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
        findings.push_back("seeds contain duplicates");
    }
    if (cfg.models.empty()) findings.push_back("models must list at least one model");
    if (!(cfg.spike_factor > 0)) findings.push_back("spike_factor must be > 0");
    try {
        training::validate(cfg.train);
    } catch (const std::exception& e) {
        findings.push_back(std::string("train: ") + e.what());
    }
    if (cfg.pretrain && cfg.pretrain->train) {
        try {
            training::validate(*cfg.pretrain->train);
        } catch (const std::exception& e) {
            findings.push_back(std::string("pretrain.train: ") + e.what());
        }
    }
    if (!writable_dir_or_creatable(cfg.output_dir)) {
        findings.push_back("output_dir '" + cfg.output_dir.string() +
                           "' is not a writable directory");
    }

    const auto shape = probe_source(cfg.dataset, "dataset", cfg.partitions, findings);
    std::optional<PartitionPlan> plan;
    if (shape && cfg.partitions >= 1) {
        if (cfg.partitions > shape->first) {
            findings.push_back("partitions " + std::to_string(cfg.partitions) +
                               " exceeds series length " + std::to_string(shape->first));
        } else if (cfg.ratio.train > 0 && cfg.ratio.val > 0 && cfg.ratio.test > 0) {
            plan = data::make_partitions(shape->first, cfg.partitions, cfg.ratio);
        }
    }

    bool any_pretrain_corpus = false;
    if (cfg.pretrain) {
        if (cfg.pretrain->corpus.empty()) findings.push_back("pretrain.corpus is empty");
        for (std::size_t i = 0; i < cfg.pretrain->corpus.size(); ++i) {
            const auto where = "pretrain.corpus[" + std::to_string(i) + "]";
            const auto cs = probe_source(cfg.pretrain->corpus[i], where, cfg.partitions, findings);
            if (cs && shape && cs->second != shape->second) {
                findings.push_back(where + ": has " + std::to_string(cs->second) +
                                   " channels, dataset has " + std::to_string(shape->second));
            }
        }
        any_pretrain_corpus = !cfg.pretrain->corpus.empty();
    }

    const auto wants = [&](Regime r) {
        return std::find(cfg.regimes.begin(), cfg.regimes.end(), r) != cfg.regimes.end();
    };
    const bool trains = wants(Regime::incremental) || wants(Regime::full);

    std::set<std::string> ids;
    for (const auto& m : cfg.models) {
        const std::string where = "model '" + m.id + "'";
        if (m.id.empty() || m.id.find_first_of("@,\"/\\ \n") != std::string::npos) {
            findings.push_back(where + ": id must be non-empty without '@', ',', quotes, "
                                       "slashes or whitespace");
        }
        if (!ids.insert(m.id).second) findings.push_back(where + ": duplicate model id");
        if (m.horizon < 1) findings.push_back(where + ": horizon must be >= 1");

        if (plan) {
            for (const auto& part : plan->partitions) {
                const auto need = [&](Split s) {
                    return data::window_count(part.split(s).size(), m.context_length, m.horizon);
                };
                if (need(Split::test) == 0) {
                    findings.push_back(where + ": partition " + std::to_string(part.index) +
                                       " test split (" + std::to_string(part.test.size()) +
                                       " steps) is shorter than l+h=" +
                                       std::to_string(m.context_length + m.horizon));
                    break;
                }
                if (trains && need(Split::train) == 0) {
                    findings.push_back(where + ": partition " + std::to_string(part.index) +
                                       " train split (" + std::to_string(part.train.size()) +
                                       " steps) is shorter than l+h=" +
                                       std::to_string(m.context_length + m.horizon));
                    break;
                }
            }
        }

        if (m.native) {
            auto spec = *m.native;
            spec.channels = shape ? shape->second : 1;
            try {
                models::validate_spec(spec);
            } catch (const std::exception& e) {
                findings.push_back(where + ": " + e.what());
                continue;
            }
            const bool trainable = !models::param_layout(spec).empty();
            if (m.pretrained) {
                std::error_code ec;
                if (!fs::is_regular_file(*m.pretrained, ec)) {
                    findings.push_back(where + ": pretrained checkpoint '" +
                                       m.pretrained->string() + "' does not exist");
                } else {
                    try {
                        const auto ck = models::load(*m.pretrained);
                        if (ck.spec != spec) {
                            findings.push_back(where + ": pretrained checkpoint spec does not "
                                                       "match the model (kind, l, h, C, layers)");
                        }
                    } catch (const std::exception& e) {
                        findings.push_back(where + ": " + e.what());
                    }
                }
            }
            if (trainable && wants(Regime::zero) && !m.pretrained && !any_pretrain_corpus) {
                findings.push_back(where + ": trainable model with regime zero needs a pretrain "
                                           "corpus or a pretrained checkpoint");
            }
        } else if (m.plugin) {
            if (m.plugin->command.empty()) {
                findings.push_back(where + ": plugin command is empty");
                continue;
            }
            if (!executable_on_path(m.plugin->command.front())) {
                findings.push_back(where + ": plugin executable '" + m.plugin->command.front() +
                                   "' not found or not executable");
                continue;
            }
            std::optional<plugin::Capabilities> caps = m.plugin->declared;
            if (!caps) {
                try {
                    plugin::PluginSession session(*m.plugin);
                    caps = session.capabilities();
                } catch (const std::exception& e) {
                    findings.push_back(where + ": handshake failed: " + e.what());
                }
            }
            if (caps) {
                for (auto& f : plugin::dispatch_findings(*caps, m.context_length, m.horizon,
                                                         shape ? shape->second : 1)) {
                    if (!shape && f.find("channels") != std::string::npos) continue;
                    findings.push_back(where + ": " + f);
                }
            }
        }
    }
    return findings;
}

std::vector<std::string> validate_config(const fs::path& path) {
    try {
        return validate_config(load_config(path));
    } catch (const ConfigError& e) {
        return e.findings();
    } catch (const std::exception& e) {
        return {path.string() + ": " + e.what()};
    }
}

}  // namespace tplas::runner
