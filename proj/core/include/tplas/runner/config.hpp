#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tplas/core/types.hpp"
#include "tplas/data/csv.hpp"
#include "tplas/data/dataset.hpp"
#include "tplas/data/synthetic.hpp"
#include "tplas/plugin/protocol.hpp"
#include "tplas/training/trainer.hpp"

namespace tplas::runner {

/// Raised when a config cannot be parsed or fails validation. Carries every finding.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> findings);
    const std::vector<std::string>& findings() const { return findings_; }

private:
    std::vector<std::string> findings_;
};

struct CsvSource {
    std::filesystem::path path;  // resolved against the config file's directory
    data::CsvSchema schema;
};

struct SyntheticSource {
    data::ShiftScript script;
    std::size_t length = 0;
    std::size_t channels = 1;
    std::uint64_t seed = 0;
    /// Partition count the script's event indices refer to. Defaults to the experiment's P.
    std::optional<std::size_t> partitions;
};

using DatasetSource = std::variant<CsvSource, SyntheticSource>;

struct ModelEntry {
    std::string id;
    /// Exactly one of native / plugin is set.
    std::optional<ForecasterSpec> native;
    std::optional<plugin::PluginDescriptor> plugin;
    /// Context length and horizon actually used; the per-model horizon overrides the global one.
    std::size_t context_length = 96;
    std::size_t horizon = 96;
    std::optional<std::filesystem::path> pretrained;  // native models only
};

enum class RestartMode { chained, pristine };

const char* to_string(RestartMode mode);

struct PretrainConfig {
    std::vector<DatasetSource> corpus;
    std::optional<training::TrainConfig> train;  // defaults to the experiment's train config
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSource dataset;
    std::size_t partitions = 10;
    SplitRatio ratio;
    std::size_t context_length = 96;
    std::size_t horizon = 96;
    data::NormScope normalization = data::NormScope::partition;
    std::vector<ModelEntry> models;
    std::vector<Regime> regimes{Regime::zero, Regime::incremental, Regime::full};
    training::TrainConfig train;
    std::optional<PretrainConfig> pretrain;
    RestartMode restart = RestartMode::chained;
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output_dir = "results";
    double spike_factor = 2.0;
};

/// Parses one JSON document. Relative paths resolve against `base_dir`.
/// Throws ConfigError listing every schema problem found.
ExperimentConfig parse_config(const std::string& json_text,
                              const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Echo of a parsed config as JSON, stored in each run directory.
std::string config_to_json(const ExperimentConfig& config);

/// Cross-field and filesystem checks on a parsed config. Plugins are spawned and
/// handshaken to learn their capabilities when none are declared.
std::vector<std::string> validate_config(const ExperimentConfig& config);
/// Schema, cross-field and filesystem checks. Empty iff runnable; never throws.
std::vector<std::string> validate_config(const std::filesystem::path& path);

/// Shift script JSON: {"base":{"ar":[..],"period":..,"amplitude":..,"noise_std":..},
/// "events":[{"at_partition":..,"kind":"mean_shift",...,"magnitude":..}]}
data::ShiftScript parse_shift_script(const std::string& json_text);

/// Generator file for `tplas generate`: {"length","channels","partitions","seed","script"}.
struct GeneratorSpec {
    SyntheticSource source;
    std::size_t partitions = 10;
    std::string name = "synthetic";
};
GeneratorSpec load_generator(const std::filesystem::path& path);

/// Loads or generates the series a source describes.
TimeSeries materialize(const DatasetSource& source, std::size_t experiment_partitions);

/// Model ids as they appear in metrics: "<id>@s<seed>".
std::string cell_id(const std::string& model_id, std::uint64_t seed);

}  // namespace tplas::runner
