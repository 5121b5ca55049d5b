#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tplas/core/types.hpp"
#include "tplas/metrics/metrics.hpp"
#include "tplas/runner/config.hpp"

namespace tplas::runner {

struct RunOptions {
    std::optional<std::vector<std::uint64_t>> seeds;  // replaces config.seeds
    std::optional<std::filesystem::path> output_dir;  // replaces config.output_dir
    /// Exact run directory. Default: a fresh run-stamped directory under output_dir.
    std::optional<std::filesystem::path> run_dir;
    std::size_t jobs = 1;
};

struct FailureRecord {
    std::string model_id;  // cell id, "<id>@s<seed>"
    std::string stage;     // "zero", "incremental", "full p=3", "pretrain", ...
    std::string error;
};

struct LineageRecord {
    std::string model_id;
    std::size_t round = 0;
    std::string input;   // checksum (native) or snapshot token (plugin) before the round
    std::string output;  // after the round
};

struct RunResult {
    std::filesystem::path dir;
    MetricsTable table;  // with ratio rows
    std::vector<FailureRecord> failures;
    std::vector<LineageRecord> lineage;
    /// Per cell id: forgetting matrix of the incremental fold, when it ran.
    std::vector<std::pair<std::string, metrics::ForgettingMatrix>> forgetting;
};

/// Runs the (model x seed x regime x partition) matrix and writes, under the run directory:
/// config.json, metrics.csv, ratios.csv, summary.json, failures.json, lineage.jsonl,
/// logs/train.jsonl, logs/diagnostics.txt and checkpoints/<cell>/*.ckpt.
/// Throws ConfigError if the config does not validate. Failures inside a (model, seed)
/// cell drop that cell's rows and are recorded; the run continues.
RunResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// "model_id,regime,p,mse" rows with mse printed to round-trip precision.
std::string metrics_csv(const MetricsTable& table);
/// Inverse of metrics_csv. Throws DataError naming `origin` on malformed input.
MetricsTable parse_metrics_csv(const std::string& text, const std::string& origin);

struct ReportResult {
    std::string summary;  // also written to summary.txt
    std::vector<std::filesystem::path> files;
};

/// Reads metrics.csv (and summary.json if present) from a run directory and writes
/// plot/<metric>.csv series files plus summary.txt listing spikes, trends and forgetting flags.
ReportResult report(const std::filesystem::path& run_dir,
                    double spike_factor = metrics::kDefaultSpikeFactor);

/// Writes `text` to `path` via a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace tplas::runner
