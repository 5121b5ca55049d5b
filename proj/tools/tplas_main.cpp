#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tplas/data/csv.hpp"
#include "tplas/data/manifest.hpp"
#include "tplas/data/synthetic.hpp"
#include "tplas/runner/config.hpp"
#include "tplas/runner/experiment.hpp"

namespace fs = std::filesystem;
using namespace tplas;

namespace {

constexpr int kOk = 0;
constexpr int kConfigInvalid = 1;
constexpr int kRuntimeFailure = 2;

void print_findings(const std::vector<std::string>& findings) {
    for (const auto& f : findings) std::cerr << "  - " << f << "\n";
}

int cmd_generate(const fs::path& config, const fs::path& out, const std::vector<std::uint64_t>& seeds) {
    runner::GeneratorSpec gen;
    try {
        gen = runner::load_generator(config);
    } catch (const runner::ConfigError& e) {
        std::cerr << "invalid generator file:\n";
        print_findings(e.findings());
        return kConfigInvalid;
    }
    if (!seeds.empty()) gen.source.seed = seeds.front();
    const auto synth = data::gen_synthetic(gen.source.script, gen.source.length,
                                           gen.source.channels, gen.partitions, gen.source.seed);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    data::write_csv(synth.series, out);
    const auto manifest = data::make_manifest(synth.series, gen.name, data::DataSource::synthetic);
    auto manifest_path = out;
    manifest_path += ".manifest.json";
    runner::write_atomic(manifest_path,
                         data::synthetic_manifest_json(manifest, gen.source.script, gen.partitions,
                                                       gen.source.seed, synth.events) + "\n");
    std::cout << out.string() << " (" << synth.series.length() << " x " << synth.series.channels()
              << ", checksum " << manifest.checksum << ")\n";
    return kOk;
}

int cmd_validate(const fs::path& config) {
    const auto findings = runner::validate_config(config);
    if (findings.empty()) {
        std::cout << config.string() << ": ok\n";
        return kOk;
    }
    std::cerr << config.string() << ": " << findings.size() << " finding(s)\n";
    print_findings(findings);
    return kConfigInvalid;
}

int cmd_run(const fs::path& config, const std::optional<fs::path>& out,
            const std::vector<std::uint64_t>& seeds, std::size_t jobs) {
    runner::ExperimentConfig cfg;
    try {
        cfg = runner::load_config(config);
    } catch (const runner::ConfigError& e) {
        std::cerr << "invalid config:\n";
        print_findings(e.findings());
        return kConfigInvalid;
    }
    runner::RunOptions opts;
    if (!seeds.empty()) opts.seeds = seeds;
    opts.output_dir = out;
    opts.jobs = jobs;
    runner::RunResult result;
    try {
        result = runner::run_experiment(cfg, opts);
    } catch (const runner::ConfigError& e) {
        std::cerr << "invalid config:\n";
        print_findings(e.findings());
        return kConfigInvalid;
    }
    const auto rep = runner::report(result.dir, cfg.spike_factor);
    std::cout << result.dir.string() << "\n" << rep.summary;
    if (!result.failures.empty()) {
        std::cerr << result.failures.size() << " cell failure(s); see "
                  << (result.dir / "failures.json").string() << "\n";
        return kRuntimeFailure;
    }
    return kOk;
}

int cmd_report(const fs::path& dir) {
    const auto rep = runner::report(dir);
    std::cout << rep.summary;
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal plasticity benchmark harness for time-series forecasters"};
    app.require_subcommand(1);

    fs::path config;
    std::optional<fs::path> out;
    std::vector<std::uint64_t> seeds;
    std::size_t jobs = 1;

    auto* gen = app.add_subcommand("generate", "Generate a synthetic series from a shift script");
    gen->add_option("--config", config, "Generator JSON file")->required();
    gen->add_option("--out", out, "Output CSV path")->required();
    gen->add_option("--seed", seeds, "Override the generator seed")->delimiter(',');

    auto* val = app.add_subcommand("validate", "Check an experiment config");
    val->add_option("--config", config, "Experiment JSON file")->required();

    auto* run = app.add_subcommand("run", "Run an experiment");
    run->add_option("--config", config, "Experiment JSON file")->required();
    run->add_option("--out", out, "Results root (overrides output_dir)");
    run->add_option("--seed", seeds, "Comma-separated seeds (overrides seeds)")->delimiter(',');
    run->add_option("--jobs", jobs, "Concurrent run cells")->check(CLI::PositiveNumber);

    auto* rep = app.add_subcommand("report", "Summarize a results directory");
    std::optional<fs::path> run_dir;
    rep->add_option("dir", run_dir, "Run directory");
    rep->add_option("--out", out, "Run directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigInvalid;
    }

    try {
        if (*gen) return cmd_generate(config, *out, seeds);
        if (*val) return cmd_validate(config);
        if (*run) return cmd_run(config, out, seeds, jobs);
        if (*rep) {
            const auto dir = run_dir ? run_dir : out;
            if (!dir) {
                std::cerr << "report: a run directory is required\n";
                return kConfigInvalid;
            }
            return cmd_report(*dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeFailure;
    }
    return kOk;
}
