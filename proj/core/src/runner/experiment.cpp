#include "tplas/runner/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "tplas/core/checksum.hpp"
#include "tplas/data/partition.hpp"
#include "tplas/models/checkpoint_io.hpp"
#include "tplas/models/forecaster.hpp"
#include "tplas/training/trainer.hpp"

namespace tplas::runner {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string fmt(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, static_cast<std::size_t>(end - buf));
}

void run_parallel(std::vector<std::function<void()>>& tasks, std::size_t jobs) {
    jobs = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
    if (jobs == 1) {
        for (auto& t : tasks) t();
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < tasks.size(); i = next++) tasks[i]();
        });
    }
}

std::string stamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%dT%H%M%SZ", &tm);
    return buf;
}

fs::path fresh_run_dir(const fs::path& root, const std::string& name) {
    const fs::path base = root / (name + "-" + stamp_now());
    fs::path dir = base;
    for (int i = 2; fs::exists(dir); ++i) dir = base.string() + "-" + std::to_string(i);
    return dir;
}

struct MomentEntry {
    Regime regime;
    std::size_t p;
    metrics::MomentReport report;
};

struct TaskResult {
    std::vector<MseRow> rows;
    std::vector<std::string> log;
    std::vector<LineageRecord> lineage;
    std::optional<metrics::ForgettingMatrix> forgetting;
    std::vector<MomentEntry> moments;
    std::optional<FailureRecord> failure;
};

struct Cell {
    const ModelEntry* model = nullptr;
    std::uint64_t seed = 0;
    std::string id;
    const data::PartitionedSeries* data = nullptr;
    std::optional<Checkpoint> start;  // pretrained checkpoint for trainable native models
    std::optional<FailureRecord> prepare_failure;
    std::vector<std::string> prepare_log;
};

std::optional<metrics::MomentReport> moments_of(const metrics::BatchPredictor& predictor,
                                                const data::WindowSet& windows) {
    std::vector<double> yhat;
    std::vector<double> y;
    constexpr std::size_t kChunk = 256;
    for (std::size_t first = 0; first < windows.size(); first += kChunk) {
        const std::size_t n = std::min(kChunk, windows.size() - first);
        std::vector<MatrixView> ctx;
        std::vector<data::Sample> batch;
        for (std::size_t k = 0; k < n; ++k) {
            batch.push_back(windows[first + k]);
            ctx.push_back(batch.back().context);
        }
        const auto out = predictor(ctx);
        for (std::size_t k = 0; k < n; ++k) {
            const auto f = out[k].view().flat();
            const auto t = batch[k].target.flat();
            yhat.insert(yhat.end(), f.begin(), f.end());
            y.insert(y.end(), t.begin(), t.end());
        }
    }
    if (y.size() < 2) return std::nullopt;
    return metrics::moment_decomposition(yhat, y);
}

// Evaluates partition p's test windows and records the row and its moment report.
void evaluate(TaskResult& out, const std::string& id, Regime regime, std::size_t p,
              const metrics::BatchPredictor& predictor, const data::PartitionedSeries& data) {
    const auto& test = data.windows(p, Split::test);
    out.rows.push_back({id, regime, p, metrics::mse_eval(predictor, test)});
    if (auto m = moments_of(predictor, test)) out.moments.push_back({regime, p, *m});
}

training::TrainHooks hooks_for(TaskResult& out, std::string run_id,
                               std::function<bool(std::size_t, Split)> allowed) {
    training::TrainHooks hooks;
    hooks.run_id = std::move(run_id);
    hooks.on_epoch = [&out](const training::EpochRecord& r) {
        out.log.push_back(training::to_jsonl(r));
    };
    hooks.on_access = [allowed = std::move(allowed)](std::size_t q, Split s) {
        if (!allowed(q, s)) {
            throw std::logic_error("regime purity violated: read partition " + std::to_string(q) +
                                   " " + to_string(s));
        }
    };
    return hooks;
}

std::string pad(std::size_t p) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02zu", p);
    return buf;
}

metrics::BatchPredictor plugin_predictor(plugin::PluginSession& session, std::size_t horizon,
                                         std::optional<std::string> token = std::nullopt) {
    return [&session, horizon, token](std::span<const MatrixView> ctx) {
        if (token) session.restore(*token);
        return session.predict(ctx, horizon);
    };
}

void check_dispatch(const plugin::Capabilities& caps, const ModelEntry& m, std::size_t channels) {
    const auto f = plugin::dispatch_findings(caps, m.context_length, m.horizon, channels);
    if (!f.empty()) throw plugin::PluginError("refusing dispatch: " + f.front());
}

class Runner {
public:
    Runner(const ExperimentConfig& cfg, fs::path dir) : cfg_(cfg), dir_(std::move(dir)) {}

    bool wants(Regime r) const {
        return std::find(cfg_.regimes.begin(), cfg_.regimes.end(), r) != cfg_.regimes.end();
    }

    training::TrainConfig train_cfg(std::uint64_t seed) const {
        auto t = cfg_.train;
        t.seed = seed;
        return t;
    }

    ForecasterSpec spec_of(const Cell& c) const {
        auto spec = *c.model->native;
        spec.channels = c.data->channels();
        return spec;
    }

    fs::path ckpt_dir(const Cell& c) const { return dir_ / "checkpoints" / c.id; }

    void prepare(Cell& c, const std::vector<TimeSeries>& corpus) {
        if (!c.model->native) return;
        const auto spec = spec_of(c);
        if (models::param_layout(spec).empty()) return;
        fs::create_directories(ckpt_dir(c));
        try {
            if (c.model->pretrained) {
                c.start = models::load(*c.model->pretrained);
            } else if (!corpus.empty()) {
                auto tc = cfg_.pretrain && cfg_.pretrain->train ? *cfg_.pretrain->train : cfg_.train;
                tc.seed = c.seed;
                TaskResult sink;
                auto hooks = hooks_for(sink, c.id + "/pretrain", [](std::size_t, Split) { return false; });
                c.start = training::pretrain(spec, corpus, tc, hooks);
                c.prepare_log = std::move(sink.log);
            }
            if (c.start) models::save(*c.start, ckpt_dir(c) / "pretrained.ckpt");
        } catch (const std::exception& e) {
            c.prepare_failure = FailureRecord{c.id, "pretrain", e.what()};
        }
    }

    // Zero-shot evaluation followed by the sequential incremental fold.
    TaskResult lineage_native(const Cell& c) {
        TaskResult out;
        const auto& data = *c.data;
        const auto spec = spec_of(c);
        const bool trainable = !models::param_layout(spec).empty();
        const Checkpoint origin = c.start ? *c.start : models::init_params(spec, c.seed);
        fs::create_directories(ckpt_dir(c));

        if (wants(Regime::zero)) {
            models::save(origin, ckpt_dir(c) / "zero.ckpt");
            const auto pred = metrics::predictor_for(origin);
            for (std::size_t p = 0; p < data.count(); ++p) evaluate(out, c.id, Regime::zero, p, pred, data);
        }
        if (!wants(Regime::incremental)) return out;

        const auto cfg = train_cfg(c.seed);
        std::vector<Checkpoint> rounds;
        rounds.reserve(data.count());
        Checkpoint current = origin;
        for (std::size_t p = 0; p < data.count(); ++p) {
            const Checkpoint& base = cfg_.restart == RestartMode::chained ? current : origin;
            Checkpoint next = base;
            if (trainable) {
                auto hooks = hooks_for(out, c.id + "/incremental/p" + std::to_string(p),
                                       [p](std::size_t q, Split s) { return q == p && s != Split::test; });
                next = training::incremental_finetune(base, data, p, cfg, hooks);
            }
            const auto path = ckpt_dir(c) / ("incremental_p" + pad(p) + ".ckpt");
            models::save(next, path);
            out.lineage.push_back({c.id, p, models::checksum(base), models::checksum(next)});
            current = models::load(path);  // the next round consumes the persisted checkpoint
            rounds.push_back(current);
            evaluate(out, c.id, Regime::incremental, p, metrics::predictor_for(rounds.back()), data);
        }
        out.forgetting = metrics::forgetting_matrix(rounds, data);
        return out;
    }

    TaskResult full_native(const Cell& c, std::size_t p) {
        TaskResult out;
        const auto& data = *c.data;
        const auto spec = spec_of(c);
        Checkpoint ckpt = c.start ? *c.start : models::init_params(spec, c.seed);
        if (!models::param_layout(spec).empty()) {
            auto hooks = hooks_for(out, c.id + "/full/p" + std::to_string(p),
                                   [p](std::size_t q, Split s) {
                                       return q < p ? s == Split::train : q == p && s != Split::test;
                                   });
            ckpt = c.start ? training::full_train(*c.start, data, p, train_cfg(c.seed), hooks)
                           : training::full_train(spec, data, p, train_cfg(c.seed), hooks);
        }
        fs::create_directories(ckpt_dir(c));
        models::save(ckpt, ckpt_dir(c) / ("full_p" + pad(p) + ".ckpt"));
        evaluate(out, c.id, Regime::full, p, metrics::predictor_for(ckpt), data);
        return out;
    }

    TaskResult lineage_plugin(const Cell& c) {
        TaskResult out;
        const auto& data = *c.data;
        const auto& m = *c.model;
        if (m.plugin->declared) check_dispatch(*m.plugin->declared, m, data.channels());
        plugin::PluginSession session(*m.plugin);
        check_dispatch(session.capabilities(), m, data.channels());
        const std::string pristine = session.snapshot(c.id + "/pristine");

        if (wants(Regime::zero)) {
            const auto pred = plugin_predictor(session, m.horizon);
            for (std::size_t p = 0; p < data.count(); ++p) evaluate(out, c.id, Regime::zero, p, pred, data);
        }
        if (!wants(Regime::incremental)) return out;

        const auto cfg = train_cfg(c.seed);
        std::vector<std::string> tokens;
        std::string current = pristine;
        for (std::size_t p = 0; p < data.count(); ++p) {
            const std::string base = cfg_.restart == RestartMode::chained ? current : pristine;
            session.restore(base);
            if (session.capabilities().trainable) {
                const auto samples = data.windows(p, Split::train).samples();
                session.finetune(samples, cfg);
            }
            current = session.snapshot(c.id + "/incremental/p" + std::to_string(p));
            out.lineage.push_back({c.id, p, base, current});
            tokens.push_back(current);
            evaluate(out, c.id, Regime::incremental, p, plugin_predictor(session, m.horizon), data);
        }
        std::vector<metrics::BatchPredictor> rounds;
        for (const auto& t : tokens) rounds.push_back(plugin_predictor(session, m.horizon, t));
        out.forgetting = metrics::forgetting_matrix(rounds, data);
        session.shutdown();
        return out;
    }

    TaskResult full_plugin(const Cell& c, std::size_t p) {
        TaskResult out;
        const auto& data = *c.data;
        const auto& m = *c.model;
        if (m.plugin->declared) check_dispatch(*m.plugin->declared, m, data.channels());
        plugin::PluginSession session(*m.plugin);
        check_dispatch(session.capabilities(), m, data.channels());
        if (session.capabilities().trainable) {
            std::vector<data::Sample> samples;
            for (std::size_t q = 0; q <= p; ++q) {
                const auto s = data.windows(q, Split::train).samples();
                samples.insert(samples.end(), s.begin(), s.end());
            }
            session.finetune(samples, train_cfg(c.seed));
        }
        evaluate(out, c.id, Regime::full, p, plugin_predictor(session, m.horizon), data);
        session.shutdown();
        return out;
    }

private:
    const ExperimentConfig& cfg_;
    fs::path dir_;
};

json ratio_json(const std::optional<Ratio>& r) {
    if (!r) return nullptr;
    json j;
    j["numerator"] = r->numerator;
    j["denominator"] = r->denominator;
    j["value"] = r->degenerate() ? json(nullptr) : json(r->value());
    return j;
}

json moment_json(const metrics::MomentReport& m) {
    json j;
    j["n"] = m.n;
    j["mse_exact"] = m.mse_exact;
    j["e_y2"] = m.e_y2;
    j["e_yhaty"] = m.e_yhaty;
    j["e_yhat2"] = m.e_yhat2;
    j["mu_hat"] = m.mu_hat;
    j["sigma2_hat"] = m.sigma2_hat;
    j["mean_y"] = m.mean_y;
    j["independence_approx"] = m.independence_approx;
    j["assumption_gap"] = m.assumption_gap;
    j["covariance_term"] = m.covariance_term;
    return j;
}

struct TrendEntry {
    std::string model_id;
    std::string metric;
    std::size_t defined = 0;
    std::optional<metrics::PlasticityTrend> trend;
};

std::vector<TrendEntry> trends_of(const MetricsTable& table, double spike_factor) {
    std::vector<TrendEntry> out;
    const std::pair<const char*, std::optional<Ratio> RatioRow::*> fields[] = {
        {"r_zero", &RatioRow::r_zero}, {"r_full", &RatioRow::r_full}, {"r_fz", &RatioRow::r_fz}};
    for (const auto& id : table.model_ids()) {
        for (const auto& [name, field] : fields) {
            std::vector<std::optional<double>> values;
            std::size_t defined = 0;
            for (const auto& row : table.ratio_rows()) {
                if (row.model_id != id) continue;
                if (values.size() <= row.p) values.resize(row.p + 1);
                const auto& r = row.*field;
                if (r && !r->degenerate()) {
                    values[row.p] = r->value();
                    ++defined;
                }
            }
            if (defined == 0) continue;
            TrendEntry e{id, name, defined, std::nullopt};
            if (defined >= 3) e.trend = metrics::plasticity_trend(values, spike_factor);
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::string ratio_cell(const std::optional<Ratio>& r) {
    if (!r) return "";
    if (r->degenerate()) return "degenerate";
    return fmt(r->value());
}

std::string ratios_csv(const MetricsTable& table) {
    std::string out = "model_id,p,r_zero,r_full,r_fz\n";
    for (const auto& r : table.ratio_rows()) {
        out += r.model_id + "," + std::to_string(r.p) + "," + ratio_cell(r.r_zero) + "," +
               ratio_cell(r.r_full) + "," + ratio_cell(r.r_fz) + "\n";
    }
    return out;
}

}  // namespace

void write_atomic(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

std::string metrics_csv(const MetricsTable& table) {
    std::string out = "model_id,regime,p,mse\n";
    for (const auto& r : table.rows()) {
        out += r.model_id + "," + to_string(r.regime) + "," + std::to_string(r.p) + "," +
               fmt(r.mse) + "\n";
    }
    return out;
}

MetricsTable parse_metrics_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "model_id,regime,p,mse") {
        throw DataError(origin + ": missing or unexpected header (want model_id,regime,p,mse)");
    }
    MetricsTable table;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        const auto bad = [&](const std::string& why) {
            return DataError(origin + ": line " + std::to_string(lineno) + ": " + why);
        };
        if (f.size() != 4) throw bad("expected 4 fields, got " + std::to_string(f.size()));
        MseRow row;
        row.model_id = f[0];
        try {
            row.regime = regime_from_string(f[1]);
        } catch (const std::exception&) {
            throw bad("unknown regime '" + f[1] + "'");
        }
        const auto [pp, pe] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), row.p);
        if (pe != std::errc() || pp != f[2].data() + f[2].size()) throw bad("bad partition index '" + f[2] + "'");
        const auto [mp, me] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), row.mse);
        if (me != std::errc() || mp != f[3].data() + f[3].size()) throw bad("bad mse '" + f[3] + "'");
        try {
            table.add(row);
        } catch (const std::exception& e) {
            throw bad(e.what());
        }
    }
    return table;
}

RunResult run_experiment(const ExperimentConfig& config_in, const RunOptions& options) {
    ExperimentConfig cfg = config_in;
    if (options.seeds) cfg.seeds = *options.seeds;
    if (options.output_dir) cfg.output_dir = *options.output_dir;
    if (auto findings = validate_config(cfg); !findings.empty()) throw ConfigError(findings);

    RunResult result;
    result.dir = options.run_dir ? *options.run_dir : fresh_run_dir(cfg.output_dir, cfg.name);
    fs::create_directories(result.dir / "logs");
    fs::create_directories(result.dir / "checkpoints");
    write_atomic(result.dir / "config.json", config_to_json(cfg) + "\n");

    Diagnostics diag;
    const TimeSeries series = materialize(cfg.dataset, cfg.partitions);
    const auto plan = data::make_partitions(series.length(), cfg.partitions, cfg.ratio);

    std::map<std::size_t, std::unique_ptr<data::PartitionedSeries>> by_horizon;
    for (const auto& m : cfg.models) {
        if (!by_horizon.count(m.horizon)) {
            by_horizon[m.horizon] = std::make_unique<data::PartitionedSeries>(
                series, plan, m.context_length, m.horizon, cfg.normalization, &diag);
        }
    }
    std::vector<TimeSeries> corpus;
    if (cfg.pretrain) {
        for (const auto& src : cfg.pretrain->corpus) corpus.push_back(materialize(src, cfg.partitions));
    }

    std::vector<Cell> cells;
    for (const auto& m : cfg.models) {
        for (auto seed : cfg.seeds) {
            Cell c;
            c.model = &m;
            c.seed = seed;
            c.id = cell_id(m.id, seed);
            c.data = by_horizon.at(m.horizon).get();
            cells.push_back(std::move(c));
        }
    }

    Runner runner(cfg, result.dir);
    {
        std::vector<std::function<void()>> tasks;
        for (auto& c : cells) tasks.push_back([&runner, &c, &corpus] { runner.prepare(c, corpus); });
        run_parallel(tasks, options.jobs);
    }

    // One lineage task per cell, then one task per (cell, p) for full retraining.
    const std::size_t P = plan.partitions.size();
    const bool full = runner.wants(Regime::full);
    const std::size_t per_cell = 1 + (full ? P : 0);
    std::vector<TaskResult> results(cells.size() * per_cell);
    std::vector<std::function<void()>> tasks;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Cell& c = cells[i];
        if (c.prepare_failure) continue;
        auto guarded = [&results, &c](std::size_t slot, std::string stage, auto fn) {
            return [&results, &c, slot, stage = std::move(stage), fn] {
                try {
                    results[slot] = fn();
                } catch (const std::exception& e) {
                    results[slot].failure = FailureRecord{c.id, stage, e.what()};
                }
            };
        };
        const bool is_plugin = c.model->plugin.has_value();
        tasks.push_back(guarded(i * per_cell, "zero/incremental", [&runner, &c, is_plugin] {
            return is_plugin ? runner.lineage_plugin(c) : runner.lineage_native(c);
        }));
        if (full) {
            for (std::size_t p = 0; p < P; ++p) {
                tasks.push_back(guarded(i * per_cell + 1 + p, "full p=" + std::to_string(p),
                                        [&runner, &c, p, is_plugin] {
                                            return is_plugin ? runner.full_plugin(c, p)
                                                             : runner.full_native(c, p);
                                        }));
            }
        }
    }
    run_parallel(tasks, options.jobs);

    // Assemble in a fixed order so outputs do not depend on scheduling.
    std::string train_log;
    json moments = json::array();
    json forgetting = json::array();
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Cell& c = cells[i];
        for (const auto& l : c.prepare_log) train_log += l + "\n";
        if (c.prepare_failure) {
            result.failures.push_back(*c.prepare_failure);
            continue;
        }
        bool failed = false;
        for (std::size_t k = 0; k < per_cell; ++k) {
            if (const auto& f = results[i * per_cell + k].failure) {
                result.failures.push_back(*f);
                failed = true;
            }
        }
        for (std::size_t k = 0; k < per_cell; ++k) {
            for (const auto& l : results[i * per_cell + k].log) train_log += l + "\n";
        }
        if (failed) continue;
        auto& lineage_task = results[i * per_cell];
        std::vector<MseRow> zero_inc = lineage_task.rows;
        for (const auto& r : zero_inc) result.table.add(r);
        for (std::size_t k = 1; k < per_cell; ++k) {
            for (const auto& r : results[i * per_cell + k].rows) result.table.add(r);
        }
        for (std::size_t k = 0; k < per_cell; ++k) {
            for (const auto& m : results[i * per_cell + k].moments) {
                json j;
                j["model_id"] = c.id;
                j["regime"] = to_string(m.regime);
                j["p"] = m.p;
                j["report"] = moment_json(m.report);
                moments.push_back(j);
            }
        }
        result.lineage.insert(result.lineage.end(), lineage_task.lineage.begin(),
                              lineage_task.lineage.end());
        if (lineage_task.forgetting) {
            result.forgetting.emplace_back(c.id, *lineage_task.forgetting);
            json fj;
            fj["model_id"] = c.id;
            fj["rows"] = lineage_task.forgetting->rows;
            json flags = json::array();
            for (std::size_t p = 0; p < lineage_task.forgetting->forgetting.size(); ++p) {
                if (lineage_task.forgetting->forgetting[p]) flags.push_back(p);
            }
            fj["forgetting_at"] = flags;
            forgetting.push_back(fj);
        }
    }
    result.table = metrics::ratio_metrics(std::move(result.table));

    write_atomic(result.dir / "metrics.csv", metrics_csv(result.table));
    write_atomic(result.dir / "ratios.csv", ratios_csv(result.table));

    json summary;
    summary["name"] = cfg.name;
    summary["ratios"] = json::array();
    for (const auto& r : result.table.ratio_rows()) {
        json j;
        j["model_id"] = r.model_id;
        j["p"] = r.p;
        j["r_zero"] = ratio_json(r.r_zero);
        j["r_full"] = ratio_json(r.r_full);
        j["r_fz"] = ratio_json(r.r_fz);
        summary["ratios"].push_back(j);
    }
    summary["trends"] = json::array();
    for (const auto& t : trends_of(result.table, cfg.spike_factor)) {
        if (!t.trend) continue;
        json j;
        j["model_id"] = t.model_id;
        j["metric"] = t.metric;
        j["slope"] = t.trend->slope;
        j["spikes"] = t.trend->spike_indices;
        summary["trends"].push_back(j);
    }
    summary["forgetting"] = forgetting;
    summary["moments"] = moments;
    json failures = json::array();
    for (const auto& f : result.failures) {
        json j;
        j["model_id"] = f.model_id;
        j["stage"] = f.stage;
        j["error"] = f.error;
        failures.push_back(j);
    }
    summary["failures"] = failures;
    write_atomic(result.dir / "summary.json", summary.dump(2) + "\n");
    write_atomic(result.dir / "failures.json", failures.dump(2) + "\n");

    std::string lineage;
    for (const auto& l : result.lineage) {
        json j;
        j["model_id"] = l.model_id;
        j["round"] = l.round;
        j["input"] = l.input;
        j["output"] = l.output;
        lineage += j.dump() + "\n";
    }
    write_atomic(result.dir / "lineage.jsonl", lineage);
    write_atomic(result.dir / "logs" / "train.jsonl", train_log);
    std::string warnings;
    for (const auto& w : diag.warnings()) warnings += w + "\n";
    write_atomic(result.dir / "logs" / "diagnostics.txt", warnings);
    return result;
}

ReportResult report(const fs::path& run_dir, double spike_factor) {
    const fs::path metrics_path = run_dir / "metrics.csv";
    std::ifstream in(metrics_path, std::ios::binary);
    if (!in) throw DataError(metrics_path.string() + ": metrics file not found");
    std::ostringstream buf;
    buf << in.rdbuf();
    auto table = metrics::ratio_metrics(parse_metrics_csv(buf.str(), metrics_path.string()));

    json summary_json;
    const fs::path summary_path = run_dir / "summary.json";
    if (fs::exists(summary_path)) {
        std::ifstream sin(summary_path);
        try {
            summary_json = json::parse(sin);
        } catch (const json::parse_error& e) {
            throw DataError(summary_path.string() + ": not valid JSON: " + e.what());
        }
    }

    ReportResult out;
    const fs::path plot = run_dir / "plot";
    fs::create_directories(plot);

    std::string mse = "series,p,value\n";
    for (const auto& r : table.rows()) {
        mse += r.model_id + "/" + to_string(r.regime) + "," + std::to_string(r.p) + "," +
               fmt(r.mse) + "\n";
    }
    write_atomic(plot / "mse.csv", mse);
    out.files.push_back(plot / "mse.csv");

    std::size_t defined_ratios = 0;
    const std::pair<const char*, std::optional<Ratio> RatioRow::*> fields[] = {
        {"r_zero", &RatioRow::r_zero}, {"r_full", &RatioRow::r_full}, {"r_fz", &RatioRow::r_fz}};
    for (const auto& [name, field] : fields) {
        std::string csv = "series,p,value\n";
        for (const auto& r : table.ratio_rows()) {
            const auto& v = r.*field;
            if (!v || v->degenerate()) continue;
            ++defined_ratios;
            csv += r.model_id + "," + std::to_string(r.p) + "," + fmt(v->value()) + "\n";
        }
        const auto path = plot / (std::string(name) + ".csv");
        write_atomic(path, csv);
        out.files.push_back(path);
    }

    std::ostringstream s;
    s << "run: " << run_dir.string() << "\n";
    s << "rows: " << table.rows().size() << "\n";
    const auto ids = table.model_ids();
    s << "models:";
    for (const auto& id : ids) s << " " << id;
    s << "\n";
    if (defined_ratios == 0) {
        s << "no ratios computable\n";
    } else {
        for (const auto& t : trends_of(table, spike_factor)) {
            if (!t.trend) {
                s << "trend: " << t.metric << " (" << t.model_id << ") needs at least 3 defined values, has "
                  << t.defined << "\n";
                continue;
            }
            s << "trend: " << t.metric << " slope=" << fmt(t.trend->slope) << " (" << t.model_id
              << ")\n";
            for (auto p : t.trend->spike_indices) {
                s << "spike: " << t.metric << " p=" << p << " (" << t.model_id << ")\n";
            }
        }
    }
    if (summary_json.contains("forgetting")) {
        for (const auto& f : summary_json["forgetting"]) {
            const auto& at = f.at("forgetting_at");
            if (at.empty()) {
                s << "forgetting: none (" << f.at("model_id").get<std::string>() << ")\n";
                continue;
            }
            for (const auto& p : at) {
                s << "forgetting: p=" << p.get<std::size_t>() << " ("
                  << f.at("model_id").get<std::string>() << ")\n";
            }
        }
    }
    if (summary_json.contains("failures")) {
        for (const auto& f : summary_json["failures"]) {
            s << "failure: " << f.at("model_id").get<std::string>() << " ["
              << f.at("stage").get<std::string>() << "] " << f.at("error").get<std::string>()
              << "\n";
        }
    }
    out.summary = s.str();
    write_atomic(run_dir / "summary.txt", out.summary);
    out.files.push_back(run_dir / "summary.txt");
    return out;
}

}  // namespace tplas::runner
