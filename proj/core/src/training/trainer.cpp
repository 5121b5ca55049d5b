#include "tplas/training/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "tplas/data/normalize.hpp"
#include "tplas/data/window.hpp"

namespace tplas::training {

const char* to_string(OptimizerKind kind) {
    return kind == OptimizerKind::adamw ? "adamw" : "sgd";
}

OptimizerKind optimizer_from_string(const std::string& name) {
    if (name == "adamw") return OptimizerKind::adamw;
    if (name == "sgd") return OptimizerKind::sgd;
    throw std::invalid_argument("unknown optimizer '" + name + "'");
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw std::invalid_argument("TrainConfig: epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
    if (!(cfg.lr >= 0.0)) throw std::invalid_argument("TrainConfig: lr must be >= 0");
}

std::string to_jsonl(const EpochRecord& record) {
    nlohmann::ordered_json j;
    j["run_id"] = record.run_id;
    j["epoch"] = record.epoch;
    j["train_mse"] = record.train_mse;
    j["val_mse"] = record.val_mse ? nlohmann::ordered_json(*record.val_mse) : nlohmann::ordered_json(nullptr);
    j["wall_ms"] = record.wall_ms;
    return j.dump();
}

Checkpoint train_on_samples(const Checkpoint& start, std::span<const data::Sample> train,
                            std::span<const data::Sample> val, const TrainConfig& cfg,
                            std::uint64_t stream, const TrainHooks& hooks) {
    validate(cfg);
    if (!start.trainable()) throw ModelError("model not trainable");
    if (train.empty()) throw DataError("no training windows");

    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    std::mt19937_64 rng(seq);

    Checkpoint ckpt = start;
    models::ParamArrays params = models::param_values(start);
    OptimState state = make_state(params, cfg.hyper());
    std::vector<std::size_t> order(train.size());
    std::vector<data::Sample> batch;
    batch.reserve(cfg.batch_size);

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        std::iota(order.begin(), order.end(), std::size_t{0});
        if (cfg.shuffle) std::shuffle(order.begin(), order.end(), rng);

        for (std::size_t first = 0; first < order.size(); first += cfg.batch_size) {
            const std::size_t last = std::min(order.size(), first + cfg.batch_size);
            batch.clear();
            for (std::size_t i = first; i < last; ++i) batch.push_back(train[order[i]]);
            const auto g = models::grad(ckpt, batch);
            try {
                auto [next, next_state] = cfg.optimizer == OptimizerKind::adamw
                                              ? adamw_step(std::move(params), g.grads, std::move(state))
                                              : sgd_step(std::move(params), g.grads, std::move(state));
                params = std::move(next);
                state = std::move(next_state);
            } catch (const TrainingError& e) {
                throw TrainingError((hooks.run_id.empty() ? std::string() : hooks.run_id + ": ") +
                                    "epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(first / cfg.batch_size) + ": " + e.what());
            }
            ckpt = models::with_params(ckpt, params);
        }

        if (hooks.on_epoch) {
            EpochRecord rec;
            rec.run_id = hooks.run_id;
            rec.epoch = epoch;
            rec.train_mse = models::loss(ckpt, train);
            if (!val.empty()) rec.val_mse = models::loss(ckpt, val);
            rec.wall_ms = std::chrono::duration<double, std::milli>(
                              std::chrono::steady_clock::now() - t0)
                              .count();
            hooks.on_epoch(rec);
        }
    }
    return ckpt;
}

Checkpoint incremental_finetune(const Checkpoint& old, const data::PartitionedSeries& data,
                                std::size_t p, const TrainConfig& cfg, const TrainHooks& hooks) {
    validate(cfg);
    if (!old.trainable()) throw ModelError("model not trainable");
    const auto train = data.windows(p, Split::train, hooks.on_access).samples();
    if (train.empty()) {
        throw DataError("partition " + std::to_string(p) + " has no training windows");
    }
    const auto val = data.windows(p, Split::val, hooks.on_access).samples();
    Checkpoint out = train_on_samples(old, train, val, cfg, p, hooks);
    out.provenance.regime = Regime::incremental;
    out.provenance.partitions_seen.push_back(p);
    out.provenance.seed = cfg.seed;
    out.provenance.epochs = old.provenance.epochs + cfg.epochs;
    return out;
}

namespace {

Checkpoint full_train_from(const Checkpoint& start, const data::PartitionedSeries& data,
                           std::size_t p, const TrainConfig& cfg, const TrainHooks& hooks) {
    validate(cfg);
    if (!start.trainable()) throw ModelError("model not trainable");
    if (p >= data.count()) {
        throw DataError("partition " + std::to_string(p) + " out of range");
    }
    std::vector<data::Sample> train;
    for (std::size_t q = 0; q <= p; ++q) {
        const auto more = data.windows(q, Split::train, hooks.on_access).samples();
        train.insert(train.end(), more.begin(), more.end());
    }
    if (train.empty()) {
        throw DataError("partitions 0.." + std::to_string(p) + " have no training windows");
    }
    const auto val = data.windows(p, Split::val, hooks.on_access).samples();
    Checkpoint out = train_on_samples(start, train, val, cfg, p, hooks);
    out.provenance.regime = Regime::full;
    out.provenance.partitions_seen.resize(p + 1);
    std::iota(out.provenance.partitions_seen.begin(), out.provenance.partitions_seen.end(),
              std::size_t{0});
    out.provenance.seed = cfg.seed;
    out.provenance.epochs = cfg.epochs;
    return out;
}

}  // namespace

Checkpoint full_train(const ForecasterSpec& spec, const data::PartitionedSeries& data,
                      std::size_t p, const TrainConfig& cfg, const TrainHooks& hooks) {
    return full_train_from(models::init_params(spec, cfg.seed), data, p, cfg, hooks);
}

Checkpoint full_train(const Checkpoint& pretrained, const data::PartitionedSeries& data,
                      std::size_t p, const TrainConfig& cfg, const TrainHooks& hooks) {
    return full_train_from(pretrained, data, p, cfg, hooks);
}

Checkpoint pretrain(const ForecasterSpec& spec, std::span<const TimeSeries> corpus,
                    const TrainConfig& cfg, const TrainHooks& hooks) {
    validate(cfg);
    if (corpus.empty()) throw DataError("pretrain: empty corpus");
    std::vector<data::WindowSet> sets;
    std::vector<data::Sample> train;
    for (const auto& series : corpus) {
        if (series.channels() != spec.channels) {
            throw DataError("pretrain: corpus series has " + std::to_string(series.channels()) +
                            " channels, spec expects " + std::to_string(spec.channels));
        }
        const Range all{0, series.length()};
        const auto stats = data::fit_norm(series, all);
        auto block = std::make_shared<const Matrix>(data::apply_norm(series.values().view(), stats));
        sets.emplace_back(block, 0, all, spec.context_length, spec.horizon);
        const auto more = sets.back().samples();
        train.insert(train.end(), more.begin(), more.end());
    }
    if (train.empty()) throw DataError("pretrain: corpus yields no windows");
    Checkpoint out = train_on_samples(models::init_params(spec, cfg.seed), train, {}, cfg, 0, hooks);
    out.provenance.regime = Regime::pretrain;
    out.provenance.partitions_seen.clear();
    out.provenance.seed = cfg.seed;
    out.provenance.epochs = cfg.epochs;
    return out;
}

}  // namespace tplas::training
