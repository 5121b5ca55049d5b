#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tplas/core/types.hpp"
#include "tplas/data/dataset.hpp"
#include "tplas/training/optimizer.hpp"

namespace tplas::training {

enum class OptimizerKind { adamw, sgd };

const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct TrainConfig {
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    double lr = 1e-4;
    std::uint64_t seed = 0;
    bool shuffle = true;
    OptimizerKind optimizer = OptimizerKind::adamw;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;

    OptimHyper hyper() const { return {lr, beta1, beta2, eps, weight_decay}; }
};

/// Throws std::invalid_argument unless epochs >= 1, batch_size >= 1 and lr >= 0.
void validate(const TrainConfig& cfg);

struct EpochRecord {
    std::string run_id;
    std::size_t epoch = 0;
    double train_mse = 0.0;
    std::optional<double> val_mse;
    double wall_ms = 0.0;
};

/// {"run_id","epoch","train_mse","val_mse","wall_ms"} on one line, val_mse null when absent.
std::string to_jsonl(const EpochRecord& record);

struct TrainHooks {
    std::string run_id;
    std::function<void(const EpochRecord&)> on_epoch;
    data::AccessHook on_access;
};

/// The shared loop: exactly cfg.epochs passes over `train` in (optionally shuffled) batches
/// with a fresh optimizer state. `stream` selects the shuffle sequence. Returns updated params;
/// provenance is left to the caller. Train MSE is logged after each epoch; `val` never gates.
Checkpoint train_on_samples(const Checkpoint& start, std::span<const data::Sample> train,
                            std::span<const data::Sample> val, const TrainConfig& cfg,
                            std::uint64_t stream, const TrainHooks& hooks = {});

/// One round of incremental fine-tuning: continue from `old` using partition p's train windows.
Checkpoint incremental_finetune(const Checkpoint& old, const data::PartitionedSeries& data,
                                std::size_t p, const TrainConfig& cfg,
                                const TrainHooks& hooks = {});

/// Retrain on the union of train windows of partitions 0..p, from a fresh seeded init.
Checkpoint full_train(const ForecasterSpec& spec, const data::PartitionedSeries& data,
                      std::size_t p, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Retrain on partitions 0..p starting from a pretrained checkpoint.
Checkpoint full_train(const Checkpoint& pretrained, const data::PartitionedSeries& data,
                      std::size_t p, const TrainConfig& cfg, const TrainHooks& hooks = {});

/// Fresh init trained on windows pooled across the corpus, each series z-scored by its own
/// global stats.
Checkpoint pretrain(const ForecasterSpec& spec, std::span<const TimeSeries> corpus,
                    const TrainConfig& cfg, const TrainHooks& hooks = {});

}  // namespace tplas::training
