#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tplas/core/matrix.hpp"

namespace tplas {

/// Thrown when input data violates a documented precondition.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown for model misuse: bad shapes, untrainable models, corrupt checkpoints.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Rectangular, finite T x C series. Immutable after construction.
class TimeSeries {
public:
    TimeSeries(Matrix values, std::vector<std::string> channel_names,
               double interval_seconds = 1.0, std::string origin = {});

    /// Convenience constructor with generated channel names ch0..chC-1.
    explicit TimeSeries(Matrix values);

    std::size_t length() const { return values_.rows(); }
    std::size_t channels() const { return values_.cols(); }
    const Matrix& values() const { return values_; }
    const std::vector<std::string>& channel_names() const { return channel_names_; }
    double interval_seconds() const { return interval_seconds_; }
    const std::string& origin() const { return origin_; }

    double operator()(std::size_t t, std::size_t c) const { return values_(t, c); }

private:
    Matrix values_;
    std::vector<std::string> channel_names_;
    double interval_seconds_;
    std::string origin_;
};

/// Half-open step range [begin, end).
struct Range {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end > begin ? end - begin : 0; }
    bool empty() const { return end <= begin; }
    bool contains(std::size_t t) const { return t >= begin && t < end; }
    bool operator==(const Range&) const = default;
};

/// One supervised pair: context rows [anchor-l+1, anchor], target rows [anchor+1, anchor+h].
struct WindowSample {
    Matrix context;
    Matrix target;
    std::size_t anchor = 0;  // series index of the last context step
};

struct SplitRatio {
    double train = 6.0;
    double val = 2.0;
    double test = 2.0;

    double total() const { return train + val + test; }
    bool operator==(const SplitRatio&) const = default;
};

enum class Split { train, val, test };

const char* to_string(Split split);

struct Partition {
    std::size_t index = 0;
    Range range;
    Range train;
    Range val;
    Range test;

    const Range& split(Split s) const;
    bool operator==(const Partition&) const = default;
};

struct PartitionPlan {
    std::size_t series_length = 0;
    std::size_t count = 0;
    SplitRatio ratio;
    std::vector<Partition> partitions;

    bool operator==(const PartitionPlan&) const = default;
};

/// Every invariant violation of `plan` as a readable finding. Empty iff valid.
std::vector<std::string> validate_plan(const PartitionPlan& plan);

struct NormStats {
    std::vector<double> mean;
    std::vector<double> std;

    bool operator==(const NormStats&) const = default;
};

enum class ModelKind { naive_seasonal, linear_direct, mlp };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Shape and hyper-structure of a native forecaster.
struct ForecasterSpec {
    ModelKind kind = ModelKind::naive_seasonal;
    std::size_t context_length = 96;
    std::size_t horizon = 96;
    std::size_t channels = 1;
    std::size_t season_length = 1;          // naive_seasonal
    std::size_t kernel_size = 25;           // linear_direct
    std::vector<std::size_t> hidden{128, 128};  // mlp

    bool operator==(const ForecasterSpec&) const = default;
};

enum class Regime { init, zero, incremental, full, pretrain };

const char* to_string(Regime regime);
Regime regime_from_string(const std::string& name);

struct Provenance {
    Regime regime = Regime::init;
    std::vector<std::size_t> partitions_seen;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;

    bool operator==(const Provenance&) const = default;
};

struct NamedArray {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;

    bool operator==(const NamedArray&) const = default;
};

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
    ForecasterSpec spec;
    std::vector<NamedArray> params;
    Provenance provenance;
    int format_version = kCheckpointFormatVersion;

    bool trainable() const { return !params.empty(); }
    bool operator==(const Checkpoint&) const = default;
};

/// Ratio of two MSE rows. A zero denominator makes it degenerate; both raw values are kept.
struct Ratio {
    double numerator = 0.0;
    double denominator = 0.0;

    bool degenerate() const { return denominator == 0.0; }
    double value() const { return numerator / denominator; }
    bool operator==(const Ratio&) const = default;
};

struct MseRow {
    std::string model_id;
    Regime regime = Regime::zero;
    std::size_t p = 0;
    double mse = 0.0;

    bool operator==(const MseRow&) const = default;
};

struct RatioRow {
    std::string model_id;
    std::size_t p = 0;
    std::optional<Ratio> r_zero;
    std::optional<Ratio> r_full;
    std::optional<Ratio> r_fz;

    bool operator==(const RatioRow&) const = default;
};

/// MSE rows (normalized space) plus ratio rows derived from them.
class MetricsTable {
public:
    void add(MseRow row);
    const std::vector<MseRow>& rows() const { return rows_; }
    const std::vector<RatioRow>& ratio_rows() const { return ratio_rows_; }
    void set_ratio_rows(std::vector<RatioRow> rows) { ratio_rows_ = std::move(rows); }

    std::optional<double> find(const std::string& model_id, Regime regime, std::size_t p) const;
    /// Model ids in first-appearance order.
    std::vector<std::string> model_ids() const;

private:
    std::vector<MseRow> rows_;
    std::vector<RatioRow> ratio_rows_;
};

}  // namespace tplas
