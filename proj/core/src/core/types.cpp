#include "tplas/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace tplas {

TimeSeries::TimeSeries(Matrix values, std::vector<std::string> channel_names,
                       double interval_seconds, std::string origin)
    : values_(std::move(values)),
      channel_names_(std::move(channel_names)),
      interval_seconds_(interval_seconds),
      origin_(std::move(origin)) {
    if (values_.rows() < 1 || values_.cols() < 1) {
        throw DataError("TimeSeries: need T >= 1 and C >= 1");
    }
    if (channel_names_.size() != values_.cols()) {
        throw DataError("TimeSeries: " + std::to_string(channel_names_.size()) +
                        " channel names for " + std::to_string(values_.cols()) + " channels");
    }
    for (std::size_t t = 0; t < values_.rows(); ++t) {
        for (std::size_t c = 0; c < values_.cols(); ++c) {
            if (!std::isfinite(values_(t, c))) {
                throw DataError("TimeSeries: non-finite value at step " + std::to_string(t) +
                                ", channel " + std::to_string(c));
            }
        }
    }
}

namespace {
std::vector<std::string> default_names(std::size_t count) {
    std::vector<std::string> names;
    names.reserve(count);
    for (std::size_t c = 0; c < count; ++c) names.push_back("ch" + std::to_string(c));
    return names;
}
}  // namespace

TimeSeries::TimeSeries(Matrix values)
    : TimeSeries(Matrix(values), default_names(values.cols())) {}

const char* to_string(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

const Range& Partition::split(Split s) const {
    switch (s) {
        case Split::train: return train;
        case Split::val: return val;
        case Split::test: return test;
    }
    return train;
}

std::vector<std::string> validate_plan(const PartitionPlan& plan) {
    std::vector<std::string> findings;
    const auto& parts = plan.partitions;

    if (parts.size() != plan.count) {
        findings.push_back("plan declares " + std::to_string(plan.count) + " partitions but holds " +
                           std::to_string(parts.size()));
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].index != i) {
            findings.push_back("partition at position " + std::to_string(i) + " has index " +
                               std::to_string(parts[i].index));
        }
        if (parts[i].range.empty()) {
            findings.push_back("partition " + std::to_string(i) + " is empty");
        }
        if (parts[i].range.end > plan.series_length) {
            findings.push_back("partition " + std::to_string(i) + " ends past series length " +
                               std::to_string(plan.series_length));
        }
    }

    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (parts[i + 1].range.begin < parts[i].range.begin) {
            findings.push_back("partitions " + std::to_string(i) + "," + std::to_string(i + 1) +
                               " are not chronological");
        }
    }
    for (std::size_t i = 0; i < parts.size(); ++i) {
        for (std::size_t j = i + 1; j < parts.size(); ++j) {
            const Range& a = parts[i].range;
            const Range& b = parts[j].range;
            if (!a.empty() && !b.empty() && a.begin < b.end && b.begin < a.end) {
                findings.push_back("partitions " + std::to_string(i) + "," + std::to_string(j) +
                                   " overlap");
            }
        }
    }

    // Coverage: walk the sorted ranges and report each maximal uncovered run.
    std::vector<Range> sorted;
    for (const auto& p : parts) {
        if (!p.range.empty()) sorted.push_back(p.range);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const Range& a, const Range& b) { return a.begin < b.begin; });
    std::size_t covered_to = 0;
    auto report_gap = [&](std::size_t from, std::size_t to) {
        if (to <= from) return;
        if (to - from == 1) {
            findings.push_back("coverage gap at " + std::to_string(from));
        } else {
            findings.push_back("coverage gap at " + std::to_string(from) + ".." +
                               std::to_string(to - 1));
        }
    };
    for (const auto& r : sorted) {
        report_gap(covered_to, std::min(r.begin, plan.series_length));
        covered_to = std::max(covered_to, r.end);
    }
    report_gap(covered_to, plan.series_length);

    const double total = plan.ratio.total();
    for (const auto& p : parts) {
        const std::string who = "partition " + std::to_string(p.index);
        if (p.train.begin != p.range.begin || p.train.end != p.val.begin ||
            p.val.end != p.test.begin || p.test.end != p.range.end ||
            p.train.end < p.train.begin || p.val.end < p.val.begin || p.test.end < p.test.begin) {
            findings.push_back(who + ": train/val/test do not tile the partition in order");
            continue;
        }
        if (total <= 0.0) continue;
        const auto n = static_cast<double>(p.range.size());
        const struct {
            const char* name;
            double share;
            std::size_t len;
        } splits[] = {{"train", plan.ratio.train, p.train.size()},
                      {"val", plan.ratio.val, p.val.size()},
                      {"test", plan.ratio.test, p.test.size()}};
        for (const auto& s : splits) {
            const double ideal = n * s.share / total;
            if (std::abs(static_cast<double>(s.len) - ideal) >= 2.0) {
                std::ostringstream msg;
                msg << who << ": " << s.name << " length " << s.len << " departs from ratio share "
                    << ideal;
                findings.push_back(msg.str());
            }
        }
    }
    return findings;
}

const char* to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::naive_seasonal: return "naive_seasonal";
        case ModelKind::linear_direct: return "linear_direct";
        case ModelKind::mlp: return "mlp";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "naive_seasonal" || name == "naive") return ModelKind::naive_seasonal;
    if (name == "linear_direct" || name == "linear") return ModelKind::linear_direct;
    if (name == "mlp") return ModelKind::mlp;
    throw ModelError("unknown model kind '" + name + "'");
}

const char* to_string(Regime regime) {
    switch (regime) {
        case Regime::init: return "init";
        case Regime::zero: return "zero";
        case Regime::incremental: return "incremental";
        case Regime::full: return "full";
        case Regime::pretrain: return "pretrain";
    }
    return "?";
}

Regime regime_from_string(const std::string& name) {
    if (name == "init") return Regime::init;
    if (name == "zero") return Regime::zero;
    if (name == "incremental") return Regime::incremental;
    if (name == "full") return Regime::full;
    if (name == "pretrain") return Regime::pretrain;
    throw std::invalid_argument("unknown regime '" + name + "'");
}

void MetricsTable::add(MseRow row) {
    if (!(row.mse >= 0.0)) {
        throw std::invalid_argument("MetricsTable: mse must be >= 0 (model " + row.model_id + ")");
    }
    rows_.push_back(std::move(row));
}

std::optional<double> MetricsTable::find(const std::string& model_id, Regime regime,
                                         std::size_t p) const {
    for (const auto& r : rows_) {
        if (r.model_id == model_id && r.regime == regime && r.p == p) return r.mse;
    }
    return std::nullopt;
}

std::vector<std::string> MetricsTable::model_ids() const {
    std::vector<std::string> ids;
    for (const auto& r : rows_) {
        if (std::find(ids.begin(), ids.end(), r.model_id) == ids.end()) ids.push_back(r.model_id);
    }
    return ids;
}

}  // namespace tplas
