#include "tplas/data/dataset.hpp"

#include <sstream>

#include "tplas/data/normalize.hpp"

namespace tplas::data {

const char* to_string(NormScope scope) {
    return scope == NormScope::partition ? "partition" : "reference";
}

NormScope norm_scope_from_string(const std::string& name) {
    if (name == "partition") return NormScope::partition;
    if (name == "reference") return NormScope::reference;
    throw DataError("unknown normalization scope '" + name + "'");
}

PartitionedSeries::PartitionedSeries(const TimeSeries& series, PartitionPlan plan, std::size_t l,
                                     std::size_t h, NormScope scope, Diagnostics* diag)
    : plan_(std::move(plan)), l_(l), h_(h), channels_(series.channels()), scope_(scope) {
    if (plan_.series_length != series.length()) {
        throw DataError("plan covers " + std::to_string(plan_.series_length) +
                        " steps but the series has " + std::to_string(series.length()));
    }
    if (const auto findings = validate_plan(plan_); !findings.empty()) {
        std::ostringstream msg;
        msg << "invalid partition plan:";
        for (const auto& f : findings) msg << "\n  " << f;
        throw DataError(msg.str());
    }
    if (l < 1 || h < 1) throw DataError("context length and horizon must be >= 1");

    const auto& parts = plan_.partitions;
    for (const auto& part : parts) {
        if (part.train.empty()) {
            throw DataError("partition " + std::to_string(part.index) + " has an empty train range");
        }
    }
    NormStats reference;
    if (scope_ == NormScope::reference) reference = fit_norm(series, parts.front().train, diag);

    for (const auto& part : parts) {
        NormStats stats = scope_ == NormScope::reference ? reference
                                                         : fit_norm(series, part.train, diag);
        auto block = std::make_shared<const Matrix>(
            apply_norm(series.values().row_block(part.range.begin, part.range.size()), stats));
        std::array<WindowSet, 3> sets{WindowSet(block, part.range.begin, part.train, l, h),
                                      WindowSet(block, part.range.begin, part.val, l, h),
                                      WindowSet(block, part.range.begin, part.test, l, h)};
        if (diag) {
            for (Split s : {Split::train, Split::val, Split::test}) {
                if (sets[static_cast<std::size_t>(s)].empty()) {
                    diag->warn("partition " + std::to_string(part.index) + " " + to_string(s) +
                               " range of " + std::to_string(part.split(s).size()) +
                               " steps is shorter than l+h = " + std::to_string(l + h) +
                               "; no windows");
                }
            }
        }
        stats_.push_back(std::move(stats));
        sets_.push_back(std::move(sets));
    }
}

const WindowSet& PartitionedSeries::windows(std::size_t p, Split split,
                                            const AccessHook& hook) const {
    if (p >= sets_.size()) {
        throw DataError("partition " + std::to_string(p) + " out of range (P = " +
                        std::to_string(sets_.size()) + ")");
    }
    if (hook) hook(p, split);
    return sets_[p][static_cast<std::size_t>(split)];
}

}  // namespace tplas::data
