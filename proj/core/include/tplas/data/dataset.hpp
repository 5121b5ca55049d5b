#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tplas/core/diagnostics.hpp"
#include "tplas/core/types.hpp"
#include "tplas/data/window.hpp"

namespace tplas::data {

/// Where normalization statistics come from.
enum class NormScope {
    partition,  // each partition's own train range normalizes that partition
    reference,  // partition 0's train range normalizes every partition
};

const char* to_string(NormScope scope);
NormScope norm_scope_from_string(const std::string& name);

/// Observer for data reads: (partition, split). Used to audit regime purity.
using AccessHook = std::function<void(std::size_t, Split)>;

/// A series cut by a plan, normalized per partition, with train/val/test windows ready.
/// Immutable after construction; window sets share the normalized blocks.
class PartitionedSeries {
public:
    PartitionedSeries(const TimeSeries& series, PartitionPlan plan, std::size_t l, std::size_t h,
                      NormScope scope = NormScope::partition, Diagnostics* diag = nullptr);

    const PartitionPlan& plan() const { return plan_; }
    std::size_t count() const { return plan_.partitions.size(); }
    std::size_t context_length() const { return l_; }
    std::size_t horizon() const { return h_; }
    std::size_t channels() const { return channels_; }
    NormScope scope() const { return scope_; }

    const NormStats& stats(std::size_t p) const { return stats_.at(p); }
    const WindowSet& windows(std::size_t p, Split split, const AccessHook& hook = {}) const;

private:
    PartitionPlan plan_;
    std::size_t l_;
    std::size_t h_;
    std::size_t channels_;
    NormScope scope_;
    std::vector<NormStats> stats_;
    std::vector<std::array<WindowSet, 3>> sets_;
};

}  // namespace tplas::data
