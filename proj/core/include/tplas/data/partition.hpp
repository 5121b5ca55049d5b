#pragma once

#include <cstddef>

#include "tplas/core/types.hpp"

namespace tplas::data {

/// P chronological partitions of length floor(T/P); the remainder goes to the last one.
/// Inside each partition val and test get floor(n * share) steps and train takes the rest.
PartitionPlan make_partitions(std::size_t series_length, std::size_t count,
                              const SplitRatio& ratio = {});

}  // namespace tplas::data
