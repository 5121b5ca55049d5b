#include "tplas/data/partition.hpp"

#include <cmath>
#include <stdexcept>

namespace tplas::data {

namespace {

std::size_t floor_share(std::size_t n, double share, double total) {
    // The small slack keeps exact integer products (e.g. 10 * 2 / 10) from rounding down.
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * share / total + 1e-9));
}

}  // namespace

PartitionPlan make_partitions(std::size_t series_length, std::size_t count,
                              const SplitRatio& ratio) {
    if (count < 1) throw DataError("make_partitions: P must be >= 1");
    if (series_length < count) {
        throw DataError("make_partitions: series length " + std::to_string(series_length) +
                        " is shorter than P = " + std::to_string(count));
    }
    if (!(ratio.train > 0.0 && ratio.val > 0.0 && ratio.test > 0.0)) {
        throw DataError("make_partitions: ratio parts must be positive");
    }

    PartitionPlan plan;
    plan.series_length = series_length;
    plan.count = count;
    plan.ratio = ratio;

    const std::size_t base = series_length / count;
    const double total = ratio.total();
    std::size_t start = 0;
    for (std::size_t p = 0; p < count; ++p) {
        const std::size_t len = (p + 1 == count) ? series_length - start : base;
        const std::size_t val = floor_share(len, ratio.val, total);
        const std::size_t test = floor_share(len, ratio.test, total);
        const std::size_t train = len - val - test;

        Partition part;
        part.index = p;
        part.range = {start, start + len};
        part.train = {start, start + train};
        part.val = {start + train, start + train + val};
        part.test = {start + train + val, start + len};
        plan.partitions.push_back(part);
        start += len;
    }
    return plan;
}

}  // namespace tplas::data
