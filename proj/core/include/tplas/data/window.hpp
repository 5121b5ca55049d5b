#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "tplas/core/diagnostics.hpp"
#include "tplas/core/types.hpp"

namespace tplas::data {

/// Number of windows with context `l` and horizon `h` that fit inside a range of `length` steps.
constexpr std::size_t window_count(std::size_t length, std::size_t l, std::size_t h) {
    return length >= l + h ? length - l - h + 1 : 0;
}

/// Materialized windows over `range`, in time order. A range shorter than l+h yields none and
/// is recorded in `diag`.
std::vector<WindowSample> window_iter(const TimeSeries& series, Range range, std::size_t l,
                                      std::size_t h, Diagnostics* diag = nullptr);

/// Non-owning window: context and target are adjacent row blocks of the same buffer.
struct Sample {
    MatrixView context;
    MatrixView target;
    std::size_t anchor = 0;  // series index of the last context step
};

/// Windows over one range of a shared, already-normalized block of rows. Cheap to copy.
class WindowSet {
public:
    WindowSet() = default;
    /// `block` holds the rows of [block_origin, block_origin + block->rows()).
    WindowSet(std::shared_ptr<const Matrix> block, std::size_t block_origin, Range range,
              std::size_t l, std::size_t h);

    std::size_t size() const { return count_; }
    bool empty() const { return count_ == 0; }
    Range range() const { return range_; }
    std::size_t context_length() const { return l_; }
    std::size_t horizon() const { return h_; }
    std::size_t channels() const { return block_ ? block_->cols() : 0; }

    Sample operator[](std::size_t k) const;
    std::vector<Sample> samples() const;

private:
    std::shared_ptr<const Matrix> block_;
    std::size_t origin_ = 0;
    Range range_;
    std::size_t l_ = 0;
    std::size_t h_ = 0;
    std::size_t count_ = 0;
};

}  // namespace tplas::data
