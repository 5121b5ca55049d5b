#include "tplas/data/window.hpp"

namespace tplas::data {

std::vector<WindowSample> window_iter(const TimeSeries& series, Range range, std::size_t l,
                                      std::size_t h, Diagnostics* diag) {
    if (l < 1 || h < 1) throw DataError("window_iter: l and h must be >= 1");
    if (range.end > series.length()) {
        throw DataError("window_iter: range ends past the series (" + std::to_string(range.end) +
                        " > " + std::to_string(series.length()) + ")");
    }
    const std::size_t n = window_count(range.size(), l, h);
    std::vector<WindowSample> out;
    if (n == 0) {
        if (diag) {
            diag->warn("range [" + std::to_string(range.begin) + "," + std::to_string(range.end) +
                       ") is shorter than l+h = " + std::to_string(l + h) + "; no windows");
        }
        return out;
    }
    out.reserve(n);
    const auto& values = series.values();
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t first = range.begin + k;
        out.push_back(WindowSample{Matrix(values.row_block(first, l)),
                                   Matrix(values.row_block(first + l, h)), first + l - 1});
    }
    return out;
}

WindowSet::WindowSet(std::shared_ptr<const Matrix> block, std::size_t block_origin, Range range,
                     std::size_t l, std::size_t h)
    : block_(std::move(block)), origin_(block_origin), range_(range), l_(l), h_(h) {
    if (!block_) throw DataError("WindowSet: null block");
    if (range.begin < origin_ || range.end > origin_ + block_->rows()) {
        throw DataError("WindowSet: range outside the backing block");
    }
    count_ = window_count(range.size(), l, h);
}

Sample WindowSet::operator[](std::size_t k) const {
    const std::size_t first = range_.begin - origin_ + k;
    return {block_->row_block(first, l_), block_->row_block(first + l_, h_),
            range_.begin + k + l_ - 1};
}

std::vector<Sample> WindowSet::samples() const {
    std::vector<Sample> out;
    out.reserve(count_);
    for (std::size_t k = 0; k < count_; ++k) out.push_back((*this)[k]);
    return out;
}

}  // namespace tplas::data
