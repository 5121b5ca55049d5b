#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace tplas {

/// Append-only sink for non-fatal findings (degenerate ranges, floored std, ...).
/// Safe to share between threads.
class Diagnostics {
public:
    void warn(std::string message) {
        std::lock_guard lock(mutex_);
        warnings_.push_back(std::move(message));
    }

    std::vector<std::string> warnings() const {
        std::lock_guard lock(mutex_);
        return warnings_;
    }

    bool empty() const {
        std::lock_guard lock(mutex_);
        return warnings_.empty();
    }

private:
    mutable std::mutex mutex_;
    std::vector<std::string> warnings_;
};

}  // namespace tplas
