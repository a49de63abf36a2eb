#pragma once

#include <chrono>
#include <mutex>
#include <thread>

namespace nsg {

// Strict request spacing: with a configured requests-per-minute budget the
// gap between consecutive acquisitions never drops below 60/rpm seconds
// (token bucket with capacity one, so the rate bound holds over any window).
class RateLimiter {
public:
    explicit RateLimiter(int requests_per_minute) {
        if (requests_per_minute > 0) {
            interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                std::chrono::duration<double>(60.0 / requests_per_minute));
        }
    }

    void acquire() {
        if (interval_.count() == 0) return;
        std::chrono::steady_clock::time_point slot;
        {
            std::scoped_lock lock(mutex_);
            const auto now = std::chrono::steady_clock::now();
            slot = next_slot_ < now ? now : next_slot_;
            next_slot_ = slot + interval_;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    std::chrono::steady_clock::duration interval_{};
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_slot_{};
};

}  // namespace nsg
