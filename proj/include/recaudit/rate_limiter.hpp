#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <thread>

namespace recaudit::gateway {

// Spaces out acquisitions so a live backend never exceeds the configured
// requests/second. Clock and sleep are injectable for testing.
class RateLimiter {
 public:
  using ClockFn = std::function<double()>;   // seconds, monotonic
  using SleepFn = std::function<void(double)>;

  explicit RateLimiter(double requests_per_second,
                       ClockFn now = default_clock,
                       SleepFn sleep = default_sleep)
      : interval_(requests_per_second > 0 ? 1.0 / requests_per_second : 0.0),
        now_(std::move(now)),
        sleep_(std::move(sleep)) {}

  // Blocks until a slot is available, then claims it.
  void acquire() {
    if (interval_ <= 0.0) return;
    double wait = 0.0;
    {
      std::lock_guard lock(mutex_);
      const double t = now_();
      const double slot = next_slot_ > t ? next_slot_ : t;
      wait = slot - t;
      next_slot_ = slot + interval_;
    }
    if (wait > 0.0) sleep_(wait);
  }

  static double default_clock() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
  }

  static void default_sleep(double seconds) {
    std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

 private:
  double interval_;
  ClockFn now_;
  SleepFn sleep_;
  double next_slot_ = 0.0;
  std::mutex mutex_;
};

}  // namespace recaudit::gateway
