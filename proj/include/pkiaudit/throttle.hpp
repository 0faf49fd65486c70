#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <vector>

namespace pkiaudit {

/// Token bucket shared by every task that talks to one backend.
/// A rate of zero or less disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double queries_per_second, double burst = 1.0);

  void acquire();
  double rate() const { return rate_; }

 private:
  using Clock = std::chrono::steady_clock;

  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

/// Bounded retry with fixed backoff steps. The sleeper is injectable so
/// tests do not wait.
struct RetryPolicy {
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(500),
                                                 std::chrono::milliseconds(2000)};
  std::function<void(std::chrono::milliseconds)> sleep;

  static RetryPolicy standard();
  static RetryPolicy immediate(std::size_t retries);

  int attempts() const { return static_cast<int>(backoff.size()) + 1; }
  void wait_before_retry(int retry_index) const;
};

}  // namespace pkiaudit
