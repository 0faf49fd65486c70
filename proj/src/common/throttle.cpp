#include "pkiaudit/throttle.hpp"

#include <algorithm>
#include <thread>

namespace pkiaudit {

RateLimiter::RateLimiter(double queries_per_second, double burst)
    : rate_(queries_per_second),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(Clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0) return;
  std::unique_lock lock(mutex_);
  for (;;) {
    auto now = Clock::now();
    std::chrono::duration<double> elapsed = now - last_;
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed.count() * rate_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    // Sleeping under the lock keeps waiters in arrival order.
    std::this_thread::sleep_for(wait);
  }
}

RetryPolicy RetryPolicy::standard() {
  RetryPolicy p;
  p.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  return p;
}

RetryPolicy RetryPolicy::immediate(std::size_t retries) {
  RetryPolicy p;
  p.backoff.assign(retries, std::chrono::milliseconds(0));
  p.sleep = [](std::chrono::milliseconds) {};
  return p;
}

void RetryPolicy::wait_before_retry(int retry_index) const {
  if (retry_index < 0 || static_cast<std::size_t>(retry_index) >= backoff.size()) return;
  if (sleep) sleep(backoff[static_cast<std::size_t>(retry_index)]);
}

}  // namespace pkiaudit
