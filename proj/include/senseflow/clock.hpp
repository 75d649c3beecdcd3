// Copyright 2026 The senseflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>

namespace senseflow {

/// Millisecond time source. All timestamps in the engine are epoch ms.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() const = 0;
};

class SystemClock final : public Clock {
 public:
  std::int64_t now_ms() const override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  }
};

/// Manually advanced clock; only moves forward.
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(std::int64_t start_ms = 0) : now_(start_ms) {}

  std::int64_t now_ms() const override { return now_.load(std::memory_order_acquire); }

  void advance(std::int64_t delta_ms) {
    if (delta_ms > 0) now_.fetch_add(delta_ms, std::memory_order_acq_rel);
  }

  void set(std::int64_t t_ms) {
    std::int64_t cur = now_.load(std::memory_order_acquire);
    while (t_ms > cur && !now_.compare_exchange_weak(cur, t_ms, std::memory_order_acq_rel)) {
    }
  }

 private:
  std::atomic<std::int64_t> now_;
};

}  // namespace senseflow
