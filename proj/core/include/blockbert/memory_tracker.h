/* Copyright 2026 The BlockBERT-cpp Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef BLOCKBERT_CORE_MEMORY_TRACKER_H_
#define BLOCKBERT_CORE_MEMORY_TRACKER_H_

#include <array>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>

namespace blockbert {

// Every tensor buffer is charged to exactly one category. Attention score
// and probability blocks are charged to kAttentionScores so that the
// quadratic part of activation memory can be audited on its own.
enum class MemoryCategory : int {
  kGeneral = 0,
  kAttentionScores = 1,
};
inline constexpr int kNumMemoryCategories = 2;

// Process-wide live-byte accounting for tensor storage.
//
// Counting is unconditional so that live bytes stay balanced no matter when
// profiling starts. `Enable()` arms the profiling session: only an enabled
// tracker may be queried by the activation profiler and only an enabled
// tracker enforces the byte budget. Updates are atomic; high-water marks are
// only meaningful when a single profiled run is active per process.
class MemoryTracker {
 public:
  static MemoryTracker& Global();

  void Enable() { enabled_.store(true); }
  void Disable() { enabled_.store(false); }
  bool enabled() const { return enabled_.load(); }

  // Throws OutOfMemoryError (and charges nothing) when an enabled budget
  // would be exceeded.
  void OnAllocate(std::size_t bytes, MemoryCategory category);
  void OnFree(std::size_t bytes, MemoryCategory category) noexcept;

  std::size_t live_bytes() const { return total_.live.load(); }
  std::size_t peak_bytes() const { return total_.peak.load(); }
  std::size_t live_bytes(MemoryCategory c) const;
  std::size_t peak_bytes(MemoryCategory c) const;
  // Sum of every allocation charged since the last ResetCumulative().
  std::size_t allocated_bytes(MemoryCategory c) const;

  // Sets every high-water mark to the current live value.
  void ResetPeak();
  void ResetCumulative();

  void SetBudget(std::optional<std::size_t> bytes);
  std::optional<std::size_t> budget() const;

 private:
  struct Counter {
    std::atomic<std::size_t> live{0};
    std::atomic<std::size_t> peak{0};
    std::atomic<std::size_t> cumulative{0};
  };
  static void Raise(std::atomic<std::size_t>& peak, std::size_t value);

  std::atomic<bool> enabled_{false};
  std::atomic<std::size_t> budget_{0};  // 0 means unlimited
  Counter total_;
  std::array<Counter, kNumMemoryCategories> by_category_;
};

// Category charged by allocations made on this thread.
MemoryCategory CurrentMemoryCategory();

// RAII override of the current thread's allocation category.
class ScopedMemoryCategory {
 public:
  explicit ScopedMemoryCategory(MemoryCategory category);
  ~ScopedMemoryCategory();
  ScopedMemoryCategory(const ScopedMemoryCategory&) = delete;
  ScopedMemoryCategory& operator=(const ScopedMemoryCategory&) = delete;

 private:
  MemoryCategory previous_;
};

// Enables the global tracker for the lifetime of the object, optionally with
// a byte budget, and restores the prior state afterwards.
class ScopedTrackingSession {
 public:
  explicit ScopedTrackingSession(
      std::optional<std::size_t> budget = std::nullopt);
  ~ScopedTrackingSession();
  ScopedTrackingSession(const ScopedTrackingSession&) = delete;
  ScopedTrackingSession& operator=(const ScopedTrackingSession&) = delete;

 private:
  bool was_enabled_;
  std::optional<std::size_t> previous_budget_;
};

}  // namespace blockbert

#endif  // BLOCKBERT_CORE_MEMORY_TRACKER_H_
