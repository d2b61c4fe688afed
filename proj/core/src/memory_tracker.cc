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

#include "blockbert/memory_tracker.h"

#include <string>

#include "blockbert/errors.h"

namespace blockbert {
namespace {

thread_local MemoryCategory current_category = MemoryCategory::kGeneral;

}  // namespace

MemoryTracker& MemoryTracker::Global() {
  static MemoryTracker tracker;
  return tracker;
}

void MemoryTracker::Raise(std::atomic<std::size_t>& peak, std::size_t value) {
  std::size_t seen = peak.load();
  while (value > seen && !peak.compare_exchange_weak(seen, value)) {
  }
}

void MemoryTracker::OnAllocate(std::size_t bytes, MemoryCategory category) {
  if (enabled()) {
    const std::size_t limit = budget_.load();
    if (limit != 0 && total_.live.load() + bytes > limit) {
      throw OutOfMemoryError("allocation of " + std::to_string(bytes) +
                             " bytes exceeds tracker budget of " +
                             std::to_string(limit) + " bytes");
    }
  }
  Counter& cat = by_category_[static_cast<int>(category)];
  Raise(total_.peak, total_.live.fetch_add(bytes) + bytes);
  Raise(cat.peak, cat.live.fetch_add(bytes) + bytes);
  total_.cumulative.fetch_add(bytes);
  cat.cumulative.fetch_add(bytes);
}

void MemoryTracker::OnFree(std::size_t bytes,
                           MemoryCategory category) noexcept {
  total_.live.fetch_sub(bytes);
  by_category_[static_cast<int>(category)].live.fetch_sub(bytes);
}

std::size_t MemoryTracker::live_bytes(MemoryCategory c) const {
  return by_category_[static_cast<int>(c)].live.load();
}

std::size_t MemoryTracker::peak_bytes(MemoryCategory c) const {
  return by_category_[static_cast<int>(c)].peak.load();
}

std::size_t MemoryTracker::allocated_bytes(MemoryCategory c) const {
  return by_category_[static_cast<int>(c)].cumulative.load();
}

void MemoryTracker::ResetPeak() {
  total_.peak.store(total_.live.load());
  for (Counter& c : by_category_) c.peak.store(c.live.load());
}

void MemoryTracker::ResetCumulative() {
  total_.cumulative.store(0);
  for (Counter& c : by_category_) c.cumulative.store(0);
}

void MemoryTracker::SetBudget(std::optional<std::size_t> bytes) {
  budget_.store(bytes.value_or(0));
}

std::optional<std::size_t> MemoryTracker::budget() const {
  const std::size_t b = budget_.load();
  if (b == 0) return std::nullopt;
  return b;
}

MemoryCategory CurrentMemoryCategory() { return current_category; }

ScopedMemoryCategory::ScopedMemoryCategory(MemoryCategory category)
    : previous_(current_category) {
  current_category = category;
}

ScopedMemoryCategory::~ScopedMemoryCategory() { current_category = previous_; }

ScopedTrackingSession::ScopedTrackingSession(
    std::optional<std::size_t> budget)
    : was_enabled_(MemoryTracker::Global().enabled()),
      previous_budget_(MemoryTracker::Global().budget()) {
  MemoryTracker::Global().SetBudget(budget);
  MemoryTracker::Global().Enable();
}

ScopedTrackingSession::~ScopedTrackingSession() {
  MemoryTracker& tracker = MemoryTracker::Global();
  tracker.SetBudget(previous_budget_);
  if (!was_enabled_) tracker.Disable();
}

}  // namespace blockbert
