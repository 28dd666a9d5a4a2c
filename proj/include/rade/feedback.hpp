// Bounded FIFO memory of accept/reject feedback. Each online update trains on
// a snapshot of the buffer, so recent samples are always present while stale
// ones age out once capacity is reached.
#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "rade/slo.hpp"

namespace rade {

struct FeedbackSample {
  int domain_id = 0;
  SloVector slo;
  bool accepted = false;
  std::int64_t time_step = 0;

  friend bool operator==(const FeedbackSample&, const FeedbackSample&) = default;
};

class FifoBuffer {
 public:
  explicit FifoBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("FifoBuffer: capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  void clear() { items_.clear(); }

  // Immutable copy of the contents, oldest first.
  std::vector<FeedbackSample> snapshot() const {
    return std::vector<FeedbackSample>(items_.begin(), items_.end());
  }

  friend FifoBuffer push_batch(FifoBuffer buf, std::span<const FeedbackSample> batch) {
    for (const FeedbackSample& s : batch) buf.items_.push_back(s);
    while (buf.items_.size() > buf.capacity_) buf.items_.pop_front();
    return buf;
  }

 private:
  std::deque<FeedbackSample> items_;
  std::size_t capacity_;
};

}  // namespace rade
