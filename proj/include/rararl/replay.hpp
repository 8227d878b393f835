#pragma once

#include <stdexcept>
#include <vector>

#include "rararl/nstep.hpp"

namespace rararl {

// Fixed-capacity ring buffer with FIFO eviction.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer capacity must be positive");
  }

  void push(const NStepTransition& item) {
    if (items_.size() < capacity_) {
      items_.push_back(item);
    } else {
      items_[next_] = item;
    }
    next_ = (next_ + 1) % capacity_;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  const NStepTransition& at(std::size_t i) const {
    if (i >= items_.size()) throw std::out_of_range("replay buffer index out of range");
    return items_[i];
  }

 private:
  std::vector<NStepTransition> items_;
  std::size_t capacity_;
  std::size_t next_ = 0;
};

}  // namespace rararl
