#pragma once

#include <functional>
#include <vector>

#include "heterformer/numcore/tensor.hpp"

namespace heterformer::numcore {

/// Ordered record of differentiable operations executed while the tape is
/// active. Each entry is the backward rule of one operation; replaying them in
/// reverse accumulates gradients into every tracked input.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  void record(BackwardFn fn) { entries_.push_back(std::move(fn)); }
  std::size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

  /// Seeds d loss / d loss = 1 and replays the tape. The tape is consumed.
  /// A loss that never touched a tracked tensor leaves every gradient alone.
  void backward(Tensor loss) {
    if (!loss.defined() || loss.size() != 1) {
      throw ContractError("backward() needs a scalar loss, got " +
                          (loss.defined() ? shape_string(loss.shape()) : std::string("undefined")));
    }
    if (loss.tracked()) {
      loss.grad_buffer()[0] += 1.0;
      for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    }
    entries_.clear();
  }

 private:
  std::vector<BackwardFn> entries_;
};

namespace detail {
inline Tape*& active_tape_slot() {
  thread_local Tape* tape = nullptr;
  return tape;
}
}  // namespace detail

inline Tape* active_tape() { return detail::active_tape_slot(); }

/// Makes `tape` the recording target for the current thread while in scope.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape) : previous_(detail::active_tape_slot()) { detail::active_tape_slot() = &tape; }
  ~TapeScope() { detail::active_tape_slot() = previous_; }
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

/// Suspends recording: everything computed in scope is a constant.
class NoTapeScope {
 public:
  NoTapeScope() : previous_(detail::active_tape_slot()) { detail::active_tape_slot() = nullptr; }
  ~NoTapeScope() { detail::active_tape_slot() = previous_; }
  NoTapeScope(const NoTapeScope&) = delete;
  NoTapeScope& operator=(const NoTapeScope&) = delete;

 private:
  Tape* previous_;
};

}  // namespace heterformer::numcore
