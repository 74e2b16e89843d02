#pragma once

#include <exception>
#include <mutex>

namespace safer::detail {

/// Exceptions must not escape an OpenMP region. Loop bodies run through
/// `guard`, which keeps the first exception for `rethrow` after the loop.
class FirstError {
 public:
  template <class F>
  void guard(F&& body) noexcept {
    try {
      body();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace safer::detail
