#pragma once

#include <mutex>
#include <optional>

namespace tscan {

/// Single-writer, single-reader latest-value cell. Readers get a copy of the
/// newest value; nothing queues and neither side waits on the other beyond
/// the copy itself.
template <typename T>
class LatestValue {
 public:
  void publish(const T& value) {
    std::lock_guard lock(mutex_);
    value_ = value;
  }

  std::optional<T> load() const {
    std::lock_guard lock(mutex_);
    return value_;
  }

 private:
  mutable std::mutex mutex_;
  std::optional<T> value_;
};

}  // namespace tscan
