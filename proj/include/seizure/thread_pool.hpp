#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <queue>
#include <thread>
#include <vector>

namespace seizure {

/// Fixed-size pool. parallel_for blocks until every index has run and
/// rethrows the first exception raised by any of them.
class ThreadPool {
 public:
  explicit ThreadPool(std::size_t threads) {
    if (threads == 0) threads = 1;
    workers_.reserve(threads);
    for (std::size_t i = 0; i < threads; ++i) {
      workers_.emplace_back([this](std::stop_token stop) { loop(stop); });
    }
  }

  ~ThreadPool() {
    for (auto& w : workers_) w.request_stop();
    cv_.notify_all();
  }

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  std::size_t size() const noexcept { return workers_.size(); }

  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    if (count == 0) return;
    std::mutex done_mutex;
    std::condition_variable done_cv;
    std::size_t remaining = count;
    std::exception_ptr first_error;
    {
      std::lock_guard lock(mutex_);
      for (std::size_t i = 0; i < count; ++i) {
        queue_.push([&, i] {
          std::exception_ptr err;
          try {
            body(i);
          } catch (...) {
            err = std::current_exception();
          }
          std::lock_guard done_lock(done_mutex);
          if (err && !first_error) first_error = err;
          if (--remaining == 0) done_cv.notify_all();
        });
      }
    }
    cv_.notify_all();
    std::unique_lock done_lock(done_mutex);
    done_cv.wait(done_lock, [&] { return remaining == 0; });
    if (first_error) std::rethrow_exception(first_error);
  }

 private:
  void loop(std::stop_token stop) {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, stop, [this] { return !queue_.empty(); });
        if (queue_.empty()) return;
        job = std::move(queue_.front());
        queue_.pop();
      }
      job();
    }
  }

  std::mutex mutex_;
  std::condition_variable_any cv_;
  std::queue<std::function<void()>> queue_;
  std::vector<std::jthread> workers_;
};

}  // namespace seizure
