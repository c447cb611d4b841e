#include "ternkern/thread_pool.hpp"

#include <algorithm>
#include <stdexcept>

namespace ternkern {

ThreadPool::ThreadPool(unsigned threads) : size_(threads) {
  if (threads < 1) throw std::invalid_argument("thread pool needs at least one thread");
  workers_.reserve(threads - 1);
  for (unsigned i = 1; i < threads; ++i) {
    workers_.emplace_back([this, i] { worker_loop(i); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::run(const std::function<void(unsigned)>& task) {
  std::lock_guard dispatch(dispatch_mutex_);
  if (size_ == 1) {
    task(0);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    task_ = &task;
    pending_ = size_ - 1;
    error_ = nullptr;
    ++generation_;
  }
  wake_.notify_all();

  std::exception_ptr local;
  try {
    task(0);
  } catch (...) {
    local = std::current_exception();
  }

  std::unique_lock lock(mutex_);
  done_.wait(lock, [this] { return pending_ == 0; });
  task_ = nullptr;
  if (local) std::rethrow_exception(local);
  if (error_) std::rethrow_exception(error_);
}

void ThreadPool::worker_loop(unsigned index) {
  std::size_t seen = 0;
  for (;;) {
    const std::function<void(unsigned)>* task = nullptr;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      task = task_;
    }
    std::exception_ptr err;
    try {
      (*task)(index);
    } catch (...) {
      err = std::current_exception();
    }
    {
      std::lock_guard lock(mutex_);
      if (err && !error_) error_ = err;
      if (--pending_ == 0) done_.notify_one();
    }
  }
}

RowRange partition_rows(std::size_t total, unsigned workers, unsigned index, std::size_t align) {
  align = std::max<std::size_t>(align, 1);
  const std::size_t units = (total + align - 1) / align;
  const std::size_t per = units / workers;
  const std::size_t extra = units % workers;
  const std::size_t first = index * per + std::min<std::size_t>(index, extra);
  const std::size_t count = per + (index < extra ? 1 : 0);
  return {std::min(total, first * align), std::min(total, (first + count) * align)};
}

}  // namespace ternkern
