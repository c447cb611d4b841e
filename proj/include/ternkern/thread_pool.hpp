#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ternkern {

// Fixed set of workers that run one indexed task each per dispatch.
// The calling thread runs task 0; dispatches are serialized.
class ThreadPool {
 public:
  explicit ThreadPool(unsigned threads);
  ~ThreadPool();
  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  unsigned size() const { return size_; }

  // Calls task(i) for i in [0, size()) and waits for all of them. The first
  // exception thrown by any task is rethrown here.
  void run(const std::function<void(unsigned)>& task);

 private:
  void worker_loop(unsigned index);

  unsigned size_;
  std::vector<std::thread> workers_;
  std::mutex mutex_;
  std::mutex dispatch_mutex_;
  std::condition_variable wake_;
  std::condition_variable done_;
  const std::function<void(unsigned)>* task_ = nullptr;
  std::size_t generation_ = 0;
  unsigned pending_ = 0;
  bool stop_ = false;
  std::exception_ptr error_;
};

// Contiguous [begin, end) of `total` items owned by worker `index` of
// `workers`, with chunk boundaries on multiples of `align`.
struct RowRange {
  std::size_t begin;
  std::size_t end;
};
RowRange partition_rows(std::size_t total, unsigned workers, unsigned index, std::size_t align = 1);

}  // namespace ternkern
