#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace dnas {

// Persistent worker pool used by the conv kernels to split work across
// batch images. Results are written to disjoint ranges, so output is
// identical for any worker count.
class ThreadPool {
 public:
  explicit ThreadPool(int workers);
  ~ThreadPool();

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  // Runs fn(i) for i in [0, count). Blocks until all items finish.
  // The calling thread participates. fn must not throw.
  void parallel_for(int64_t count, const std::function<void(int64_t)>& fn);

 private:
  void worker_loop();

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_work_;
  std::condition_variable cv_done_;
  const std::function<void(int64_t)>* job_ = nullptr;
  int64_t next_ = 0;
  int64_t count_ = 0;
  int64_t active_ = 0;
  uint64_t generation_ = 0;
  bool stop_ = false;
};

// Pool shared by all kernels. Sized from DNAS_THREADS if set, else
// hardware concurrency. Call set_num_threads before any heavy op to
// resize (not thread safe against concurrent kernel use).
ThreadPool& global_pool();
void set_num_threads(int workers);
int num_threads();

// Splits [0,total) into fixed-size chunks and runs fn(begin,end) on the
// pool. Chunk boundaries depend only on total and min_chunk, so results
// are identical for any worker count. Small totals run inline.
void parallel_chunks(int64_t total, int64_t min_chunk,
                     const std::function<void(int64_t, int64_t)>& fn);

}  // namespace dnas
