#include "dnas/threadpool.hpp"

#include <algorithm>
#include <cstdlib>
#include <memory>

namespace dnas {

ThreadPool::ThreadPool(int workers) {
  if (workers < 1) workers = 1;
  for (int i = 0; i < workers - 1; ++i) {
    threads_.emplace_back([this] { worker_loop(); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& t : threads_) t.join();
}

void ThreadPool::worker_loop() {
  uint64_t seen = 0;
  for (;;) {
    const std::function<void(int64_t)>* job = nullptr;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_work_.wait(lk, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = job_;
      ++active_;
    }
    for (;;) {
      int64_t i;
      {
        std::lock_guard<std::mutex> lk(mu_);
        // The generation check keeps a late waker from touching a job that
        // already completed (its std::function may be gone).
        if (generation_ != seen || next_ >= count_) break;
        i = next_++;
      }
      (*job)(i);
    }
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (--active_ == 0 && next_ >= count_) cv_done_.notify_all();
    }
  }
}

void ThreadPool::parallel_for(int64_t count, const std::function<void(int64_t)>& fn) {
  if (count <= 0) return;
  if (threads_.empty() || count == 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  {
    std::lock_guard<std::mutex> lk(mu_);
    job_ = &fn;
    next_ = 0;
    count_ = count;
    ++generation_;
  }
  cv_work_.notify_all();
  // Caller participates in the same work queue.
  for (;;) {
    int64_t i;
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (next_ >= count_) break;
      i = next_++;
    }
    fn(i);
  }
  std::unique_lock<std::mutex> lk(mu_);
  cv_done_.wait(lk, [&] { return active_ == 0 && next_ >= count_; });
  job_ = nullptr;  // still under the lock: workers read job_ under it too
}

namespace {

int default_workers() {
  if (const char* env = std::getenv("DNAS_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::unique_ptr<ThreadPool> g_pool;

}  // namespace

ThreadPool& global_pool() {
  if (!g_pool) g_pool = std::make_unique<ThreadPool>(default_workers());
  return *g_pool;
}

void set_num_threads(int workers) {
  g_pool = std::make_unique<ThreadPool>(workers);
}

int num_threads() { return global_pool().size(); }

void parallel_chunks(int64_t total, int64_t min_chunk,
                     const std::function<void(int64_t, int64_t)>& fn) {
  if (total <= 0) return;
  if (total <= min_chunk || num_threads() == 1) {
    fn(0, total);
    return;
  }
  // At most 4 chunks per worker keeps scheduling overhead negligible while
  // the fixed chunk size keeps the work split identical across runs.
  const int64_t max_chunks = static_cast<int64_t>(num_threads()) * 4;
  const int64_t chunk = std::max(min_chunk, (total + max_chunks - 1) / max_chunks);
  const int64_t n_chunks = (total + chunk - 1) / chunk;
  global_pool().parallel_for(n_chunks, [&](int64_t c) {
    const int64_t begin = c * chunk;
    fn(begin, std::min(total, begin + chunk));
  });
}

}  // namespace dnas
