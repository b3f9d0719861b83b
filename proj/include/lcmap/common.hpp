#ifndef LCMAP_COMMON_HPP_
#define LCMAP_COMMON_HPP_

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lcmap {

#ifdef LCMAP_FLOAT64
using real_t = double;
#else
using real_t = float;
#endif

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {
template <typename... Args>
std::string format_msg(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace detail

#define LCMAP_CHECK(cond, ...)                                             \
  do {                                                                     \
    if (!(cond))                                                           \
      throw ::lcmap::Error(::lcmap::detail::format_msg(                    \
          "check failed (", #cond, "): ", __VA_ARGS__));                   \
  } while (0)

inline void warn(const std::string& msg) {
  std::cerr << "[lcmap] warning: " << msg << "\n";
}

// Worker count: LCMAP_WORKERS env var, else hardware concurrency (capped).
inline int worker_count() {
  static const int n = [] {
    if (const char* env = std::getenv("LCMAP_WORKERS")) {
      int v = std::atoi(env);
      if (v >= 1) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return static_cast<int>(hc == 0 ? 1 : (hc > 16 ? 16 : hc));
  }();
  return n;
}

namespace detail {

inline bool& in_parallel_region() {
  thread_local bool flag = false;
  return flag;
}

// Minimal persistent pool. parallel_for splits [0,n) into contiguous chunks,
// one per worker; each index is processed by exactly one thread so results
// are bit-identical to a sequential run regardless of worker count.
class ThreadPool {
 public:
  static ThreadPool& instance() {
    static ThreadPool pool(worker_count());
    return pool;
  }

  int size() const { return static_cast<int>(threads_.size()) + 1; }

  void run(int64_t n, const std::function<void(int64_t, int64_t)>& chunk_fn) {
    const int workers = size();
    if (n <= 0) return;
    if (workers == 1 || n == 1) {
      chunk_fn(0, n);
      return;
    }
    std::unique_lock<std::mutex> lock(mu_);
    chunk_fn_ = &chunk_fn;
    total_ = n;
    next_chunk_.store(0, std::memory_order_relaxed);
    chunks_ = workers;
    pending_ = static_cast<int>(threads_.size());
    ++epoch_;
    cv_.notify_all();
    lock.unlock();

    work(0);  // calling thread takes part

    lock.lock();
    done_cv_.wait(lock, [&] { return pending_ == 0; });
    chunk_fn_ = nullptr;
  }

  ~ThreadPool() {
    {
      std::lock_guard<std::mutex> lock(mu_);
      stop_ = true;
      ++epoch_;
    }
    cv_.notify_all();
    for (auto& t : threads_) t.join();
  }

 private:
  explicit ThreadPool(int workers) {
    for (int i = 1; i < workers; ++i)
      threads_.emplace_back([this, i] { worker_loop(i); });
  }

  void worker_loop(int id) {
    uint64_t seen = 0;
    for (;;) {
      std::unique_lock<std::mutex> lock(mu_);
      cv_.wait(lock, [&] { return epoch_ != seen; });
      seen = epoch_;
      if (stop_) return;
      lock.unlock();
      work(id);
      lock.lock();
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }

  void work(int /*id*/) {
    const int64_t chunks = chunks_;
    const int64_t n = total_;
    in_parallel_region() = true;
    for (;;) {
      int64_t c = next_chunk_.fetch_add(1, std::memory_order_relaxed);
      if (c >= chunks) break;
      int64_t begin = n * c / chunks;
      int64_t end = n * (c + 1) / chunks;
      if (begin < end) (*chunk_fn_)(begin, end);
    }
    in_parallel_region() = false;
  }

  std::vector<std::thread> threads_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  const std::function<void(int64_t, int64_t)>* chunk_fn_ = nullptr;
  int64_t total_ = 0;
  int64_t chunks_ = 0;
  std::atomic<int64_t> next_chunk_{0};
  int pending_ = 0;
  uint64_t epoch_ = 0;
  bool stop_ = false;
};

}  // namespace detail

// Runs fn(begin, end) over a partition of [0, n). Each index lands in exactly
// one chunk, so any per-index computation is bit-identical to sequential.
inline void parallel_for(int64_t n,
                         const std::function<void(int64_t, int64_t)>& fn,
                         int64_t grain = 1024) {
  if (n <= 0) return;
  if (n <= grain || detail::in_parallel_region()) {
    fn(0, n);
    return;
  }
  detail::ThreadPool::instance().run(n, fn);
}

}  // namespace lcmap

#endif  // LCMAP_COMMON_HPP_
