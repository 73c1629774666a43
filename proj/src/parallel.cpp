#include "dslt/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dslt {

namespace {
std::atomic<int> g_cap{0};
}

int default_workers() {
  if (const char* env = std::getenv("DSLT_THREADS")) {
    try {
      int n = std::stoi(env);
      if (n > 0) return n;
    } catch (...) {
    }
  }
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void set_worker_cap(int n) { g_cap.store(n > 0 ? n : 0); }

int resolve_workers(int requested) {
  int n = requested > 0 ? requested : default_workers();
  int cap = g_cap.load();
  if (cap > 0) n = std::min(n, cap);
  return std::max(n, 1);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers) {
  if (n == 0) return;
  int w = resolve_workers(workers);
  if (w <= 1 || n == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  w = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(w), n));

  // Small blocks pulled from a shared counter keep the load balanced; which
  // thread runs a block has no effect on the values written.
  const std::size_t block = std::max<std::size_t>(1, n / (static_cast<std::size_t>(w) * 8));
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;

  auto run = [&] {
    for (;;) {
      std::size_t lo = next.fetch_add(block);
      if (lo >= n) return;
      std::size_t hi = std::min(n, lo + block);
      try {
        for (std::size_t i = lo; i < hi; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
        next.store(n);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(w - 1));
  for (int i = 1; i < w; ++i) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

double pairwise_sum(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(x.subspan(0, half)) + pairwise_sum(x.subspan(half));
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t st = seed;
  std::uint64_t a = splitmix64(st);
  st = a ^ (index * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL);
  splitmix64(st);
  return splitmix64(st);
}

}  // namespace dslt
