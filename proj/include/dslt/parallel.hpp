#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace dslt {

// Worker count used when a caller passes 0. Reads DSLT_THREADS, falls back
// to the hardware concurrency. A process-wide cap (set by --threads) wins.
int default_workers();
void set_worker_cap(int n);
int resolve_workers(int requested);

// body(i) for i in [0, n). Indices are handed out in fixed contiguous blocks,
// so each body call sees the same inputs whatever the worker count; callers
// write results into slot i and reduce afterwards.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, int workers = 0);

// Fixed-shape pairwise summation. The tree depends only on the length.
double pairwise_sum(std::span<const double> x);

std::uint64_t splitmix64(std::uint64_t& state);
// Seed for stream `index` of a run seeded with `seed`.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace dslt
