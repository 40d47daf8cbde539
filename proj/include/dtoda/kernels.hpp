#pragma once

// Data-parallel loop kernels shared by the contour and quadrature code.
// The parallel path splits work into fixed-size chunks and combines chunk
// sums pairwise, so its result does not depend on the thread count. The
// serial path is a plain loop kept as the reference implementation.

#include <algorithm>
#include <cstddef>
#include <vector>

#include <omp.h>

namespace dtoda::kernels {

enum class Execution { Serial, Parallel };

Execution execution();
void set_execution(Execution e);

class ScopedExecution {
 public:
  explicit ScopedExecution(Execution e) : saved_(execution()) { set_execution(e); }
  ~ScopedExecution() { set_execution(saved_); }
  ScopedExecution(const ScopedExecution&) = delete;
  ScopedExecution& operator=(const ScopedExecution&) = delete;

 private:
  Execution saved_;
};

// Caps the OpenMP worker count; reads DTODA_THREADS when n <= 0.
void configure_threads(int n = 0);
int thread_count();

inline constexpr std::size_t kChunk = 64;

// out[0..width) += sum over i in [0, n) of the contributions f(i, acc)
// writes into acc[0..width).
template <class T, class F>
void accumulate_serial(std::size_t n, std::size_t width, T* out, F&& f) {
  std::vector<T> acc(width, T{});
  for (std::size_t i = 0; i < n; ++i) f(i, acc.data());
  for (std::size_t j = 0; j < width; ++j) out[j] += acc[j];
}

template <class T, class F>
void accumulate_parallel(std::size_t n, std::size_t width, T* out, F&& f) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  if (chunks <= 1) {
    accumulate_serial<T>(n, width, out, f);
    return;
  }
  std::vector<T> rows(chunks * width, T{});
  const long long nc = static_cast<long long>(chunks);
#pragma omp parallel for schedule(static)
  for (long long c = 0; c < nc; ++c) {
    T* acc = rows.data() + static_cast<std::size_t>(c) * width;
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk;
    const std::size_t hi = std::min(n, lo + kChunk);
    for (std::size_t i = lo; i < hi; ++i) f(i, acc);
  }
  for (std::size_t stride = 1; stride < chunks; stride *= 2) {
    for (std::size_t c = 0; c + stride < chunks; c += 2 * stride) {
      T* a = rows.data() + c * width;
      const T* b = rows.data() + (c + stride) * width;
      for (std::size_t j = 0; j < width; ++j) a[j] += b[j];
    }
  }
  for (std::size_t j = 0; j < width; ++j) out[j] += rows[j];
}

template <class T, class F>
void accumulate(std::size_t n, std::size_t width, T* out, F&& f) {
  if (execution() == Execution::Parallel)
    accumulate_parallel<T>(n, width, out, f);
  else
    accumulate_serial<T>(n, width, out, f);
}

// Independent per-index work, e.g. marker updates.
template <class F>
void for_each_index(std::size_t n, F&& f) {
  if (execution() == Execution::Parallel && n > kChunk) {
    const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < nn; ++i) f(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) f(i);
  }
}

}  // namespace dtoda::kernels
