#include "dtoda/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

namespace dtoda::kernels {

namespace {
std::atomic<Execution> g_execution{Execution::Parallel};
}

Execution execution() { return g_execution.load(std::memory_order_relaxed); }

void set_execution(Execution e) { g_execution.store(e, std::memory_order_relaxed); }

void configure_threads(int n) {
  if (n <= 0) {
    if (const char* env = std::getenv("DTODA_THREADS")) {
      try {
        n = std::stoi(env);
      } catch (...) {
        n = 0;
      }
    }
  }
  if (n > 0) omp_set_num_threads(n);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace dtoda::kernels
