#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace dynef {

/// Raised on malformed configuration or input files. The CLI maps it to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an exact computation would have to enumerate a lateral
/// component whose configuration count exceeds the enumeration budget.
class ComponentTooLarge : public std::runtime_error {
 public:
  ComponentTooLarge(int component_size, long long n_configs, long long budget)
      : std::runtime_error("lateral component with " + std::to_string(component_size) +
                           " units has " + std::to_string(n_configs) +
                           " configurations, over the enumeration budget of " +
                           std::to_string(budget)),
        component_size(component_size),
        n_configs(n_configs),
        budget(budget) {}

  int component_size;
  long long n_configs;
  long long budget;
};

inline double logsumexp(std::span<const double> v) {
  if (v.empty()) return -std::numeric_limits<double>::infinity();
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

/// Worker cap for embarrassingly parallel loops; DYNEF_THREADS overrides
/// hardware concurrency.
inline int worker_count() {
  if (const char* env = std::getenv("DYNEF_THREADS")) {
    int n = std::atoi(env);
    if (n >= 1) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(0..n-1) on up to worker_count() threads. Results must be written
/// to per-index slots; the partition is deterministic but the interleaving
/// is not, so fn must not touch shared mutable state.
inline void parallel_for(int n, const std::function<void(int)>& fn) {
  int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace dynef
