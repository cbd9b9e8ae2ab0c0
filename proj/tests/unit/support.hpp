#ifndef VDW_OTOC_TESTS_SUPPORT_HPP
#define VDW_OTOC_TESTS_SUPPORT_HPP

#include <cmath>
#include <random>
#include <vector>

namespace vdw_otoc::testing {

// Fixed-seed generator so property checks are reproducible.
inline std::mt19937& rng() {
  static std::mt19937 gen(20240611u);
  return gen;
}

inline double uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng());
}

inline double log_uniform(double lo, double hi) {
  return std::exp(uniform(std::log(lo), std::log(hi)));
}

inline int uniform_int(int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng());
}

inline std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = a + (b - a) * i / (n - 1);
  return x;
}

}  // namespace vdw_otoc::testing

#endif
