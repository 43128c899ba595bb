#pragma once

#include <cstdint>
#include <initializer_list>

#include "bond/normal.hpp"

namespace bond {

// 64-bit finalizer from splitmix64.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive combiner for deriving stream seeds from tagged tuples,
// e.g. derive_seed(master, {scenario, gamma_index, phase, rep}).
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t t : tags) s = mix64(s ^ mix64(t));
  return s;
}

// Counter-based generator: each output is a pure function of (seed, counter),
// so replications can be assigned to any worker without changing the stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return mix64(state_++); }

  // Uniform on the open interval (0, 1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Inverse-CDF transform; documented, branch-free in distribution across
  // platforms up to libm log/sqrt rounding.
  double next_normal() { return normal_quantile(next_uniform()); }

  bool next_bernoulli(double p) { return next_uniform() < p; }

 private:
  std::uint64_t state_;
};

}  // namespace bond
