#pragma once

#include <vector>

#include "deconv/eval.hpp"

namespace fixture {

inline constexpr std::uint64_t kReferenceSeed = 1;

/// Gamma(9, 1) signal with Gaussian(10, 1) noise, as produced by `generate` with seed 1.
inline std::vector<double> reference_data(deconv::DataModel mode = deconv::DataModel::Sum,
                                          std::size_t n = 1000, std::uint64_t seed = kReferenceSeed) {
  deconv::Scenario s;
  s.mode = mode;
  s.n = n;
  s.seed = deconv::derive_seed(seed, "data");
  return deconv::generate(s);
}

inline const deconv::NoiseModel& reference_noise() {
  static const deconv::NoiseModel noise(deconv::ScalarDist::gaussian(10, 1));
  return noise;
}

}  // namespace fixture
