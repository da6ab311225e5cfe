#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "deconv/bayes_known.hpp"
#include "deconv/dist.hpp"
#include "deconv/quad.hpp"

namespace deconv {

struct Scenario {
  DataModel mode = DataModel::Sum;
  ThetaB signal{9.0, 1.0};
  NoiseModel noise = NoiseModel(ScalarDist::gaussian(10.0, 1.0));
  std::size_t n = 1000;
  std::uint64_t seed = 0;
};

/// x_n = a_n + b_n or a_n b_n. Signal and noise draws come from separate substreams
/// of the seed, so the b realization does not depend on the mode or the noise.
std::vector<double> generate(const Scenario& scenario);

/// Sum: var_b / var_a. Product: (sd_b / mean_b)^2 / (sd_a / mean_a)^2.
double snr(DataModel mode, const ThetaB& signal, const NoiseModel& noise);
double snr(const Scenario& scenario);

/// Gamma shape reaching target_snr at the given rate.
double alpha_for_snr(double target_snr, DataModel mode, const NoiseModel& noise, double rate = 1.0);

inline constexpr double kKlLogFloor = -745.0;
inline constexpr double kMaxOffGridMass = 1e-6;
inline constexpr std::size_t kKlGridPoints = 4000;

struct KlResult {
  double kl;
  bool clamped;         // some log q fell below kKlLogFloor
  double off_grid_mass; // reference mass outside the grid
};

/// Rectangle-rule KL(p || q) on the grid, q given as log-density values at grid points.
/// Throws InadequateGrid when p has at least kMaxOffGridMass outside [lo, hi].
KlResult kl_divergence(const ScalarDist& p, std::span<const double> q_log_density,
                       const QuadGrid& grid);
KlResult kl_divergence(const ScalarDist& p, const std::function<double(double)>& q_log_pdf,
                       const QuadGrid& grid);

KlResult kl_to_ground_truth(const ThetaB& gt, const std::function<double(double)>& q_log_pdf,
                            const QuadGrid& grid);
KlResult kl_to_ground_truth(const ThetaB& gt, std::span<const double> q_log_density,
                            const QuadGrid& grid);

/// Grid between the 1e-9 and 1 - 1e-9 quantiles of the Gamma ground truth.
QuadGrid kl_grid(const ThetaB& gt, std::size_t m = kKlGridPoints);

}  // namespace deconv
