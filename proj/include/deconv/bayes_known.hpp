#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "deconv/dist.hpp"
#include "deconv/mcmc.hpp"
#include "deconv/quad.hpp"

namespace deconv {

/// Gamma signal parameters (shape alpha, rate beta).
struct ThetaB {
  double alpha;
  double rate;

  bool operator==(const ThetaB&) const = default;
};

struct KnownModelConfig {
  std::size_t samples = 10000;
  double sigma_s = 0.01;
  std::size_t burn_in = 0;
  double xi = 100.0;
  std::size_t lattice = 50;
  std::size_t grid_points = kMcmcGridPoints;
  std::optional<double> grid_hi;  // overrides the computed upper integration bound
};

/// Independent log-Gaussian priors on alpha and beta, location 0 and scale xi,
/// including the 1/alpha and 1/beta Jacobians.
double log_prior(const ThetaB& theta, double xi = 100.0);

/// Unnormalized log-posterior, evaluated term by term with conv_log_likelihood.
/// This is the reference path; samplers use KnownModelPosterior.
double log_posterior(const ThetaB& theta, std::span<const double> data, const NoiseModel& noise,
                     DataModel mode, const QuadGrid& grid, double xi = 100.0);

/// Fast log-posterior over a fixed dataset backed by a ConvolutionKernel.
class KnownModelPosterior {
public:
  KnownModelPosterior(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                      const QuadGrid& grid, double xi = 100.0);

  double operator()(const ThetaB& theta) const;
  double log_likelihood(const ThetaB& theta) const;
  const ConvolutionKernel& kernel() const { return kernel_; }
  double xi() const { return xi_; }

private:
  ConvolutionKernel kernel_;
  std::vector<double> log_points_;
  double xi_;
};

/// Lattice argmax of the posterior over alpha in [0.001, 10] x beta in [0.001, 6].
/// Ties go to the smallest (alpha index, beta index).
ThetaB grid_init(const KnownModelPosterior& posterior, std::size_t lattice = 50);
ThetaB grid_init(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                 const KnownModelConfig& config = {});

/// Lattice coordinates used by grid_init.
double lattice_alpha(std::size_t i, std::size_t lattice);
double lattice_rate(std::size_t i, std::size_t lattice);

/// Multiplicative log-Gaussian proposal on (alpha, beta) with log-scale sigma_s and
/// its Hastings correction.
Proposal<ThetaB> propose_log_gaussian(const ThetaB& current, Rng& rng, double sigma_s);

template <class Target>
MhOutcome<ThetaB> mh_step(const ThetaB& current, double current_log_posterior, Rng& rng,
                          Target&& target, double sigma_s) {
  return metropolis_hastings(
      current, current_log_posterior, target,
      [sigma_s](const ThetaB& c, Rng& r) { return propose_log_gaussian(c, r, sigma_s); }, rng);
}

/// Chain of config.samples states starting at grid_init; deterministic per seed.
PosteriorChain<ThetaB> run_chain(const KnownModelPosterior& posterior,
                                 const KnownModelConfig& config, std::uint64_t seed);
PosteriorChain<ThetaB> run_chain(std::span<const double> data, const NoiseModel& noise,
                                 DataModel mode, const KnownModelConfig& config,
                                 std::uint64_t seed);

/// Posterior-averaged Gamma density at each point.
std::vector<double> reconstruction_density(const PosteriorChain<ThetaB>& chain,
                                           std::span<const double> b_points);
ThetaB map_density(const PosteriorChain<ThetaB>& chain);

}  // namespace deconv
