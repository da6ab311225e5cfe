#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "deconv/dist.hpp"
#include "deconv/mcmc.hpp"
#include "deconv/quad.hpp"

namespace deconv {

/// Priors of the truncated mixture: Gaussian on means, log-Gaussian on variances,
/// Dirichlet on weights.
struct GmmPriorSpec {
  double mean_loc = 0.0;      // xi
  double mean_var = 50.0;     // tau^2
  double log_var_loc = 0.0;   // eta
  double log_var_var = 1.0;   // zeta^2
  std::vector<double> concentrations;

  /// alpha_i = 10 * 0.9^i / sum_j 0.9^j, i = 1..components.
  static GmmPriorSpec decaying(std::size_t components = 20);
};

struct GmmConfig {
  std::size_t components = 20;
  std::size_t burn_in = 5000;
  std::size_t samples = 20000;
  std::size_t init_steps = 5000;
  double init_lr = 0.01;
  double tau_mu = 0.01;
  double tau_sigma = 0.01;
  double dirichlet_scale = 1e5;
  bool corrected_hastings = false;
  std::size_t grid_points = kMcmcGridPoints;  // product mode quadrature
  std::optional<double> grid_hi;
};

double gmm_log_prior(const PsiB& psi, const GmmPriorSpec& spec);

/// Analytic convolution with Gaussian noise: log sum_i rho_i N(x; mu_i + mu_A, var_i + var_A).
double gmm_sum_log_likelihood(double x, const PsiB& psi, const NoiseModel& noise);

/// Product mode, mixture over log b: rectangle rule over phi of
/// p_A(x e^-phi) e^-phi sum_i rho_i N(phi; mu_i, var_i). Throws NonPositiveData for x <= 0.
double gmm_product_log_likelihood(double x, const PsiB& psi, const NoiseModel& noise,
                                  const QuadGrid& grid);

/// Log-posterior of a mixture over a fixed dataset.
class GmmPosterior {
public:
  GmmPosterior(std::span<const double> data, const NoiseModel& noise, DataModel mode,
               GmmPriorSpec prior, std::size_t grid_points = kMcmcGridPoints,
               std::optional<double> grid_hi = std::nullopt);

  /// -inf when any weight is not strictly positive.
  double operator()(const PsiB& psi) const;
  double log_likelihood(const PsiB& psi) const;
  double log_prior(const PsiB& psi) const { return gmm_log_prior(psi, prior_); }

  /// Log-posterior and its gradient with respect to the unconstrained coordinates
  /// [means, log variances, softmax logits] (3I entries).
  double value_and_gradient(const PsiB& psi, std::span<double> grad) const;

  const GmmPriorSpec& prior() const { return prior_; }
  DataModel mode() const { return mode_; }
  std::span<const double> data() const { return data_; }
  const NoiseModel& noise() const { return noise_; }
  std::size_t components() const { return prior_.concentrations.size(); }

private:
  std::vector<double> data_;
  NoiseModel noise_;
  DataModel mode_;
  GmmPriorSpec prior_;
  std::optional<ConvolutionKernel> kernel_;
};

/// Moment-matched start: means x̄ - <a>, variances Var(x), weights proportional to the
/// prior concentrations. Product mode applies this to log x with log-space noise moments.
PsiB gmm_moment_init(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                     const GmmPriorSpec& prior);

/// Moment-matched start refined by `steps` adaptive-moment ascent steps on the log-posterior.
PsiB gmm_init(const GmmPosterior& posterior, std::size_t steps = 5000, double lr = 0.01);

/// Three Metropolis-Hastings blocks: means, variances, weights. `log_posterior`
/// holds the posterior of `psi` on entry and of the returned state on exit.
PsiB gibbs_sweep(const PsiB& psi, double& log_posterior, Rng& rng, const GmmPosterior& posterior,
                 const GmmConfig& config, std::array<bool, 3>* accepted = nullptr);

PosteriorChain<PsiB> run_gmm(const GmmPosterior& posterior, const GmmConfig& config,
                             std::uint64_t seed);
PosteriorChain<PsiB> run_gmm(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                             const GmmConfig& config, std::uint64_t seed);

/// Density over b at each point, for one mixture. In product mode the mixture
/// describes log b and the density is p(log b) / b.
std::vector<double> gmm_density(const PsiB& psi, std::span<const double> b_points, DataModel mode);

/// Posterior-averaged mixture density over b.
std::vector<double> gmm_reconstruction(const PosteriorChain<PsiB>& chain,
                                       std::span<const double> b_points, DataModel mode);
PsiB gmm_map(const PosteriorChain<PsiB>& chain);

bool operator==(const PsiB& a, const PsiB& b);

}  // namespace deconv
