#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "deconv/rng.hpp"

namespace deconv {

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Numerically stable log(sum(exp(v))). Returns -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

double gaussian_log_pdf(double x, double mean, double variance);

enum class DistKind { Gaussian, Gamma, LogGaussian };

/// Scalar distribution with validated parameters. Parameters are interpreted per kind:
/// Gaussian(mean, variance), Gamma(shape, rate), LogGaussian(log-mean, log-variance).
class ScalarDist {
public:
  static ScalarDist gaussian(double mean, double variance);
  static ScalarDist gamma(double shape, double rate);
  static ScalarDist log_gaussian(double log_mean, double log_variance);

  DistKind kind() const { return kind_; }
  double first() const { return p1_; }
  double second() const { return p2_; }

  /// Exact log-density; -inf off the support, never NaN for finite x.
  double log_pdf(double x) const;
  double cdf(double x) const;
  double quantile(double p) const;
  double mean() const;
  double variance() const;

  double sample(Rng& rng) const;
  std::vector<double> sample(Rng& rng, std::size_t n) const;

private:
  ScalarDist(DistKind kind, double p1, double p2);

  DistKind kind_;
  double p1_;
  double p2_;
  double log_norm_;  // cached normalizing term
};

/// Gamma(shape, 1) variate. Marsaglia-Tsang rejection for shape >= 1 and the
/// U^(1/shape) boost for shape < 1.
double gamma_variate(double shape, Rng& rng);
/// log of a Gamma(shape, 1) variate; stays finite for tiny shapes where the
/// variate itself underflows.
double log_gamma_variate(double shape, Rng& rng);

double log_gamma_fn(double x);

enum class MomentSource { Analytic, Sampled };

inline constexpr std::size_t kMomentDraws = 10000;
/// Dedicated seed for moment estimation of transformed noise ("moments" in ASCII).
inline constexpr std::uint64_t kMomentSeed = 0x6d6f6d656e7473ULL;

/// The known distribution of the nuisance variable a. When log_space() is set the
/// model describes l = log a, with density p(l) = e^l p_A(e^l).
class NoiseModel {
public:
  explicit NoiseModel(ScalarDist dist);

  const ScalarDist& dist() const { return dist_; }
  bool log_space() const { return log_space_; }
  double mean() const { return mean_; }
  double variance() const { return variance_; }
  double stddev() const;
  MomentSource moment_source() const { return source_; }

  double log_pdf(double v) const;
  double sample(Rng& rng) const;
  std::vector<double> sample(Rng& rng, std::size_t n) const;

private:
  friend NoiseModel log_space_noise(const NoiseModel&, std::size_t, std::uint64_t);

  ScalarDist dist_;
  bool log_space_ = false;
  double mean_;
  double variance_;
  MomentSource source_ = MomentSource::Analytic;
};

/// Largest admissible P(a <= 0) for a log-space transform.
inline constexpr double kMaxNonPositiveMass = 1e-9;

/// Noise model over log a. Throws NonPositiveSupport when P(a <= 0) exceeds
/// kMaxNonPositiveMass, InvalidParameter when the input is already in log space.
NoiseModel log_space_noise(const NoiseModel& noise, std::size_t draws = kMomentDraws,
                           std::uint64_t seed = kMomentSeed);

/// Truncated Gaussian mixture parameters.
struct PsiB {
  std::vector<double> means;
  std::vector<double> variances;
  std::vector<double> weights;

  std::size_t size() const { return means.size(); }
  /// Throws InvalidParameter unless sizes agree, variances > 0, weights >= 0
  /// and sum to one within 1e-12.
  void validate() const;
};

double mixture_log_pdf(const PsiB& psi, double b);

std::vector<double> dirichlet_sample(std::span<const double> concentrations, Rng& rng);
double dirichlet_log_pdf(std::span<const double> weights, std::span<const double> concentrations);

}  // namespace deconv
