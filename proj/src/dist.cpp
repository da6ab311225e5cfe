#include "deconv/dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "deconv/error.hpp"

namespace deconv {

namespace {

bool positive_finite(double v) { return std::isfinite(v) && v > 0.0; }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double normal_quantile(double p) { return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * p); }

}  // namespace

double log_gamma_fn(double x) { return boost::math::lgamma(x); }

double log_sum_exp(std::span<const double> v) {
  double hi = kNegInf;
  for (double x : v) hi = std::max(hi, x);
  if (hi == kNegInf) return kNegInf;
  if (hi == std::numeric_limits<double>::infinity()) return hi;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

double gaussian_log_pdf(double x, double mean, double variance) {
  double d = x - mean;
  return -kLogSqrt2Pi - 0.5 * std::log(variance) - 0.5 * d * d / variance;
}

ScalarDist::ScalarDist(DistKind kind, double p1, double p2) : kind_(kind), p1_(p1), p2_(p2) {
  switch (kind_) {
    case DistKind::Gaussian:
    case DistKind::LogGaussian:
      log_norm_ = -kLogSqrt2Pi - 0.5 * std::log(p2_);
      break;
    case DistKind::Gamma:
      log_norm_ = p1_ * std::log(p2_) - log_gamma_fn(p1_);
      break;
  }
}

ScalarDist ScalarDist::gaussian(double mean, double variance) {
  if (!std::isfinite(mean) || !positive_finite(variance))
    throw Error(ErrorKind::InvalidParameter, "gaussian requires finite mean and variance > 0");
  return ScalarDist(DistKind::Gaussian, mean, variance);
}

ScalarDist ScalarDist::gamma(double shape, double rate) {
  if (!positive_finite(shape) || !positive_finite(rate))
    throw Error(ErrorKind::InvalidParameter, "gamma requires shape > 0 and rate > 0");
  return ScalarDist(DistKind::Gamma, shape, rate);
}

ScalarDist ScalarDist::log_gaussian(double log_mean, double log_variance) {
  if (!std::isfinite(log_mean) || !positive_finite(log_variance))
    throw Error(ErrorKind::InvalidParameter,
                "log-gaussian requires finite log-mean and log-variance > 0");
  return ScalarDist(DistKind::LogGaussian, log_mean, log_variance);
}

double ScalarDist::log_pdf(double x) const {
  switch (kind_) {
    case DistKind::Gaussian: {
      double d = x - p1_;
      return log_norm_ - 0.5 * d * d / p2_;
    }
    case DistKind::Gamma:
      if (!(x > 0.0)) return kNegInf;
      if (x == std::numeric_limits<double>::infinity()) return kNegInf;
      return log_norm_ + (p1_ - 1.0) * std::log(x) - p2_ * x;
    case DistKind::LogGaussian: {
      if (!(x > 0.0)) return kNegInf;
      if (x == std::numeric_limits<double>::infinity()) return kNegInf;
      double l = std::log(x);
      double d = l - p1_;
      return log_norm_ - l - 0.5 * d * d / p2_;
    }
  }
  return kNegInf;
}

double ScalarDist::cdf(double x) const {
  switch (kind_) {
    case DistKind::Gaussian:
      return normal_cdf((x - p1_) / std::sqrt(p2_));
    case DistKind::Gamma:
      if (x <= 0.0) return 0.0;
      if (std::isinf(x)) return 1.0;
      return boost::math::gamma_p(p1_, p2_ * x);
    case DistKind::LogGaussian:
      if (x <= 0.0) return 0.0;
      return normal_cdf((std::log(x) - p1_) / std::sqrt(p2_));
  }
  return 0.0;
}

double ScalarDist::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorKind::InvalidParameter, "quantile requires 0 < p < 1");
  switch (kind_) {
    case DistKind::Gaussian:
      return p1_ + std::sqrt(p2_) * normal_quantile(p);
    case DistKind::Gamma:
      return boost::math::gamma_p_inv(p1_, p) / p2_;
    case DistKind::LogGaussian:
      return std::exp(p1_ + std::sqrt(p2_) * normal_quantile(p));
  }
  return 0.0;
}

double ScalarDist::mean() const {
  switch (kind_) {
    case DistKind::Gaussian: return p1_;
    case DistKind::Gamma: return p1_ / p2_;
    case DistKind::LogGaussian: return std::exp(p1_ + 0.5 * p2_);
  }
  return 0.0;
}

double ScalarDist::variance() const {
  switch (kind_) {
    case DistKind::Gaussian: return p2_;
    case DistKind::Gamma: return p1_ / (p2_ * p2_);
    case DistKind::LogGaussian: return std::expm1(p2_) * std::exp(2.0 * p1_ + p2_);
  }
  return 0.0;
}

double ScalarDist::sample(Rng& rng) const {
  switch (kind_) {
    case DistKind::Gaussian: return p1_ + std::sqrt(p2_) * rng.normal();
    case DistKind::Gamma: return gamma_variate(p1_, rng) / p2_;
    case DistKind::LogGaussian: return std::exp(p1_ + std::sqrt(p2_) * rng.normal());
  }
  return 0.0;
}

std::vector<double> ScalarDist::sample(Rng& rng, std::size_t n) const {
  std::vector<double> out(n);
  for (auto& v : out) v = sample(rng);
  return out;
}

double log_gamma_variate(double shape, Rng& rng) {
  if (shape < 1.0) {
    // G(a) = G(a + 1) * U^(1/a)
    double log_u = std::log(rng.uniform());
    return log_gamma_variate(shape + 1.0, rng) + log_u / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double z, v;
    do {
      z = rng.normal();
      v = 1.0 + c * z;
    } while (v <= 0.0);
    v = v * v * v;
    double u = rng.uniform();
    double z2 = z * z;
    if (u < 1.0 - 0.0331 * z2 * z2) return std::log(d * v);
    if (std::log(u) < 0.5 * z2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

double gamma_variate(double shape, Rng& rng) { return std::exp(log_gamma_variate(shape, rng)); }

NoiseModel::NoiseModel(ScalarDist dist)
    : dist_(dist), mean_(dist.mean()), variance_(dist.variance()) {}

double NoiseModel::stddev() const { return std::sqrt(variance_); }

double NoiseModel::log_pdf(double v) const {
  if (!log_space_) return dist_.log_pdf(v);
  if (std::isinf(v)) return kNegInf;
  return dist_.log_pdf(std::exp(v)) + v;
}

double NoiseModel::sample(Rng& rng) const {
  double a = dist_.sample(rng);
  return log_space_ ? std::log(a) : a;
}

std::vector<double> NoiseModel::sample(Rng& rng, std::size_t n) const {
  std::vector<double> out(n);
  for (auto& v : out) v = sample(rng);
  return out;
}

NoiseModel log_space_noise(const NoiseModel& noise, std::size_t draws, std::uint64_t seed) {
  if (noise.log_space())
    throw Error(ErrorKind::InvalidParameter, "noise model is already in log space");
  if (draws < 2) throw Error(ErrorKind::InvalidParameter, "moment estimation needs >= 2 draws");
  double mass = noise.dist().cdf(0.0);
  if (!(mass <= kMaxNonPositiveMass))
    throw Error(ErrorKind::NonPositiveSupport,
                "noise places mass " + std::to_string(mass) +
                    " on a <= 0; product mode requires positive noise");

  Rng rng(seed);
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    double a = noise.dist().sample(rng);
    if (!(a > 0.0)) continue;
    double l = std::log(a);
    ++k;
    double delta = l - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (l - mean);
  }
  if (k < 2) throw Error(ErrorKind::NonPositiveSupport, "no positive draws from the noise model");

  NoiseModel out = noise;
  out.log_space_ = true;
  out.mean_ = mean;
  out.variance_ = m2 / static_cast<double>(k - 1);
  out.source_ = MomentSource::Sampled;
  return out;
}

void PsiB::validate() const {
  const std::size_t n = means.size();
  if (n == 0 || variances.size() != n || weights.size() != n)
    throw Error(ErrorKind::InvalidParameter, "mixture needs equal, non-zero component counts");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(means[i])) throw Error(ErrorKind::InvalidParameter, "non-finite mixture mean");
    if (!positive_finite(variances[i]))
      throw Error(ErrorKind::InvalidParameter, "mixture variances must be > 0");
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i]))
      throw Error(ErrorKind::InvalidParameter, "mixture weights must be >= 0");
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw Error(ErrorKind::InvalidParameter, "mixture weights must sum to one");
}

double mixture_log_pdf(const PsiB& psi, double b) {
  double hi = kNegInf;
  const std::size_t n = psi.size();
  // two passes keep this allocation-free
  for (std::size_t i = 0; i < n; ++i) {
    if (psi.weights[i] <= 0.0) continue;
    hi = std::max(hi, std::log(psi.weights[i]) + gaussian_log_pdf(b, psi.means[i], psi.variances[i]));
  }
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (psi.weights[i] <= 0.0) continue;
    acc += std::exp(std::log(psi.weights[i]) +
                    gaussian_log_pdf(b, psi.means[i], psi.variances[i]) - hi);
  }
  return hi + std::log(acc);
}

std::vector<double> dirichlet_sample(std::span<const double> concentrations, Rng& rng) {
  std::vector<double> logs(concentrations.size());
  for (std::size_t i = 0; i < concentrations.size(); ++i) {
    if (!positive_finite(concentrations[i]))
      throw Error(ErrorKind::InvalidParameter, "dirichlet concentrations must be > 0");
    logs[i] = log_gamma_variate(concentrations[i], rng);
  }
  double norm = log_sum_exp(logs);
  std::vector<double> w(logs.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logs[i] - norm);
  return w;
}

double dirichlet_log_pdf(std::span<const double> weights, std::span<const double> concentrations) {
  double total = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    total += concentrations[i];
    acc -= log_gamma_fn(concentrations[i]);
    if (concentrations[i] != 1.0) {
      if (!(weights[i] > 0.0)) return concentrations[i] > 1.0 ? kNegInf : std::numeric_limits<double>::infinity();
      acc += (concentrations[i] - 1.0) * std::log(weights[i]);
    }
  }
  return acc + log_gamma_fn(total);
}

}  // namespace deconv
