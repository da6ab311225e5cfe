#include "deconv/eval.hpp"

#include <cmath>

#include "deconv/error.hpp"
#include "deconv/rng.hpp"

namespace deconv {

std::vector<double> generate(const Scenario& s) {
  if (s.n < 1) throw Error(ErrorKind::InvalidParameter, "scenario needs N >= 1");
  const ScalarDist signal = ScalarDist::gamma(s.signal.alpha, s.signal.rate);
  Rng signal_rng(derive_seed(s.seed, "signal"));
  Rng noise_rng(derive_seed(s.seed, "noise"));
  std::vector<double> x(s.n);
  for (std::size_t i = 0; i < s.n; ++i) {
    const double b = signal.sample(signal_rng);
    const double a = s.noise.sample(noise_rng);
    x[i] = s.mode == DataModel::Sum ? a + b : a * b;
  }
  return x;
}

double snr(DataModel mode, const ThetaB& signal, const NoiseModel& noise) {
  const ScalarDist b = ScalarDist::gamma(signal.alpha, signal.rate);
  if (mode == DataModel::Sum) return b.variance() / noise.variance();
  const double rel_b = b.variance() / (b.mean() * b.mean());
  const double rel_a = noise.variance() / (noise.mean() * noise.mean());
  return rel_b / rel_a;
}

double snr(const Scenario& s) { return snr(s.mode, s.signal, s.noise); }

double alpha_for_snr(double target, DataModel mode, const NoiseModel& noise, double rate) {
  if (!(target > 0.0) || !std::isfinite(target))
    throw Error(ErrorKind::InvalidParameter, "target SNR must be positive");
  if (!(rate > 0.0)) throw Error(ErrorKind::InvalidParameter, "rate must be positive");
  // Gamma(alpha, rate): variance alpha / rate^2, squared coefficient of variation 1 / alpha.
  if (mode == DataModel::Sum) return target * rate * rate * noise.variance();
  const double rel_a = noise.variance() / (noise.mean() * noise.mean());
  return 1.0 / (target * rel_a);
}

KlResult kl_divergence(const ScalarDist& p, std::span<const double> q, const QuadGrid& grid) {
  if (q.size() != grid.size()) throw Error(ErrorKind::InvalidParameter, "q must match the grid");
  const double off = p.cdf(grid.lo()) + (1.0 - p.cdf(grid.hi()));
  if (!(off < kMaxOffGridMass))
    throw Error(ErrorKind::InadequateGrid,
                "reference mass outside the KL grid is " + std::to_string(off));
  bool clamped = false;
  double acc = 0.0;
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double lp = p.log_pdf(grid[m]);
    if (lp == kNegInf) continue;
    double lq = q[m];
    if (!(lq >= kKlLogFloor)) {  // also catches NaN
      lq = kKlLogFloor;
      clamped = true;
    }
    acc += std::exp(lp) * (lp - lq);
  }
  return {acc * grid.spacing(), clamped, off};
}

KlResult kl_divergence(const ScalarDist& p, const std::function<double(double)>& q_log_pdf,
                       const QuadGrid& grid) {
  std::vector<double> q(grid.size());
  for (std::size_t m = 0; m < grid.size(); ++m) q[m] = q_log_pdf(grid[m]);
  return kl_divergence(p, q, grid);
}

KlResult kl_to_ground_truth(const ThetaB& gt, const std::function<double(double)>& q_log_pdf,
                            const QuadGrid& grid) {
  return kl_divergence(ScalarDist::gamma(gt.alpha, gt.rate), q_log_pdf, grid);
}

KlResult kl_to_ground_truth(const ThetaB& gt, std::span<const double> q, const QuadGrid& grid) {
  return kl_divergence(ScalarDist::gamma(gt.alpha, gt.rate), q, grid);
}

QuadGrid kl_grid(const ThetaB& gt, std::size_t m) {
  const ScalarDist p = ScalarDist::gamma(gt.alpha, gt.rate);
  return build_grid(p.quantile(1e-9), p.quantile(1.0 - 1e-9), m);
}

}  // namespace deconv
