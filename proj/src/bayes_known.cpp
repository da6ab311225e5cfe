#include "deconv/bayes_known.hpp"

#include <cmath>
#include <limits>

#include "deconv/error.hpp"

namespace deconv {

namespace {

constexpr double kLatticeLo = 0.001;
constexpr double kAlphaHi = 10.0;
constexpr double kRateHi = 6.0;

double gamma_log_norm(const ThetaB& t) { return t.alpha * std::log(t.rate) - log_gamma_fn(t.alpha); }

bool valid(const ThetaB& t) {
  return std::isfinite(t.alpha) && std::isfinite(t.rate) && t.alpha > 0.0 && t.rate > 0.0;
}

}  // namespace

double log_prior(const ThetaB& theta, double xi) {
  if (!valid(theta)) return kNegInf;
  const double var = xi * xi;
  double la = std::log(theta.alpha);
  double lb = std::log(theta.rate);
  return gaussian_log_pdf(la, 0.0, var) - la + gaussian_log_pdf(lb, 0.0, var) - lb;
}

double log_posterior(const ThetaB& theta, std::span<const double> data, const NoiseModel& noise,
                     DataModel mode, const QuadGrid& grid, double xi) {
  double lp = log_prior(theta, xi);
  if (lp == kNegInf) return lp;
  const ScalarDist signal = ScalarDist::gamma(theta.alpha, theta.rate);
  auto signal_log_pdf = [&signal](double b) { return signal.log_pdf(b); };
  for (double x : data) lp += conv_log_likelihood(x, noise, signal_log_pdf, grid, mode);
  return lp;
}

KnownModelPosterior::KnownModelPosterior(std::span<const double> data, const NoiseModel& noise,
                                         DataModel mode, const QuadGrid& grid, double xi)
    : kernel_(data, noise, grid, mode, SignalSpace::Linear), xi_(xi) {
  const auto& pts = kernel_.signal_points();
  log_points_.resize(pts.size());
  for (std::size_t m = 0; m < pts.size(); ++m) log_points_[m] = std::log(pts[m]);
}

double KnownModelPosterior::log_likelihood(const ThetaB& theta) const {
  if (!valid(theta)) return kNegInf;
  const auto& pts = kernel_.signal_points();
  std::vector<double> signal(pts.size());
  const double norm = gamma_log_norm(theta);
  for (std::size_t m = 0; m < pts.size(); ++m)
    signal[m] = pts[m] > 0.0 ? norm + (theta.alpha - 1.0) * log_points_[m] - theta.rate * pts[m]
                             : kNegInf;
  return kernel_.log_likelihood(signal);
}

double KnownModelPosterior::operator()(const ThetaB& theta) const {
  double lp = log_prior(theta, xi_);
  if (lp == kNegInf) return lp;
  return lp + log_likelihood(theta);
}

double lattice_alpha(std::size_t i, std::size_t lattice) {
  if (lattice <= 1) return kLatticeLo;
  return kLatticeLo + (kAlphaHi - kLatticeLo) * static_cast<double>(i) / static_cast<double>(lattice - 1);
}

double lattice_rate(std::size_t i, std::size_t lattice) {
  if (lattice <= 1) return kLatticeLo;
  return kLatticeLo + (kRateHi - kLatticeLo) * static_cast<double>(i) / static_cast<double>(lattice - 1);
}

ThetaB grid_init(const KnownModelPosterior& posterior, std::size_t lattice) {
  if (lattice == 0) throw Error(ErrorKind::InvalidParameter, "lattice must have at least one point");
  ThetaB best{lattice_alpha(0, lattice), lattice_rate(0, lattice)};
  double best_lp = kNegInf;
  bool found = false;
  for (std::size_t i = 0; i < lattice; ++i) {
    for (std::size_t k = 0; k < lattice; ++k) {
      ThetaB t{lattice_alpha(i, lattice), lattice_rate(k, lattice)};
      double lp = posterior(t);
      if (std::isnan(lp)) continue;
      if (!found || lp > best_lp) {
        best = t;
        best_lp = lp;
        found = true;
      }
    }
  }
  return best;
}

ThetaB grid_init(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                 const KnownModelConfig& config) {
  QuadGrid grid = known_model_grid(data, noise, mode, config.grid_points, config.grid_hi);
  KnownModelPosterior posterior(data, noise, mode, grid, config.xi);
  return grid_init(posterior, config.lattice);
}

Proposal<ThetaB> propose_log_gaussian(const ThetaB& current, Rng& rng, double sigma_s) {
  if (!(sigma_s > 0.0)) throw Error(ErrorKind::InvalidParameter, "sigma_s must be > 0");
  double da = sigma_s * rng.normal();
  double db = sigma_s * rng.normal();
  ThetaB next{current.alpha * std::exp(da), current.rate * std::exp(db)};
  // q(t'|t) carries 1/t' per coordinate, so the ratio q(t|t')/q(t'|t) = t'/t.
  return {next, da + db};
}

PosteriorChain<ThetaB> run_chain(const KnownModelPosterior& posterior,
                                 const KnownModelConfig& config, std::uint64_t seed) {
  if (config.samples < 1) throw Error(ErrorKind::InvalidParameter, "chain needs at least one sample");
  Rng rng(seed);
  ThetaB state = grid_init(posterior, config.lattice);
  double lp = posterior(state);

  PosteriorChain<ThetaB> chain;
  chain.accepted.assign(1, 0);
  chain.samples.reserve(config.samples);
  chain.log_posteriors.reserve(config.samples);

  auto step = [&]() {
    auto out = mh_step(state, lp, rng, posterior, config.sigma_s);
    state = out.state;
    lp = out.log_target;
    return out.accepted;
  };

  for (std::size_t i = 0; i < config.burn_in; ++i) step();
  chain.push(state, lp);
  for (std::size_t s = 1; s < config.samples; ++s) {
    ++chain.proposals;
    if (step()) ++chain.accepted[0];
    chain.push(state, lp);
  }
  return chain;
}

PosteriorChain<ThetaB> run_chain(std::span<const double> data, const NoiseModel& noise,
                                 DataModel mode, const KnownModelConfig& config,
                                 std::uint64_t seed) {
  QuadGrid grid = known_model_grid(data, noise, mode, config.grid_points, config.grid_hi);
  KnownModelPosterior posterior(data, noise, mode, grid, config.xi);
  return run_chain(posterior, config, seed);
}

std::vector<double> reconstruction_density(const PosteriorChain<ThetaB>& chain,
                                           std::span<const double> b_points) {
  if (chain.empty()) throw Error(ErrorKind::InvalidParameter, "empty chain");
  std::vector<double> out(b_points.size(), 0.0);
  std::vector<double> log_b(b_points.size());
  for (std::size_t j = 0; j < b_points.size(); ++j)
    log_b[j] = b_points[j] > 0.0 ? std::log(b_points[j]) : kNegInf;

  // Consecutive repeats (rejected proposals) are evaluated once and weighted.
  std::size_t s = 0;
  while (s < chain.size()) {
    std::size_t run = 1;
    while (s + run < chain.size() && chain.samples[s + run] == chain.samples[s]) ++run;
    const ThetaB& t = chain.samples[s];
    const double norm = gamma_log_norm(t);
    for (std::size_t j = 0; j < b_points.size(); ++j) {
      if (!(b_points[j] > 0.0)) continue;
      out[j] += static_cast<double>(run) *
                std::exp(norm + (t.alpha - 1.0) * log_b[j] - t.rate * b_points[j]);
    }
    s += run;
  }
  const double inv = 1.0 / static_cast<double>(chain.size());
  for (auto& v : out) v *= inv;
  return out;
}

ThetaB map_density(const PosteriorChain<ThetaB>& chain) { return chain.map_sample(); }

}  // namespace deconv
