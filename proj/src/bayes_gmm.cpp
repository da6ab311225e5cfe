#include "deconv/bayes_gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "deconv/error.hpp"

namespace deconv {

namespace {

/// Per-component constants for repeated evaluation of one mixture.
struct MixtureTable {
  std::vector<double> coef;     // log rho_i - 0.5 log(2 pi s_i)
  std::vector<double> center;   // mean + shift
  std::vector<double> half_inv; // 1 / (2 s_i)

  MixtureTable(const PsiB& psi, double shift, double var_add) {
    const std::size_t n = psi.size();
    coef.resize(n);
    center.resize(n);
    half_inv.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = psi.variances[i] + var_add;
      coef[i] = psi.weights[i] > 0.0 ? std::log(psi.weights[i]) - kLogSqrt2Pi - 0.5 * std::log(s)
                                     : kNegInf;
      center[i] = psi.means[i] + shift;
      half_inv[i] = 0.5 / s;
    }
  }

  double log_pdf(double y) const {
    double hi = kNegInf;
    const std::size_t n = coef.size();
    double terms[64];
    std::vector<double> heap;
    double* t = terms;
    if (n > 64) {
      heap.resize(n);
      t = heap.data();
    }
    for (std::size_t i = 0; i < n; ++i) {
      double d = y - center[i];
      t[i] = coef[i] - d * d * half_inv[i];
      hi = std::max(hi, t[i]);
    }
    if (hi == kNegInf) return kNegInf;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::exp(t[i] - hi);
    return hi + std::log(acc);
  }
};

void require_gaussian_noise(const NoiseModel& noise) {
  if (noise.log_space() || noise.dist().kind() != DistKind::Gaussian)
    throw Error(ErrorKind::InvalidParameter, "sum-mode mixture likelihood needs Gaussian noise");
}

/// Accumulates sum_j w_j d log mix(y_j) / d(unconstrained) into grad, where the
/// mixture components are shifted by `shift` and widened by `var_add`.
void accumulate_mixture_gradient(const PsiB& psi, std::span<const double> points,
                                 std::span<const double> weights, double shift, double var_add,
                                 std::span<double> grad) {
  const std::size_t n = psi.size();
  MixtureTable table(psi, shift, var_add);
  std::vector<double> t(n);
  for (std::size_t j = 0; j < points.size(); ++j) {
    double w = weights.empty() ? 1.0 : weights[j];
    if (w == 0.0) continue;
    double y = points[j];
    double hi = kNegInf;
    for (std::size_t i = 0; i < n; ++i) {
      double d = y - table.center[i];
      t[i] = table.coef[i] - d * d * table.half_inv[i];
      hi = std::max(hi, t[i]);
    }
    if (hi == kNegInf) continue;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = std::exp(t[i] - hi);
      acc += t[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      double gamma = t[i] / acc;
      double s = psi.variances[i] + var_add;
      double d = y - table.center[i];
      grad[i] += w * gamma * d / s;
      grad[n + i] += w * gamma * 0.5 * (d * d / (s * s) - 1.0 / s) * psi.variances[i];
      grad[2 * n + i] += w * (gamma - psi.weights[i]);
    }
  }
}

std::vector<double> softmax(std::span<const double> logits) {
  double norm = log_sum_exp(logits);
  std::vector<double> w(logits.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(logits[i] - norm);
  return w;
}

PsiB from_unconstrained(std::span<const double> u, std::size_t n) {
  PsiB psi;
  psi.means.assign(u.begin(), u.begin() + static_cast<std::ptrdiff_t>(n));
  psi.variances.resize(n);
  for (std::size_t i = 0; i < n; ++i) psi.variances[i] = std::exp(u[n + i]);
  psi.weights = softmax(u.subspan(2 * n, n));
  return psi;
}

bool all_positive(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
}

}  // namespace

bool operator==(const PsiB& a, const PsiB& b) {
  return a.means == b.means && a.variances == b.variances && a.weights == b.weights;
}

GmmPriorSpec GmmPriorSpec::decaying(std::size_t components) {
  if (components == 0) throw Error(ErrorKind::InvalidParameter, "mixture needs >= 1 component");
  GmmPriorSpec spec;
  spec.concentrations.resize(components);
  double total = 0.0;
  for (std::size_t i = 0; i < components; ++i) {
    spec.concentrations[i] = std::pow(0.9, static_cast<double>(i + 1));
    total += spec.concentrations[i];
  }
  for (auto& a : spec.concentrations) a = 10.0 * a / total;
  return spec;
}

double gmm_log_prior(const PsiB& psi, const GmmPriorSpec& spec) {
  if (spec.concentrations.size() != psi.size())
    throw Error(ErrorKind::InvalidParameter, "prior and mixture component counts differ");
  double lp = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    lp += gaussian_log_pdf(psi.means[i], spec.mean_loc, spec.mean_var);
    if (!(psi.variances[i] > 0.0)) return kNegInf;
    double lv = std::log(psi.variances[i]);
    lp += gaussian_log_pdf(lv, spec.log_var_loc, spec.log_var_var) - lv;
  }
  return lp + dirichlet_log_pdf(psi.weights, spec.concentrations);
}

double gmm_sum_log_likelihood(double x, const PsiB& psi, const NoiseModel& noise) {
  require_gaussian_noise(noise);
  return MixtureTable(psi, noise.mean(), noise.variance()).log_pdf(x);
}

double gmm_product_log_likelihood(double x, const PsiB& psi, const NoiseModel& noise,
                                  const QuadGrid& grid) {
  MixtureTable table(psi, 0.0, 0.0);
  return conv_log_likelihood(
      x, noise, [&table](double phi) { return table.log_pdf(phi); }, grid, DataModel::Product,
      SignalSpace::Log);
}

GmmPosterior::GmmPosterior(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                           GmmPriorSpec prior, std::size_t grid_points,
                           std::optional<double> grid_hi)
    : data_(data.begin(), data.end()), noise_(noise), mode_(mode), prior_(std::move(prior)) {
  if (data_.empty()) throw Error(ErrorKind::InvalidParameter, "dataset is empty");
  if (mode_ == DataModel::Sum) {
    require_gaussian_noise(noise_);
  } else {
    QuadGrid grid = known_model_grid(data_, noise_, mode_, grid_points, grid_hi);
    kernel_.emplace(data_, noise_, grid, mode_, SignalSpace::Log);
  }
}

double GmmPosterior::log_likelihood(const PsiB& psi) const {
  if (mode_ == DataModel::Sum) {
    MixtureTable table(psi, noise_.mean(), noise_.variance());
    double acc = 0.0;
    for (double x : data_) acc += table.log_pdf(x);
    return acc;
  }
  MixtureTable table(psi, 0.0, 0.0);
  const auto& pts = kernel_->signal_points();
  std::vector<double> signal(pts.size());
  for (std::size_t m = 0; m < pts.size(); ++m) signal[m] = table.log_pdf(pts[m]);
  return kernel_->log_likelihood(signal);
}

double GmmPosterior::operator()(const PsiB& psi) const {
  if (!all_positive(psi.weights) || !all_positive(psi.variances)) return kNegInf;
  double lp = log_prior(psi);
  if (lp == kNegInf || std::isnan(lp)) return kNegInf;
  return lp + log_likelihood(psi);
}

double GmmPosterior::value_and_gradient(const PsiB& psi, std::span<double> grad) const {
  const std::size_t n = psi.size();
  if (grad.size() != 3 * n) throw Error(ErrorKind::InvalidParameter, "gradient needs 3I entries");
  std::fill(grad.begin(), grad.end(), 0.0);

  double ll;
  if (mode_ == DataModel::Sum) {
    ll = log_likelihood(psi);
    accumulate_mixture_gradient(psi, data_, {}, noise_.mean(), noise_.variance(), grad);
  } else {
    MixtureTable table(psi, 0.0, 0.0);
    const auto& pts = kernel_->signal_points();
    std::vector<double> signal(pts.size()), dsignal(pts.size());
    for (std::size_t m = 0; m < pts.size(); ++m) signal[m] = table.log_pdf(pts[m]);
    ll = kernel_->log_likelihood(signal, dsignal);
    accumulate_mixture_gradient(psi, pts, dsignal, 0.0, 0.0, grad);
  }

  double excess = 0.0;
  for (std::size_t i = 0; i < n; ++i) excess += prior_.concentrations[i] - 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    grad[i] -= (psi.means[i] - prior_.mean_loc) / prior_.mean_var;
    double lv = std::log(psi.variances[i]);
    grad[n + i] += -1.0 - (lv - prior_.log_var_loc) / prior_.log_var_var;
    grad[2 * n + i] += (prior_.concentrations[i] - 1.0) - psi.weights[i] * excess;
  }
  return ll + log_prior(psi);
}

PsiB gmm_moment_init(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                     const GmmPriorSpec& prior) {
  if (data.empty()) throw Error(ErrorKind::InvalidParameter, "dataset is empty");
  std::vector<double> values(data.begin(), data.end());
  double noise_mean = noise.mean();
  if (mode == DataModel::Product) {
    for (double& v : values) {
      if (!(v > 0.0)) throw Error(ErrorKind::NonPositiveData, "product mode requires x > 0");
      v = std::log(v);
    }
    noise_mean = log_space_noise(noise).mean();
  }
  const double n = static_cast<double>(values.size());
  double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) var = 1.0;  // single-point or constant data

  const std::size_t k = prior.concentrations.size();
  double total = std::accumulate(prior.concentrations.begin(), prior.concentrations.end(), 0.0);
  PsiB psi;
  psi.means.assign(k, mean - noise_mean);
  psi.variances.assign(k, var);
  psi.weights.resize(k);
  for (std::size_t i = 0; i < k; ++i) psi.weights[i] = prior.concentrations[i] / total;
  return psi;
}

PsiB gmm_init(const GmmPosterior& posterior, std::size_t steps, double lr) {
  PsiB psi = gmm_moment_init(posterior.data(), posterior.noise(), posterior.mode(), posterior.prior());
  if (steps == 0) return psi;

  const std::size_t n = psi.size();
  std::vector<double> u(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    u[i] = psi.means[i];
    u[n + i] = std::log(psi.variances[i]);
    u[2 * n + i] = std::log(psi.weights[i]);
  }

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m1(u.size(), 0.0), m2(u.size(), 0.0), grad(u.size());
  double b1t = 1.0, b2t = 1.0;
  for (std::size_t step = 0; step < steps; ++step) {
    PsiB current = from_unconstrained(u, n);
    double value = posterior.value_and_gradient(current, grad);
    if (!std::isfinite(value)) break;
    // Density of the unconstrained coordinates: log-Jacobians of exp and softmax.
    for (std::size_t i = 0; i < n; ++i) {
      grad[n + i] += 1.0;
      grad[2 * n + i] += 1.0 - static_cast<double>(n) * current.weights[i];
    }
    b1t *= beta1;
    b2t *= beta2;
    for (std::size_t j = 0; j < u.size(); ++j) {
      double g = -grad[j];  // ascend the log-posterior
      m1[j] = beta1 * m1[j] + (1.0 - beta1) * g;
      m2[j] = beta2 * m2[j] + (1.0 - beta2) * g * g;
      double mhat = m1[j] / (1.0 - b1t);
      double vhat = m2[j] / (1.0 - b2t);
      u[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  PsiB out = from_unconstrained(u, n);
  // Never hand back a start the sampler cannot leave.
  if (!std::isfinite(posterior(out))) return psi;
  return out;
}

PsiB gibbs_sweep(const PsiB& psi, double& log_posterior, Rng& rng, const GmmPosterior& posterior,
                 const GmmConfig& config, std::array<bool, 3>* accepted) {
  const std::size_t n = psi.size();
  PsiB state = psi;
  double lp = log_posterior;
  std::array<bool, 3> flags{false, false, false};

  {  // means, jointly; symmetric proposal
    auto out = metropolis_hastings(
        state, lp, posterior,
        [&](const PsiB& cur, Rng& r) {
          Proposal<PsiB> p{cur, 0.0};
          for (std::size_t i = 0; i < n; ++i) p.state.means[i] += config.tau_mu * r.normal();
          return p;
        },
        rng);
    state = std::move(out.state);
    lp = out.log_target;
    flags[0] = out.accepted;
  }
  {  // variances, jointly; log-Gaussian perturbation
    auto out = metropolis_hastings(
        state, lp, posterior,
        [&](const PsiB& cur, Rng& r) {
          Proposal<PsiB> p{cur, 0.0};
          for (std::size_t i = 0; i < n; ++i) {
            double step = config.tau_sigma * r.normal();
            p.state.variances[i] *= std::exp(step);
            if (config.corrected_hastings) p.log_hastings += step;
          }
          return p;
        },
        rng);
    state = std::move(out.state);
    lp = out.log_target;
    flags[1] = out.accepted;
  }
  {  // weights, one Dirichlet draw centred on the current weights
    std::vector<double> conc(n);
    for (std::size_t i = 0; i < n; ++i) conc[i] = config.dirichlet_scale * state.weights[i];
    if (all_positive(conc)) {
      auto out = metropolis_hastings(
          state, lp, posterior,
          [&](const PsiB& cur, Rng& r) {
            Proposal<PsiB> p{cur, 0.0};
            p.state.weights = dirichlet_sample(conc, r);
            if (config.corrected_hastings && all_positive(p.state.weights)) {
              std::vector<double> back(n);
              for (std::size_t i = 0; i < n; ++i)
                back[i] = config.dirichlet_scale * p.state.weights[i];
              p.log_hastings = dirichlet_log_pdf(cur.weights, back) -
                               dirichlet_log_pdf(p.state.weights, conc);
            }
            return p;
          },
          rng);
      state = std::move(out.state);
      lp = out.log_target;
      flags[2] = out.accepted;
    }
  }

  log_posterior = lp;
  if (accepted) *accepted = flags;
  return state;
}

PosteriorChain<PsiB> run_gmm(const GmmPosterior& posterior, const GmmConfig& config,
                             std::uint64_t seed) {
  if (config.samples < 1) throw Error(ErrorKind::InvalidParameter, "chain needs at least one sample");
  Rng rng(seed);
  PsiB state = gmm_init(posterior, config.init_steps, config.init_lr);
  double lp = posterior(state);

  PosteriorChain<PsiB> chain;
  chain.accepted.assign(3, 0);
  chain.samples.reserve(config.samples);
  chain.log_posteriors.reserve(config.samples);
  std::array<bool, 3> flags{};
  for (std::size_t i = 0; i < config.burn_in; ++i)
    state = gibbs_sweep(state, lp, rng, posterior, config);
  for (std::size_t s = 0; s < config.samples; ++s) {
    state = gibbs_sweep(state, lp, rng, posterior, config, &flags);
    ++chain.proposals;
    for (std::size_t b = 0; b < 3; ++b) chain.accepted[b] += flags[b] ? 1 : 0;
    chain.push(state, lp);
  }
  return chain;
}

PosteriorChain<PsiB> run_gmm(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                             const GmmConfig& config, std::uint64_t seed) {
  GmmPosterior posterior(data, noise, mode, GmmPriorSpec::decaying(config.components),
                         config.grid_points, config.grid_hi);
  return run_gmm(posterior, config, seed);
}

std::vector<double> gmm_density(const PsiB& psi, std::span<const double> b_points, DataModel mode) {
  MixtureTable table(psi, 0.0, 0.0);
  std::vector<double> out(b_points.size());
  for (std::size_t j = 0; j < b_points.size(); ++j) {
    double b = b_points[j];
    if (mode == DataModel::Sum) {
      out[j] = std::exp(table.log_pdf(b));
    } else {
      out[j] = b > 0.0 ? std::exp(table.log_pdf(std::log(b)) - std::log(b)) : 0.0;
    }
  }
  return out;
}

std::vector<double> gmm_reconstruction(const PosteriorChain<PsiB>& chain,
                                       std::span<const double> b_points, DataModel mode) {
  if (chain.empty()) throw Error(ErrorKind::InvalidParameter, "empty chain");
  std::vector<double> out(b_points.size(), 0.0);
  std::size_t s = 0;
  while (s < chain.size()) {
    std::size_t run = 1;
    while (s + run < chain.size() && chain.samples[s + run] == chain.samples[s]) ++run;
    auto dens = gmm_density(chain.samples[s], b_points, mode);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += static_cast<double>(run) * dens[j];
    s += run;
  }
  const double inv = 1.0 / static_cast<double>(chain.size());
  for (auto& v : out) v *= inv;
  return out;
}

PsiB gmm_map(const PosteriorChain<PsiB>& chain) { return chain.map_sample(); }

}  // namespace deconv
