#include "deconv/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deconv/error.hpp"

namespace deconv {

void TrainConfig::validate() const {
  if (m < 2) throw Error(ErrorKind::InvalidParameter, "nf.m must be >= 2");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error(ErrorKind::InvalidParameter, "nf.lr must be > 0");
  flow.validate();
}

AffineHead init_head(std::span<const double> data, const NoiseModel& noise) {
  if (data.empty()) throw Error(ErrorKind::InvalidParameter, "dataset is empty");
  const double n = static_cast<double>(data.size());
  const double mean = std::accumulate(data.begin(), data.end(), 0.0) / n;
  double var = 0.0;
  for (double x : data) var += (x - mean) * (x - mean);
  var /= n;
  double beta2 = var > 0.0 ? var * std::max(1.0 - noise.variance() / var, 1.0 / 16.0) : 0.0;
  if (!(beta2 > 0.0)) beta2 = std::max(noise.variance() / 16.0, 1e-12);  // constant data
  return {mean - noise.mean(), std::sqrt(beta2)};
}

double nf_loss(const FlowModel& model, std::span<const double> data, const NoiseModel& noise,
               const QuadGrid& grid) {
  if (data.empty()) throw Error(ErrorKind::InvalidParameter, "dataset is empty");
  const auto pts = grid.points();
  std::vector<double> q(pts.size());
  model.log_pdf(pts, q);
  const double log_db = std::log(grid.spacing());
  std::vector<double> terms(pts.size());
  double acc = 0.0;
  for (double x : data) {
    for (std::size_t m = 0; m < pts.size(); ++m) terms[m] = log_db + q[m] + noise.log_pdf(x - pts[m]);
    acc += log_sum_exp(terms);
  }
  return -acc / static_cast<double>(data.size());
}

NfLoss::NfLoss(std::span<const double> data, const NoiseModel& noise, const QuadGrid& grid)
    : kernel_(data, noise, grid, DataModel::Sum, SignalSpace::Linear),
      inv_n_(1.0 / static_cast<double>(data.size())) {}

double NfLoss::value(const FlowModel& model) const {
  const auto& pts = kernel_.signal_points();
  std::vector<double> q(pts.size());
  model.log_pdf(pts, q);
  return -kernel_.log_likelihood(q) * inv_n_;
}

double NfLoss::value_and_gradient(const FlowModel& model, std::span<double> grad) const {
  const auto& pts = kernel_.signal_points();
  std::vector<double> q(pts.size()), dq(pts.size());
  model.log_pdf(pts, q);
  const double ll = kernel_.log_likelihood(q, dq);
  for (auto& v : dq) v *= -inv_n_;
  model.log_pdf_gradient(pts, dq, grad);
  return -ll * inv_n_;
}

FitResult fit_nf(std::span<const double> data, const NoiseModel& noise, const TrainConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw Error(ErrorKind::InvalidParameter, "dataset is empty");
  QuadGrid grid = nf_grid(data, noise, cfg.m);
  AffineHead head = init_head(data, noise);
  FlowModel model(cfg.flow, head.alpha, head.beta);
  NfLoss loss(data, noise, grid);

  std::vector<double> params = model.parameters();
  std::vector<double> grad(params.size()), m1(params.size(), 0.0), m2(params.size(), 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double b1t = 1.0, b2t = 1.0;

  double initial = loss.value_and_gradient(model, grad);
  if (!std::isfinite(initial))
    throw Error(ErrorKind::Numerical, "flow loss is not finite at initialization");
  FitResult result{model, grid, initial, initial, 0, 0};
  double current = initial;

  for (std::size_t step = 1; step <= cfg.steps; ++step) {
    b1t *= beta1;
    b2t *= beta2;
    for (std::size_t j = 0; j < params.size(); ++j) {
      m1[j] = beta1 * m1[j] + (1.0 - beta1) * grad[j];
      m2[j] = beta2 * m2[j] + (1.0 - beta2) * grad[j] * grad[j];
      params[j] -= cfg.lr * (m1[j] / (1.0 - b1t)) / (std::sqrt(m2[j] / (1.0 - b2t)) + eps);
    }
    // beta must stay away from zero; a step across it is undone.
    if (params.back() == 0.0 || std::signbit(params.back()) != std::signbit(model.beta()))
      params.back() = model.beta();
    model.set_parameters(params);
    current = loss.value_and_gradient(model, grad);
    result.steps_run = step;
    if (!std::isfinite(current)) break;
    if (current < result.best_loss) {
      result.best_loss = current;
      result.best_step = step;
      result.model = model;
    } else if (cfg.patience > 0 && step - result.best_step >= cfg.patience) {
      break;
    }
  }
  return result;
}

double ProductFlowDensity::log_pdf(double b) const {
  if (!(b > 0.0)) return kNegInf;
  const double lb = std::log(b);
  return model_.log_pdf(lb) - lb;
}

ProductFitResult fit_nf_product(std::span<const double> data, const NoiseModel& noise,
                                const TrainConfig& cfg) {
  if (data.empty()) throw Error(ErrorKind::InvalidParameter, "dataset is empty");
  std::vector<double> logs(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(data[i] > 0.0)) throw Error(ErrorKind::NonPositiveData, "product mode requires x > 0");
    logs[i] = std::log(data[i]);
  }
  NoiseModel log_noise = log_space_noise(noise);
  FitResult fit = fit_nf(logs, log_noise, cfg);
  ProductFlowDensity density(fit.model);
  return {std::move(density), std::move(fit)};
}

}  // namespace deconv
