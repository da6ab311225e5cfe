#include "deconv/quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "deconv/error.hpp"

namespace deconv {

namespace {

// Scaled row sums below this are recomputed in log space.
constexpr double kRowFloor = 1e-250;

void require_nonempty(std::span<const double> data) {
  if (data.empty()) throw Error(ErrorKind::InvalidParameter, "dataset is empty");
}

void require_positive(std::span<const double> data) {
  for (double x : data)
    if (!(x > 0.0))
      throw Error(ErrorKind::NonPositiveData,
                  "product mode requires x > 0, got " + std::to_string(x));
}

double noise_log_term(const NoiseModel& noise, DataModel mode, double x, double point) {
  if (mode == DataModel::Sum) return noise.log_pdf(x - point);
  return noise.log_pdf(x * std::exp(-point));
}

}  // namespace

QuadGrid::QuadGrid(double lo, double hi, std::size_t m) : lo_(lo), hi_(hi), m_(m) {
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(hi > lo))
    throw Error(ErrorKind::DegenerateRange,
                "grid range [" + std::to_string(lo) + ", " + std::to_string(hi) + "] is empty");
  if (m < 2) throw Error(ErrorKind::InvalidParameter, "grid needs at least 2 points");
  spacing_ = (hi - lo) / static_cast<double>(m - 1);
}

std::vector<double> QuadGrid::points() const {
  std::vector<double> p(m_);
  for (std::size_t i = 0; i < m_; ++i) p[i] = (*this)[i];
  return p;
}

QuadGrid build_grid(double lo, double hi, std::size_t m) { return QuadGrid(lo, hi, m); }

QuadGrid known_model_grid(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                          std::size_t m, std::optional<double> hi_override) {
  require_nonempty(data);
  if (mode == DataModel::Sum) {
    double hi = *std::max_element(data.begin(), data.end()) - noise.mean() / 2.0;
    return build_grid(kKnownModelGridStart, hi_override.value_or(hi), m);
  }
  require_positive(data);
  NoiseModel log_noise = log_space_noise(noise);
  auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  double sd = log_noise.stddev();
  double lo = std::log(*lo_it) - log_noise.mean() - 3.0 * sd;
  double hi = std::log(*hi_it) + 3.0 * sd;
  return build_grid(lo, hi_override.value_or(hi), m);
}

QuadGrid nf_grid(std::span<const double> data, const NoiseModel& noise, std::size_t m) {
  require_nonempty(data);
  auto [lo_it, hi_it] = std::minmax_element(data.begin(), data.end());
  double sd = noise.stddev();
  return build_grid(*lo_it - noise.mean() - 3.0 * sd, *hi_it - noise.mean() + 3.0 * sd, m);
}

double conv_log_likelihood(double x, const NoiseModel& noise,
                           const std::function<double(double)>& signal_log_pdf,
                           const QuadGrid& grid, DataModel mode, SignalSpace space) {
  if (mode == DataModel::Product) {
    if (!(x > 0.0)) throw Error(ErrorKind::NonPositiveData, "product mode requires x > 0");
    if (noise.log_space())
      throw Error(ErrorKind::InvalidParameter, "product mode expects the noise over a, not log a");
  } else if (space == SignalSpace::Log) {
    throw Error(ErrorKind::InvalidParameter, "log-space signals are only defined in product mode");
  }

  const double log_spacing = std::log(grid.spacing());
  std::vector<double> terms(grid.size());
  for (std::size_t m = 0; m < grid.size(); ++m) {
    double p = grid[m];
    double signal;
    if (mode == DataModel::Sum) {
      signal = signal_log_pdf(p);
    } else if (space == SignalSpace::Linear) {
      signal = signal_log_pdf(std::exp(p));
    } else {
      signal = signal_log_pdf(p) - p;
    }
    double t = log_spacing + noise_log_term(noise, mode, x, p) + signal;
    terms[m] = std::isnan(t) ? kNegInf : t;
  }
  return log_sum_exp(terms);
}

ConvolutionKernel::ConvolutionKernel(std::span<const double> data, const NoiseModel& noise,
                                     QuadGrid grid, DataModel mode, SignalSpace space)
    : data_(data.begin(), data.end()), noise_(noise), grid_(grid), mode_(mode), space_(space) {
  if (mode == DataModel::Product) {
    require_positive(data);
    if (noise.log_space())
      throw Error(ErrorKind::InvalidParameter, "product mode expects the noise over a, not log a");
  } else if (space == SignalSpace::Log) {
    throw Error(ErrorKind::InvalidParameter, "log-space signals are only defined in product mode");
  }

  const std::size_t n_data = data_.size();
  const std::size_t m_grid = grid_.size();
  signal_points_.resize(m_grid);
  jacobian_.assign(m_grid, 0.0);
  for (std::size_t m = 0; m < m_grid; ++m) {
    double p = grid_[m];
    if (mode_ == DataModel::Sum) {
      signal_points_[m] = p;
    } else if (space_ == SignalSpace::Linear) {
      signal_points_[m] = std::exp(p);
    } else {
      signal_points_[m] = p;
      jacobian_[m] = -p;
    }
  }

  kernel_.resize(static_cast<Eigen::Index>(n_data), static_cast<Eigen::Index>(m_grid));
  row_offset_.resize(static_cast<Eigen::Index>(n_data));
  const double log_spacing = std::log(grid_.spacing());
  std::vector<double> row(m_grid);
  for (std::size_t n = 0; n < n_data; ++n) {
    double hi = kNegInf;
    for (std::size_t m = 0; m < m_grid; ++m) {
      row[m] = noise_log_term(noise_, mode_, data_[n], grid_[m]);
      if (std::isnan(row[m])) row[m] = kNegInf;
      hi = std::max(hi, row[m]);
    }
    auto r = static_cast<Eigen::Index>(n);
    row_offset_[r] = hi + log_spacing;
    for (std::size_t m = 0; m < m_grid; ++m)
      kernel_(r, static_cast<Eigen::Index>(m)) = hi == kNegInf ? 0.0 : std::exp(row[m] - hi);
  }
}

double ConvolutionKernel::row_log_term(std::size_t n, std::size_t m) const {
  double t = noise_log_term(noise_, mode_, data_[n], grid_[m]);
  return std::isnan(t) ? kNegInf : t;
}

void ConvolutionKernel::evaluate(std::span<const double> signal, std::span<double> per_datum,
                                 std::span<double> grad) const {
  const std::size_t m_grid = grid_.size();
  const std::size_t n_data = data_.size();
  if (signal.size() != m_grid)
    throw Error(ErrorKind::InvalidParameter, "signal values must match the grid size");

  Eigen::VectorXd f(static_cast<Eigen::Index>(m_grid));
  double fmax = kNegInf;
  for (std::size_t m = 0; m < m_grid; ++m) {
    double v = signal[m] + jacobian_[m];
    if (std::isnan(v)) v = kNegInf;
    f[static_cast<Eigen::Index>(m)] = v;
    fmax = std::max(fmax, v);
  }
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  if (fmax == kNegInf) {
    std::fill(per_datum.begin(), per_datum.end(), kNegInf);
    return;
  }

  Eigen::VectorXd e = (f.array() - fmax).exp().matrix();
  Eigen::VectorXd sums = kernel_ * e;

  Eigen::VectorXd inv(static_cast<Eigen::Index>(n_data));
  std::vector<std::size_t> fallback;
  for (std::size_t n = 0; n < n_data; ++n) {
    auto r = static_cast<Eigen::Index>(n);
    double s = sums[r];
    if (row_offset_[r] == kNegInf) {
      per_datum[n] = kNegInf;
      inv[r] = 0.0;
    } else if (s > kRowFloor) {
      per_datum[n] = std::log(s) + fmax + row_offset_[r];
      inv[r] = 1.0 / s;
    } else {
      inv[r] = 0.0;
      fallback.push_back(n);
    }
  }

  if (!grad.empty()) {
    Eigen::VectorXd back = kernel_.transpose() * inv;
    for (std::size_t m = 0; m < m_grid; ++m)
      grad[m] = e[static_cast<Eigen::Index>(m)] * back[static_cast<Eigen::Index>(m)];
  }

  if (fallback.empty()) return;
  const double log_spacing = std::log(grid_.spacing());
  std::vector<double> terms(m_grid);
  for (std::size_t n : fallback) {
    for (std::size_t m = 0; m < m_grid; ++m)
      terms[m] = row_log_term(n, m) + f[static_cast<Eigen::Index>(m)] + log_spacing;
    double total = log_sum_exp(terms);
    per_datum[n] = total;
    if (!grad.empty() && total != kNegInf)
      for (std::size_t m = 0; m < m_grid; ++m) grad[m] += std::exp(terms[m] - total);
  }
}

double ConvolutionKernel::log_likelihood(std::span<const double> signal) const {
  std::vector<double> per(data_.size());
  evaluate(signal, per, {});
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc;
}

double ConvolutionKernel::log_likelihood(std::span<const double> signal, std::span<double> grad) const {
  if (grad.size() != grid_.size())
    throw Error(ErrorKind::InvalidParameter, "gradient buffer must match the grid size");
  std::vector<double> per(data_.size());
  evaluate(signal, per, grad);
  double acc = 0.0;
  for (double v : per) acc += v;
  return acc;
}

void ConvolutionKernel::per_datum(std::span<const double> signal, std::span<double> out) const {
  if (out.size() != data_.size())
    throw Error(ErrorKind::InvalidParameter, "output buffer must match the dataset size");
  evaluate(signal, out, {});
}

}  // namespace deconv
