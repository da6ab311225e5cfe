#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "deconv/dist.hpp"

namespace deconv {

/// Observation model: x = a + b or x = a * b.
enum class DataModel { Sum, Product };

/// Equally spaced, endpoint-inclusive abscissae.
class QuadGrid {
public:
  QuadGrid(double lo, double hi, std::size_t m);

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  std::size_t size() const { return m_; }
  double spacing() const { return spacing_; }
  double operator[](std::size_t i) const { return i + 1 == m_ ? hi_ : lo_ + spacing_ * static_cast<double>(i); }
  std::vector<double> points() const;

private:
  double lo_;
  double hi_;
  std::size_t m_;
  double spacing_;
};

/// Throws DegenerateRange when hi <= lo (or either bound is not finite), and
/// InvalidParameter when m < 2.
QuadGrid build_grid(double lo, double hi, std::size_t m);

inline constexpr std::size_t kMcmcGridPoints = 20000;
inline constexpr std::size_t kNfGridPoints = 2000;
inline constexpr double kKnownModelGridStart = 0.001;

/// Integration grid of the Bayesian samplers. Sum: b in [0.001, max x - mu_A/2].
/// Product: log b in [min log x - <log a> - 3 sd, max log x + 3 sd] using
/// sampled log-space noise moments. `hi_override` replaces the computed upper bound.
QuadGrid known_model_grid(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                          std::size_t m = kMcmcGridPoints,
                          std::optional<double> hi_override = std::nullopt);

/// Flow-training grid: [min x - <a> - 3 sd_a, max x - <a> + 3 sd_a]. For product
/// data pass log-transformed data and the log-space noise model.
QuadGrid nf_grid(std::span<const double> data, const NoiseModel& noise,
                 std::size_t m = kNfGridPoints);

/// Whether a signal log-density is expressed over b or over log b. Log is only
/// meaningful in product mode.
enum class SignalSpace { Linear, Log };

/// log p(x) by the rectangle rule, accumulated with log-sum-exp.
/// Sum: the grid is over b, integrand p_A(x - b) p_B(b).
/// Product: the grid is over phi = log b. With SignalSpace::Linear, signal_log_pdf
/// is a density over b (called with e^phi) and the integrand is p_A(x e^-phi) p_B(e^phi);
/// with SignalSpace::Log it is a density over log b (called with phi) and the
/// integrand is p_A(x e^-phi) e^-phi p(phi). Returns -inf when every term underflows.
double conv_log_likelihood(double x, const NoiseModel& noise,
                           const std::function<double(double)>& signal_log_pdf,
                           const QuadGrid& grid, DataModel mode,
                           SignalSpace space = SignalSpace::Linear);

/// Precomputed rectangle-rule convolution for a fixed dataset and grid.
///
/// Stores K[n, m] = exp(log p_A(.) - rowmax_n) so the dataset log-likelihood of a
/// signal reduces to one matrix-vector product. Rows whose scaled sum falls below
/// the double range are recomputed with log-sum-exp from the noise model, so results
/// agree with conv_log_likelihood to rounding.
class ConvolutionKernel {
public:
  ConvolutionKernel(std::span<const double> data, const NoiseModel& noise, QuadGrid grid,
                    DataModel mode, SignalSpace space = SignalSpace::Linear);

  std::size_t data_size() const { return data_.size(); }
  const QuadGrid& grid() const { return grid_; }
  DataModel mode() const { return mode_; }
  SignalSpace space() const { return space_; }
  std::span<const double> data() const { return data_; }

  /// Points at which callers evaluate the signal log-density: b_m (sum),
  /// e^phi_m (product, linear) or phi_m (product, log).
  const std::vector<double>& signal_points() const { return signal_points_; }

  /// Sum over data of log p(x_n), given the signal log-density at signal_points().
  double log_likelihood(std::span<const double> signal_log_density) const;

  /// As above, also writing d/d(signal_log_density[m]) into grad.
  double log_likelihood(std::span<const double> signal_log_density, std::span<double> grad) const;

  /// Per-datum log p(x_n).
  void per_datum(std::span<const double> signal_log_density, std::span<double> out) const;

private:
  double row_log_term(std::size_t n, std::size_t m) const;
  void evaluate(std::span<const double> signal_log_density, std::span<double> per_datum,
                std::span<double> grad) const;

  std::vector<double> data_;
  NoiseModel noise_;
  QuadGrid grid_;
  DataModel mode_;
  SignalSpace space_;
  std::vector<double> signal_points_;
  std::vector<double> jacobian_;  // additive log-Jacobian per grid point
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> kernel_;
  Eigen::VectorXd row_offset_;  // rowmax_n + log spacing
};

}  // namespace deconv
