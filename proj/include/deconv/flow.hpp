#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace deconv {

struct FlowConfig {
  std::size_t layers = 4;
  std::size_t bins = 8;
  double tail_bound = 4.0;
  double min_bin_width = 1e-3;
  double min_bin_height = 1e-3;
  double min_derivative = 1e-3;

  /// Throws InvalidParameter on empty layers, fewer than 2 bins, non-positive bound
  /// or minima that leave no room for the bins.
  void validate() const;
};

/// Unconstrained parameters of one monotone rational-quadratic spline on [-B, B].
struct SplineLayer {
  std::vector<double> widths;   // K, softmax
  std::vector<double> heights;  // K, softmax
  std::vector<double> derivs;   // K-1 interior knots, min + softplus
};

struct FlowPoint {
  double value;
  double log_det;
};

/// Elementwise spline layers followed by the affine head b = alpha + beta y, pushing
/// forward a standard Gaussian.
class FlowModel {
public:
  explicit FlowModel(FlowConfig config = {}, double alpha = 0.0, double beta = 1.0);

  const FlowConfig& config() const { return config_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  void set_head(double alpha, double beta);

  const std::vector<SplineLayer>& layers() const { return layers_; }
  std::vector<SplineLayer>& layers() { return layers_; }

  /// Resets every spline layer to the identity map.
  void reset_layers();

  /// Flat layout: per layer [widths, heights, derivs], then alpha, beta.
  std::size_t parameter_count() const;
  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> params);

  FlowPoint forward(double z) const;
  FlowPoint inverse(double b) const;
  double log_pdf(double b) const;
  void log_pdf(std::span<const double> b, std::span<double> out) const;

  /// Writes d/d(parameters) of sum_j w_j log_pdf(b_j) into grad (parameter_count()
  /// entries) and returns the weighted sum. Empty `weights` means all ones.
  double log_pdf_gradient(std::span<const double> b, std::span<const double> weights,
                          std::span<double> grad) const;

  /// Versioned JSON checkpoint; floating-point values round-trip exactly.
  std::string to_json() const;
  static FlowModel from_json(const std::string& text);

private:
  FlowConfig config_;
  std::vector<SplineLayer> layers_;
  double alpha_;
  double beta_;
};

/// d/d(parameters) of sum_j log_pdf(b_j).
std::vector<double> grad_log_pdf(const FlowModel& model, std::span<const double> b);

}  // namespace deconv
