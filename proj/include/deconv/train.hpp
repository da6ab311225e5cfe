#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "deconv/dist.hpp"
#include "deconv/flow.hpp"
#include "deconv/quad.hpp"

namespace deconv {

struct TrainConfig {
  std::size_t steps = 3000;
  double lr = 1e-3;
  std::size_t m = kNfGridPoints;
  std::uint64_t seed = 0;  // full-batch training draws nothing; kept for provenance
  std::size_t patience = 0;  // stop after this many steps without improvement; 0 disables
  FlowConfig flow;

  void validate() const;
};

struct AffineHead {
  double alpha;
  double beta;
};

/// alpha = mean(x) - <a>, beta = sqrt(Var(x) max(1 - var_a / Var(x), 1/16)), population variance.
AffineHead init_head(std::span<const double> data, const NoiseModel& noise);

/// Reference loss: -(1/N) sum_n lse_m(log db + log q(b_m) + log p_A(x_n - b_m)).
double nf_loss(const FlowModel& model, std::span<const double> data, const NoiseModel& noise,
               const QuadGrid& grid);

/// Loss and gradient over a fixed dataset, backed by a ConvolutionKernel.
class NfLoss {
public:
  NfLoss(std::span<const double> data, const NoiseModel& noise, const QuadGrid& grid);

  double value(const FlowModel& model) const;
  /// grad receives d loss / d model.parameters().
  double value_and_gradient(const FlowModel& model, std::span<double> grad) const;
  const QuadGrid& grid() const { return kernel_.grid(); }

private:
  ConvolutionKernel kernel_;
  double inv_n_;
};

struct FitResult {
  FlowModel model;
  QuadGrid grid;
  double initial_loss;
  double best_loss;
  std::size_t best_step;  // 0 is the initial model
  std::size_t steps_run;
};

/// Adaptive-moment full-batch training from identity layers and init_head; returns
/// the lowest-loss parameters seen.
FitResult fit_nf(std::span<const double> data, const NoiseModel& noise, const TrainConfig& cfg = {});

/// Density over b from a flow trained on log b.
class ProductFlowDensity {
public:
  explicit ProductFlowDensity(FlowModel log_model) : model_(std::move(log_model)) {}
  double log_pdf(double b) const;
  const FlowModel& log_model() const { return model_; }

private:
  FlowModel model_;
};

struct ProductFitResult {
  ProductFlowDensity density;
  FitResult log_fit;
};

/// Trains on log x against the log-space noise and maps back with the 1/b Jacobian.
ProductFitResult fit_nf_product(std::span<const double> data, const NoiseModel& noise,
                                const TrainConfig& cfg = {});

}  // namespace deconv
