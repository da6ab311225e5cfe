#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deconv/bayes_gmm.hpp"
#include "deconv/bayes_known.hpp"
#include "deconv/dist.hpp"
#include "deconv/eval.hpp"
#include "deconv/train.hpp"

namespace deconv {

struct MethodSettings {
  KnownModelConfig known;
  GmmConfig gmm;
  TrainConfig nf;
};

/// A fitted density over b, evaluated in batches as log-density.
struct DensityCurve {
  std::string name;
  std::function<std::vector<double>(std::span<const double>)> log_density;
};

struct FitOutput {
  std::string method;
  DataModel mode = DataModel::Sum;
  std::vector<DensityCurve> curves;
  nlohmann::json summary;

  /// Throws InvalidParameter for an unknown curve name.
  const DensityCurve& curve(const std::string& name) const;
};

/// Methods: "known" (curves reconstruction, map), "gmm" (reconstruction, map), "nf" (nf).
bool is_method(const std::string& name);
std::string default_curve(const std::string& method);

FitOutput fit_method(const std::string& method, std::span<const double> data,
                     const NoiseModel& noise, DataModel mode, const MethodSettings& settings,
                     std::uint64_t seed);

struct BenchmarkSpec {
  DataModel mode = DataModel::Sum;
  NoiseModel noise = NoiseModel(ScalarDist::gaussian(10.0, 1.0));
  double rate = 1.0;
  std::vector<std::size_t> ns;
  std::vector<double> snrs;
  std::vector<std::string> methods;
  std::size_t seeds = 1;
  std::uint64_t master_seed = 0;
  MethodSettings settings;
  std::map<std::string, std::string> curves;  // per method, defaults to default_curve
  std::size_t kl_points = kKlGridPoints;
};

struct KlReport {
  std::string method;
  std::string curve;
  DataModel mode = DataModel::Sum;
  std::size_t n = 0;
  double snr = 0.0;
  double alpha = 0.0;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  double kl = 0.0;
  bool clamped = false;
  double runtime_s = 0.0;
  std::string error;  // error name and message when the cell failed

  bool ok() const { return error.empty(); }
};

/// Seed of one (N, SNR, replicate) cell; independent of the other cells.
std::uint64_t cell_seed(std::uint64_t master, std::size_t n, double snr, std::size_t replicate);

/// Every (N, SNR, replicate, method) combination, in that nesting order. Failures are
/// recorded in the report instead of thrown. Up to `jobs` fits run concurrently.
std::vector<KlReport> benchmark(const BenchmarkSpec& spec, std::size_t jobs = 1,
                                const std::function<void(const KlReport&)>& progress = {});

/// Median of the values (mean of the middle pair for even counts); NaN when empty.
double median(std::vector<double> values);

}  // namespace deconv
