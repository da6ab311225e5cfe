#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deconv/methods.hpp"

namespace deconv {

struct NoiseSpec {
  DistKind kind = DistKind::Gaussian;
  double first = 10.0;
  double second = 1.0;

  NoiseModel model() const;
};

struct BenchmarkSettings {
  std::vector<std::size_t> ns{100, 1000};
  std::vector<double> snrs{2.0, 9.0};
  std::vector<std::string> methods{"known", "gmm", "nf"};
  std::size_t seeds = 1;
  double rate = 1.0;
  std::map<std::string, std::string> curves;
};

/// Everything a command needs, with defaults filled in.
struct RunConfig {
  DataModel mode = DataModel::Sum;
  std::size_t n = 1000;
  std::uint64_t seed = 0;
  ThetaB signal{9.0, 1.0};
  NoiseSpec noise;
  MethodSettings methods;
  std::size_t kl_points = kKlGridPoints;
  std::size_t curve_points = 2000;
  BenchmarkSettings benchmark;
};

/// Parses a configuration document. Unknown keys, wrong types and out-of-range
/// values throw ErrorKind::Config naming the offending field.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(const std::string& text);
/// Reads and parses a file; an unreadable file is ErrorKind::Io.
RunConfig load_config(const std::string& path);

/// The fully resolved configuration, in the same schema parse_config accepts.
nlohmann::json to_json(const RunConfig& cfg);

std::string mode_name(DataModel mode);
DataModel parse_mode(const std::string& text);

}  // namespace deconv
