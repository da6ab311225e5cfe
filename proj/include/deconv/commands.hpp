#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "deconv/config.hpp"

namespace deconv {

struct CommandOptions {
  std::string config_path;  // empty: defaults
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string out_dir = ".";
  std::string method;        // fit
  std::string data_path;     // fit
  std::string density_path;  // eval
  std::string curve;         // eval; empty evaluates every curve in the file
  bool timing = false;       // record wall-clock runtimes and timestamps
};

/// Writes <out>/data.csv and <out>/manifest.json.
void cmd_generate(const CommandOptions& opts);
/// Writes <out>/density.csv, <out>/params.json (and flow.json for nf), <out>/manifest.json.
void cmd_fit(const CommandOptions& opts);
/// Writes <out>/kl_report.json and <out>/manifest.json.
void cmd_eval(const CommandOptions& opts);
/// Writes benchmark.csv, benchmark.json, pivot_<method>.csv and manifest.json under <out>.
/// Throws Numerical when every cell failed.
void cmd_benchmark(const CommandOptions& opts);

/// Reads the "x" column of a CSV file.
std::vector<double> read_data_csv(const std::string& path);

/// Equally spaced b abscissae on which fitted curves are written.
std::vector<double> curve_points(std::span<const double> data, const NoiseModel& noise,
                                 DataModel mode, std::size_t m);

}  // namespace deconv
