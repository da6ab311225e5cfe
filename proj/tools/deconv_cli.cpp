#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "deconv/deconv.h"

int main(int argc, char** argv) {
  CLI::App app{"Density deconvolution toolkit"};
  app.set_version_flag("--version", std::string(dcv_version()));
  app.require_subcommand(1);
  app.fallthrough();

  std::string config, out = ".", method, data, density, curve;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool timing = false;
  app.add_option("--config", config, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "Master seed (overrides the config)");
  app.add_option("--jobs", jobs, "Concurrent benchmark fits")->check(CLI::PositiveNumber);
  app.add_option("--out", out, "Output directory");
  app.add_flag("--timing", timing, "Record wall-clock runtimes and timestamps (breaks byte-identical reruns)");

  auto* gen = app.add_subcommand("generate", "Draw a synthetic dataset");
  auto* fit = app.add_subcommand("fit", "Fit a density to a dataset");
  fit->add_option("--method", method, "known, gmm or nf")->required();
  fit->add_option("--data", data, "CSV file with an x column")->required();
  auto* eval = app.add_subcommand("eval", "KL divergence of fitted curves to the ground truth");
  eval->add_option("--density", density, "density.csv written by fit")->required();
  eval->add_option("--curve", curve, "Curve to score (default: all)");
  auto* bench = app.add_subcommand("benchmark", "KL grid over N, SNR, seeds and methods");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return DCV_ERR_CONFIG;
  }

  dcv_cmd_options opts{};
  opts.config_path = config.empty() ? nullptr : config.c_str();
  opts.out_dir = out.c_str();
  opts.method = method.c_str();
  opts.data_path = data.c_str();
  opts.density_path = density.c_str();
  opts.curve = curve.empty() ? nullptr : curve.c_str();
  opts.seed = seed;
  opts.has_seed = seed_opt->count() > 0;
  opts.jobs = jobs;
  opts.timing = timing ? 1 : 0;

  dcv_status status = DCV_ERR_ARGUMENT;
  if (*gen) status = dcv_cmd_generate(&opts);
  else if (*fit) status = dcv_cmd_fit(&opts);
  else if (*eval) status = dcv_cmd_eval(&opts);
  else if (*bench) status = dcv_cmd_benchmark(&opts);

  if (status != DCV_OK) std::cerr << "deconv: " << dcv_last_error() << '\n';
  return static_cast<int>(status);
}
