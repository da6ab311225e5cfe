#include "deconv/methods.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "deconv/error.hpp"
#include "deconv/format.hpp"

namespace deconv {

namespace {

std::vector<double> log_of(std::vector<double> v) {
  for (auto& x : v) x = x > 0.0 ? std::log(x) : kNegInf;
  return v;
}

nlohmann::json grid_json(const QuadGrid& g) {
  return {{"lo", g.lo()}, {"hi", g.hi()}, {"m", g.size()}};
}

nlohmann::json psi_json(const PsiB& psi) {
  return {{"means", psi.means}, {"variances", psi.variances}, {"weights", psi.weights}};
}

FitOutput fit_known(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                    const KnownModelConfig& cfg, std::uint64_t seed) {
  QuadGrid grid = known_model_grid(data, noise, mode, cfg.grid_points, cfg.grid_hi);
  KnownModelPosterior posterior(data, noise, mode, grid, cfg.xi);
  auto chain = std::make_shared<PosteriorChain<ThetaB>>(run_chain(posterior, cfg, seed));
  const ThetaB map = map_density(*chain);

  double mean_a = 0.0, mean_r = 0.0;
  for (const auto& t : chain->samples) {
    mean_a += t.alpha;
    mean_r += t.rate;
  }
  mean_a /= static_cast<double>(chain->size());
  mean_r /= static_cast<double>(chain->size());

  FitOutput out;
  out.method = "known";
  out.mode = mode;
  out.curves.push_back({"reconstruction", [chain](std::span<const double> b) {
                          return log_of(reconstruction_density(*chain, b));
                        }});
  out.curves.push_back({"map", [map](std::span<const double> b) {
                          const ScalarDist d = ScalarDist::gamma(map.alpha, map.rate);
                          std::vector<double> v(b.size());
                          for (std::size_t i = 0; i < b.size(); ++i) v[i] = d.log_pdf(b[i]);
                          return v;
                        }});
  out.summary = {{"samples", chain->size()},
                 {"acceptance_rate", chain->acceptance_rate(0)},
                 {"initial", {{"alpha", chain->samples.front().alpha}, {"rate", chain->samples.front().rate}}},
                 {"map", {{"alpha", map.alpha}, {"rate", map.rate}}},
                 {"map_log_posterior", chain->log_posteriors[chain->map_index]},
                 {"posterior_mean", {{"alpha", mean_a}, {"rate", mean_r}}},
                 {"grid", grid_json(grid)}};
  return out;
}

FitOutput fit_gmm(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                  const GmmConfig& cfg, std::uint64_t seed) {
  GmmPosterior posterior(data, noise, mode, GmmPriorSpec::decaying(cfg.components), cfg.grid_points,
                         cfg.grid_hi);
  auto chain = std::make_shared<PosteriorChain<PsiB>>(run_gmm(posterior, cfg, seed));
  const PsiB map = gmm_map(*chain);

  FitOutput out;
  out.method = "gmm";
  out.mode = mode;
  out.curves.push_back({"reconstruction", [chain, mode](std::span<const double> b) {
                          return log_of(gmm_reconstruction(*chain, b, mode));
                        }});
  out.curves.push_back({"map", [map, mode](std::span<const double> b) {
                          return log_of(gmm_density(map, b, mode));
                        }});
  out.summary = {{"samples", chain->size()},
                 {"acceptance_rate",
                  {{"means", chain->acceptance_rate(0)},
                   {"variances", chain->acceptance_rate(1)},
                   {"weights", chain->acceptance_rate(2)}}},
                 {"map", psi_json(map)},
                 {"map_log_posterior", chain->log_posteriors[chain->map_index]},
                 {"space", mode == DataModel::Sum ? "b" : "log b"}};
  return out;
}

FitOutput fit_flow(std::span<const double> data, const NoiseModel& noise, DataModel mode,
                   const TrainConfig& cfg) {
  FitOutput out;
  out.method = "nf";
  out.mode = mode;
  const auto summarize = [&out](const FitResult& fit) {
    out.summary = {{"initial_loss", fit.initial_loss},
                   {"best_loss", fit.best_loss},
                   {"best_step", fit.best_step},
                   {"steps_run", fit.steps_run},
                   {"grid", grid_json(fit.grid)},
                   {"checkpoint", nlohmann::json::parse(fit.model.to_json())}};
  };
  if (mode == DataModel::Sum) {
    FitResult fit = fit_nf(data, noise, cfg);
    summarize(fit);
    auto model = std::make_shared<FlowModel>(fit.model);
    out.curves.push_back({"nf", [model](std::span<const double> b) {
                            std::vector<double> v(b.size());
                            model->log_pdf(b, v);
                            return v;
                          }});
  } else {
    ProductFitResult fit = fit_nf_product(data, noise, cfg);
    summarize(fit.log_fit);
    out.summary["space"] = "log b";
    auto density = std::make_shared<ProductFlowDensity>(fit.density);
    out.curves.push_back({"nf", [density](std::span<const double> b) {
                            std::vector<double> v(b.size());
                            for (std::size_t i = 0; i < b.size(); ++i) v[i] = density->log_pdf(b[i]);
                            return v;
                          }});
  }
  return out;
}

}  // namespace

const DensityCurve& FitOutput::curve(const std::string& name) const {
  for (const auto& c : curves)
    if (c.name == name) return c;
  throw Error(ErrorKind::InvalidParameter, "method " + method + " has no curve '" + name + "'");
}

bool is_method(const std::string& name) { return name == "known" || name == "gmm" || name == "nf"; }

std::string default_curve(const std::string& method) {
  return method == "nf" ? "nf" : "reconstruction";
}

FitOutput fit_method(const std::string& method, std::span<const double> data,
                     const NoiseModel& noise, DataModel mode, const MethodSettings& settings,
                     std::uint64_t seed) {
  if (data.empty()) throw Error(ErrorKind::InvalidParameter, "dataset is empty");
  if (method == "known") return fit_known(data, noise, mode, settings.known, seed);
  if (method == "gmm") return fit_gmm(data, noise, mode, settings.gmm, seed);
  if (method == "nf") return fit_flow(data, noise, mode, settings.nf);
  throw Error(ErrorKind::Config, "unknown method '" + method + "' (expected known, gmm or nf)");
}

std::uint64_t cell_seed(std::uint64_t master, std::size_t n, double snr, std::size_t replicate) {
  return derive_seed(master, "N=" + std::to_string(n) + ";snr=" + format_double(snr) +
                                 ";replicate=" + std::to_string(replicate));
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

std::vector<KlReport> benchmark(const BenchmarkSpec& spec, std::size_t jobs,
                                const std::function<void(const KlReport&)>& progress) {
  for (const auto& m : spec.methods)
    if (!is_method(m)) throw Error(ErrorKind::Config, "unknown method '" + m + "'");
  if (spec.seeds < 1) throw Error(ErrorKind::Config, "benchmark needs at least one seed per cell");

  std::vector<KlReport> reports;
  for (std::size_t n : spec.ns)
    for (double s : spec.snrs)
      for (std::size_t r = 0; r < spec.seeds; ++r)
        for (const auto& m : spec.methods) {
          KlReport rep;
          rep.method = m;
          auto it = spec.curves.find(m);
          rep.curve = it != spec.curves.end() ? it->second : default_curve(m);
          rep.mode = spec.mode;
          rep.n = n;
          rep.snr = s;
          rep.replicate = r;
          rep.seed = cell_seed(spec.master_seed, n, s, r);
          reports.push_back(std::move(rep));
        }

  std::mutex progress_mutex;
  const auto run_one = [&](KlReport& rep) {
    const auto start = std::chrono::steady_clock::now();
    try {
      rep.alpha = alpha_for_snr(rep.snr, spec.mode, spec.noise, spec.rate);
      const ThetaB gt{rep.alpha, spec.rate};
      Scenario scenario{spec.mode, gt, spec.noise, rep.n, derive_seed(rep.seed, "data")};
      const auto data = generate(scenario);
      FitOutput fit = fit_method(rep.method, data, spec.noise, spec.mode, spec.settings,
                                 derive_seed(rep.seed, rep.method));
      const QuadGrid grid = kl_grid(gt, spec.kl_points);
      const auto q = fit.curve(rep.curve).log_density(grid.points());
      KlResult kl = kl_to_ground_truth(gt, q, grid);
      rep.kl = kl.kl;
      rep.clamped = kl.clamped;
    } catch (const Error& e) {
      rep.error = e.what();
    } catch (const std::exception& e) {
      rep.error = std::string("InternalError: ") + e.what();
    }
    rep.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!rep.ok()) rep.kl = std::numeric_limits<double>::quiet_NaN();
    if (progress) {
      std::lock_guard<std::mutex> lock(progress_mutex);
      progress(rep);
    }
  };

  jobs = std::max<std::size_t>(1, std::min(jobs, reports.size()));
  if (jobs == 1) {
    for (auto& rep : reports) run_one(rep);
    return reports;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < jobs; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < reports.size(); i = next++) run_one(reports[i]);
    });
  for (auto& th : pool) th.join();
  return reports;
}

}  // namespace deconv
