#include "deconv/deconv.h"

#include <cstring>
#include <exception>
#include <memory>
#include <string>
#include <vector>

#include "deconv/commands.hpp"
#include "deconv/config.hpp"
#include "deconv/error.hpp"
#include "deconv/eval.hpp"
#include "deconv/methods.hpp"

struct dcv_noise {
  deconv::NoiseModel model;
};

struct dcv_fit {
  deconv::FitOutput output;
  std::string summary;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_error_name;

void set_error(const std::string& name, const std::string& message) {
  g_last_error_name = name;
  g_last_error = message;
}

void clear_error() {
  g_last_error.clear();
  g_last_error_name.clear();
}

/// Runs fn, translating exceptions into status codes and the thread's last error.
template <class Fn>
dcv_status guarded(Fn&& fn) {
  try {
    clear_error();
    fn();
    return DCV_OK;
  } catch (const deconv::Error& e) {
    set_error(std::string(deconv::error_name(e.kind())), e.what());
    return static_cast<dcv_status>(deconv::exit_code(e.kind()));
  } catch (const std::bad_alloc&) {
    set_error("OutOfMemory", "out of memory");
    return DCV_ERR_NUMERICAL;
  } catch (const std::exception& e) {
    set_error("InternalError", e.what());
    return DCV_ERR_ARGUMENT;
  }
}

dcv_status null_argument(const char* what) {
  set_error("InvalidArgument", std::string(what) + " must not be null");
  return DCV_ERR_ARGUMENT;
}

deconv::DataModel to_mode(dcv_mode mode) {
  if (mode == DCV_MODE_SUM) return deconv::DataModel::Sum;
  if (mode == DCV_MODE_PRODUCT) return deconv::DataModel::Product;
  throw deconv::Error(deconv::ErrorKind::InvalidParameter, "unknown data model");
}

deconv::CommandOptions to_options(const dcv_cmd_options* o) {
  deconv::CommandOptions opts;
  if (o->config_path) opts.config_path = o->config_path;
  if (o->out_dir) opts.out_dir = o->out_dir;
  if (o->method) opts.method = o->method;
  if (o->data_path) opts.data_path = o->data_path;
  if (o->density_path) opts.density_path = o->density_path;
  if (o->curve) opts.curve = o->curve;
  if (o->has_seed) opts.seed = o->seed;
  opts.jobs = o->jobs == 0 ? 1 : o->jobs;
  opts.timing = o->timing != 0;
  return opts;
}

template <class Cmd>
dcv_status run_command(const dcv_cmd_options* opts, Cmd cmd) {
  if (!opts) return null_argument("opts");
  return guarded([&] { cmd(to_options(opts)); });
}

}  // namespace

extern "C" {

const char* dcv_version(void) { return DECONV_VERSION; }

const char* dcv_last_error(void) { return g_last_error.c_str(); }

const char* dcv_last_error_name(void) { return g_last_error_name.c_str(); }

dcv_status dcv_noise_create(dcv_noise_kind kind, double p1, double p2, dcv_noise** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    deconv::ScalarDist dist = [&] {
      switch (kind) {
        case DCV_NOISE_GAUSSIAN: return deconv::ScalarDist::gaussian(p1, p2);
        case DCV_NOISE_GAMMA: return deconv::ScalarDist::gamma(p1, p2);
        case DCV_NOISE_LOG_GAUSSIAN: return deconv::ScalarDist::log_gaussian(p1, p2);
      }
      throw deconv::Error(deconv::ErrorKind::InvalidParameter, "unknown noise kind");
    }();
    *out = new dcv_noise{deconv::NoiseModel(dist)};
  });
}

void dcv_noise_destroy(dcv_noise* noise) { delete noise; }

dcv_status dcv_noise_log_pdf(const dcv_noise* noise, double a, double* out) {
  if (!noise) return null_argument("noise");
  if (!out) return null_argument("out");
  return guarded([&] { *out = noise->model.log_pdf(a); });
}

dcv_status dcv_generate(dcv_mode mode, double shape, double rate, const dcv_noise* noise, size_t n,
                        uint64_t seed, double* out) {
  if (!noise) return null_argument("noise");
  if (!out && n > 0) return null_argument("out");
  return guarded([&] {
    deconv::Scenario s{to_mode(mode), {shape, rate}, noise->model, n, seed};
    const auto x = deconv::generate(s);
    std::memcpy(out, x.data(), x.size() * sizeof(double));
  });
}

dcv_status dcv_snr(dcv_mode mode, double shape, double rate, const dcv_noise* noise, double* out) {
  if (!noise) return null_argument("noise");
  if (!out) return null_argument("out");
  return guarded([&] { *out = deconv::snr(to_mode(mode), {shape, rate}, noise->model); });
}

dcv_status dcv_alpha_for_snr(double target, dcv_mode mode, const dcv_noise* noise, double rate,
                             double* out) {
  if (!noise) return null_argument("noise");
  if (!out) return null_argument("out");
  return guarded([&] { *out = deconv::alpha_for_snr(target, to_mode(mode), noise->model, rate); });
}

dcv_status dcv_fit_create(const char* method, const char* config_json, const double* data, size_t n,
                          const dcv_noise* noise, dcv_mode mode, uint64_t seed, dcv_fit** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!method) return null_argument("method");
  if (!noise) return null_argument("noise");
  if (!data && n > 0) return null_argument("data");
  return guarded([&] {
    deconv::RunConfig cfg = config_json ? deconv::parse_config_text(config_json)
                                        : deconv::parse_config(nlohmann::json::object());
    std::vector<double> x(data, data + n);
    auto fit = std::make_unique<dcv_fit>();
    fit->output = deconv::fit_method(method, x, noise->model, to_mode(mode), cfg.methods, seed);
    fit->summary = fit->output.summary.dump();
    *out = fit.release();
  });
}

void dcv_fit_destroy(dcv_fit* fit) { delete fit; }

size_t dcv_fit_curve_count(const dcv_fit* fit) { return fit ? fit->output.curves.size() : 0; }

const char* dcv_fit_curve_name(const dcv_fit* fit, size_t index) {
  if (!fit || index >= fit->output.curves.size()) return nullptr;
  return fit->output.curves[index].name.c_str();
}

dcv_status dcv_fit_log_density(const dcv_fit* fit, const char* curve, const double* b, size_t n,
                               double* out) {
  if (!fit) return null_argument("fit");
  if (!curve) return null_argument("curve");
  if ((!b || !out) && n > 0) return null_argument("b/out");
  return guarded([&] {
    const auto v = fit->output.curve(curve).log_density(std::span<const double>(b, n));
    std::memcpy(out, v.data(), n * sizeof(double));
  });
}

const char* dcv_fit_summary(const dcv_fit* fit) { return fit ? fit->summary.c_str() : nullptr; }

dcv_status dcv_fit_kl_gamma(const dcv_fit* fit, const char* curve, double shape, double rate,
                            size_t m, double* kl, int* clamped) {
  if (!fit) return null_argument("fit");
  if (!curve) return null_argument("curve");
  if (!kl) return null_argument("kl");
  return guarded([&] {
    const deconv::ThetaB gt{shape, rate};
    const deconv::QuadGrid grid = deconv::kl_grid(gt, m);
    const auto q = fit->output.curve(curve).log_density(grid.points());
    const auto res = deconv::kl_to_ground_truth(gt, q, grid);
    *kl = res.kl;
    if (clamped) *clamped = res.clamped ? 1 : 0;
  });
}

dcv_status dcv_cmd_generate(const dcv_cmd_options* opts) { return run_command(opts, deconv::cmd_generate); }
dcv_status dcv_cmd_fit(const dcv_cmd_options* opts) { return run_command(opts, deconv::cmd_fit); }
dcv_status dcv_cmd_eval(const dcv_cmd_options* opts) { return run_command(opts, deconv::cmd_eval); }
dcv_status dcv_cmd_benchmark(const dcv_cmd_options* opts) { return run_command(opts, deconv::cmd_benchmark); }

}  // extern "C"
