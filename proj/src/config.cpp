#include "deconv/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "deconv/error.hpp"

namespace deconv {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::Config, field + ": " + what);
}

/// One JSON object; tracks which keys were read so leftovers can be rejected.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "config" : path_, "expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* find(const std::string& key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void read(const std::string& key, std::size_t& dst, std::size_t min = 0) {
    if (const json* v = find(key)) dst = as_size(*v, field(key), min);
  }

  void read_u64(const std::string& key, std::uint64_t& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned()) fail(field(key), "expected a non-negative integer");
      dst = v->get<std::uint64_t>();
    }
  }

  void read_positive(const std::string& key, double& dst) {
    if (const json* v = find(key)) {
      dst = as_double(*v, field(key));
      if (!(dst > 0.0)) fail(field(key), "must be > 0");
    }
  }

  void read(const std::string& key, double& dst) {
    if (const json* v = find(key)) dst = as_double(*v, field(key));
  }

  void read(const std::string& key, bool& dst) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(field(key), "expected true or false");
      dst = v->get<bool>();
    }
  }

  void read(const std::string& key, std::string& dst) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(field(key), "expected a string");
      dst = v->get<std::string>();
    }
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) fail(field(item.key()), "unknown key");
  }

  static std::size_t as_size(const json& v, const std::string& field, std::size_t min) {
    if (!v.is_number_unsigned()) fail(field, "expected a non-negative integer");
    auto n = v.get<std::uint64_t>();
    if (n < min) fail(field, "must be >= " + std::to_string(min));
    return static_cast<std::size_t>(n);
  }

  static double as_double(const json& v, const std::string& field) {
    if (!v.is_number()) fail(field, "expected a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(field, "must be finite");
    return d;
  }

private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

NoiseSpec parse_noise(const json& j) {
  Section s(j, "noise");
  std::string kind = "gaussian";
  s.read("kind", kind);
  NoiseSpec spec;
  if (kind == "gaussian") {
    spec = {DistKind::Gaussian, 10.0, 1.0};
    s.read("mean", spec.first);
    s.read_positive("variance", spec.second);
  } else if (kind == "gamma") {
    spec = {DistKind::Gamma, 9.0, 1.0};
    s.read_positive("shape", spec.first);
    s.read_positive("rate", spec.second);
  } else if (kind == "log_gaussian") {
    spec = {DistKind::LogGaussian, 0.0, 1.0};
    s.read("log_mean", spec.first);
    s.read_positive("log_variance", spec.second);
  } else {
    fail("noise.kind", "expected \"gaussian\", \"gamma\" or \"log_gaussian\", got \"" + kind + "\"");
  }
  s.finish();
  return spec;
}

json noise_json(const NoiseSpec& n) {
  switch (n.kind) {
    case DistKind::Gaussian: return {{"kind", "gaussian"}, {"mean", n.first}, {"variance", n.second}};
    case DistKind::Gamma: return {{"kind", "gamma"}, {"shape", n.first}, {"rate", n.second}};
    case DistKind::LogGaussian:
      return {{"kind", "log_gaussian"}, {"log_mean", n.first}, {"log_variance", n.second}};
  }
  return {};
}

void check_curve(const std::string& field, const std::string& method, const std::string& curve) {
  const bool ok = method == "nf" ? curve == "nf" : (curve == "reconstruction" || curve == "map");
  if (!ok) fail(field, "method " + method + " has no curve \"" + curve + "\"");
}

}  // namespace

NoiseModel NoiseSpec::model() const {
  switch (kind) {
    case DistKind::Gaussian: return NoiseModel(ScalarDist::gaussian(first, second));
    case DistKind::Gamma: return NoiseModel(ScalarDist::gamma(first, second));
    case DistKind::LogGaussian: return NoiseModel(ScalarDist::log_gaussian(first, second));
  }
  throw Error(ErrorKind::Config, "noise.kind: unsupported");
}

std::string mode_name(DataModel mode) { return mode == DataModel::Sum ? "sum" : "product"; }

DataModel parse_mode(const std::string& text) {
  if (text == "sum") return DataModel::Sum;
  if (text == "product") return DataModel::Product;
  fail("mode", "expected \"sum\" or \"product\", got \"" + text + "\"");
}

RunConfig parse_config(const json& doc) {
  RunConfig cfg;
  Section top(doc, "");

  std::string mode = "sum";
  top.read("mode", mode);
  cfg.mode = parse_mode(mode);
  top.read("n", cfg.n, 1);
  top.read_u64("seed", cfg.seed);

  if (const json* j = top.find("signal")) {
    Section s(*j, "signal");
    s.read_positive("shape", cfg.signal.alpha);
    s.read_positive("rate", cfg.signal.rate);
    s.finish();
  }
  if (const json* j = top.find("noise")) cfg.noise = parse_noise(*j);

  auto& known = cfg.methods.known;
  auto& gmm = cfg.methods.gmm;
  auto& nf = cfg.methods.nf;

  std::optional<std::size_t> quad_m_nf;
  if (const json* j = top.find("quad")) {
    Section s(*j, "quad");
    std::size_t m_mcmc = known.grid_points;
    s.read("m_mcmc", m_mcmc, 2);
    known.grid_points = gmm.grid_points = m_mcmc;
    if (s.has("m_nf")) {
      std::size_t v = 0;
      s.read("m_nf", v, 2);
      quad_m_nf = v;
      nf.m = v;
    }
    s.read("m_kl", cfg.kl_points, 2);
    s.read("curve_points", cfg.curve_points, 2);
    if (const json* v = s.find("grid_hi")) {
      if (!v->is_null()) {
        double hi = Section::as_double(*v, "quad.grid_hi");
        known.grid_hi = gmm.grid_hi = hi;
      }
    }
    s.finish();
  }

  if (const json* j = top.find("mcmc")) {
    Section s(*j, "mcmc");
    s.read("samples", known.samples, 1);
    s.read("burn_in", known.burn_in);
    s.read_positive("sigma_s", known.sigma_s);
    s.read("lattice", known.lattice, 1);
    s.finish();
  }
  if (const json* j = top.find("prior")) {
    Section s(*j, "prior");
    s.read_positive("xi", known.xi);
    s.finish();
  }
  if (const json* j = top.find("gmm")) {
    Section s(*j, "gmm");
    s.read("components", gmm.components, 1);
    s.read("burn_in", gmm.burn_in);
    s.read("samples", gmm.samples, 1);
    s.read("init_steps", gmm.init_steps);
    s.read_positive("init_lr", gmm.init_lr);
    s.read_positive("tau_mu", gmm.tau_mu);
    s.read_positive("tau_sigma", gmm.tau_sigma);
    s.read_positive("dirichlet_scale", gmm.dirichlet_scale);
    s.read("corrected_hastings", gmm.corrected_hastings);
    s.finish();
  }
  if (const json* j = top.find("nf")) {
    Section s(*j, "nf");
    s.read("steps", nf.steps);
    s.read_positive("lr", nf.lr);
    if (s.has("m")) {
      std::size_t m = 0;
      s.read("m", m, 2);
      if (quad_m_nf && *quad_m_nf != m) fail("nf.m", "conflicts with quad.m_nf");
      nf.m = m;
    }
    s.read("layers", nf.flow.layers, 1);
    s.read("bins", nf.flow.bins, 2);
    s.read_positive("tail_bound", nf.flow.tail_bound);
    s.read_u64("seed", nf.seed);
    s.read("patience", nf.patience);
    s.finish();
  }
  if (const json* j = top.find("benchmark")) {
    Section s(*j, "benchmark");
    auto& b = cfg.benchmark;
    if (const json* v = s.find("ns")) {
      if (!v->is_array() || v->empty()) fail("benchmark.ns", "expected a non-empty array");
      b.ns.clear();
      for (const auto& e : *v) b.ns.push_back(Section::as_size(e, "benchmark.ns", 1));
    }
    if (const json* v = s.find("snrs")) {
      if (!v->is_array() || v->empty()) fail("benchmark.snrs", "expected a non-empty array");
      b.snrs.clear();
      for (const auto& e : *v) {
        double x = Section::as_double(e, "benchmark.snrs");
        if (!(x > 0.0)) fail("benchmark.snrs", "values must be > 0");
        b.snrs.push_back(x);
      }
    }
    if (const json* v = s.find("methods")) {
      if (!v->is_array() || v->empty()) fail("benchmark.methods", "expected a non-empty array");
      b.methods.clear();
      for (const auto& e : *v) {
        if (!e.is_string() || !is_method(e.get<std::string>()))
          fail("benchmark.methods", "entries must be \"known\", \"gmm\" or \"nf\"");
        b.methods.push_back(e.get<std::string>());
      }
    }
    s.read("seeds", b.seeds, 1);
    s.read_positive("rate", b.rate);
    if (const json* v = s.find("curves")) {
      Section c(*v, "benchmark.curves");
      for (const auto& item : v->items()) {
        if (!is_method(item.key())) fail("benchmark.curves." + item.key(), "unknown method");
        std::string curve;
        c.read(item.key(), curve);
        check_curve("benchmark.curves." + item.key(), item.key(), curve);
        b.curves[item.key()] = curve;
      }
      c.finish();
    }
    s.finish();
  }
  top.finish();

  try {
    (void)cfg.noise.model();
    nf.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::Config, e.what());
  }
  return cfg;
}

RunConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc);
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::Io, "error reading config file " + path);
  return parse_config_text(buf.str());
}

json to_json(const RunConfig& cfg) {
  const auto& known = cfg.methods.known;
  const auto& gmm = cfg.methods.gmm;
  const auto& nf = cfg.methods.nf;
  json curves = json::object();
  for (const auto& [m, c] : cfg.benchmark.curves) curves[m] = c;
  return {
      {"mode", mode_name(cfg.mode)},
      {"n", cfg.n},
      {"seed", cfg.seed},
      {"signal", {{"shape", cfg.signal.alpha}, {"rate", cfg.signal.rate}}},
      {"noise", noise_json(cfg.noise)},
      {"quad",
       {{"m_mcmc", known.grid_points},
        {"m_nf", nf.m},
        {"m_kl", cfg.kl_points},
        {"curve_points", cfg.curve_points},
        {"grid_hi", known.grid_hi ? json(*known.grid_hi) : json(nullptr)}}},
      {"mcmc",
       {{"samples", known.samples},
        {"burn_in", known.burn_in},
        {"sigma_s", known.sigma_s},
        {"lattice", known.lattice}}},
      {"prior", {{"xi", known.xi}}},
      {"gmm",
       {{"components", gmm.components},
        {"burn_in", gmm.burn_in},
        {"samples", gmm.samples},
        {"init_steps", gmm.init_steps},
        {"init_lr", gmm.init_lr},
        {"tau_mu", gmm.tau_mu},
        {"tau_sigma", gmm.tau_sigma},
        {"dirichlet_scale", gmm.dirichlet_scale},
        {"corrected_hastings", gmm.corrected_hastings}}},
      {"nf",
       {{"steps", nf.steps},
        {"lr", nf.lr},
        {"m", nf.m},
        {"layers", nf.flow.layers},
        {"bins", nf.flow.bins},
        {"tail_bound", nf.flow.tail_bound},
        {"seed", nf.seed},
        {"patience", nf.patience}}},
      {"benchmark",
       {{"ns", cfg.benchmark.ns},
        {"snrs", cfg.benchmark.snrs},
        {"methods", cfg.benchmark.methods},
        {"seeds", cfg.benchmark.seeds},
        {"rate", cfg.benchmark.rate},
        {"curves", curves}}},
  };
}

}  // namespace deconv
