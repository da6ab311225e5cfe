#include "deconv/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <openssl/evp.h>

#include "deconv/error.hpp"
#include "deconv/format.hpp"

namespace deconv {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kNormalizationTolerance = 1e-2;

void log_line(const std::string& msg) { std::cerr << "deconv: " << msg << '\n'; }

RunConfig resolve_config(const CommandOptions& opts) {
  RunConfig cfg = opts.config_path.empty() ? parse_config(json::object()) : load_config(opts.config_path);
  if (opts.seed) cfg.seed = *opts.seed;
  return cfg;
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir))
    throw Error(ErrorKind::Io, "cannot create output directory " + dir);
  return fs::path(dir);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw Error(ErrorKind::Io, "error writing " + path.string());
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorKind::Io, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

json timestamp(bool timing) {
  std::time_t t;
  if (timing) {
    t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  } else if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
    t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
  } else {
    return nullptr;
  }
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

struct Manifest {
  std::string command;
  json config;
  std::uint64_t seed = 0;
  json inputs = json::array();
  std::vector<std::string> outputs;
  json started;
  bool timing = false;

  void add_input(const std::string& path, const std::string& bytes) {
    inputs.push_back({{"path", path}, {"sha256", sha256_hex(bytes)}});
  }

  void write(const fs::path& dir) const {
    json j = {{"tool", "deconv"},
              {"version", DECONV_VERSION},
              {"command", command},
              {"seed", seed},
              {"config", config},
              {"inputs", inputs},
              {"outputs", outputs},
              {"timestamps", {{"started", started}, {"finished", timestamp(timing)}}}};
    write_file(dir / "manifest.json", j.dump(2) + "\n");
  }
};

Manifest start_manifest(const std::string& command, const RunConfig& cfg, const CommandOptions& opts) {
  Manifest m;
  m.command = command;
  m.config = to_json(cfg);
  m.seed = cfg.seed;
  m.timing = opts.timing;
  m.started = timestamp(opts.timing);
  if (!opts.config_path.empty()) m.add_input(opts.config_path, read_file(opts.config_path));
  return m;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  for (auto& c : cells) {
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    std::size_t start = c.find_first_not_of(' ');
    c = start == std::string::npos ? "" : c.substr(start);
  }
  return cells;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(const std::string& name, const std::string& path) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorKind::Config, path + ": missing column \"" + name + "\"");
    return static_cast<std::size_t>(it - header.begin());
  }
};

CsvTable parse_csv(const std::string& text, const std::string& path) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw Error(ErrorKind::Config, path + " line " + std::to_string(number) + ": expected " +
                                         std::to_string(t.header.size()) + " fields");
    t.rows.push_back(std::move(cells));
    t.line_numbers.push_back(number);
  }
  if (t.header.empty()) throw Error(ErrorKind::Config, path + ": empty file");
  return t;
}

double parse_number(const std::string& cell, const std::string& path, std::size_t line) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto res = std::from_chars(cell.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
    throw Error(ErrorKind::Config,
                path + " line " + std::to_string(line) + ": \"" + cell + "\" is not a finite number");
  return v;
}

}  // namespace

std::vector<double> read_data_csv(const std::string& path) {
  CsvTable t = parse_csv(read_file(path), path);
  const std::size_t col = t.column("x", path);
  std::vector<double> x;
  x.reserve(t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    x.push_back(parse_number(t.rows[i][col], path, t.line_numbers[i]));
  if (x.empty()) throw Error(ErrorKind::Config, path + ": no observations");
  return x;
}

std::vector<double> curve_points(std::span<const double> data, const NoiseModel& noise,
                                 DataModel mode, std::size_t m) {
  if (mode == DataModel::Sum) {
    auto [lo, hi] = std::minmax_element(data.begin(), data.end());
    const double half_range = 0.5 * (*hi - *lo);
    const double pad_width = 6.0 * noise.stddev() + half_range;
    return build_grid(*lo - noise.mean() - pad_width, *hi - noise.mean() + pad_width, m).points();
  }
  std::vector<double> logs(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!(data[i] > 0.0)) throw Error(ErrorKind::NonPositiveData, "product mode requires x > 0");
    logs[i] = std::log(data[i]);
  }
  const NoiseModel log_noise = log_space_noise(noise);
  auto [lo, hi] = std::minmax_element(logs.begin(), logs.end());
  const double pad_width = 6.0 * log_noise.stddev() + 0.5 * (*hi - *lo);
  const double b_lo = std::exp(*lo - log_noise.mean() - pad_width);
  const double b_hi = std::exp(*hi - log_noise.mean() + pad_width);
  return build_grid(b_lo, b_hi, m).points();
}

void cmd_generate(const CommandOptions& opts) {
  RunConfig cfg = resolve_config(opts);
  Manifest manifest = start_manifest("generate", cfg, opts);
  fs::path dir = prepare_out_dir(opts.out_dir);

  Scenario scenario{cfg.mode, cfg.signal, cfg.noise.model(), cfg.n, derive_seed(cfg.seed, "data")};
  log_line("generate: mode=" + mode_name(cfg.mode) + " N=" + std::to_string(cfg.n));
  const auto x = generate(scenario);

  std::string csv = "x\n";
  for (double v : x) csv += format_double(v) + "\n";
  write_file(dir / "data.csv", csv);
  manifest.outputs = {"data.csv"};
  manifest.write(dir);
}

void cmd_fit(const CommandOptions& opts) {
  if (!is_method(opts.method))
    throw Error(ErrorKind::Config, "method: expected known, gmm or nf, got \"" + opts.method + "\"");
  if (opts.data_path.empty()) throw Error(ErrorKind::Config, "data: a data file is required");
  RunConfig cfg = resolve_config(opts);
  Manifest manifest = start_manifest("fit", cfg, opts);
  const std::string bytes = read_file(opts.data_path);
  manifest.add_input(opts.data_path, bytes);
  CsvTable table = parse_csv(bytes, opts.data_path);
  const std::size_t col = table.column("x", opts.data_path);
  std::vector<double> x;
  for (std::size_t i = 0; i < table.rows.size(); ++i)
    x.push_back(parse_number(table.rows[i][col], opts.data_path, table.line_numbers[i]));
  if (x.empty()) throw Error(ErrorKind::Config, opts.data_path + ": no observations");
  fs::path dir = prepare_out_dir(opts.out_dir);

  const NoiseModel noise = cfg.noise.model();
  const std::uint64_t method_seed = derive_seed(cfg.seed, opts.method == "nf" ? "flow" : "chain");
  log_line("fit: method=" + opts.method + " mode=" + mode_name(cfg.mode) +
           " N=" + std::to_string(x.size()));
  const auto start = std::chrono::steady_clock::now();
  FitOutput fit = fit_method(opts.method, x, noise, cfg.mode, cfg.methods, method_seed);
  const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const auto b = curve_points(x, noise, cfg.mode, cfg.curve_points);
  std::string csv = "curve,b,density\n";
  json curve_names = json::array();
  for (const auto& curve : fit.curves) {
    const auto lq = curve.log_density(b);
    for (std::size_t i = 0; i < b.size(); ++i) {
      double d = std::exp(lq[i]);
      if (!std::isfinite(d) || d < 0.0)
        throw Error(ErrorKind::Numerical, "curve " + curve.name + " is not finite at b=" + format_double(b[i]));
      csv += curve.name + "," + format_double(b[i]) + "," + format_double(d) + "\n";
    }
    curve_names.push_back(curve.name);
  }
  write_file(dir / "density.csv", csv);
  manifest.outputs = {"density.csv", "params.json"};

  json params = {{"method", opts.method},
                 {"mode", mode_name(cfg.mode)},
                 {"n", x.size()},
                 {"seed", method_seed},
                 {"curves", curve_names},
                 {"runtime_s", opts.timing ? runtime : 0.0},
                 {"manifest", "manifest.json"}};
  if (fit.summary.contains("checkpoint")) {
    write_file(dir / "flow.json", fit.summary["checkpoint"].dump(2) + "\n");
    fit.summary.erase("checkpoint");
    params["checkpoint"] = "flow.json";
    manifest.outputs.push_back("flow.json");
  }
  params["summary"] = fit.summary;
  write_file(dir / "params.json", params.dump(2) + "\n");
  manifest.write(dir);
}

void cmd_eval(const CommandOptions& opts) {
  if (opts.density_path.empty()) throw Error(ErrorKind::Config, "density: a density file is required");
  RunConfig cfg = resolve_config(opts);
  Manifest manifest = start_manifest("eval", cfg, opts);
  const std::string bytes = read_file(opts.density_path);
  manifest.add_input(opts.density_path, bytes);
  const std::string& path = opts.density_path;
  CsvTable t = parse_csv(bytes, path);
  const std::size_t bcol = t.column("b", path);
  const std::size_t dcol = t.column("density", path);
  const bool has_curve = std::find(t.header.begin(), t.header.end(), "curve") != t.header.end();
  const std::size_t ccol = has_curve ? t.column("curve", path) : 0;

  struct Curve {
    std::string name;
    std::vector<double> b, d;
  };
  std::vector<Curve> curves;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const std::string name = has_curve ? t.rows[i][ccol] : "density";
    auto it = std::find_if(curves.begin(), curves.end(), [&](const Curve& c) { return c.name == name; });
    if (it == curves.end()) {
      curves.push_back({name, {}, {}});
      it = curves.end() - 1;
    }
    const double b = parse_number(t.rows[i][bcol], path, t.line_numbers[i]);
    const double d = parse_number(t.rows[i][dcol], path, t.line_numbers[i]);
    if (d < 0.0)
      throw Error(ErrorKind::Config, path + " line " + std::to_string(t.line_numbers[i]) + ": negative density");
    if (!it->b.empty() && !(b > it->b.back()))
      throw Error(ErrorKind::Config, path + " line " + std::to_string(t.line_numbers[i]) +
                                         ": b must increase within a curve");
    it->b.push_back(b);
    it->d.push_back(d);
  }
  if (!opts.curve.empty()) {
    auto it = std::find_if(curves.begin(), curves.end(), [&](const Curve& c) { return c.name == opts.curve; });
    if (it == curves.end()) throw Error(ErrorKind::Config, "curve: \"" + opts.curve + "\" not in " + path);
    curves = {*it};
  }
  if (curves.empty()) throw Error(ErrorKind::Config, path + ": no density rows");
  fs::path dir = prepare_out_dir(opts.out_dir);

  const ScalarDist gt = ScalarDist::gamma(cfg.signal.alpha, cfg.signal.rate);
  const QuadGrid grid = kl_grid(cfg.signal, cfg.kl_points);
  json results = json::array();
  for (const auto& c : curves) {
    if (c.b.size() < 2) throw Error(ErrorKind::Config, "curve " + c.name + " needs at least two points");
    double integral = 0.0;
    for (std::size_t i = 1; i < c.b.size(); ++i)
      integral += 0.5 * (c.d[i] + c.d[i - 1]) * (c.b[i] - c.b[i - 1]);
    if (!(std::abs(integral - 1.0) <= kNormalizationTolerance))
      throw Error(ErrorKind::NotNormalized,
                  "curve " + c.name + " integrates to " + format_double(integral));
    std::vector<double> lq(grid.size());
    for (std::size_t m = 0; m < grid.size(); ++m) {
      const double g = grid[m];
      double q = 0.0;
      if (g >= c.b.front() && g <= c.b.back()) {
        auto it = std::upper_bound(c.b.begin(), c.b.end(), g);
        std::size_t hi = std::min<std::size_t>(static_cast<std::size_t>(it - c.b.begin()), c.b.size() - 1);
        std::size_t lo = hi - 1;
        const double w = (g - c.b[lo]) / (c.b[hi] - c.b[lo]);
        q = (1.0 - w) * c.d[lo] + w * c.d[hi];
      }
      lq[m] = q > 0.0 ? std::log(q) : kNegInf;
    }
    KlResult kl = kl_divergence(gt, lq, grid);
    const double outside = gt.cdf(c.b.front()) + (1.0 - gt.cdf(c.b.back()));
    results.push_back({{"curve", c.name},
                       {"kl", kl.kl},
                       {"clamped", kl.clamped},
                       {"integral", integral},
                       {"normalized", true},
                       {"ground_truth_mass_outside_curve", outside}});
  }
  json report = {{"ground_truth", {{"shape", cfg.signal.alpha}, {"rate", cfg.signal.rate}}},
                 {"grid", {{"lo", grid.lo()}, {"hi", grid.hi()}, {"m", grid.size()}}},
                 {"log_floor", kKlLogFloor},
                 {"curves", results},
                 {"manifest", "manifest.json"}};
  write_file(dir / "kl_report.json", report.dump(2) + "\n");
  manifest.outputs = {"kl_report.json"};
  manifest.write(dir);
}

void cmd_benchmark(const CommandOptions& opts) {
  RunConfig cfg = resolve_config(opts);
  Manifest manifest = start_manifest("benchmark", cfg, opts);
  fs::path dir = prepare_out_dir(opts.out_dir);

  BenchmarkSpec spec;
  spec.mode = cfg.mode;
  spec.noise = cfg.noise.model();
  spec.rate = cfg.benchmark.rate;
  spec.ns = cfg.benchmark.ns;
  spec.snrs = cfg.benchmark.snrs;
  spec.methods = cfg.benchmark.methods;
  spec.seeds = cfg.benchmark.seeds;
  spec.master_seed = cfg.seed;
  spec.settings = cfg.methods;
  spec.curves = cfg.benchmark.curves;
  spec.kl_points = cfg.kl_points;

  const auto reports = benchmark(spec, opts.jobs, [](const KlReport& r) {
    log_line("benchmark: N=" + std::to_string(r.n) + " snr=" + format_double(r.snr) +
             " replicate=" + std::to_string(r.replicate) + " method=" + r.method +
             (r.ok() ? " kl=" + format_double(r.kl) : " failed: " + r.error));
  });

  std::string csv = "mode,N,snr,method,seed,kl,runtime_s,clamped\n";
  json rows = json::array();
  bool any_ok = false;
  for (const auto& r : reports) {
    const double runtime = opts.timing ? r.runtime_s : 0.0;
    any_ok = any_ok || r.ok();
    csv += mode_name(r.mode) + "," + std::to_string(r.n) + "," + format_double(r.snr) + "," + r.method +
           "," + std::to_string(r.seed) + "," + format_double(r.kl) + "," + format_double(runtime) + "," +
           (r.clamped ? "true" : "false") + "\n";
    rows.push_back({{"mode", mode_name(r.mode)},
                    {"N", r.n},
                    {"snr", r.snr},
                    {"alpha", r.alpha},
                    {"method", r.method},
                    {"curve", r.curve},
                    {"replicate", r.replicate},
                    {"seed", r.seed},
                    {"kl", r.ok() ? json(r.kl) : json(nullptr)},
                    {"clamped", r.clamped},
                    {"runtime_s", runtime},
                    {"error", r.ok() ? json(nullptr) : json(r.error)}});
  }
  write_file(dir / "benchmark.csv", csv);
  write_file(dir / "benchmark.json",
             json{{"reports", rows}, {"manifest", "manifest.json"}}.dump(2) + "\n");
  manifest.outputs = {"benchmark.csv", "benchmark.json"};

  for (const auto& method : spec.methods) {
    std::string pivot = "N";
    for (double s : spec.snrs) pivot += ",snr=" + format_double(s);
    pivot += "\n";
    for (std::size_t n : spec.ns) {
      pivot += std::to_string(n);
      for (double s : spec.snrs) {
        std::vector<double> logs;
        for (const auto& r : reports)
          if (r.method == method && r.n == n && r.snr == s && r.ok() && r.kl > 0.0)
            logs.push_back(std::log10(r.kl));
        pivot += "," + format_double(median(logs));
      }
      pivot += "\n";
    }
    const std::string name = "pivot_" + method + ".csv";
    write_file(dir / name, pivot);
    manifest.outputs.push_back(name);
  }
  manifest.write(dir);
  if (!any_ok) throw Error(ErrorKind::Numerical, "every benchmark cell failed");
}

}  // namespace deconv
