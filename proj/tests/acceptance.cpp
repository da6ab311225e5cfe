// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero when any fails.
// Profiles: smoke (default) and full (--profile full).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "deconv/bayes_gmm.hpp"
#include "deconv/bayes_known.hpp"
#include "deconv/error.hpp"
#include "deconv/eval.hpp"
#include "deconv/flow.hpp"
#include "deconv/methods.hpp"
#include "deconv/quad.hpp"
#include "deconv/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace deconv;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

/// Random draw helpers for oracle cases, independent of the library's streams.
struct Draw {
  std::mt19937_64 eng;
  explicit Draw(std::uint64_t seed) : eng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  double normal(double m, double s) { return std::normal_distribution<double>(m, s)(eng); }
  double gamma(double shape, double rate) {
    return std::gamma_distribution<double>(shape, 1.0 / rate)(eng);
  }
};

/// Absolute tolerance for the oracle integral of a positive integrand, from a coarse estimate.
double simpson_tol(const std::function<double(double)>& f, double a, double b) {
  return 1e-11 * oracle::trapezoid(f, a, b, 4000);
}

Outcome criterion_1() {
  Draw d(101);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double ma = d.uniform(-5, 15), va = d.uniform(0.2, 4);
    const double mb = d.uniform(-5, 15), vb = d.uniform(0.2, 9);
    const double x = d.normal(ma + mb, std::sqrt(va + vb));
    const NoiseModel noise(ScalarDist::gaussian(ma, va));
    const ScalarDist signal = ScalarDist::gaussian(mb, vb);
    const double sb = std::sqrt(vb);
    const QuadGrid grid = build_grid(mb - 12 * sb, mb + 12 * sb, 20000);
    const double got = conv_log_likelihood(
        x, noise, [&](double b) { return signal.log_pdf(b); }, grid, DataModel::Sum);
    worst = std::max(worst, std::abs(got - oracle::gaussian_log_pdf(x, ma + mb, va + vb)));
  }
  return {worst < 1e-6, "max |log error| " + fmt("%.3g", worst) + " over 100 points"};
}

Outcome criterion_2() {
  Draw d(202);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const double alpha = d.uniform(2, 15), rate = d.uniform(0.5, 2);
    const bool gaussian_noise = i % 2 == 0;
    const double p1 = gaussian_noise ? d.uniform(5, 15) : d.uniform(5, 20);
    const double p2 = gaussian_noise ? d.uniform(0.25, 2) : d.uniform(0.5, 2);
    const ScalarDist noise_dist =
        gaussian_noise ? ScalarDist::gaussian(p1, p2) : ScalarDist::gamma(p1, p2);
    const NoiseModel noise(noise_dist);
    const double a = gaussian_noise ? d.normal(p1, std::sqrt(p2)) : d.gamma(p1, p2);
    const double x = a * d.gamma(alpha, rate);
    const ScalarDist signal = ScalarDist::gamma(alpha, rate);

    const double lo = boost::math::gamma_p_inv(alpha, 1e-14) / rate;
    const double hi = boost::math::gamma_q_inv(alpha, 1e-14) / rate;
    const QuadGrid grid = build_grid(std::log(lo), std::log(hi), 20000);
    const double got = conv_log_likelihood(
        x, noise, [&](double b) { return signal.log_pdf(b); }, grid, DataModel::Product);

    const auto pa = [&](double v) {
      return gaussian_noise ? oracle::gaussian_pdf(v, p1, p2) : oracle::gamma_pdf(v, p1, p2);
    };
    const std::function<double(double)> mellin = [&](double b) {
      return pa(x / b) * oracle::gamma_pdf(b, alpha, rate) / b;
    };
    const double want = std::log(oracle::adaptive_simpson(mellin, lo, hi, simpson_tol(mellin, lo, hi), 256));
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst < 1e-5, "max |log error| " + fmt("%.3g", worst) + " over 50 cases"};
}

Outcome criterion_3() {
  // x = a + b, a ~ N(0, 1), b ~ N(theta, 1); prior theta ~ N(mu0, tau2).
  const double theta = 10, mu0 = 8, tau2 = 4, sd_log_dummy = 0.05;
  const std::size_t n = 200, burn_in = 2000, samples = 10000;
  Draw d(303);
  std::vector<double> x(n);
  for (auto& v : x) v = d.normal(0, 1) + d.normal(theta, 1);
  const auto [mn, mx] = std::minmax_element(x.begin(), x.end());
  const ConvolutionKernel kernel(x, NoiseModel(ScalarDist::gaussian(0, 1)),
                                 build_grid(*mn - 8, *mx + 8, 3000), DataModel::Sum);
  const auto& pts = kernel.signal_points();
  std::vector<double> signal(pts.size());
  const auto target = [&](const ThetaB& t) {
    for (std::size_t m = 0; m < pts.size(); ++m) signal[m] = oracle::gaussian_log_pdf(pts[m], t.alpha, 1);
    const double lb = std::log(t.rate);
    return kernel.log_likelihood(signal) + oracle::gaussian_log_pdf(t.alpha, mu0, tau2) +
           oracle::gaussian_log_pdf(lb, 0, sd_log_dummy * sd_log_dummy) - lb;
  };

  double sum = 0;
  for (double v : x) sum += v;
  const double post_prec = 1 / tau2 + n / 2.0;
  const double post_var = 1 / post_prec;
  const double post_mean = (mu0 / tau2 + sum / 2) / post_prec;

  Rng rng(derive_seed(fixture::kReferenceSeed, "conjugate"));
  ThetaB cur{sum / n, 1.0};
  double lp = target(cur);
  std::vector<double> draws;
  std::size_t accepted = 0;
  for (std::size_t s = 0; s < burn_in + samples; ++s) {
    const auto out = mh_step(cur, lp, rng, target, KnownModelConfig{}.sigma_s);
    cur = out.state;
    lp = out.log_target;
    if (s >= burn_in) {
      draws.push_back(cur.alpha);
      accepted += out.accepted;
    }
  }
  double mean = 0;
  for (double v : draws) mean += v;
  mean /= samples;
  double var = 0;
  for (double v : draws) var += (v - mean) * (v - mean);
  var /= samples - 1;
  const std::size_t batches = 50, len = samples / batches;
  double bvar = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    double bm = 0;
    for (std::size_t i = 0; i < len; ++i) bm += draws[b * len + i];
    bm /= len;
    bvar += (bm - mean) * (bm - mean);
  }
  const double se = std::sqrt(bvar / (batches - 1) / batches);
  const double z = std::abs(mean - post_mean) / se;
  const double rel_var = std::abs(var / post_var - 1);
  return {z < 3 && rel_var < 0.2,
          "mean " + fmt("%.5f", mean) + " vs " + fmt("%.5f", post_mean) + " (" + fmt("%.2f", z) +
              " SE), variance " + fmt("%.4g", var) + " vs " + fmt("%.4g", post_var) + " (" +
              fmt("%.1f", 100 * rel_var) + "%), acceptance " +
              fmt("%.2f", static_cast<double>(accepted) / samples)};
}

Outcome criterion_4() {
  Draw d(404);
  double worst = 0;
  for (int i = 0; i < 50; ++i) {
    const std::size_t k = 1 + static_cast<std::size_t>(d.uniform(0, 20));
    PsiB psi;
    double total = 0;
    for (std::size_t j = 0; j < k; ++j) {
      psi.means.push_back(d.uniform(0, 20));
      psi.variances.push_back(d.uniform(0.2, 5));
      psi.weights.push_back(d.gamma(1, 1));
      total += psi.weights.back();
    }
    for (auto& w : psi.weights) w /= total;
    const double ma = d.uniform(5, 15), va = d.uniform(0.5, 2);
    const std::size_t pick = static_cast<std::size_t>(d.uniform(0, static_cast<double>(k)));
    const double x = d.normal(ma + psi.means[pick], std::sqrt(va + psi.variances[pick]));
    const double got = gmm_sum_log_likelihood(x, psi, NoiseModel(ScalarDist::gaussian(ma, va)));

    const std::function<double(double)> conv = [&](double b) {
      double s = 0;
      for (std::size_t j = 0; j < k; ++j)
        s += psi.weights[j] * oracle::gaussian_pdf(b, psi.means[j], psi.variances[j]);
      return s * oracle::gaussian_pdf(x - b, ma, va);
    };
    const double lo = x - ma - 12 * std::sqrt(va), hi = x - ma + 12 * std::sqrt(va);
    const double want = std::log(oracle::adaptive_simpson(conv, lo, hi, simpson_tol(conv, lo, hi), 256));
    worst = std::max(worst, std::abs(got - want));
  }
  return {worst < 1e-5, "max |log error| " + fmt("%.3g", worst) + " over 50 cases"};
}

FlowModel random_flow(Rng& rng, double scale) {
  FlowModel m(FlowConfig{}, 2 * rng.normal(), 0.5 + 2 * rng.uniform());
  auto p = m.parameters();
  for (std::size_t i = 0; i + 2 < p.size(); ++i) p[i] = scale * rng.normal();
  m.set_parameters(p);
  return m;
}

Outcome criterion_5() {
  Rng rng(derive_seed(fixture::kReferenceSeed, "flow-suite"));

  double round_trip = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const auto m = random_flow(rng, 1.0);
    for (int i = 0; i < 50; ++i) {
      const double z = -10 + 20 * rng.uniform();
      round_trip = std::max(round_trip, std::abs(m.inverse(m.forward(z).value).value - z));
    }
  }

  double norm_err = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const auto m = random_flow(rng, 0.5);
    const double lo = m.forward(-10).value, hi = m.forward(10).value;
    const int n = 1000000;
    std::vector<double> b(n + 1), lp(n + 1);
    for (int i = 0; i <= n; ++i) b[i] = lo + (hi - lo) * i / n;
    m.log_pdf(b, lp);
    double integral = 0;
    for (int i = 0; i <= n; ++i) integral += (i == 0 || i == n ? 0.5 : 1.0) * std::exp(lp[i]);
    norm_err = std::max(norm_err, std::abs(integral * (hi - lo) / n - 1));
  }

  double grad_err = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const auto m = random_flow(rng, 0.5);
    std::vector<double> batch;
    for (int i = 0; i < 10; ++i) batch.push_back(m.forward(2.5 * rng.normal()).value);
    const auto grad = grad_log_pdf(m, batch);
    const auto p0 = m.parameters();
    std::vector<double> lp(batch.size());
    for (std::size_t j = 0; j < p0.size(); ++j) {
      const std::function<double(double)> f = [&](double t) {
        auto p = p0;
        p[j] = t;
        FlowModel q = m;
        q.set_parameters(p);
        q.log_pdf(batch, lp);
        double s = 0;
        for (double v : lp) s += v;
        return s;
      };
      const double fd = oracle::central_diff(f, p0[j], 1e-6);
      grad_err = std::max(grad_err, std::abs(grad[j] - fd) / std::max(std::abs(fd), 1e-2));
    }
  }

  double init_err = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const double a = 10 * rng.normal(), b = 0.1 + 5 * rng.uniform();
    const FlowModel m(FlowConfig{}, a, b);
    for (double z = -12; z <= 12; z += 0.37) {
      const double v = a + b * z;
      init_err = std::max(init_err, std::abs(m.log_pdf(v) - oracle::gaussian_log_pdf(v, a, b * b)));
    }
  }

  return {round_trip < 1e-8 && norm_err < 1e-2 && grad_err < 1e-4 && init_err < 1e-9,
          "round trip " + fmt("%.2g", round_trip) + ", normalization " + fmt("%.2g", norm_err) +
              ", gradient rel " + fmt("%.2g", grad_err) + ", init law " + fmt("%.2g", init_err)};
}

Outcome criterion_6() {
  const ScalarDist n0 = ScalarDist::gaussian(0, 1), n1 = ScalarDist::gaussian(1, 1);
  const double kl_g =
      kl_divergence(n0, [&](double b) { return n1.log_pdf(b); }, build_grid(-12, 12, 4000)).kl;
  const ScalarDist g8 = ScalarDist::gamma(8, 1);
  const double kl_gam =
      kl_to_ground_truth({9, 1}, [&](double b) { return g8.log_pdf(b); }, kl_grid({9, 1})).kl;
  const double want = oracle::gamma_kl(9, 1, 8, 1);
  const double e1 = std::abs(kl_g - 0.5), e2 = std::abs(kl_gam - want);
  return {e1 < 1e-4 && e2 < 1e-4, "Gaussian " + fmt("%.8f", kl_g) + " (err " + fmt("%.2g", e1) +
                                      "), Gamma " + fmt("%.8f", kl_gam) + " vs " + fmt("%.8f", want)};
}

KlResult curve_kl(const FitOutput& fit, const std::string& curve, const ThetaB& gt = {9, 1}) {
  const QuadGrid grid = kl_grid(gt);
  return kl_to_ground_truth(gt, fit.curve(curve).log_density(grid.points()), grid);
}

Outcome criterion_7() {
  const auto x = fixture::reference_data(DataModel::Sum);
  const MethodSettings settings;
  const auto seed = fixture::kReferenceSeed;
  const auto nf = fit_method("nf", x, fixture::reference_noise(), DataModel::Sum, settings,
                             derive_seed(seed, "flow"));
  const auto nf_kl = curve_kl(nf, "nf");
  const auto known = fit_method("known", x, fixture::reference_noise(), DataModel::Sum, settings,
                                derive_seed(seed, "chain"));
  const auto map_kl = curve_kl(known, "map");
  return {nf_kl.kl < 0.05 && map_kl.kl < nf_kl.kl && !nf_kl.clamped && !map_kl.clamped,
          "NF KL " + fmt("%.4f", nf_kl.kl) + ", known MAP KL " + fmt("%.4f", map_kl.kl)};
}

Outcome criterion_10() {
  const auto x = fixture::reference_data(DataModel::Product);
  const auto fit = fit_method("nf", x, fixture::reference_noise(), DataModel::Product,
                              MethodSettings{}, derive_seed(fixture::kReferenceSeed, "flow"));
  const QuadGrid grid = build_grid(1e-6, 200, 400001);
  const auto lp = fit.curve("nf").log_density(grid.points());
  double integral = 0;
  for (double v : lp) integral += std::exp(v);
  integral *= grid.spacing();
  const auto kl = curve_kl(fit, "nf");
  return {std::abs(integral - 1) < 1e-2 && kl.kl < 0.08 && !kl.clamped,
          "integral " + fmt("%.5f", integral) + ", KL " + fmt("%.4f", kl.kl)};
}

/// Reduced settings of the smoke profile.
MethodSettings smoke_settings() {
  MethodSettings s;
  s.known.samples = 3000;
  s.known.lattice = 25;
  s.known.grid_points = 2500;
  s.gmm.init_steps = 1000;
  s.gmm.burn_in = 1000;
  s.gmm.samples = 4000;
  s.nf.steps = 1000;
  return s;
}

using CellMedians = std::map<std::pair<std::size_t, double>, std::map<std::string, double>>;

CellMedians run_grid(const std::vector<std::size_t>& ns, const std::vector<double>& snrs,
                     std::size_t seeds, const MethodSettings& settings, std::string& failures) {
  BenchmarkSpec spec;
  spec.ns = ns;
  spec.snrs = snrs;
  spec.methods = {"known", "gmm", "nf"};
  spec.seeds = seeds;
  spec.master_seed = fixture::kReferenceSeed;
  spec.settings = settings;
  std::map<std::pair<std::size_t, double>, std::map<std::string, std::vector<double>>> kls;
  for (const auto& r : benchmark(spec)) {
    if (!r.ok() || r.clamped) {
      failures += " " + r.method + "@N=" + std::to_string(r.n) + (r.ok() ? " clamped" : ": " + r.error);
      kls[{r.n, r.snr}][r.method].push_back(INFINITY);
      continue;
    }
    kls[{r.n, r.snr}][r.method].push_back(r.kl);
  }
  CellMedians out;
  for (const auto& [cell, by_method] : kls)
    for (const auto& [method, v] : by_method) out[cell][method] = median(v);
  return out;
}

Outcome criterion_8(bool full, const MethodSettings& settings) {
  const std::vector<std::size_t> ns = full ? std::vector<std::size_t>{100, 1000} : std::vector<std::size_t>{1000};
  const std::vector<double> snrs = full ? std::vector<double>{2, 9} : std::vector<double>{9};
  std::string failures;
  const auto med = run_grid(ns, snrs, 5, settings, failures);
  int ordered = 0, known_best = 0;
  std::string detail;
  for (const auto& [cell, m] : med) {
    const double k = m.at("known"), g = m.at("gmm"), f = m.at("nf");
    ordered += k < f && f < g;
    known_best += k < f && k < g;
    detail += "[N=" + std::to_string(cell.first) + " SNR=" + fmt("%g", cell.second) +
              ": known " + fmt("%.4f", k) + " nf " + fmt("%.4f", f) + " gmm " + fmt("%.4f", g) + "] ";
  }
  const int cells = static_cast<int>(med.size());
  const bool pass = full ? ordered >= 3 && known_best == cells : ordered == cells;
  return {pass && failures.empty(), detail + "ordered in " + std::to_string(ordered) + "/" +
                                        std::to_string(cells) + " cells" + failures};
}

Outcome criterion_9(const MethodSettings& settings) {
  std::string failures;
  const auto med = run_grid({100, 10000}, {9}, 3, settings, failures);
  bool pass = failures.empty();
  std::string detail;
  for (const std::string method : {"known", "gmm", "nf"}) {
    const double small = med.at({100, 9.0}).at(method), large = med.at({10000, 9.0}).at(method);
    pass = pass && large < small;
    detail += method + " " + fmt("%.4f", small) + " -> " + fmt("%.4f", large) + "; ";
  }
  return {pass, detail + "median KL at N=100 -> N=10000" + failures};
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Lists relative paths of regular files whose bytes differ (or exist on one side only).
std::vector<std::string> differing_files(const fs::path& a, const fs::path& b) {
  std::set<std::string> names;
  for (const auto& root : {a, b})
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) names.insert(fs::relative(e.path(), root).string());
  std::vector<std::string> out;
  for (const auto& n : names)
    if (!fs::exists(a / n) || !fs::exists(b / n) || read_bytes(a / n) != read_bytes(b / n))
      out.push_back(n);
  return out;
}

Outcome criterion_11(const std::string& cli) {
  if (cli.empty()) return {false, "no CLI path given (--cli)"};
  const fs::path work = fs::temp_directory_path() / ("deconv_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(work);
  fs::create_directories(work);
  {
    std::ofstream cfg(work / "run.json");
    cfg << R"({"n": 300, "quad": {"m_mcmc": 2000},
 "mcmc": {"samples": 300, "lattice": 10},
 "gmm": {"components": 5, "init_steps": 100, "burn_in": 50, "samples": 100},
 "nf": {"steps": 50},
 "benchmark": {"ns": [50, 100], "snrs": [2, 9], "seeds": 2}})";
  }
  const std::string base = "\"" + cli + "\" --config \"" + (work / "run.json").string() + "\" --seed 7 ";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate", "generate"},
      {"fit-known", "fit --method known --data \"" + (work / "generate_1/data.csv").string() + "\""},
      {"fit-gmm", "fit --method gmm --data \"" + (work / "generate_1/data.csv").string() + "\""},
      {"fit-nf", "fit --method nf --data \"" + (work / "generate_1/data.csv").string() + "\""},
      {"eval", "eval --density \"" + (work / "fit-known_1/density.csv").string() + "\""},
      {"benchmark", "--jobs 2 benchmark"},
  };
  std::string detail;
  bool pass = true;
  for (const auto& [name, args] : commands) {
    bool ran = true;
    for (int run = 1; run <= 2; ++run) {
      const fs::path out = work / (name + "_" + std::to_string(run));
      const std::string cmd = base + args + " --out \"" + out.string() + "\" > /dev/null 2>&1";
      ran = ran && std::system(cmd.c_str()) == 0;
    }
    if (!ran) {
      pass = false;
      detail += name + " failed; ";
      continue;
    }
    const auto diff = differing_files(work / (name + "_1"), work / (name + "_2"));
    if (!diff.empty()) {
      pass = false;
      detail += name + " differs in " + diff.front() + "; ";
    }
  }
  fs::remove_all(work);
  return {pass, detail.empty() ? "generate, fit (known, gmm, nf), eval and benchmark reruns byte-identical"
                               : detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deconv acceptance run"};
  std::string profile = "smoke";
  std::string cli;
  std::vector<int> only;
  app.add_option("--profile", profile, "smoke or full")->check(CLI::IsMember({"smoke", "full"}));
  app.add_option("--cli", cli, "path of the deconv command-line binary");
  app.add_option("--only", only, "criteria to run")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  if (const char* env = std::getenv("DECONV_ACCEPTANCE_FULL"); env && std::string(env) == "1")
    profile = "full";
  const bool full = profile == "full";
  const MethodSettings bench_settings = full ? MethodSettings{} : smoke_settings();
  std::printf("profile %s\n", profile.c_str());
  std::fflush(stdout);

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  // Criterion 8 runs last in the smoke profile so its line can include the total runtime.
  const std::vector<Criterion> criteria = {
      {1, "Gaussian convolution closed form", 5, criterion_1},
      {2, "Mellin product likelihood vs quadrature", 30, criterion_2},
      {3, "conjugate Gaussian-mean posterior by MH", 60, criterion_3},
      {4, "mixture likelihood vs quadrature", 10, criterion_4},
      {5, "flow suite", 60, criterion_5},
      {6, "KL quadrature", 5, criterion_6},
      {7, "sum reference end to end", 900, criterion_7},
      {9, "KL improves from N=100 to N=10000", full ? 4 * 3600.0 : 1200, [&] { return criterion_9(bench_settings); }},
      {10, "product reference end to end", 900, criterion_10},
      {11, "CLI byte-identical reruns", 600, [&] { return criterion_11(cli); }},
      {8, "method ordering", full ? 4 * 3600.0 : 1200, [&] { return criterion_8(full, bench_settings); }},
  };

  const auto start = Clock::now();
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double dt = seconds_since(t0);
    std::string timing = fmt("%.1f s", dt) + fmt(" (budget %g s)", c.budget_s);
    bool pass = o.pass && dt < c.budget_s;
    if (c.id == 8 && !full) {
      const double total = seconds_since(start);
      timing += fmt(", smoke profile total %.1f s (budget 1200 s)", total);
      pass = pass && total < 1200;
    }
    std::printf("criterion %2d %s: %s | %s | %s\n", c.id, pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), timing.c_str());
    std::fflush(stdout);
    failed += !pass;
  }
  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
