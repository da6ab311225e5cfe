#include "deconv/flow.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "deconv/dist.hpp"
#include "deconv/error.hpp"

namespace deconv {

namespace {

constexpr int kFlowFormatVersion = 1;

/// Forward-mode dual number over N independent variables.
template <std::size_t N>
struct Dual {
  double v = 0.0;
  std::array<double, N> d{};

  static Dual constant(double x) { return Dual{x, {}}; }
  static Dual variable(double x, std::size_t i) {
    Dual r{x, {}};
    r.d[i] = 1.0;
    return r;
  }
};

template <std::size_t N>
Dual<N> operator+(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r{a.v + b.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] + b.d[i];
  return r;
}
template <std::size_t N>
Dual<N> operator-(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r{a.v - b.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] - b.d[i];
  return r;
}
template <std::size_t N>
Dual<N> operator*(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r{a.v * b.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
  return r;
}
template <std::size_t N>
Dual<N> operator/(const Dual<N>& a, const Dual<N>& b) {
  Dual<N> r{a.v / b.v, {}};
  const double inv = 1.0 / b.v;
  for (std::size_t i = 0; i < N; ++i) r.d[i] = (a.d[i] - r.v * b.d[i]) * inv;
  return r;
}
template <std::size_t N>
Dual<N> operator*(double s, const Dual<N>& a) {
  Dual<N> r{s * a.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = s * a.d[i];
  return r;
}
template <std::size_t N>
Dual<N> operator-(double s, const Dual<N>& a) {
  Dual<N> r{s - a.v, {}};
  for (std::size_t i = 0; i < N; ++i) r.d[i] = -a.d[i];
  return r;
}

template <class T>
struct RqValue {
  T y;
  T slope;
};

// Rational-quadratic bin map with knot (xk, yk), bin size (w, h) and knot slopes dk, dk1.
template <class T>
RqValue<T> rq_eval(const T& x, const T& xk, const T& w, const T& yk, const T& h, const T& dk,
                   const T& dk1) {
  T s = h / w;
  T xi = (x - xk) / w;
  T one_minus = 1.0 - xi;
  T om = xi * one_minus;
  T denom = s + (dk1 + dk - 2.0 * s) * om;
  T y = yk + h * (s * xi * xi + dk * om) / denom;
  T num = dk1 * xi * xi + 2.0 * s * om + dk * one_minus * one_minus;
  T slope = s * s * num / (denom * denom);
  return {y, slope};
}

double softplus(double u) { return std::max(u, 0.0) + std::log1p(std::exp(-std::abs(u))); }
double sigmoid(double u) {
  if (u >= 0.0) return 1.0 / (1.0 + std::exp(-u));
  double e = std::exp(u);
  return e / (1.0 + e);
}

void softmax_into(std::span<const double> u, std::vector<double>& out) {
  out.resize(u.size());
  double hi = *std::max_element(u.begin(), u.end());
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    out[i] = std::exp(u[i] - hi);
    total += out[i];
  }
  for (auto& v : out) v /= total;
}

/// Knot positions, bin sizes and slopes of one layer.
struct Geometry {
  std::vector<double> sw, sh;  // softmax outputs
  std::vector<double> w, h;    // bin widths and heights
  std::vector<double> xk, yk;  // K+1 knots
  std::vector<double> d;       // K+1 knot slopes, ends fixed at 1

  Geometry(const SplineLayer& layer, const FlowConfig& cfg) {
    const std::size_t k = cfg.bins;
    const double span = 2.0 * cfg.tail_bound;
    softmax_into(layer.widths, sw);
    softmax_into(layer.heights, sh);
    w.resize(k);
    h.resize(k);
    xk.resize(k + 1);
    yk.resize(k + 1);
    d.assign(k + 1, 1.0);
    const double kw = 1.0 - static_cast<double>(k) * cfg.min_bin_width;
    const double kh = 1.0 - static_cast<double>(k) * cfg.min_bin_height;
    xk[0] = yk[0] = -cfg.tail_bound;
    for (std::size_t i = 0; i < k; ++i) {
      w[i] = span * (cfg.min_bin_width + kw * sw[i]);
      h[i] = span * (cfg.min_bin_height + kh * sh[i]);
      xk[i + 1] = xk[i] + w[i];
      yk[i + 1] = yk[i] + h[i];
    }
    xk[k] = yk[k] = cfg.tail_bound;
    for (std::size_t i = 1; i < k; ++i) d[i] = cfg.min_derivative + softplus(layer.derivs[i - 1]);
  }

  std::size_t bin_of(const std::vector<double>& knots, double v) const {
    auto it = std::upper_bound(knots.begin(), knots.end(), v);
    std::ptrdiff_t idx = (it - knots.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(w.size()) - 1));
  }

  FlowPoint forward(double x, double bound) const {
    if (x < -bound || x > bound) return {x, 0.0};
    std::size_t k = bin_of(xk, x);
    auto r = rq_eval(x, xk[k], w[k], yk[k], h[k], d[k], d[k + 1]);
    return {r.y, std::log(r.slope)};
  }

  /// Returns the preimage and the forward log-slope there.
  FlowPoint inverse(double y, double bound, std::size_t* bin = nullptr) const {
    if (y < -bound || y > bound) return {y, 0.0};
    std::size_t k = bin_of(yk, y);
    if (bin) *bin = k;
    const double s = h[k] / w[k];
    const double dy = y - yk[k];
    const double c2 = d[k + 1] + d[k] - 2.0 * s;
    const double a = h[k] * (s - d[k]) + dy * c2;
    const double b = h[k] * d[k] - dy * c2;
    const double c = -s * dy;
    const double disc = std::max(b * b - 4.0 * a * c, 0.0);
    const double denom = -b - std::sqrt(disc);
    double xi = denom != 0.0 ? 2.0 * c / denom : 0.0;
    xi = std::clamp(xi, 0.0, 1.0);
    const double x = xk[k] + xi * w[k];
    auto r = rq_eval(x, xk[k], w[k], yk[k], h[k], d[k], d[k + 1]);
    return {x, std::log(r.slope)};
  }
};

std::vector<double> identity_layer_values(std::size_t n, double v) { return std::vector<double>(n, v); }

}  // namespace

void FlowConfig::validate() const {
  if (layers == 0) throw Error(ErrorKind::InvalidParameter, "flow needs at least one layer");
  if (bins < 2) throw Error(ErrorKind::InvalidParameter, "flow needs at least two bins");
  if (!(tail_bound > 0.0) || !std::isfinite(tail_bound))
    throw Error(ErrorKind::InvalidParameter, "tail_bound must be positive");
  const double k = static_cast<double>(bins);
  if (!(min_bin_width > 0.0) || !(min_bin_width * k < 1.0))
    throw Error(ErrorKind::InvalidParameter, "min_bin_width must be in (0, 1/bins)");
  if (!(min_bin_height > 0.0) || !(min_bin_height * k < 1.0))
    throw Error(ErrorKind::InvalidParameter, "min_bin_height must be in (0, 1/bins)");
  if (!(min_derivative > 0.0) || !(min_derivative < 1.0))
    throw Error(ErrorKind::InvalidParameter, "min_derivative must be in (0, 1)");
}

FlowModel::FlowModel(FlowConfig config, double alpha, double beta) : config_(config) {
  config_.validate();
  set_head(alpha, beta);
  reset_layers();
}

void FlowModel::set_head(double alpha, double beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || beta == 0.0)
    throw Error(ErrorKind::InvalidParameter, "affine head needs finite alpha and nonzero beta");
  alpha_ = alpha;
  beta_ = beta;
}

void FlowModel::reset_layers() {
  const double deriv0 = std::log(std::expm1(1.0 - config_.min_derivative));
  layers_.assign(config_.layers, SplineLayer{identity_layer_values(config_.bins, 0.0),
                                             identity_layer_values(config_.bins, 0.0),
                                             identity_layer_values(config_.bins - 1, deriv0)});
}

std::size_t FlowModel::parameter_count() const {
  return config_.layers * (3 * config_.bins - 1) + 2;
}

std::vector<double> FlowModel::parameters() const {
  std::vector<double> p;
  p.reserve(parameter_count());
  for (const auto& layer : layers_) {
    p.insert(p.end(), layer.widths.begin(), layer.widths.end());
    p.insert(p.end(), layer.heights.begin(), layer.heights.end());
    p.insert(p.end(), layer.derivs.begin(), layer.derivs.end());
  }
  p.push_back(alpha_);
  p.push_back(beta_);
  return p;
}

void FlowModel::set_parameters(std::span<const double> p) {
  if (p.size() != parameter_count())
    throw Error(ErrorKind::InvalidParameter, "parameter vector has the wrong length");
  for (double v : p)
    if (!std::isfinite(v)) throw Error(ErrorKind::Numerical, "non-finite flow parameter");
  std::size_t i = 0;
  const auto take = [&](std::vector<double>& dst) {
    for (auto& v : dst) v = p[i++];
  };
  for (auto& layer : layers_) {
    take(layer.widths);
    take(layer.heights);
    take(layer.derivs);
  }
  set_head(p[i], p[i + 1]);
}

FlowPoint FlowModel::forward(double z) const {
  double v = z;
  double log_det = 0.0;
  for (const auto& layer : layers_) {
    auto r = Geometry(layer, config_).forward(v, config_.tail_bound);
    v = r.value;
    log_det += r.log_det;
  }
  return {alpha_ + beta_ * v, log_det + std::log(std::abs(beta_))};
}

FlowPoint FlowModel::inverse(double b) const {
  double v = (b - alpha_) / beta_;
  double log_det = -std::log(std::abs(beta_));
  for (std::size_t l = layers_.size(); l-- > 0;) {
    auto r = Geometry(layers_[l], config_).inverse(v, config_.tail_bound);
    v = r.value;
    log_det -= r.log_det;
  }
  return {v, log_det};
}

double FlowModel::log_pdf(double b) const {
  auto r = inverse(b);
  return -0.5 * r.value * r.value - kLogSqrt2Pi + r.log_det;
}

void FlowModel::log_pdf(std::span<const double> b, std::span<double> out) const {
  if (out.size() != b.size()) throw Error(ErrorKind::InvalidParameter, "output size mismatch");
  std::vector<Geometry> geo;
  geo.reserve(layers_.size());
  for (const auto& layer : layers_) geo.emplace_back(layer, config_);
  const double log_beta = std::log(std::abs(beta_));
  for (std::size_t j = 0; j < b.size(); ++j) {
    double v = (b[j] - alpha_) / beta_;
    double log_det = -log_beta;
    for (std::size_t l = geo.size(); l-- > 0;) {
      auto r = geo[l].inverse(v, config_.tail_bound);
      v = r.value;
      log_det -= r.log_det;
    }
    out[j] = -0.5 * v * v - kLogSqrt2Pi + log_det;
  }
}

double FlowModel::log_pdf_gradient(std::span<const double> b, std::span<const double> weights,
                                   std::span<double> grad) const {
  if (grad.size() != parameter_count())
    throw Error(ErrorKind::InvalidParameter, "gradient buffer has the wrong length");
  if (!weights.empty() && weights.size() != b.size())
    throw Error(ErrorKind::InvalidParameter, "weights and points differ in length");
  std::fill(grad.begin(), grad.end(), 0.0);

  const std::size_t nl = layers_.size();
  const std::size_t k = config_.bins;
  const double bound = config_.tail_bound;
  std::vector<Geometry> geo;
  geo.reserve(nl);
  for (const auto& layer : layers_) geo.emplace_back(layer, config_);

  // Adjoints in knot space, per layer.
  struct KnotAdjoint {
    std::vector<double> xk, yk, w, h, d;
  };
  std::vector<KnotAdjoint> adj(nl, KnotAdjoint{std::vector<double>(k + 1, 0.0),
                                                std::vector<double>(k + 1, 0.0),
                                                std::vector<double>(k, 0.0),
                                                std::vector<double>(k, 0.0),
                                                std::vector<double>(k + 1, 0.0)});
  double alpha_bar = 0.0, beta_bar = 0.0, total = 0.0;
  const double log_beta = std::log(std::abs(beta_));

  std::vector<double> inputs(nl);
  std::vector<std::size_t> bins(nl);
  std::vector<char> inside(nl);
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double wt = weights.empty() ? 1.0 : weights[j];
    const double top = (b[j] - alpha_) / beta_;
    double v = top;
    double log_det = -log_beta;
    for (std::size_t l = nl; l-- > 0;) {
      std::size_t bin = 0;
      auto r = geo[l].inverse(v, bound, &bin);
      inside[l] = !(v < -bound || v > bound);
      bins[l] = bin;
      v = r.value;
      inputs[l] = v;
      log_det -= r.log_det;
    }
    total += wt * (-0.5 * v * v - kLogSqrt2Pi + log_det);
    if (wt == 0.0) continue;

    double ubar = -v * wt;  // d log N(z) / dz
    for (std::size_t l = 0; l < nl; ++l) {
      if (!inside[l]) continue;
      const Geometry& g = geo[l];
      const std::size_t bk = bins[l];
      using D = Dual<7>;
      auto r = rq_eval(D::variable(inputs[l], 0), D::variable(g.xk[bk], 1), D::variable(g.w[bk], 2),
                       D::variable(g.yk[bk], 3), D::variable(g.h[bk], 4), D::variable(g.d[bk], 5),
                       D::variable(g.d[bk + 1], 6));
      const double slope = r.slope.v;
      // -log g'(x) and x = g^{-1}(y; theta) by implicit differentiation.
      const double xbar = ubar - wt * r.slope.d[0] / slope;
      std::array<double, 7> tbar{};
      for (std::size_t i = 1; i < 7; ++i)
        tbar[i] = -wt * r.slope.d[i] / slope - xbar * r.y.d[i] / r.y.d[0];
      ubar = xbar / r.y.d[0];
      KnotAdjoint& a = adj[l];
      a.xk[bk] += tbar[1];
      a.w[bk] += tbar[2];
      a.yk[bk] += tbar[3];
      a.h[bk] += tbar[4];
      a.d[bk] += tbar[5];
      a.d[bk + 1] += tbar[6];
    }
    alpha_bar += -ubar / beta_;
    beta_bar += -ubar * top / beta_ - wt / beta_;
  }

  // Knot adjoints back to unconstrained parameters.
  const double span = 2.0 * bound;
  const double kw = span * (1.0 - static_cast<double>(k) * config_.min_bin_width);
  const double kh = span * (1.0 - static_cast<double>(k) * config_.min_bin_height);
  std::size_t off = 0;
  for (std::size_t l = 0; l < nl; ++l) {
    const Geometry& g = geo[l];
    KnotAdjoint& a = adj[l];
    // xk[i] = -B + sum_{m<i} w[m] for i < K; the last knot is pinned at B.
    double suffix_x = 0.0, suffix_y = 0.0;
    for (std::size_t i = k; i-- > 0;) {
      if (i + 1 < k) {
        suffix_x += a.xk[i + 1];
        suffix_y += a.yk[i + 1];
      }
      a.w[i] += suffix_x;
      a.h[i] += suffix_y;
    }
    double dot_w = 0.0, dot_h = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      dot_w += a.w[i] * g.sw[i];
      dot_h += a.h[i] * g.sh[i];
    }
    for (std::size_t i = 0; i < k; ++i) {
      grad[off + i] = kw * g.sw[i] * (a.w[i] - dot_w);
      grad[off + k + i] = kh * g.sh[i] * (a.h[i] - dot_h);
    }
    const auto& u = layers_[l].derivs;
    for (std::size_t i = 0; i + 1 < k; ++i) grad[off + 2 * k + i] = a.d[i + 1] * sigmoid(u[i]);
    off += 3 * k - 1;
  }
  grad[off] = alpha_bar;
  grad[off + 1] = beta_bar;
  return total;
}

std::string FlowModel::to_json() const {
  nlohmann::json j;
  j["format"] = "deconv-flow";
  j["version"] = kFlowFormatVersion;
  j["layers"] = config_.layers;
  j["bins"] = config_.bins;
  j["tail_bound"] = config_.tail_bound;
  j["min_bin_width"] = config_.min_bin_width;
  j["min_bin_height"] = config_.min_bin_height;
  j["min_derivative"] = config_.min_derivative;
  j["alpha"] = alpha_;
  j["beta"] = beta_;
  nlohmann::json spline = nlohmann::json::array();
  for (const auto& layer : layers_)
    spline.push_back({{"widths", layer.widths}, {"heights", layer.heights}, {"derivs", layer.derivs}});
  j["spline"] = std::move(spline);
  return j.dump(2);
}

FlowModel FlowModel::from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "deconv-flow")
      throw Error(ErrorKind::Config, "not a flow checkpoint");
    if (j.at("version").get<int>() != kFlowFormatVersion)
      throw Error(ErrorKind::Config, "unsupported flow checkpoint version");
    FlowConfig cfg;
    cfg.layers = j.at("layers").get<std::size_t>();
    cfg.bins = j.at("bins").get<std::size_t>();
    cfg.tail_bound = j.at("tail_bound").get<double>();
    cfg.min_bin_width = j.at("min_bin_width").get<double>();
    cfg.min_bin_height = j.at("min_bin_height").get<double>();
    cfg.min_derivative = j.at("min_derivative").get<double>();
    FlowModel model(cfg, j.at("alpha").get<double>(), j.at("beta").get<double>());
    const auto& spline = j.at("spline");
    if (spline.size() != cfg.layers) throw Error(ErrorKind::Config, "layer count mismatch");
    for (std::size_t l = 0; l < cfg.layers; ++l) {
      SplineLayer layer{spline[l].at("widths").get<std::vector<double>>(),
                        spline[l].at("heights").get<std::vector<double>>(),
                        spline[l].at("derivs").get<std::vector<double>>()};
      if (layer.widths.size() != cfg.bins || layer.heights.size() != cfg.bins ||
          layer.derivs.size() + 1 != cfg.bins)
        throw Error(ErrorKind::Config, "spline layer has the wrong shape");
      model.layers_[l] = std::move(layer);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config, std::string("malformed flow checkpoint: ") + e.what());
  }
}

std::vector<double> grad_log_pdf(const FlowModel& model, std::span<const double> b) {
  std::vector<double> g(model.parameter_count());
  model.log_pdf_gradient(b, {}, g);
  return g;
}

}  // namespace deconv
