#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "deconv/error.hpp"
#include "deconv/train.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace deconv;

namespace {

void check_loss_gradient(const NfLoss& loss, const FlowModel& model) {
  std::vector<double> grad(model.parameter_count());
  const double v = loss.value_and_gradient(model, grad);
  CHECK(v == doctest::Approx(loss.value(model)).epsilon(1e-12));
  const auto p0 = model.parameters();
  for (std::size_t j = 0; j < p0.size(); ++j) {
    const auto f = [&](double t) {
      auto p = p0;
      p[j] = t;
      FlowModel q = model;
      q.set_parameters(p);
      return loss.value(q);
    };
    const double fd = oracle::central_diff(f, p0[j], 1e-5);
    CAPTURE(j);
    CHECK(std::abs(grad[j] - fd) <= 1e-4 * std::max(std::abs(fd), 1e-2));
  }
}

}  // namespace

TEST_CASE("init_head") {
  const NoiseModel noise(ScalarDist::gaussian(10, 1));
  const std::vector<double> data{19 - std::sqrt(10.0), 19 + std::sqrt(10.0)};
  const auto h = init_head(data, noise);
  CHECK(h.alpha == doctest::Approx(9).epsilon(1e-14));
  CHECK(h.beta * h.beta == doctest::Approx(9).epsilon(1e-13));

  const NoiseModel wide(ScalarDist::gaussian(10, 100));
  const std::vector<double> narrow{18, 20};
  const auto f = init_head(narrow, wide);
  CHECK(f.beta * f.beta == doctest::Approx(0.0625).epsilon(1e-14));
  CHECK(f.beta > 0);
}

TEST_CASE("nf_loss near-delta noise") {
  const NoiseModel delta(ScalarDist::gaussian(10, 1e-12));
  const std::vector<double> data{19.0};
  const auto grid = build_grid(9 - 8e-6, 9 + 8e-6, 2000);
  const FlowModel identity(FlowConfig{}, 9, 3);
  CHECK(std::abs(nf_loss(identity, data, delta, grid) + identity.log_pdf(9)) < 1e-3);
  Rng rng(2);
  FlowModel m(FlowConfig{}, 8, 2);
  auto p = m.parameters();
  for (std::size_t i = 0; i + 2 < p.size(); ++i) p[i] = rng.normal();
  m.set_parameters(p);
  CHECK(std::abs(nf_loss(m, data, delta, grid) + m.log_pdf(9)) < 1e-3);
}

TEST_CASE("nf_loss of the identity model is a Gaussian convolution") {
  const auto data = fixture::reference_data();
  const auto& noise = fixture::reference_noise();
  const auto grid = nf_grid(data, noise);
  const FlowModel m(FlowConfig{}, 9, 3);
  double expected = 0;
  for (double x : data) expected -= oracle::gaussian_log_pdf(x, 19, 10);
  expected /= data.size();
  const double loss = nf_loss(m, data, noise, grid);
  CHECK(std::isfinite(loss));
  CHECK(std::abs(loss - expected) < 2e-3);
}

TEST_CASE("NfLoss agrees with the reference loss") {
  const auto data = fixture::reference_data(DataModel::Sum, 200);
  const auto& noise = fixture::reference_noise();
  const auto grid = nf_grid(data, noise);
  const NfLoss loss(data, noise, grid);
  Rng rng(6);
  FlowModel m(FlowConfig{}, 9, 3);
  auto p = m.parameters();
  for (std::size_t i = 0; i + 2 < p.size(); ++i) p[i] = 0.5 * rng.normal();
  m.set_parameters(p);
  CHECK(std::abs(loss.value(m) - nf_loss(m, data, noise, grid)) < 1e-9);
}

TEST_CASE("nf_loss gradient at initialization and after training") {
  const auto data = fixture::reference_data(DataModel::Sum, 200);
  const auto& noise = fixture::reference_noise();
  const NfLoss loss(data, noise, nf_grid(data, noise));
  const auto head = init_head(data, noise);
  check_loss_gradient(loss, FlowModel(FlowConfig{}, head.alpha, head.beta));

  TrainConfig cfg;
  cfg.steps = 100;
  check_loss_gradient(loss, fit_nf(data, noise, cfg).model);
}

TEST_CASE("fit_nf") {
  const auto data = fixture::reference_data(DataModel::Sum, 300);
  const auto& noise = fixture::reference_noise();
  TrainConfig cfg;
  cfg.steps = 0;
  const auto zero = fit_nf(data, noise, cfg);
  const auto head = init_head(data, noise);
  CHECK(zero.best_step == 0);
  CHECK(zero.best_loss == zero.initial_loss);
  for (double b : {2.0, 9.0, 15.0}) {
    CHECK(std::abs(zero.model.log_pdf(b) - oracle::gaussian_log_pdf(b, head.alpha, head.beta * head.beta)) < 1e-9);
  }

  cfg.steps = 60;
  const auto a = fit_nf(data, noise, cfg), b = fit_nf(data, noise, cfg);
  CHECK(a.best_loss < a.initial_loss);
  CHECK(a.steps_run == 60);
  CHECK(a.model.parameters() == b.model.parameters());
  CHECK(a.best_loss == b.best_loss);
  CHECK(std::abs(nf_loss(a.model, data, noise, a.grid) - a.best_loss) < 1e-9);

  const double lo = a.model.forward(-10).value, hi = a.model.forward(10).value;
  double integral = oracle::trapezoid([&](double v) { return std::exp(a.model.log_pdf(v)); }, lo, hi, 100000);
  CHECK(std::abs(integral - 1) < 1e-2);
}

TEST_CASE("fit_nf patience") {
  const auto data = fixture::reference_data(DataModel::Sum, 100);
  TrainConfig cfg;
  cfg.steps = 400;
  cfg.lr = 0.5;
  cfg.patience = 3;
  const auto r = fit_nf(data, fixture::reference_noise(), cfg);
  CHECK(r.steps_run <= 400);
  CHECK(r.steps_run <= r.best_step + 3);
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.m = 1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.lr = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("fit_nf_product") {
  const auto data = fixture::reference_data(DataModel::Product, 300);
  const auto& noise = fixture::reference_noise();
  TrainConfig cfg;
  cfg.steps = 100;
  const auto r = fit_nf_product(data, noise, cfg);
  const double bmax = 60;
  const double integral =
      oracle::trapezoid([&](double b) { return b <= 0 ? 0.0 : std::exp(r.density.log_pdf(b)); }, 0, bmax, 200000);
  CHECK(std::abs(integral - 1) < 1e-2);
  CHECK(r.density.log_pdf(9) == doctest::Approx(r.log_fit.model.log_pdf(std::log(9.0)) - std::log(9.0)));

  auto bad = data;
  bad[5] = -1;
  try {
    fit_nf_product(bad, noise, cfg);
    FAIL("accepted negative data");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveData);
  }
  try {
    fit_nf_product(data, NoiseModel(ScalarDist::gaussian(0, 1)), cfg);
    FAIL("accepted noise with negative support");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NonPositiveSupport);
  }
}
