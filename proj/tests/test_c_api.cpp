#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

#include "deconv/deconv.h"

TEST_CASE("version and error state") {
  CHECK(std::strlen(dcv_version()) > 0);
  dcv_noise* noise = nullptr;
  CHECK(dcv_noise_create(DCV_NOISE_GAUSSIAN, 0, -1, &noise) == DCV_ERR_CONFIG);
  CHECK(noise == nullptr);
  CHECK(std::string(dcv_last_error_name()) == "InvalidParameter");
  CHECK(std::string(dcv_last_error()).find("InvalidParameter") != std::string::npos);
  CHECK(dcv_noise_create(DCV_NOISE_GAUSSIAN, 10, 1, nullptr) == DCV_ERR_ARGUMENT);
  CHECK(dcv_noise_create(DCV_NOISE_GAUSSIAN, 10, 1, &noise) == DCV_OK);
  CHECK(std::string(dcv_last_error()).empty());
  dcv_noise_destroy(noise);
  dcv_noise_destroy(nullptr);
}

TEST_CASE("noise, generation and SNR") {
  dcv_noise* noise = nullptr;
  REQUIRE(dcv_noise_create(DCV_NOISE_GAUSSIAN, 10, 1, &noise) == DCV_OK);
  double lp = 0;
  CHECK(dcv_noise_log_pdf(noise, 10, &lp) == DCV_OK);
  CHECK(lp == doctest::Approx(-0.9189385332046727));

  std::vector<double> a(5), b(5);
  CHECK(dcv_generate(DCV_MODE_SUM, 9, 1, noise, a.size(), 3, a.data()) == DCV_OK);
  CHECK(dcv_generate(DCV_MODE_SUM, 9, 1, noise, b.size(), 3, b.data()) == DCV_OK);
  CHECK(a == b);
  CHECK(dcv_generate(DCV_MODE_SUM, -9, 1, noise, b.size(), 3, b.data()) == DCV_ERR_CONFIG);
  CHECK(dcv_generate(static_cast<dcv_mode>(7), 9, 1, noise, b.size(), 3, b.data()) == DCV_ERR_CONFIG);

  double s = 0, alpha = 0;
  CHECK(dcv_snr(DCV_MODE_PRODUCT, 9, 1, noise, &s) == DCV_OK);
  CHECK(s == doctest::Approx(100.0 / 9.0));
  CHECK(dcv_alpha_for_snr(s, DCV_MODE_PRODUCT, noise, 1, &alpha) == DCV_OK);
  CHECK(alpha == doctest::Approx(9));
  dcv_noise_destroy(noise);
}

TEST_CASE("fit handle") {
  dcv_noise* noise = nullptr;
  REQUIRE(dcv_noise_create(DCV_NOISE_GAUSSIAN, 10, 1, &noise) == DCV_OK);
  std::vector<double> x(300);
  REQUIRE(dcv_generate(DCV_MODE_SUM, 9, 1, noise, x.size(), 1, x.data()) == DCV_OK);

  dcv_fit* fit = nullptr;
  CHECK(dcv_fit_create("nf", R"({"nf": {"steps": 20}})", x.data(), x.size(), noise, DCV_MODE_SUM, 2, &fit) == DCV_OK);
  REQUIRE(fit != nullptr);
  REQUIRE(dcv_fit_curve_count(fit) == 1);
  CHECK(std::string(dcv_fit_curve_name(fit, 0)) == "nf");
  CHECK(dcv_fit_curve_name(fit, 1) == nullptr);
  const double pts[3] = {5, 9, 13};
  double out[3];
  CHECK(dcv_fit_log_density(fit, "nf", pts, 3, out) == DCV_OK);
  for (double v : out) CHECK(std::isfinite(v));
  CHECK(dcv_fit_log_density(fit, "map", pts, 3, out) == DCV_ERR_CONFIG);
  CHECK(std::string(dcv_fit_summary(fit)).find("best_step") != std::string::npos);
  double kl = -1;
  int clamped = -1;
  CHECK(dcv_fit_kl_gamma(fit, "nf", 9, 1, 4000, &kl, &clamped) == DCV_OK);
  CHECK(kl > 0);
  CHECK(kl < 1);
  CHECK(clamped == 0);
  dcv_fit_destroy(fit);

  dcv_fit* bad = nullptr;
  CHECK(dcv_fit_create("nf", R"({"nf": {"stepz": 20}})", x.data(), x.size(), noise, DCV_MODE_SUM, 2, &bad) == DCV_ERR_CONFIG);
  CHECK(std::string(dcv_last_error_name()) == "ConfigError");
  CHECK(bad == nullptr);
  CHECK(dcv_fit_create("svm", nullptr, x.data(), x.size(), noise, DCV_MODE_SUM, 2, &bad) == DCV_ERR_CONFIG);
  x[4] = -2;
  CHECK(dcv_fit_create("nf", R"({"nf": {"steps": 1}})", x.data(), x.size(), noise, DCV_MODE_PRODUCT, 2, &bad) ==
        DCV_ERR_NUMERICAL);
  CHECK(std::string(dcv_last_error_name()) == "NonPositiveData");
  dcv_noise_destroy(noise);
}

TEST_CASE("commands") {
  dcv_cmd_options opts{};
  CHECK(dcv_cmd_generate(nullptr) == DCV_ERR_ARGUMENT);
  opts.config_path = "/nonexistent/config.json";
  CHECK(dcv_cmd_generate(&opts) == DCV_ERR_IO);
  CHECK(std::string(dcv_last_error_name()) == "IoError");
}
