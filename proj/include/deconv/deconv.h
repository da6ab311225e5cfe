#ifndef DECONV_DECONV_H
#define DECONV_DECONV_H

#include <stddef.h>
#include <stdint.h>

#if defined(DCV_BUILDING_LIBRARY)
#define DCV_API __attribute__((visibility("default")))
#else
#define DCV_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes. */
typedef enum dcv_status {
  DCV_OK = 0,
  DCV_ERR_ARGUMENT = 1,  /* null handle or buffer, internal failure */
  DCV_ERR_CONFIG = 2,    /* invalid parameter or configuration */
  DCV_ERR_IO = 3,
  DCV_ERR_NUMERICAL = 4
} dcv_status;

typedef enum dcv_mode { DCV_MODE_SUM = 0, DCV_MODE_PRODUCT = 1 } dcv_mode;

typedef enum dcv_noise_kind {
  DCV_NOISE_GAUSSIAN = 0,     /* p1 = mean, p2 = variance */
  DCV_NOISE_GAMMA = 1,        /* p1 = shape, p2 = rate */
  DCV_NOISE_LOG_GAUSSIAN = 2  /* p1 = log-mean, p2 = log-variance */
} dcv_noise_kind;

typedef struct dcv_noise dcv_noise;
typedef struct dcv_fit dcv_fit;

DCV_API const char* dcv_version(void);

/* Message and error name of the last failure on the calling thread. */
DCV_API const char* dcv_last_error(void);
DCV_API const char* dcv_last_error_name(void);

DCV_API dcv_status dcv_noise_create(dcv_noise_kind kind, double p1, double p2, dcv_noise** out);
DCV_API void dcv_noise_destroy(dcv_noise* noise);
DCV_API dcv_status dcv_noise_log_pdf(const dcv_noise* noise, double a, double* out);

/* n observations of a + b or a * b with b ~ Gamma(shape, rate). */
DCV_API dcv_status dcv_generate(dcv_mode mode, double shape, double rate, const dcv_noise* noise,
                                size_t n, uint64_t seed, double* out);
DCV_API dcv_status dcv_snr(dcv_mode mode, double shape, double rate, const dcv_noise* noise,
                           double* out);
DCV_API dcv_status dcv_alpha_for_snr(double target, dcv_mode mode, const dcv_noise* noise,
                                     double rate, double* out);

/* method: "known", "gmm" or "nf". config_json uses the configuration file schema and may
   be NULL for defaults. */
DCV_API dcv_status dcv_fit_create(const char* method, const char* config_json, const double* data,
                                  size_t n, const dcv_noise* noise, dcv_mode mode, uint64_t seed,
                                  dcv_fit** out);
DCV_API void dcv_fit_destroy(dcv_fit* fit);
DCV_API size_t dcv_fit_curve_count(const dcv_fit* fit);
DCV_API const char* dcv_fit_curve_name(const dcv_fit* fit, size_t index);
/* Log-density of a named curve at n points. */
DCV_API dcv_status dcv_fit_log_density(const dcv_fit* fit, const char* curve, const double* b,
                                       size_t n, double* out);
/* Fit summary as a JSON document; owned by the handle. */
DCV_API const char* dcv_fit_summary(const dcv_fit* fit);

/* KL(Gamma(shape, rate) || curve) on m equally spaced points between the 1e-9 and
   1 - 1e-9 quantiles of the Gamma. clamped may be NULL. */
DCV_API dcv_status dcv_fit_kl_gamma(const dcv_fit* fit, const char* curve, double shape,
                                    double rate, size_t m, double* kl, int* clamped);

typedef struct dcv_cmd_options {
  const char* config_path;  /* NULL: defaults */
  const char* out_dir;      /* NULL: current directory */
  const char* method;       /* fit */
  const char* data_path;    /* fit */
  const char* density_path; /* eval */
  const char* curve;        /* eval; NULL evaluates every curve */
  uint64_t seed;
  int has_seed;
  size_t jobs;
  int timing;
} dcv_cmd_options;

DCV_API dcv_status dcv_cmd_generate(const dcv_cmd_options* opts);
DCV_API dcv_status dcv_cmd_fit(const dcv_cmd_options* opts);
DCV_API dcv_status dcv_cmd_eval(const dcv_cmd_options* opts);
DCV_API dcv_status dcv_cmd_benchmark(const dcv_cmd_options* opts);

#ifdef __cplusplus
}
#endif

#endif
