// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// C interface to the nframes engine. All handles are opaque. Functions return
// NF_OK on success and one of the error codes otherwise; nf_last_error() then
// holds a message for the calling thread.

#ifndef NFRAMES_NFRAMES_H_
#define NFRAMES_NFRAMES_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(NFRAMES_BUILDING_LIBRARY)
#define NF_API __declspec(dllexport)
#else
#define NF_API __declspec(dllimport)
#endif
#else
#define NF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

enum {
  NF_OK = 0,
  NF_FAIL = 1,
  NF_INPUT_ERROR = 2,
  NF_INTERNAL_ERROR = 3
};

typedef struct nf_report nf_report;
typedef struct nf_expr nf_expr;
typedef struct nf_connection nf_connection;

typedef struct nf_options {
  const char* config_path;  // read the config from this file, or
  const char* config_json;  // use this JSON text when config_path is NULL
  double tol;
  int has_tol;
  int grid;  // 0 keeps the config value
  double step;  // 0 keeps the config value
  uint64_t seed;
  int has_seed;
  int timing;
} nf_options;

NF_API const char* nf_version(void);
NF_API const char* nf_last_error(void);

NF_API void nf_options_init(nf_options* options);
NF_API int nf_command_count(void);
NF_API const char* nf_command_name(int index);

// Runs a command and returns its exit code (0, 1 or 2), or NF_INTERNAL_ERROR
// when no report could be produced. On exit codes 0 to 2 *out owns a report.
NF_API int nf_run(const char* command, const nf_options* options, nf_report** out);
NF_API int nf_report_exit_code(const nf_report* report);
NF_API const char* nf_report_text(const nf_report* report);
NF_API const char* nf_report_json(const nf_report* report);
NF_API void nf_report_destroy(nf_report* report);

// Expressions over named variables.
NF_API int nf_expr_parse(const char* text, const char* const* variables, int count, nf_expr** out);
NF_API int nf_expr_variable_count(const nf_expr* expr);
NF_API int nf_expr_eval(const nf_expr* expr, const double* x, double* out);
NF_API int nf_expr_derivative(const nf_expr* expr, const double* x, int i, double* out);
NF_API int nf_expr_second_derivative(const nf_expr* expr, const double* x, int i, int j, double* out);
NF_API int nf_expr_differentiate(const nf_expr* expr, int i, nf_expr** out);
NF_API const char* nf_expr_to_string(const nf_expr* expr);
NF_API void nf_expr_destroy(nf_expr* expr);

// Connection coefficients Gamma^a_mu as r rows of n expressions over
// u1..u{n+r}, given row-major in entries.
NF_API int nf_connection_create(int n, int r, const char* const* entries, const double* lo, const double* hi,
                                nf_connection** out);
// out receives R^a_{mu nu} at index (a * n + mu) * n + nu.
NF_API int nf_connection_curvature(const nf_connection* conn, const double* u, double* out);
// Coefficients in coordinates ut = change(u), n + r component strings; out is
// r x n row-major.
NF_API int nf_connection_transform(const nf_connection* conn, const char* const* change, const double* u,
                                   double* out);
NF_API void nf_connection_destroy(nf_connection* conn);

#ifdef __cplusplus
}
#endif

#endif  // NFRAMES_NFRAMES_H_
