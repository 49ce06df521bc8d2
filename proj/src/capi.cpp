// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#include "nframes/nframes.h"

#include <exception>
#include <memory>
#include <string>
#include <vector>

#include "nframes/connection.hpp"
#include "nframes/engine.hpp"
#include "nframes/expr.hpp"

struct nf_report {
  int exit_code = 0;
  std::string text;
  std::string json;
};

struct nf_expr {
  nframes::Expression expr;
  std::string text;
};

struct nf_connection {
  nframes::ConnectionCoefficients gamma;
};

namespace {

thread_local std::string last_error;

int set_error(int code, const std::string& message) {
  last_error = message;
  return code;
}

// Runs body and maps exceptions onto C error codes.
template <class F>
int guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const nframes::ParseError& e) {
    return set_error(NF_INPUT_ERROR, e.what());
  } catch (const nframes::DomainError& e) {
    return set_error(NF_INPUT_ERROR, e.what());
  } catch (const nframes::Error& e) {
    return set_error(NF_FAIL, e.what());
  } catch (const std::bad_alloc&) {
    return set_error(NF_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return set_error(NF_INTERNAL_ERROR, e.what());
  } catch (...) {
    return set_error(NF_INTERNAL_ERROR, "unknown exception");
  }
}

int null_argument(const char* name) { return set_error(NF_INPUT_ERROR, std::string(name) + " must not be null"); }

std::span<const double> span_of(const nf_expr* e, const double* x) {
  return {x, e->expr.variables()->size()};
}

}  // namespace

extern "C" {

const char* nf_version(void) { return "1.0.0"; }

const char* nf_last_error(void) { return last_error.c_str(); }

void nf_options_init(nf_options* options) {
  if (options) *options = nf_options{};
}

int nf_command_count(void) { return static_cast<int>(nframes::commands().size()); }

const char* nf_command_name(int index) {
  const auto& names = nframes::commands();
  if (index < 0 || index >= static_cast<int>(names.size())) return nullptr;
  return names[static_cast<std::size_t>(index)].c_str();
}

int nf_run(const char* command, const nf_options* options, nf_report** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!command) return null_argument("command");
  if (!options) return null_argument("options");
  if (!options->config_path && !options->config_json) return null_argument("config_path and config_json");
  return guarded([&]() -> int {
    nframes::RunOptions ro;
    if (options->has_tol) ro.tol = options->tol;
    if (options->grid != 0) ro.grid = options->grid;
    if (options->step != 0.0) ro.step = options->step;
    if (options->has_seed) ro.seed = options->seed;
    ro.timing = options->timing != 0;
    const nframes::Report rep = options->config_path ? nframes::run_file(command, options->config_path, ro)
                                                     : nframes::run_text(command, options->config_json, ro);
    auto report = std::make_unique<nf_report>();
    report->exit_code = rep.exit_code;
    report->text = rep.text;
    report->json = rep.machine();
    if (rep.doc.contains("error")) last_error = rep.doc["error"].value("message", "");
    *out = report.release();
    return rep.exit_code;
  });
}

int nf_report_exit_code(const nf_report* report) { return report ? report->exit_code : NF_INTERNAL_ERROR; }

const char* nf_report_text(const nf_report* report) { return report ? report->text.c_str() : ""; }

const char* nf_report_json(const nf_report* report) { return report ? report->json.c_str() : ""; }

void nf_report_destroy(nf_report* report) { delete report; }

int nf_expr_parse(const char* text, const char* const* variables, int count, nf_expr** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!text) return null_argument("text");
  if (count < 0 || (count > 0 && !variables)) return null_argument("variables");
  return guarded([&]() -> int {
    std::vector<std::string> names;
    for (int i = 0; i < count; ++i) {
      if (!variables[i]) return null_argument("variable name");
      names.emplace_back(variables[i]);
    }
    auto e = std::make_unique<nf_expr>();
    e->expr = nframes::Expression::parse(text, nframes::make_variables(std::move(names)));
    e->text = e->expr.to_string();
    *out = e.release();
    return NF_OK;
  });
}

int nf_expr_variable_count(const nf_expr* expr) {
  return expr ? static_cast<int>(expr->expr.variables()->size()) : 0;
}

int nf_expr_eval(const nf_expr* expr, const double* x, double* out) {
  if (!expr || !out) return null_argument("expr and out");
  if (!x && nf_expr_variable_count(expr) > 0) return null_argument("x");
  return guarded([&]() -> int {
    *out = expr->expr(span_of(expr, x));
    return NF_OK;
  });
}

int nf_expr_derivative(const nf_expr* expr, const double* x, int i, double* out) {
  if (!expr || !x || !out) return null_argument("expr, x and out");
  if (i < 0 || i >= nf_expr_variable_count(expr)) return set_error(NF_INPUT_ERROR, "variable index out of range");
  return guarded([&]() -> int {
    *out = nframes::derive1(expr->expr, span_of(expr, x), static_cast<std::size_t>(i));
    return NF_OK;
  });
}

int nf_expr_second_derivative(const nf_expr* expr, const double* x, int i, int j, double* out) {
  if (!expr || !x || !out) return null_argument("expr, x and out");
  const int n = nf_expr_variable_count(expr);
  if (i < 0 || i >= n || j < 0 || j >= n) return set_error(NF_INPUT_ERROR, "variable index out of range");
  return guarded([&]() -> int {
    *out = nframes::derive2(expr->expr, span_of(expr, x), static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return NF_OK;
  });
}

int nf_expr_differentiate(const nf_expr* expr, int i, nf_expr** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (!expr) return null_argument("expr");
  if (i < 0 || i >= nf_expr_variable_count(expr)) return set_error(NF_INPUT_ERROR, "variable index out of range");
  return guarded([&]() -> int {
    auto e = std::make_unique<nf_expr>();
    e->expr = nframes::differentiate(expr->expr, i);
    e->text = e->expr.to_string();
    *out = e.release();
    return NF_OK;
  });
}

const char* nf_expr_to_string(const nf_expr* expr) { return expr ? expr->text.c_str() : ""; }

void nf_expr_destroy(nf_expr* expr) { delete expr; }

int nf_connection_create(int n, int r, const char* const* entries, const double* lo, const double* hi,
                         nf_connection** out) {
  if (!out) return null_argument("out");
  *out = nullptr;
  if (n < 1 || r < 1) return set_error(NF_INPUT_ERROR, "n and r must be positive");
  if (!entries || !lo || !hi) return null_argument("entries, lo and hi");
  return guarded([&]() -> int {
    const nframes::BundleShape shape{n, r};
    std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(r));
    for (int a = 0; a < r; ++a)
      for (int mu = 0; mu < n; ++mu) {
        const char* s = entries[a * n + mu];
        if (!s) return null_argument("entry");
        rows[static_cast<std::size_t>(a)].emplace_back(s);
      }
    nframes::Box box{nframes::Point(lo, lo + n + r), nframes::Point(hi, hi + n + r)};
    box.validate();
    auto c = std::make_unique<nf_connection>();
    c->gamma = nframes::ConnectionCoefficients::parse(shape, rows, std::move(box));
    *out = c.release();
    return NF_OK;
  });
}

int nf_connection_curvature(const nf_connection* conn, const double* u, double* out) {
  if (!conn || !u || !out) return null_argument("conn, u and out");
  return guarded([&]() -> int {
    const auto& shape = conn->gamma.shape();
    const nframes::CurvatureComponents c =
        nframes::curvature(conn->gamma, std::span<const double>(u, static_cast<std::size_t>(shape.dim())));
    for (int a = 0; a < shape.r; ++a)
      for (int mu = 0; mu < shape.n; ++mu)
        for (int nu = 0; nu < shape.n; ++nu) out[(a * shape.n + mu) * shape.n + nu] = c(a, mu, nu);
    return NF_OK;
  });
}

int nf_connection_transform(const nf_connection* conn, const char* const* change, const double* u, double* out) {
  if (!conn || !change || !u || !out) return null_argument("conn, change, u and out");
  return guarded([&]() -> int {
    const auto& shape = conn->gamma.shape();
    std::vector<std::string> comps;
    for (int i = 0; i < shape.dim(); ++i) {
      if (!change[i]) return null_argument("change component");
      comps.emplace_back(change[i]);
    }
    const auto cc = nframes::CoordinateChange::parse(shape, comps);
    const nframes::Matrix g = nframes::transform_coefficients(
        conn->gamma, cc, std::span<const double>(u, static_cast<std::size_t>(shape.dim())));
    for (int a = 0; a < shape.r; ++a)
      for (int mu = 0; mu < shape.n; ++mu) out[a * shape.n + mu] = g(a, mu);
    return NF_OK;
  });
}

void nf_connection_destroy(nf_connection* conn) { delete conn; }

}  // extern "C"
