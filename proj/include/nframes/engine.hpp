// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0
//
// Config-driven command dispatch. A run never throws: every failure becomes a
// report with an exit code (0 pass or constructed, 1 obstruction or failed
// verification, 2 input error).

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "nframes/connection.hpp"
#include "nframes/vector_bundle.hpp"

namespace nframes {

inline constexpr int kExitPass = 0;
inline constexpr int kExitFail = 1;
inline constexpr int kExitInput = 2;

struct RunOptions {
  std::optional<double> tol;
  std::optional<int> grid;
  std::optional<double> step;
  std::optional<std::uint64_t> seed;
  bool timing = false;
};

struct Report {
  int exit_code = kExitPass;
  nlohmann::ordered_json doc;
  std::string text;

  std::string machine() const { return doc.dump(2) + "\n"; }
};

const std::vector<std::string>& commands();

// Config errors carry the JSON pointer of the offending field.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& pointer, const std::string& message, ErrorCode code = ErrorCode::Config)
      : Error(code, (pointer.empty() ? std::string("/") : pointer) + ": " + message), pointer_(pointer) {}
  const std::string& pointer() const { return pointer_; }

 private:
  std::string pointer_;
};

struct Tolerances {
  double normal = 1e-6;
  double integrability = 1e-8;
  double flat = 1e-10;
  double point = 1e-10;
  double parallel = 1e-7;
  double equivalence = 1e-9;
};

struct Numerics {
  double ode_step = 1e-3;
  double quad_step = 1e-3;
  int grid = 21;
  int samples = 5;  // grid nodes per axis for domain sampling
  int random_samples = 20;
};

struct EngineConfig {
  BundleShape shape;
  Box domain;
  std::optional<ConnectionCoefficients> gamma;
  std::optional<ThreeIndexCoefficients> gamma3;
  Tolerances tol;
  Numerics num;
  std::uint64_t seed = 1;
  nlohmann::json raw;
};

EngineConfig parse_config(const nlohmann::json& doc, const RunOptions& options = {});

Report run(const std::string& command, const nlohmann::json& config, const RunOptions& options = {});
Report run_text(const std::string& command, const std::string& config_text, const RunOptions& options = {});
Report run_file(const std::string& command, const std::string& path, const RunOptions& options = {});

}  // namespace nframes
