// Copyright 2026 The nframes Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nframes {

enum class ErrorCode {
  Syntax,
  UnknownVariable,
  Domain,
  Degenerate,
  FibreStructure,
  FibreConstancy,
  VerticalTangent,
  RankDeficient,
  Inversion,
  EmptyWindow,
  DetCollapse,
  PathDependence,
  InsufficientSamples,
  Config,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message) : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline constexpr std::size_t kNoOffset = static_cast<std::size_t>(-1);

class ParseError : public Error {
 public:
  ParseError(ErrorCode code, const std::string& message, std::size_t offset,
             std::vector<std::string> expected = {})
      : Error(code, message), offset_(offset), expected_(std::move(expected)) {}
  std::size_t offset() const { return offset_; }
  const std::vector<std::string>& expected() const { return expected_; }

 private:
  std::size_t offset_;
  std::vector<std::string> expected_;
};

// Raised by evaluation. offset/length locate the failing sub-expression in the
// source text when the tree came from the parser; point is filled in by callers
// that know where the expression was being evaluated.
class DomainError : public Error {
 public:
  DomainError(const std::string& what, std::size_t offset, std::size_t length)
      : Error(ErrorCode::Domain, what), reason_(what), offset_(offset), length_(length) {}
  DomainError(const DomainError& base, std::vector<double> point);

  const std::string& reason() const { return reason_; }
  std::size_t offset() const { return offset_; }
  std::size_t length() const { return length_; }
  const std::vector<double>& point() const { return point_; }

 private:
  std::string reason_;
  std::size_t offset_;
  std::size_t length_;
  std::vector<double> point_;
};

class DegenerateError : public Error {
 public:
  DegenerateError(const std::string& what, double condition)
      : Error(ErrorCode::Degenerate, what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

std::string format_point(const std::vector<double>& p);

}  // namespace nframes
