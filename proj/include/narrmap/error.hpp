// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace narrmap {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument or parameter does not hold.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A corpus file record could not be parsed. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Data failed validation (corpus invariants, label vectors, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An interaction or ledger contradicts constraints already recorded.
class ContradictionError : public Error {
 public:
  using Error::Error;
};

/// The extraction LP has no feasible point; `diagnostics()` lists the
/// constraints most likely responsible.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, std::vector<std::string> diagnostics)
      : Error(what), diagnostics_(std::move(diagnostics)) {}
  const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

/// Lookup of an unknown id (document, session, dataset).
class NotFoundError : public Error {
 public:
  using Error::Error;
};

/// Snapshot file is corrupt, truncated or of an unsupported version.
class SnapshotError : public Error {
 public:
  using Error::Error;
};

}  // namespace narrmap
