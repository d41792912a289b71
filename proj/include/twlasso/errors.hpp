#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace twlasso {

/// Root of every error raised by the library. Carries a short category tag
/// so the CLI can map failures onto exit codes without RTTI chains.
class Error : public std::runtime_error {
 public:
  Error(std::string category, const std::string& what)
      : std::runtime_error(what), category_(std::move(category)) {}
  const std::string& category() const noexcept { return category_; }

 private:
  std::string category_;
};

/// NaN/Inf or malformed numeric input.
struct InputError : Error {
  explicit InputError(const std::string& w) : Error("input", w) {}
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};

/// Invalid user configuration (bad key, infeasible fold scheme, ...).
struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error("config", w) {}
};

struct ParseError : Error {
  ParseError(const std::string& w, std::size_t line, std::size_t column)
      : Error("parse", w), line(line), column(column) {}
  std::size_t line;
  std::size_t column;
};

struct UnbalancedPanelError : Error {
  UnbalancedPanelError(const std::string& w,
                       std::vector<std::pair<std::string, std::string>> missing)
      : Error("unbalanced", w), missing(std::move(missing)) {}
  /// (unit, time) labels absent from the file.
  std::vector<std::pair<std::string, std::string>> missing;
};

struct DuplicateKeyError : Error {
  DuplicateKeyError(const std::string& w, std::string unit, std::string time)
      : Error("duplicate", w), unit(std::move(unit)), time(std::move(time)) {}
  std::string unit;
  std::string time;
};

struct SizeError : Error {
  explicit SizeError(const std::string& w) : Error("size", w) {}
};

/// A cross-fitting sample that cannot be formed (e.g. empty auxiliary set).
struct StructuralError : Error {
  explicit StructuralError(const std::string& w) : Error("structural", w) {}
};

/// The moment Jacobian is numerically singular.
struct IdentificationError : Error {
  explicit IdentificationError(const std::string& w) : Error("identification", w) {}
};

/// A first-stage fit is unusable (singular design, oversized selection).
struct EstimationError : Error {
  explicit EstimationError(const std::string& w) : Error("estimation", w) {}
};

/// First-stage estimation failed on a specific fold pair.
struct FoldError : Error {
  FoldError(const std::string& w, int k, int l) : Error("fold", w), k(k), l(l) {}
  int k;
  int l;
};

}  // namespace twlasso
