#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace blockcorr {

enum class ErrorKind {
  InvalidArgument,
  Parse,
  Dimension,
  NotBlockStructured,
  NotPositiveDefinite,
  NotAdmissible,
  RankTooSmall,
  NoConvergence,
  ZeroVariance,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Dimension: return "DimensionMismatch";
    case ErrorKind::NotBlockStructured: return "NotBlockStructured";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::NotAdmissible: return "NotAdmissible";
    case ErrorKind::RankTooSmall: return "RankTooSmall";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::ZeroVariance: return "ZeroVariance";
  }
  return "Unknown";
}

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what) : Error(ErrorKind::InvalidArgument, what) {}
};

class DimensionMismatch : public Error {
 public:
  explicit DimensionMismatch(const std::string& what) : Error(ErrorKind::Dimension, what) {}
};

/// Malformed text input. Line and column are 1-based; 0 means unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column, const std::string& what)
      : Error(ErrorKind::Parse, location(source, line, column) + ": " + what), line_(line), column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  static std::string location(const std::string& source, std::size_t line, std::size_t column) {
    if (line == 0) return source;
    return source + ":" + std::to_string(line) + (column == 0 ? "" : ":" + std::to_string(column));
  }

  std::size_t line_;
  std::size_t column_;
};

class NotBlockStructured : public Error {
 public:
  NotBlockStructured(std::ptrdiff_t k, std::ptrdiff_t l, double max_deviation)
      : Error(ErrorKind::NotBlockStructured,
              "block (" + std::to_string(k) + ", " + std::to_string(l) + ") is not constant: max deviation " +
                  std::to_string(max_deviation)),
        k_(k),
        l_(l),
        max_deviation_(max_deviation) {}

  std::ptrdiff_t k() const noexcept { return k_; }
  std::ptrdiff_t l() const noexcept { return l_; }
  double max_deviation() const noexcept { return max_deviation_; }

 private:
  std::ptrdiff_t k_;
  std::ptrdiff_t l_;
  double max_deviation_;
};

class NotPositiveDefinite : public Error {
 public:
  explicit NotPositiveDefinite(double lambda_min)
      : Error(ErrorKind::NotPositiveDefinite,
              "correlation matrix is not positive definite (lambda_min = " + std::to_string(lambda_min) + ")"),
        lambda_min_(lambda_min) {}

  double lambda_min() const noexcept { return lambda_min_; }

 private:
  double lambda_min_;
};

class NotAdmissible : public Error {
 public:
  explicit NotAdmissible(double lambda_min_astar)
      : Error(ErrorKind::NotAdmissible,
              "matrix has no clustered factor representation (lambda_min(A*) = " + std::to_string(lambda_min_astar) +
                  ")"),
        lambda_min_astar_(lambda_min_astar) {}

  double lambda_min_astar() const noexcept { return lambda_min_astar_; }

 private:
  double lambda_min_astar_;
};

class RankTooSmall : public Error {
 public:
  RankTooSmall(std::ptrdiff_t requested, std::ptrdiff_t minimal)
      : Error(ErrorKind::RankTooSmall, "requested " + std::to_string(requested) +
                                           " factors but the minimal number is " + std::to_string(minimal)),
        requested_(requested),
        minimal_(minimal) {}

  std::ptrdiff_t requested() const noexcept { return requested_; }
  std::ptrdiff_t minimal() const noexcept { return minimal_; }

 private:
  std::ptrdiff_t requested_;
  std::ptrdiff_t minimal_;
};

class NoConvergence : public Error {
 public:
  NoConvergence(std::ptrdiff_t iterations, double residual)
      : Error(ErrorKind::NoConvergence, "no convergence after " + std::to_string(iterations) +
                                            " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations),
        residual_(residual) {}

  std::ptrdiff_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }

 private:
  std::ptrdiff_t iterations_;
  double residual_;
};

class ZeroVariance : public Error {
 public:
  explicit ZeroVariance(std::ptrdiff_t column)
      : Error(ErrorKind::ZeroVariance, "column " + std::to_string(column) + " has zero variance"), column_(column) {}

  std::ptrdiff_t column() const noexcept { return column_; }

 private:
  std::ptrdiff_t column_;
};

}  // namespace blockcorr
