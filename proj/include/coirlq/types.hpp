#ifndef COIRLQ_TYPES_HPP
#define COIRLQ_TYPES_HPP

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace coirlq {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Bad dimensions or out-of-domain scalar arguments.
class DimensionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration (solver knobs, preset names, CLI combinations).
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Mathematically infeasible request: trivial null space, combinatorial
// guard exceeded, recovery condition hypotheses violated.
class InfeasibleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Numerical failure (singular/indefinite solve, non-finite data).
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; carries the 1-based line/column of the offence.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, long line, long column)
      : std::runtime_error(what + " (line " + std::to_string(line) +
                           ", column " + std::to_string(column) + ")"),
        line_(line), column_(column) {}
  long line() const { return line_; }
  long column() const { return column_; }

private:
  long line_;
  long column_;
};

// Filesystem-level failure (missing file, unwritable path).
class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline void require_finite(const Matrix& a, const char* name) {
  if (!a.allFinite()) throw NumericError(std::string(name) + ": non-finite entries");
}

inline void require_finite(const Vector& v, const char* name) {
  if (!v.allFinite()) throw NumericError(std::string(name) + ": non-finite entries");
}

}  // namespace coirlq

#endif
