#ifndef COIRLQ_IO_HPP
#define COIRLQ_IO_HPP

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "types.hpp"

// Text formats:
//   matrix:  "<rows> <cols>\n" then entries, row-major, whitespace separated
//   vector:  "<len>\n" then entries
// Values are written with 17 significant digits so doubles round-trip exactly.

namespace coirlq {

namespace detail {

struct Token {
  std::string text;
  long line;
  long column;
  long index;  // 1-based position in the stream
};

class TokenStream {
public:
  explicit TokenStream(std::string data) : data_(std::move(data)) {}

  bool next(Token& tok) {
    while (pos_ < data_.size() && is_space(data_[pos_])) advance();
    if (pos_ >= data_.size()) return false;
    tok.line = line_;
    tok.column = column_;
    tok.index = ++count_;
    const std::size_t start = pos_;
    while (pos_ < data_.size() && !is_space(data_[pos_])) advance();
    tok.text = data_.substr(start, pos_ - start);
    return true;
  }

  long line() const { return line_; }
  long column() const { return column_; }

private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }
  void advance() {
    if (data_[pos_] == '\n') {
      ++line_;
      column_ = 1;
    } else {
      ++column_;
    }
    ++pos_;
  }

  std::string data_;
  std::size_t pos_ = 0;
  long line_ = 1;
  long column_ = 1;
  long count_ = 0;
};

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline long parse_dim(const Token& tok, const char* what) {
  long value = 0;
  const char* begin = tok.text.data();
  const char* end = begin + tok.text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || value <= 0)
    throw ParseError(std::string("malformed header: expected positive ") + what +
                         ", got '" + tok.text + "'",
                     tok.line, tok.column);
  return value;
}

inline std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline Matrix read_matrix(const std::string& path) {
  detail::TokenStream ts(detail::slurp(path));
  detail::Token tok;
  if (!ts.next(tok)) throw ParseError("malformed header: empty file", 1, 1);
  const long rows = detail::parse_dim(tok, "row count");
  if (!ts.next(tok)) throw ParseError("malformed header: missing column count", ts.line(), ts.column());
  const long cols = detail::parse_dim(tok, "column count");

  Matrix out(rows, cols);
  const long total = rows * cols;
  for (long i = 0; i < total; ++i) {
    if (!ts.next(tok))
      throw ParseError("entry count mismatch: expected " + std::to_string(total) +
                           " entries, found " + std::to_string(i),
                       ts.line(), ts.column());
    double value = 0;
    const char* begin = tok.text.data();
    const char* end = begin + tok.text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
      throw ParseError("non-numeric token '" + tok.text + "' at entry " + std::to_string(i + 1),
                       tok.line, tok.column);
    if (!std::isfinite(value))
      throw ParseError("non-finite entry '" + tok.text + "'", tok.line, tok.column);
    out(i / cols, i % cols) = value;
  }
  if (ts.next(tok))
    throw ParseError("entry count mismatch: expected " + std::to_string(total) +
                         " entries, found extra token '" + tok.text + "'",
                     tok.line, tok.column);
  return out;
}

inline Vector read_vector(const std::string& path) {
  detail::TokenStream ts(detail::slurp(path));
  detail::Token tok;
  if (!ts.next(tok)) throw ParseError("malformed header: empty file", 1, 1);
  const long len = detail::parse_dim(tok, "length");

  Vector out(len);
  for (long i = 0; i < len; ++i) {
    if (!ts.next(tok))
      throw ParseError("entry count mismatch: expected " + std::to_string(len) +
                           " entries, found " + std::to_string(i),
                       ts.line(), ts.column());
    double value = 0;
    const char* begin = tok.text.data();
    const char* end = begin + tok.text.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
      throw ParseError("non-numeric token '" + tok.text + "' at entry " + std::to_string(i + 1),
                       tok.line, tok.column);
    if (!std::isfinite(value))
      throw ParseError("non-finite entry '" + tok.text + "'", tok.line, tok.column);
    out(i) = value;
  }
  if (ts.next(tok))
    throw ParseError("entry count mismatch: expected " + std::to_string(len) +
                         " entries, found extra token '" + tok.text + "'",
                     tok.line, tok.column);
  return out;
}

inline void write_matrix(const Matrix& a, const std::string& path) {
  require_finite(a, "write_matrix");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << a.rows() << ' ' << a.cols() << '\n';
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j) out << ' ';
      out << detail::format_value(a(i, j));
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

inline void write_vector(const Vector& v, const std::string& path) {
  require_finite(v, "write_vector");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << v.size() << '\n';
  for (Index i = 0; i < v.size(); ++i) out << detail::format_value(v(i)) << '\n';
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace coirlq

#endif
