#include <cctype>
#include <cstdlib>

#include "ncdel/nc_rational.hpp"

namespace ncdel {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  Expr parse_all() {
    Expr e = parse_sum();
    skip_ws();
    if (pos_ != s_.size()) fail("unexpected character");
    return e;
  }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg + " at position " + std::to_string(pos_) + " in \"" + s_ + "\"");
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  bool starts_operand(char c) const {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '(' || c == '.';
  }

  bool accept(const std::string& tok) {
    skip_ws();
    if (s_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  Expr parse_sum() {
    Expr acc = parse_product();
    for (;;) {
      const char c = peek();
      if (c == '+') {
        ++pos_;
        acc = acc + parse_product();
      } else if (c == '-') {
        ++pos_;
        acc = acc - parse_product();
      } else {
        return acc;
      }
    }
  }

  Expr parse_product() {
    Expr acc = parse_unary();
    while (peek() == '*') {
      ++pos_;
      acc = acc * parse_unary();
    }
    return acc;
  }

  Expr parse_unary() {
    const char c = peek();
    if (c == '-') {
      ++pos_;
      return -parse_unary();
    }
    if (c == '+') {
      ++pos_;
      return parse_unary();
    }
    return parse_power();
  }

  Expr parse_power() {
    Expr base = parse_primary();
    if (peek() == '^') {
      ++pos_;
      skip_ws();
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (start == pos_) fail("expected a non-negative integer exponent");
      const int p = std::atoi(s_.substr(start, pos_ - start).c_str());
      std::vector<Expr> f(static_cast<std::size_t>(p), base);
      return product(f);
    }
    return base;
  }

  int parse_index() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("expected a variable index");
    return std::atoi(s_.substr(start, pos_ - start).c_str());
  }

  // A '*' right after a general variable marks its adjoint unless an operand follows.
  bool trailing_star() {
    if (pos_ >= s_.size() || s_[pos_] != '*') return false;
    std::size_t q = pos_ + 1;
    while (q < s_.size() && std::isspace(static_cast<unsigned char>(s_[q]))) ++q;
    if (q < s_.size() && starts_operand(s_[q])) return false;
    ++pos_;
    return true;
  }

  Expr parse_number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end == begin) fail("expected a number");
    pos_ += static_cast<std::size_t>(end - begin);
    if (pos_ < s_.size() && s_[pos_] == 'i') {
      ++pos_;
      return scalar(cplx(0.0, v));
    }
    return scalar(v);
  }

  Expr parse_primary() {
    const char c = peek();
    if (c == '(') {
      ++pos_;
      Expr e = parse_sum();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (accept("inv(")) {
      Expr e = parse_sum();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return inv(e);
    }
    if (accept("adj(")) {
      Expr e = parse_sum();
      if (peek() != ')') fail("expected ')'");
      ++pos_;
      return adj(e);
    }
    if (c == 'x') {
      ++pos_;
      return x(parse_index());
    }
    if (c == 'y') {
      ++pos_;
      Expr v = y(parse_index());
      if (trailing_star()) return adj(v);
      return v;
    }
    if (c == 'i') {
      ++pos_;
      return scalar(cplx(0.0, 1.0));
    }
    fail("unexpected token");
  }
};

}  // namespace

Expr parse(const std::string& text) { return Parser(text).parse_all(); }

}  // namespace ncdel
