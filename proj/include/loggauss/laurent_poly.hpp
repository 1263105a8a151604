#pragma once

#include <charconv>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include "error.hpp"

namespace loggauss {

using Complex = std::complex<double>;
using Exponent = std::vector<int>;

/// Integer power of a complex number by repeated squaring. Negative powers
/// invert the result, so `base` must be nonzero when `e < 0`.
inline Complex ipow(Complex base, int e) {
  const bool invert = e < 0;
  unsigned long long k = invert ? -static_cast<long long>(e) : static_cast<long long>(e);
  Complex result{1.0, 0.0};
  while (k != 0) {
    if (k & 1ULL) result *= base;
    base *= base;
    k >>= 1ULL;
  }
  return invert ? Complex{1.0, 0.0} / result : result;
}

/// Throws OutsideTorus unless every coordinate is nonzero, InvalidArgument on
/// a length mismatch.
inline void require_torus_point(std::span<const Complex> z, std::size_t n) {
  if (z.size() != n) {
    throw Error(ErrorKind::InvalidArgument, "point has " + std::to_string(z.size()) +
                                                " coordinates, expected " + std::to_string(n));
  }
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!std::isfinite(z[j].real()) || !std::isfinite(z[j].imag())) {
      throw Error(ErrorKind::NonFinite, "coordinate z" + std::to_string(j + 1) + " is not finite");
    }
    if (z[j] == Complex{0.0, 0.0}) {
      throw Error(ErrorKind::OutsideTorus, "coordinate z" + std::to_string(j + 1) + " is zero");
    }
  }
}

/// Sparse Laurent polynomial in the fixed variables z1..zn with complex
/// double coefficients.
///
/// The term map is kept canonical: exponent vectors all have length
/// `n_vars()` and no stored coefficient is exactly zero. Two polynomials
/// compare equal iff their term maps do.
class LaurentPoly {
 public:
  using TermMap = std::map<Exponent, Complex>;

  explicit LaurentPoly(std::size_t n_vars) : n_vars_(n_vars) {
    if (n_vars == 0) throw Error(ErrorKind::InvalidArgument, "n_vars must be positive");
  }

  /// Builds from a list of (exponent, coefficient) pairs. Repeated exponents
  /// are summed; exact zeros are dropped.
  LaurentPoly(std::size_t n_vars, const std::vector<std::pair<Exponent, Complex>>& terms)
      : LaurentPoly(n_vars) {
    for (const auto& [e, c] : terms) add_term(e, c);
  }

  std::size_t n_vars() const noexcept { return n_vars_; }
  const TermMap& terms() const noexcept { return terms_; }
  std::size_t size() const noexcept { return terms_.size(); }
  bool is_zero() const noexcept { return terms_.empty(); }

  /// Coefficient of the monomial with exponent `e` (zero when absent).
  Complex coefficient(const Exponent& e) const {
    auto it = terms_.find(e);
    return it == terms_.end() ? Complex{} : it->second;
  }

  bool depends_on(std::size_t var) const {
    for (const auto& [e, c] : terms_)
      if (e.at(var) != 0) return true;
    return false;
  }

  Complex evaluate(std::span<const Complex> z) const {
    require_torus_point(z, n_vars_);
    Complex sum{};
    for (const auto& [e, c] : terms_) sum += c * monomial(e, z);
    return sum;
  }

  /// Formal derivative with respect to variable `var` (0-based).
  LaurentPoly partial(std::size_t var) const {
    check_var(var);
    LaurentPoly out(n_vars_);
    for (const auto& [e, c] : terms_) {
      if (e[var] == 0) continue;
      Exponent d = e;
      d[var] -= 1;
      out.add_term(d, c * static_cast<double>(e[var]));
    }
    return out;
  }

  /// (z1*dp/dz1, ..., zn*dp/dzn) at z, i.e. the gradient of t -> p(exp t).
  /// Each term c*z^e contributes e_j*c*z^e to entry j.
  std::vector<Complex> log_gradient(std::span<const Complex> z) const {
    require_torus_point(z, n_vars_);
    std::vector<Complex> g(n_vars_);
    for (const auto& [e, c] : terms_) {
      const Complex value = c * monomial(e, z);
      for (std::size_t j = 0; j < n_vars_; ++j)
        if (e[j] != 0) g[j] += static_cast<double>(e[j]) * value;
    }
    return g;
  }

  /// Sum of |c * z^e| over terms; the natural scale for residual and
  /// gradient magnitudes at z.
  double term_magnitude(std::span<const Complex> z) const {
    require_torus_point(z, n_vars_);
    double s = 0.0;
    for (const auto& [e, c] : terms_) s += std::abs(c * monomial(e, z));
    return s;
  }

  /// The polynomial q with q(c*z) = p(z), coordinatewise product c*z.
  LaurentPoly translated(std::span<const Complex> c) const {
    require_torus_point(c, n_vars_);
    LaurentPoly out(n_vars_);
    for (const auto& [e, coeff] : terms_) {
      Complex scale{1.0, 0.0};
      for (std::size_t j = 0; j < n_vars_; ++j) scale *= ipow(c[j], -e[j]);
      out.add_term(e, coeff * scale);
    }
    return out;
  }

  LaurentPoly& operator+=(const LaurentPoly& other) {
    check_same_ring(other);
    for (const auto& [e, c] : other.terms_) add_term(e, c);
    return *this;
  }

  LaurentPoly& operator*=(Complex alpha) {
    TermMap scaled;
    for (const auto& [e, c] : terms_) {
      const Complex v = c * alpha;
      if (v != Complex{}) scaled.emplace(e, v);
    }
    terms_ = std::move(scaled);
    return *this;
  }

  friend LaurentPoly operator+(LaurentPoly a, const LaurentPoly& b) { return a += b; }
  friend LaurentPoly operator*(Complex alpha, LaurentPoly p) { return p *= alpha; }

  friend bool operator==(const LaurentPoly& a, const LaurentPoly& b) {
    return a.n_vars_ == b.n_vars_ && a.terms_ == b.terms_;
  }

 private:
  static Complex monomial(const Exponent& e, std::span<const Complex> z) {
    Complex m{1.0, 0.0};
    for (std::size_t j = 0; j < e.size(); ++j)
      if (e[j] != 0) m *= ipow(z[j], e[j]);
    return m;
  }

  void check_var(std::size_t var) const {
    if (var >= n_vars_) {
      throw Error(ErrorKind::InvalidArgument, "variable index " + std::to_string(var + 1) +
                                                  " out of range 1.." + std::to_string(n_vars_));
    }
  }

  void check_same_ring(const LaurentPoly& other) const {
    if (other.n_vars_ != n_vars_)
      throw Error(ErrorKind::InvalidArgument, "polynomials live in different rings");
  }

  void add_term(const Exponent& e, Complex c) {
    if (e.size() != n_vars_)
      throw Error(ErrorKind::InvalidArgument, "exponent vector has wrong length");
    if (c == Complex{}) return;
    auto [it, inserted] = terms_.emplace(e, c);
    if (!inserted) {
      it->second += c;
      if (it->second == Complex{}) terms_.erase(it);
    }
  }

  std::size_t n_vars_;
  TermMap terms_;
};

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, end);
}

class PolyParser {
 public:
  PolyParser(std::string_view text, std::size_t n_vars) : text_(text), n_vars_(n_vars) {}

  LaurentPoly parse() {
    std::vector<std::pair<Exponent, Complex>> terms;
    skip_ws();
    double sign = 1.0;
    // A leading sign is accepted in addition to the separators between terms.
    if (peek() == '+' || peek() == '-') {
      sign = take() == '-' ? -1.0 : 1.0;
      skip_ws();
    }
    if (at_end()) fail("empty polynomial");
    terms.push_back(term(sign));
    skip_ws();
    while (!at_end()) {
      const char c = peek();
      if (c != '+' && c != '-') fail(std::string("unexpected character '") + c + "'");
      ++pos_;
      skip_ws();
      terms.push_back(term(c == '-' ? -1.0 : 1.0));
      skip_ws();
    }
    return LaurentPoly(n_vars_, terms);
  }

 private:
  std::pair<Exponent, Complex> term(double sign) {
    Complex coeff{1.0, 0.0};
    Exponent e(n_vars_, 0);
    const char c = peek();
    if (c == '(' || is_number_start(c)) {
      coeff = c == '(' ? complex_literal() : Complex{real_literal(), 0.0};
      skip_ws();
      if (peek() == '*') {
        ++pos_;
        skip_ws();
        mono(e);
      }
    } else if (c == 'z') {
      mono(e);
    } else {
      fail(at_end() ? "expected term, found end of input"
                    : std::string("expected term, found '") + c + "'");
    }
    return {e, sign * coeff};
  }

  void mono(Exponent& e) {
    factor(e);
    skip_ws();
    while (peek() == '*') {
      ++pos_;
      skip_ws();
      factor(e);
      skip_ws();
    }
  }

  void factor(Exponent& e) {
    if (peek() != 'z') fail("expected variable 'z<index>'");
    ++pos_;
    const std::size_t start = pos_;
    std::size_t index = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), index);
    if (ec != std::errc{} || ptr == text_.data() + pos_) fail("expected variable index after 'z'");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    if (index < 1 || index > n_vars_) {
      throw ParseError(start, "variable index " + std::to_string(index) + " out of range 1.." +
                                  std::to_string(n_vars_));
    }
    int power = 1;
    skip_ws();
    if (peek() == '^') {
      ++pos_;
      skip_ws();
      power = signed_integer();
    }
    e[index - 1] += power;
  }

  int signed_integer() {
    const std::size_t start = pos_;
    bool negative = false;
    if (peek() == '+' || peek() == '-') negative = take() == '-';
    if (peek() < '0' || peek() > '9') {
      if (peek() == '.') throw ParseError(start, "non-integer exponent");
      fail("expected integer exponent");
    }
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
    if (ec != std::errc{} || value > 1'000'000) throw ParseError(start, "exponent out of range");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    if (peek() == '.' || peek() == 'e' || peek() == 'E') throw ParseError(start, "non-integer exponent");
    return static_cast<int>(negative ? -value : value);
  }

  Complex complex_literal() {
    ++pos_;  // '('
    skip_ws();
    double re_sign = 1.0;
    if (peek() == '+' || peek() == '-') {
      re_sign = take() == '-' ? -1.0 : 1.0;
      skip_ws();
    }
    const double re = re_sign * real_literal();
    skip_ws();
    if (peek() != '+' && peek() != '-') fail("expected '+' or '-' in complex coefficient");
    const double im_sign = take() == '-' ? -1.0 : 1.0;
    skip_ws();
    const double im = im_sign * real_literal();
    skip_ws();
    if (peek() != 'i') fail("expected 'i' after imaginary part");
    ++pos_;
    skip_ws();
    if (peek() != ')') fail("expected ')'");
    ++pos_;
    return {re, im};
  }

  double real_literal() {
    if (!is_number_start(peek())) fail("expected real literal");
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc{}) fail("malformed real literal");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  static bool is_number_start(char c) { return (c >= '0' && c <= '9') || c == '.'; }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  char take() { return text_[pos_++]; }

  void skip_ws() {
    while (!at_end() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\n' ||
                         text_[pos_] == '\r'))
      ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(pos_, what); }

  std::string_view text_;
  std::size_t n_vars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses the grammar
///   poly   := term (('+'|'-') term)*
///   term   := coeff ('*' mono)? | mono
///   coeff  := real | '(' real ('+'|'-') real 'i' ')'
///   mono   := factor ('*' factor)*
///   factor := 'z' index ('^' signedInteger)?
/// with insignificant whitespace. A single leading sign is also accepted.
inline LaurentPoly parse_poly(std::string_view text, std::size_t n_vars) {
  if (n_vars == 0) throw Error(ErrorKind::InvalidArgument, "n_vars must be positive");
  return detail::PolyParser(text, n_vars).parse();
}

/// Prints in the grammar accepted by parse_poly. Coefficients use the
/// shortest round-trip representation, so parse_poly(to_string(p)) == p.
inline std::string to_string(const LaurentPoly& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [e, coeff] : p.terms()) {
    Complex c = coeff;
    const bool negative = std::signbit(c.real());
    if (negative) c = -c;
    if (first) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    first = false;
    out += "(";
    detail::append_double(out, c.real());
    out += std::signbit(c.imag()) ? "-" : "+";
    detail::append_double(out, std::abs(c.imag()));
    out += "i)";
    for (std::size_t j = 0; j < e.size(); ++j) {
      if (e[j] == 0) continue;
      out += "*z" + std::to_string(j + 1);
      if (e[j] != 1) out += "^" + std::to_string(e[j]);
    }
  }
  return out;
}

}  // namespace loggauss
