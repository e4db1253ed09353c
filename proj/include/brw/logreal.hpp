#pragma once

// Nonnegative extended real stored as log(value). Covers the dynamic range of
// doubly-exponential branching populations: a value is representable as long as
// its *logarithm* fits in a double. Three states:
//   zero      log = -inf
//   finite    log in (-inf, +inf), value may be far outside double range
//   overflow  log = +inf, i.e. even log(value) exceeded double range
// Overflow compares strictly greater than every finite value, so order
// comparisons against overflow are still rigorous; overflow-vs-overflow is
// reported as indeterminate.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>

namespace brw {

class LogReal {
 public:
  constexpr LogReal() : lg_(-inf()) {}

  static constexpr LogReal zero() { return LogReal(); }
  static constexpr LogReal one() { return from_log(0.0); }
  static constexpr LogReal overflow() { return from_log(inf()); }

  static constexpr LogReal from_log(double lg) {
    LogReal r;
    r.lg_ = lg;
    return r;
  }

  static LogReal from_linear(double v) {
    if (v < 0 || std::isnan(v)) return from_log(std::numeric_limits<double>::quiet_NaN());
    if (v == 0) return zero();
    if (std::isinf(v)) return overflow();
    return from_log(std::log(v));
  }

  double log() const { return lg_; }
  bool is_zero() const { return std::isinf(lg_) && lg_ < 0; }
  bool is_overflow() const { return std::isinf(lg_) && lg_ > 0; }
  bool is_finite() const { return std::isfinite(lg_); }
  bool is_nan() const { return std::isnan(lg_); }

  // Saturating conversion: overflow -> +inf, tiny -> 0 (honest double limits).
  double linear() const {
    if (is_zero()) return 0.0;
    if (is_overflow()) return inf();
    return std::exp(lg_);
  }

  // Exact integer recovery for values that fit into 2^53; nullopt otherwise.
  std::optional<double> exact_integer() const {
    if (is_zero()) return 0.0;
    if (!is_finite() || lg_ > 36.7) return std::nullopt;  // e^36.7 > 2^53
    double v = std::round(std::exp(lg_));
    return v;
  }

  LogReal operator*(const LogReal& o) const {
    if (is_zero() || o.is_zero()) return zero();
    return from_log(lg_ + o.lg_);
  }
  LogReal operator/(const LogReal& o) const {
    if (is_zero()) return zero();
    return from_log(lg_ - o.lg_);
  }
  LogReal pow(double e) const {
    if (is_zero()) return e > 0 ? zero() : overflow();
    if (e == 0) return one();
    return from_log(lg_ * e);
  }

  LogReal operator+(const LogReal& o) const {
    if (is_zero()) return o;
    if (o.is_zero()) return *this;
    if (is_overflow() || o.is_overflow()) return overflow();
    double a = lg_ > o.lg_ ? lg_ : o.lg_;
    double b = lg_ > o.lg_ ? o.lg_ : lg_;
    return from_log(a + std::log1p(std::exp(b - a)));
  }
  LogReal& operator+=(const LogReal& o) { return *this = *this + o; }
  LogReal& operator*=(const LogReal& o) { return *this = *this * o; }

  // log(a - b) for a >= b; clamps to zero if they are equal or b exceeds a
  // within rounding. Callers that need the distinction check ok.
  static LogReal sub(const LogReal& a, const LogReal& b, bool* ok = nullptr) {
    if (ok) *ok = true;
    if (b.is_zero()) return a;
    if (a.is_overflow()) return overflow();
    if (b.lg_ > a.lg_) {
      if (ok) *ok = false;
      return zero();
    }
    if (b.lg_ == a.lg_) return zero();
    // log(a-b) = lg_a + log(1 - e^x) with x = lg_b - lg_a < 0; split at -ln 2
    // so the inner quantity is computed by whichever of expm1/log1p is exact.
    double x = b.lg_ - a.lg_;
    double l1me = x > -0.6931471805599453 ? std::log(-std::expm1(x))
                                          : std::log1p(-std::exp(x));
    return from_log(a.lg_ + l1me);
  }

  bool operator<(const LogReal& o) const { return lg_ < o.lg_; }
  bool operator>(const LogReal& o) const { return lg_ > o.lg_; }
  bool operator<=(const LogReal& o) const { return lg_ <= o.lg_; }
  bool operator>=(const LogReal& o) const { return lg_ >= o.lg_; }
  bool operator==(const LogReal& o) const { return lg_ == o.lg_; }

  // Rigorous order test. nullopt when both sides are overflow (or NaN):
  // two overflowed magnitudes cannot be ranked.
  static std::optional<bool> certainly_ge(const LogReal& a, const LogReal& b) {
    if (a.is_nan() || b.is_nan()) return std::nullopt;
    if (a.is_overflow() && b.is_overflow()) return std::nullopt;
    if (a.is_overflow()) return true;   // exceeds every representable finite
    if (b.is_overflow()) return false;
    return a.lg_ >= b.lg_;
  }

  std::string to_string() const {
    if (is_zero()) return "0";
    if (is_overflow()) return "overflow";
    if (lg_ < 700 && lg_ > -700) return std::to_string(std::exp(lg_));
    return "exp(" + std::to_string(lg_) + ")";
  }

 private:
  static constexpr double inf() { return std::numeric_limits<double>::infinity(); }
  double lg_;
};

// Sum in log space over a range of log-values (stable logsumexp).
inline double log_sum_exp(const double* lo, const double* hi) {
  double m = -std::numeric_limits<double>::infinity();
  for (const double* p = lo; p != hi; ++p)
    if (*p > m) m = *p;
  if (std::isinf(m)) return m;
  double s = 0;
  for (const double* p = lo; p != hi; ++p) s += std::exp(*p - m);
  return m + std::log(s);
}

}  // namespace brw
