#pragma once

// Speed sequences for heavy-tailed branching processes.
//
// The basic sequence iterates the offspring quantile at tail level 1/h:
//     h(0) = m0,   h(n+1) = F_Z^-1(1 - 1/h(n)).
// The regulated sequence uses a dampened tail exponent alpha = (1+eps)^-1/2:
//     f(0) = m~0,  f(n+1) = F_Z^-1(1 - f(n)^-alpha),
// where the start point m~0 is the least integer clearing three constraints
// (plumpness from m~0^alpha, and two explicit power inequalities) so that the
// sequence's self-improvement lemma holds from the first step.
//
// Entries are stored one exponential level down (log of the speed, itself in
// log-space storage) so tower growth survives one step past double range.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "logreal.hpp"

namespace brw {

struct SpeedSeq {
  std::vector<LogReal> log_value;  // entry n holds the value log(speed_n)
  double eps = 0;                  // 0 marks the undampened h-sequence
  double alpha = 1;
  bool table_exhausted = false;  // a finite survival table ran out mid-iteration

  size_t size() const { return log_value.size(); }

  // The speed itself as a saturating log-space number.
  LogReal value(size_t n) const {
    double v = log_value[n].linear();
    return std::isinf(v) ? LogReal::overflow() : LogReal::from_log(v);
  }
};

inline double speed_alpha(double eps) { return 1.0 / std::sqrt(1.0 + eps); }

inline SpeedSeq speed_h(const OffspringDist& d, double m0, size_t n_max) {
  if (!(m0 > 1)) throw std::invalid_argument("speed_h: m0 must exceed 1");
  SpeedSeq s;
  s.eps = 0;
  s.alpha = 1;
  s.log_value.push_back(LogReal::from_linear(std::log(m0)));
  for (size_t n = 0; n < n_max; ++n) {
    auto next = offspring_quantile_loglog(d, s.log_value.back());
    if (!next) {
      s.table_exhausted = true;
      break;
    }
    s.log_value.push_back(*next);
  }
  return s;
}

// Regulated sequence with the start point passed as log(m0); start points can
// exceed double range outright for small eps.
inline SpeedSeq speed_f_log(const OffspringDist& d, double eps, double log_m0, size_t n_max) {
  if (!(eps > 0)) throw std::invalid_argument("speed_f: eps must be positive");
  if (!(log_m0 > 0)) throw std::invalid_argument("speed_f: m0 must exceed 1");
  SpeedSeq s;
  s.eps = eps;
  s.alpha = speed_alpha(eps);
  LogReal a = LogReal::from_linear(s.alpha);
  s.log_value.push_back(LogReal::from_linear(log_m0));
  for (size_t n = 0; n < n_max; ++n) {
    auto next = offspring_quantile_loglog(d, s.log_value.back() * a);
    if (!next) {
      s.table_exhausted = true;
      break;
    }
    s.log_value.push_back(*next);
  }
  return s;
}

inline SpeedSeq speed_f(const OffspringDist& d, double eps, double m0, size_t n_max) {
  if (!(m0 > 1)) throw std::invalid_argument("speed_f: m0 must exceed 1");
  return speed_f_log(d, eps, std::log(m0), n_max);
}

// ------------------------------------------------------------------
// plumpness
// ------------------------------------------------------------------
// Z is plump with exponent eps from m* if F_Z^-1(1 - 1/m) >= m^(1+eps) for
// every real m >= m*.

inline bool is_plump_at(const OffspringDist& d, double eps, double log_m) {
  if (log_m < 0) log_m = 0;
  auto q = offspring_quantile_log_tail_opt(d, -std::max(log_m, 1e-300));
  if (!q) return false;  // unknown beyond a finite table: treat as failing
  auto ge = LogReal::certainly_ge(*q, LogReal::from_log((1.0 + eps) * log_m));
  return ge.value_or(true);  // both overflowed: quantile certainly dominates
}

// Least threshold from which plumpness provably holds for all larger m, for
// the families with closed-form survival. +inf means never plump; nullopt
// means no closed form (use the grid audit instead). The power-tail bound
// drops the integer ceiling on the quantile, so the threshold can be up to
// one integer step conservative.
inline std::optional<double> plump_threshold(const OffspringDist& d, double eps) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  switch (d.family) {
    case OffspringFamily::PowerTail:
      // quantile ~ ceil(m^(1/beta)); dominates m^(1+eps) everywhere iff
      // 1/beta >= 1+eps.
      return d.beta * (1.0 + eps) <= 1.0 ? 1.0 : inf;
    case OffspringFamily::LogTail: {
      // quantile ~ ceil(2^m): need m ln2 - (1+eps) ln m >= 0 from the
      // threshold on. The gap is convex with minimum at (1+eps)/ln2.
      double c = 1.0 + eps;
      auto gap = [&](double m) { return m * kLn2 - c * std::log(m); };
      double m_min = c / kLn2;
      if (m_min <= 1 || gap(m_min) >= 0) return 1.0;
      double lo = m_min, hi = m_min;
      while (gap(hi) < 0) hi *= 2;
      for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        (gap(mid) < 0 ? lo : hi) = mid;
      }
      return hi;
    }
    case OffspringFamily::Geometric:
    case OffspringFamily::Deterministic:
      return inf;  // quantile grows at most logarithmically
    case OffspringFamily::PiecewiseTail:
    case OffspringFamily::Collapsed:
      return std::nullopt;
  }
  return std::nullopt;
}

struct PlumpReport {
  bool holds = false;            // margin nonnegative at every grid point
  double worst_margin = std::numeric_limits<double>::infinity();
  double suggested_log_m0 = std::numeric_limits<double>::quiet_NaN();
  long long suggested_m0 = 0;    // integer form when exactly representable
  bool undetermined = false;     // survival had no closed form somewhere on the grid
  size_t grid_points = 0;
  bool threshold_known = false;  // closed-form threshold (see plump_threshold)
  double threshold = std::numeric_limits<double>::infinity();
};

// Audit the plumpness margin log Pr{Z > m^(1+eps)} + log m on a log-spaced
// grid over [m_lo, m_hi]; suggested_m0 is the least grid point from which the
// margin stays nonnegative through the end of the grid.
inline PlumpReport check_plump(const OffspringDist& d, double eps, double m_lo, LogReal m_hi,
                               size_t grid = 512) {
  if (!(eps > 0) || !(m_lo >= 2) || grid < 16) throw std::invalid_argument("check_plump: bad args");
  PlumpReport r;
  if (auto t = plump_threshold(d, eps)) {
    r.threshold_known = true;
    r.threshold = *t;
  }
  double log_lo = std::log(m_lo);
  double log_hi = m_hi.log();
  if (!(log_hi > log_lo)) throw std::invalid_argument("check_plump: m_hi must exceed m_lo");
  std::vector<double> margins(grid);
  for (size_t i = 0; i < grid; ++i) {
    double lm = log_lo + (log_hi - log_lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    auto ls = offspring_survival_log_opt(d, (1.0 + eps) * lm);
    if (!ls) {
      r.undetermined = true;
      margins[i] = -std::numeric_limits<double>::infinity();
      continue;
    }
    margins[i] = *ls + lm;
  }
  r.grid_points = grid;
  r.worst_margin = *std::min_element(margins.begin(), margins.end());
  r.holds = r.worst_margin >= 0 && !r.undetermined;
  size_t first_ok = grid;  // least index whose suffix is entirely nonnegative
  for (size_t i = grid; i-- > 0;) {
    if (margins[i] >= 0)
      first_ok = i;
    else
      break;
  }
  if (first_ok < grid) {
    r.suggested_log_m0 =
        log_lo + (log_hi - log_lo) * static_cast<double>(first_ok) / static_cast<double>(grid - 1);
    if (r.suggested_log_m0 < 36.7)
      r.suggested_m0 = static_cast<long long>(std::ceil(std::exp(r.suggested_log_m0) - 1e-9));
  }
  return r;
}

// Default start point for the basic speed sequence: the closed-form plumpness
// threshold when available, floored at 2.
inline std::optional<double> default_h_start(const OffspringDist& d, double eps) {
  auto t = plump_threshold(d, eps);
  if (!t || std::isinf(*t)) return std::nullopt;
  return std::max(2.0, std::ceil(*t - 1e-9));
}

// A witness exponent for which the family is plump, when one exists.
inline std::optional<double> plump_witness_eps(const OffspringDist& d) {
  switch (d.family) {
    case OffspringFamily::PowerTail:
      return 1.0 / d.beta - 1.0;  // boundary exponent: quantile ~ m^(1/beta)
    case OffspringFamily::LogTail:
      return 1.0;  // plump at every exponent; 1 keeps thresholds small
    default:
      return std::nullopt;
  }
}

// ------------------------------------------------------------------
// start point for the regulated sequence
// ------------------------------------------------------------------

// The defining predicate for the start point m~0 given the plumpness
// threshold t: (a) plump from m^alpha, (b) m^(1-alpha) >= 16/(1-alpha) + 16,
// (c) m^(1/alpha - 1) >= 4^(ceil((1/alpha - 1)^-1) + 1).
inline bool f_start_ok(double m, double alpha, double plump_from) {
  double inv = 1.0 / alpha - 1.0;
  return std::pow(m, alpha) >= plump_from &&
         std::pow(m, 1.0 - alpha) >= 16.0 / (1.0 - alpha) + 16.0 &&
         std::pow(m, inv) >= std::pow(4.0, std::ceil(1.0 / inv) + 1.0);
}

struct FStartResult {
  bool ok = false;
  long long m0 = 0;  // exact least integer when representable, else 0
  double log_m0 = std::numeric_limits<double>::quiet_NaN();
  double alpha = 1;
  double plump_from = std::numeric_limits<double>::infinity();
  std::string reason;
};

inline FStartResult find_f_start(const OffspringDist& d, double eps) {
  FStartResult r;
  r.alpha = speed_alpha(eps);
  auto t = plump_threshold(d, eps);
  if (!t) {
    r.reason = "no closed-form plumpness threshold for this family";
    return r;
  }
  if (std::isinf(*t)) {
    r.reason = "offspring law is not plump at this exponent";
    return r;
  }
  r.plump_from = *t;
  double a = r.alpha, inv = 1.0 / a - 1.0;
  // Constraint floors computed in log space: they blow past double range
  // outright once alpha gets close to 1.
  double lf_a = std::log(*t) / a;
  double lf_b = std::log(16.0 / (1.0 - a) + 16.0) / (1.0 - a);
  double lf_c = (std::ceil(1.0 / inv) + 1.0) / inv * std::log(4.0);
  double lcand = std::max({lf_a, lf_b, lf_c, std::log(2.0)});
  if (lcand >= 36.04) {  // past exact integer range (2^53 ~ e^36.7, margin kept)
    r.ok = true;
    r.log_m0 = lcand;
    r.reason = "least-integer start exceeds exact integer range; real threshold used "
               "(integer ceiling is below double resolution there)";
    return r;
  }
  long long m = static_cast<long long>(std::ceil(std::exp(lcand) - 1e-9));
  if (m < 2) m = 2;
  while (!f_start_ok(static_cast<double>(m), a, *t)) ++m;
  while (m > 2 && f_start_ok(static_cast<double>(m - 1), a, *t)) --m;
  r.ok = true;
  r.m0 = m;
  r.log_m0 = std::log(static_cast<double>(m));
  return r;
}

// Regulated sequence started at the computed m~0.
inline SpeedSeq speed_f_auto(const OffspringDist& d, double eps, size_t n_max) {
  auto st = find_f_start(d, eps);
  if (!st.ok) throw std::domain_error("speed_f_auto: " + st.reason);
  return speed_f_log(d, eps, st.log_m0, n_max);
}

// ------------------------------------------------------------------
// growth audit for the regulated sequence
// ------------------------------------------------------------------
// Termwise checks of the self-improvement properties:
//   (i)   f(n+2) >= F_Z^-1(1 - 1/f(n))
//   (ii)  f(n+1) >= 4^(n+1) f(n),  and  f(n)^(1-alpha) >= 16n + 16 for n >= 1
//   (iii) f(n + 2 ceil(log k / log(1+eps))) >= f(n)^k
// Comparisons where both sides overflow the representable range are skipped
// and counted; a one-sided overflow on the left certainly dominates.

struct SpeedAudit {
  bool ok = true;
  size_t checked = 0;
  size_t skipped = 0;
  std::string first_violation;
};

namespace detail {
inline void audit_ge(SpeedAudit& a, const LogReal& lhs, const LogReal& rhs, const char* what,
                     size_t n) {
  auto ge = LogReal::certainly_ge(lhs, rhs);
  if (!ge) {
    ++a.skipped;
    return;
  }
  ++a.checked;
  if (!*ge && a.ok) {
    a.ok = false;
    a.first_violation = std::string(what) + " at n=" + std::to_string(n);
  }
}
}  // namespace detail

inline SpeedAudit audit_speed_f(const OffspringDist& d, const SpeedSeq& f,
                                const std::vector<long long>& powers = {2, 3, 5, 10}) {
  if (f.eps <= 0) throw std::invalid_argument("audit_speed_f: not a regulated sequence");
  SpeedAudit a;
  const size_t n_len = f.size();
  const double log1e = std::log1p(f.eps);
  for (size_t n = 0; n + 2 < n_len; ++n) {
    auto q = offspring_quantile_loglog(d, f.log_value[n]);
    if (!q) {
      ++a.skipped;
      continue;
    }
    detail::audit_ge(a, f.log_value[n + 2], *q, "two-step quantile domination", n);
  }
  for (size_t n = 0; n + 1 < n_len; ++n) {
    LogReal rhs = f.log_value[n] + LogReal::from_linear(static_cast<double>(n + 1) * std::log(4.0));
    detail::audit_ge(a, f.log_value[n + 1], rhs, "4^(n+1) step growth", n);
    if (n >= 1) {
      LogReal lhs = f.log_value[n] * LogReal::from_linear(1.0 - f.alpha);
      LogReal rhs2 = LogReal::from_linear(std::log(16.0 * static_cast<double>(n) + 16.0));
      detail::audit_ge(a, lhs, rhs2, "dampened-power floor", n);
    }
  }
  for (long long k : powers) {
    if (k < 2) continue;
    size_t jump = 2 * static_cast<size_t>(std::ceil(std::log(static_cast<double>(k)) / log1e));
    for (size_t n = 0; n + jump < n_len; ++n) {
      LogReal rhs = f.log_value[n] * LogReal::from_linear(static_cast<double>(k));
      detail::audit_ge(a, f.log_value[n + jump], rhs, "power-jump domination", n);
    }
  }
  return a;
}

}  // namespace brw
