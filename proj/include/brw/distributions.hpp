#pragma once

// Offspring and edge-weight distribution families. Everything is evaluated
// through survival functions and quantiles in log space so that the
// doubly-exponential populations the heavy-tailed families produce stay
// representable. Conventions:
//   survival   S_Z(m) = Pr{Z > m}, evaluated at real m (step-exact while the
//              floor of m is exactly representable, tail envelope beyond)
//   quantile   left inverse: min{k : F_Z(k) >= u}, i.e. min{k : S_Z(k) <= 1-u}

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "logreal.hpp"
#include "rng.hpp"
#include "sampling.hpp"

namespace brw {

constexpr double kLn2 = 0.6931471805599453;

// ------------------------------------------------------------------
// offspring distributions
// ------------------------------------------------------------------

enum class OffspringFamily { PowerTail, LogTail, Geometric, Deterministic, PiecewiseTail, Collapsed };

struct PiecewisePoint {
  double log_m;
  double log_s;  // log Pr{Z > m}
};

struct OffspringDist;
using OffspringPtr = std::shared_ptr<const OffspringDist>;

struct OffspringDist {
  OffspringFamily family = OffspringFamily::Deterministic;
  double beta = 0.5;       // PowerTail: Pr{Z > m} = m^-beta, support {2,3,...}
  double mean_param = 2;   // Geometric: mean, support {0,1,...}
  long long det_k = 2;     // Deterministic
  std::vector<PiecewisePoint> table;  // PiecewiseTail, log_m increasing, log_s nonincreasing
  OffspringPtr base;       // Collapsed: underlying offspring law
  double zero_weight_p = 0;  // Collapsed: probability a child edge has weight zero

  static OffspringDist power_tail(double beta) {
    if (!(beta > 0) || !(beta < 1)) throw std::invalid_argument("power_tail: beta must be in (0,1)");
    OffspringDist d;
    d.family = OffspringFamily::PowerTail;
    d.beta = beta;
    return d;
  }
  static OffspringDist log_tail() {
    OffspringDist d;
    d.family = OffspringFamily::LogTail;
    return d;
  }
  static OffspringDist geometric(double mean) {
    if (!(mean > 0)) throw std::invalid_argument("geometric: mean must be positive");
    OffspringDist d;
    d.family = OffspringFamily::Geometric;
    d.mean_param = mean;
    return d;
  }
  static OffspringDist deterministic(long long k) {
    if (k < 0) throw std::invalid_argument("deterministic: k must be >= 0");
    OffspringDist d;
    d.family = OffspringFamily::Deterministic;
    d.det_k = k;
    return d;
  }
  static OffspringDist piecewise_tail(std::vector<PiecewisePoint> pts) {
    if (pts.size() < 2) throw std::invalid_argument("piecewise_tail: need at least two points");
    for (size_t i = 1; i < pts.size(); ++i) {
      if (!(pts[i].log_m > pts[i - 1].log_m))
        throw std::invalid_argument("piecewise_tail: log_m must be strictly increasing");
      if (pts[i].log_s > pts[i - 1].log_s + 1e-12)
        throw std::invalid_argument("piecewise_tail: log survival must be nonincreasing");
    }
    if (pts.front().log_s > 0 + 1e-12)
      throw std::invalid_argument("piecewise_tail: survival cannot exceed 1");
    OffspringDist d;
    d.family = OffspringFamily::PiecewiseTail;
    d.table = std::move(pts);
    return d;
  }
  static OffspringDist collapsed(OffspringPtr base_dist, double p) {
    if (!base_dist) throw std::invalid_argument("collapsed: null base");
    if (!(p >= 0) || !(p < 1)) throw std::invalid_argument("collapsed: p must be in [0,1)");
    OffspringDist d;
    d.family = OffspringFamily::Collapsed;
    d.base = std::move(base_dist);
    d.zero_weight_p = p;
    return d;
  }

  // Geometric success parameter q with mean = q/(1-q).
  double geo_q() const { return mean_param / (1.0 + mean_param); }
};

namespace detail {
// floor(exp(log_m)) with integer crossings resolved upward: exp(log(k)) can
// land an ulp below k, which must not move the jump of a step function.
inline double snapped_floor_exp(double log_m) {
  double m = std::exp(log_m);
  double fl = std::floor(m);
  double snap = std::max(1e-9, m * 4e-16);
  if (m - fl > 1.0 - snap) fl += 1.0;
  return fl;
}
}  // namespace detail

// log Pr{Z > m} with m passed as log(m); m < 1 is allowed (log_m = -inf for m=0).
// Returns nullopt where the family has no closed form (Collapsed) or the
// query leaves a finite table (PiecewiseTail beyond the last breakpoint).
inline std::optional<double> offspring_survival_log_opt(const OffspringDist& d, double log_m) {
  constexpr double kExactFloor = 36.7;  // below e^36.7 the floor of m is exact
  switch (d.family) {
    case OffspringFamily::PowerTail: {
      if (log_m < kExactFloor) {
        double fl = detail::snapped_floor_exp(log_m);
        if (fl < 1) return 0.0;
        return -d.beta * std::log(fl);
      }
      return -d.beta * log_m;
    }
    case OffspringFamily::LogTail: {
      if (log_m < kExactFloor) {
        double fl = detail::snapped_floor_exp(log_m);
        if (fl <= 2) return 0.0;
        return -std::log(std::log2(fl));
      }
      return -std::log(log_m / kLn2);
    }
    case OffspringFamily::Geometric: {
      if (log_m > 44) return -std::numeric_limits<double>::infinity();  // beyond any practical support
      double fl = detail::snapped_floor_exp(log_m);
      return (fl + 1) * std::log1p(-1.0 / (1.0 + d.mean_param));  // (floor(m)+1) log q
    }
    case OffspringFamily::Deterministic: {
      double lk = d.det_k > 0 ? std::log(static_cast<double>(d.det_k))
                              : -std::numeric_limits<double>::infinity();
      return log_m < lk ? 0.0 : -std::numeric_limits<double>::infinity();
    }
    case OffspringFamily::PiecewiseTail: {
      const auto& t = d.table;
      if (log_m <= t.front().log_m) return t.front().log_s;
      if (log_m > t.back().log_m) return std::nullopt;
      auto it = std::upper_bound(t.begin(), t.end(), log_m,
                                 [](double v, const PiecewisePoint& p) { return v < p.log_m; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      double w = (log_m - lo.log_m) / (hi.log_m - lo.log_m);
      return lo.log_s + w * (hi.log_s - lo.log_s);
    }
    case OffspringFamily::Collapsed:
      return std::nullopt;
  }
  return std::nullopt;
}

inline double offspring_survival_log(const OffspringDist& d, double log_m) {
  auto s = offspring_survival_log_opt(d, log_m);
  if (!s) throw std::domain_error("offspring survival has no closed form here");
  return *s;
}

inline double offspring_survival(const OffspringDist& d, double m) {
  return std::exp(offspring_survival_log(d, m > 0 ? std::log(m) : -std::numeric_limits<double>::infinity()));
}

namespace detail {

// Round a positive real quantile candidate (given as log) up to the least
// integer k whose survival actually drops to or below the target. The ceiling
// is taken in linear space while exact; the +-1 ulp ambiguity of exp/log at
// exact integer crossings is resolved by a relative slack on the log scale,
// which is far below the gap between consecutive integer survivals for any
// representable k.
inline LogReal quantile_ceil(const OffspringDist& d, double log_k_star, double log_tail) {
  double slack = 32 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(log_tail));
  if (log_k_star < 36.7) {
    double k = std::ceil(std::exp(log_k_star) - 1e-9);
    if (k < 1) k = 1;
    auto ok = [&](double cand) {
      auto s = offspring_survival_log_opt(d, std::log(cand));
      return s && *s <= log_tail + slack;
    };
    while (!ok(k)) k += 1;
    while (k > 1 && ok(k - 1)) k -= 1;
    return LogReal::from_linear(k);
  }
  return LogReal::from_log(log_k_star);
}

}  // namespace detail

// Left-inverse quantile parameterized by the log tail mass: returns
// min{k : S_Z(k) <= exp(log_tail)}, i.e. F^-1(u) with log_tail = log(1-u).
// LogReal::overflow() signals that even log(k) exceeds double range.
inline std::optional<LogReal> offspring_quantile_log_tail_opt(const OffspringDist& d,
                                                              double log_tail) {
  if (!(log_tail < 0)) return LogReal::from_linear(1);  // u <= 0: first support point floor
  switch (d.family) {
    case OffspringFamily::PowerTail:
      return detail::quantile_ceil(d, -log_tail / d.beta, log_tail);
    case OffspringFamily::LogTail: {
      // k >= 2^(1/T): log k = e^(-log_tail) * ln 2
      double e = -log_tail;
      if (e > 709) return LogReal::overflow();
      double log_k = std::exp(e) * kLn2;
      if (std::isinf(log_k)) return LogReal::overflow();
      return detail::quantile_ceil(d, log_k, log_tail);
    }
    case OffspringFamily::Geometric: {
      double lq = std::log1p(-1.0 / (1.0 + d.mean_param));
      double k = std::ceil(log_tail / lq - 1.0 - 1e-12);
      if (k < 0) k = 0;
      while ((k + 1) * lq > log_tail) k += 1;       // S(k) = q^(k+1) must be <= tail
      while (k >= 1 && k * lq <= log_tail) k -= 1;  // smallest such k
      return LogReal::from_linear(k);
    }
    case OffspringFamily::Deterministic:
      return LogReal::from_linear(static_cast<double>(d.det_k));
    case OffspringFamily::PiecewiseTail: {
      const auto& t = d.table;
      if (t.front().log_s <= log_tail) return detail::quantile_ceil(d, t.front().log_m, log_tail);
      if (t.back().log_s > log_tail) return std::nullopt;  // crossing beyond the table
      for (size_t i = 1; i < t.size(); ++i) {
        if (t[i].log_s <= log_tail) {
          const auto& lo = t[i - 1];
          const auto& hi = t[i];
          double x;
          if (hi.log_s == lo.log_s) {
            x = lo.log_m;
          } else {
            x = lo.log_m + (hi.log_m - lo.log_m) * (log_tail - lo.log_s) / (hi.log_s - lo.log_s);
          }
          return detail::quantile_ceil(d, x, log_tail);
        }
      }
      return std::nullopt;
    }
    case OffspringFamily::Collapsed:
      return std::nullopt;
  }
  return std::nullopt;
}

inline LogReal offspring_quantile_log_tail(const OffspringDist& d, double log_tail) {
  auto q = offspring_quantile_log_tail_opt(d, log_tail);
  if (!q) throw std::domain_error("offspring quantile has no closed form here");
  return *q;
}

// Same quantile with the level passed as log(1/tail) >= 0, the natural scale
// for speed recursions (level n feeds log h(n) back in directly).
inline LogReal offspring_quantile_log(const OffspringDist& d, double log_inv_tail) {
  if (!(log_inv_tail >= 0))
    throw std::invalid_argument("offspring_quantile_log: log_inv_tail must be >= 0");
  return offspring_quantile_log_tail(d, -log_inv_tail);
}

// Quantile with the tail level passed one exponential level down: neg_log_tail
// holds the value -log(1-u) in log-space storage, and the result holds
// log F^-1(u) the same way. Tower-growth speed sequences stay representable one
// step past the double exponent range this way; the integer ceiling is applied
// only while the quantile is exactly delegable.
inline std::optional<LogReal> offspring_quantile_loglog(const OffspringDist& d,
                                                        const LogReal& neg_log_tail) {
  if (neg_log_tail.is_nan()) return std::nullopt;
  if (!neg_log_tail.is_overflow() && neg_log_tail.linear() < 700) {
    auto q = offspring_quantile_log_tail_opt(d, -neg_log_tail.linear());
    if (!q) return std::nullopt;
    if (q->is_overflow()) return LogReal::overflow();
    return LogReal::from_linear(q->log());
  }
  switch (d.family) {
    case OffspringFamily::PowerTail:
      return neg_log_tail * LogReal::from_linear(1.0 / d.beta);
    case OffspringFamily::LogTail: {
      double t = neg_log_tail.linear();  // saturates to +inf past double range
      return std::isinf(t) ? LogReal::overflow() : LogReal::from_log(t + std::log(kLn2));
    }
    case OffspringFamily::Geometric: {
      double lq = std::log1p(-1.0 / (1.0 + d.mean_param));
      return LogReal::from_linear(neg_log_tail.log() - std::log(-lq));
    }
    case OffspringFamily::Deterministic:
      if (d.det_k == 0) return std::nullopt;
      return LogReal::from_linear(std::log(static_cast<double>(d.det_k)));
    case OffspringFamily::PiecewiseTail:
    case OffspringFamily::Collapsed:
      return std::nullopt;  // finite tables are exhausted far below this regime
  }
  return std::nullopt;
}

// Ordinary-scale left inverse at u in (0,1).
inline LogReal offspring_quantile(const OffspringDist& d, double u) {
  if (!(u > 0) || !(u < 1)) throw std::invalid_argument("offspring_quantile: u must be in (0,1)");
  return offspring_quantile_log_tail(d, std::log1p(-u));
}

inline double offspring_zero_mass(const OffspringDist& d) {
  switch (d.family) {
    case OffspringFamily::Geometric:
      return 1.0 - d.geo_q();
    case OffspringFamily::Deterministic:
      return d.det_k == 0 ? 1.0 : 0.0;
    case OffspringFamily::Collapsed:
      throw std::domain_error("collapsed offspring: zero mass not closed-form");
    default:
      return 0.0;  // heavy-tailed families here have support above 1
  }
}

struct MeanInfo {
  bool known = true;
  bool finite = false;
  double value = std::numeric_limits<double>::infinity();
  LogReal lower_bound = LogReal::zero();  // for table families: mass seen in-table
};

inline MeanInfo offspring_mean(const OffspringDist& d) {
  MeanInfo m;
  switch (d.family) {
    case OffspringFamily::PowerTail:
    case OffspringFamily::LogTail:
      m.finite = false;
      m.lower_bound = LogReal::overflow();
      return m;
    case OffspringFamily::Geometric:
      m.finite = true;
      m.value = d.mean_param;
      return m;
    case OffspringFamily::Deterministic:
      m.finite = true;
      m.value = static_cast<double>(d.det_k);
      return m;
    case OffspringFamily::PiecewiseTail: {
      // E Z = sum_m S(m); bounded below by the integral of the tabled envelope.
      LogReal sum = LogReal::zero();
      const auto& t = d.table;
      sum += LogReal::from_log(t.front().log_s + t.front().log_m);  // S constant below first point
      for (size_t i = 1; i < t.size(); ++i) {
        // segment S = C m^g on [m1,m2]; integral = (S2 m2 - S1 m1)/(g+1) for g != -1
        double g = (t[i].log_s - t[i - 1].log_s) / (t[i].log_m - t[i - 1].log_m);
        LogReal hi = LogReal::from_log(t[i].log_s + t[i].log_m);
        LogReal lo = LogReal::from_log(t[i - 1].log_s + t[i - 1].log_m);
        if (std::abs(g + 1) < 1e-12) {
          sum += LogReal::from_log(t[i - 1].log_s + t[i - 1].log_m) *
                 LogReal::from_linear(t[i].log_m - t[i - 1].log_m);
        } else if (g > -1) {
          sum += LogReal::sub(hi, lo) / LogReal::from_linear(std::abs(g + 1));
        } else {
          sum += LogReal::sub(lo, hi) / LogReal::from_linear(std::abs(g + 1));
        }
      }
      m.known = false;  // tail beyond the table is unspecified
      m.lower_bound = sum;
      m.finite = false;
      return m;
    }
    case OffspringFamily::Collapsed:
      // Any zero-weight subtree with H >= 1 already makes E zeta infinite;
      // callers treat collapsed offspring as infinite-mean.
      m.finite = false;
      m.lower_bound = LogReal::overflow();
      return m;
  }
  return m;
}

// K_Z(s) = 1 - G_Z(1-s) = s (1 - Pr{Z=0} + sum_{k>=1} (1-s)^k Pr{Z>k}).
struct KFunctionResult {
  double value = 0;
  bool truncated = false;
  size_t terms = 0;
};

inline KFunctionResult k_function(const OffspringDist& d, double s, double rel_tol = 1e-16,
                                  size_t max_terms = 50'000'000) {
  if (!(s > 0) || !(s > 0 && s <= 1)) throw std::invalid_argument("k_function: s must be in (0,1]");
  KFunctionResult r;
  if (d.family == OffspringFamily::Deterministic) {
    // closed form: 1 - (1-s)^k
    r.value = -std::expm1(static_cast<double>(d.det_k) * std::log1p(-s));
    return r;
  }
  if (d.family == OffspringFamily::Geometric) {
    // G(x) = (1-q)/(1-qx) => K(s) = 1 - (1-q)/(1-q(1-s))
    double q = d.geo_q();
    r.value = 1.0 - (1.0 - q) / (1.0 - q * (1.0 - s));
    return r;
  }
  double acc = 1.0 - offspring_zero_mass(d);
  double log1ms = std::log1p(-s);
  for (size_t k = 1;; ++k) {
    auto ls = offspring_survival_log_opt(d, std::log(static_cast<double>(k)));
    if (!ls) {  // table ran out: geometric tail of the last seen survival bounds the rest
      r.truncated = true;
      break;
    }
    double term = std::exp(static_cast<double>(k) * log1ms + *ls);
    acc += term;
    r.terms = k;
    // remaining tail <= term * (1-s)/s
    if (term * (1.0 - s) / s < rel_tol * acc || term == 0) break;
    if (k >= max_terms) {
      r.truncated = true;
      break;
    }
  }
  r.value = s * acc;
  return r;
}

// Probability generating function; series families truncate at relative 1e-16.
inline double offspring_pgf(const OffspringDist& d, double s) {
  if (!(s >= 0) || !(s <= 1)) throw std::invalid_argument("pgf: s must be in [0,1]");
  switch (d.family) {
    case OffspringFamily::Deterministic:
      return std::pow(s, static_cast<double>(d.det_k));
    case OffspringFamily::Geometric: {
      double q = d.geo_q();
      return (1.0 - q) / (1.0 - q * s);
    }
    case OffspringFamily::PowerTail:
    case OffspringFamily::LogTail:
    case OffspringFamily::PiecewiseTail: {
      if (s == 1.0) return 1.0;
      if (s == 0.0) return offspring_zero_mass(d);
      // G(s) = sum_k s^k (S(k-1) - S(k)); grouped as (1-s) sum_k s^k S(k) + p0-ish terms:
      // G(s) = 1 - (1-s) * sum_{k>=0} s^k S(k)
      double acc = 0;
      for (size_t k = 0; k < 100'000'000; ++k) {
        auto ls = offspring_survival_log_opt(d, k == 0 ? -1e300 : std::log(static_cast<double>(k)));
        if (!ls) break;
        double term = std::exp(static_cast<double>(k) * std::log(s) + *ls);
        acc += term;
        if (term / s < 1e-17 * acc && k > 4) break;
      }
      return 1.0 - (1.0 - s) * acc;
    }
    case OffspringFamily::Collapsed:
      throw std::domain_error("collapsed offspring: pgf not closed-form");
  }
  return 0;
}

struct OffspringDraw {
  LogReal count;
  bool capped = false;
};

// Inverse-cdf sampling: V ~ U(0,1] used as the tail mass. cap bounds the
// returned count; hitting it sets the flag (the draw is then a lower bound).
inline OffspringDraw sample_offspring(const OffspringDist& d, Rng& rng, double cap);

namespace detail {
// Offspring of the collapse transform: the root's zero-weight subtree is
// flattened and its positively-weighted children pooled. BFS with a node cap.
inline OffspringDraw sample_collapsed(const OffspringDist& d, Rng& rng, double cap) {
  OffspringDraw out;
  double pending = 1;  // zero-weight nodes whose children are unexplored
  LogReal total = LogReal::zero();
  double processed = 0;
  while (pending > 0) {
    pending -= 1;
    processed += 1;
    auto z = sample_offspring(*d.base, rng, cap);
    if (z.capped) out.capped = true;
    auto zero_kids = sample_binomial(rng, z.count, d.zero_weight_p);
    total += LogReal::sub(z.count, zero_kids.value);
    auto zk = zero_kids.value.exact_integer();
    if (!zk) {  // zero-weight subtree exploded past anything walkable
      out.capped = true;
      break;
    }
    pending += *zk;
    if (processed + pending > cap) {
      out.capped = true;
      break;
    }
  }
  out.count = total;
  return out;
}
}  // namespace detail

inline OffspringDraw sample_offspring(const OffspringDist& d, Rng& rng, double cap) {
  if (d.family == OffspringFamily::Collapsed) return detail::sample_collapsed(d, rng, cap);
  OffspringDraw out;
  double log_tail = rng.log_u01();
  auto q = offspring_quantile_log_tail_opt(d, log_tail);
  if (!q) {  // beyond a finite table: report the cap
    out.count = LogReal::from_linear(cap);
    out.capped = true;
    return out;
  }
  out.count = *q;
  if (LogReal::from_linear(cap) < out.count) {
    out.count = LogReal::from_linear(cap);
    out.capped = true;
  }
  return out;
}

// ------------------------------------------------------------------
// weight distributions
// ------------------------------------------------------------------

enum class WeightFamily { Uniform01, Exponential, PointMass, DoubleExpSmall, LogInverse, Atomic, MixtureZero };

struct WeightAtom {
  LogReal pos;   // support point (zero allowed)
  LogReal mass;  // probability mass
};

struct WeightDist;
using WeightPtr = std::shared_ptr<const WeightDist>;

// DoubleExpSmall: F(w) = exp(-exp(1/w)) for w in (0, 1/2], linear up to F(1)=1.
// LogInverse(a):  F(w) = (ln 1/w)^-a  for w in (0, e^-2], linear up to F(1)=1.
constexpr double kDesKnee = 0.5;
inline double des_knee_cdf() { return std::exp(-std::exp(2.0)); }
inline double loginv_knee(double) { return std::exp(-2.0); }
inline double loginv_knee_cdf(double alpha) { return std::pow(2.0, -alpha); }

struct WeightDist {
  WeightFamily family = WeightFamily::Uniform01;
  double rate = 1;    // Exponential
  double point = 1;   // PointMass
  double alpha = 1;   // LogInverse
  std::vector<WeightAtom> atoms;       // Atomic, positions strictly increasing
  std::vector<LogReal> atom_cum;       // cumulative masses, same indexing
  WeightPtr base;                      // MixtureZero
  double zero_p = 0;                   // MixtureZero mass at zero
  long long zero_p_num = 0, zero_p_den = 0;  // exact rational zero mass if > 0 den

  static WeightDist uniform01() { return WeightDist{}; }
  static WeightDist exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential: rate must be positive");
    WeightDist d;
    d.family = WeightFamily::Exponential;
    d.rate = rate;
    return d;
  }
  static WeightDist point_mass(double a) {
    if (!(a >= 0)) throw std::invalid_argument("point_mass: position must be >= 0");
    WeightDist d;
    d.family = WeightFamily::PointMass;
    d.point = a;
    return d;
  }
  static WeightDist double_exp_small() {
    WeightDist d;
    d.family = WeightFamily::DoubleExpSmall;
    return d;
  }
  static WeightDist log_inverse(double alpha) {
    if (!(alpha > 0)) throw std::invalid_argument("log_inverse: alpha must be positive");
    WeightDist d;
    d.family = WeightFamily::LogInverse;
    d.alpha = alpha;
    return d;
  }
  static WeightDist atomic(std::vector<WeightAtom> atoms) {
    if (atoms.empty()) throw std::invalid_argument("atomic: no atoms");
    std::sort(atoms.begin(), atoms.end(),
              [](const WeightAtom& a, const WeightAtom& b) { return a.pos < b.pos; });
    WeightDist d;
    d.family = WeightFamily::Atomic;
    d.atoms = std::move(atoms);
    LogReal cum = LogReal::zero();
    for (auto& a : d.atoms) {
      cum += a.mass;
      d.atom_cum.push_back(cum);
    }
    if (std::abs(cum.log()) > 1e-9)
      throw std::invalid_argument("atomic: masses must sum to 1 (log-space check)");
    return d;
  }
  static WeightDist mixture_zero(double p, WeightPtr base_dist, long long pnum = 0,
                                 long long pden = 0) {
    if (!(p >= 0) || !(p < 1)) throw std::invalid_argument("mixture_zero: p must be in [0,1)");
    if (!base_dist) throw std::invalid_argument("mixture_zero: null base");
    WeightDist d;
    d.family = WeightFamily::MixtureZero;
    d.zero_p = p;
    d.base = std::move(base_dist);
    d.zero_p_num = pnum;
    d.zero_p_den = pden;
    return d;
  }
  static WeightDist mixture_zero(double p, WeightDist base_dist, long long pnum = 0,
                                 long long pden = 0) {
    return mixture_zero(p, std::make_shared<const WeightDist>(std::move(base_dist)), pnum, pden);
  }
};

inline double weight_zero_mass(const WeightDist& d) {
  switch (d.family) {
    case WeightFamily::MixtureZero:
      return d.zero_p;
    case WeightFamily::PointMass:
      return d.point == 0 ? 1.0 : 0.0;
    case WeightFamily::Atomic: {
      double p = 0;
      for (const auto& a : d.atoms)
        if (a.pos.is_zero()) p += a.mass.linear();
      return p;
    }
    default:
      return 0.0;
  }
}

inline double weight_cdf(const WeightDist& d, double w) {
  if (w < 0) return 0;
  switch (d.family) {
    case WeightFamily::Uniform01:
      return w >= 1 ? 1.0 : w;
    case WeightFamily::Exponential:
      return -std::expm1(-d.rate * w);
    case WeightFamily::PointMass:
      return w >= d.point ? 1.0 : 0.0;
    case WeightFamily::DoubleExpSmall: {
      if (w >= 1) return 1;
      if (w == 0) return 0;
      if (w <= kDesKnee) return std::exp(-std::exp(1.0 / w));
      double f0 = des_knee_cdf();
      return f0 + (w - kDesKnee) / (1.0 - kDesKnee) * (1.0 - f0);
    }
    case WeightFamily::LogInverse: {
      if (w >= 1) return 1;
      if (w == 0) return 0;
      double knee = loginv_knee(d.alpha);
      if (w <= knee) return std::pow(-std::log(w), -d.alpha);
      double f0 = loginv_knee_cdf(d.alpha);
      return f0 + (w - knee) / (1.0 - knee) * (1.0 - f0);
    }
    case WeightFamily::Atomic: {
      double acc = 0;
      for (size_t i = 0; i < d.atoms.size(); ++i) {
        if (d.atoms[i].pos.linear() <= w)
          acc = d.atom_cum[i].linear();
        else
          break;
      }
      return acc;
    }
    case WeightFamily::MixtureZero:
      return d.zero_p + (1.0 - d.zero_p) * weight_cdf(*d.base, w);
  }
  return 0;
}

// log Pr{W > t} for t >= 0; -inf when the support is exhausted.
inline double weight_survival_log(const WeightDist& d, double t) {
  if (t < 0) return 0.0;
  switch (d.family) {
    case WeightFamily::Uniform01:
      return t >= 1 ? -std::numeric_limits<double>::infinity() : std::log1p(-t);
    case WeightFamily::Exponential:
      return -d.rate * t;
    case WeightFamily::PointMass:
      return t < d.point ? 0.0 : -std::numeric_limits<double>::infinity();
    case WeightFamily::DoubleExpSmall:
    case WeightFamily::LogInverse: {
      double F = weight_cdf(d, t);
      return F >= 1 ? -std::numeric_limits<double>::infinity() : std::log1p(-F);
    }
    case WeightFamily::Atomic: {
      LogReal above = LogReal::zero();
      for (const auto& a : d.atoms)
        if (!(a.pos.linear() <= t)) above += a.mass;
      return above.log();
    }
    case WeightFamily::MixtureZero:
      return std::log1p(-d.zero_p) + weight_survival_log(*d.base, t);
  }
  return -std::numeric_limits<double>::infinity();
}

inline double weight_quantile_log_deep(const WeightDist& d, const LogReal& neg_log_u);

// Quantile with the level passed in log space; returns log of the weight.
// -inf means the weight is zero (an actual zero atom) or underflowed the
// double exponent range; +inf never occurs (weights of these families are
// bounded by max(1, point, 1/rate scale) which stays linear).
inline double weight_quantile_log(const WeightDist& d, double log_u) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  if (log_u == neg_inf) return weight_quantile_log_deep(d, LogReal::overflow());
  if (log_u > 0) throw std::invalid_argument("weight_quantile_log: log_u must be <= 0");
  switch (d.family) {
    case WeightFamily::Uniform01:
      return log_u;
    case WeightFamily::Exponential: {
      if (log_u < -40) return log_u - std::log(d.rate);  // -log1p(-u) ~ u
      double u = std::exp(log_u);
      return std::log(-std::log1p(-u)) - std::log(d.rate);
    }
    case WeightFamily::PointMass:
      return d.point > 0 ? std::log(d.point) : neg_inf;
    case WeightFamily::DoubleExpSmall: {
      double lf0 = -std::exp(2.0);  // log of knee cdf
      if (log_u <= lf0) return -std::log(std::log(-log_u));
      double u = std::exp(log_u), f0 = des_knee_cdf();
      return std::log(kDesKnee + (u - f0) / (1.0 - f0) * (1.0 - kDesKnee));
    }
    case WeightFamily::LogInverse: {
      double lf0 = -d.alpha * kLn2;  // log of knee cdf 2^-alpha
      if (log_u <= lf0) return -std::exp(-log_u / d.alpha);
      double u = std::exp(log_u), f0 = loginv_knee_cdf(d.alpha), knee = loginv_knee(d.alpha);
      return std::log(knee + (u - f0) / (1.0 - f0) * (1.0 - knee));
    }
    case WeightFamily::Atomic: {
      double slack = 32 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(log_u));
      for (size_t i = 0; i < d.atoms.size(); ++i)
        if (d.atom_cum[i].log() >= log_u - slack) return d.atoms[i].pos.log();
      return d.atoms.back().pos.log();
    }
    case WeightFamily::MixtureZero: {
      if (d.zero_p > 0 && log_u <= std::log(d.zero_p)) return neg_inf;
      double u = std::exp(log_u);
      double v = (u - d.zero_p) / (1.0 - d.zero_p);
      if (v <= 0) return neg_inf;
      return weight_quantile_log(*d.base, std::log(v));
    }
  }
  return neg_inf;
}

// Quantile with the level passed two exponential steps down: neg_log_u holds
// the value -log(u) in log-space storage. This is the workhorse for summing
// F_W^-1(1/h_n) along speed sequences whose h_n overflow doubles: with a
// slowly varying quantile (the doubly-exponential small-weight family) the
// terms are still order 1/log(h_n) and must not be flushed to zero. Returns
// log of the weight; -inf only when the weight genuinely underflows or is an
// exact zero atom.
inline double weight_quantile_log_deep(const WeightDist& d, const LogReal& neg_log_u) {
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  double t = neg_log_u.linear();  // -log u, saturating to +inf
  switch (d.family) {
    case WeightFamily::Uniform01:
      return -t;
    case WeightFamily::Exponential:
      if (t < 40) break;
      return -t - std::log(d.rate);
    case WeightFamily::PointMass:
      return d.point > 0 ? std::log(d.point) : neg_inf;
    case WeightFamily::DoubleExpSmall:
      if (t < std::exp(2.0)) break;
      // w = 1/log(-log u); the inner log is exactly the stored exponent
      return -std::log(neg_log_u.log());
    case WeightFamily::LogInverse: {
      if (t < d.alpha * kLn2) break;
      double e = t / d.alpha;  // w = exp(-exp(e)); underflows honestly past e ~ 709
      return e > 709 ? neg_inf : -std::exp(e);
    }
    case WeightFamily::Atomic:
      if (t < 700) break;
      return d.atoms.front().pos.log();
    case WeightFamily::MixtureZero:
      if (d.zero_p > 0) return neg_inf;  // u is below the zero atom's mass here
      if (t < 700) break;
      return weight_quantile_log_deep(*d.base, neg_log_u);
  }
  return weight_quantile_log(d, -t);
}

inline double weight_quantile(const WeightDist& d, double u) {
  if (!(u > 0) || !(u <= 1)) throw std::invalid_argument("weight_quantile: u must be in (0,1]");
  if (u == 1 && d.family == WeightFamily::Exponential) u = std::nextafter(1.0, 0.0);
  return std::exp(weight_quantile_log(d, std::log(u)));
}

inline double weight_sample(const WeightDist& d, Rng& rng) {
  return std::exp(weight_quantile_log(d, rng.log_u01()));
}

// W conditioned on W > 0, i.e. the edge law after collapsing zero-weight
// subtrees. Closed-form for the supported families.
inline WeightDist collapsed_weight(const WeightDist& d) {
  switch (d.family) {
    case WeightFamily::MixtureZero:
      // The explicit zero atom disappears; the base may itself carry one
      // (nested mixtures), so condition it recursively.
      return collapsed_weight(*d.base);
    case WeightFamily::Atomic: {
      std::vector<WeightAtom> pos_atoms;
      LogReal zero_mass = LogReal::zero();
      for (const auto& a : d.atoms)
        if (a.pos.is_zero())
          zero_mass += a.mass;
        else
          pos_atoms.push_back(a);
      if (pos_atoms.empty()) throw std::domain_error("collapsed_weight: all mass at zero");
      if (pos_atoms.size() == 1) return WeightDist::point_mass(pos_atoms.front().pos.linear());
      LogReal renorm = LogReal::sub(LogReal::one(), zero_mass);
      for (auto& a : pos_atoms) a.mass = a.mass / renorm;
      return WeightDist::atomic(std::move(pos_atoms));
    }
    case WeightFamily::PointMass:
      if (d.point == 0) throw std::domain_error("collapsed_weight: all mass at zero");
      return d;
    default:
      return d;  // continuous families carry no mass at zero
  }
}

}  // namespace brw
