#pragma once

// Shared samplers that have to work far outside the comfortable range of
// library routines: binomial counts whose n may only exist in log space, and
// descending uniform order statistics over astronomically many draws.

#include <cmath>
#include <cstdint>
#include <vector>

#include "logreal.hpp"
#include "rng.hpp"

namespace brw {

// Standard normal via Box-Muller (one draw per call; the sine twin is
// dropped to keep the stream layout independent of call parity).
inline double normal(Rng& rng) {
  return std::sqrt(-2.0 * std::log(rng.u01_pos())) *
         std::cos(6.283185307179586 * rng.u01());
}

struct CountDraw {
  LogReal value;
  bool exact = true;  // false once an approximation regime was used
};

// Binomial(n, p) with n as LogReal. Regimes, from exact to approximate:
//   n <= 256                Bernoulli sum (exact)
//   n*p <= 50               cdf inversion walk from 0 (exact)
//   var <= 1e8              Gaussian with continuity correction (flagged)
//   anything larger         deterministic mean n*p in log space (flagged;
//                           relative fluctuation ~ 1/sqrt(n*p) is below any
//                           tolerance we report at that scale)
inline CountDraw sample_binomial(Rng& rng, LogReal n, double p) {
  CountDraw out;
  if (p <= 0 || n.is_zero()) {
    out.value = LogReal::zero();
    return out;
  }
  auto n_int = n.exact_integer();
  if (p >= 1) {
    out.value = n;
    return out;
  }
  if (n_int && *n_int <= 256) {
    uint64_t k = 0, nn = static_cast<uint64_t>(*n_int);
    for (uint64_t i = 0; i < nn; ++i)
      if (rng.u01() < p) ++k;
    out.value = LogReal::from_linear(static_cast<double>(k));
    return out;
  }
  if (n_int && *n_int * p <= 50.0) {
    double nn = *n_int;
    double q = std::exp(nn * std::log1p(-p));  // pmf at 0, no underflow since np<=50
    double u = rng.u01();
    double cdf = q, pmf = q;
    double k = 0;
    while (u > cdf && k < nn) {
      pmf *= (nn - k) / (k + 1) * (p / (1 - p));
      cdf += pmf;
      k += 1;
    }
    out.value = LogReal::from_linear(k);
    return out;
  }
  out.exact = false;
  if (n_int) {
    double nn = *n_int;
    double mean = nn * p, var = nn * p * (1 - p);
    if (var <= 1e8) {
      double k = std::round(mean + normal(rng) * std::sqrt(var));  // clamped into support
      if (k < 0) k = 0;
      if (k > nn) k = nn;
      out.value = LogReal::from_linear(k);
      return out;
    }
  }
  out.value = n * LogReal::from_linear(p);
  return out;
}

// Top-k order statistics of N iid uniforms, descending, as log-values.
// Uses the standard beta-transform recursion V_(j+1) = V_(j) * U^(1/(N-j)).
// N is a LogReal; for astronomically large N the j offset is negligible and
// intentionally dropped.
inline std::vector<double> top_uniform_logs(Rng& rng, LogReal n, size_t k) {
  std::vector<double> logs;
  logs.reserve(k);
  double cur = 0.0;
  auto n_int = n.exact_integer();
  for (size_t j = 0; j < k; ++j) {
    double denom_log;
    if (n_int && *n_int > static_cast<double>(j)) {
      denom_log = std::log(*n_int - static_cast<double>(j));
    } else if (!n_int) {
      denom_log = n.log();
    } else {
      break;  // fewer than k draws exist
    }
    cur += -std::exp(std::log(-rng.log_u01()) - denom_log) * 1.0;
    logs.push_back(cur);
  }
  return logs;
}

// Gamma(shape, 1). Marsaglia-Tsang squeeze for shape >= 1; small shapes use
// the boost Gamma(a) = Gamma(a+1) * U^(1/a); very large shapes switch to the
// normal limit (relative error O(1/sqrt(shape)) is far below double noise
// there). Used for order statistics of huge uniform samples: the j-th largest
// of n uniforms is 1 - Gamma(j)/n to relative accuracy O(j^2/n).
inline double sample_gamma(Rng& rng, double shape) {
  if (!(shape > 0)) throw std::invalid_argument("sample_gamma: shape must be positive");
  if (shape < 1) {
    double boost = std::pow(rng.u01_pos(), 1.0 / shape);
    return sample_gamma(rng, shape + 1.0) * boost;
  }
  if (shape > 1e14) return shape + std::sqrt(shape) * normal(rng);
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal(rng);
    double t = 1.0 + c * x;
    if (t <= 0) continue;
    double v = t * t * t;
    double u = rng.u01_pos();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

// log(1 - e^x) for x <= 0, stable across the whole range.
inline double log1m_exp(double x) {
  if (x < -1e-6) return std::log(-std::expm1(x));
  if (x == 0) return -745.0;               // degenerate input, clamp
  return std::log(-x) + std::log1p(x / 2);  // series for tiny |x|
}

// log of the minimum of N iid uniforms: log(1 - U^(1/N)) computed stably.
inline double min_uniform_log(Rng& rng, LogReal n) {
  double lu = rng.log_u01();  // log U, in (-inf, 0]
  if (lu == 0) lu = -1e-300;
  if (auto n_int = n.exact_integer()) return log1m_exp(lu / *n_int);
  // x = log(U)/N may underflow doubles for huge N; its log never does, and
  // below e^-38 the answer equals log(-x) to full double precision.
  double log_neg_x = std::log(-lu) - n.log();
  if (log_neg_x < -38) return log_neg_x;
  return log1m_exp(-std::exp(log_neg_x));
}

}  // namespace brw
