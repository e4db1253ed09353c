#ifndef BRW_COLLAPSE_HPP
#define BRW_COLLAPSE_HPP

// Atom-at-zero case analysis and the zero-weight collapse transform. The
// product H = E{Z} * Pr{W = 0} splits configurations into subcritical zero-
// weight components (H < 1), supercritical ones carrying infinite zero-weight
// paths (H > 1), and the critical knife edge H = 1, where collapsing each
// zero-weight component into a single vertex yields a new offspring law zeta.
// The displacement law after collapse is W conditioned on being positive.
// The collapsed generating function satisfies the fixed-point identity
//   G_zeta(s) = G_Z((1-p) s + p G_zeta(s)),
// which is verified here by Monte Carlo with bootstrap error bars.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "brw/distributions.hpp"
#include "brw/logreal.hpp"
#include "brw/parallel.hpp"
#include "brw/rng.hpp"
#include "brw/sampling.hpp"

namespace brw {

// ---------------------------------------------------------------------------
// case classification
// ---------------------------------------------------------------------------

// Exact rational witness for a probability or a mean. The knife edge H = 1
// has measure zero, so equality is only ever declared through these.
struct Rational {
  long long num = 0;
  long long den = 1;
};

enum class CollapseCase { I, II, III, InfiniteMean };

struct CaseReport {
  double h = 0;  // E{Z} * Pr{W = 0}
  CollapseCase label = CollapseCase::I;
  double p = 0;  // Pr{W = 0}
  bool mean_finite = true;
  double mean_z = 0;  // +inf when infinite
  bool exact = false;  // knife edge decided in exact rational arithmetic
  std::string note;
};

namespace detail {

// Structural rational witness for Pr{W = 0}, where one exists.
inline std::optional<Rational> zero_mass_witness(const WeightDist& w) {
  switch (w.family) {
    case WeightFamily::Uniform01:
    case WeightFamily::Exponential:
    case WeightFamily::DoubleExpSmall:
    case WeightFamily::LogInverse:
      return Rational{0, 1};  // continuous on positive support
    case WeightFamily::PointMass:
      return w.point == 0 ? Rational{1, 1} : Rational{0, 1};
    case WeightFamily::MixtureZero:
      if (w.base && weight_zero_mass(*w.base) > 0) return std::nullopt;  // nested zero mass
      if (w.zero_p_den > 0) return Rational{w.zero_p_num, w.zero_p_den};
      if (w.zero_p == 0) return Rational{0, 1};
      return std::nullopt;
    case WeightFamily::Atomic: {
      for (const auto& a : w.atoms)
        if (a.pos.is_zero()) return std::nullopt;  // mass stored in log space
      return Rational{0, 1};
    }
  }
  return std::nullopt;
}

inline std::optional<Rational> mean_witness(const OffspringDist& z) {
  if (z.family == OffspringFamily::Deterministic) return Rational{z.det_k, 1};
  return std::nullopt;
}

}  // namespace detail

// The weight law conditioned on being positive: the per-edge weight of the
// collapsed tree. MixtureZero drops its zero component; Atomic renormalizes
// the positive atoms. Laws without mass at zero are returned unchanged.
inline WeightDist conditional_positive_weight(const WeightDist& w) {
  double p = weight_zero_mass(w);
  if (p == 0) return w;
  if (p >= 1)
    throw std::invalid_argument("conditional_positive_weight: weight is almost surely zero");
  switch (w.family) {
    case WeightFamily::MixtureZero:
      return *w.base;
    case WeightFamily::Atomic: {
      std::vector<WeightAtom> kept;
      LogReal norm = LogReal::from_linear(1.0 - p);
      for (const auto& a : w.atoms)
        if (!a.pos.is_zero()) kept.push_back({a.pos, a.mass / norm});
      return WeightDist::atomic(kept);
    }
    default:
      throw std::invalid_argument(
          "conditional_positive_weight: no positive-part decomposition for this family");
  }
}

inline CaseReport classify_case(const OffspringDist& z, const WeightDist& w,
                                std::optional<Rational> mean_exact = std::nullopt,
                                std::optional<Rational> p_exact = std::nullopt) {
  CaseReport r;
  r.p = weight_zero_mass(w);
  auto m = offspring_mean(z);
  r.mean_finite = m.known && m.finite;
  r.mean_z = r.mean_finite ? m.value : std::numeric_limits<double>::infinity();
  if (!r.mean_finite) {
    r.label = CollapseCase::InfiniteMean;
    r.h = r.p > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    r.note = m.known ? "offspring mean is infinite"
                     : "offspring mean has no closed form; treated as unbounded";
    return r;
  }
  r.h = r.mean_z * r.p;
  if (!mean_exact) mean_exact = detail::mean_witness(z);
  if (!p_exact) p_exact = detail::zero_mass_witness(w);
  if (mean_exact && p_exact && mean_exact->den > 0 && p_exact->den > 0) {
    // H vs 1  <=>  mean_num * p_num vs mean_den * p_den, exactly.
    __int128 lhs = static_cast<__int128>(mean_exact->num) * p_exact->num;
    __int128 rhs = static_cast<__int128>(mean_exact->den) * p_exact->den;
    r.exact = true;
    r.label = lhs < rhs ? CollapseCase::I : (lhs > rhs ? CollapseCase::II : CollapseCase::III);
    return r;
  }
  // No exact witnesses: the knife edge goes through a tolerance gate, flagged.
  if (std::abs(r.h - 1.0) <= 1e-12) {
    r.label = CollapseCase::III;
    r.note = "H = 1 within tolerance 1e-12 (no exact rational witnesses)";
  } else {
    r.label = r.h < 1 ? CollapseCase::I : CollapseCase::II;
  }
  return r;
}

// ---------------------------------------------------------------------------
// collapsed offspring (zeta) and zero-weight component size
// ---------------------------------------------------------------------------

struct ZetaDraw {
  LogReal count;
  bool truncated = false;
};

// Number of positive-weight children hanging off the zero-weight component at
// the root, after that component is collapsed into a single vertex. The walk
// is truncated at cap processed nodes (the component is finite a.s. only when
// E{Z} Pr{W=0} <= 1).
inline ZetaDraw sample_zeta(const OffspringDist& z, double p, Rng& rng, double cap = 100000) {
  if (!(p > 0) || !(p < 1)) throw std::invalid_argument("sample_zeta: p must be in (0,1)");
  auto d = OffspringDist::collapsed(std::make_shared<const OffspringDist>(z), p);
  auto draw = sample_offspring(d, rng, cap);
  return {draw.count, draw.capped};
}

struct ComponentDraw {
  double size = 1;  // nodes joined to the root by zero-weight edges, root included
  bool truncated = false;
};

inline ComponentDraw sample_zero_component(const OffspringDist& z, double p, Rng& rng,
                                           double cap = 100000) {
  if (!(p > 0) || !(p < 1))
    throw std::invalid_argument("sample_zero_component: p must be in (0,1)");
  ComponentDraw out;
  double pending = 1;  // unprocessed component nodes
  double size = 0;
  while (pending > 0) {
    if (size >= cap) {
      out.truncated = true;
      break;
    }
    pending -= 1;
    size += 1;
    auto kids = sample_offspring(z, rng, std::numeric_limits<double>::infinity());
    auto zero_kids = sample_binomial(rng, kids.count, p);
    auto zk = zero_kids.value.exact_integer();
    if (!zk) {  // component exploded past anything walkable
      out.truncated = true;
      break;
    }
    pending += *zk;
  }
  out.size = size;
  return out;
}

// Batch of component sizes for tail-shape studies. Truncated draws report the
// cap; survival frequencies Pr{S >= k} are exact for k <= cap.
struct ComponentSample {
  std::vector<double> sizes;
  std::size_t truncated = 0;
};

inline ComponentSample sample_zero_components(const OffspringDist& z, double p,
                                              std::size_t reps, double cap = 100000,
                                              std::uint64_t seed = 1, unsigned threads = 1) {
  ComponentSample out;
  out.sizes.resize(reps);
  std::vector<std::uint8_t> tr(reps, 0);
  detail::parallel_reps(reps, threads, [&](std::size_t i) {
    Rng rng(seed, StreamTag::Zeta, i);
    auto d = sample_zero_component(z, p, rng, cap);
    out.sizes[i] = d.size;
    tr[i] = d.truncated ? 1 : 0;
  });
  for (auto t : tr) out.truncated += t;
  return out;
}

// ---------------------------------------------------------------------------
// functional-equation verification
// ---------------------------------------------------------------------------

struct FunctionalEqPoint {
  double s = 0;
  double g_hat = 0;     // Monte Carlo estimate of G_zeta(s)
  double rhs = 0;       // G_Z((1-p) s + p g_hat)
  double residual = 0;  // g_hat - rhs, signed
  double se = 0;        // bootstrap standard error of the residual
  bool flagged = false;  // truncation fraction above 1%
};

struct FunctionalEqResult {
  std::vector<FunctionalEqPoint> points;
  double max_abs_residual = 0;
  std::size_t reps = 0;
  std::size_t bootstrap = 0;
  double truncated_fraction = 0;
};

// Estimates G_zeta on a grid by the Monte Carlo mean of s^zeta and reports
// the plug-in residual of the fixed-point identity with a bootstrap standard
// error per grid point. One zeta sample is shared across the grid.
inline FunctionalEqResult verify_functional_equation(const OffspringDist& z, double p,
                                                     const std::vector<double>& s_grid,
                                                     std::size_t reps, std::uint64_t seed = 1,
                                                     double cap = 100000,
                                                     std::size_t bootstrap = 200,
                                                     unsigned threads = 1) {
  if (reps < 2) throw std::invalid_argument("verify_functional_equation: reps must be >= 2");
  for (double s : s_grid)
    if (!(s >= 0) || !(s <= 1))
      throw std::invalid_argument("verify_functional_equation: s must be in [0,1]");
  FunctionalEqResult out;
  out.reps = reps;
  out.bootstrap = bootstrap;

  std::vector<double> zeta(reps);
  std::vector<std::uint8_t> tr(reps, 0);
  detail::parallel_reps(reps, threads, [&](std::size_t i) {
    Rng rng(seed, StreamTag::Zeta, i);
    auto d = sample_zeta(z, p, rng, cap);
    zeta[i] = d.count.linear();  // saturates to +inf; s^inf = 0 for s < 1
    tr[i] = d.truncated ? 1 : 0;
  });
  std::size_t ntr = 0;
  for (auto t : tr) ntr += t;
  out.truncated_fraction = static_cast<double>(ntr) / static_cast<double>(reps);

  auto pgf_at = [&](double s, double g) {
    double arg = (1.0 - p) * s + p * g;
    if (arg > 1) arg = 1;  // guard fp drift at s = 1
    return offspring_pgf(z, arg);
  };

  std::vector<double> x(reps);
  std::vector<double> boot(bootstrap);
  for (std::size_t pi = 0; pi < s_grid.size(); ++pi) {
    double s = s_grid[pi];
    for (std::size_t i = 0; i < reps; ++i)
      x[i] = zeta[i] == 0 ? 1.0 : std::pow(s, zeta[i]);
    double sum = 0;
    for (double v : x) sum += v;
    FunctionalEqPoint pt;
    pt.s = s;
    pt.g_hat = sum / static_cast<double>(reps);
    pt.rhs = pgf_at(s, pt.g_hat);
    pt.residual = pt.g_hat - pt.rhs;
    pt.flagged = out.truncated_fraction > 0.01;
    // Bootstrap the whole plug-in residual (resampled mean on both sides).
    detail::parallel_reps(bootstrap, threads, [&](std::size_t b) {
      Rng rng(seed, StreamTag::FunctionalEq,
              (static_cast<std::uint64_t>(pi) << 32) | static_cast<std::uint64_t>(b));
      double bs = 0;
      for (std::size_t i = 0; i < reps; ++i) bs += x[rng.below(reps)];
      double gb = bs / static_cast<double>(reps);
      boot[b] = gb - pgf_at(s, gb);
    });
    double bm = 0;
    for (double v : boot) bm += v;
    bm /= static_cast<double>(bootstrap);
    double bv = 0;
    for (double v : boot) bv += (v - bm) * (v - bm);
    pt.se = bootstrap > 1 ? std::sqrt(bv / static_cast<double>(bootstrap - 1)) : 0.0;
    out.max_abs_residual = std::max(out.max_abs_residual, std::abs(pt.residual));
    out.points.push_back(pt);
  }
  return out;
}

}  // namespace brw

#endif  // BRW_COLLAPSE_HPP
