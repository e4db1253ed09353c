#ifndef BRW_COUNTEREXAMPLE_HPP
#define BRW_COUNTEREXAMPLE_HPP

// Log-space construction of the offspring law whose generation growth
// alternates between exponential periods of rapidly increasing length and
// rate, together with the matching atomic weight distribution and the
// numerical audit of the sufficient condition that separates explosion from
// min-summability.
//
// Scale notes. The genuine parameters (n_i = 10^(10^i)) put every interesting
// quantity far beyond linear doubles, so the module works throughout in a
// value channel of LogReal whose VALUE is the quantity of interest -- often
// itself already a logarithm (log m_i, log M_j, log f(n)). Outputs that must
// become plain doubles (the exported piecewise tail table) are truncated at
// the double range and flagged. Everything here is analytic: no sampling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "brw/distributions.hpp"
#include "brw/logreal.hpp"
#include "brw/speeds.hpp"

namespace brw {

// ---------------------------------------------------------------------------
// signed log-magnitude values
// ---------------------------------------------------------------------------

// A signed quantity whose magnitude may exceed double range; mag is a LogReal
// whose VALUE is |x|. Used for differences of huge positive log-space terms.
struct SignedLog {
  int sign = 0;  // -1, 0, +1
  LogReal mag = LogReal::zero();

  double to_double() const {
    if (sign == 0) return 0.0;
    return sign * mag.linear();  // saturates to +-inf past double range
  }
  // a - b for nonnegative LogReal values.
  static SignedLog diff(const LogReal& a, const LogReal& b) {
    SignedLog s;
    if (a >= b) {
      s.mag = LogReal::sub(a, b);
      s.sign = s.mag.is_zero() ? 0 : 1;
    } else {
      s.mag = LogReal::sub(b, a);
      s.sign = -1;
    }
    return s;
  }
};

inline bool signed_less(const SignedLog& a, const SignedLog& b) {
  if (a.sign != b.sign) return a.sign < b.sign;
  if (a.sign > 0) return a.mag < b.mag;
  if (a.sign < 0) return b.mag < a.mag;
  return false;
}

// ---------------------------------------------------------------------------
// the alternating-period offspring construction
// ---------------------------------------------------------------------------

// One growth period. All members are value-channel LogReals: n holds the
// period length n_i, log_m holds log m_i, and so on. M_j is the product
// prod_{i<=j} m_i^(2 n_i) (generation size at the end of period j), L_j =
// m_j M_{j-1} (size just after the period starts), N_j = sum_{i<=j} n_i.
struct CounterexamplePeriod {
  LogReal n;           // n_i
  LogReal eps;         // eps_i = 1/(10 n_i)
  LogReal log_m;       // log m_i
  LogReal n_cum;       // N_i
  LogReal log_m_prod;  // log M_i
  LogReal log_l;       // log L_i
};

struct CounterexampleSpec {
  std::vector<CounterexamplePeriod> periods;
  std::size_t requested = 0;  // periods asked for
  bool truncated = false;     // dropped periods whose log m left double range
  std::vector<std::string> violated_bounds;  // audited inequalities that fail
  std::vector<std::string> notes;

  // Growth ratio witness: f(n+1) >= c f(n) with log c = 2 min_i log m_i.
  LogReal swift_log_c() const {
    LogReal c = LogReal::overflow();
    for (const auto& p : periods)
      if (p.log_m < c) c = p.log_m;
    return c * LogReal::from_linear(2);
  }

  // VALUE log f(n) with f(n) = L_{i+1} m_{i+1}^(2(n - N_i) - 1) on the period
  // N_i < n <= N_{i+1}. Accepts any real n >= 1; nullopt beyond the last
  // period or below 1.
  std::optional<LogReal> log_f(const LogReal& n) const {
    if (periods.empty() || n < LogReal::one()) return std::nullopt;
    LogReal prev_cum = LogReal::zero();
    std::size_t j = 0;
    while (j < periods.size() && n > periods[j].n_cum) {
      prev_cum = periods[j].n_cum;
      ++j;
    }
    if (j == periods.size()) return std::nullopt;
    LogReal delta = LogReal::sub(n, prev_cum);  // in [1, n_j]
    bool ok = true;
    LogReal k = LogReal::sub(delta * LogReal::from_linear(2), LogReal::one(), &ok);
    if (!ok) return std::nullopt;  // n <= N_i within rounding: treat as below period
    return periods[j].log_l + k * periods[j].log_m;
  }

  // Closed-form tail: log Pr{Z > x} (left=false) or log Pr{Z >= x} (left=true)
  // with x given as log x. Valid while the involved log-coordinates fit into
  // doubles; nullopt beyond the last period's power branch.
  std::optional<double> log_survival(double log_x, bool left = false) const;

  // Export as a piecewise tail table for the distributions module. The jumps
  // at the period starts L_i are encoded as near-vertical drops of relative
  // width 1e-12 ending exactly at log L_i, so survival is exact everywhere
  // except inside those slivers. Truncates at the double range (flag set).
  std::optional<OffspringDist> tail_table(bool* table_truncated = nullptr) const;
};

namespace detail {

constexpr double kMaxLogValue = 1e306;  // cap for VALUEs that must become doubles

inline double drop_width(double log_l) { return std::max(1e-12, std::abs(log_l) * 1e-12); }

// Shared builder: canonical m choice is the constraint floor
//   log m_i = max(log 16 + 2 log n_i + 2 log M_{i-1}, extra_floor_i),
// the minimal choice satisfying the growth-separation inequality.
inline CounterexampleSpec build_counterexample_floors(const std::vector<LogReal>& n_seq,
                                                      const std::vector<LogReal>& extra_floor) {
  if (n_seq.empty()) throw std::invalid_argument("build_counterexample: empty length sequence");
  for (std::size_t i = 0; i < n_seq.size(); ++i) {
    if (n_seq[i] < LogReal::one())
      throw std::invalid_argument("build_counterexample: period lengths must be >= 1");
    if (i > 0 && !(n_seq[i] > n_seq[i - 1]))
      throw std::invalid_argument("build_counterexample: period lengths must be increasing");
  }
  CounterexampleSpec spec;
  spec.requested = n_seq.size();
  const LogReal log16 = LogReal::from_linear(std::log(16.0));
  const LogReal two = LogReal::from_linear(2);
  LogReal cum_n = LogReal::zero();
  LogReal log_m_prod = LogReal::zero();  // log M_0 = 0
  for (std::size_t i = 0; i < n_seq.size(); ++i) {
    CounterexamplePeriod p;
    p.n = n_seq[i];
    p.eps = LogReal::from_log(-std::log(10.0) - p.n.log());  // 1/(10 n_i)
    LogReal log_n = LogReal::from_linear(n_seq[i].log());    // VALUE log n_i
    LogReal floor = log16 + two * log_n + two * log_m_prod;
    if (i < extra_floor.size() && extra_floor[i] > floor) floor = extra_floor[i];
    if (floor.log() > std::log(kMaxLogValue)) {
      spec.truncated = true;
      std::ostringstream os;
      os << "period " << (i + 1) << " dropped: log m exceeds double range";
      spec.notes.push_back(os.str());
      break;
    }
    p.log_m = floor;
    p.log_l = p.log_m + log_m_prod;  // log L_i = log m_i + log M_{i-1}
    cum_n += p.n;
    p.n_cum = cum_n;
    log_m_prod += two * p.n * p.log_m;  // log M_i = log M_{i-1} + 2 n_i log m_i
    p.log_m_prod = log_m_prod;
    spec.periods.push_back(p);
  }
  if (spec.periods.empty())
    throw std::invalid_argument("build_counterexample: no period is representable in log-space");

  // Audited structural bounds; failures are recorded, not fatal.
  for (std::size_t i = 1; i < spec.periods.size(); ++i) {
    const auto& a = spec.periods[i - 1];
    const auto& b = spec.periods[i];
    if (!(b.n_cum > a.n_cum) || !(b.log_m_prod > a.log_m_prod))
      spec.violated_bounds.push_back("cumulative-length/product sequences not increasing at period " +
                                     std::to_string(i + 1));
    // Table monotonicity: the flat stretch at 1/M_i must end strictly before
    // the next period's jump coordinate log L_{i+1} (minus the drop sliver).
    LogReal flat_end = (LogReal::one() + a.eps) * a.log_m_prod;
    double bl = b.log_l.linear();
    LogReal jump_start = std::isfinite(bl)
                             ? LogReal::from_linear(bl - detail::drop_width(bl))
                             : b.log_l;
    if (!(flat_end < jump_start))
      spec.violated_bounds.push_back("period " + std::to_string(i + 1) +
                                     ": tail segment overlaps previous period");
  }
  return spec;
}

}  // namespace detail

inline std::optional<double> CounterexampleSpec::log_survival(double log_x, bool left) const {
  if (periods.empty()) return std::nullopt;
  if (!(std::abs(log_x) < detail::kMaxLogValue)) return std::nullopt;
  double prev_log_m_prod = 0;  // log M_0
  for (std::size_t i = 0; i < periods.size(); ++i) {
    const auto& p = periods[i];
    double log_l = p.log_l.linear();
    if (log_l > detail::kMaxLogValue) return std::nullopt;
    if (log_x < log_l || (left && log_x == log_l)) return -prev_log_m_prod;
    double log_m_prod = p.log_m_prod.linear();
    double one_eps = 1.0 + p.eps.linear();
    double power_end = one_eps * log_m_prod;
    if (power_end > detail::kMaxLogValue) {
      // Power branch extends past double range: answer while x is inside it.
      return -log_x / one_eps;
    }
    if (log_x <= power_end) return -log_x / one_eps;
    prev_log_m_prod = log_m_prod;
    // else: flat branch at 1/M_i until the next period's jump (loop advances)
  }
  return std::nullopt;  // beyond the last period's power branch
}

inline std::optional<OffspringDist> CounterexampleSpec::tail_table(bool* table_truncated) const {
  if (table_truncated) *table_truncated = false;
  std::vector<PiecewisePoint> pts;
  double prev_log_m_prod = 0;  // log M_0
  for (const auto& p : periods) {
    double log_l = p.log_l.linear();
    double one_eps = 1.0 + p.eps.linear();
    if (log_l > detail::kMaxLogValue) {
      if (table_truncated) *table_truncated = true;
      break;
    }
    double delta = detail::drop_width(log_l);
    pts.push_back({log_l - delta, -prev_log_m_prod});  // end of previous flat stretch
    pts.push_back({log_l, -log_l / one_eps});          // jump lands on the power branch
    double log_m_prod = p.log_m_prod.linear();
    double power_end = one_eps * log_m_prod;
    if (log_m_prod > detail::kMaxLogValue || power_end > detail::kMaxLogValue) {
      // Close the table on the power branch at the double cap.
      pts.push_back({detail::kMaxLogValue, -detail::kMaxLogValue / one_eps});
      if (table_truncated) *table_truncated = true;
      break;
    }
    pts.push_back({power_end, -log_m_prod});
    prev_log_m_prod = log_m_prod;
  }
  if (pts.size() < 2) return std::nullopt;
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (!(pts[k].log_m > pts[k - 1].log_m)) return std::nullopt;  // overlapping periods
  return OffspringDist::piecewise_tail(std::move(pts));
}

// n_seq entries are value-channel LogReals (VALUE n_i). log_g, when given, is
// the tail target in log space: log_g(log m) = log g(m); the premise
// Pr{Z >= g(m)} >= 1/m is then audited on a geometric grid and violations are
// recorded on the spec.
inline CounterexampleSpec build_counterexample(
    const std::vector<LogReal>& n_seq,
    const std::function<double(double)>& log_g = {}) {
  CounterexampleSpec spec = detail::build_counterexample_floors(n_seq, {});
  if (log_g) {
    const auto& last = spec.periods.back();
    double hi = std::min((1.0 + last.eps.linear()) * last.log_m_prod.linear(),
                         detail::kMaxLogValue);
    int violations = 0;
    const int kGrid = 96;
    for (int k = 0; k <= kGrid; ++k) {
      double log_m = hi * k / kGrid;
      if (log_m < 0) continue;
      auto s = spec.log_survival(log_g(log_m), /*left=*/true);
      if (!s) continue;  // beyond representable tail: not auditable
      if (*s < -log_m - 1e-9) ++violations;
    }
    if (violations > 0)
      spec.violated_bounds.push_back("tail target: Pr{Z >= g(m)} >= 1/m fails at " +
                                     std::to_string(violations) + " grid points");
    else
      spec.notes.push_back("tail target premise verified on a 97-point log grid");
  }
  return spec;
}

inline CounterexampleSpec build_counterexample_linear(
    const std::vector<double>& n_seq, const std::function<double(double)>& log_g = {}) {
  std::vector<LogReal> ns;
  ns.reserve(n_seq.size());
  for (double n : n_seq) ns.push_back(LogReal::from_linear(n));
  return build_counterexample(ns, log_g);
}

// The reference parameterization n_i = 10^(10^i), passed through the log
// channel since the lengths themselves leave double range at i = 4.
inline std::vector<LogReal> reference_period_lengths(int count) {
  if (count < 1) throw std::invalid_argument("reference_period_lengths: count must be >= 1");
  std::vector<LogReal> ns;
  for (int i = 1; i <= count; ++i)
    ns.push_back(LogReal::from_log(std::pow(10.0, i) * std::log(10.0)));
  return ns;
}

// ---------------------------------------------------------------------------
// the matching weight distribution
// ---------------------------------------------------------------------------

// Bookkeeping for the atomic weight construction: along the subsequence i_j
// with beta_{i_j} = sqrt(omega(n_{i_j})) >= 2^j, mass is placed so that
// Pr{W < 1/(beta_{i_j} q_{i_j})} = 1/f(q_{i_j}) exactly, with q_i =
// ceil(n_i / omega(n_i)). The infinite tail of the construction is compressed
// into one final atom just below the deepest position, which preserves every
// required left-tail value.
struct BadWeight {
  WeightDist weight = WeightDist::uniform01();
  std::vector<std::size_t> chosen;  // 0-based period indices i_j
  std::vector<LogReal> beta;        // VALUE beta_{i_j}
  std::vector<LogReal> q;           // VALUE q_{i_j}
  std::vector<LogReal> log_f_q;     // VALUE log f(q_{i_j})
  LogReal minsum_bound;             // VALUE sum_j 1/beta_{i_j}
  bool minsum_bound_le_one = false;
  std::size_t atoms_underflowed = 0;  // masses below e^-(double range), omitted
  std::string note;
};

// log_omega: log omega(n) as a function of log n; omega must tend to infinity
// along the period lengths for the subsequence selection to succeed.
inline BadWeight build_bad_weight(const CounterexampleSpec& spec,
                                  const std::function<double(double)>& log_omega) {
  if (!log_omega) throw std::invalid_argument("build_bad_weight: omega descriptor required");
  if (spec.periods.empty()) throw std::invalid_argument("build_bad_weight: empty spec");
  BadWeight out;

  // Greedy earliest subsequence with beta >= 2^j.
  std::size_t start = 0;
  for (std::size_t j = 1;; ++j) {
    LogReal target = LogReal::from_log(j * kLn2);  // 2^j
    bool found = false;
    for (std::size_t i = start; i < spec.periods.size(); ++i) {
      LogReal beta = LogReal::from_log(0.5 * log_omega(spec.periods[i].n.log()));
      if (beta >= target) {
        out.chosen.push_back(i);
        out.beta.push_back(beta);
        start = i + 1;
        found = true;
        break;
      }
    }
    if (!found) break;
  }
  if (out.chosen.empty())
    throw std::invalid_argument(
        "build_bad_weight: no period reaches beta >= 2; omega grows too slowly for this spec");

  // q_{i_j} = ceil(n / omega(n)), exact while integer recovery is possible.
  for (std::size_t j = 0; j < out.chosen.size(); ++j) {
    const auto& p = spec.periods[out.chosen[j]];
    LogReal ratio = LogReal::from_log(p.n.log() - log_omega(p.n.log()));
    if (ratio < LogReal::one()) ratio = LogReal::one();
    if (double lin = ratio.linear(); std::isfinite(lin) && lin < 9e15)
      ratio = LogReal::from_linear(std::max(1.0, std::ceil(lin - 1e-9)));
    out.q.push_back(ratio);
    auto lf = spec.log_f(ratio);
    if (!lf)
      throw std::invalid_argument("build_bad_weight: f not evaluable at a subsequence index");
    out.log_f_q.push_back(*lf);
  }

  // Left-tail targets t_j = 1/f(q_{i_j}); LogReal::zero() once log f leaves
  // double range (the mass is then below anything representable).
  std::vector<LogReal> t;
  for (const auto& lf : out.log_f_q) {
    double lv = lf.linear();  // VALUE log f, +inf if beyond doubles
    t.push_back(std::isfinite(lv) ? LogReal::from_log(-lv) : LogReal::zero());
  }
  for (std::size_t j = 1; j < t.size(); ++j) {
    if (t[j] > t[j - 1])
      throw std::invalid_argument(
          "build_bad_weight: masses would be negative (subsequence too dense)");
  }

  // Atom positions x_j = 1/(beta_{i_j} q_{i_j}).
  std::vector<LogReal> x;
  for (std::size_t j = 0; j < out.chosen.size(); ++j)
    x.push_back(LogReal::from_log(-(out.beta[j].log() + out.q[j].log())));

  std::vector<WeightAtom> atoms;
  std::size_t last = out.chosen.size() - 1;
  for (std::size_t j = 0; j + 1 <= last; ++j) {  // mass t_j - t_{j+1} at x_{j+1}
    LogReal mass = LogReal::sub(t[j], t[j + 1]);
    if (mass.is_zero()) {
      ++out.atoms_underflowed;
      continue;
    }
    atoms.push_back({x[j + 1], mass});
  }
  if (!t[last].is_zero())  // compressed tail just below the deepest position
    atoms.push_back({x[last] * LogReal::from_linear(0.5), t[last]});
  else
    ++out.atoms_underflowed;
  atoms.push_back({LogReal::one(), LogReal::sub(LogReal::one(), t.front())});
  out.weight = WeightDist::atomic(std::move(atoms));

  // The per-period block bound: sum_j q_{i_j} x_j = sum_j 1/beta_{i_j}, which
  // the doubling of beta keeps at or below 1.
  LogReal bound = LogReal::zero();
  for (const auto& b : out.beta) bound += LogReal::from_log(-b.log());
  out.minsum_bound = bound;
  out.minsum_bound_le_one = bound <= LogReal::one();
  std::ostringstream os;
  os << out.chosen.size() << " subsequence terms; block bound sum(1/beta) = " << bound.linear();
  if (out.atoms_underflowed > 0)
    os << "; " << out.atoms_underflowed << " atom masses below representable range omitted";
  out.note = os.str();
  return out;
}

// ---------------------------------------------------------------------------
// sufficient-condition audit
// ---------------------------------------------------------------------------

struct SuffcondPoint {
  LogReal n;
  SignedLog value;  // log( 2^n f(n) f(ceil(n/omega(n)))^(-n/2) )
};

struct SuffcondSeries {
  std::vector<SuffcondPoint> points;       // the evaluated grid
  std::vector<SuffcondPoint> subsequence;  // period lengths, when built from a spec
  bool pass = false;
  double pass_threshold = -100.0;  // the judged tail must sink below this
  std::size_t decreasing_suffix = 0;
  bool truncated = false;  // grid cut where f left the representable range
  std::string note;
};

namespace detail {

using LogFFn = std::function<std::optional<LogReal>(const LogReal&)>;

inline std::optional<SuffcondPoint> suffcond_value(const LogFFn& log_f,
                                                   const std::function<double(double)>& log_omega,
                                                   const LogReal& n) {
  auto fn = log_f(n);
  if (!fn) return std::nullopt;
  LogReal m = LogReal::from_log(n.log() - log_omega(n.log()));
  if (m < LogReal::one()) m = LogReal::one();
  if (double lin = m.linear(); std::isfinite(lin) && lin < 9e15)
    m = LogReal::from_linear(std::max(1.0, std::ceil(lin - 1e-9)));
  auto fm = log_f(m);
  if (!fm) return std::nullopt;
  LogReal pos = n * LogReal::from_linear(kLn2) + *fn;     // n log 2 + log f(n)
  LogReal neg = n * LogReal::from_linear(0.5) * (*fm);    // (n/2) log f(m)
  SuffcondPoint pt;
  pt.n = n;
  pt.value = SignedLog::diff(pos, neg);
  return pt;
}

// Pass rule: the evaluated sequence must end in a strictly decreasing run of
// at least two points whose final value is the global minimum and lies below
// the threshold. This operationalizes "decreases below any threshold within
// range" while tolerating an increasing prefix before the asymptotics bite.
inline void judge_suffcond(SuffcondSeries& s) {
  const auto& pts = s.subsequence.empty() ? s.points : s.subsequence;
  if (pts.size() < 2) {
    s.note = "fewer than two evaluable points; cannot judge";
    s.pass = false;
    return;
  }
  std::size_t suffix = 1;
  while (suffix < pts.size() &&
         signed_less(pts[pts.size() - suffix].value, pts[pts.size() - suffix - 1].value))
    ++suffix;
  s.decreasing_suffix = suffix;
  const SignedLog& final_v = pts.back().value;
  bool is_min = true;
  for (const auto& p : pts)
    if (signed_less(p.value, final_v)) is_min = false;
  SignedLog threshold{-1, LogReal::from_linear(-s.pass_threshold)};
  bool below = signed_less(final_v, threshold);
  s.pass = suffix >= 2 && is_min && below;
  std::ostringstream os;
  os << "final value " << final_v.to_double() << ", decreasing suffix " << suffix << "/"
     << pts.size() << (s.pass ? "; diverges downward" : "; no downward divergence");
  s.note = os.str();
}

inline SuffcondSeries suffcond_over(const LogFFn& log_f,
                                    const std::function<double(double)>& log_omega,
                                    const std::vector<LogReal>& grid) {
  SuffcondSeries s;
  for (const auto& n : grid) {
    auto pt = suffcond_value(log_f, log_omega, n);
    if (!pt) {
      s.truncated = true;
      break;
    }
    s.points.push_back(*pt);
  }
  judge_suffcond(s);
  return s;
}

}  // namespace detail

// Generic form: evaluates n = 1..min(N, 64) and then powers of two up to N.
inline SuffcondSeries verify_suffcond(const detail::LogFFn& log_f,
                                      const std::function<double(double)>& log_omega, double n_max) {
  if (!(n_max >= 2)) throw std::invalid_argument("verify_suffcond: range must reach 2");
  std::vector<LogReal> grid;
  double small = std::min(n_max, 64.0);
  for (double n = 1; n <= small; n += 1) grid.push_back(LogReal::from_linear(n));
  for (double n = 128; n <= n_max; n *= 2) grid.push_back(LogReal::from_linear(n));
  return detail::suffcond_over(log_f, log_omega, grid);
}

// Spec form: grid over a small integer prefix plus the period lengths n_i,
// with the pass judged on the period-length subsequence.
inline SuffcondSeries verify_suffcond(const CounterexampleSpec& spec,
                                      const std::function<double(double)>& log_omega) {
  detail::LogFFn f = [&spec](const LogReal& n) { return spec.log_f(n); };
  std::vector<LogReal> grid;
  double small = 16;
  if (auto total = spec.periods.back().n_cum.exact_integer())
    small = std::min(small, *total);
  for (double n = 1; n <= small; n += 1) grid.push_back(LogReal::from_linear(n));
  SuffcondSeries s = detail::suffcond_over(f, log_omega, grid);
  for (const auto& p : spec.periods) {
    auto pt = detail::suffcond_value(f, log_omega, p.n);
    if (!pt) {
      s.truncated = true;
      break;
    }
    s.subsequence.push_back(*pt);
  }
  detail::judge_suffcond(s);
  return s;
}

// Speed-table form: audits a recursively built speed sequence on its range.
inline SuffcondSeries verify_suffcond(const SpeedSeq& seq,
                                      const std::function<double(double)>& log_omega) {
  detail::LogFFn f = [&seq](const LogReal& n) -> std::optional<LogReal> {
    auto idx = n.exact_integer();
    if (!idx || *idx < 0 || *idx >= static_cast<double>(seq.size())) return std::nullopt;
    return seq.log_value[static_cast<std::size_t>(*idx)];
  };
  std::vector<LogReal> grid;
  for (std::size_t n = 1; n < seq.size(); ++n) grid.push_back(LogReal::from_linear(n));
  return detail::suffcond_over(f, log_omega, grid);
}

// ---------------------------------------------------------------------------
// speed-floor variant
// ---------------------------------------------------------------------------

// Rebuilds the spec with the additional constraint log m_i >= max_{n <= n_i}
// log s(n), which forces f to dominate the target speed s on the audited
// range. s is a finite table of (n, log s(n)) pairs; the dominance audit over
// the table is recorded on the returned spec.
inline CounterexampleSpec haste_variant(const CounterexampleSpec& base,
                                        const std::vector<std::pair<double, double>>& s_table) {
  std::vector<LogReal> n_seq;
  for (const auto& p : base.periods) n_seq.push_back(p.n);
  std::vector<LogReal> floors(n_seq.size(), LogReal::zero());
  for (std::size_t i = 0; i < n_seq.size(); ++i) {
    for (const auto& [n, log_s] : s_table) {
      if (!(LogReal::from_linear(n) <= n_seq[i])) continue;
      LogReal v = log_s <= 0 ? LogReal::zero() : LogReal::from_linear(log_s);
      if (v > floors[i]) floors[i] = v;
    }
  }
  CounterexampleSpec out = detail::build_counterexample_floors(n_seq, floors);
  out.requested = base.requested;

  bool identical = out.periods.size() == base.periods.size();
  for (std::size_t i = 0; identical && i < out.periods.size(); ++i)
    identical = out.periods[i].log_m == base.periods[i].log_m;
  if (identical) out.notes.push_back("speed floor inactive; spec unchanged");

  std::size_t dominated = 0, checked = 0, beyond = 0;
  for (const auto& [n, log_s] : s_table) {
    auto lf = out.log_f(LogReal::from_linear(n));
    if (!lf) {
      ++beyond;
      continue;
    }
    ++checked;
    LogReal target = log_s <= 0 ? LogReal::zero() : LogReal::from_linear(log_s);
    if (*lf >= target) ++dominated;
  }
  std::ostringstream os;
  os << "speed floor dominance: " << dominated << "/" << checked << " table points";
  if (beyond > 0) os << " (" << beyond << " beyond the built range)";
  out.notes.push_back(os.str());
  if (dominated < checked)
    out.violated_bounds.push_back("built speed fails to dominate the floor target at " +
                                  std::to_string(checked - dominated) + " table points");
  return out;
}

}  // namespace brw

#endif  // BRW_COUNTEREXAMPLE_HPP
