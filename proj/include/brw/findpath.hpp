#ifndef BRW_FINDPATH_HPP
#define BRW_FINDPATH_HPP

// Greedy option-restricted descent through a weighted branching tree. At each
// node the walker samples its child count Y, looks one level ahead at every
// child's own child count, keeps the X = ceil(Y^(1-alpha)/2) children with
// the most grandchildren as options, and moves along the cheapest option
// edge. Per-level instrumentation records Y, X, the chosen edge weight and
// the running path weight. Conditional audits bound the probability that the
// option supply falls behind a regulated speed sequence.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "brw/distributions.hpp"
#include "brw/logreal.hpp"
#include "brw/parallel.hpp"
#include "brw/rng.hpp"
#include "brw/sampling.hpp"
#include "brw/speeds.hpp"

namespace brw {

// ---------------------------------------------------------------------------
// per-run records
// ---------------------------------------------------------------------------

struct PathLevel {
  LogReal y;            // child count of the current node (Y_n)
  bool y_exact = true;  // y is an exactly represented integer
  LogReal x;            // option count X_n = ceil(Y_n^(1-alpha)/2)
  bool x_exact = true;  // computed with the exact ceiling
  LogReal chosen_child_count;  // memoized lookahead count of the chosen child
  // NaN on a failed level (no edge was chosen there).
  double chosen_weight = std::numeric_limits<double>::quiet_NaN();
  double partial_sum = std::numeric_limits<double>::quiet_NaN();
  bool approx = false;  // order-statistic envelope or capped draw used here
};

struct PathRecord {
  std::vector<PathLevel> per_level;            // entry i describes step i+1
  std::optional<std::size_t> failed_at_level;  // 1-based level where X hit 0
  bool any_approx = false;
};

struct FindPathConfig {
  std::uint64_t seed = 1;
  std::uint64_t rep = 0;          // substream selector for a single run
  double offspring_cap = 100000;  // exact lookahead enumeration below this
  void validate() const {
    if (!(offspring_cap >= 2))
      throw std::invalid_argument("findpath: offspring_cap must be >= 2");
  }
};

// Default option exponent alpha = (1+eps)^(-1/2).
inline double findpath_alpha(double eps) { return speed_alpha(eps); }

namespace detail {

// ceil with integer crossings resolved downward: pow can land an ulp above an
// exact integer result, which must not bump the option count.
inline double fp_snap_ceil(double v) {
  return std::ceil(v - std::max(1e-9, 4e-16 * std::abs(v)));
}

struct FpStep {
  LogReal x;
  bool x_exact = true;
  LogReal child_count;
  double weight = std::numeric_limits<double>::quiet_NaN();
  bool approx = false;
  bool failed = false;  // no options (Y = 0)
};

// One descent step from a node with child count y. Draw order is fixed: the
// exact branch draws every child's lookahead count in child order and then
// one weight per option in rank order; the envelope branch draws the chosen
// option's rank, then its beta-transformed tail uniform, then the minimal
// option weight. The chosen option is the cheapest, and its rank among the
// count-ordered options is uniform for any continuous iid weight law, so the
// chosen child's count law does not depend on the weight family.
inline FpStep fp_step(const OffspringDist& z, const WeightDist& w, double alpha,
                      const LogReal& y, double lookahead_cap, double enum_cap, Rng& rng) {
  FpStep out;
  if (y.is_zero()) {
    out.x = LogReal::zero();
    out.child_count = LogReal::zero();
    out.failed = true;
    return out;
  }
  auto yi = y.exact_integer();
  if (yi) {
    out.x = LogReal::from_linear(fp_snap_ceil(std::pow(*yi, 1.0 - alpha) / 2.0));
    out.x_exact = true;
  } else if (y.is_overflow()) {
    out.x = LogReal::overflow();
    out.x_exact = false;
  } else {
    // ceiling dropped: far below double resolution at this magnitude
    out.x = LogReal::from_log((1.0 - alpha) * y.log() - kLn2);
    out.x_exact = false;
  }

  if (yi && *yi <= enum_cap) {
    // Exact branch: enumerate every child's lookahead count.
    std::size_t k = static_cast<std::size_t>(*yi);
    std::vector<LogReal> counts(k);
    bool capped = false;
    for (auto& c : counts) {
      auto d = sample_offspring(z, rng, lookahead_cap);
      c = d.count;
      capped |= d.capped;
    }
    // Descending by count, ties kept in draw order.
    std::vector<std::size_t> order(k);
    for (std::size_t i = 0; i < k; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return counts[b] < counts[a]; });
    std::size_t xk = static_cast<std::size_t>(out.x.linear());
    if (xk > k) xk = k;  // cannot happen for alpha in (0,1); defensive
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0;
    for (std::size_t j = 0; j < xk; ++j) {
      double wt = std::exp(weight_quantile_log(w, rng.log_u01()));
      if (wt < best) {
        best = wt;
        bi = j;
      }
    }
    out.weight = best;
    out.child_count = counts[order[bi]];
    out.approx = capped;
    return out;
  }

  // Order-statistic envelope: only the chosen option is materialized.
  out.approx = true;
  if (y.is_overflow()) {
    out.child_count = LogReal::overflow();
    out.weight = std::exp(weight_quantile_log(w, min_uniform_log(rng, out.x)));
    return out;
  }
  // Rank of the chosen option, uniform on {1..X}.
  LogReal kl;
  if (auto xi = out.x.exact_integer(); xi && *xi <= 9.0e15) {
    std::uint64_t bound = static_cast<std::uint64_t>(std::max(1.0, *xi));
    kl = LogReal::from_linear(static_cast<double>(1 + rng.below(bound)));
  } else {
    double lu = rng.log_u01();
    double lk = lu + out.x.log();  // K = ceil(U X); integer snap below resolution
    kl = lk < 0 ? LogReal::one() : LogReal::from_log(lk);
  }
  // Tail uniform of the K-th smallest among Y iid uniforms: Beta(K, Y-K+1).
  auto ki = kl.exact_integer();
  double log_u;
  if (ki && yi && *yi <= 9.0e15) {
    double g1 = sample_gamma(rng, *ki);
    double g2 = sample_gamma(rng, *yi - *ki + 1.0);
    log_u = std::log(g1) - std::log(g1 + g2);  // exact beta transform
  } else if (ki && *ki <= 1.0e15) {
    double g1 = sample_gamma(rng, *ki);
    log_u = std::log(g1) - y.log();  // Gamma(K)/Y, relative error O(K^2/Y)
  } else {
    log_u = kl.log() - y.log();  // K/Y; fluctuation O(1/sqrt(K)) is below noise
  }
  if (log_u > 0) log_u = 0;
  auto cq = offspring_quantile_log_tail_opt(z, log_u);
  out.child_count = cq ? *cq : LogReal::from_linear(lookahead_cap);
  out.weight = std::exp(weight_quantile_log(w, min_uniform_log(rng, out.x)));
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// descent
// ---------------------------------------------------------------------------

inline PathRecord run_findpath(const OffspringDist& z, const WeightDist& w, double alpha,
                               std::size_t generations, const FindPathConfig& cfg) {
  if (!(alpha > 0) || !(alpha < 1))
    throw std::invalid_argument("run_findpath: alpha must be in (0,1)");
  if (generations < 1) throw std::invalid_argument("run_findpath: generations must be >= 1");
  cfg.validate();
  const double inf = std::numeric_limits<double>::infinity();
  const double lookahead_cap =
      z.family == OffspringFamily::Collapsed ? cfg.offspring_cap : inf;
  Rng rng(cfg.seed, StreamTag::FindPath, cfg.rep);
  PathRecord rec;
  rec.per_level.reserve(generations);
  auto root = sample_offspring(z, rng, lookahead_cap);
  LogReal y = root.count;
  bool carry_capped = root.capped;
  double psum = 0;
  for (std::size_t n = 1; n <= generations; ++n) {
    PathLevel lv;
    lv.y = y;
    lv.y_exact = y.exact_integer().has_value();
    auto st = detail::fp_step(z, w, alpha, y, lookahead_cap, cfg.offspring_cap, rng);
    lv.x = st.x;
    lv.x_exact = st.x_exact;
    lv.approx = st.approx || carry_capped;
    carry_capped = false;
    if (st.failed) {
      lv.chosen_child_count = LogReal::zero();
      lv.partial_sum = psum;
      rec.any_approx |= lv.approx;
      rec.per_level.push_back(lv);
      rec.failed_at_level = n;
      break;
    }
    psum += st.weight;
    lv.chosen_weight = st.weight;
    lv.partial_sum = psum;
    lv.chosen_child_count = st.child_count;
    rec.any_approx |= lv.approx;
    rec.per_level.push_back(lv);
    y = st.child_count;
  }
  return rec;
}

inline std::vector<PathRecord> run_findpath_reps(const OffspringDist& z, const WeightDist& w,
                                                 double alpha, std::size_t generations,
                                                 std::size_t reps, const FindPathConfig& cfg,
                                                 unsigned threads = 1) {
  std::vector<PathRecord> out(reps);
  detail::parallel_reps(reps, threads, [&](std::size_t i) {
    FindPathConfig c = cfg;
    c.rep = i;
    out[i] = run_findpath(z, w, alpha, generations, c);
  });
  return out;
}

// ---------------------------------------------------------------------------
// option-growth frequency
// ---------------------------------------------------------------------------

struct OptionGrowth {
  std::size_t runs = 0;
  std::size_t satisfied = 0;
  double frequency = 0;
};

// Lag between option supply and the regulated speed:
// gamma = 2 ceil(log(1/(1-alpha)) / log(1+eps)) + 1.
inline long long findpath_gamma(double eps, double alpha) {
  if (!(eps > 0)) throw std::invalid_argument("findpath_gamma: eps must be positive");
  if (!(alpha > 0) || !(alpha < 1))
    throw std::invalid_argument("findpath_gamma: alpha must be in (0,1)");
  double r = -std::log1p(-alpha) / std::log1p(eps);
  return 2 * static_cast<long long>(detail::fp_snap_ceil(r)) + 1;
}

// Frequency of runs whose option counts dominate the lagged speed at every
// recorded level: X_n >= f(max(n - gamma, 0)). Failed runs count as
// violations (their option supply hit zero). Negative lag indices clamp to
// the start of the speed table.
inline OptionGrowth option_growth_check(const std::vector<PathRecord>& records,
                                        const SpeedSeq& f, long long gamma) {
  OptionGrowth og;
  og.runs = records.size();
  for (const auto& rec : records) {
    bool ok = !rec.per_level.empty();
    for (std::size_t i = 0; ok && i < rec.per_level.size(); ++i) {
      long long k = static_cast<long long>(i + 1) - gamma;
      if (k < 0) k = 0;
      if (static_cast<std::size_t>(k) >= f.size())
        throw std::invalid_argument("option_growth_check: speed table shorter than records");
      const LogReal& lf = f.log_value[static_cast<std::size_t>(k)];
      const LogReal& x = rec.per_level[i].x;
      if (x.is_zero() || lf.is_overflow()) {
        ok = false;
        break;
      }
      double lx = x.is_overflow() ? std::numeric_limits<double>::infinity() : x.log();
      double lfv = lf.linear();  // the value of log f(k)
      // Relative slack keeps integer ties computed through different log
      // paths on the >= side; true gaps dwarf it.
      ok = lx >= lfv - 1e-12 * std::max(1.0, std::abs(lfv));
    }
    og.satisfied += ok ? 1 : 0;
  }
  og.frequency = og.runs ? static_cast<double>(og.satisfied) / static_cast<double>(og.runs) : 0.0;
  return og;
}

// ---------------------------------------------------------------------------
// conditional inequality audit
// ---------------------------------------------------------------------------

// One-sided Wilson upper confidence bound for a binomial proportion.
inline double wilson_ucb(std::uint64_t hits, std::uint64_t trials,
                         double zq = 1.959963984540054) {
  if (trials == 0) return 1.0;
  double n = static_cast<double>(trials);
  double p = static_cast<double>(hits) / n;
  double z2 = zq * zq;
  double center = p + z2 / (2 * n);
  double rad = zq * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  return std::min(1.0, (center + rad) / (1.0 + z2 / n));
}

struct AuditRow {
  std::size_t n = 0;  // audited transition n -> n+1
  double bound = 0;   // 4^(-n-1)
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;
  double p_hat = 0;
  double ucb = 1;  // Wilson upper confidence bound
  bool audited = false;
  bool pass = false;
  std::string note;
};

struct AuditTable {
  double alpha = 0;
  double eps = 0;
  long long stride = 0;  // generation-size audit stride a
  bool speed_ok = false;
  std::string speed_note;
  std::vector<AuditRow> option_rows;      // Pr{Y_{n+1} < f(n+1) | Y_n >= f(n)}
  std::vector<AuditRow> generation_rows;  // Pr{Z_{n+1} > f(a(n+1)) | Z_n <= f(an)}
};

// Generation-size audit stride a = 3 + 2 ceil(log 2 / log(1+eps)).
inline long long audit_stride(double eps) {
  if (!(eps > 0)) throw std::invalid_argument("audit_stride: eps must be positive");
  double r = kLn2 / std::log1p(eps);
  return 3 + 2 * static_cast<long long>(detail::fp_snap_ceil(r));
}

// Monte Carlo conditional frequencies with Wilson upper bounds against the
// geometric target 4^(-n-1), for n = 1..levels.
//
// Option rows: the bound is uniform over all states with Y_n >= f(n), so the
// trial conditions on the sub-event {Y_n > f(n)} via an exact inverse-cdf
// tail draw, advances one descent step, and counts {Y_{n+1} < f(n+1)}. Any
// mixture of allowed states is validly bounded, and every trial conditions
// successfully (direct unconditioned simulation would almost never visit the
// conditioning event at these speeds).
//
// Generation rows: from the extreme allowed state Z_n = f(an), the audited
// event is the dominating one the union bound controls: some child draw among
// f(an) of them exceeds f(a(n+1))/f(an). Its frequency upper-bounds the
// conditional target probability, so a passing UCB certifies the bound.
inline AuditTable inequality_audit(const OffspringDist& z, double alpha, double eps,
                                   std::size_t levels, std::size_t reps,
                                   const FindPathConfig& cfg) {
  if (!(alpha > 0) || !(alpha < 1))
    throw std::invalid_argument("inequality_audit: alpha must be in (0,1)");
  if (!(eps > 0)) throw std::invalid_argument("inequality_audit: eps must be positive");
  if (levels < 1 || reps < 1)
    throw std::invalid_argument("inequality_audit: levels and reps must be >= 1");
  cfg.validate();
  const double inf = std::numeric_limits<double>::infinity();
  AuditTable tab;
  tab.alpha = alpha;
  tab.eps = eps;
  tab.stride = audit_stride(eps);

  auto st = find_f_start(z, eps);
  if (!st.ok) {
    tab.speed_note = st.reason;
    for (std::size_t n = 1; n <= levels; ++n) {
      AuditRow r;
      r.n = n;
      r.bound = std::exp2(-2.0 * static_cast<double>(n + 1));
      r.note = "speed sequence unavailable: " + st.reason;
      tab.option_rows.push_back(r);
      tab.generation_rows.push_back(r);
    }
    return tab;
  }
  tab.speed_ok = true;
  std::size_t need = static_cast<std::size_t>(tab.stride) * (levels + 1) + 2;
  SpeedSeq f = speed_f_log(z, eps, st.log_m0, need);
  const double lookahead_cap =
      z.family == OffspringFamily::Collapsed ? cfg.offspring_cap : inf;
  const WeightDist rank_w = WeightDist::uniform01();  // rank-neutral, see fp_step

  for (std::size_t n = 1; n <= levels; ++n) {
    AuditRow a;
    a.n = n;
    a.bound = std::exp2(-2.0 * static_cast<double>(n + 1));
    if (n + 1 >= f.size() || f.log_value[n].is_overflow() ||
        f.log_value[n + 1].is_overflow()) {
      a.note = "speed beyond representable range";
    } else {
      double lfn = f.log_value[n].linear();
      double lfn1 = f.log_value[n + 1].linear();
      auto ltau = offspring_survival_log_opt(z, lfn);
      if (!ltau || !(*ltau > -inf)) {
        a.note = "conditioning event has probability zero or no closed form";
      } else {
        for (std::size_t i = 0; i < reps; ++i) {
          Rng rng(cfg.seed, StreamTag::InequalityAudit,
                  (static_cast<std::uint64_t>(2 * n) << 40) | static_cast<std::uint64_t>(i));
          double lu = rng.log_u01() + *ltau;
          auto yq = offspring_quantile_log_tail_opt(z, lu);
          if (!yq) continue;
          auto step = detail::fp_step(z, rank_w, alpha, *yq, lookahead_cap,
                                      cfg.offspring_cap, rng);
          bool hit;
          if (step.failed || step.child_count.is_zero())
            hit = true;
          else if (step.child_count.is_overflow())
            hit = false;
          else
            hit = step.child_count.log() < lfn1;
          a.trials++;
          a.hits += hit ? 1 : 0;
        }
        a.audited = a.trials > 0;
        if (a.audited) {
          a.p_hat = static_cast<double>(a.hits) / static_cast<double>(a.trials);
          a.ucb = wilson_ucb(a.hits, a.trials);
          a.pass = a.ucb <= a.bound;
        } else {
          a.note = "no usable conditional trials";
        }
      }
    }
    tab.option_rows.push_back(std::move(a));

    AuditRow b;
    b.n = n;
    b.bound = std::exp2(-2.0 * static_cast<double>(n + 1));
    std::size_t in0 = static_cast<std::size_t>(tab.stride) * n;
    std::size_t in1 = static_cast<std::size_t>(tab.stride) * (n + 1);
    if (in1 >= f.size() || f.log_value[in0].is_overflow() || f.log_value[in1].is_overflow()) {
      b.note = "speed beyond representable range";
    } else {
      double lk = f.log_value[in0].linear();
      double lt = f.log_value[in1].linear();
      auto ls = offspring_survival_log_opt(z, lt - lk);
      if (!ls) {
        b.note = "no closed-form survival for this family";
      } else {
        LogReal kreal = LogReal::from_log(lk);
        for (std::size_t i = 0; i < reps; ++i) {
          Rng rng(cfg.seed, StreamTag::InequalityAudit,
                  (static_cast<std::uint64_t>(2 * n + 1) << 40) | static_cast<std::uint64_t>(i));
          double lmin = min_uniform_log(rng, kreal);
          b.trials++;
          b.hits += lmin < *ls ? 1 : 0;
        }
        b.audited = true;
        b.p_hat = static_cast<double>(b.hits) / static_cast<double>(b.trials);
        b.ucb = wilson_ucb(b.hits, b.trials);
        b.pass = b.ucb <= b.bound;
        b.note = "dominating event: max of f(an) draws exceeds f(a(n+1))/f(an)";
      }
    }
    tab.generation_rows.push_back(std::move(b));
  }
  return tab;
}

}  // namespace brw

#endif  // BRW_FINDPATH_HPP
