#pragma once

// Convergence deciders for weighted branching processes. Every criterion here
// reduces to the behaviour of a nonnegative series (or an integral split into
// dyadic blocks) and shares one certification engine:
//
//   * ExplodesCertified    — the series converges, witnessed either by a
//     geometric ratio bound over the inspected tail window (tail added to the
//     partial sum) or by a polynomial-decay window certificate (exponent
//     bounded away from 1, tail integral added).
//   * NoExplosionCertified — the series diverges, witnessed by a verified
//     n·t_n >= c floor over the window together with a structural
//     monotonicity flag, or rigorously by a positive lower bound on every
//     term (weights bounded away from zero / an exact fixed point).
//   * Undetermined         — anything else. No silent wrong answers.
//
// True convergence of an infinite series is not numerically decidable; the
// window-based certificates extrapolate observed behaviour and say so in the
// certificate text.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "distributions.hpp"
#include "logreal.hpp"
#include "quadrature.hpp"
#include "speeds.hpp"

namespace brw {

enum class Verdict { ExplodesCertified, NoExplosionCertified, Undetermined };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::ExplodesCertified:
      return "ExplodesCertified";
    case Verdict::NoExplosionCertified:
      return "NoExplosionCertified";
    case Verdict::Undetermined:
      return "Undetermined";
  }
  return "Undetermined";
}

struct CriterionReport {
  std::string name;
  Verdict verdict = Verdict::Undetermined;
  double partial_sum = 0;                    // over computed terms
  double tail_bound = 0;                     // certified remainder (convergent case)
  double window_floor = std::numeric_limits<double>::quiet_NaN();  // min n*t_n over window
  std::vector<double> term_ratios;           // consecutive ratios over the tail window
  size_t truncation_index = 0;               // last term index computed
  std::string certificate;
  std::vector<std::pair<double, double>> term_table;  // (index, term) samples
};

// Structural facts a caller can assert about the term sequence; these gate
// the divergence verdict and are echoed into the certificate.
struct SeriesFlags {
  bool monotone_terms = false;       // terms nonincreasing (structural, not observed)
  bool slowly_varying_quantile = false;  // weight quantile varies slowly at 0
  bool log_geometric_speed = false;      // log of the speed grows geometrically
  bool positive_min_weight = false;      // every term >= essential minimum > 0
  double min_weight = 0;
  bool eventually_constant = false;  // exact fixed point: terms constant from const_from
  size_t const_from = 0;
};

namespace detail {

struct CertifierParams {
  size_t ratio_window = 12;
  double ratio_cap = 0.98;
  double poly_p_min = 1.05;
  double window_floor_min = 1e-3;
  size_t min_terms_diverge = 12;
};

// terms: (index n, log term). Indices are the true series indices (used for
// the n*t_n floor and the polynomial certificate).
inline CriterionReport certify_series(const std::string& name,
                                      const std::vector<std::pair<double, double>>& terms,
                                      const SeriesFlags& flags,
                                      const CertifierParams& prm = CertifierParams{}) {
  CriterionReport rep;
  rep.name = name;
  std::ostringstream cert;

  double sum = 0;
  for (auto& [n, lt] : terms) sum += std::exp(lt);
  rep.partial_sum = sum;
  rep.truncation_index = terms.empty() ? 0 : static_cast<size_t>(terms.back().first);
  for (size_t i = 0; i < terms.size(); i += std::max<size_t>(1, terms.size() / 64))
    rep.term_table.emplace_back(terms[i].first, std::exp(terms[i].second));
  if (!terms.empty() && rep.term_table.back().first != terms.back().first)
    rep.term_table.emplace_back(terms.back().first, std::exp(terms.back().second));

  if (terms.size() < 3) {
    rep.certificate = "fewer than 3 terms computed; no certificate";
    return rep;
  }

  // Exact shortcuts first: a constant positive tail diverges, a constant zero
  // tail makes the computed sum exact.
  if (flags.eventually_constant) {
    double last = terms.back().second;
    if (last == -std::numeric_limits<double>::infinity()) {
      rep.verdict = Verdict::ExplodesCertified;
      rep.tail_bound = 0;
      cert << "terms reach an exact fixed point at zero (index " << flags.const_from
           << "); sum is exact";
      rep.certificate = cert.str();
      return rep;
    }
    rep.verdict = Verdict::NoExplosionCertified;
    rep.window_floor = std::exp(last);
    cert << "terms reach an exact positive fixed point " << std::exp(last) << " at index "
         << flags.const_from << "; series diverges";
    rep.certificate = cert.str();
    return rep;
  }
  if (flags.positive_min_weight && flags.min_weight > 0) {
    rep.verdict = Verdict::NoExplosionCertified;
    rep.window_floor = flags.min_weight;
    cert << "every term is bounded below by the essential minimum weight " << flags.min_weight
         << "; series diverges";
    rep.certificate = cert.str();
    return rep;
  }

  // Ratio window over the last finite-log terms.
  size_t m = terms.size();
  size_t w = std::min(prm.ratio_window, m - 1);
  bool ratio_ok = true;
  double r_max = 0;
  for (size_t i = m - w - 1; i + 1 < m; ++i) {
    double lr = terms[i + 1].second - terms[i].second;
    double ratio = std::exp(lr);
    if (std::isnan(ratio)) ratio = 0;  // -inf over -inf: both underflowed
    rep.term_ratios.push_back(ratio);
    if (!(ratio <= prm.ratio_cap)) ratio_ok = false;
    r_max = std::max(r_max, ratio);
  }
  if (ratio_ok && w >= 4) {
    double t_last = std::exp(terms.back().second);
    rep.tail_bound = t_last * r_max / (1.0 - r_max);
    rep.verdict = Verdict::ExplodesCertified;
    cert << "geometric window certificate: last " << w << " term ratios <= " << r_max
         << "; remainder <= " << rep.tail_bound << " added to bound the full sum";
    rep.partial_sum = sum;  // partial kept separate; callers read tail_bound explicitly
    rep.certificate = cert.str();
    return rep;
  }

  // Polynomial-decay window: exponent estimates p_hat from consecutive pairs.
  if (flags.monotone_terms && w >= 4) {
    bool finite = true;
    double p_obs = std::numeric_limits<double>::infinity();
    for (size_t i = m - w - 1; i + 1 < m; ++i) {
      double dn = std::log(terms[i + 1].first) - std::log(terms[i].first);
      if (!(dn > 0) || !std::isfinite(terms[i].second) || !std::isfinite(terms[i + 1].second)) {
        finite = false;
        break;
      }
      p_obs = std::min(p_obs, -(terms[i + 1].second - terms[i].second) / dn);
    }
    if (finite && p_obs >= prm.poly_p_min) {
      double nN = terms.back().first;
      double tN = std::exp(terms.back().second);
      rep.tail_bound = tN * nN / (p_obs - 1.0);
      rep.verdict = Verdict::ExplodesCertified;
      cert << "polynomial window certificate: decay exponent >= " << p_obs
           << " over the last " << w << " terms; remainder <= " << rep.tail_bound;
      rep.certificate = cert.str();
      return rep;
    }
  }

  // Divergence: verified floor on n*t_n over the trailing window plus the
  // structural monotonicity flag.
  if (flags.monotone_terms && m >= prm.min_terms_diverge) {
    double floor_val = std::numeric_limits<double>::infinity();
    for (size_t i = m / 2; i < m; ++i)
      floor_val = std::min(floor_val, terms[i].first * std::exp(terms[i].second));
    rep.window_floor = floor_val;
    if (floor_val >= prm.window_floor_min) {
      rep.verdict = Verdict::NoExplosionCertified;
      cert << "divergence window certificate: n*t_n >= " << floor_val
           << " over the trailing window with monotone terms";
      if (flags.slowly_varying_quantile) cert << "; weight quantile is slowly varying at 0";
      if (flags.log_geometric_speed) cert << "; log-speed growth is geometric";
      rep.certificate = cert.str();
      return rep;
    }
  }

  cert << "no certificate attained (observed behaviour neither geometric nor harmonic-floored)";
  rep.certificate = cert.str();
  return rep;
}

inline SeriesFlags speed_series_flags(const OffspringDist& Z, const WeightDist& W) {
  SeriesFlags f;
  f.monotone_terms = true;  // the speed is nondecreasing, so quantile terms are nonincreasing
  f.slowly_varying_quantile = (W.family == WeightFamily::DoubleExpSmall);
  f.log_geometric_speed = (Z.family == OffspringFamily::PowerTail);
  double ess_min_log = weight_quantile_log_deep(W, LogReal::overflow());
  if (ess_min_log > -std::numeric_limits<double>::infinity()) {
    f.positive_min_weight = true;
    f.min_weight = std::exp(ess_min_log);
  }
  return f;
}

// Detect an exact fixed point of the speed recursion (integer quantile
// sequences do reach one for bounded-growth families).
inline void mark_fixed_point(const SpeedSeq& s, SeriesFlags& f) {
  for (size_t n = 0; n + 1 < s.size(); ++n) {
    if (s.log_value[n + 1] == s.log_value[n]) {
      f.eventually_constant = true;
      f.const_from = n + 1;
      return;
    }
  }
}

}  // namespace detail

// ------------------------------------------------------------------
// displacement-sum criterion along the basic speed sequence
// ------------------------------------------------------------------
// Decides explosion for plump offspring via the series of weight quantiles at
// tail levels 1/h(n); terms are summed from n = 1 (the start point h(0) is a
// free parameter and only shifts finitely many terms).

inline CriterionReport minsum_criterion(const OffspringDist& Z, const WeightDist& W,
                                        size_t n_terms = 64, double m0_override = 0,
                                        double eps_override = 0) {
  if (weight_zero_mass(W) > 0)
    throw std::invalid_argument(
        "minsum_criterion: weight has an atom at zero; apply the collapse transform first");
  double eps = eps_override;
  if (eps <= 0) {
    auto we = plump_witness_eps(Z);
    if (we) eps = *we;
  }
  double m0 = m0_override;
  if (m0 <= 1 && eps > 0) {
    auto h0 = default_h_start(Z, eps);
    if (h0) m0 = *h0;
  }
  if (eps <= 0 || m0 <= 1) {
    CriterionReport rep;
    rep.name = "minsum";
    rep.certificate =
        "precondition not established: offspring law is not verifiably plump, so the "
        "quantile-sum criterion does not apply";
    return rep;
  }
  SpeedSeq h = speed_h(Z, m0, n_terms);
  SeriesFlags flags = detail::speed_series_flags(Z, W);
  detail::mark_fixed_point(h, flags);
  std::vector<std::pair<double, double>> terms;
  for (size_t n = 1; n < h.size(); ++n)
    terms.emplace_back(static_cast<double>(n), weight_quantile_log_deep(W, h.log_value[n]));
  auto rep = detail::certify_series("minsum", terms, flags);
  std::ostringstream extra;
  extra << " [speed start m0=" << m0 << ", eps=" << eps
        << (h.table_exhausted ? ", speed table exhausted" : "") << "]";
  rep.certificate += extra.str();
  return rep;
}

// ------------------------------------------------------------------
// sigma-summability
// ------------------------------------------------------------------

struct SigmaDescriptor {
  enum class Kind { Linear, Geometric, Table } kind = Kind::Geometric;
  double c = 1;  // Geometric: sigma_n = c * r^n
  double r = 2;
  std::vector<double> table;

  static SigmaDescriptor linear() { return {Kind::Linear, 1, 2, {}}; }
  static SigmaDescriptor geometric(double c, double r) { return {Kind::Geometric, c, r, {}}; }
  static SigmaDescriptor from_table(std::vector<double> t) {
    return {Kind::Table, 1, 2, std::move(t)};
  }

  double at(size_t n) const {  // n >= 1
    switch (kind) {
      case Kind::Linear:
        return static_cast<double>(n);
      case Kind::Geometric:
        return c * std::pow(r, static_cast<double>(n));
      case Kind::Table:
        return n <= table.size() ? table[n - 1] : std::numeric_limits<double>::infinity();
    }
    return 0;
  }
  size_t max_index(size_t n_cap) const {
    return kind == Kind::Table ? std::min(n_cap, table.size()) : n_cap;
  }
};

// Two-series summability test: (i) sum of Pr{W>1}^sigma_n and (ii) sum of
// integrals of Pr{W>t}^sigma_n over t in [0,1]. Summable iff both converge;
// summability corresponds to the exploding side of the verdict enum.
inline CriterionReport sigma_three_series(const WeightDist& W, const SigmaDescriptor& sigma,
                                          size_t n_terms = 48, double quad_tol = 1e-9) {
  CriterionReport rep;
  rep.name = "sigma_three_series";
  size_t n_max = sigma.max_index(n_terms);
  double ls1 = weight_survival_log(W, 1.0);
  SeriesFlags flags;
  flags.monotone_terms = true;  // sigma is nondecreasing for all descriptors
  double prev = 0;
  std::vector<std::pair<double, double>> t1, t2;
  bool quad_fail = false;
  for (size_t n = 1; n <= n_max; ++n) {
    double s = sigma.at(n);
    if (!(s >= prev))
      throw std::invalid_argument("sigma_three_series: exponent sequence must be nondecreasing");
    if (!(s < 9e15)) break;
    prev = s;
    t1.emplace_back(static_cast<double>(n), s * ls1);
    auto f = [&](double x) {
      double lsv = weight_survival_log(W, std::exp(-x));
      return std::exp(s * lsv - x);
    };
    // Integrate over unit blocks in x = -log t so the bump near x = log(s)
    // cannot slip between the sample points of a single wide panel.
    double total = 0;
    for (int k = 0; k < 50; ++k) {
      auto q = integrate(f, static_cast<double>(k), static_cast<double>(k + 1), quad_tol / 50.0);
      if (!q.converged) quad_fail = true;
      total += std::max(q.value, 0.0);
    }
    t2.emplace_back(static_cast<double>(n),
                    total > 0 ? std::log(total) : -std::numeric_limits<double>::infinity());
  }
  if (quad_fail) {
    rep.certificate = "quadrature failed to converge on at least one integral term";
    return rep;
  }
  auto rep1 = detail::certify_series("sigma_series_i", t1, flags);
  auto rep2 = detail::certify_series("sigma_series_ii", t2, flags);
  // Combine: summable only if both converge; divergence of either settles it.
  if (rep1.verdict == Verdict::ExplodesCertified && rep2.verdict == Verdict::ExplodesCertified) {
    rep.verdict = Verdict::ExplodesCertified;
  } else if (rep1.verdict == Verdict::NoExplosionCertified ||
             rep2.verdict == Verdict::NoExplosionCertified) {
    rep.verdict = Verdict::NoExplosionCertified;
  }
  rep.partial_sum = rep1.partial_sum + rep2.partial_sum;
  rep.tail_bound = rep1.tail_bound + rep2.tail_bound;
  rep.window_floor = rep2.window_floor;
  rep.term_ratios = rep2.term_ratios;
  rep.truncation_index = rep2.truncation_index;
  rep.term_table = rep2.term_table;
  rep.certificate = "series (i): " + rep1.certificate + " || series (ii): " + rep2.certificate;
  return rep;
}

// Quantile-sum corollary for sigma sequences with a certified growth ratio:
// requires sigma_{n+1} >= c * sigma_n with c > 1 on the computed prefix.
// log_sigma carries log(sigma_n) in log-space storage (one level down), so
// speed sequences plug in directly. Cross-checked against the two-series test
// on the double-representable prefix.
inline CriterionReport sigma_corollary(const WeightDist& W, const std::vector<LogReal>& log_sigma,
                                       const SeriesFlags& base_flags, size_t n_terms = 64) {
  CriterionReport rep;
  rep.name = "sigma_corollary";
  size_t n_max = std::min(n_terms, log_sigma.size());
  double min_log_ratio = std::numeric_limits<double>::infinity();
  for (size_t n = 0; n + 1 < n_max; ++n) {
    const LogReal& a = log_sigma[n];
    const LogReal& b = log_sigma[n + 1];
    if (a.is_overflow() || b.is_overflow()) {
      auto ge = LogReal::certainly_ge(b, a);
      if (ge && !*ge) min_log_ratio = -1;  // decreasing past the representable range
      continue;
    }
    double va = a.linear(), vb = b.linear();
    if (std::isinf(va) || std::isinf(vb)) continue;  // values beyond doubles: checked via order
    min_log_ratio = std::min(min_log_ratio, vb - va);
  }
  if (!(min_log_ratio > 1e-12))
    throw std::invalid_argument(
        "sigma_corollary: sequence lacks a certified growth ratio c > 1; use the two-series "
        "test instead");
  std::vector<std::pair<double, double>> terms;
  for (size_t n = 1; n < n_max; ++n)
    terms.emplace_back(static_cast<double>(n), weight_quantile_log_deep(W, log_sigma[n]));
  SeriesFlags flags = base_flags;
  flags.monotone_terms = true;
  rep = detail::certify_series("sigma_corollary", terms, flags);

  // Cross-check on the prefix where sigma fits in a double.
  std::vector<double> prefix;
  for (size_t n = 1; n < n_max; ++n) {
    double v = log_sigma[n].linear();
    if (std::isinf(v) || v > 27.6) break;  // sigma beyond ~1e12: quadrature regime ends
    prefix.push_back(std::exp(v));
  }
  if (prefix.size() >= 8) {
    auto cross = sigma_three_series(W, SigmaDescriptor::from_table(prefix), prefix.size());
    if (cross.verdict != Verdict::Undetermined && rep.verdict != Verdict::Undetermined &&
        cross.verdict != rep.verdict) {
      rep.verdict = Verdict::Undetermined;
      rep.certificate += " || CROSS-CHECK DISAGREEMENT with the two-series test: " +
                         cross.certificate;
      return rep;
    }
    rep.certificate += " || cross-check (two-series on prefix): " + std::string(verdict_name(cross.verdict));
  } else {
    std::ostringstream os;
    os << " || cross-check skipped: only " << prefix.size()
       << " exponents fit the quadrature range";
    rep.certificate += os.str();
  }
  return rep;
}

// Every gamma-th entry of a sequence stored one level down; index n -> gamma*n.
inline std::vector<LogReal> gamma_subsample(const std::vector<LogReal>& log_sigma, size_t gamma) {
  std::vector<LogReal> out;
  for (size_t n = 0; gamma * n < log_sigma.size(); ++n) out.push_back(log_sigma[gamma * n]);
  return out;
}

// ------------------------------------------------------------------
// cumulative-tail series (exponential-weight context)
// ------------------------------------------------------------------
// Terms 1/(n * sum_{r=0..n} Pr{Z > r}). The direction of the verdict is
// calibrated empirically against the displacement-sum criterion on reference
// families (convergence <=> explosion); the source statement of this test is
// orientation-ambiguous, which the certificate records.

inline CriterionReport harris_series(const OffspringDist& Z, size_t n_terms = 100000) {
  std::vector<std::pair<double, double>> terms;
  SeriesFlags flags;
  flags.monotone_terms = true;  // n * (cumulative survival) is strictly increasing
  auto survival = [&](size_t r) {
    double log_m = r == 0 ? -std::numeric_limits<double>::infinity()
                          : std::log(static_cast<double>(r));
    return offspring_survival_log_opt(Z, log_m);
  };
  auto s0 = survival(0);
  if (s0) {
    double cum = std::exp(*s0);  // sum_{r=0..0} Pr{Z > r}
    for (size_t n = 1; n <= n_terms; ++n) {
      auto ls = survival(n);
      if (!ls) break;
      cum += std::exp(*ls);  // cum = sum_{r=0..n}
      terms.emplace_back(static_cast<double>(n),
                         -std::log(static_cast<double>(n)) - std::log(cum));
    }
  }
  auto rep = detail::certify_series("harris_series", terms, flags);
  rep.name = "harris_series";
  rep.certificate +=
      " [orientation: convergence is reported as the exploding side, fixed by calibration "
      "against the displacement-sum criterion on reference families]";
  return rep;
}

// ------------------------------------------------------------------
// quantile-ratio regularity and the integral criterion
// ------------------------------------------------------------------

struct RegularityReport {
  double liminf_est = std::numeric_limits<double>::quiet_NaN();
  double limsup_est = std::numeric_limits<double>::quiet_NaN();
  bool holds = false;
  double margin = 0.005;
  size_t grid_used = 0;
  size_t grid_truncated = 0;  // points dropped for quantile underflow
};

inline RegularityReport vatutin_regularity(const WeightDist& W, double lambda = 0.5,
                                           std::vector<double> t_grid = {}) {
  if (!(lambda > 0) || !(lambda < 1))
    throw std::invalid_argument("vatutin_regularity: lambda must be in (0,1)");
  RegularityReport r;
  if (t_grid.empty()) {
    for (int i = 0; i < 48; ++i) t_grid.push_back(std::pow(10.0, -2.0 - 58.0 * i / 47.0));
  }
  std::vector<double> ratios;
  for (double t : t_grid) {
    double lq_t = weight_quantile_log(W, std::log(t));
    double lq_lt = weight_quantile_log(W, std::log(t) + std::log(lambda));
    if (!std::isfinite(lq_t) || !std::isfinite(lq_lt)) {
      ++r.grid_truncated;
      continue;
    }
    ratios.push_back(std::exp(lq_lt - lq_t));
  }
  r.grid_used = ratios.size();
  if (ratios.size() < 8) return r;  // not enough valid points to call it
  // estimate liminf/limsup from the deepest half of the grid
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (size_t i = ratios.size() / 2; i < ratios.size(); ++i) {
    lo = std::min(lo, ratios[i]);
    hi = std::max(hi, ratios[i]);
  }
  r.liminf_est = lo;
  r.limsup_est = hi;
  r.holds = (lo >= r.margin) && (hi <= 1.0 - r.margin);
  return r;
}

// K_Z(s) with an analytic small-s branch for the families whose series cost
// explodes as s -> 0 (the series needs ~1/s terms). The asymptote is scaled
// to match the exact series at the switch point, so the evaluation is
// continuous (adaptive quadrature must not see a jump); the scale factor is
// cached per family parameters.
inline double k_function_smalls(const OffspringDist& d, double s, bool* asymptotic = nullptr) {
  constexpr double s_switch = 1e-4;
  if (asymptotic) *asymptotic = false;
  auto calibrated = [&](double asym_s, double asym_switch) {
    thread_local int fam = -1;
    thread_local double par = 0, corr = 1;
    double p = d.family == OffspringFamily::PowerTail ? d.beta : 0;
    if (fam != static_cast<int>(d.family) || par != p) {
      fam = static_cast<int>(d.family);
      par = p;
      corr = k_function(d, s_switch).value / asym_switch;
    }
    if (asymptotic) *asymptotic = true;
    return corr * asym_s;
  };
  switch (d.family) {
    case OffspringFamily::Geometric:
    case OffspringFamily::Deterministic:
      return k_function(d, s).value;  // closed forms, any s
    case OffspringFamily::PowerTail:
      if (s >= s_switch) return k_function(d, s).value;
      return calibrated(std::tgamma(1.0 - d.beta) * std::pow(s, d.beta),
                        std::tgamma(1.0 - d.beta) * std::pow(s_switch, d.beta));
    case OffspringFamily::LogTail:
      if (s >= s_switch) return k_function(d, s).value;
      return calibrated(kLn2 / std::log(1.0 / s), kLn2 / std::log(1.0 / s_switch));
    case OffspringFamily::PiecewiseTail:
      return k_function(d, s).value;
    case OffspringFamily::Collapsed:
      throw std::domain_error("k_function: no closed form for collapsed offspring");
  }
  return 0;
}

// Integral criterion: the integral of F_W^-1(s / K_Z(s)) ds/s near zero
// diverges exactly when explosion fails. Evaluated as dyadic blocks in
// x = -log s and certified with the shared engine.
inline CriterionReport vatutin_integral(const OffspringDist& Z, const WeightDist& W,
                                        double eps_upper = 0.1, double quad_tol = 1e-9,
                                        size_t blocks = 40) {
  CriterionReport rep;
  rep.name = "vatutin_integral";
  auto regularity = vatutin_regularity(W);
  bool used_asym = false;
  auto integrand = [&](double x) {
    double s = std::exp(-x);
    bool a = false;
    double K = k_function_smalls(Z, s, &a);
    used_asym = used_asym || a;
    double u = s / K;
    if (u >= 1) u = 1;
    return std::exp(weight_quantile_log(W, std::log(u)));
  };
  double x0 = -std::log(eps_upper);
  const double width = 2.0;
  std::vector<std::pair<double, double>> block_terms;
  bool monotone_blocks = true;
  double prev_block = std::numeric_limits<double>::infinity();
  bool quad_fail = false;
  for (size_t k = 0; k < blocks; ++k) {
    double xa = x0 + width * k, xb = x0 + width * (k + 1);
    auto q = integrate(integrand, xa, xb, quad_tol);
    if (q.value > 0) {
      auto fine = integrate(integrand, xa, xb, q.value * 1e-6);  // relative refinement
      if (fine.converged) q = fine;
    }
    if (!q.converged) quad_fail = true;
    double v = std::max(q.value, 0.0);
    if (v > prev_block * (1 + 1e-9)) monotone_blocks = false;
    prev_block = v;
    block_terms.emplace_back(static_cast<double>(k + 1),
                             v > 0 ? std::log(v) : -std::numeric_limits<double>::infinity());
  }
  if (quad_fail) {
    rep.certificate = "quadrature failed to converge on at least one block";
    return rep;
  }
  SeriesFlags flags;
  flags.monotone_terms = monotone_blocks;  // observed decreasing blocks (integrand decreasing)
  double ess_min_log = weight_quantile_log_deep(W, LogReal::overflow());
  if (ess_min_log > -std::numeric_limits<double>::infinity()) {
    flags.positive_min_weight = true;
    flags.min_weight = std::exp(ess_min_log) * width;  // every block is at least this
  }
  rep = detail::certify_series("vatutin_integral", block_terms, flags);
  std::ostringstream extra;
  extra << " [dyadic blocks of width " << width << " in -log s from " << x0
        << (used_asym ? "; small-s tail uses the analytic branch of K" : "")
        << "; regularity " << (regularity.holds ? "holds" : "FAILS (criterion marked inapplicable)")
        << ": ratio window [" << regularity.liminf_est << ", " << regularity.limsup_est << "]]";
  rep.certificate += extra.str();
  if (!regularity.holds && rep.verdict != Verdict::Undetermined) {
    // still computed, but the verdict is advisory only
    rep.certificate += " -- verdict advisory: regularity precondition fails";
  }
  return rep;
}

// ------------------------------------------------------------------
// atom-at-zero criterion (finite-mean context)
// ------------------------------------------------------------------

inline double bramson_sigma(double p, double lambda, double n) {
  return p + (1.0 - p) * std::exp(-std::pow(lambda, n));
}

// For each lambda in the grid, sums F_W^-1(sigma_{lambda,n}); explosion is
// certified if any lambda gives a certified convergent sum. The existential
// "some lambda > 1" is approximated by the finite grid (recorded).
inline CriterionReport bramson_criterion(const WeightDist& W,
                                         std::vector<double> lambda_grid = {1.5, 2, 4, 8},
                                         size_t n_terms = 64) {
  double p = weight_zero_mass(W);
  if (!(p > 0) || !(p < 1))
    throw std::invalid_argument("bramson_criterion: weight must carry an atom at zero in (0,1)");
  WeightDist above = collapsed_weight(W);
  CriterionReport best;
  best.name = "bramson";
  std::ostringstream cert;
  cert << "lambda grid {";
  for (size_t i = 0; i < lambda_grid.size(); ++i) cert << (i ? "," : "") << lambda_grid[i];
  cert << "}: ";
  size_t diverged = 0;
  for (double lambda : lambda_grid) {
    std::vector<std::pair<double, double>> terms;
    for (size_t n = 1; n <= n_terms; ++n) {
      // F_W^-1(sigma) = base quantile at exp(-lambda^n), evaluated without
      // forming sigma - p (no cancellation near the atom)
      LogReal neg_log_u = LogReal::from_log(static_cast<double>(n) * std::log(lambda));
      terms.emplace_back(static_cast<double>(n), weight_quantile_log_deep(above, neg_log_u));
    }
    SeriesFlags flags;
    flags.monotone_terms = true;
    double ess_min_log = weight_quantile_log_deep(above, LogReal::overflow());
    if (ess_min_log > -std::numeric_limits<double>::infinity()) {
      flags.positive_min_weight = true;
      flags.min_weight = std::exp(ess_min_log);
    }
    auto r = detail::certify_series("bramson", terms, flags);
    cert << "lambda=" << lambda << " -> " << verdict_name(r.verdict) << "; ";
    if (r.verdict == Verdict::ExplodesCertified) {
      best = r;
      best.name = "bramson";
      best.certificate = cert.str() + "explosion certified at this lambda";
      best.verdict = Verdict::ExplodesCertified;
      return best;
    }
    if (r.verdict == Verdict::NoExplosionCertified) {
      ++diverged;
      best.partial_sum = r.partial_sum;
      best.window_floor = r.window_floor;
    }
  }
  if (diverged == lambda_grid.size() && !lambda_grid.empty()) {
    // Divergence at every lambda is only conclusive when the terms are
    // floored by a positive minimum weight (then it holds for all lambda).
    double ess_min_log = weight_quantile_log_deep(above, LogReal::overflow());
    if (ess_min_log > -std::numeric_limits<double>::infinity()) {
      best.verdict = Verdict::NoExplosionCertified;
      best.certificate =
          cert.str() + "divergent at every lambda; conclusive because the collapsed weight is "
                       "bounded away from zero (holds for all lambda > 1)";
      return best;
    }
  }
  best.verdict = Verdict::Undetermined;
  best.certificate = cert.str() + "no lambda certified convergent; grid is finite so the "
                                  "existential condition stays undetermined";
  return best;
}

}  // namespace brw
