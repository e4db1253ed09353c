#pragma once
// Serialization of analysis and simulation results: JSON documents and tidy
// CSV tables. Every artifact carries a header block with the schema version,
// the resolved-config hash, the seed, and the resolved config itself, so any
// output file identifies the run that produced it.

#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "brw/collapse.hpp"
#include "brw/config.hpp"
#include "brw/counterexample.hpp"
#include "brw/criteria.hpp"
#include "brw/findpath.hpp"
#include "brw/gwsim.hpp"
#include "brw/limitlaw.hpp"

namespace brw {

using Json = nlohmann::ordered_json;

namespace detail {

// JSON has no infinities; keep them readable instead of null.
inline Json json_real(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

// A LogReal as {ln, linear}: ln is always finite for nonzero values, linear
// saturates (and is omitted past the double range).
inline Json json_logreal(const LogReal& x) {
  Json j;
  j["ln"] = json_real(x.log());
  double lin = x.linear();
  if (std::isfinite(lin)) j["linear"] = lin;
  return j;
}

inline std::string csv_num(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// header block
// ---------------------------------------------------------------------------

inline Json report_header(const RunConfig& cfg) {
  Json run;
  run["seed"] = cfg.seed;
  run["reps"] = cfg.reps;
  run["depth"] = cfg.depth;
  run["budget"] = cfg.budget;
  run["epsilon"] = cfg.epsilon;
  run["cap"] = cfg.cap;
  run["format"] = cfg.format;
  run["out_dir"] = cfg.out_dir;
  run["collapse"] = cfg.collapse;
  run["alpha"] = cfg.alpha;
  if (!cfg.depths.empty()) run["depths"] = cfg.depths;
  if (!cfg.r_grid.empty()) run["r_grid"] = cfg.r_grid;
  run["delta"] = cfg.delta;
  run["toy"] = cfg.toy;
  if (!cfg.periods.empty()) run["periods"] = cfg.periods;
  run["omega"] = cfg.omega;
  run["conditioning"] = cfg.conditioning;

  Json h;
  h["schema"] = kReportSchema;
  h["config_hash"] = config_hash(cfg);
  h["seed"] = cfg.seed;
  Json sections = Json::object();
  if (cfg.has_offspring()) {
    Json o = Json::object();
    for (const auto& [k, v] : cfg.offspring) o[k] = v;
    sections["offspring"] = o;
  }
  if (cfg.has_weight()) {
    Json w = Json::object();
    for (const auto& [k, v] : cfg.weight) w[k] = v;
    sections["weight"] = w;
  }
  sections["run"] = run;
  h["config"] = sections;
  return h;
}

// CSV artifacts carry the same information as leading comment lines.
inline std::string csv_preamble(const RunConfig& cfg) {
  std::ostringstream os;
  os << "# schema = " << kReportSchema << "\n";
  os << "# config_hash = " << config_hash(cfg) << "\n";
  std::istringstream is(canonical_config(cfg));
  std::string line;
  while (std::getline(is, line)) os << "# " << line << "\n";
  return os.str();
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << content;
  if (!f) throw std::runtime_error("write failed: " + path);
}

inline Json error_json(const std::string& message, const std::string& hint = "") {
  Json j;
  j["schema"] = kReportSchema;
  j["error"] = message;
  if (!hint.empty()) j["hint"] = hint;
  return j;
}

// ---------------------------------------------------------------------------
// criteria
// ---------------------------------------------------------------------------

inline Json to_json(const CriterionReport& r) {
  Json j;
  j["name"] = r.name;
  j["verdict"] = verdict_name(r.verdict);
  j["partial_sum"] = detail::json_real(r.partial_sum);
  j["tail_bound"] = detail::json_real(r.tail_bound);
  j["window_floor"] = detail::json_real(r.window_floor);
  j["truncation_index"] = r.truncation_index;
  j["certificate"] = r.certificate;
  Json table = Json::array();
  for (const auto& [i, t] : r.term_table) table.push_back({i, detail::json_real(t)});
  j["term_table"] = table;
  return j;
}

// ---------------------------------------------------------------------------
// gwsim
// ---------------------------------------------------------------------------

// One row per (rep, level). Zn_log comes from the generation-growth records,
// Mn from the displacement search at the same rep index; the flags are the
// per-rep truncation (any aggregate/capped regime) and budget markers.
inline std::string gwsim_csv(const RunConfig& cfg, const SimOutcome& grow,
                             const SimOutcome& disp) {
  std::ostringstream os;
  os << csv_preamble(cfg);
  os << "rep, level, Zn_log, Mn, truncated, budget_exhausted\n";
  for (std::size_t r = 0; r < grow.per_rep.size(); ++r) {
    const RepGrowth& g = grow.per_rep[r].growth;
    const RepDisplacement* d = r < disp.per_rep.size() ? &disp.per_rep[r].disp : nullptr;
    for (std::size_t lvl = 1; lvl <= cfg.depth; ++lvl) {
      double zn_log = std::numeric_limits<double>::quiet_NaN();
      if (lvl < g.sizes.size()) {
        zn_log = g.sizes[lvl].log();
      } else if (g.extinct) {
        zn_log = -std::numeric_limits<double>::infinity();
      }
      double mn = std::numeric_limits<double>::quiet_NaN();
      if (d && lvl <= d->mn.size()) mn = d->mn[lvl - 1];
      os << r << ", " << lvl << ", " << detail::csv_num(zn_log) << ", "
         << (std::isinf(mn) && mn > 0 ? "inf" : detail::csv_num(mn)) << ", "
         << (g.exact ? 0 : 1) << ", " << ((d && d->budget_exhausted) ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// findpath
// ---------------------------------------------------------------------------

inline Json to_json(const PathRecord& p) {
  Json j;
  Json levels = Json::array();
  for (std::size_t i = 0; i < p.per_level.size(); ++i) {
    const PathLevel& l = p.per_level[i];
    Json e;
    e["level"] = i + 1;
    e["y"] = detail::json_logreal(l.y);
    e["y_exact"] = l.y_exact;
    e["x"] = detail::json_logreal(l.x);
    e["x_exact"] = l.x_exact;
    e["chosen_child_count"] = detail::json_logreal(l.chosen_child_count);
    e["chosen_weight"] = detail::json_real(l.chosen_weight);
    e["partial_sum"] = detail::json_real(l.partial_sum);
    e["approx"] = l.approx;
    levels.push_back(e);
  }
  j["levels"] = levels;
  if (p.failed_at_level) {
    j["failed_at_level"] = *p.failed_at_level;
  } else {
    j["failed_at_level"] = nullptr;
  }
  j["any_approx"] = p.any_approx;
  return j;
}

inline std::string findpath_level_csv(const RunConfig& cfg,
                                      const std::vector<PathRecord>& records) {
  std::ostringstream os;
  os << csv_preamble(cfg);
  os << "rep, level, y_log, x_log, chosen_weight, partial_sum, approx\n";
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    for (std::size_t i = 0; i < rec.per_level.size(); ++i) {
      const PathLevel& l = rec.per_level[i];
      os << r << ", " << i + 1 << ", " << detail::csv_num(l.y.log()) << ", "
         << detail::csv_num(l.x.log()) << ", " << detail::csv_num(l.chosen_weight) << ", "
         << detail::csv_num(l.partial_sum) << ", " << (l.approx ? 1 : 0) << "\n";
    }
  }
  return os.str();
}

inline Json to_json(const AuditRow& r) {
  Json j;
  j["n"] = r.n;
  j["bound"] = detail::json_real(r.bound);
  j["trials"] = r.trials;
  j["hits"] = r.hits;
  j["p_hat"] = detail::json_real(r.p_hat);
  j["ucb"] = detail::json_real(r.ucb);
  j["audited"] = r.audited;
  j["pass"] = r.pass;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline Json to_json(const AuditTable& t) {
  Json j;
  j["alpha"] = t.alpha;
  j["eps"] = t.eps;
  j["stride"] = t.stride;
  j["speed_ok"] = t.speed_ok;
  if (!t.speed_note.empty()) j["speed_note"] = t.speed_note;
  Json opt = Json::array(), gen = Json::array();
  for (const auto& r : t.option_rows) opt.push_back(to_json(r));
  for (const auto& r : t.generation_rows) gen.push_back(to_json(r));
  j["option_rows"] = opt;
  j["generation_rows"] = gen;
  return j;
}

// ---------------------------------------------------------------------------
// collapse
// ---------------------------------------------------------------------------

inline const char* collapse_case_name(CollapseCase c) {
  switch (c) {
    case CollapseCase::I: return "I";
    case CollapseCase::II: return "II";
    case CollapseCase::III: return "III";
    case CollapseCase::InfiniteMean: return "infinite_mean";
  }
  return "?";
}

inline Json to_json(const CaseReport& r) {
  Json j;
  j["h"] = detail::json_real(r.h);
  j["label"] = collapse_case_name(r.label);
  j["p"] = detail::json_real(r.p);
  j["mean_finite"] = r.mean_finite;
  j["mean_z"] = detail::json_real(r.mean_z);
  j["exact"] = r.exact;
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline Json to_json(const FunctionalEqResult& r) {
  Json j;
  Json pts = Json::array();
  for (const auto& p : r.points) {
    Json e;
    e["s"] = p.s;
    e["g_hat"] = detail::json_real(p.g_hat);
    e["rhs"] = detail::json_real(p.rhs);
    e["residual"] = detail::json_real(p.residual);
    e["se"] = detail::json_real(p.se);
    e["flagged"] = p.flagged;
    pts.push_back(e);
  }
  j["points"] = pts;
  j["max_abs_residual"] = detail::json_real(r.max_abs_residual);
  j["reps"] = r.reps;
  j["bootstrap"] = r.bootstrap;
  j["truncated_fraction"] = detail::json_real(r.truncated_fraction);
  return j;
}

inline std::string residual_csv(const RunConfig& cfg, const FunctionalEqResult& r) {
  std::ostringstream os;
  os << csv_preamble(cfg);
  os << "s, g_hat, rhs, residual, se, flagged\n";
  for (const auto& p : r.points)
    os << detail::csv_num(p.s) << ", " << detail::csv_num(p.g_hat) << ", "
       << detail::csv_num(p.rhs) << ", " << detail::csv_num(p.residual) << ", "
       << detail::csv_num(p.se) << ", " << (p.flagged ? 1 : 0) << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// counterexample
// ---------------------------------------------------------------------------

inline Json to_json(const CounterexampleSpec& spec) {
  Json j;
  j["requested"] = spec.requested;
  j["truncated"] = spec.truncated;
  Json periods = Json::array();
  for (const auto& p : spec.periods) {
    Json e;
    e["n"] = detail::json_logreal(p.n);
    e["eps"] = detail::json_logreal(p.eps);
    e["log_m"] = detail::json_logreal(p.log_m);
    e["n_cum"] = detail::json_logreal(p.n_cum);
    e["log_m_prod"] = detail::json_logreal(p.log_m_prod);
    e["log_l"] = detail::json_logreal(p.log_l);
    periods.push_back(e);
  }
  j["periods"] = periods;
  j["swift_log_c"] = detail::json_logreal(spec.swift_log_c());
  j["violated_bounds"] = spec.violated_bounds;
  j["notes"] = spec.notes;
  return j;
}

inline Json to_json(const SignedLog& v) {
  Json j;
  j["sign"] = v.sign;
  j["ln_mag"] = detail::json_real(v.mag.log());
  double lin = v.to_double();
  if (std::isfinite(lin)) j["linear"] = lin;
  return j;
}

inline Json to_json(const SuffcondSeries& s) {
  Json j;
  auto points_json = [](const std::vector<SuffcondPoint>& pts) {
    Json a = Json::array();
    for (const auto& p : pts) {
      Json e;
      e["n"] = detail::json_logreal(p.n);
      e["value"] = to_json(p.value);
      a.push_back(e);
    }
    return a;
  };
  j["points"] = points_json(s.points);
  j["subsequence"] = points_json(s.subsequence);
  j["pass"] = s.pass;
  j["pass_threshold"] = s.pass_threshold;
  j["decreasing_suffix"] = s.decreasing_suffix;
  j["truncated"] = s.truncated;
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

inline Json to_json(const BadWeight& b) {
  Json j;
  Json chosen = Json::array();
  for (std::size_t i = 0; i < b.chosen.size(); ++i) {
    Json e;
    e["period"] = b.chosen[i];
    e["beta"] = detail::json_logreal(b.beta[i]);
    e["q"] = detail::json_logreal(b.q[i]);
    e["log_f_q"] = detail::json_logreal(b.log_f_q[i]);
    chosen.push_back(e);
  }
  j["chosen"] = chosen;
  j["minsum_bound"] = detail::json_logreal(b.minsum_bound);
  j["minsum_bound_le_one"] = b.minsum_bound_le_one;
  j["atoms_underflowed"] = b.atoms_underflowed;
  if (!b.note.empty()) j["note"] = b.note;
  return j;
}

// The tail table re-emitted as a config snippet loadable by parse_config.
inline std::string piecewise_tail_config(const OffspringDist& d) {
  if (d.family != OffspringFamily::PiecewiseTail)
    throw std::invalid_argument("piecewise_tail_config: not a piecewise tail");
  std::ostringstream os;
  os.precision(17);
  os << "[offspring]\nfamily = \"piecewise_tail\"\npoints = \"";
  for (std::size_t i = 0; i < d.table.size(); ++i) {
    if (i) os << ", ";
    os << d.table[i].log_m << ":" << d.table[i].log_s;
  }
  os << "\"\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// limit machinery
// ---------------------------------------------------------------------------

inline Json to_json(const LevelSummary& s) {
  Json j;
  j["level"] = s.level;
  j["finite"] = s.finite;
  j["infinite"] = s.infinite;
  j["mean"] = detail::json_real(s.mean);
  j["q10"] = detail::json_real(s.q10);
  j["median"] = detail::json_real(s.median);
  j["q90"] = detail::json_real(s.q90);
  return j;
}

inline Json to_json(const QuantileSummary& q) {
  Json j;
  j["count"] = q.count;
  j["mean"] = detail::json_real(q.mean);
  j["q10"] = detail::json_real(q.q10);
  j["median"] = detail::json_real(q.median);
  j["q90"] = detail::json_real(q.q90);
  return j;
}

inline Json to_json(const RatioStudy& s) {
  Json j;
  j["depths"] = s.depths;
  j["estimator"] =
      s.estimator == MnEstimator::ExactSearch ? "exact_search" : "level_min_prefix";
  Json rows = Json::array();
  for (const auto& row : s.per_depth) {
    Json e;
    e["depth"] = row.depth;
    e["mn"] = to_json(row.mn_stats);
    e["normalization"] = detail::json_real(row.normalization);
    e["ratio"] = to_json(row.ratio_stats);
    e["extinct"] = row.extinct;
    e["budget_cut"] = row.budget_cut;
    rows.push_back(e);
  }
  j["per_depth"] = rows;
  j["trend"] = detail::json_real(s.trend);
  j["flagged"] = s.flagged;
  if (!s.note.empty()) j["note"] = s.note;
  return j;
}

inline std::string ratio_csv(const RunConfig& cfg, const RatioStudy& s) {
  std::ostringstream os;
  os << csv_preamble(cfg);
  os << "depth, median_ratio, q10, q90, normalization\n";
  for (const auto& row : s.per_depth)
    os << row.depth << ", " << detail::csv_num(row.ratio_stats.median) << ", "
       << detail::csv_num(row.ratio_stats.q10) << ", " << detail::csv_num(row.ratio_stats.q90)
       << ", " << detail::csv_num(row.normalization) << "\n";
  return os.str();
}

inline Json to_json(const NormalizationSum& n) {
  Json j;
  j["value"] = detail::json_real(n.value);
  Json terms = Json::array();
  for (double t : n.term) terms.push_back(detail::json_real(t));
  j["terms"] = terms;
  j["underflowed"] = n.underflowed;
  j["flagged"] = n.flagged;
  return j;
}

inline Json to_json(const AdditiveSpeedResult& a) {
  Json j;
  j["r_grid"] = a.r_grid;
  j["er_freq"] = a.er_freq;
  Json vh = Json::array(), vs = Json::array();
  for (double v : a.vhat_median) vh.push_back(detail::json_real(v));
  for (double v : a.vhat_step_median) vs.push_back(detail::json_real(v));
  j["vhat_median"] = vh;
  j["vhat_step_median"] = vs;
  j["window_lo"] = a.window_lo;
  j["window_hi"] = a.window_hi;
  j["window_shrunk"] = a.window_shrunk;
  j["truncation_tolerance"] = a.truncation_tolerance;
  j["survival_freq"] = a.survival_freq;
  j["reps"] = a.reps;
  j["delta"] = a.delta;
  j["delta_grid"] = a.delta_grid;
  j["lower_envelope_freq"] = a.lower_envelope_freq;
  if (!a.note.empty()) j["note"] = a.note;
  return j;
}

inline Json to_json(const BramsonNormalization& b) {
  Json j;
  j["s_n"] = b.s_n;
  j["sigma"] = b.sigma;
  Json terms = Json::array();
  for (double t : b.term) terms.push_back(detail::json_real(t));
  j["terms"] = terms;
  j["sum"] = detail::json_real(b.sum);
  j["zero_mass"] = detail::json_real(b.zero_mass);
  return j;
}

}  // namespace brw
