// Command-line front end: config parsing, subcommand dispatch, deterministic
// output files. Every artifact embeds the schema version, the resolved config
// (file plus flag overrides), and its hash; identical (config, seed) produce
// byte-identical outputs regardless of --threads.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "brw/report_io.hpp"

namespace fs = std::filesystem;
using namespace brw;

namespace {

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot read config file: " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

// Flag overrides are collected as raw strings and routed through the same
// validated key handler as [run] entries in a config file, so a flag and the
// equivalent config line behave identically and both land in the hash.
struct Override {
  std::string key;
  std::string value;
};

struct CommonFlags {
  std::string config_path;
  std::vector<Override> overrides;
};

void add_common(CLI::App* sub, CommonFlags& fl) {
  sub->add_option("--config", fl.config_path, "config file with [offspring], [weight], [run]");
  auto bind = [sub, &fl](const std::string& flag, const std::string& key,
                         const std::string& help) {
    sub->add_option_function<std::string>(
           flag, [&fl, key](const std::string& v) { fl.overrides.push_back({key, v}); }, help)
        ->type_name("VAL");
  };
  bind("--seed", "seed", "root RNG seed");
  bind("--reps", "reps", "independent repetitions");
  bind("--depth", "depth", "tree depth / generations");
  bind("--generations", "depth", "alias for --depth");
  bind("--budget", "budget", "realized-node budget per rep");
  bind("--threads", "threads", "rep-parallelism degree (outputs are identical for any value)");
  bind("--out-dir", "out_dir", "directory for output artifacts");
  bind("--format", "format", "artifact format: csv (tables + summary JSON) or json (JSON only)");
  bind("--epsilon", "epsilon", "speed-sequence epsilon for h(k) = exp((1+epsilon)^k)");
  bind("--cap", "cap", "offspring population cap before aggregate growth");
  bind("--conditioning", "conditioning", "extinction handling: none or restart");
}

SimConfig sim_config_from(const RunConfig& cfg) {
  SimConfig sc;
  sc.seed = cfg.seed;
  sc.depth = cfg.depth;
  sc.reps = cfg.reps;
  sc.node_budget = cfg.budget;
  sc.offspring_cap = cfg.cap;
  sc.threads = static_cast<unsigned>(cfg.threads);
  sc.conditioning = cfg.conditioning == "restart" ? SimConfig::Conditioning::Restart
                                                  : SimConfig::Conditioning::None;
  return sc;
}

RunConfig resolve_config(const CommonFlags& fl) {
  RunConfig cfg;
  if (!fl.config_path.empty()) cfg = parse_config(read_file(fl.config_path));
  for (const auto& o : fl.overrides) apply_run_key(cfg, o.key, o.value);
  return cfg;
}

void require_distributions(const RunConfig& cfg) {
  if (!cfg.has_offspring() || !cfg.has_weight())
    throw std::invalid_argument(
        "this command needs [offspring] and [weight] sections in the config file");
}

fs::path out_path(const RunConfig& cfg, const std::string& name) {
  fs::create_directories(cfg.out_dir);
  return fs::path(cfg.out_dir) / name;
}

void write_artifact(const RunConfig& cfg, const std::string& name, const std::string& bytes) {
  fs::path p = out_path(cfg, name);
  write_text(p.string(), bytes);
  std::printf("wrote %s\n", p.string().c_str());
}

void write_json_artifact(const RunConfig& cfg, const std::string& name, const Json& j) {
  write_artifact(cfg, name, j.dump(2) + "\n");
}

int fail(const std::string& message, const std::string& hint = "") {
  std::cout << error_json(message, hint).dump(2) << "\n";
  return 1;
}

// ---------------------------------------------------------------------------

int cmd_analyze(const CommonFlags& fl) {
  RunConfig cfg = resolve_config(fl);
  require_distributions(cfg);
  OffspringDist z = make_offspring(cfg);
  WeightDist w = make_weight(cfg);

  Json doc = report_header(cfg);
  double p0 = weight_zero_mass(w);
  if (p0 > 0) {
    if (!cfg.collapse)
      return fail("weight places positive mass at zero; explosion criteria need positive edge weights",
                  "run the collapse command to inspect the zero-cluster law, or set "
                  "collapse = true (config) to analyze the collapsed tree");
    // Collapse transform: offspring of the zero-cluster tree, weight
    // conditioned positive. The criterion then applies verbatim.
    z = OffspringDist::collapsed(std::make_shared<OffspringDist>(z), p0);
    w = conditional_positive_weight(w);
    doc["collapse_transform"] = {{"applied", true}, {"zero_mass", p0}};
  }

  // The criterion derives its own plumpness witness epsilon; the [run]
  // epsilon steers simulations only and is deliberately not forwarded here.
  CriterionReport rep = minsum_criterion(z, w);
  doc["criterion"] = to_json(rep);
  write_json_artifact(cfg, "analyze.json", doc);

  std::printf("criterion: %s\n", rep.name.c_str());
  std::printf("verdict: %s\n", verdict_name(rep.verdict));
  std::printf("partial sum: %.12g over %zu terms\n", rep.partial_sum, rep.truncation_index);
  std::printf("certificate: %s\n", rep.certificate.c_str());
  if (rep.verdict == Verdict::Undetermined) return 2;
  return 0;
}

int cmd_simulate(const CommonFlags& fl) {
  RunConfig cfg = resolve_config(fl);
  require_distributions(cfg);
  OffspringDist z = make_offspring(cfg);
  WeightDist w = make_weight(cfg);
  SimConfig sc = sim_config_from(cfg);

  SimOutcome grow = grow_generations(z, sc);
  SimOutcome disp = min_displacement(z, w, sc);
  std::string csv = gwsim_csv(cfg, grow, disp);

  std::size_t extinct = 0, exhausted = 0, inexact = 0;
  for (const auto& r : disp.per_rep) {
    if (r.disp.extinct) ++extinct;
    if (r.disp.budget_exhausted) ++exhausted;
  }
  for (const auto& r : grow.per_rep)
    if (!r.growth.exact) ++inexact;

  Json doc = report_header(cfg);
  doc["reps"] = cfg.reps;
  doc["extinct"] = extinct;
  doc["budget_exhausted"] = exhausted;
  doc["aggregate_growth_reps"] = inexact;
  Json levels = Json::array();
  for (const auto& s : disp.mn_summary) levels.push_back(to_json(s));
  doc["mn_summary"] = levels;
  if (cfg.format == "json") {
    Json rows = Json::array();
    std::istringstream is(csv);
    std::string line;
    bool past_header = false;
    while (std::getline(is, line)) {
      if (line.rfind("# ", 0) == 0) continue;
      if (!past_header) {
        past_header = true;
        continue;
      }
      rows.push_back(line);
    }
    doc["rows"] = rows;
    doc["columns"] = "rep, level, Zn_log, Mn, truncated, budget_exhausted";
  } else {
    write_artifact(cfg, "simulate.csv", csv);
  }
  write_json_artifact(cfg, "simulate.json", doc);
  std::printf("simulated %llu reps to depth %llu: %zu extinct, %zu budget-exhausted\n",
              static_cast<unsigned long long>(cfg.reps),
              static_cast<unsigned long long>(cfg.depth), extinct, exhausted);
  return 0;
}

int cmd_findpath(const CommonFlags& fl, const std::string& alpha_flag) {
  RunConfig cfg = resolve_config(fl);
  if (!alpha_flag.empty()) apply_run_key(cfg, "alpha", alpha_flag);
  require_distributions(cfg);
  OffspringDist z = make_offspring(cfg);
  WeightDist w = make_weight(cfg);

  bool alpha_auto = cfg.alpha == "auto";
  double alpha = alpha_auto ? findpath_alpha(cfg.epsilon) : std::stod(cfg.alpha);

  FindPathConfig fp;
  fp.seed = cfg.seed;
  fp.offspring_cap = cfg.cap;
  std::vector<PathRecord> records = run_findpath_reps(z, w, alpha, cfg.depth, cfg.reps, fp,
                                                      static_cast<unsigned>(cfg.threads));
  // A short audit of the descent inequalities; transitions n = 1..3 keep the
  // conditioning cheap. The trials-per-transition count reuses --reps.
  std::size_t audit_levels = std::min<std::size_t>(cfg.depth, 3);
  AuditTable audit = inequality_audit(z, alpha, cfg.epsilon, audit_levels, cfg.reps, fp);

  Json doc = report_header(cfg);
  doc["alpha"] = alpha;
  doc["alpha_source"] = alpha_auto ? "auto: (1+epsilon)^(-1/2)" : "explicit";
  Json recs = Json::array();
  for (const auto& r : records) recs.push_back(to_json(r));
  doc["records"] = recs;
  doc["audit"] = to_json(audit);
  std::size_t completed = 0;
  for (const auto& r : records)
    if (!r.failed_at_level) ++completed;
  doc["completed"] = completed;
  if (cfg.format != "json") write_artifact(cfg, "findpath.csv", findpath_level_csv(cfg, records));
  write_json_artifact(cfg, "findpath.json", doc);
  std::printf("alpha = %.12g (%s)\n", alpha, alpha_auto ? "auto" : "explicit");
  std::printf("paths: %zu of %llu reps reached depth %llu\n", completed,
              static_cast<unsigned long long>(cfg.reps),
              static_cast<unsigned long long>(cfg.depth));
  std::printf("audit: speed check %s over %zu transitions\n", audit.speed_ok ? "ok" : "FAILED",
              audit.option_rows.size());
  return 0;
}

int cmd_collapse(const CommonFlags& fl) {
  RunConfig cfg = resolve_config(fl);
  require_distributions(cfg);
  OffspringDist z = make_offspring(cfg);
  WeightDist w = make_weight(cfg);
  double p0 = weight_zero_mass(w);
  if (p0 <= 0)
    return fail("collapse needs a weight with an atom at zero",
                "use family = \"mixture_zero\" (or an atomic law with mass at 0) in [weight]");
  if (p0 >= 1) return fail("weight is almost surely zero; the collapsed tree is degenerate");

  CaseReport cr = classify_case(z, w);
  std::vector<double> grid;
  for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
  FunctionalEqResult fe =
      verify_functional_equation(z, p0, grid, cfg.reps, cfg.seed, cfg.cap);

  Json doc = report_header(cfg);
  doc["case"] = to_json(cr);
  doc["functional_equation"] = to_json(fe);
  if (cfg.format != "json") write_artifact(cfg, "collapse_residuals.csv", residual_csv(cfg, fe));
  write_json_artifact(cfg, "collapse.json", doc);
  std::printf("case %s: h = E{Z} Pr{W=0} = %.12g (%s)\n", collapse_case_name(cr.label), cr.h,
              cr.exact ? "exact rational witness" : "floating comparison");
  std::printf("functional equation: max |residual| = %.6g over %zu grid points, %zu reps\n",
              fe.max_abs_residual, fe.points.size(), fe.reps);
  return 0;
}

int cmd_counterexample(const CommonFlags& fl) {
  RunConfig cfg = resolve_config(fl);

  std::vector<LogReal> n_seq;
  std::string source;
  if (cfg.toy) {
    for (double n : {4.0, 16.0, 64.0}) n_seq.push_back(LogReal::from_linear(n));
    source = "toy periods {4, 16, 64}";
  } else if (!cfg.periods.empty()) {
    for (double n : cfg.periods) n_seq.push_back(LogReal::from_linear(n));
    source = "explicit periods";
  } else {
    n_seq = reference_period_lengths(3);
    source = "reference tower periods";
  }
  std::function<double(double)> log_omega;
  if (cfg.omega == "log")
    log_omega = [](double ln_n) { return std::log(std::max(ln_n, 1.001)); };
  else
    log_omega = [](double ln_n) { return 0.5 * ln_n; };

  CounterexampleSpec spec = build_counterexample(n_seq);
  SuffcondSeries suff = verify_suffcond(spec, log_omega);
  BadWeight bw = build_bad_weight(spec, log_omega);

  Json doc = report_header(cfg);
  doc["source"] = source;
  doc["spec"] = to_json(spec);
  doc["suffcond"] = to_json(suff);
  doc["bad_weight"] = to_json(bw);

  bool table_truncated = false;
  auto table = spec.tail_table(&table_truncated);
  if (table) {
    std::string snippet = piecewise_tail_config(*table);
    write_artifact(cfg, "counterexample_tail.ini", snippet);
    doc["tail_table_truncated"] = table_truncated;
  } else {
    doc["tail_table_truncated"] = true;
  }
  write_json_artifact(cfg, "counterexample.json", doc);

  std::printf("periods: %s (%zu kept%s)\n", source.c_str(), spec.periods.size(),
              spec.truncated ? ", deeper ones left the double range" : "");
  std::printf("[%s] speed-sequence audit: tail sinks below %.0f%s\n",
              suff.pass ? "PASS" : "FAIL", suff.pass_threshold,
              suff.note.empty() ? "" : (" — " + suff.note).c_str());
  std::printf("[%s] min-sum bound: log sum = %.6g (<= 0 required)\n",
              bw.minsum_bound_le_one ? "PASS" : "FAIL", bw.minsum_bound.log());
  for (const auto& v : spec.violated_bounds) std::printf("[FAIL] bound violated: %s\n", v.c_str());
  return 0;
}

int cmd_limit(const CommonFlags& fl, const std::string& depths_flag,
              const std::string& r_grid_flag, const std::string& delta_flag) {
  RunConfig cfg = resolve_config(fl);
  if (!depths_flag.empty()) apply_run_key(cfg, "depths", depths_flag);
  if (!r_grid_flag.empty()) apply_run_key(cfg, "r_grid", r_grid_flag);
  if (!delta_flag.empty()) apply_run_key(cfg, "delta", delta_flag);
  require_distributions(cfg);
  OffspringDist z = make_offspring(cfg);
  WeightDist w = make_weight(cfg);

  std::vector<std::size_t> depths = cfg.depths;
  if (depths.empty())
    for (std::size_t d = std::min<std::size_t>(4, cfg.depth); d <= cfg.depth; ++d)
      depths.push_back(d);
  std::vector<double> r_grid = cfg.r_grid.empty() ? std::vector<double>{1.0} : cfg.r_grid;
  std::size_t max_depth = *std::max_element(depths.begin(), depths.end());

  SimConfig sc = sim_config_from(cfg);
  sc.depth = max_depth;
  RatioStudy study = mn_ratio_study(z, w, cfg.epsilon, depths, sc);
  NormalizationSum norm = normalization_sum(w, cfg.epsilon, max_depth);
  AdditiveSpeedResult speed =
      additive_speed_check(z, cfg.epsilon, r_grid, max_depth, sc, 0.1, cfg.delta);

  Json doc = report_header(cfg);
  doc["ratio_study"] = to_json(study);
  doc["normalization"] = to_json(norm);
  doc["additive_speed"] = to_json(speed);
  if (cfg.format != "json") write_artifact(cfg, "limit_ratio.csv", ratio_csv(cfg, study));
  write_json_artifact(cfg, "limit.json", doc);

  const DepthRatio& last = study.per_depth.back();
  std::printf("median M_n / T_n at depth %zu: %.6g (trend slope %.6g across %zu depths)\n",
              last.depth, last.ratio_stats.median, study.trend, depths.size());
  std::printf("normalization T_%zu = %.6g%s\n", max_depth, norm.value,
              norm.flagged ? " (quantile underflow contributed zeros)" : "");
  std::printf("survival in h-window, r = %.3g: %.4g of surviving reps\n", r_grid.front(),
              speed.er_freq.empty() ? 0.0 : speed.er_freq.front());
  if (study.flagged) std::printf("note: some reps hit the node budget; ratios are flagged\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"heavy-tailed branching random walk toolkit"};
  app.require_subcommand(1);

  CommonFlags fl_analyze, fl_simulate, fl_findpath, fl_collapse, fl_counter, fl_limit;
  std::string alpha_flag, depths_flag, r_grid_flag, delta_flag;
  bool collapse_flag = false, toy_flag = false;
  std::string periods_flag, omega_flag;

  CLI::App* analyze = app.add_subcommand(
      "analyze", "explosion criterion verdict for the configured (offspring, weight) pair");
  add_common(analyze, fl_analyze);
  analyze->add_flag("--collapse", collapse_flag,
                    "apply the collapse transform when the weight has mass at zero");

  CLI::App* simulate = app.add_subcommand(
      "simulate", "grow trees and track generation sizes and minimal displacement");
  add_common(simulate, fl_simulate);

  CLI::App* findpath = app.add_subcommand(
      "findpath", "greedy cheap-path descent with the option-counting inequality audit");
  add_common(findpath, fl_findpath);
  findpath->add_option("--alpha", alpha_flag,
                       "option-count exponent in (0,1), or 'auto' for (1+epsilon)^(-1/2)");

  CLI::App* collapse = app.add_subcommand(
      "collapse", "zero-weight cluster law: case classification and functional-equation check");
  add_common(collapse, fl_collapse);

  CLI::App* counterexample = app.add_subcommand(
      "counterexample", "periodic speed-sequence construction with min-sum and tail audits");
  add_common(counterexample, fl_counter);
  counterexample->add_flag("--toy", toy_flag, "use the small audit periods {4, 16, 64}");
  counterexample->add_option("--periods", periods_flag, "comma-separated period lengths");
  counterexample->add_option("--omega", omega_flag, "slack growth: sqrt or log");

  CLI::App* limit = app.add_subcommand(
      "limit", "displacement-to-normalization ratio study and additive-speed window check");
  add_common(limit, fl_limit);
  limit->add_option("--depths", depths_flag, "comma-separated depth ladder");
  limit->add_option("--r-grid", r_grid_flag, "comma-separated window half-widths");
  limit->add_option("--delta", delta_flag, "lower-envelope slack exponent in (0,1)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (analyze->parsed()) {
      if (collapse_flag) fl_analyze.overrides.push_back({"collapse", "true"});
      return cmd_analyze(fl_analyze);
    }
    if (simulate->parsed()) return cmd_simulate(fl_simulate);
    if (findpath->parsed()) return cmd_findpath(fl_findpath, alpha_flag);
    if (collapse->parsed()) return cmd_collapse(fl_collapse);
    if (counterexample->parsed()) {
      if (toy_flag) fl_counter.overrides.push_back({"toy", "true"});
      if (!periods_flag.empty()) fl_counter.overrides.push_back({"periods", periods_flag});
      if (!omega_flag.empty()) fl_counter.overrides.push_back({"omega", omega_flag});
      return cmd_counterexample(fl_counter);
    }
    if (limit->parsed()) return cmd_limit(fl_limit, depths_flag, r_grid_flag, delta_flag);
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return fail("no subcommand selected");
}
