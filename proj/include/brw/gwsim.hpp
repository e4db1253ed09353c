#ifndef BRW_GWSIM_HPP
#define BRW_GWSIM_HPP

// Lazy weighted Galton-Watson simulation: generation sizes, exact minimal
// displacement per level via budgeted best-first search, level-minimum sums,
// trimmed-tree survival, speed sandwich checks, and path-weight spectra.
//
// The search never materializes a full generation. Each node hands out its
// children one at a time in ascending weight order (descending uniform order
// statistics drive the lazy child cursor), so a best-first expansion by path
// weight settles the exact level minimum M_l the first time it pops a node at
// level l — the standard shortest-path argument for nonnegative edge weights.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <stdexcept>
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
// Configuration and per-rep records
// ---------------------------------------------------------------------------

struct SimConfig {
  std::uint64_t seed = 1;
  std::size_t depth = 8;
  std::size_t reps = 100;
  std::uint64_t node_budget = 1'000'000;  // realized nodes per rep
  double offspring_cap = 100'000;         // population cap for per-node iteration
  enum class Conditioning { None, Restart } conditioning = Conditioning::None;
  unsigned threads = 1;

  void validate() const {
    if (depth < 1) throw std::invalid_argument("SimConfig: depth must be >= 1");
    if (reps < 1) throw std::invalid_argument("SimConfig: reps must be >= 1");
    if (node_budget < depth)
      throw std::invalid_argument("SimConfig: nodeBudget must be >= depth");
    if (node_budget > 0xFFFFFFF0ull)
      throw std::invalid_argument("SimConfig: nodeBudget exceeds the node id range");
    if (!(offspring_cap >= 1))
      throw std::invalid_argument("SimConfig: offspringCap must be >= 1");
    if (threads < 1) throw std::invalid_argument("SimConfig: threads must be >= 1");
  }
};

struct RepGrowth {
  std::vector<LogReal> sizes;  // sizes[0] = 1 (the root generation)
  bool exact = true;           // false once any aggregate regime was used
  bool aggregate_lower_bound = false;  // heavy tail: size continued as the exact
                                       // max of the generation's draws (a
                                       // stochastic lower bound of the sum)
  bool gaussian_aggregate = false;     // moment-matched normal step used
  bool mean_aggregate = false;         // deterministic mean continuation used
  bool aggregate_unavailable = false;  // growth stopped: no aggregate rule
  bool capped_draw = false;            // an individual offspring draw was capped
  bool extinct = false;                // hit population zero at or before depth
  std::uint32_t restarts = 0;
};

struct RepDisplacement {
  // M_1..M_depth. Entries are +infinity for levels the tree never reaches
  // (extinction); the vector is shorter than depth only when the node budget
  // ran out, never silently wrong.
  std::vector<double> mn;
  bool extinct = false;
  bool budget_exhausted = false;
  bool capped_draw = false;
  std::uint64_t nodes = 0;  // realized nodes in the final attempt
  std::uint32_t restarts = 0;
};

struct RepRecord {
  std::uint64_t rep = 0;
  RepGrowth growth;
  RepDisplacement disp;
  std::vector<double> level_min;         // Y_l: minimum edge weight into level l
  std::vector<double> level_min_prefix;  // running sums of level_min
  bool level_min_shortcut = false;       // order-statistic shortcut engaged
};

struct LevelSummary {
  std::size_t level = 0;
  std::size_t finite = 0;    // reps with a finite M at this level
  std::size_t infinite = 0;  // reps extinct before this level
  double mean = std::numeric_limits<double>::quiet_NaN();
  double q10 = std::numeric_limits<double>::quiet_NaN();
  double median = std::numeric_limits<double>::quiet_NaN();
  double q90 = std::numeric_limits<double>::quiet_NaN();
};

struct SimOutcome {
  std::vector<RepRecord> per_rep;
  std::vector<LevelSummary> mn_summary;
};

namespace detail {

constexpr std::uint32_t kMaxAttempts = 4096;  // rejection cap under Restart

// Every rep owns a substream; restart attempts get consecutive substreams so
// rejection sampling never reuses randomness.
inline Rng rep_rng(std::uint64_t seed, StreamTag tag, std::uint64_t rep, std::uint32_t attempt) {
  return Rng(seed, tag, rep * kMaxAttempts + attempt);
}

// ---------------------------------------------------------------------------
// Generation-size growth (shared by several operations)
// ---------------------------------------------------------------------------

inline RepGrowth grow_rep(const OffspringDist& z, std::size_t depth, double offspring_cap,
                          Rng& rng) {
  const double inf = std::numeric_limits<double>::infinity();
  RepGrowth g;
  g.sizes.reserve(depth + 1);
  g.sizes.push_back(LogReal::one());
  for (std::size_t lvl = 0; lvl < depth; ++lvl) {
    LogReal cur = g.sizes.back();
    if (cur.is_zero()) break;
    if (z.family == OffspringFamily::Deterministic) {
      g.sizes.push_back(z.det_k == 0 ? LogReal::zero()
                                     : cur * LogReal::from_linear(double(z.det_k)));
      continue;
    }
    auto ci = cur.exact_integer();
    if (ci && *ci <= offspring_cap) {
      // Exact regime: one draw per node.
      LogReal total = LogReal::zero();
      double cap = z.family == OffspringFamily::Collapsed ? offspring_cap : inf;
      for (double i = 0; i < *ci; ++i) {
        OffspringDraw d = sample_offspring(z, rng, cap);
        g.capped_draw |= d.capped;
        total += d.count;
      }
      g.sizes.push_back(total);
      continue;
    }
    // Aggregate regime: the population no longer fits per-node iteration.
    g.exact = false;
    bool stop = false;
    switch (z.family) {
      case OffspringFamily::Geometric: {
        double mu = z.mean_param;
        if (ci && *ci <= 9e15) {
          // Sum of P geometric draws, matched in mean and variance.
          double mean = *ci * mu;
          double var = *ci * mu * (1.0 + mu);
          double draw = std::round(mean + std::sqrt(var) * normal(rng));
          if (draw < 0) draw = 0;
          g.gaussian_aggregate = true;
          g.sizes.push_back(LogReal::from_linear(draw));
        } else {
          g.mean_aggregate = true;
          g.sizes.push_back(cur * LogReal::from_linear(mu));
        }
        break;
      }
      case OffspringFamily::PowerTail:
      case OffspringFamily::LogTail:
      case OffspringFamily::PiecewiseTail: {
        // Infinite-mean regime: continue with the exact law of the maximum of
        // the generation's draws. For these tails the maximum matches the sum
        // to leading exponential order, and it is always a stochastic lower
        // bound, so downstream growth-rate statistics stay honest (flagged).
        double lt = min_uniform_log(rng, cur);
        auto q = offspring_quantile_log_tail_opt(z, lt);
        if (!q) {
          g.aggregate_unavailable = true;  // survival table ran out
          stop = true;
          break;
        }
        g.aggregate_lower_bound = true;
        g.sizes.push_back(*q);
        break;
      }
      default:
        g.aggregate_unavailable = true;  // Collapsed: no closed-form aggregate
        stop = true;
        break;
    }
    if (stop) break;
  }
  if (!g.sizes.empty() && g.sizes.back().is_zero()) g.extinct = true;
  return g;
}

inline bool grew_to_depth(const RepGrowth& g, std::size_t depth) {
  return g.sizes.size() == depth + 1 && !g.sizes.back().is_zero();
}

// Population at level k, extended past an early stop: zero after extinction,
// unknown (nullopt) after an aggregate-unavailable stop.
inline std::optional<LogReal> size_at(const RepGrowth& g, std::size_t k) {
  if (k < g.sizes.size()) return g.sizes[k];
  if (g.extinct) return LogReal::zero();
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Best-first search over lazily generated trees
// ---------------------------------------------------------------------------

struct SearchResult {
  std::vector<double> level_first;  // first settlement path weight, levels 1..
  std::vector<double> completions;  // spectrum mode: all target-depth path weights
  std::uint64_t nodes = 0;          // realized nodes (root included)
  bool budget_exhausted = false;
  bool frontier_exhausted = false;  // the heap emptied
};

// Best-first expansion by cumulative path weight. Requirements on Source:
// NodeId root(); optional<Edge> next_child(NodeId) with edges emitted in
// ascending weight order; NodeId realize(const Edge&). With an infinite
// weight_bound the first pop at each level is the exact level minimum; a
// finite bound prunes to the sub-bound prefix tree, which is exhaustive for
// enumerating all target-depth paths of weight <= bound.
template <class Source>
inline SearchResult best_first_search(Source& src, std::size_t depth, std::uint64_t node_budget,
                                      double weight_bound, bool collect_completions) {
  using Edge = typename Source::Edge;
  struct Entry {
    double pri;
    std::uint64_t seq;
    std::uint32_t parent;
    Edge edge;
  };
  struct Cmp {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.pri != b.pri) return a.pri > b.pri;
      return a.seq > b.seq;  // FIFO among equal path weights
    }
  };
  struct ENode {
    typename Source::NodeId src;
    std::uint32_t depth;
    double cum;
  };

  SearchResult out;
  std::vector<ENode> nodes;
  std::priority_queue<Entry, std::vector<Entry>, Cmp> heap;
  std::uint64_t seq = 0;

  auto push_next_child = [&](std::uint32_t parent_idx) {
    auto e = src.next_child(nodes[parent_idx].src);
    if (!e) return;
    double pri = nodes[parent_idx].cum + e->weight;
    // Children arrive in ascending weight order, so the first child over the
    // bound ends this node's enumeration for good.
    if (pri <= weight_bound) heap.push(Entry{pri, seq++, parent_idx, *e});
  };

  nodes.push_back(ENode{src.root(), 0, 0.0});
  out.nodes = 1;
  std::size_t settled = 0;
  if (depth > 0) push_next_child(0);

  while (!heap.empty()) {
    if (settled >= depth && !collect_completions) break;
    if (out.nodes >= node_budget) {
      out.budget_exhausted = true;
      break;
    }
    Entry top = heap.top();
    heap.pop();
    ENode child{src.realize(top.edge), nodes[top.parent].depth + 1, top.pri};
    std::uint32_t child_idx = std::uint32_t(nodes.size());
    nodes.push_back(child);
    ++out.nodes;
    if (child.depth == settled + 1) {
      out.level_first.push_back(child.cum);
      ++settled;
    }
    if (child.depth < depth) {
      push_next_child(child_idx);
    } else if (collect_completions) {
      out.completions.push_back(child.cum);
    }
    push_next_child(top.parent);  // the parent's next-cheapest child
  }
  out.frontier_exhausted = heap.empty();
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Tree sources
// ---------------------------------------------------------------------------

// Lazily sampled weighted Galton-Watson tree. Offspring counts come from the
// inverse-cdf sampler (exact LogReal counts, no cap except for the Collapsed
// family whose sampler needs a node cap); child weights are realized through
// the descending chain of uniform order statistics V_(1) >= V_(2) >= ..., so
// child j carries weight F_W^{-1}(1 - V_(j)) and weights ascend in j.
class LazySource {
 public:
  using NodeId = std::uint32_t;
  struct Edge {
    double weight;
  };

  // Distributions are held by value so temporaries are safe to pass; the Rng
  // is shared mutable state and must outlive the source.
  LazySource(OffspringDist z, WeightDist w, Rng& rng, double collapsed_cap)
      : z_(std::move(z)), w_(std::move(w)), rng_(&rng), collapsed_cap_(collapsed_cap) {}

  NodeId root() { return make_node(); }
  NodeId realize(const Edge&) { return make_node(); }

  std::optional<Edge> next_child(NodeId id) {
    Cursor& c = cursors_[id];
    double denom_log;
    if (c.n_exact >= 0) {
      double rem = c.n_exact - double(c.j);
      if (rem <= 0) return std::nullopt;
      denom_log = std::log(rem);
    } else {
      // Counts beyond exact-integer range dwarf any node budget, so the
      // cursor never exhausts and n - j = n below double resolution.
      denom_log = c.n_log;
    }
    double lu = rng_->log_u01();
    if (lu == 0) lu = -1e-300;
    c.lv += -std::exp(std::log(-lu) - denom_log);
    ++c.j;
    double lw = weight_quantile_log(w_, log1m_exp(c.lv));
    return Edge{std::exp(lw)};
  }

  bool draws_capped() const { return draws_capped_; }

 private:
  struct Cursor {
    double n_exact = -1;  // >= 0: exact child count; < 0: use n_log
    double n_log = 0;
    std::uint64_t j = 0;
    double lv = 0;  // log V_(j), state of the descending uniform chain
  };

  NodeId make_node() {
    double cap = z_.family == OffspringFamily::Collapsed
                     ? collapsed_cap_
                     : std::numeric_limits<double>::infinity();
    OffspringDraw d = sample_offspring(z_, *rng_, cap);
    draws_capped_ |= d.capped;
    Cursor c;
    if (auto ni = d.count.exact_integer()) {
      c.n_exact = *ni;
    } else {
      c.n_log = d.count.log();
    }
    cursors_.push_back(c);
    return NodeId(cursors_.size() - 1);
  }

  OffspringDist z_;
  WeightDist w_;
  Rng* rng_;
  double collapsed_cap_;
  bool draws_capped_ = false;
  std::vector<Cursor> cursors_;
};

// A fully materialized weighted tree, for oracles and small fixtures.
// Children must be sorted by ascending weight.
struct FixedTree {
  struct Node {
    std::vector<std::pair<double, std::uint32_t>> children;  // (weight, node)
  };
  std::vector<Node> nodes;  // index 0 is the root
};

class FixedSource {
 public:
  using NodeId = std::uint32_t;
  struct Edge {
    double weight;
    std::uint32_t target;
  };

  explicit FixedSource(const FixedTree& t) : t_(&t), cursor_(t.nodes.size(), 0) {
    for (const auto& n : t.nodes)
      for (std::size_t k = 1; k < n.children.size(); ++k)
        if (n.children[k].first < n.children[k - 1].first)
          throw std::invalid_argument("FixedSource: children must ascend in weight");
  }

  NodeId root() { return 0; }
  NodeId realize(const Edge& e) { return e.target; }

  std::optional<Edge> next_child(NodeId id) {
    const auto& kids = t_->nodes[id].children;
    std::uint32_t& k = cursor_[id];
    if (k >= kids.size()) return std::nullopt;
    const auto& pr = kids[k++];
    return Edge{pr.first, pr.second};
  }

 private:
  const FixedTree* t_;
  std::vector<std::uint32_t> cursor_;
};

// Random small instance: every node above the bottom level gets a uniform
// child count in {0..max_children} and iid weights from W, sorted ascending.
inline FixedTree random_fixed_tree(Rng& rng, const WeightDist& w, std::size_t depth,
                                   unsigned max_children) {
  FixedTree t;
  t.nodes.emplace_back();
  std::vector<std::uint32_t> frontier{0};
  for (std::size_t lvl = 0; lvl < depth; ++lvl) {
    std::vector<std::uint32_t> next;
    for (std::uint32_t id : frontier) {
      std::uint64_t k = rng.below(max_children + 1);
      std::vector<std::pair<double, std::uint32_t>> kids;
      kids.reserve(k);
      for (std::uint64_t c = 0; c < k; ++c) {
        double wgt = std::exp(weight_quantile_log(w, rng.log_u01()));
        std::uint32_t cid = std::uint32_t(t.nodes.size());
        t.nodes.emplace_back();
        kids.emplace_back(wgt, cid);
        next.push_back(cid);
      }
      std::stable_sort(kids.begin(), kids.end(),
                       [](const auto& a, const auto& b) { return a.first < b.first; });
      t.nodes[id].children = std::move(kids);
    }
    frontier = std::move(next);
  }
  return t;
}

// Brute-force oracle: enumerate every root path and take per-level minima.
// Uses the same parent-sum-plus-weight accumulation as the search engine, so
// agreement can be checked with exact equality.
inline std::vector<double> exhaustive_min_displacement(const FixedTree& t, std::size_t depth) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> best(depth + 1, inf);
  struct Frame {
    std::uint32_t node;
    std::uint32_t d;
    double cum;
  };
  std::vector<Frame> stack{{0, 0, 0.0}};
  while (!stack.empty()) {
    Frame f = stack.back();
    stack.pop_back();
    if (f.d >= 1 && f.cum < best[f.d]) best[f.d] = f.cum;
    if (f.d == depth) continue;
    for (const auto& [w, c] : t.nodes[f.node].children)
      stack.push_back(Frame{c, f.d + 1, f.cum + w});
  }
  return std::vector<double>(best.begin() + 1, best.end());
}

// Best-first minimal displacement on a fixed tree (oracle counterpart).
// Levels the tree never reaches come back as +infinity.
inline std::vector<double> best_first_min_displacement(const FixedTree& t, std::size_t depth,
                                                       std::uint64_t node_budget = 1'000'000) {
  FixedSource src(t);
  auto r = detail::best_first_search(src, depth, node_budget,
                                     std::numeric_limits<double>::infinity(), false);
  std::vector<double> mn = std::move(r.level_first);
  if (!r.budget_exhausted)
    mn.resize(depth, std::numeric_limits<double>::infinity());
  return mn;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

namespace detail {

inline void summarize_mn(SimOutcome& out, std::size_t depth) {
  out.mn_summary.clear();
  for (std::size_t lvl = 1; lvl <= depth; ++lvl) {
    LevelSummary s;
    s.level = lvl;
    std::vector<double> finite;
    for (const RepRecord& r : out.per_rep) {
      if (r.disp.mn.size() < lvl) continue;  // budget-truncated rep
      double v = r.disp.mn[lvl - 1];
      if (std::isinf(v)) {
        ++s.infinite;
      } else {
        finite.push_back(v);
      }
    }
    s.finite = finite.size();
    if (!finite.empty()) {
      std::sort(finite.begin(), finite.end());
      double sum = 0;
      for (double v : finite) sum += v;
      s.mean = sum / double(finite.size());
      auto rank = [&](double q) {
        return finite[std::size_t(std::floor(q * double(finite.size() - 1)))];
      };
      s.q10 = rank(0.10);
      s.median = rank(0.50);
      s.q90 = rank(0.90);
    }
    out.mn_summary.push_back(s);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Generation sizes only. Exact per-node simulation below offspringCap
// population; flagged aggregate continuation above it.
inline SimOutcome grow_generations(const OffspringDist& z, const SimConfig& cfg) {
  cfg.validate();
  SimOutcome out;
  out.per_rep.resize(cfg.reps);
  detail::parallel_reps(cfg.reps, cfg.threads, [&](std::size_t rep) {
    RepRecord rec;
    rec.rep = rep;
    for (std::uint32_t attempt = 0;; ++attempt) {
      Rng rng = detail::rep_rng(cfg.seed, StreamTag::Generations, rep, attempt);
      rec.growth = detail::grow_rep(z, cfg.depth, cfg.offspring_cap, rng);
      rec.growth.restarts = attempt;
      if (!rec.growth.extinct || cfg.conditioning == SimConfig::Conditioning::None ||
          attempt + 1 >= detail::kMaxAttempts)
        break;
    }
    out.per_rep[rep] = std::move(rec);
  });
  detail::summarize_mn(out, cfg.depth);
  return out;
}

// Exact per-level minimal displacement M_1..M_depth by best-first search.
inline SimOutcome min_displacement(const OffspringDist& z, const WeightDist& w,
                                   const SimConfig& cfg) {
  cfg.validate();
  const double inf = std::numeric_limits<double>::infinity();
  SimOutcome out;
  out.per_rep.resize(cfg.reps);
  detail::parallel_reps(cfg.reps, cfg.threads, [&](std::size_t rep) {
    RepRecord rec;
    rec.rep = rep;
    RepDisplacement d;
    for (std::uint32_t attempt = 0;; ++attempt) {
      Rng rng = detail::rep_rng(cfg.seed, StreamTag::MinDisplacement, rep, attempt);
      LazySource src(z, w, rng, cfg.offspring_cap);
      auto r = detail::best_first_search(src, cfg.depth, cfg.node_budget, inf, false);
      d = RepDisplacement{};
      d.mn = std::move(r.level_first);
      d.nodes = r.nodes;
      d.budget_exhausted = r.budget_exhausted;
      d.capped_draw = src.draws_capped();
      d.extinct = r.frontier_exhausted && d.mn.size() < cfg.depth;
      d.restarts = attempt;
      // Extinction is rejected under Restart; budget truncation never is.
      if (!d.extinct || cfg.conditioning == SimConfig::Conditioning::None ||
          attempt + 1 >= detail::kMaxAttempts)
        break;
    }
    if (d.extinct) d.mn.resize(cfg.depth, inf);
    rec.disp = std::move(d);
    out.per_rep[rep] = std::move(rec);
  });
  detail::summarize_mn(out, cfg.depth);
  return out;
}

// Per-level minimum edge weights Y_l and their running sums. Levels whose
// population fits under offspringCap realize every edge weight; larger levels
// use the order-statistic shortcut min = F_W^{-1}(1 - U^{1/N}) (still the
// exact conditional law given N; flagged).
inline SimOutcome level_min_sum(const OffspringDist& z, const WeightDist& w,
                                const SimConfig& cfg) {
  cfg.validate();
  SimOutcome out;
  out.per_rep.resize(cfg.reps);
  detail::parallel_reps(cfg.reps, cfg.threads, [&](std::size_t rep) {
    RepRecord rec;
    rec.rep = rep;
    std::uint32_t attempt = 0;
    for (;; ++attempt) {
      Rng grow_rng = detail::rep_rng(cfg.seed, StreamTag::Generations, rep, attempt);
      rec.growth = detail::grow_rep(z, cfg.depth, cfg.offspring_cap, grow_rng);
      rec.growth.restarts = attempt;
      if (detail::grew_to_depth(rec.growth, cfg.depth) ||
          cfg.conditioning == SimConfig::Conditioning::None ||
          attempt + 1 >= detail::kMaxAttempts)
        break;
    }
    Rng min_rng = detail::rep_rng(cfg.seed, StreamTag::LevelMinima, rep, attempt);
    rec.level_min.clear();
    rec.level_min_prefix.clear();
    double run = 0;
    for (std::size_t lvl = 1; lvl < rec.growth.sizes.size(); ++lvl) {
      LogReal n = rec.growth.sizes[lvl];
      if (n.is_zero()) break;
      double lw;
      auto ni = n.exact_integer();
      if (ni && *ni <= cfg.offspring_cap) {
        double best = std::numeric_limits<double>::infinity();
        for (double i = 0; i < *ni; ++i)
          best = std::min(best, weight_quantile_log(w, min_rng.log_u01()));
        lw = best;
      } else {
        rec.level_min_shortcut = true;
        lw = weight_quantile_log(w, min_uniform_log(min_rng, n));
      }
      double y = std::exp(lw);
      run += y;
      rec.level_min.push_back(y);
      rec.level_min_prefix.push_back(run);
    }
    out.per_rep[rep] = std::move(rec);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Trimmed-tree survival
// ---------------------------------------------------------------------------

namespace detail {

// log F_W(a) recovered from the quantile: sup{u : F_W^{-1}(u) <= a}.
inline double weight_cdf_log(const WeightDist& w, double log_a) {
  if (weight_quantile_log(w, 0.0) <= log_a) return 0.0;
  double lo = -746.0, hi = 0.0;
  if (weight_quantile_log(w, lo) > log_a)
    return -std::numeric_limits<double>::infinity();
  for (int it = 0; it < 120; ++it) {
    double mid = 0.5 * (lo + hi);
    if (weight_quantile_log(w, mid) <= log_a) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

constexpr double kTrimProcessCap = 4096;  // survivors carried per level

}  // namespace detail

struct TrimRepRecord {
  std::uint32_t reached = 0;  // deepest level with a trimmed survivor
  bool survived = false;
  bool capped = false;  // survivor population clamped (result is then a lower bound)
  bool budget_exhausted = false;
  bool approx_counts = false;  // a binomial draw used an approximation regime
  std::uint64_t nodes = 0;
};

struct TrimResult {
  double survival_frequency = 0;
  std::vector<TrimRepRecord> per_rep;
  std::vector<double> keep_prob;  // resolved F_W(a_n) per level
  bool any_capped = false;
};

// Default trimming thresholds a_n = F_W^{-1}(1/f(n)) from a speed sequence.
inline std::vector<double> trim_sequence_from_speed(const SpeedSeq& f, const WeightDist& w,
                                                    std::size_t depth) {
  if (f.size() <= depth)
    throw std::invalid_argument("trim_sequence_from_speed: speed table shorter than depth");
  std::vector<double> a;
  a.reserve(depth);
  for (std::size_t n = 1; n <= depth; ++n)
    a.push_back(std::exp(weight_quantile_log_deep(w, f.log_value[n])));
  return a;
}

// Keeps only level-n edges of weight <= a_n and reports how often the trimmed
// tree reaches the target depth. Survival needs counts only: each survivor's
// children thin independently with probability F_W(a_n), so the surviving
// offspring of a node is Binomial(Z, F_W(a_n)).
inline TrimResult trimmed_survival(const OffspringDist& z, const WeightDist& w,
                                   const std::vector<double>& a_seq, const SimConfig& cfg) {
  cfg.validate();
  if (a_seq.size() < cfg.depth)
    throw std::invalid_argument("trimmed_survival: aSeq shorter than depth");
  for (std::size_t i = 0; i < cfg.depth; ++i)
    if (!(a_seq[i] > 0))
      throw std::invalid_argument("trimmed_survival: thresholds must be positive");

  TrimResult out;
  out.keep_prob.reserve(cfg.depth);
  for (std::size_t i = 0; i < cfg.depth; ++i)
    out.keep_prob.push_back(std::exp(detail::weight_cdf_log(w, std::log(a_seq[i]))));

  out.per_rep.resize(cfg.reps);
  detail::parallel_reps(cfg.reps, cfg.threads, [&](std::size_t rep) {
    Rng rng = detail::rep_rng(cfg.seed, StreamTag::Trimming, rep, 0);
    TrimRepRecord rec;
    const double inf = std::numeric_limits<double>::infinity();
    double cap = z.family == OffspringFamily::Collapsed ? cfg.offspring_cap : inf;
    double survivors = 1;
    for (std::size_t lvl = 1; lvl <= cfg.depth; ++lvl) {
      double p = out.keep_prob[lvl - 1];
      double next = 0;
      for (double i = 0; i < survivors; ++i) {
        if (rec.nodes >= cfg.node_budget) {
          rec.budget_exhausted = true;
          break;
        }
        ++rec.nodes;
        OffspringDraw zc = sample_offspring(z, rng, cap);
        rec.capped |= zc.capped;
        CountDraw b = sample_binomial(rng, zc.count, p);
        rec.approx_counts |= !b.exact;
        double add = b.value.linear();
        next += std::isfinite(add) ? add : detail::kTrimProcessCap;
        if (next >= detail::kTrimProcessCap) {
          // Carrying more survivors than the cap only helps survival; the
          // clamped process couples below the true one, so the reported
          // frequency is a lower bound when this flag is set.
          next = detail::kTrimProcessCap;
          rec.capped = true;
          break;
        }
      }
      if (rec.budget_exhausted) break;
      survivors = next;
      if (survivors < 1) break;
      rec.reached = std::uint32_t(lvl);
    }
    rec.survived = rec.reached == cfg.depth;
    out.per_rep[rep] = rec;
  });
  std::size_t hits = 0;
  for (const auto& r : out.per_rep) {
    hits += r.survived ? 1 : 0;
    out.any_capped |= r.capped;
  }
  out.survival_frequency = double(hits) / double(cfg.reps);
  return out;
}

// ---------------------------------------------------------------------------
// Speed sandwich
// ---------------------------------------------------------------------------

struct SandwichRep {
  bool holds = true;          // no check decided against the sandwich
  std::uint32_t checked = 0;  // decided comparisons
  std::uint32_t skipped = 0;  // comparisons beyond representable range
  bool extinct = false;
  std::uint32_t restarts = 0;
};

struct SandwichResult {
  double probability = 0;  // fraction of reps with no violated comparison
  std::vector<SandwichRep> per_rep;
  std::uint64_t total_skipped = 0;
  bool any_aggregate = false;  // some rep grew through an aggregate regime
};

namespace detail {

// Compare a population count (LogReal value) against a speed entry whose
// LogReal holds log(speed). Undecidable only when both sides saturate.
// Finite comparisons carry a one-ulp relative guard band so configurations
// built to sit exactly on the boundary (f(n) = Z_n) stay decidable despite
// the exp/log round trip of log-space storage.
inline std::optional<bool> count_ge_speed(const LogReal& count, const LogReal& log_speed) {
  double lz = count.log();         // -inf when zero, +inf when saturated
  double lf = log_speed.linear();  // +inf when the speed overflowed
  if (std::isinf(lz) || std::isinf(lf)) {
    if (std::isinf(lz) && lz > 0 && std::isinf(lf) && lf > 0) return std::nullopt;
    return lz >= lf;
  }
  double slack = 4e-16 * std::max({std::abs(lz), std::abs(lf), 1.0});
  return lz >= lf - slack;
}

inline std::optional<bool> speed_ge_count(const LogReal& log_speed, const LogReal& count) {
  double lz = count.log();
  double lf = log_speed.linear();
  if (std::isinf(lz) || std::isinf(lf)) {
    if (std::isinf(lz) && lz > 0 && std::isinf(lf) && lf > 0) return std::nullopt;
    return lf >= lz;
  }
  double slack = 4e-16 * std::max({std::abs(lz), std::abs(lf), 1.0});
  return lf >= lz - slack;
}

}  // namespace detail

// Fraction of reps whose generation sizes satisfy Z_{floor(n/a)} <= f(n) <= Z_{b n}
// for every n = 1..depth. Comparisons outside representable range are skipped
// (counted, never treated as violations).
inline SandwichResult speed_sandwich(const OffspringDist& z, const SpeedSeq& f, unsigned a,
                                     unsigned b, const SimConfig& cfg) {
  cfg.validate();
  if (a < 1 || b < 1)
    throw std::invalid_argument("speed_sandwich: a and b must be >= 1");
  if (f.size() <= cfg.depth)
    throw std::invalid_argument("speed_sandwich: speed table shorter than depth");
  std::size_t grow_depth = cfg.depth * b;

  SandwichResult out;
  out.per_rep.resize(cfg.reps);
  std::vector<char> aggregate_flags(cfg.reps, 0);
  detail::parallel_reps(cfg.reps, cfg.threads, [&](std::size_t rep) {
    RepGrowth g;
    std::uint32_t attempt = 0;
    for (;; ++attempt) {
      Rng rng = detail::rep_rng(cfg.seed, StreamTag::Sandwich, rep, attempt);
      g = detail::grow_rep(z, grow_depth, cfg.offspring_cap, rng);
      if (!g.extinct || cfg.conditioning == SimConfig::Conditioning::None ||
          attempt + 1 >= detail::kMaxAttempts)
        break;
    }
    aggregate_flags[rep] = g.exact ? 0 : 1;
    SandwichRep r;
    r.extinct = g.extinct;
    r.restarts = attempt;
    for (std::size_t n = 1; n <= cfg.depth; ++n) {
      auto low = detail::size_at(g, n / a);
      auto high = detail::size_at(g, n * b);
      std::optional<bool> lower_ok =
          low ? detail::speed_ge_count(f.log_value[n], *low) : std::nullopt;
      std::optional<bool> upper_ok =
          high ? detail::count_ge_speed(*high, f.log_value[n]) : std::nullopt;
      for (const auto& ok : {lower_ok, upper_ok}) {
        if (!ok) {
          ++r.skipped;
        } else {
          ++r.checked;
          if (!*ok) r.holds = false;
        }
      }
    }
    out.per_rep[rep] = r;
  });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < cfg.reps; ++i) {
    hits += out.per_rep[i].holds ? 1 : 0;
    out.total_skipped += out.per_rep[i].skipped;
    out.any_aggregate |= aggregate_flags[i] != 0;
  }
  out.probability = double(hits) / double(cfg.reps);
  return out;
}

// A hand-rolled speed table (entries are log f(n), as plain doubles).
inline SpeedSeq make_speed_seq(const std::vector<double>& log_values) {
  SpeedSeq f;
  f.log_value.reserve(log_values.size());
  for (double lv : log_values) f.log_value.push_back(LogReal::from_linear(lv));
  return f;
}

// ---------------------------------------------------------------------------
// Path-weight spectrum
// ---------------------------------------------------------------------------

struct SpectrumRep {
  std::vector<double> completions;  // all depth-level path weights <= a + eps_win
  bool hit = false;                 // some completion lands in [a, a + eps_win]
  double min_weight = std::numeric_limits<double>::infinity();
  bool budget_exhausted = false;
  std::uint64_t nodes = 0;
};

struct SpectrumResult {
  double hit_frequency = 0;
  std::uint64_t reps_with_paths = 0;
  std::vector<SpectrumRep> per_rep;
};

// Enumerates every target-depth path of weight <= a + eps_win (best-first with
// pruning, exhaustive on that prefix tree) and reports how often some path
// weight lands in the window [a, a + eps_win].
inline SpectrumResult path_weight_spectrum(const OffspringDist& z, const WeightDist& w, double a,
                                           double eps_win, const SimConfig& cfg) {
  cfg.validate();
  if (!(a >= 0) || !(eps_win >= 0))
    throw std::invalid_argument("path_weight_spectrum: window must be nonnegative");
  const double bound = a + eps_win;

  SpectrumResult out;
  out.per_rep.resize(cfg.reps);
  detail::parallel_reps(cfg.reps, cfg.threads, [&](std::size_t rep) {
    Rng rng = detail::rep_rng(cfg.seed, StreamTag::Spectrum, rep, 0);
    LazySource src(z, w, rng, cfg.offspring_cap);
    auto r = detail::best_first_search(src, cfg.depth, cfg.node_budget, bound, true);
    SpectrumRep sr;
    sr.completions = std::move(r.completions);
    sr.budget_exhausted = r.budget_exhausted;
    sr.nodes = r.nodes;
    for (double c : sr.completions) {
      sr.min_weight = std::min(sr.min_weight, c);
      if (c >= a) sr.hit = true;
    }
    out.per_rep[rep] = std::move(sr);
  });
  std::size_t hits = 0;
  for (const auto& r : out.per_rep) {
    hits += r.hit ? 1 : 0;
    out.reps_with_paths += r.completions.empty() ? 0 : 1;
  }
  out.hit_frequency = double(hits) / double(cfg.reps);
  return out;
}

}  // namespace brw

#endif  // BRW_GWSIM_HPP
