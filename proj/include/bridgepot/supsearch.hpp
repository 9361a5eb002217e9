#pragma once

// Supremum estimation over (t, x, y) domains and divergence-trend detection.
// Everything here is evidence-grade, not proof: suprema are taken over
// truncated boxes with log-radius probing, and "divergent" is a fitted trend
// on a geometric ladder, never a raw infinity from quadrature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bridgepot/functionals.hpp"

namespace bridgepot {

enum class Verdict { Bounded, DivergentTrend, Inconclusive };

inline const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Bounded: return "bounded";
    case Verdict::DivergentTrend: return "divergent_trend";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "?";
}

enum class GrowthLaw { Constant, Logarithmic, Power };

inline const char* growth_law_name(GrowthLaw g) {
  switch (g) {
    case GrowthLaw::Constant: return "constant";
    case GrowthLaw::Logarithmic: return "logarithmic";
    case GrowthLaw::Power: return "power";
  }
  return "?";
}

struct TrendPoint {
  double scale = 0.0;
  double value = 0.0;
};

struct Trend {
  std::vector<TrendPoint> ladder;
  GrowthLaw law = GrowthLaw::Constant;
  double exponent = 0.0;  // value ~ scale^exponent when law == Power
  Verdict verdict = Verdict::Inconclusive;
  long failures = 0;
  long probes = 0;
};

// Fit the increment pattern of a geometric ladder. The rules, in order:
// too many failures or a non-monotone ladder -> inconclusive; a flat ladder
// or increments that fall below 10% of the first one -> bounded; increments
// shrinking at a steady geometric rate -> bounded (the remaining tail sums
// to a finite limit); constant increments per rung -> logarithmic growth;
// geometrically growing increments -> power growth. Divergent verdicts need
// at least 4 usable increments, and the ratio fits use only the tail of the
// ladder: the early rungs carry the transient, the tail the asymptotics.
inline Trend classify_trend(std::vector<TrendPoint> ladder, long failures, long probes) {
  Trend tr;
  tr.ladder = std::move(ladder);
  tr.failures = failures;
  tr.probes = probes;
  if (probes > 0 && 5 * failures > probes) {
    tr.verdict = Verdict::Inconclusive;
    return tr;
  }
  const size_t n = tr.ladder.size();
  if (n < 2) {
    tr.verdict = Verdict::Bounded;
    return tr;
  }

  double vmax = 0.0;
  for (const auto& p : tr.ladder) vmax = std::max(vmax, std::abs(p.value));
  const double flat_tol = 1e-3 * vmax + 1e-12;

  std::vector<double> inc;
  inc.reserve(n - 1);
  for (size_t k = 0; k + 1 < n; ++k) {
    const double d = tr.ladder[k + 1].value - tr.ladder[k].value;
    if (d < -flat_tol) {
      tr.verdict = Verdict::Inconclusive;
      return tr;
    }
    inc.push_back(d);
  }

  bool flat = true;
  for (double d : inc) flat = flat && std::abs(d) <= flat_tol;
  if (flat || inc.back() <= 0.1 * std::max(inc.front(), flat_tol)) {
    tr.law = GrowthLaw::Constant;
    tr.verdict = Verdict::Bounded;
    return tr;
  }

  // per-rung growth of the increments, normalized to one doubling of scale
  const double log_g =
      std::log(tr.ladder[1].scale / tr.ladder[0].scale);  // uniform by construction
  std::vector<double> logr;
  for (size_t k = 0; k + 1 < inc.size(); ++k)
    if (inc[k] > flat_tol && inc[k + 1] > flat_tol) logr.push_back(std::log(inc[k + 1] / inc[k]));
  if (logr.size() > 6) logr.erase(logr.begin(), logr.end() - 6);
  if (logr.size() < 3 || inc.size() < 4 || !(log_g > 0.0)) {
    tr.verdict = Verdict::Inconclusive;
    return tr;
  }
  double mean = 0.0, top = -kInf;
  for (double r : logr) {
    mean += r;
    top = std::max(top, r);
  }
  mean /= static_cast<double>(logr.size());
  double spread = 0.0;
  for (double r : logr) spread = std::max(spread, std::abs(r - mean));
  const double norm = std::log(2.0) / log_g;
  const double per_doubling = mean * norm;

  bool decel = logr.size() >= 3;
  for (size_t k = 0; k + 1 < logr.size(); ++k) decel = decel && logr[k + 1] <= logr[k] + 1e-3;
  if ((per_doubling <= -0.25 && top * norm <= std::log(0.95)) ||
      (decel && logr.back() * norm <= std::log(0.85))) {
    // either every tail ratio sits well below one, or the ratios themselves
    // keep falling and have passed below 0.85 per doubling; both ways the
    // remaining increments are summable. A log-growth ladder shows neither:
    // its ratios hold flat at one.
    tr.law = GrowthLaw::Constant;
    tr.verdict = Verdict::Bounded;
    return tr;
  }
  // Both log growth and power growth hold the increment ratio flat; they
  // differ in where: log growth at 1 (zero log-ratio), power t^a at 2^a per
  // doubling. Split at a = 0.29.
  if (std::abs(per_doubling) < 0.2 && spread * norm < 0.6) {
    tr.law = GrowthLaw::Logarithmic;
    tr.verdict = Verdict::DivergentTrend;
    return tr;
  }
  if (per_doubling >= 0.2) {
    tr.law = GrowthLaw::Power;
    tr.exponent = mean / log_g;
    tr.verdict = Verdict::DivergentTrend;
    return tr;
  }
  tr.verdict = Verdict::Inconclusive;
  return tr;
}

// Evaluate a scalar functional on a geometric ladder and classify the trend.
struct LadderSpec {
  double scale0 = 1.0;
  double factor = 2.0;
  int n = 8;
};

inline Trend divergence_probe(const std::function<double(double)>& f, const LadderSpec& spec) {
  if (spec.n < 5) throw Error("divergence_probe: at least 5 ladder scales required");
  if (!(spec.scale0 > 0.0) || !(spec.factor > 1.0))
    throw Error("divergence_probe: positive scale0 and factor > 1 required");
  std::vector<TrendPoint> ladder;
  long failures = 0;
  double s = spec.scale0;
  for (int k = 0; k < spec.n; ++k, s *= spec.factor) {
    double v = kNaN;
    try {
      v = f(s);
    } catch (const std::exception&) {
    }
    if (std::isfinite(v))
      ladder.push_back({s, v});
    else
      ++failures;
  }
  return classify_trend(std::move(ladder), failures, spec.n);
}

// ---------------------------------------------------------------------------
// sup search
// ---------------------------------------------------------------------------

struct SearchDomain {
  enum class TimeMode { Range, Fixed, Free };
  TimeMode time_mode = TimeMode::Range;
  double t_min = 1e-3, t_max = 1e3;  // Range: log grid between these
  double t_fixed = 1.0;
  int dim = 0;
  bool with_y = true;      // binary functional (t,x,y) vs unary (t,x)
  double half_width = 8.0; // box [-hw, hw] per active coordinate
  bool planar = false;     // restrict x and y to span(e1, e2)
  bool swap_symmetric = false;      // objective invariant under x <-> y
  std::vector<int> unbounded_dirs;  // axes probed at log radii beyond the box
};

struct SearchConfig {
  std::uint64_t seed = 1;
  int n_starts = 8;
  int max_iterations = 120;  // simplex iterations per start
  double tolerance = 1e-4;
  double radius_probe_max = 1024.0;
  int threads = 1;
};

using SupHandle = std::function<double(double t, const Point& x, const Point& y)>;

struct SearchResult {
  double sup_estimate = -kInf;
  double arg_t = 0.0;
  Point arg_x, arg_y;
  Verdict verdict = Verdict::Inconclusive;
  Trend trend;
  int n_starts = 0;
  std::uint64_t seed = 0;
  long evaluations = 0;
  long failures = 0;
};

namespace detail_sup {

inline constexpr int kPrimes[13] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};

inline double radical_inverse(unsigned long long i, int base) {
  double f = 1.0, r = 0.0;
  while (i > 0) {
    f /= base;
    r += f * static_cast<double>(i % static_cast<unsigned long long>(base));
    i /= static_cast<unsigned long long>(base);
  }
  return r;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// start i, coordinate j: Halton point rotated by a seed-dependent shift.
// For a fixed seed the sequence is a fixed list, so growing n_starts keeps
// the earlier starts (the refinement-monotonicity contract).
inline double start_coord(std::uint64_t seed, int i, int j) {
  const double h = radical_inverse(static_cast<unsigned long long>(i) + 1,
                                   kPrimes[j % 13]);
  const double s = static_cast<double>(splitmix64(seed ^ (0x51ed2701ull * (j + 1)))) * 0x1p-64;
  const double u = h + s;
  return u - std::floor(u);
}

// Layout of the search vector: [log t | x coords | y coords], with x and y
// reduced to the first one or two axes when the domain is planar.
struct ParamMap {
  const SearchDomain* dom = nullptr;
  bool has_t = false;
  int na = 0;  // active coordinates per point
  int k = 0;   // total parameters

  explicit ParamMap(const SearchDomain& d) : dom(&d) {
    has_t = d.time_mode == SearchDomain::TimeMode::Range;
    na = d.planar ? std::min(d.dim, 2) : d.dim;
    k = (has_t ? 1 : 0) + na + (d.with_y ? na : 0);
  }

  double lo(int j) const {
    if (has_t && j == 0) return std::log(dom->t_min);
    return -dom->half_width;
  }
  double hi(int j) const {
    if (has_t && j == 0) return std::log(dom->t_max);
    return dom->half_width;
  }

  void clamp(std::vector<double>& p) const {
    for (int j = 0; j < k; ++j) p[j] = std::min(hi(j), std::max(lo(j), p[j]));
  }

  double decode_t(const std::vector<double>& p) const {
    switch (dom->time_mode) {
      case SearchDomain::TimeMode::Range: return std::exp(p[0]);
      case SearchDomain::TimeMode::Fixed: return dom->t_fixed;
      case SearchDomain::TimeMode::Free: return 0.0;
    }
    return 0.0;
  }

  void decode(const std::vector<double>& p, double& t, Point& x, Point& y) const {
    t = decode_t(p);
    const int off = has_t ? 1 : 0;
    x = Point::zero(dom->dim);
    for (int j = 0; j < na; ++j) x[j] = p[off + j];
    y = Point::zero(dom->dim);
    if (dom->with_y) {
      for (int j = 0; j < na; ++j) y[j] = p[off + na + j];
      if (dom->swap_symmetric && lex_less(y, x)) std::swap(x, y);
    }
  }

  static bool lex_less(const Point& a, const Point& b) {
    for (int i = 0; i < a.dim(); ++i) {
      if (a[i] < b[i]) return true;
      if (a[i] > b[i]) return false;
    }
    return false;
  }
};

// One (value, argument) record; merging keeps the max with a lexicographic
// tie-break so concurrent evaluation stays deterministic.
struct Best {
  double v = -kInf;
  double t = 0.0;
  Point x, y;

  void offer(double val, double tt, const Point& xx, const Point& yy) {
    if (!std::isfinite(val)) return;
    if (val > v || (val == v && arg_less(tt, xx, yy))) {
      v = val;
      t = tt;
      x = xx;
      y = yy;
    }
  }
  void merge(const Best& o) {
    if (o.v > -kInf) offer(o.v, o.t, o.x, o.y);
  }

 private:
  bool arg_less(double tt, const Point& xx, const Point& yy) const {
    if (tt != t) return tt < t;
    if (ParamMap::lex_less(xx, x)) return true;
    if (ParamMap::lex_less(x, xx)) return false;
    return ParamMap::lex_less(yy, y);
  }
};

struct RunState {
  Best best;
  long evals = 0;
  long fails = 0;
};

inline double guarded_eval(const SupHandle& f, const ParamMap& pm, const std::vector<double>& p,
                           RunState& st) {
  double t;
  Point x, y;
  pm.decode(p, t, x, y);
  ++st.evals;
  double v = kNaN;
  try {
    v = f(t, x, y);
  } catch (const std::exception&) {
  }
  if (!std::isfinite(v)) {
    ++st.fails;
    return -kInf;
  }
  st.best.offer(v, t, x, y);
  return v;
}

// Nelder-Mead ascent inside the clamped box. Failed evaluations sink to
// -inf, which the ordering pushes out of the simplex.
inline void nelder_mead(const SupHandle& f, const ParamMap& pm, std::vector<double> p0,
                        int max_iter, double tol, RunState& st) {
  const int k = pm.k;
  pm.clamp(p0);
  std::vector<std::vector<double>> pts(static_cast<size_t>(k) + 1, p0);
  std::vector<double> vals(static_cast<size_t>(k) + 1);
  for (int j = 0; j < k; ++j) {
    double step = 0.25 * (pm.hi(j) - pm.lo(j));
    if (p0[j] + step > pm.hi(j)) step = -step;
    pts[static_cast<size_t>(j) + 1][j] += step;
  }
  for (size_t i = 0; i < pts.size(); ++i) vals[i] = guarded_eval(f, pm, pts[i], st);

  auto order = [&] {
    std::vector<size_t> idx(pts.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return vals[a] > vals[b]; });
    std::vector<std::vector<double>> np;
    std::vector<double> nv;
    for (size_t i : idx) {
      np.push_back(pts[i]);
      nv.push_back(vals[i]);
    }
    pts.swap(np);
    vals.swap(nv);
  };

  for (int it = 0; it < max_iter; ++it) {
    order();
    if (std::isfinite(vals.front()) && std::isfinite(vals.back()) &&
        vals.front() - vals.back() <= tol * (std::abs(vals.front()) + 1e-9))
      break;

    std::vector<double> c(static_cast<size_t>(k), 0.0);
    for (size_t i = 0; i + 1 < pts.size(); ++i)
      for (int j = 0; j < k; ++j) c[static_cast<size_t>(j)] += pts[i][j];
    for (int j = 0; j < k; ++j) c[static_cast<size_t>(j)] /= static_cast<double>(pts.size() - 1);

    auto blend = [&](double w) {
      std::vector<double> p(static_cast<size_t>(k));
      for (int j = 0; j < k; ++j)
        p[static_cast<size_t>(j)] = c[static_cast<size_t>(j)] +
                                    w * (c[static_cast<size_t>(j)] - pts.back()[j]);
      pm.clamp(p);
      return p;
    };

    auto pr = blend(1.0);
    const double vr = guarded_eval(f, pm, pr, st);
    if (vr > vals.front()) {
      auto pe = blend(2.0);
      const double ve = guarded_eval(f, pm, pe, st);
      if (ve > vr) {
        pts.back() = pe;
        vals.back() = ve;
      } else {
        pts.back() = pr;
        vals.back() = vr;
      }
      continue;
    }
    if (vr > vals[vals.size() - 2]) {
      pts.back() = pr;
      vals.back() = vr;
      continue;
    }
    auto pc = blend(-0.5);
    const double vc = guarded_eval(f, pm, pc, st);
    if (vc > vals.back()) {
      pts.back() = pc;
      vals.back() = vc;
      continue;
    }
    for (size_t i = 1; i < pts.size(); ++i) {
      for (int j = 0; j < k; ++j) pts[i][j] = pts.front()[j] + 0.5 * (pts[i][j] - pts.front()[j]);
      vals[i] = guarded_eval(f, pm, pts[i], st);
    }
  }
  order();
}

}  // namespace detail_sup

inline SearchResult sup_search(const SupHandle& f, const SearchDomain& dom,
                               const SearchConfig& cfg = {}) {
  if (dom.dim < 1) throw Error("sup_search: domain dimension required");
  if (dom.time_mode == SearchDomain::TimeMode::Range && !(dom.t_min > 0.0 && dom.t_max > dom.t_min))
    throw Error("sup_search: need 0 < t_min < t_max");
  if (cfg.n_starts < 1) throw Error("sup_search: n_starts >= 1 required");

  const detail_sup::ParamMap pm(dom);
  detail_sup::RunState all;
  // Ladder pools hold one structured family each: the time sweep at the best
  // geometry and the axis radius probes.  Optimizer iterates stay out -- a
  // stray high value at an unaligned scale dents the increments and spoils
  // the trend read, while the sup estimate already absorbs every evaluation.
  std::vector<std::pair<double, double>> t_cands;      // (t, value)
  std::vector<std::pair<double, double>> r_cands;      // (radius, value)
  const bool ranged = dom.time_mode == SearchDomain::TimeMode::Range;

  // multistart simplex ascent; start 0 sits at the box center
  const int threads = std::max(1, cfg.threads);
  std::vector<detail_sup::RunState> states(static_cast<size_t>(cfg.n_starts));
  auto run_start = [&](int i) {
    std::vector<double> p0(static_cast<size_t>(pm.k), 0.0);
    if (i > 0)
      for (int j = 0; j < pm.k; ++j)
        p0[static_cast<size_t>(j)] =
            pm.lo(j) + (pm.hi(j) - pm.lo(j)) * detail_sup::start_coord(cfg.seed, i - 1, j);
    else if (pm.has_t)
      p0[0] = 0.5 * (pm.lo(0) + pm.hi(0));
    detail_sup::nelder_mead(f, pm, std::move(p0), cfg.max_iterations, cfg.tolerance,
                            states[static_cast<size_t>(i)]);
  };
  if (threads == 1) {
    for (int i = 0; i < cfg.n_starts; ++i) run_start(i);
  } else {
    std::vector<std::future<void>> fut;
    for (int c = 0; c < threads; ++c)
      fut.push_back(std::async(std::launch::async, [&, c] {
        for (int i = c; i < cfg.n_starts; i += threads) run_start(i);
      }));
    for (auto& fu : fut) fu.get();
  }
  for (int i = 0; i < cfg.n_starts; ++i) {
    all.best.merge(states[static_cast<size_t>(i)].best);
    all.evals += states[static_cast<size_t>(i)].evals;
    all.fails += states[static_cast<size_t>(i)].fails;
  }

  // time sweep at the best geometry found: doubling rungs across the range
  if (ranged && all.best.v > -kInf) {
    for (double t = dom.t_min; t <= dom.t_max * (1.0 + 1e-12); t *= 2.0) {
      ++all.evals;
      double v = kNaN;
      try {
        v = f(t, all.best.x, all.best.y);
      } catch (const std::exception&) {
      }
      if (std::isfinite(v)) {
        t_cands.push_back({t, v});
        all.best.offer(v, t, all.best.x, all.best.y);
      } else {
        ++all.fails;
      }
    }
  }

  // log-radius probes along declared unbounded axes
  if (!dom.unbounded_dirs.empty()) {
    std::vector<double> t_probe;
    if (ranged) {
      t_probe = {all.best.v > -kInf ? all.best.t : std::sqrt(dom.t_min * dom.t_max), dom.t_max};
    } else if (dom.time_mode == SearchDomain::TimeMode::Fixed) {
      t_probe = {dom.t_fixed};
    } else {
      t_probe = {0.0};
    }
    for (int dir : dom.unbounded_dirs) {
      for (double R = 2.0 * dom.half_width; R <= cfg.radius_probe_max * (1.0 + 1e-12); R *= 2.0) {
        for (double sgn : {1.0, -1.0}) {
          Point x = Point::zero(dom.dim);
          x[dir] = sgn * R;
          std::vector<Point> ys;
          if (dom.with_y) {
            ys = {x, Point::zero(dom.dim)};
          } else {
            ys = {Point::zero(dom.dim)};
          }
          for (const Point& y : ys) {
            for (double tp : t_probe) {
              ++all.evals;
              double v = kNaN;
              try {
                v = f(tp, x, y);
              } catch (const std::exception&) {
              }
              if (std::isfinite(v)) {
                r_cands.push_back({R, v});
                all.best.offer(v, tp, x, y);
              } else {
                ++all.fails;
              }
            }
          }
        }
      }
    }
  }

  // assemble rungs as running maxima over the candidate pools
  auto rungs = [](const std::vector<std::pair<double, double>>& cands, double s0, double s1) {
    std::vector<TrendPoint> out;
    double run = -kInf;
    for (double s = s0; s <= s1 * (1.0 + 1e-12); s *= 2.0) {
      for (const auto& c : cands)
        if (c.first <= s * (1.0 + 1e-12)) run = std::max(run, c.second);
      if (run > -kInf) out.push_back({s, run});
    }
    return out;
  };

  SearchResult res;
  res.n_starts = cfg.n_starts;
  res.seed = cfg.seed;
  res.evaluations = all.evals;
  res.failures = all.fails;
  res.sup_estimate = all.best.v;
  res.arg_t = all.best.t;
  res.arg_x = all.best.x;
  res.arg_y = all.best.y;

  Trend t_trend, r_trend;
  t_trend.verdict = r_trend.verdict = Verdict::Bounded;
  if (ranged)
    t_trend = classify_trend(rungs(t_cands, dom.t_min, dom.t_max), all.fails, all.evals);
  if (!dom.unbounded_dirs.empty())
    r_trend = classify_trend(rungs(r_cands, dom.half_width, cfg.radius_probe_max), all.fails,
                             all.evals);

  auto rank = [](Verdict v) {
    return v == Verdict::DivergentTrend ? 2 : (v == Verdict::Inconclusive ? 1 : 0);
  };
  if (rank(r_trend.verdict) != rank(t_trend.verdict))
    res.trend = rank(r_trend.verdict) > rank(t_trend.verdict) ? r_trend : t_trend;
  else
    res.trend = r_trend.ladder.size() > t_trend.ladder.size() ? r_trend : t_trend;
  res.verdict = res.trend.verdict;
  if (all.evals > 0 && 5 * all.fails > all.evals) res.verdict = Verdict::Inconclusive;
  if (!(res.sup_estimate > -kInf)) res.verdict = Verdict::Inconclusive;
  return res;
}

// Default search domain for a potential: planar when the geometry engines
// can exploit it exactly (radial) or by restriction (axis-symmetric), with
// radius probing along e1 when the support is unbounded.
inline SearchDomain make_default_domain(const PotentialSpec& V,
                                        SearchDomain::TimeMode mode = SearchDomain::TimeMode::Range,
                                        bool with_y = true) {
  SearchDomain d;
  d.time_mode = mode;
  d.dim = V.dim;
  d.with_y = with_y;
  d.planar = detail::is_radial(V) || detail_fn::is_axisym_e1(V);
  if (!std::isfinite(detail::support_half_width(V))) d.unbounded_dirs = {0};
  return d;
}

inline nlohmann::json to_json(const SearchResult& r) {
  nlohmann::json ladder = nlohmann::json::array();
  for (const auto& p : r.trend.ladder) ladder.push_back({p.scale, p.value});
  return {
      {"sup_estimate", r.sup_estimate},
      {"arg", {{"t", r.arg_t}, {"x", r.arg_x.to_vector()}, {"y", r.arg_y.to_vector()}}},
      {"verdict", verdict_name(r.verdict)},
      {"trend",
       {{"law", growth_law_name(r.trend.law)},
        {"exponent", r.trend.exponent},
        {"ladder", ladder},
        {"failures", r.trend.failures},
        {"probes", r.trend.probes}}},
      {"n_starts", r.n_starts},
      {"seed", r.seed},
      {"evaluations", r.evaluations},
      {"failures", r.failures},
  };
}

// ---------------------------------------------------------------------------
// the named suprema
// ---------------------------------------------------------------------------

// sup over (x, y) of S(V, t, x, y) at fixed t.
inline double f_of_t(const PotentialSpec& V, double t, const SearchConfig& sc = {},
                     const QuadratureConfig& qc = {}) {
  if (!(t > 0.0)) throw Error("f_of_t: t must be positive");
  SearchDomain dom = make_default_domain(V, SearchDomain::TimeMode::Fixed, true);
  dom.t_fixed = t;
  dom.swap_symmetric = true;
  const SupHandle h = [&V, &qc](double tt, const Point& x, const Point& y) {
    return S_bridge(V, tt, x, y, qc).value;
  };
  return sup_search(h, dom, sc).sup_estimate;
}

// Running max of f over the canonical doubling grid up to and including t.
inline double F_of_t(const PotentialSpec& V, double t, const SearchConfig& sc = {},
                     const QuadratureConfig& qc = {}) {
  if (!(t > 0.0)) throw Error("F_of_t: t must be positive");
  double best = f_of_t(V, t, sc, qc);
  for (double s = 1e-3; s < t; s *= 2.0) best = std::max(best, f_of_t(V, s, sc, qc));
  return best;
}

// sup over (y, w) of the shifted-kernel integral; the arg pair rides the
// (x, y) slots of the search domain. Planar restriction is exact for radial
// potentials (rotate the pair into the plane) and a domain restriction
// otherwise; potentials without an axis reduction only evaluate at w = 0.
inline FunctionalResult e_star(const PotentialSpec& V, double lambda,
                               const SearchConfig& sc = {}, const QuadratureConfig& qc = {}) {
  if (!(lambda >= 0.0)) throw Error("e_star: lambda must be nonnegative");
  const bool reducible = detail::is_radial(V) || detail_fn::is_axisym_e1(V);
  SearchDomain dom = make_default_domain(V, SearchDomain::TimeMode::Free, reducible);
  dom.planar = reducible;
  const SupHandle h = [&](double, const Point& y, const Point& w) {
    return e_star_integral(V, y, dom.with_y ? w : Point::zero(V.dim), lambda, qc).value;
  };
  const SearchResult r = sup_search(h, dom, sc);
  if (!(r.sup_estimate > -kInf)) throw Error("e_star: no successful evaluation");
  FunctionalResult out =
      e_star_integral(V, r.arg_x, dom.with_y ? r.arg_y : Point::zero(V.dim), lambda, qc);
  out.value = std::max(out.value, r.sup_estimate);
  out.converged = out.converged && r.verdict != Verdict::Inconclusive;
  return out;
}

}  // namespace bridgepot
