#pragma once

// Monte Carlo estimators over Brownian bridges: occupation integrals of a
// potential along bridge paths, Feynman-Kac kernel ratios, low-order
// perturbation terms, and the bound certificates built from them.
//
// All randomness is counter-based (Philox 4x32-10). A sample's substream is
// keyed by its index, and every normal inside a path is keyed by its absolute
// dyadic (level, position), so estimates are pure functions of (seed, config):
// independent of evaluation order, worker count, or whether neighbouring
// intervals got refined. Doubling n_time_steps reuses all coarse-level
// normals, which couples the two discretizations path by path.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "bridgepot/common.hpp"
#include "bridgepot/potentials.hpp"

namespace bridgepot {

enum class TimeSampling { Uniform, Stratified };

struct McConfig {
  std::uint64_t seed = 1;
  long n_samples = 100000;
  int n_time_steps = 256;  // dyadic path resolution, power of two
  TimeSampling time_sampling = TimeSampling::Stratified;
};

inline void validate(const McConfig& cfg) {
  if (cfg.n_samples < 100) throw Error("mc config: n_samples must be at least 100");
  if (cfg.n_time_steps < 2 || (cfg.n_time_steps & (cfg.n_time_steps - 1)) != 0)
    throw Error("mc config: n_time_steps must be a power of two, at least 2");
  if (cfg.n_time_steps > (1 << 20)) throw Error("mc config: n_time_steps above 2^20 is not supported");
}

inline std::string fingerprint(const McConfig& cfg) {
  std::ostringstream os;
  os << "seed=" << cfg.seed << ";samples=" << cfg.n_samples << ";steps=" << cfg.n_time_steps
     << ";time=" << (cfg.time_sampling == TimeSampling::Uniform ? "uniform" : "stratified");
  return os.str();
}

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n_samples)
  long n_samples = 0;
  std::string config_fingerprint;
};

namespace rng {

inline constexpr std::uint32_t kWeylA = 0x9E3779B9u;
inline constexpr std::uint32_t kWeylB = 0xBB67AE85u;
inline constexpr std::uint32_t kMultA = 0xD2511F53u;
inline constexpr std::uint32_t kMultB = 0xCD9E8D57u;

struct Block {
  std::uint32_t w[4];
};

inline Block philox(std::uint64_t key, std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                    std::uint32_t c3) {
  std::uint32_t x0 = c0, x1 = c1, x2 = c2, x3 = c3;
  std::uint32_t k0 = static_cast<std::uint32_t>(key);
  std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
  for (int round = 0; round < 10; ++round) {
    if (round != 0) {
      k0 += kWeylA;
      k1 += kWeylB;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMultA) * x0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMultB) * x2;
    const std::uint32_t y0 = static_cast<std::uint32_t>(p1 >> 32) ^ x1 ^ k0;
    const std::uint32_t y1 = static_cast<std::uint32_t>(p1);
    const std::uint32_t y2 = static_cast<std::uint32_t>(p0 >> 32) ^ x3 ^ k1;
    const std::uint32_t y3 = static_cast<std::uint32_t>(p0);
    x0 = y0;
    x1 = y1;
    x2 = y2;
    x3 = y3;
  }
  return Block{{x0, x1, x2, x3}};
}

// 53-bit uniform strictly inside (0,1), safe under log().
inline double open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t v = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(v) + 0.5) * 0x1.0p-53;
}

// Third counter word: purpose tag in the top nibble, dyadic node id below.
enum Purpose : std::uint32_t {
  kPath = 1u << 28,   // bridge bisection midpoints
  kPoint = 2u << 28,  // single bridge-point draws
  kTime = 3u << 28,   // time-variable uniforms
};

// One block gives two uniforms, hence one Box-Muller pair. Pair p covers
// coordinates 2p and 2p+1 of the node, so coordinates are addressable without
// generating their predecessors.
inline void normal_pair(std::uint64_t seed, std::uint64_t sample, std::uint32_t node_word,
                        std::uint32_t pair, double* z0, double* z1) {
  const Block b = philox(seed, static_cast<std::uint32_t>(sample),
                         static_cast<std::uint32_t>(sample >> 32), node_word, pair);
  const double u1 = open_unit(b.w[0], b.w[1]);
  const double u2 = open_unit(b.w[2], b.w[3]);
  const double r = std::sqrt(-2.0 * std::log(u1));
  *z0 = r * std::cos(2.0 * kPi * u2);
  *z1 = r * std::sin(2.0 * kPi * u2);
}

inline void fill_normals(std::uint64_t seed, std::uint64_t sample, std::uint32_t node_word, int dim,
                         double* out) {
  for (int p = 0; 2 * p < dim; ++p) {
    double z0 = 0.0, z1 = 0.0;
    normal_pair(seed, sample, node_word, static_cast<std::uint32_t>(p), &z0, &z1);
    out[2 * p] = z0;
    if (2 * p + 1 < dim) out[2 * p + 1] = z1;
  }
}

inline double uniform(std::uint64_t seed, std::uint64_t sample, std::uint32_t node_word) {
  const Block b = philox(seed, static_cast<std::uint32_t>(sample),
                         static_cast<std::uint32_t>(sample >> 32), node_word, 0);
  return open_unit(b.w[0], b.w[1]);
}

}  // namespace rng

// Substream handle for a single draw: (seed, sample index).
struct SampleStream {
  std::uint64_t seed = 1;
  std::uint64_t sample = 0;
};

// One draw from the bridge pinned at x (time 0) and y (time t), observed at
// time s: Gaussian with mean x + (s/t)(y-x) and per-coordinate variance
// 2 s (t-s) / t.
inline Point sample_bridge_point(double s, double t, const Point& x, const Point& y,
                                 const SampleStream& stream) {
  if (!(t > 0.0)) throw Error("sample_bridge_point: t must be positive");
  if (!(s > 0.0) || !(s < t)) throw Error("sample_bridge_point: need 0 < s < t");
  if (x.dim() != y.dim()) throw Error("sample_bridge_point: dimension mismatch");
  const int d = x.dim();
  const double u = s / t;
  const double sd = std::sqrt(2.0 * s * (t - s) / t);
  double z[kMaxDim];
  rng::fill_normals(stream.seed, stream.sample, rng::kPoint, d, z);
  Point p(d);
  for (int i = 0; i < d; ++i) p[i] = x[i] + u * (y[i] - x[i]) + sd * z[i];
  return p;
}

namespace detail_mc {

struct Welford {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  double std_error() const {
    if (n < 2) return 0.0;
    const double var = m2 / static_cast<double>(n - 1);
    return std::sqrt(var / static_cast<double>(n));
  }
};

inline McEstimate finish(const Welford& w, const McConfig& cfg) {
  McEstimate e;
  e.mean = w.mean;
  e.std_error = w.std_error();
  e.n_samples = w.n;
  e.config_fingerprint = fingerprint(cfg);
  return e;
}

// |V| at z, nudging off the (measure-zero) exact singular locus if hit.
inline double abs_value_at(const PotentialSpec& V, Point z) {
  try {
    return std::abs(evaluate(V, z));
  } catch (const std::domain_error&) {
    z[0] += 1e-12 * (1.0 + std::abs(z[0]));
    return std::abs(evaluate(V, z));
  }
}

// Spheres where V jumps or blows up, used to decide local path refinement.
struct SingularGeometry {
  std::vector<double> radii;
  bool origin = false;
  bool any() const { return origin || !radii.empty(); }
  double dist(const Point& z) const {
    const double r = z.norm();
    double best = std::numeric_limits<double>::infinity();
    if (origin) best = r;
    for (double s : radii) best = std::min(best, std::abs(r - s));
    return best;
  }
};

inline SingularGeometry singular_geometry(const PotentialSpec& V) {
  SingularGeometry g;
  std::vector<double> radii;
  detail::collect_axis_splits(V, radii);
  for (double r : radii)
    if (r > 0.0 && std::isfinite(r)) g.radii.push_back(r);
  g.origin = detail::origin_power(V) > 0.0;
  return g;
}

// Occupation integral of V along one bridge path from x to y over [0, t].
//
// The path lives on the dyadic grid of cfg.n_time_steps intervals, built by
// midpoint bisection (conditional per-coordinate variance of the midpoint of
// an interval of length h is h/2 for this diffusion scaling). Intervals whose
// endpoints come within 4*sqrt(2 dt) of a jump or blowup sphere are refined
// in place to a 4x finer grid; the refinement normals sit at absolute dyadic
// levels L+1, L+2, so they are the same draws a globally finer path would use.
// The integral is a trapezoid rule on whichever grid each interval ended with.
class BridgePathIntegral {
 public:
  BridgePathIntegral(const PotentialSpec& V, double t, const Point& x, const Point& y,
                     const McConfig& cfg)
      : V_(V),
        geom_(singular_geometry(V)),
        t_(t),
        x_(x),
        y_(y),
        cfg_(cfg),
        n_(cfg.n_time_steps),
        d_(x.dim()) {
    levels_ = 0;
    while ((1 << levels_) < n_) ++levels_;
    nodes_.assign(static_cast<size_t>(n_) + 1, Point(d_));
    vals_.assign(static_cast<size_t>(n_) + 1, 0.0);
    mid_ = Point(d_);
    q1_ = Point(d_);
    q3_ = Point(d_);
  }

  double operator()(std::uint64_t sample) {
    nodes_[0] = x_;
    nodes_[static_cast<size_t>(n_)] = y_;
    for (int lev = 1; lev <= levels_; ++lev) {
      const int stride = n_ >> lev;
      const double sd = std::sqrt(t_ / static_cast<double>(1 << lev));
      const int count = 1 << (lev - 1);
      for (int k = 0; k < count; ++k) {
        const int mid = (2 * k + 1) * stride;
        bisect(sample, lev, k, nodes_[static_cast<size_t>(mid - stride)],
               nodes_[static_cast<size_t>(mid + stride)], sd, nodes_[static_cast<size_t>(mid)]);
      }
    }

    int first_bad = -1;
    for (int j = 0; j <= n_; ++j) {
      try {
        vals_[static_cast<size_t>(j)] = evaluate(V_, nodes_[static_cast<size_t>(j)]);
        if (first_bad >= 0) {
          for (int b = first_bad; b < j; ++b) vals_[static_cast<size_t>(b)] = vals_[static_cast<size_t>(j)];
          first_bad = -1;
        }
      } catch (const std::domain_error&) {
        // exact singular hit: take the nearest clean neighbour's value
        if (j > 0 && first_bad < 0) {
          vals_[static_cast<size_t>(j)] = vals_[static_cast<size_t>(j - 1)];
        } else if (first_bad < 0) {
          first_bad = j;
        }
      }
    }
    // first_bad can only survive the loop if every node hit the singular
    // locus exactly, which has probability zero; the zero placeholders stand.

    const double dt = t_ / static_cast<double>(n_);
    const double near = 4.0 * std::sqrt(2.0 * dt);
    double integral = 0.0;
    for (int j = 0; j < n_; ++j) {
      const Point& a = nodes_[static_cast<size_t>(j)];
      const Point& b = nodes_[static_cast<size_t>(j + 1)];
      const double va = vals_[static_cast<size_t>(j)];
      const double vb = vals_[static_cast<size_t>(j + 1)];
      if (!geom_.any() || (geom_.dist(a) >= near && geom_.dist(b) >= near)) {
        integral += 0.5 * dt * (va + vb);
        continue;
      }
      const double sd_half = std::sqrt(t_ / static_cast<double>(1 << (levels_ + 1)));
      const double sd_quarter = std::sqrt(t_ / static_cast<double>(1 << (levels_ + 2)));
      bisect(sample, levels_ + 1, j, a, b, sd_half, mid_);
      bisect(sample, levels_ + 2, 2 * j, a, mid_, sd_quarter, q1_);
      bisect(sample, levels_ + 2, 2 * j + 1, mid_, b, sd_quarter, q3_);
      const double v1 = value_or(q1_, va);
      const double v2 = value_or(mid_, v1);
      const double v3 = value_or(q3_, v2);
      integral += 0.25 * dt * (0.5 * va + v1 + v2 + v3 + 0.5 * vb);
    }
    return integral;
  }

 private:
  void bisect(std::uint64_t sample, int lev, int k, const Point& a, const Point& b, double sd,
              Point& out) const {
    double z[kMaxDim];
    const std::uint32_t heap = (1u << (lev - 1)) - 1u + static_cast<std::uint32_t>(k);
    rng::fill_normals(cfg_.seed, sample, rng::kPath | heap, d_, z);
    for (int i = 0; i < d_; ++i) out[i] = 0.5 * (a[i] + b[i]) + sd * z[i];
  }

  double value_or(const Point& z, double fallback) const {
    try {
      return evaluate(V_, z);
    } catch (const std::domain_error&) {
      return fallback;
    }
  }

  const PotentialSpec& V_;
  SingularGeometry geom_;
  double t_;
  Point x_;
  Point y_;
  McConfig cfg_;
  int n_;
  int d_;
  int levels_;
  std::vector<Point> nodes_;
  std::vector<double> vals_;
  Point mid_{1}, q1_{1}, q3_{1};
};

inline void check_inputs(const PotentialSpec& V, double t, const Point& x, const Point& y) {
  validate(V);
  if (!(t > 0.0)) throw Error("monte carlo: t must be positive");
  if (x.dim() != V.dim || y.dim() != V.dim) throw Error("monte carlo: point dimension must match potential");
}

}  // namespace detail_mc

// Estimate of t * E[|V|(Z_s)] with s uniform on (0, t) and Z_s the bridge
// point at time s; this is the bridge occupation functional of |V|.
// Stratified mode assigns sample i the stratum (i, i+1)/n of the time axis,
// which pins down the s-variance for singular potentials.
inline McEstimate mc_S(const PotentialSpec& V, double t, const Point& x, const Point& y,
                       const McConfig& cfg = {}) {
  validate(cfg);
  detail_mc::check_inputs(V, t, x, y);
  const long n = cfg.n_samples;
  detail_mc::Welford w;
  for (long i = 0; i < n; ++i) {
    const auto si = static_cast<std::uint64_t>(i);
    const double u = rng::uniform(cfg.seed, si, rng::kTime);
    const double frac = cfg.time_sampling == TimeSampling::Stratified
                            ? (static_cast<double>(i) + u) / static_cast<double>(n)
                            : u;
    const double s = t * frac;
    const Point z = sample_bridge_point(s, t, x, y, SampleStream{cfg.seed, si});
    w.add(t * detail_mc::abs_value_at(V, z));
  }
  return detail_mc::finish(w, cfg);
}

// Feynman-Kac ratio E[exp(int_0^t V(B_r) dr)] over the bridge from x to y.
// Requires V <= 0 everywhere, so each sample lies in (0, 1].
inline McEstimate fk_ratio(const PotentialSpec& V, double t, const Point& x, const Point& y,
                           const McConfig& cfg = {}) {
  validate(cfg);
  detail_mc::check_inputs(V, t, x, y);
  const SignClass sc = sign_class(V);
  if (sc != SignClass::NonPositive && sc != SignClass::Zero)
    throw Error("fk_ratio: potential must be nonpositive (its positive part must vanish)");
  detail_mc::BridgePathIntegral path(V, t, x, y, cfg);
  detail_mc::Welford w;
  for (long i = 0; i < cfg.n_samples; ++i) w.add(std::exp(path(static_cast<std::uint64_t>(i))));
  return detail_mc::finish(w, cfg);
}

// order-th term of the exponential series for the kernel perturbation,
// relative to the free kernel: E[(int_0^t V(B_r) dr)^order] / order!.
// Supported for order 0, 1, 2; V must not change sign.
inline McEstimate perturbation_term(int order, const PotentialSpec& V, double t, const Point& x,
                                    const Point& y, const McConfig& cfg = {}) {
  validate(cfg);
  detail_mc::check_inputs(V, t, x, y);
  if (order < 0 || order > 2) throw Error("perturbation_term: order must be 0, 1, or 2");
  if (sign_class(V) == SignClass::Mixed)
    throw Error("perturbation_term: potential must not change sign");
  if (order == 0) {
    McEstimate e;
    e.mean = 1.0;
    e.std_error = 0.0;
    e.n_samples = cfg.n_samples;
    e.config_fingerprint = fingerprint(cfg);
    return e;
  }
  detail_mc::BridgePathIntegral path(V, t, x, y, cfg);
  detail_mc::Welford w;
  for (long i = 0; i < cfg.n_samples; ++i) {
    const double a = path(static_cast<std::uint64_t>(i));
    w.add(order == 1 ? a : 0.5 * a * a);
  }
  return detail_mc::finish(w, cfg);
}

struct CertificateReport {
  double t = 0.0;
  double horizon = 0.0;  // time window the exponential certificate is fitted on
  McEstimate fk;
  double s_mean = 0.0;
  double s_std_error = 0.0;
  bool jensen_lower_ok = false;  // exp(-S) <= fk within 4 joint std errors
  bool unit_upper_ok = false;    // fk <= 1 within 4 std errors
  double log_prefactor = 0.0;    // ln C = -sup of the occupation bound over (0, horizon]
  double decay_rate = 0.0;       // c = bound(horizon) / horizon
  bool exp_lower_ok = false;     // fk >= C exp(-c t) within 4 std errors
  bool all_ok = false;
};

// Checks the three kernel-ratio bounds for a nonpositive potential:
// (i) Jensen's lower bound exp(-S) <= fk, (ii) the trivial upper bound
// fk <= 1, and (iii) the exponential-in-time lower bound fk >= C exp(-c t)
// with C, c read off the occupation bound over the window (0, horizon].
// `sup_bridge`, when given, supplies that bound as a function of time
// (typically a sup over endpoints); the default uses the occupation
// functional at (x, y) itself.
inline CertificateReport bound_certificates(const PotentialSpec& V, double t, const Point& x,
                                            const Point& y, double horizon,
                                            const McConfig& cfg = {},
                                            const std::function<double(double)>& sup_bridge = {}) {
  if (!(horizon > 0.0)) throw Error("bound_certificates: horizon must be positive");
  CertificateReport rep;
  rep.t = t;
  rep.horizon = horizon;
  rep.fk = fk_ratio(V, t, x, y, cfg);
  const McEstimate s = mc_S(V, t, x, y, cfg);
  rep.s_mean = s.mean;
  rep.s_std_error = s.std_error;

  const double es = std::exp(-s.mean);
  const double joint =
      std::sqrt(rep.fk.std_error * rep.fk.std_error + es * es * s.std_error * s.std_error);
  rep.jensen_lower_ok = es <= rep.fk.mean + 4.0 * joint;
  rep.unit_upper_ok = rep.fk.mean <= 1.0 + 4.0 * rep.fk.std_error;

  const auto bound_at = [&](double tp) {
    return sup_bridge ? sup_bridge(tp) : mc_S(V, tp, x, y, cfg).mean;
  };
  double sup_f = 0.0;
  const int grid = 16;
  for (int k = 1; k <= grid; ++k)
    sup_f = std::max(sup_f, bound_at(horizon * static_cast<double>(k) / grid));
  rep.log_prefactor = -sup_f;
  rep.decay_rate = bound_at(horizon) / horizon;
  rep.exp_lower_ok =
      rep.fk.mean >= std::exp(rep.log_prefactor - rep.decay_rate * t) - 4.0 * rep.fk.std_error;
  rep.all_ok = rep.jensen_lower_ok && rep.unit_upper_ok && rep.exp_lower_ok;
  return rep;
}

}  // namespace bridgepot
