#pragma once

// Quadrature evaluation of the integral functionals built on the potential
// grammar: the bridge occupation functional S, the two-piece comparison
// functional N, the kernel-weighted potential K, Newtonian and heat-flow
// potentials, the resolvent integrand, the dimensional constants these are
// compared against, and the closed-form theorem bounds.
//
// The workhorse is gauss_expectation: E[|V|(Z)] for Z Gaussian, evaluated by
// per-node reductions (1-d radial quadrature, closed-form ball masses, exact
// tensor factorization) so that the time integrals wrapping it stay 1-d.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bridgepot/common.hpp"
#include "bridgepot/gaussian_radial.hpp"
#include "bridgepot/kernels.hpp"
#include "bridgepot/montecarlo.hpp"
#include "bridgepot/potentials.hpp"
#include "bridgepot/quadrature.hpp"

namespace bridgepot {

enum class Method { ClosedForm, Quadrature, TensorFactorized, MonteCarlo };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::ClosedForm: return "closed_form";
    case Method::Quadrature: return "quadrature";
    case Method::TensorFactorized: return "tensor_factorized";
    case Method::MonteCarlo: return "monte_carlo";
  }
  return "unknown";
}

struct Diagnostics {
  long subdivisions = 0;
  double truncation_radius = 0.0;  // 0 when no truncation was applied
};

struct FunctionalResult {
  double value = 0.0;
  double error_estimate = 0.0;
  Method method = Method::Quadrature;
  Diagnostics diagnostics;
  bool converged = true;
};

// ---------------------------------------------------------------------------
// Gaussian expectation of |V|
// ---------------------------------------------------------------------------

struct GaussExpectation {
  double value = 0.0;
  double error = 0.0;
  bool monte_carlo = false;
  bool converged = true;
  long subdivisions = 0;
};

inline GaussExpectation gauss_expectation(const PotentialSpec& V, const Point& mu, double sigma2,
                                          const QuadratureConfig& cfg);

namespace detail_fn {

inline Point slice(const Point& p, int off, int len) {
  Point r(len);
  for (int i = 0; i < len; ++i) r[i] = p[off + i];
  return r;
}

inline double coord_pdf(double z, double m, double sd) {
  const double u = (z - m) / sd;
  return std::exp(-0.5 * u * u) / (sd * std::sqrt(2.0 * kPi));
}

inline bool has_tensor(const PotentialSpec& V) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, nodes::Tensor>) {
          return true;
        } else if constexpr (std::is_same_v<T, nodes::WeightedSum>) {
          for (const auto& t : n.terms)
            if (has_tensor(t)) return true;
          return false;
        } else if constexpr (std::is_same_v<T, nodes::Dilate> ||
                             std::is_same_v<T, nodes::PositivePart> ||
                             std::is_same_v<T, nodes::NegativePart>) {
          return has_tensor(n.inner.front());
        } else {
          return false;
        }
      },
      V.node);
}

// Invariance under rotations that fix the first coordinate axis. Radial specs
// qualify about any axis; the slab and tensors of a 1-d head factor with a
// radial tail are the structurally recognized cases.
inline bool is_axisym_e1(const PotentialSpec& V) {
  if (detail::is_radial(V)) return true;
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, nodes::SlabCounterexample>) {
          return true;
        } else if constexpr (std::is_same_v<T, nodes::Tensor>) {
          return n.factors.size() == 2 && n.factors[0].dim == 1 &&
                 detail::is_radial(n.factors[1]);
        } else if constexpr (std::is_same_v<T, nodes::WeightedSum>) {
          for (const auto& t : n.terms)
            if (!is_axisym_e1(t)) return false;
          return true;
        } else if constexpr (std::is_same_v<T, nodes::Dilate> ||
                             std::is_same_v<T, nodes::PositivePart> ||
                             std::is_same_v<T, nodes::NegativePart>) {
          return is_axisym_e1(n.inner.front());
        } else {
          return false;
        }
      },
      V.node);
}

// True when gauss_expectation would have to fall back to pointwise Monte
// Carlo sampling of |V| (mixed-sign, not radial, above dim 3).
inline bool uses_pointwise_mc(const PotentialSpec& V) {
  return std::visit(
      [&](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, nodes::Tensor>) {
          for (const auto& f : n.factors)
            if (uses_pointwise_mc(f)) return true;
          return false;
        } else if constexpr (std::is_same_v<T, nodes::Dilate>) {
          return uses_pointwise_mc(n.inner.front());
        } else if constexpr (std::is_same_v<T, nodes::WeightedSum>) {
          if (sign_class(V) != SignClass::Mixed) {
            for (const auto& t : n.terms)
              if (uses_pointwise_mc(t)) return true;
            return false;
          }
          return !detail::is_radial(V) && V.dim > 3;
        } else if constexpr (std::is_same_v<T, nodes::PositivePart> ||
                             std::is_same_v<T, nodes::NegativePart>) {
          return !detail::is_radial(V) && V.dim > 3;
        } else {
          return false;
        }
      },
      V.node);
}

inline GaussExpectation from_quad(const QuadResult& q, double scale) {
  GaussExpectation e;
  e.value = scale * q.value;
  e.error = std::abs(scale) * q.error;
  e.converged = q.converged;
  e.subdivisions = q.subdivisions;
  return e;
}

// radial expectation of |V| against the Gaussian, with a graceful retreat to
// an inner cutoff when the origin singularity is not integrable
inline GaussExpectation gauss_radial_generic(const PotentialSpec& V, double mu_norm, double sigma2,
                                             double r_lo, double r_hi, double alpha0,
                                             const QuadratureConfig& cfg) {
  const int d = V.dim;
  auto f = [&](double r) {
    Point z = Point::zero(d);
    z[0] = r;
    try {
      return std::abs(evaluate(V, z));
    } catch (const std::domain_error&) {
      return 0.0;
    }
  };
  try {
    return from_quad(radial_gauss_expectation(d, mu_norm, sigma2, f, r_lo, r_hi, alpha0, cfg), 1.0);
  } catch (const std::domain_error&) {
    // non-integrable at the origin: report the inner-cutoff value, unconverged
    const double eps = 1e-8 * (1.0 + mu_norm + std::sqrt(sigma2));
    GaussExpectation e =
        from_quad(radial_gauss_expectation(d, mu_norm, sigma2, f, std::max(r_lo, eps), r_hi, 0.0, cfg), 1.0);
    e.converged = false;
    return e;
  }
}

inline GaussExpectation gauss_cartesian(const PotentialSpec& V, const Point& mu, double sigma2,
                                        const QuadratureConfig& cfg) {
  const int d = V.dim;
  const double sd = std::sqrt(sigma2);
  const double box = detail::support_half_width(V);
  std::vector<double> pos;
  detail::collect_axis_splits(V, pos);
  std::erase_if(pos, [](double r) { return !(r > 0.0) || !std::isfinite(r); });

  QuadratureConfig c2 = cfg;
  c2.rel_tol = std::max(cfg.rel_tol, 1e-6);

  GaussExpectation out;
  std::array<double, 3> coords{};
  std::function<double(int)> level = [&](int axis) -> double {
    double fixed2 = 0.0;
    for (int j = 0; j < axis; ++j) fixed2 += coords[j] * coords[j];
    std::vector<double> ax{0.0};
    for (double r : pos) {
      ax.push_back(r);
      ax.push_back(-r);
      const double h2 = r * r - fixed2;
      if (h2 > 0) {
        const double h = std::sqrt(h2);
        ax.push_back(h);
        ax.push_back(-h);
      }
    }
    double lo = mu[axis] - cfg.tail_sigma * sd;
    double hi = mu[axis] + cfg.tail_sigma * sd;
    if (std::isfinite(box)) {
      lo = std::max(lo, -box);
      hi = std::min(hi, box);
    }
    if (!(hi > lo)) return 0.0;
    auto f = [&](double zc) {
      coords[axis] = zc;
      const double w = coord_pdf(zc, mu[axis], sd);
      if (axis + 1 == d) {
        Point z(d);
        for (int i = 0; i < d; ++i) z[i] = coords[static_cast<size_t>(i)];
        double v;
        try {
          v = std::abs(evaluate(V, z));
        } catch (const std::domain_error&) {
          v = 0.0;
        }
        return w * v;
      }
      return w * level(axis + 1);
    };
    const QuadResult q = integrate(f, lo, hi, c2, ax);
    if (axis == 0) {
      out.error = q.error;
      out.converged = q.converged;
      out.subdivisions = q.subdivisions;
    }
    return q.value;
  };
  out.value = level(0);
  return out;
}

inline GaussExpectation gauss_mc(const PotentialSpec& V, const Point& mu, double sigma2,
                                 const QuadratureConfig&) {
  const int d = V.dim;
  const double sd = std::sqrt(sigma2);
  const long n = 16384;
  detail_mc::Welford w;
  double z[kMaxDim];
  for (long i = 0; i < n; ++i) {
    rng::fill_normals(0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(i), rng::kPoint, d, z);
    Point p(d);
    for (int c = 0; c < d; ++c) p[c] = mu[c] + sd * z[c];
    w.add(detail_mc::abs_value_at(V, p));
  }
  GaussExpectation e;
  e.value = w.mean;
  e.error = w.std_error();
  e.monte_carlo = true;
  return e;
}

inline GaussExpectation gauss_slab(const nodes::SlabCounterexample& n, int d, const Point& mu,
                                   double sigma2, const QuadratureConfig& cfg) {
  const double R = n.truncation_radius;
  const double sd = std::sqrt(sigma2);
  const double m1 = mu[0];
  const double mperp = detail_fn::slice(mu, 1, d - 1).norm();
  double lo = std::max(4.0, m1 - cfg.tail_sigma * sd);
  double hi = m1 + cfg.tail_sigma * sd;
  std::vector<double> splits;
  if (std::isfinite(R)) {
    hi = std::min(hi, R);
    // transverse radius switches from sqrt(z1) to sqrt(R^2 - z1^2) here
    splits.push_back(0.5 * (std::sqrt(1.0 + 4.0 * R * R) - 1.0));
  }
  if (!(hi > lo)) return {};
  auto f = [&](double z1) {
    const double cap2 = std::isfinite(R) ? std::min(z1, R * R - z1 * z1) : z1;
    if (!(cap2 > 0.0)) return 0.0;
    return (1.0 / z1) * coord_pdf(z1, m1, sd) *
           radial_gauss_ball_mass(d - 1, std::sqrt(cap2), mperp, sigma2);
  };
  return from_quad(integrate(f, lo, hi, cfg, std::move(splits)), 1.0);
}

}  // namespace detail_fn

inline GaussExpectation gauss_expectation(const PotentialSpec& V, const Point& mu, double sigma2,
                                          const QuadratureConfig& cfg = {}) {
  if (mu.dim() != V.dim) throw Error("gauss_expectation: dimension mismatch");
  if (!(sigma2 > 0.0)) throw Error("gauss_expectation: variance must be positive");
  const int d = V.dim;
  return std::visit(
      [&](const auto& n) -> GaussExpectation {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, nodes::Constant>) {
          return {std::abs(n.value), 0.0, false, true, 0};
        } else if constexpr (std::is_same_v<T, nodes::RadialPower>) {
          const double a = n.exponent;
          auto f = [a](double r) { return std::pow(r, -a); };
          try {
            return detail_fn::from_quad(
                radial_gauss_expectation(d, mu.norm(), sigma2, f, n.inner_radius, n.radius,
                                         n.inner_radius == 0.0 ? a : 0.0, cfg),
                std::abs(n.coeff));
          } catch (const std::domain_error&) {
            const double eps = 1e-8 * (1.0 + mu.norm() + std::sqrt(sigma2));
            GaussExpectation e = detail_fn::from_quad(
                radial_gauss_expectation(d, mu.norm(), sigma2, f, std::max(n.inner_radius, eps),
                                         n.radius, 0.0, cfg),
                std::abs(n.coeff));
            e.converged = false;
            return e;
          }
        } else if constexpr (std::is_same_v<T, nodes::IndicatorBall>) {
          GaussExpectation e;
          e.value = std::abs(n.coeff) * radial_gauss_ball_mass(d, n.radius, mu.norm(), sigma2, cfg);
          e.error = cfg.rel_tol * e.value;
          return e;
        } else if constexpr (std::is_same_v<T, nodes::ShiftedRadialDecay>) {
          const double q = n.power;
          auto f = [q](double r) { return std::pow(1.0 + r, -q); };
          return detail_fn::from_quad(
              radial_gauss_expectation(d, mu.norm(), sigma2, f, 0.0,
                                       std::numeric_limits<double>::infinity(), 0.0, cfg),
              std::abs(n.coeff));
        } else if constexpr (std::is_same_v<T, nodes::SlabCounterexample>) {
          return detail_fn::gauss_slab(n, d, mu, sigma2, cfg);
        } else if constexpr (std::is_same_v<T, nodes::Tensor>) {
          std::vector<GaussExpectation> parts;
          parts.reserve(n.factors.size());
          int off = 0;
          for (const auto& f : n.factors) {
            parts.push_back(gauss_expectation(f, detail_fn::slice(mu, off, f.dim), sigma2, cfg));
            off += f.dim;
          }
          GaussExpectation e;
          e.value = 1.0;
          for (size_t i = 0; i < parts.size(); ++i) {
            e.value *= parts[i].value;
            e.converged = e.converged && parts[i].converged;
            e.monte_carlo = e.monte_carlo || parts[i].monte_carlo;
            e.subdivisions += parts[i].subdivisions;
          }
          for (size_t i = 0; i < parts.size(); ++i) {
            double rest = 1.0;
            for (size_t j = 0; j < parts.size(); ++j)
              if (j != i) rest *= std::abs(parts[j].value);
            e.error += parts[i].error * rest;
          }
          return e;
        } else if constexpr (std::is_same_v<T, nodes::Dilate>) {
          GaussExpectation e =
              gauss_expectation(n.inner.front(), std::sqrt(n.scale) * mu, n.scale * sigma2, cfg);
          e.value *= n.scale;
          e.error *= n.scale;
          return e;
        } else if constexpr (std::is_same_v<T, nodes::WeightedSum>) {
          if (sign_class(V) != SignClass::Mixed) {
            GaussExpectation e;
            for (size_t i = 0; i < n.terms.size(); ++i) {
              const GaussExpectation t = gauss_expectation(n.terms[i], mu, sigma2, cfg);
              e.value += std::abs(n.weights[i]) * t.value;
              e.error += std::abs(n.weights[i]) * t.error;
              e.converged = e.converged && t.converged;
              e.monte_carlo = e.monte_carlo || t.monte_carlo;
              e.subdivisions += t.subdivisions;
            }
            return e;
          }
          if (detail::is_radial(V))
            return detail_fn::gauss_radial_generic(V, mu.norm(), sigma2, 0.0,
                                                   detail::support_half_width(V),
                                                   detail::origin_power(V), cfg);
          if (d <= 3) return detail_fn::gauss_cartesian(V, mu, sigma2, cfg);
          return detail_fn::gauss_mc(V, mu, sigma2, cfg);
        } else {
          // positive / negative part wrappers: pointwise |V| only
          if (detail::is_radial(V))
            return detail_fn::gauss_radial_generic(V, mu.norm(), sigma2, 0.0,
                                                   detail::support_half_width(V),
                                                   detail::origin_power(V), cfg);
          if (d <= 3) return detail_fn::gauss_cartesian(V, mu, sigma2, cfg);
          return detail_fn::gauss_mc(V, mu, sigma2, cfg);
        }
      },
      V.node);
}

// ---------------------------------------------------------------------------
// time integrals
// ---------------------------------------------------------------------------

namespace detail_fn {

// Accumulates inner-quadrature quality across the outer time integral.
struct InnerTrack {
  double esum = 0.0;
  double vsum = 0.0;
  bool converged = true;
  bool monte_carlo = false;
  long subdivisions = 0;
  void absorb(const GaussExpectation& e) {
    esum += e.error;
    vsum += std::abs(e.value);
    converged = converged && e.converged;
    monte_carlo = monte_carlo || e.monte_carlo;
    subdivisions += e.subdivisions;
  }
  // Ratio of sums, not max of ratios: a far-tail evaluation that is all
  // absolute-tolerance noise (value ~ error ~ abs_tol) must not dominate the
  // quality figure when the bulk of the mass is resolved to rel_tol.
  double rel() const { return vsum > 0.0 ? esum / vsum : 0.0; }
};

// Blowup power of |V| at the full-space origin. Unlike the per-leaf radial
// notion, tensor factors compound: the Gaussian expectation of a product of
// blocks scales with the sum of the factor powers.
inline double origin_power_full(const PotentialSpec& V) {
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, nodes::Tensor>) {
          double a = 0.0;
          for (const auto& f : n.factors) a += origin_power_full(f);
          return a;
        } else if constexpr (std::is_same_v<T, nodes::WeightedSum>) {
          double a = 0.0;
          for (size_t i = 0; i < n.terms.size(); ++i)
            if (n.weights[i] != 0.0) a = std::max(a, origin_power_full(n.terms[i]));
          return a;
        } else if constexpr (std::is_same_v<T, nodes::Dilate> ||
                             std::is_same_v<T, nodes::PositivePart> ||
                             std::is_same_v<T, nodes::NegativePart>) {
          return origin_power_full(n.inner.front());
        } else {
          return detail::origin_power(V);
        }
      },
      V.node);
}

// integral of E over (0, T] through tau = T u^2, which flattens the sqrt-type
// endpoint behaviour of bridge variances. q is the blowup power of E at 0+
// (E ~ tau^{-q}); the substituted integrand scales like u^{1-2q}.
template <class F>
QuadResult sqrt_endpoint_integral(F&& E, double T, double q, const QuadratureConfig& cfg,
                                  bool& integrable) {
  auto g = [&](double u) { return 2.0 * T * u * E(T * u * u); };
  const double a = 2.0 * q - 1.0;
  if (a >= 1.0) {
    integrable = false;
    return integrate(g, 1e-6, 1.0, cfg, {1e-4, 1e-2, 0.1});
  }
  integrable = true;
  if (a > 0.0) return integrate_power_endpoint(g, 1.0, a, cfg);
  return integrate(g, 0.0, 1.0, cfg, {0.25, 0.5});
}

inline double endpoint_power(const PotentialSpec& V, const Point& at) {
  return at.norm2() == 0.0 ? 0.5 * origin_power_full(V) : 0.0;
}

inline FunctionalResult pack(double value, double outer_error, const InnerTrack& tr, Method m,
                             bool outer_converged, long outer_subs, double truncation = 0.0) {
  FunctionalResult r;
  r.value = value;
  r.error_estimate = outer_error + tr.rel() * std::abs(value);
  r.method = tr.monte_carlo ? Method::MonteCarlo : m;
  r.converged = outer_converged && tr.converged;
  r.diagnostics.subdivisions = outer_subs + tr.subdivisions;
  r.diagnostics.truncation_radius = truncation;
  return r;
}

}  // namespace detail_fn

// S(V,t,x,y): expected occupation of |V| by the Gaussian bridge from x to y,
// integral over s in (0,t) of E[|V|(Z_s)].
inline FunctionalResult S_bridge(const PotentialSpec& V, double t, const Point& x, const Point& y,
                                 const QuadratureConfig& cfg = {}, const McConfig& mc = {}) {
  validate(V);
  if (!(t > 0.0)) throw Error("S_bridge: t must be positive");
  if (x.dim() != V.dim || y.dim() != V.dim) throw Error("S_bridge: dimension mismatch");

  if (const auto* c = std::get_if<nodes::Constant>(&V.node)) {
    FunctionalResult r;
    r.value = std::abs(c->value) * t;
    r.method = Method::ClosedForm;
    return r;
  }
  if (detail_fn::uses_pointwise_mc(V)) {
    const McEstimate e = mc_S(V, t, x, y, mc);
    FunctionalResult r;
    r.value = e.mean;
    r.error_estimate = e.std_error;
    r.method = Method::MonteCarlo;
    return r;
  }

  // Each half-integral is taken outward from its own endpoint (the right half
  // as the reversed bridge from y to x): the time variable stays small near
  // the vanishing-variance endpoint instead of being a cancellation-prone
  // difference t - s.
  detail_fn::InnerTrack tr;
  auto half = [&](const Point& from, const Point& to) {
    auto E = [&](double s) {
      const GaussExpectation e =
          gauss_expectation(V, bridge_mean(s, t, from, to), bridge_variance(s, t), cfg);
      tr.absorb(e);
      return e.value;
    };
    bool integrable = true;
    QuadResult q = detail_fn::sqrt_endpoint_integral(E, 0.5 * t,
                                                     detail_fn::endpoint_power(V, from), cfg,
                                                     integrable);
    q.converged = q.converged && integrable;
    return q;
  };
  const QuadResult left = half(x, y);
  const QuadResult right = half(y, x);

  const Method m = detail_fn::has_tensor(V) ? Method::TensorFactorized : Method::Quadrature;
  return detail_fn::pack(left.value + right.value, left.error + right.error, tr, m,
                         left.converged && right.converged,
                         left.subdivisions + right.subdivisions);
}

// One anchored half-time piece of N: the Gaussian center runs from the anchor
// toward the other endpoint over tau in (0, t/2], variance 2 tau, carrying the
// same (4 pi)^{d/2} normalization as N itself.
inline FunctionalResult N_piece(const PotentialSpec& V, double t, const Point& anchor,
                                const Point& other, const QuadratureConfig& cfg = {}) {
  validate(V);
  if (!(t > 0.0)) throw Error("N_piece: t must be positive");
  if (anchor.dim() != V.dim || other.dim() != V.dim) throw Error("N_piece: dimension mismatch");
  const double scale = std::pow(4.0 * kPi, 0.5 * V.dim);

  if (const auto* c = std::get_if<nodes::Constant>(&V.node)) {
    FunctionalResult r;
    r.value = scale * std::abs(c->value) * 0.5 * t;
    r.method = Method::ClosedForm;
    return r;
  }

  detail_fn::InnerTrack tr;
  auto E = [&](double tau) {
    const Point center = anchor + (tau / t) * (other - anchor);
    const GaussExpectation e = gauss_expectation(V, center, 2.0 * tau, cfg);
    tr.absorb(e);
    return e.value;
  };
  bool integrable = true;
  const QuadResult q = detail_fn::sqrt_endpoint_integral(
      E, 0.5 * t, detail_fn::endpoint_power(V, anchor), cfg, integrable);
  const Method m = detail_fn::has_tensor(V) ? Method::TensorFactorized : Method::Quadrature;
  return detail_fn::pack(scale * q.value, scale * q.error, tr, m, q.converged && integrable,
                         q.subdivisions);
}

// N(V,t,x,y): sum of the two anchored half-time pieces.
inline FunctionalResult N_functional(const PotentialSpec& V, double t, const Point& x,
                                     const Point& y, const QuadratureConfig& cfg = {}) {
  validate(V);
  if (!(t > 0.0)) throw Error("N_functional: t must be positive");
  if (x.dim() != V.dim || y.dim() != V.dim) throw Error("N_functional: dimension mismatch");

  if (std::get_if<nodes::Constant>(&V.node)) {
    FunctionalResult r = N_piece(V, t, y, x);
    r.value *= 2.0;
    return r;
  }
  const FunctionalResult pa = N_piece(V, t, y, x, cfg);
  const FunctionalResult pb = N_piece(V, t, x, y, cfg);
  FunctionalResult r;
  r.value = pa.value + pb.value;
  r.error_estimate = pa.error_estimate + pb.error_estimate;
  r.method = pa.method == Method::MonteCarlo || pb.method == Method::MonteCarlo
                 ? Method::MonteCarlo
                 : pa.method;
  r.converged = pa.converged && pb.converged;
  r.diagnostics.subdivisions = pa.diagnostics.subdivisions + pb.diagnostics.subdivisions;
  return r;
}

// ---------------------------------------------------------------------------
// Newtonian and heat potentials
// ---------------------------------------------------------------------------

// (-Laplace)^{-1}|V|(x): shell reduction for radial specs, heat-flow time
// integral for everything else.
inline FunctionalResult newtonian_potential(const PotentialSpec& V, const Point& x,
                                            const QuadratureConfig& cfg = {});

namespace detail_fn {

inline FunctionalResult newtonian_radial(const PotentialSpec& V, double R,
                                         const QuadratureConfig& cfg) {
  const int d = V.dim;
  const double coeff = newtonian_constant(d) * unit_sphere_area(d);
  std::vector<double> radii;
  detail::collect_axis_splits(V, radii);
  std::erase_if(radii, [](double r) { return !(r > 0.0) || !std::isfinite(r); });
  std::vector<double> splits = radii;
  if (R > 0.0) splits.push_back(R);

  auto f = [&](double r) {
    Point z = Point::zero(d);
    z[0] = r;
    double v;
    try {
      v = std::abs(evaluate(V, z));
    } catch (const std::domain_error&) {
      return 0.0;
    }
    return std::pow(r, d - 1) * v * std::pow(std::max(r, R), 2.0 - d);
  };

  const double support = detail::support_half_width(V);
  double body_hi;
  if (std::isfinite(support)) {
    body_hi = support;
  } else {
    body_hi = 1.0 + 2.0 * R;
    for (double r : radii) body_hi = std::max(body_hi, 2.0 * r);
  }

  // endpoint power of f at 0: alpha - (d-1), plus (d-2) more when x = 0
  const double alpha = detail::origin_power(V);
  const double p0 = alpha + (R == 0.0 ? d - 2.0 : 0.0) - (d - 1.0);
  QuadResult body;
  bool integrable = true;
  if (p0 >= 1.0) {
    integrable = false;
    body = integrate(f, 1e-8, body_hi, cfg, splits);
  } else if (p0 > 0.0) {
    double cut = 0.5 * body_hi;
    for (double s : splits) cut = std::min(cut, s);
    body = integrate_power_endpoint(f, cut, p0, cfg);
    body += integrate(f, cut, body_hi, cfg, splits);
  } else {
    body = integrate(f, 0.0, body_hi, cfg, splits);
  }
  QuadResult tail;
  if (!std::isfinite(support)) tail = integrate_semi_infinite(f, body_hi, cfg);

  FunctionalResult r;
  r.value = coeff * (body.value + tail.value);
  r.error_estimate = coeff * (body.error + tail.error);
  r.method = Method::Quadrature;
  r.converged = body.converged && tail.converged && integrable;
  r.diagnostics.subdivisions = body.subdivisions + tail.subdivisions;
  return r;
}

// integral over (0, infinity) of E[|V|](N(x, 2s)) ds: a head window handled
// by the sqrt substitution and a tail mapped through s = s0 / v^2, where the
// integrand decays like v^{d-3} when |V| is integrable.
inline FunctionalResult heat_time_integral(const PotentialSpec& V, const Point& x, double T,
                                           const QuadratureConfig& cfg) {
  detail_fn::InnerTrack tr;
  auto E = [&](double s) {
    const GaussExpectation e = gauss_expectation(V, x, 2.0 * s, cfg);
    tr.absorb(e);
    return e.value;
  };
  std::vector<double> radii;
  detail::collect_axis_splits(V, radii);
  double rmax = 1.0;
  for (double r : radii)
    if (std::isfinite(r)) rmax = std::max(rmax, r);
  const double s0 = std::min(std::isfinite(T) ? T : std::numeric_limits<double>::infinity(),
                             1.0 + 0.25 * x.norm2() + 0.25 * rmax * rmax);

  bool hi_ok = true;
  const QuadResult head = sqrt_endpoint_integral(E, s0, endpoint_power(V, x), cfg, hi_ok);
  QuadResult rest;
  if (std::isfinite(T)) {
    if (T > s0) rest = integrate([&](double s) { return E(s); }, s0, T, cfg, {2.0 * s0, 4.0 * s0});
  } else {
    // s = s0 / w^4 flattens the far tail: integrable potentials give
    // E ~ s^(-d/2), so the integrand is O(w^(2d-5)), bounded for d >= 3.
    // Slowly decaying tails can cost up to s itself, leaving ~1/(w log^q w),
    // which the panel loop handles once errors carry the panel width.
    auto tail = [&](double w) {
      if (w < 1e-30) return 0.0;
      const double w2 = w * w;
      return E(s0 / (w2 * w2)) * 4.0 * s0 / (w2 * w2 * w);
    };
    rest = integrate(tail, 0.0, 1.0, cfg, {1e-4, 1e-2, 0.1});
  }

  const Method m = has_tensor(V) ? Method::TensorFactorized : Method::Quadrature;
  return pack(head.value + rest.value, head.error + rest.error, tr, m,
              head.converged && rest.converged && hi_ok,
              head.subdivisions + rest.subdivisions);
}

}  // namespace detail_fn

inline FunctionalResult newtonian_potential(const PotentialSpec& V, const Point& x,
                                            const QuadratureConfig& cfg) {
  validate(V);
  if (V.dim < 3) throw Error("newtonian_potential: d >= 3 required");
  if (x.dim() != V.dim) throw Error("newtonian_potential: dimension mismatch");
  if (detail::is_radial(V)) return detail_fn::newtonian_radial(V, x.norm(), cfg);
  return detail_fn::heat_time_integral(V, x, std::numeric_limits<double>::infinity(), cfg);
}

// integral over (0, T] of the heat-smoothed |V| at x; T = infinity reproduces
// the Newtonian potential through an independent route.
inline FunctionalResult heat_potential(const PotentialSpec& V, double T, const Point& x,
                                       const QuadratureConfig& cfg = {}) {
  validate(V);
  if (!(T > 0.0)) throw Error("heat_potential: T must be positive");
  if (x.dim() != V.dim) throw Error("heat_potential: dimension mismatch");
  if (std::isinf(T) && V.dim < 3) throw Error("heat_potential: T = infinity requires d >= 3");
  if (const auto* c = std::get_if<nodes::Constant>(&V.node); c && std::isfinite(T)) {
    FunctionalResult r;
    r.value = std::abs(c->value) * T;
    r.method = Method::ClosedForm;
    return r;
  }
  return detail_fn::heat_time_integral(V, x, T, cfg);
}

// ---------------------------------------------------------------------------
// kernel-weighted integrals (planar axisymmetric reduction)
// ---------------------------------------------------------------------------

namespace detail_fn {

struct PlanarFrame {
  double x1 = 0.0, x2 = 0.0;  // kernel translation center, in the (e1,e2)-plane
  double y1 = 0.0, y2 = 0.0;  // kernel second argument
};

// Rotate a radial problem so x lies on axis 1 and y in the (e1,e2)-plane; for
// potentials only axisymmetric about axis 1, require that layout up front.
inline PlanarFrame reduce_to_plane(const PotentialSpec& V, const Point& x, const Point& y) {
  const int d = V.dim;
  if (detail::is_radial(V)) {
    PlanarFrame f;
    const double nx = x.norm();
    if (nx == 0.0) {
      f.y1 = y.norm();
      return f;
    }
    f.x1 = nx;
    f.y1 = dot(x, y) / nx;
    const double rest = y.norm2() - f.y1 * f.y1;
    f.y2 = rest > 0.0 ? std::sqrt(rest) : 0.0;
    return f;
  }
  if (is_axisym_e1(V)) {
    for (int i = 2; i < d; ++i)
      if (x[i] != 0.0 || y[i] != 0.0)
        throw Error(
            "kernel integral: potential is axisymmetric about axis 1; x and y must lie in the "
            "(1,2)-plane");
    PlanarFrame f{x[0], d > 1 ? x[1] : 0.0, y[0], d > 1 ? y[1] : 0.0};
    if (f.x2 < 0.0) {  // reflect axis 2; applied to both arguments this fixes V and the kernel
      f.x2 = -f.x2;
      f.y2 = -f.y2;
    }
    return f;
  }
  throw Error(
      "kernel integral: unsupported geometry (potential neither radial nor axisymmetric about "
      "axis 1)");
}

// Largest transverse radius rho at which V(z1, rho, 0, ...) can be nonzero.
// Keeping the rho integration window equal to the support matters: a thin
// support sliver inside a much wider window can slip between the nodes of the
// embedded rule and silently lose the integral.
inline double transverse_support(const PotentialSpec& V, double z1) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(
      [&](const auto& n) -> double {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, nodes::Constant>) {
          return n.value == 0.0 ? 0.0 : inf;
        } else if constexpr (std::is_same_v<T, nodes::RadialPower> ||
                             std::is_same_v<T, nodes::IndicatorBall>) {
          if (n.coeff == 0.0) return 0.0;
          const double cap2 = n.radius * n.radius - z1 * z1;
          return cap2 > 0.0 ? std::sqrt(cap2) : 0.0;
        } else if constexpr (std::is_same_v<T, nodes::ShiftedRadialDecay>) {
          return n.coeff == 0.0 ? 0.0 : inf;
        } else if constexpr (std::is_same_v<T, nodes::SlabCounterexample>) {
          if (!(z1 > 4.0)) return 0.0;
          const double R = n.truncation_radius;
          const double cap2 = std::isfinite(R) ? std::min(z1, R * R - z1 * z1) : z1;
          return cap2 > 0.0 ? std::sqrt(cap2) : 0.0;
        } else if constexpr (std::is_same_v<T, nodes::Tensor>) {
          if (n.factors.size() == 2 && n.factors[0].dim == 1 &&
              detail::is_radial(n.factors[1])) {
            if (std::abs(z1) > detail::support_half_width(n.factors[0])) return 0.0;
            return detail::support_half_width(n.factors[1]);
          }
          return inf;
        } else if constexpr (std::is_same_v<T, nodes::WeightedSum>) {
          double w = 0.0;
          for (size_t i = 0; i < n.terms.size(); ++i)
            if (n.weights[i] != 0.0) w = std::max(w, transverse_support(n.terms[i], z1));
          return w;
        } else if constexpr (std::is_same_v<T, nodes::Dilate>) {
          const double rs = std::sqrt(n.scale);
          return transverse_support(n.inner.front(), rs * z1) / rs;
        } else {
          return transverse_support(n.inner.front(), z1);
        }
      },
      V.node);
}

// integral of |V|(z) * kern(z - x, y) over |z| <= Z, for V axisymmetric about
// axis 1 and x, y in the (e1,e2)-plane. Coordinates: z1 along the axis, rho
// the transverse radius, theta the transverse polar angle of z against e2.
template <class Kern>
QuadResult planar_kernel_quadrature(const PotentialSpec& V, const PlanarFrame& fr, double Z,
                                    Kern&& kern, const QuadratureConfig& cfg) {
  const int d = V.dim;
  Point yv = Point::zero(d);
  yv[0] = fr.y1;
  if (d > 1) yv[1] = fr.y2;
  const bool on_axis = fr.x2 == 0.0 && fr.y2 == 0.0;
  const double ring = unit_sphere_area(d - 1);                // S^{d-2} content, on-axis case
  const double arc = d >= 3 ? unit_sphere_area(d - 2) : 0.0;  // coefficient of the theta integral

  std::vector<double> radii;
  detail::collect_axis_splits(V, radii);
  std::erase_if(radii, [](double r) { return !(r > 0.0) || !std::isfinite(r); });

  const double box = detail::support_half_width(V);
  const double z1_lo = std::max(-Z, std::isfinite(box) ? -box : -Z);
  const double z1_hi = std::min(Z, std::isfinite(box) ? box : Z);

  QuadratureConfig inner = cfg;
  inner.rel_tol = std::max(cfg.rel_tol, 1e-7);

  std::vector<double> z1_splits;
  for (double r : radii) {
    z1_splits.push_back(r);
    z1_splits.push_back(-r);
  }
  z1_splits.push_back(fr.x1);
  if (origin_power_full(V) > 0.0) z1_splits.push_back(0.0);

  auto absV = [&](double z1, double rho) {
    Point z = Point::zero(d);
    z[0] = z1;
    if (d > 1) z[1] = rho;
    try {
      return std::abs(evaluate(V, z));
    } catch (const std::domain_error&) {
      return 0.0;
    }
  };

  auto outer = [&](double z1) {
    const double ball_cap2 = Z * Z - z1 * z1;
    if (!(ball_cap2 > 0.0)) return 0.0;
    const double rho_hi = std::min(std::sqrt(ball_cap2), transverse_support(V, z1));
    if (!(rho_hi > 0.0)) return 0.0;

    std::vector<double> rho_splits;
    for (double r : radii) {
      const double h2 = r * r - z1 * z1;
      if (h2 > 0.0) rho_splits.push_back(std::sqrt(h2));
    }
    if (fr.x2 > 0.0) rho_splits.push_back(fr.x2);

    auto ring_fn = [&](double rho) {
      const double v = absV(z1, rho);
      if (v == 0.0) return 0.0;
      const double w = std::pow(rho, d - 2);
      if (on_axis) {
        Point u = Point::zero(d);
        u[0] = z1 - fr.x1;
        if (d > 1) u[1] = rho;
        return v * w * ring * kern(u, yv);
      }
      // theta integral against the S^{d-2} section through the (e1,e2)-plane
      const double near2 = (z1 - fr.x1) * (z1 - fr.x1) + (rho - fr.x2) * (rho - fr.x2);
      std::vector<double> th_splits;
      if (near2 < 0.04 * (1.0 + fr.x1 * fr.x1 + fr.x2 * fr.x2))
        th_splits = {1e-4 * kPi, 1e-2 * kPi, 0.1 * kPi};
      auto th_fn = [&](double th) {
        const double c = std::cos(th), s = std::sin(th);
        Point u = Point::zero(d);
        u[0] = z1 - fr.x1;
        u[1] = rho * c - fr.x2;
        if (d > 2) u[2] = rho * s;
        return std::pow(s, d - 3) * kern(u, yv);
      };
      const QuadResult th = integrate(th_fn, 0.0, kPi, inner, std::move(th_splits));
      return v * w * arc * th.value;
    };
    return integrate(ring_fn, 0.0, rho_hi, inner, std::move(rho_splits)).value;
  };
  return integrate(outer, z1_lo, z1_hi, cfg, std::move(z1_splits));
}

template <class Kern>
FunctionalResult kernel_integral(const PotentialSpec& V, const Point& x, const Point& y,
                                 double truncation_radius, Kern&& kern,
                                 const QuadratureConfig& cfg) {
  const PlanarFrame fr = reduce_to_plane(V, x, y);
  const double support = detail::support_half_width(V);
  const double support_ball =
      std::isfinite(support) ? support * std::sqrt(double(V.dim)) : support;

  FunctionalResult r;
  r.method = Method::Quadrature;
  if (std::isfinite(truncation_radius)) {
    const double Z = std::min(truncation_radius, support_ball);
    const QuadResult q = planar_kernel_quadrature(V, fr, Z, kern, cfg);
    r.value = q.value;
    r.error_estimate = q.error;
    r.converged = q.converged;
    r.diagnostics.subdivisions = q.subdivisions;
    r.diagnostics.truncation_radius = truncation_radius;
    return r;
  }
  if (std::isfinite(support_ball)) {
    const QuadResult q = planar_kernel_quadrature(V, fr, support_ball, kern, cfg);
    r.value = q.value;
    r.error_estimate = q.error;
    r.converged = q.converged;
    r.diagnostics.subdivisions = q.subdivisions;
    return r;
  }
  // unbounded support, no requested truncation: doubling ladder on |z| <= Z
  double Z = 64.0;
  QuadResult cur = planar_kernel_quadrature(V, fr, Z, kern, cfg);
  bool settled = false;
  while (Z < 4096.0) {
    Z *= 2.0;
    const QuadResult next = planar_kernel_quadrature(V, fr, Z, kern, cfg);
    const double inc = std::abs(next.value - cur.value);
    cur = next;
    if (inc <= std::max(8.0 * cfg.rel_tol * std::abs(next.value), 8.0 * cfg.abs_tol)) {
      settled = true;
      break;
    }
  }
  r.value = cur.value;
  r.error_estimate = cur.error;
  r.converged = cur.converged && settled;
  r.diagnostics.subdivisions = cur.subdivisions;
  r.diagnostics.truncation_radius = Z;
  return r;
}

}  // namespace detail_fn

// K(V,x,y): kernel-weighted integral of |V| over |z| <= truncation_radius.
// Geometry support: V radial (any x, y, rotated into the plane), or V
// axisymmetric about axis 1 with x, y in the (e1,e2)-plane. Outside that, the
// y = 0 case falls back to the Newtonian identity.
inline FunctionalResult K_functional(const PotentialSpec& V, const Point& x, const Point& y,
                                     const QuadratureConfig& cfg = {},
                                     double truncation_radius = std::numeric_limits<double>::infinity()) {
  validate(V);
  if (V.dim < 3) throw Error("K_functional: d >= 3 required");
  if (x.dim() != V.dim || y.dim() != V.dim) throw Error("K_functional: dimension mismatch");
  if (!(truncation_radius > 0.0)) throw Error("K_functional: truncation radius must be positive");

  const bool reducible = detail::is_radial(V) || detail_fn::is_axisym_e1(V);
  if (!reducible && y.norm2() == 0.0 && std::isinf(truncation_radius)) {
    FunctionalResult r = newtonian_potential(V, x, cfg);
    r.value /= newtonian_constant(V.dim);
    r.error_estimate /= newtonian_constant(V.dim);
    return r;
  }
  auto kern = [](const Point& u, const Point& yv) {
    try {
      return kernel_K(u, yv).value;
    } catch (const std::domain_error&) {
      return 0.0;  // quadrature node landed exactly on the pole (measure zero)
    }
  };
  return detail_fn::kernel_integral(V, x, y, truncation_radius, kern, cfg);
}

// Resolvent integrand at fixed (y, w): (4 pi)^{-d/2} times the J-kernel
// integral of |V| centered at y. w = 0, lambda = 0 collapses to the Newtonian
// potential at y, which covers potentials outside the planar geometry.
inline FunctionalResult e_star_integral(const PotentialSpec& V, const Point& y, const Point& w,
                                        double lambda, const QuadratureConfig& cfg = {}) {
  validate(V);
  if (V.dim < 3) throw Error("e_star_integral: d >= 3 required");
  if (y.dim() != V.dim || w.dim() != V.dim) throw Error("e_star_integral: dimension mismatch");
  if (lambda < 0.0) throw Error("e_star_integral: lambda must be nonnegative");

  const bool reducible = detail::is_radial(V) || detail_fn::is_axisym_e1(V);
  if (!reducible && w.norm2() == 0.0 && lambda == 0.0) return newtonian_potential(V, y, cfg);

  const double scale = std::pow(4.0 * kPi, -0.5 * V.dim);
  auto kern = [lambda](const Point& u, const Point& wv) {
    try {
      return kernel_J(u, wv, lambda).value;
    } catch (const std::domain_error&) {
      return 0.0;
    }
  };
  FunctionalResult r = detail_fn::kernel_integral(
      V, y, w, std::numeric_limits<double>::infinity(), kern, cfg);
  r.value *= scale;
  r.error_estimate *= scale;
  return r;
}

// ---------------------------------------------------------------------------
// constants and theorem bounds
// ---------------------------------------------------------------------------

// C(d,p): the Gaussian heat-bound constant. p = 1 gives (4 pi)^{-d/2}; the
// general form interpolates to 1 at p = infinity.
inline double heat_bound_constant(int d, double p) {
  if (d < 1) throw Error("heat_bound_constant: d >= 1 required");
  if (!(p >= 1.0)) throw Error("heat_bound_constant: p >= 1 required");
  if (p == 1.0) return std::pow(4.0 * kPi, -0.5 * d);
  if (std::isinf(p)) return 1.0;
  const double a = 1.0 - 1.0 / p;
  return std::pow(4.0 * kPi, -0.5 * d / p) * std::pow(a, 0.5 * a * d);
}

// kappa_d, d >= 4: the L^{d/(d-2)} norm over {|w| > 1} of
// e^{-(|w|-w_1)/2} |w|^{-(d-1)/2}, reduced to a 1-d polar-angle integral with
// the radial part in closed form (an upper incomplete gamma). The angular
// endpoint behaves like phi^{-(d-4)/(d-2)}, always integrable.
inline double kappa_constant(int d, const QuadratureConfig& cfg = {}) {
  if (d < 4) throw Error("kappa_constant: d >= 4 required");
  static std::mutex mu;
  static std::map<int, double> cache;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(d);
    if (it != cache.end()) return it->second;
  }
  const double q = double(d) / (d - 2.0);
  const double b = double(d - 1) * (d - 4) / (2.0 * (d - 2));
  auto f = [&](double phi) {
    const double a = 0.5 * q * (1.0 - std::cos(phi));
    return std::pow(std::sin(phi), d - 2) * std::pow(a, -b - 1.0) *
           boost::math::tgamma(b + 1.0, a);
  };
  const double alpha = double(d - 4) / (d - 2);
  QuadResult integral;
  if (alpha > 0.0) {
    integral = integrate_power_endpoint(f, 0.5 * kPi, alpha, cfg);
    integral += integrate(f, 0.5 * kPi, kPi, cfg);
  } else {
    integral = integrate(f, 0.0, kPi, cfg, {0.5 * kPi});
  }
  const double value = std::pow(unit_sphere_area(d - 1) * integral.value, 1.0 / q);
  {
    std::lock_guard<std::mutex> lock(mu);
    cache.emplace(d, value);
  }
  return value;
}

struct ConstantsTable {
  int d = 0;
  double c_d = 0.0;               // Green-kernel constant, d >= 3
  std::map<double, double> c_dp;  // p -> C(d,p)
  double kappa_d = 0.0;           // set for d >= 4
  std::string notes;
};

inline ConstantsTable constants(int d, const std::vector<double>& p_list,
                                const QuadratureConfig& cfg = {}) {
  if (d < 1) throw Error("constants: d >= 1 required");
  ConstantsTable t;
  t.d = d;
  if (d >= 3) t.c_d = newtonian_constant(d);
  for (double p : p_list) t.c_dp[p] = heat_bound_constant(d, p);
  if (d >= 4) t.kappa_d = kappa_constant(d, cfg);
  t.notes = "kappa via polar reduction, incomplete-gamma radial part";
  return t;
}

// Bound constant c with S(V,t,x,y) <= c * t^(1 - d/(2p)); requires p > d/2.
inline double theorem_bound_zhang_a(int d, double p, double norm_p) {
  if (std::isinf(p)) return norm_p;
  if (!(p > 0.5 * d)) throw Error("zhang_a bound: p > d/2 required");
  const double e = 1.0 - 0.5 * d / p;
  return heat_bound_constant(d, p) * std::tgamma(e) * std::tgamma(e) / std::tgamma(2.0 * e) *
         norm_p;
}

inline double zhang_a_exponent(int d, double p) {
  return std::isinf(p) ? 1.0 : 1.0 - 0.5 * d / p;
}

// Bound constant c with S(V1 (x) V2, t, ., .) <= c * t^e for tensor product
// potentials, e = 1 - d1/(2r) - d2/(2p2). The factor exponents must satisfy
// d1/(2 p1) + d2/(2 p2) = 1 with r > p1, which keeps e in (0, 1/2].
inline double theorem_bound_tensor_a(int d1, int d2, double p1, double p2, double r,
                                     double norm1_r, double norm2_p2) {
  const double balance = 0.5 * d1 / p1 + 0.5 * d2 / p2;
  if (std::abs(balance - 1.0) > 1e-9)
    throw Error("tensor_a bound: d1/(2 p1) + d2/(2 p2) = 1 required");
  if (!(r > p1)) throw Error("tensor_a bound: r > p1 required");
  const double e = 1.0 - 0.5 * d1 / r - 0.5 * d2 / p2;
  if (!(e > 0.0)) throw Error("tensor_a bound: positive exponent required");
  return heat_bound_constant(d1, r) * heat_bound_constant(d2, p2) * std::tgamma(e) *
         std::tgamma(e) / std::tgamma(2.0 * e) * norm1_r * norm2_p2;
}

inline double tensor_a_exponent(int d1, int d2, double r, double p2) {
  return 1.0 - 0.5 * d1 / r - 0.5 * d2 / p2;
}

}  // namespace bridgepot
