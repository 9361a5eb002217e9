#pragma once

// Adaptive 1-d quadrature built on the embedded Gauss-Kronrod 15-point rule.
// The adaptivity layer here owns the subdivision budget, declared split
// points, and convergence flagging; panels are evaluated non-recursively.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bridgepot/common.hpp"

namespace bridgepot {

struct QuadratureConfig {
  double rel_tol = 1e-6;
  double abs_tol = 1e-12;
  int max_subdivisions = 2000;
  // Gaussian-weighted integrals over R^k truncate at mean +- tail_sigma * stddev.
  double tail_sigma = 8.0;
  bool singularity_split = true;

  void validate() const {
    if (!(rel_tol > 0) || !(abs_tol > 0))
      throw std::invalid_argument("QuadratureConfig: rel_tol and abs_tol must be positive");
    if (!(tail_sigma >= 4.0))
      throw std::invalid_argument("QuadratureConfig: tail_sigma >= 4 required");
    if (max_subdivisions < 1)
      throw std::invalid_argument("QuadratureConfig: max_subdivisions >= 1 required");
  }
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
  int subdivisions = 0;
  bool converged = true;

  QuadResult& operator+=(const QuadResult& o) {
    value += o.value;
    error += o.error;
    evaluations += o.evaluations;
    subdivisions += o.subdivisions;
    converged = converged && o.converged;
    return *this;
  }
};

namespace detail {

struct Panel {
  double a, b, value, error;
};

template <class F>
Panel eval_panel(F& f, double a, double b, long& evals) {
  using rule = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0, l1 = 0.0;
  // max_depth = 0: a single application of the embedded rule; the adaptive
  // loop below owns all subdivision decisions.
  double v = rule::integrate(f, a, b, 0, 0.0, &err, &l1);
  evals += 15;
  // boost scales the estimate and the L1 norm by the jacobian (b - a) / 2 but
  // hands back |GK - G| of the integrand as mapped onto [-1, 1], unscaled.
  // Left that way a sqrt singularity at an edge reports err ~ 1/sqrt(width):
  // splitting the panel *raises* its error and the adaptive loop runs off
  // chasing it. Put the error in the panel's own units.
  err *= 0.5 * (b - a);
  if (!std::isfinite(v)) {
    v = 0.0;
    err = kInf;
  }
  // The raw |GK - G| difference badly underestimates the error on panels
  // with branch-point behaviour (sqrt kinks at an edge), which makes the
  // adaptive loop stop early at a wrong value. Inflate it the way QUADPACK
  // does, with the L1 mass of the panel as the scale; unlike QUADPACK keep
  // the raw estimate as a floor rather than replacing it.
  if (err > 0.0 && l1 > 0.0) {
    const double r = 200.0 * err / l1;
    err = std::max(err, (r < 1.0) ? l1 * r * std::sqrt(r) : l1);
  }
  return {a, b, v, err};
}

}  // namespace detail

// Integrate f over [a, b], force-splitting at the given interior points
// (typically singular radii of the integrand, where the embedded rule's
// error estimate is unreliable unless the singularity sits on a panel edge).
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadratureConfig& cfg,
                     std::vector<double> splits = {}) {
  QuadResult out;
  if (!(b > a)) return out;

  std::vector<double> edges{a};
  if (cfg.singularity_split) {
    std::sort(splits.begin(), splits.end());
    for (double s : splits)
      if (s > a && s < b && s != edges.back()) edges.push_back(s);
  }
  edges.push_back(b);

  std::vector<detail::Panel> panels;
  panels.reserve(static_cast<size_t>(edges.size()) + 64);
  for (size_t i = 0; i + 1 < edges.size(); ++i)
    panels.push_back(detail::eval_panel(f, edges[i], edges[i + 1], out.evaluations));

  auto total = [&panels](double& v, double& e) {
    v = 0.0;
    e = 0.0;
    for (const auto& p : panels) {
      v += p.value;
      e += p.error;
    }
  };

  double v = 0, e = 0;
  total(v, e);
  while (e > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(v)) &&
         out.subdivisions < cfg.max_subdivisions) {
    size_t worst = 0;
    for (size_t i = 1; i < panels.size(); ++i)
      if (panels[i].error > panels[worst].error) worst = i;
    detail::Panel p = panels[worst];
    const double m = 0.5 * (p.a + p.b);
    if (!(m > p.a && m < p.b)) break;  // interval exhausted at double precision
    panels[worst] = detail::eval_panel(f, p.a, m, out.evaluations);
    panels.push_back(detail::eval_panel(f, m, p.b, out.evaluations));
    ++out.subdivisions;
    total(v, e);
  }

  out.value = v;
  out.error = e;
  out.converged = std::isfinite(v) && std::isfinite(e) &&
                  e <= std::max(cfg.abs_tol, cfg.rel_tol * std::abs(v));
  return out;
}

// Integrate f over [a, inf) through r = a + u/(1-u), u in (0,1).
template <class F>
QuadResult integrate_semi_infinite(F&& f, double a, const QuadratureConfig& cfg,
                                   std::vector<double> splits = {}) {
  std::vector<double> usplits;
  usplits.reserve(splits.size());
  for (double s : splits)
    if (s > a) usplits.push_back((s - a) / (1.0 + s - a));
  auto g = [&f, a](double u) {
    const double om = 1.0 - u;
    const double r = a + u / om;
    return f(r) / (om * om);
  };
  return integrate(g, 0.0, 1.0, cfg, std::move(usplits));
}

// Integrate f over [0, b] where f ~ r^(-alpha) as r -> 0+, 0 <= alpha < 1.
// Substitution u = r^(1-alpha) flattens the endpoint; the transformed
// integrand is bounded at u = 0.
template <class F>
QuadResult integrate_power_endpoint(F&& f, double b, double alpha, const QuadratureConfig& cfg) {
  if (!(alpha > 0.0)) return integrate(f, 0.0, b, cfg);
  if (!(alpha < 1.0)) throw std::invalid_argument("integrate_power_endpoint: alpha in [0,1) required");
  const double q = 1.0 - alpha;
  auto g = [&f, q, alpha](double u) {
    const double r = std::pow(u, 1.0 / q);
    return f(r) * std::pow(u, alpha / q) / q;
  };
  return integrate(g, 0.0, std::pow(b, q), cfg);
}

}  // namespace bridgepot
