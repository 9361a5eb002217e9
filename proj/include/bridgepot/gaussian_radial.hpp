#pragma once

// Radial moments of isotropic Gaussians: the density of |Z| for
// Z ~ N(m e, sigma^2 I_k), ball masses, and expectations E[f(|Z|)].
// These are the workhorse reductions that turn d-dimensional bridge and
// heat integrals into 1-d quadratures.

#include <cmath>
#include <stdexcept>

#include "bridgepot/common.hpp"
#include "bridgepot/quadrature.hpp"

namespace bridgepot {

namespace detail {

// S(nu, a) = sum_k (a^2/4)^k / (k! Gamma(nu+k+1)), so I_nu(a) = (a/2)^nu S.
// Plain series; fine for a <= 20 where e^a stays in range.
inline double bessel_i_series(double nu, double a) {
  const double u = 0.25 * a * a;
  double term = 1.0 / std::tgamma(nu + 1.0);
  double s = term;
  for (int k = 1; k <= 200; ++k) {
    term *= u / (k * (nu + k));
    s += term;
    if (term < 1e-18 * s) break;
  }
  return s;
}

// log of e^{-a} I_nu(a) by the large-argument expansion; relative error
// ~ e^{-2a}, negligible for a >= 20.
inline double log_scaled_bessel_i_asymptotic(double nu, double a) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0, s = 1.0;
  double prev = kInf;
  for (int k = 1; k <= 30; ++k) {
    term *= -(mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * a * k);
    if (std::abs(term) > prev) break;  // divergent tail reached
    s += term;
    prev = std::abs(term);
    if (std::abs(term) < 1e-18 * std::abs(s)) break;
  }
  return -0.5 * std::log(2.0 * kPi * a) + std::log(s);
}

}  // namespace detail

// log density of |Z| at r > 0, Z ~ N(mu, sigma2 * I_k) with |mu| = m >= 0:
//   p_k(r) = (r/sigma2) (r^2/(2 sigma2))^{k/2-1} e^{-(r^2+m^2)/(2 sigma2)} S(a)
// in the series regime (a = r m / sigma2), switching to the scaled Bessel
// form beyond. Smooth in m, including m = 0.
inline double log_radial_gauss_density(int k, double r, double m, double sigma2) {
  if (k < 1) throw std::invalid_argument("log_radial_gauss_density: k >= 1 required");
  if (!(sigma2 > 0)) throw std::invalid_argument("log_radial_gauss_density: sigma2 > 0 required");
  if (!(r > 0) || m < 0) return -kInf;
  if (k == 1) {
    // two-sided fold of the 1-d Gaussian
    const double s = std::sqrt(sigma2);
    const double l1 = -0.5 * (r - m) * (r - m) / sigma2;
    const double l2 = -0.5 * (r + m) * (r + m) / sigma2;
    const double hi = std::max(l1, l2);
    return hi + std::log(std::exp(l1 - hi) + std::exp(l2 - hi)) -
           0.5 * std::log(2.0 * kPi) - std::log(s);
  }
  const double nu = 0.5 * k - 1.0;
  const double a = r * m / sigma2;
  if (a <= 20.0) {
    return std::log(r / sigma2) + nu * std::log(0.5 * r * r / sigma2) -
           0.5 * (r * r + m * m) / sigma2 + std::log(detail::bessel_i_series(nu, a));
  }
  return std::log(r / sigma2) + nu * std::log(r / m) -
         0.5 * (r - m) * (r - m) / sigma2 + detail::log_scaled_bessel_i_asymptotic(nu, a);
}

inline double radial_gauss_density(int k, double r, double m, double sigma2) {
  return std::exp(log_radial_gauss_density(k, r, m, sigma2));
}

inline double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }

// P(|Z| <= R) for Z ~ N(mu, sigma2 I_k), |mu| = m.
inline double radial_gauss_ball_mass(int k, double R, double m, double sigma2,
                                     const QuadratureConfig& cfg = {}) {
  if (!(R > 0)) return 0.0;
  const double s = std::sqrt(sigma2);
  // Ball far smaller than the Gaussian scale: the closed forms below are
  // differences of nearly equal terms and can return garbage of either sign;
  // density-times-volume is then accurate to O(R^2 (1 + m^2/s^2) / s^2).
  if (R * (R + m) < 1e-8 * sigma2) {
    double log_ball = 0.5 * k * std::log(kPi) + k * std::log(R) - std::lgamma(0.5 * k + 1.0);
    double log_den = -0.5 * k * std::log(2.0 * kPi * sigma2) - 0.5 * m * m / sigma2;
    return std::exp(log_ball + log_den);
  }
  if (k == 1) return normal_cdf((R - m) / s) - normal_cdf((-R - m) / s);
  if (k == 3 && m <= R) {
    // integrate the k=3 density in closed form:
    // P = Phi((R-m)/s) - Phi((-R-m)/s) - (s/(m sqrt(2 pi)))(e^{-(R-m)^2/2s^2} - e^{-(R+m)^2/2s^2})
    // (for m > R the two groups cancel; the quadrature below is stable there)
    if (m > 1e-8 * s) {
      const double em = std::exp(-0.5 * (R - m) * (R - m) / sigma2);
      const double ep = std::exp(-0.5 * (R + m) * (R + m) / sigma2);
      return normal_cdf((R - m) / s) - normal_cdf((-R - m) / s) -
             s / (m * std::sqrt(2.0 * kPi)) * (em - ep);
    }
    // chi distribution with 3 dof
    const double u = R / s;
    return std::erf(u / std::sqrt(2.0)) - std::sqrt(2.0 / kPi) * u * std::exp(-0.5 * u * u);
  }
  const double lo = std::max(0.0, m - cfg.tail_sigma * s);
  const double hi = std::min(R, m + cfg.tail_sigma * s);
  if (!(hi > lo)) return (R >= m) ? 1.0 : 0.0;
  auto f = [&](double r) { return radial_gauss_density(k, r, m, sigma2); };
  return integrate(f, lo, hi, cfg).value;
}

// E[f(|Z|)] restricted to r in [r_lo, r_hi], where f may carry an integrable
// power singularity r^{-alpha0} at r_lo = 0 (alpha0 < k keeps it integrable
// against r^{k-1}). The window is clipped to mean +- tail_sigma stddev.
template <class F>
QuadResult radial_gauss_expectation(int k, double m, double sigma2, F&& f, double r_lo,
                                    double r_hi, double alpha0, const QuadratureConfig& cfg) {
  QuadResult out;
  const double s = std::sqrt(sigma2);
  const double lo = std::max(r_lo, std::max(0.0, m - cfg.tail_sigma * s));
  const double hi = std::min(r_hi, m + cfg.tail_sigma * s);
  if (!(hi > lo)) return out;
  auto g = [&](double r) { return f(r) * radial_gauss_density(k, r, m, sigma2); };
  if (lo == 0.0 && alpha0 > 0.0) {
    // net endpoint power r^{k-1-alpha0}; substitute only when it is actually
    // singular or fractional enough to slow the rule down
    const double net = alpha0 - (k - 1);
    if (net > 0.0 && net < 1.0) return integrate_power_endpoint(g, hi, net, cfg);
    if (net >= 1.0) throw std::domain_error("radial_gauss_expectation: non-integrable singularity");
  }
  return integrate(g, lo, hi, cfg);
}

}  // namespace bridgepot
