#pragma once

// Closed-form kernels: the Gauss-Weierstrass kernel, the Gaussian bridge
// density, the Newtonian kernel, the anisotropy-sensitive kernel K, the
// resolvent kernel J with its Bessel closed form, and modified Bessel
// functions K_nu for half-integer and integer orders.

#include <cmath>
#include <stdexcept>

#include "bridgepot/common.hpp"
#include "bridgepot/quadrature.hpp"

namespace bridgepot {

inline double log_gauss_kernel(double t, double dist2, int d) {
  return -0.5 * d * std::log(4.0 * kPi * t) - dist2 / (4.0 * t);
}

inline KernelValue gauss_kernel(double t, const Point& x, const Point& y) {
  if (!(t > 0)) throw std::invalid_argument("gauss_kernel: t > 0 required");
  if (x.dim() != y.dim()) throw std::invalid_argument("gauss_kernel: dimension mismatch");
  return KernelValue::from_log(log_gauss_kernel(t, (y - x).norm2(), x.dim()));
}

inline Point bridge_mean(double s, double t, const Point& x, const Point& y) {
  return x + (s / t) * (y - x);
}

// Per-coordinate variance of the bridge at time s (heat normalization: the
// free kernel has variance 2t per coordinate).
inline double bridge_variance(double s, double t) { return 2.0 * s * (t - s) / t; }

inline KernelValue bridge_density(double s, double t, const Point& x, const Point& y,
                                  const Point& z) {
  if (!(s > 0 && s < t)) throw std::invalid_argument("bridge_density: 0 < s < t required");
  if (x.dim() != y.dim() || x.dim() != z.dim())
    throw std::invalid_argument("bridge_density: dimension mismatch");
  const int d = x.dim();
  const double lg = log_gauss_kernel(s, (z - x).norm2(), d) +
                    log_gauss_kernel(t - s, (y - z).norm2(), d) -
                    log_gauss_kernel(t, (y - x).norm2(), d);
  return KernelValue::from_log(lg);
}

inline double newtonian_constant(int d) {
  if (d < 3) throw std::invalid_argument("newtonian_constant: d >= 3 required");
  return std::tgamma(0.5 * d - 1.0) / (4.0 * std::pow(kPi, 0.5 * d));
}

inline KernelValue newtonian_kernel(const Point& x, const Point& z) {
  if (x.dim() != z.dim()) throw std::invalid_argument("newtonian_kernel: dimension mismatch");
  const int d = x.dim();
  const double r2 = (z - x).norm2();
  if (r2 == 0.0) throw std::domain_error("newtonian_kernel: x = z is singular");
  return KernelValue::from_log(std::log(newtonian_constant(d)) +
                               (1.0 - 0.5 * d) * std::log(r2));
}

// K(x,y) = exp(-(|x||y| - x.y)/2) * (1 + |x||y|)^{(d-3)/2} / |x|^{d-2}.
inline KernelValue kernel_K(const Point& x, const Point& y) {
  if (x.dim() != y.dim()) throw std::invalid_argument("kernel_K: dimension mismatch");
  const int d = x.dim();
  if (d < 3) throw std::invalid_argument("kernel_K: d >= 3 required");
  const double nx2 = x.norm2();
  if (nx2 == 0.0) throw std::domain_error("kernel_K: x = 0 is singular");
  const double lv = -0.5 * norm_prod_minus_dot(x, y) - 0.5 * (d - 2) * std::log(nx2) +
                    0.5 * (d - 3) * std::log1p(x.norm() * y.norm());
  return KernelValue::from_log(lv);
}

namespace detail {

// log of e^z K_nu(z) for integer nu >= 0 via the ascending series,
// valid for z <= 2 where the series in u = z^2/4 converges rapidly.
//   K_0(z) = -(log(z/2) + gamma) I_0(z) + sum_{k>=1} H_k u^k / (k!)^2
//   K_1(z) = 1/z + log(z/2) I_1(z) - (z/4) sum_{k>=0} (psi(k+1)+psi(k+2)) u^k / (k!(k+1)!)
// with H_k the harmonic numbers and psi the digamma at integers.
inline double log_scaled_bessel_k_int_series(int n, double z) {
  constexpr double kEulerGamma = 0.57721566490153286061;
  const double u = 0.25 * z * z;
  const double lz2 = std::log(0.5 * z);

  double k0;
  {
    double i0 = 1.0, term = 1.0, s = 0.0, hk = 0.0;
    for (int k = 1; k <= 40; ++k) {
      term *= u / (static_cast<double>(k) * k);
      i0 += term;
      hk += 1.0 / k;
      s += term * hk;
      if (term < 1e-18 * i0) break;
    }
    k0 = -(lz2 + kEulerGamma) * i0 + s;
  }
  if (n == 0) return std::log(k0) + z;

  double k1;
  {
    double i1 = 0.0, term = 0.5 * z, s = 0.0;
    double psi_a = -kEulerGamma;        // psi(1)
    double psi_b = 1.0 - kEulerGamma;   // psi(2)
    double fac = 1.0;                   // u^k / (k!(k+1)!)
    i1 = term;                          // k = 0 term of I_1
    s = (psi_a + psi_b) * fac;
    for (int k = 1; k <= 40; ++k) {
      fac *= u / (static_cast<double>(k) * (k + 1));
      psi_a += 1.0 / k;
      psi_b += 1.0 / (k + 1);
      s += (psi_a + psi_b) * fac;
      term *= u / (static_cast<double>(k) * (k + 1));
      i1 += term;
      if (fac < 1e-18) break;
    }
    k1 = 1.0 / z + lz2 * i1 - 0.25 * z * s;
  }
  if (n == 1) return std::log(k1) + z;

  // upward recurrence in the scaled values
  double km1 = k0 * std::exp(z), kk = k1 * std::exp(z);
  for (int m = 1; m < n; ++m) {
    const double knext = km1 + (2.0 * m / z) * kk;
    km1 = kk;
    kk = knext;
  }
  return std::log(kk);
}

// log of e^z K_mu(z) and e^z K_{mu+1}(z) for z > 2 via the Steed/
// Thompson-Barnett continued fraction (CF2). Machine accurate for z >= 2;
// the divergent large-z asymptotic series cannot reach full precision here.
inline void log_scaled_bessel_k_cf2(double mu, double z, double& logk_mu, double& logk_mu1) {
  const double a1 = 0.25 - mu * mu;
  double b = 2.0 * (1.0 + z);
  double d = 1.0 / b;
  double h = d, delh = d;
  double q1 = 0.0, q2 = 1.0;
  double q = a1, c = a1;
  double a = -a1;
  double s = 1.0 + q * delh;
  for (int i = 2; i <= 10000; ++i) {
    a -= 2 * (i - 1);
    c = -a * c / i;
    const double qnew = (q1 - b * q2) / a;
    q1 = q2;
    q2 = qnew;
    q += c * qnew;
    b += 2.0;
    d = 1.0 / (b + a * d);
    delh = (b * d - 1.0) * delh;
    h += delh;
    const double dels = q * delh;
    s += dels;
    if (std::abs(dels / s) <= 1e-16) break;
  }
  h = a1 * h;
  const double log_scaled_kmu = 0.5 * std::log(kPi / (2.0 * z)) - std::log(s);
  logk_mu = log_scaled_kmu;
  logk_mu1 = log_scaled_kmu + std::log((mu + z + 0.5 - h) / z);
}

}  // namespace detail

// log of e^z K_nu(z). Orders: positive half-integers (closed form + upward
// recurrence) and nonnegative integers (series for z <= 2, CF2 beyond).
inline double log_scaled_bessel_k(double nu, double z) {
  if (!(z > 0)) throw std::invalid_argument("bessel_k: z > 0 required");
  const double two_nu = 2.0 * nu;
  const double rounded = std::round(two_nu);
  if (std::abs(two_nu - rounded) > 1e-12 || rounded < 0)
    throw std::invalid_argument("bessel_k: order must be a nonnegative multiple of 1/2");
  const long n2 = static_cast<long>(rounded);

  if (n2 % 2 == 1) {
    // K_{1/2}(z) = sqrt(pi/(2z)) e^{-z}; recur upward. Values grow fast for
    // small z, so recur in log space via the ratio K_{nu-1}/K_nu.
    const double lk_half = 0.5 * std::log(kPi / (2.0 * z));  // log of e^z K_{1/2}
    if (n2 == 1) return lk_half;
    double lkk = lk_half + std::log1p(1.0 / z);              // e^z K_{3/2}
    double ratio = std::exp(lk_half - lkk);
    for (double order = 1.5; order < nu - 0.25; order += 1.0) {
      const double step = ratio + 2.0 * order / z;  // K_{order+1}/K_order
      lkk += std::log(step);
      ratio = 1.0 / step;
    }
    return lkk;
  }

  const int n = static_cast<int>(n2 / 2);
  if (z <= 2.0) return detail::log_scaled_bessel_k_int_series(n, z);
  double lk0, lk1;
  detail::log_scaled_bessel_k_cf2(0.0, z, lk0, lk1);
  if (n == 0) return lk0;
  if (n == 1) return lk1;
  double ratio = std::exp(lk0 - lk1);  // K_0/K_1
  double lkk = lk1;
  for (int m = 1; m < n; ++m) {
    const double step = ratio + 2.0 * m / z;  // K_{m+1}/K_m
    lkk += std::log(step);
    ratio = 1.0 / step;
  }
  return lkk;
}

inline double bessel_k(double nu, double z) { return std::exp(log_scaled_bessel_k(nu, z) - z); }

// J(x,w) at spectral parameter lambda:
//   J = integral_0^inf tau^{-d/2} e^{-lambda tau} e^{-|x - tau w|^2/(4 tau)} dtau
//     = 2 e^{x.w/2} (|x|/mu)^{1-d/2} K_{d/2-1}(|x| mu / 2),  mu = sqrt(|w|^2 + 4 lambda),
// degenerating to the Newtonian-limit Gamma form when mu = 0.
inline KernelValue kernel_J(const Point& x, const Point& w, double lambda = 0.0) {
  if (x.dim() != w.dim()) throw std::invalid_argument("kernel_J: dimension mismatch");
  const int d = x.dim();
  if (d < 3) throw std::invalid_argument("kernel_J: d >= 3 required");
  if (lambda < 0) throw std::invalid_argument("kernel_J: lambda >= 0 required");
  const double nx = x.norm();
  if (nx == 0.0) throw std::domain_error("kernel_J: x = 0 is singular");
  const double mu = std::sqrt(w.norm2() + 4.0 * lambda);
  if (mu == 0.0) {
    const double lv = std::lgamma(0.5 * d - 1.0) + (1.0 - 0.5 * d) * std::log(0.25 * nx * nx);
    return KernelValue::from_log(lv);
  }
  const double arg = 0.5 * nx * mu;
  const double lv = std::log(2.0) + 0.5 * dot(x, w) + (1.0 - 0.5 * d) * std::log(nx / mu) +
                    log_scaled_bessel_k(0.5 * d - 1.0, arg) - arg;
  return KernelValue::from_log(lv);
}

// Direct quadrature of the defining tau-integral; the cross-check route for
// kernel_J. Substitutes tau = tau* e^u around the saddle tau* = |x|/mu.
inline QuadResult kernel_J_direct(const Point& x, const Point& w, double lambda,
                                  const QuadratureConfig& cfg) {
  const int d = x.dim();
  const double nx = x.norm();
  if (nx == 0.0) throw std::domain_error("kernel_J_direct: x = 0 is singular");
  const double mu2 = w.norm2() + 4.0 * lambda;
  const double xw = dot(x, w);
  if (mu2 == 0.0) {
    // pure Gamma integral in u = |x|^2/(4 tau); substitute u = v^2 so the
    // d = 3 endpoint power u^{-1/2} disappears.
    const double scale = std::pow(0.25 * nx * nx, 1.0 - 0.5 * d);
    auto f = [d](double v) { return 2.0 * std::pow(v, d - 3.0) * std::exp(-v * v); };
    QuadResult r = integrate(f, 0.0, 30.0, cfg);
    r.value *= scale;
    r.error *= scale;
    return r;
  }
  const double mu = std::sqrt(mu2);
  const double tau_star = nx / mu;
  const double a = 0.5 * nx * mu;  // exponent at the saddle
  // e^{-a cosh u} tail: pick U so the exponent exceeds ~ 80 + a beyond it.
  const double ucap = std::log(2.0 * (a + 80.0) / a + 2.0) + 2.0;
  // integrand in u after tau = tau* e^u: tau^{1-d/2} e^{-a cosh u} du
  auto g = [&](double u) {
    const double tau = tau_star * std::exp(u);
    return std::exp(-a * std::cosh(u) + (1.0 - 0.5 * d) * std::log(tau));
  };
  QuadResult r = integrate(g, -ucap, ucap, cfg, {0.0});
  const double pref = std::exp(0.5 * xw);
  r.value *= pref;
  r.error *= pref;
  return r;
}

// Quadrature oracle for the scaled function e^z K_nu(z) via the integral
// representation K_nu(z) = integral_0^inf e^{-z cosh u} cosh(nu u) du,
// evaluated as e^{-z(cosh u - 1)} to stay in range for large z.
inline QuadResult scaled_bessel_k_integral(double nu, double z, const QuadratureConfig& cfg) {
  const double ucap = std::log(2.0 * (z + 80.0 + 40.0 * nu) / z + 2.0) + 2.0;
  auto f = [nu, z](double u) {
    return std::exp(-z * (std::cosh(u) - 1.0) + std::log(std::cosh(nu * u)));
  };
  return integrate(f, 0.0, ucap, cfg);
}

}  // namespace bridgepot
