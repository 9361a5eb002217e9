#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include "bridgepot/functionals.hpp"
#include "bridgepot/gaussian_radial.hpp"
#include "bridgepot/montecarlo.hpp"

using namespace bridgepot;
using Catch::Approx;

namespace {
const double kInfD = std::numeric_limits<double>::infinity();

Point pt3(double a, double b, double c) {
  Point p(3);
  p[0] = a;
  p[1] = b;
  p[2] = c;
  return p;
}
}  // namespace

TEST_CASE("constant potentials hit their closed forms", "[functionals]") {
  const Point x = pt3(0.3, -0.7, 0.2), y = pt3(-0.4, 0.1, 0.9);

  const auto s = S_bridge(make_constant(3, -2.0), 1.5, x, y);
  CHECK(s.value == Approx(3.0).epsilon(1e-15));
  CHECK(s.method == Method::ClosedForm);
  CHECK(s.error_estimate == 0.0);
  CHECK(s.converged);

  // (4 pi)^{3/2} * |c| * t, 30-digit reference 44.5466239746536627...
  const auto n = N_functional(make_constant(3, -1.0), 1.0, x, y);
  CHECK(n.value == Approx(44.546623974653663).epsilon(1e-13));
  CHECK(n.method == Method::ClosedForm);

  const auto h = heat_potential(make_constant(2, -3.0), 2.5, Point::zero(2));
  CHECK(h.value == Approx(7.5).epsilon(1e-15));
  CHECK(h.method == Method::ClosedForm);
}

TEST_CASE("occupation of the unit ball from the origin matches the reference value",
          "[functionals]") {
  // 30-digit quadrature reference 0.632120558828557678..., which is 1 - 1/e
  const auto s = S_bridge(make_indicator_ball(3, -1.0, 1.0), 1.0, Point::zero(3), Point::zero(3));
  CHECK(s.value == Approx(0.632120558828557678).epsilon(2e-7));
  CHECK(s.converged);
  CHECK(s.method == Method::Quadrature);
}

TEST_CASE("occupation functional is symmetric in its endpoints", "[functionals]") {
  const Point x = pt3(0.3, -0.2, 0.5), y = pt3(-0.1, 0.4, 0.2);
  const auto V = build_example_5_3(3);
  CHECK(S_bridge(V, 0.7, x, y).value == S_bridge(V, 0.7, y, x).value);

  const auto B = make_indicator_ball(3, -1.0, 1.0);
  CHECK(S_bridge(B, 1.3, x, y).value == S_bridge(B, 1.3, y, x).value);
}

TEST_CASE("occupation functional agrees with the path sampler", "[functionals]") {
  const Point x = pt3(0.2, -0.1, 0.3), y = pt3(-0.4, 0.5, 0.1);
  const auto B = make_indicator_ball(3, -1.0, 1.0);
  const auto q = S_bridge(B, 1.0, x, y);
  McConfig mc;
  mc.seed = 3;
  mc.n_samples = 40000;
  const auto m = mc_S(B, 1.0, x, y, mc);
  CHECK(q.value == Approx(m.mean).margin(3.5 * m.std_error + q.error_estimate));
}

TEST_CASE("occupation functional factorizes over tensor products", "[functionals]") {
  const auto V = build_example_5_1(3, 2.0);
  const auto s = S_bridge(V, 1.0, Point::zero(3), Point::zero(3));
  CHECK(s.method == Method::TensorFactorized);
  CHECK(s.converged);
  // 30-digit reference through the factorized 1-d reduction: 1.91739647515346...
  CHECK(s.value == Approx(1.9173964751534616).epsilon(1e-6));

  McConfig mc;
  mc.seed = 5;
  mc.n_samples = 40000;
  const auto m = mc_S(V, 1.0, Point::zero(3), Point::zero(3), mc);
  CHECK(s.value == Approx(m.mean).margin(4.0 * m.std_error + s.error_estimate));
}

TEST_CASE("two-piece proxy: symmetry, assembly, and the piece sandwich", "[functionals]") {
  const Point x = pt3(0.5, 0.0, 0.2), y = pt3(-0.3, 0.4, 0.0);
  const auto B = make_indicator_ball(3, -1.0, 1.0);
  const double t = 0.8;

  const auto n = N_functional(B, t, x, y);
  CHECK(n.value == N_functional(B, t, y, x).value);

  const auto a = N_piece(B, t, x, y);
  const auto b = N_piece(B, t, y, x);
  CHECK(n.value == Approx(a.value + b.value).epsilon(1e-12));
  const double hi = std::max(a.value, b.value);
  CHECK(n.value >= hi - 1e-9);
  CHECK(n.value <= 2.0 * hi + 1e-9);

  // direct assembly: each piece is (4 pi)^{d/2} int_0^{t/2} of the Gaussian
  // ball mass along the straight line between the endpoints
  auto piece = [&](const Point& anchor, const Point& other) {
    auto f = [&](double tau) {
      const Point c = anchor + (tau / t) * (other - anchor);
      return radial_gauss_ball_mass(3, 1.0, c.norm(), 2.0 * tau);
    };
    return std::pow(4.0 * kPi, 1.5) * integrate(f, 0.0, 0.5 * t, QuadratureConfig{}).value;
  };
  CHECK(n.value == Approx(piece(y, x) + piece(x, y)).epsilon(1e-5));
}

TEST_CASE("kernel functional reduces to the newtonian potential at a flat second argument",
          "[functionals]") {
  const Point x = pt3(0.4, -0.2, 0.1);

  const auto Vc = build_example_5_4_factor(0.5);
  const auto k = K_functional(Vc, x, Point::zero(3));
  const auto w = newtonian_potential(Vc, x);
  CHECK(k.value == Approx(w.value / newtonian_constant(3)).epsilon(1e-6));

  // unbounded support goes through the doubling ladder; the stopping rule
  // leaves a small tail, so the match is loose and flagged unconverged
  const auto Vs = build_example_5_3(3);
  const auto ks = K_functional(Vs, x, Point::zero(3));
  const auto ws = newtonian_potential(Vs, x);
  CHECK(ks.value == Approx(ws.value / newtonian_constant(3)).epsilon(2e-3));
}

TEST_CASE("kernel functional transforms exactly under dilatation", "[functionals]") {
  const auto B = make_indicator_ball(3, -1.0, 1.0);
  const double s = 2.5;
  const Point x = pt3(0.3, 0.1, -0.5), y = pt3(-0.2, 0.6, 0.15);
  const auto lhs = K_functional(make_dilate(s, B), x, y);
  const auto rhs = K_functional(B, std::sqrt(s) * x, (1.0 / std::sqrt(s)) * y);
  CHECK(lhs.value == Approx(rhs.value).epsilon(1e-9));
}

TEST_CASE("kernel functional is rotation invariant for radial potentials", "[functionals]") {
  const auto B = make_indicator_ball(3, -1.0, 1.0);
  const auto k1 = K_functional(B, Point::zero(3), pt3(1.0, 0.0, 0.0));
  const auto k2 = K_functional(B, Point::zero(3), pt3(0.6, 0.8, 0.0));
  CHECK(k1.value == Approx(k2.value).epsilon(1e-12));
}

TEST_CASE("kernel truncation ladder on the slab gains a fixed amount per decade",
          "[functionals]") {
  const auto V = build_counterexample_slab(4);
  const Point x0 = Point::zero(4);
  Point y1 = Point::zero(4);
  y1[0] = 1.0;

  // 10-digit reference at R = 100: 11.6748013087...
  double prev = 0.0, inc_prev = 0.0;
  for (double R : {1e2, 1e3, 1e4, 1e5}) {
    const auto k = K_functional(V, x0, y1, {}, R);
    CHECK(k.converged);
    CHECK(k.diagnostics.truncation_radius == R);
    if (R == 1e2) CHECK(k.value == Approx(11.674801308717799).epsilon(1e-5));
    const double inc = k.value - prev;
    if (prev > 0.0) {
      CHECK(inc == Approx(8.3195).margin(0.02));
      if (inc_prev > 0.0) CHECK(std::abs(inc - inc_prev) < 0.02);
      inc_prev = inc;
    }
    prev = k.value;
  }
}

TEST_CASE("newtonian potential special values", "[functionals]") {
  // the compactly supported -(1-eps)/2 |z|^{-1-eps} profile integrates to 1/2
  // at the origin for every eps
  for (double eps : {0.0, 0.3, 0.9}) {
    const auto r = newtonian_potential(build_example_5_4_factor(eps), Point::zero(3));
    CHECK(r.value == Approx(0.5).epsilon(1e-8));
    CHECK(r.converged);
  }

  // unit ball at the origin: 1/(2 (d-2))
  for (int d : {3, 5}) {
    const auto r = newtonian_potential(make_indicator_ball(d, -1.0, 1.0), Point::zero(d));
    CHECK(r.value == Approx(0.5 / (d - 2)).epsilon(1e-8));
  }
}

TEST_CASE("newtonian potential of the slab stays bounded down the axis", "[functionals]") {
  // 1-d reduction references (transverse integral in closed form):
  // 0.31491426641894761, 0.49994058304164582, 0.49999999433844025, 0.49999999999943411
  const auto V = build_counterexample_slab(4);
  const double x1s[] = {4.0, 1e2, 1e4, 1e6};
  const double want[] = {0.31491426641894761, 0.49994058304164582, 0.49999999433844025,
                         0.49999999999943411};
  double prev_inc = kInfD;
  double prev = 0.0;
  for (int i = 0; i < 4; ++i) {
    Point x = Point::zero(4);
    x[0] = x1s[i];
    const auto r = newtonian_potential(V, x);
    CHECK(r.value == Approx(want[i]).margin(1e-5));
    CHECK(r.converged);
    CHECK(r.value < 0.51);
    const double inc = r.value - prev;
    CHECK(inc < prev_inc);
    prev_inc = inc;
    prev = r.value;
  }
}

TEST_CASE("heat potential: routes agree, limits behave, low dimension rejected",
          "[functionals]") {
  // inside a uniform ball the potential is |c| (R^2/(2(d-2)) - |x|^2/(2d)):
  // d = 4, c = -2, R = 1.5, |x|^2 = 0.3 gives exactly 1.05
  const auto B = make_indicator_ball(4, -2.0, 1.5);
  Point x(4);
  x[0] = 0.3;
  x[1] = 0.2;
  x[2] = -0.1;
  x[3] = 0.4;
  const auto hp = heat_potential(B, kInfD, x);
  const auto nw = newtonian_potential(B, x);
  CHECK(hp.value == Approx(1.05).epsilon(1e-7));
  CHECK(nw.value == Approx(1.05).epsilon(1e-7));
  CHECK(hp.value == Approx(nw.value).margin(hp.error_estimate + nw.error_estimate + 1e-9));

  // monotone in the horizon
  const auto h1 = heat_potential(B, 0.5, x);
  const auto h2 = heat_potential(B, 2.0, x);
  CHECK(h1.value < h2.value);
  CHECK(h2.value < hp.value);

  CHECK_THROWS_AS(heat_potential(make_indicator_ball(2, -1.0, 1.0), kInfD, Point::zero(2)),
                  Error);
}

TEST_CASE("heat potential of the tensor square diverges as the inner cutoff shrinks",
          "[functionals]") {
  // references frozen from the factorized evaluation; the growth rate is the
  // content: about one decade of value per decade of cutoff at eps = 1/2
  const double deltas[] = {1e-1, 1e-2, 1e-3};
  const double want[] = {0.23328014, 2.8601753, 29.142636};
  double prev = 0.0;
  for (int i = 0; i < 3; ++i) {
    const auto f = build_example_5_4_factor(0.5, deltas[i]);
    const auto h = heat_potential(make_tensor({f, f}), 1.0, Point::zero(6));
    CHECK(h.method == Method::TensorFactorized);
    CHECK(h.converged);
    CHECK(h.value == Approx(want[i]).epsilon(1e-3));
    if (prev > 0.0) CHECK(h.value / prev > 3.0);
    prev = h.value;
  }
}

TEST_CASE("resolvent integrand at zero shift reduces to the newtonian potential",
          "[functionals]") {
  const auto V = build_example_5_4_factor(0.5);
  const Point y = pt3(0.4, -0.2, 0.1);
  const auto es = e_star_integral(V, y, Point::zero(3), 0.0);
  const auto nw = newtonian_potential(V, y);
  CHECK(es.value == Approx(nw.value).epsilon(1e-6));
}

TEST_CASE("explicit constants match their references", "[functionals]") {
  CHECK(newtonian_constant(3) == Approx(0.07957747154594767).epsilon(1e-14));  // 1/(4 pi)
  CHECK(newtonian_constant(4) == Approx(0.02533029591058444).epsilon(1e-14));  // 1/(4 pi^2)

  CHECK(heat_bound_constant(3, 1.0) == Approx(0.02244839026564582).epsilon(1e-14));
  CHECK(heat_bound_constant(3, 2.0) == Approx(0.08908818379437377).epsilon(1e-13));
  for (int d : {3, 4, 5, 6}) CHECK(heat_bound_constant(d, kInfD) == 1.0);

  // 12-digit polar-reduction references
  CHECK(kappa_constant(4) == Approx(5.157075381774235).epsilon(1e-10));
  CHECK(kappa_constant(5) == Approx(18.296573494834256).epsilon(1e-10));

  const auto t = constants(4, {1.0, 2.0, kInfD});
  CHECK(t.d == 4);
  CHECK(t.c_d == Approx(newtonian_constant(4)));
  CHECK(t.c_dp.size() == 3);
  CHECK(t.kappa_d == Approx(kappa_constant(4)));
  CHECK_FALSE(t.notes.empty());
}

TEST_CASE("norm helpers: closed forms and divergence at the critical index", "[functionals]") {
  CHECK(lp_norm(make_indicator_ball(3, -1.0, 1.0), 2.0).value ==
        Approx(2.0466534158929770).epsilon(1e-12));  // (4 pi / 3)^{1/2}
  CHECK(lp_norm(make_radial_power(1, -1.0, 0.5, 1.0), 1.5).value == Approx(4.0).epsilon(1e-12));
  CHECK(lp_norm(make_indicator_ball(2, 1.0, 1.0), 1.6).value ==
        Approx(2.0451194093205411).epsilon(1e-12));  // pi^{5/8}
  // |u|^{-1/2} on (-1,1) just fails to lie in L^2
  CHECK(std::isinf(lp_norm(make_radial_power(1, 1.0, 0.5, 1.0), 2.0).value));
}

TEST_CASE("bound formulas: frozen constants and rejected parameters", "[functionals]") {
  CHECK(theorem_bound_zhang_a(3, kInfD, 7.5) == 7.5);
  CHECK(zhang_a_exponent(3, 2.0) == Approx(0.25));
  CHECK(zhang_a_exponent(3, kInfD) == 1.0);
  CHECK_THROWS_AS(theorem_bound_zhang_a(3, 1.5, 1.0), Error);

  // d = 3, p = 2, unit ball: 30-digit reference 1.35223329062817...
  const double norm2 = lp_norm(make_indicator_ball(3, -1.0, 1.0), 2.0).value;
  const double c = theorem_bound_zhang_a(3, 2.0, norm2);
  CHECK(c == Approx(1.3522332906281709).epsilon(1e-12));

  // the bound itself holds on a small time ladder
  for (double t : {0.01, 0.1, 1.0}) {
    const auto s =
        S_bridge(make_indicator_ball(3, -1.0, 1.0), t, Point::zero(3), Point::zero(3));
    CHECK(s.value <= c * std::pow(t, 0.25) + 1e-9);
  }

  // split-exponent family: 1 x 2 dimensions, p1 = 4/3, p2 = 8/5, r = 3/2
  CHECK(tensor_a_exponent(1, 2, 1.5, 1.6) == Approx(1.0 / 24.0).epsilon(1e-12));
  const double ct = theorem_bound_tensor_a(1, 2, 4.0 / 3.0, 1.6, 1.5, 4.0, 2.0451194093205411);
  CHECK(ct == Approx(19.961013816811379).epsilon(1e-10));
  // broken balance, and r at (not above) p1
  CHECK_THROWS_AS(theorem_bound_tensor_a(1, 2, 1.4, 1.6, 3.0, 1.0, 1.0), Error);
  CHECK_THROWS_AS(theorem_bound_tensor_a(1, 2, 4.0 / 3.0, 1.6, 4.0 / 3.0, 1.0, 1.0), Error);
}

TEST_CASE("functional inputs are validated", "[functionals]") {
  const auto B = make_indicator_ball(3, -1.0, 1.0);
  CHECK_THROWS_AS(S_bridge(B, 0.0, Point::zero(3), Point::zero(3)), Error);
  CHECK_THROWS_AS(S_bridge(B, 1.0, Point::zero(2), Point::zero(3)), Error);
  CHECK_THROWS_AS(N_functional(B, -1.0, Point::zero(3), Point::zero(3)), Error);
}
