#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "bridgepot/gaussian_radial.hpp"
#include "bridgepot/potentials.hpp"

using namespace bridgepot;

TEST_CASE("pointwise evaluation of every node type") {
  SECTION("constant and indicator") {
    CHECK(evaluate(make_constant(3, -2.5), {0.1, 0.2, 0.3}) == -2.5);
    const auto ball = make_indicator_ball(3, -1.0, 1.0);
    CHECK(evaluate(ball, {0.5, 0.5, 0.5}) == -1.0);
    CHECK(evaluate(ball, {1.0, 0.0, 0.0}) == 0.0);
  }
  SECTION("radial power with annulus support") {
    const auto v = make_radial_power(3, 2.0, 1.5, 2.0, 0.5);
    CHECK(evaluate(v, {1.0, 0.0, 0.0}) == 2.0);
    CHECK(evaluate(v, {0.2, 0.0, 0.0}) == 0.0);  // below inner radius
    CHECK(evaluate(v, {2.0, 0.0, 0.0}) == 0.0);  // at outer radius (half-open)
    const auto sing = make_radial_power(3, 1.0, 1.0, 1.0);
    CHECK_THROWS_AS(evaluate(sing, Point::zero(3)), std::domain_error);
    // exponent 0 has no singularity; the origin is a plain interior point
    CHECK(evaluate(make_radial_power(2, 3.0, 0.0, 1.0), Point::zero(2)) == 3.0);
  }
  SECTION("slab") {
    const auto v = make_slab(4);
    CHECK(evaluate(v, {9.0, 1.0, 0.0, 0.0}) == -1.0 / 9.0);
    CHECK(evaluate(v, {2.0, 0.0, 0.0, 0.0}) == 0.0);        // z1 <= 4
    CHECK(evaluate(v, {9.0, 3.01, 0.0, 0.0}) == 0.0);       // outside |z2|^2 <= z1
    CHECK(evaluate(v, {9.0, 2.0, 2.0, 1.0}) == -1.0 / 9.0); // |z2|^2 = 9 = z1
    const auto trunc = make_slab(4, 8.0);
    CHECK(evaluate(trunc, {9.0, 1.0, 0.0, 0.0}) == 0.0);    // |z| > 8
    CHECK(evaluate(trunc, {5.0, 0.5, 0.0, 0.0}) == -0.2);
  }
  SECTION("shifted radial decay") {
    const auto v = make_shifted_radial_decay(3, -1.0, 3.0);
    CHECK(evaluate(v, {1.0, 0.0, 0.0}) == -0.125);
    CHECK(evaluate(v, Point::zero(3)) == -1.0);
  }
  SECTION("tensor splits coordinates in order") {
    const auto v = make_tensor({make_indicator_ball(1, 2.0, 1.0), make_indicator_ball(2, 3.0, 2.0)});
    REQUIRE(v.dim == 3);
    CHECK(evaluate(v, {0.5, 1.0, 1.0}) == 6.0);
    CHECK(evaluate(v, {1.5, 1.0, 1.0}) == 0.0);
  }
  SECTION("dilate scales domain and magnitude") {
    const auto v = make_dilate(4.0, make_indicator_ball(3, 1.0, 1.0));
    CHECK(evaluate(v, {0.4, 0.0, 0.0}) == 4.0);   // sqrt(4)*0.4 = 0.8 inside
    CHECK(evaluate(v, {0.6, 0.0, 0.0}) == 0.0);   // sqrt(4)*0.6 = 1.2 outside
  }
  SECTION("weighted sum and parts") {
    const auto mix = make_weighted_sum(
        {1.0, -2.0}, {make_indicator_ball(2, 1.0, 2.0), make_indicator_ball(2, 1.0, 1.0)});
    CHECK(evaluate(mix, {0.5, 0.0}) == -1.0);
    CHECK(evaluate(mix, {1.5, 0.0}) == 1.0);
    CHECK(evaluate(make_positive_part(mix), {0.5, 0.0}) == 0.0);
    CHECK(evaluate(make_negative_part(mix), {0.5, 0.0}) == 1.0);
    CHECK(evaluate(make_positive_part(mix), {1.5, 0.0}) == 1.0);
  }
  SECTION("dimension mismatch raises") {
    CHECK_THROWS_AS(evaluate(make_constant(3, 1.0), Point::zero(2)), std::invalid_argument);
  }
}

TEST_CASE("validation rejects malformed specs") {
  CHECK_THROWS_AS(validate(make_radial_power(3, 1.0, -0.5)), std::invalid_argument);
  CHECK_THROWS_AS(validate(make_radial_power(3, 1.0, 1.0, 1.0, 1.5)), std::invalid_argument);
  CHECK_THROWS_AS(validate(make_slab(3)), std::invalid_argument);        // needs d >= 4
  CHECK_THROWS_AS(validate(make_slab(4, 3.0)), std::invalid_argument);   // truncation <= 4
  CHECK_THROWS_AS(validate(PotentialSpec{13, nodes::Constant{1.0}}), std::invalid_argument);
  // tensor factor dims must sum to dim
  PotentialSpec bad{4, nodes::Tensor{{make_constant(1, 1.0), make_constant(2, 1.0)}}};
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  PotentialSpec sum{2, nodes::WeightedSum{{1.0}, {make_constant(3, 1.0)}}};
  CHECK_THROWS_AS(validate(sum), std::invalid_argument);
  CHECK_NOTHROW(validate(make_slab(4, 10.0)));
}

TEST_CASE("Lp norms: closed forms against independent values") {
  SECTION("indicator ball, d=3, p=2") {
    const auto r = lp_norm(make_indicator_ball(3, -1.0, 1.0), 2.0);
    CHECK(r.method == LpNormResult::Method::ClosedForm);
    CHECK_THAT(r.value, Catch::Matchers::WithinRel(2.0466534158929770, 1e-14));
  }
  SECTION("radial power 1-d, the first tensor factor of the mixed-norm family") {
    // |x|^{-1/2} on |x|<1 in R: L^{3/2} norm (2 * 4)^{2/3} = 4
    const auto r = lp_norm(make_radial_power(1, -1.0, 0.5, 1.0), 1.5);
    CHECK_THAT(r.value, Catch::Matchers::WithinRel(4.0, 1e-14));
    // and the transverse disc factor: L^{8/5} norm = pi^{5/8}
    const auto r2 = lp_norm(make_indicator_ball(2, 1.0, 1.0), 1.6);
    CHECK_THAT(r2.value, Catch::Matchers::WithinRel(std::pow(kPi, 0.625), 1e-14));
  }
  SECTION("critical exponent diverges, annulus rescues it") {
    // alpha p = d exactly: logarithmic divergence at the origin
    CHECK(lp_norm(make_radial_power(3, 1.0, 1.5, 1.0), 2.0).value == kInf);
    CHECK(std::isfinite(lp_norm(make_radial_power(3, 1.0, 1.5, 1.0, 0.1), 2.0).value));
    // unbounded support with slow decay diverges at infinity
    CHECK(lp_norm(make_radial_power(3, 1.0, 1.0), 2.0).value == kInf);
  }
  SECTION("shifted radial decay via the beta function") {
    const auto r = lp_norm(make_shifted_radial_decay(3, -1.0, 3.0), 2.0);
    CHECK_THAT(r.value, Catch::Matchers::WithinRel(0.64720863751856642, 1e-13));
    CHECK(lp_norm(make_shifted_radial_decay(3, -1.0, 3.0), 1.0).value == kInf);  // qp = d
    CHECK(lp_norm(make_shifted_radial_decay(3, -1.0, 3.0), kInf).value == 1.0);
  }
  SECTION("slab: sup and the p=3 closed value in d=4") {
    const auto v = make_slab(4);
    CHECK(lp_norm(v, kInf).value == 0.25);
    CHECK(lp_norm(v, 2.0).value == kInf);  // p <= (d+1)/2 diverges
    const auto r = lp_norm(v, 3.0);
    CHECK(r.method == LpNormResult::Method::Quadrature);
    CHECK_THAT(r.value, Catch::Matchers::WithinRel(1.6119919540164696, 1e-8));
    // truncation makes every p finite and smaller than the full slab
    const auto rt = lp_norm(make_slab(4, 100.0), 3.0);
    CHECK(rt.value < r.value);
    CHECK(std::isfinite(lp_norm(make_slab(4, 100.0), 2.0).value));
  }
  SECTION("tensor norms multiply") {
    const auto f = build_example_5_4_factor(0.5);
    const auto r1 = lp_norm(f, 1.0);
    CHECK_THAT(r1.value, Catch::Matchers::WithinRel(2.0943951023931955, 1e-14));
    const auto rt = lp_norm(build_example_5_4(0.5), 1.0);
    CHECK_THAT(rt.value, Catch::Matchers::WithinRel(r1.value * r1.value, 1e-14));
  }
  SECTION("dilatation scaling law") {
    // ||d_s f||_p = s^{1 - d/(2p)} ||f||_p, checked against the closed form
    // of the manually dilated spec d_4 1_{B_1} = 4 * 1_{B_{1/2}}
    const auto f = make_indicator_ball(3, 1.0, 1.0);
    const auto lhs = lp_norm(make_dilate(4.0, f), 2.0);
    const auto rhs = lp_norm(make_weighted_sum({4.0}, {make_indicator_ball(3, 1.0, 0.5)}), 2.0);
    const auto direct = 4.0 * lp_norm(make_indicator_ball(3, 1.0, 0.5), 2.0).value;
    CHECK_THAT(lhs.value, Catch::Matchers::WithinRel(direct, 1e-13));
    CHECK_THAT(lhs.value, Catch::Matchers::WithinRel(std::pow(4.0, 0.25) * lp_norm(f, 2.0).value,
                                                     1e-13));
    CHECK_THAT(rhs.value, Catch::Matchers::WithinRel(direct, 1e-6));  // quadrature fallback
    // sup norm scales by s itself
    CHECK_THAT(lp_norm(make_dilate(4.0, f), kInf).value, Catch::Matchers::WithinRel(4.0, 1e-14));
  }
  SECTION("quadrature fallback agrees with closed form on a sum") {
    // 1_{B_2} + 1_{B_1} has (L^2)^2 = vol(B_2) + 3 vol(B_1) in R^2
    const auto v = make_weighted_sum(
        {1.0, 1.0}, {make_indicator_ball(2, 1.0, 2.0), make_indicator_ball(2, 1.0, 1.0)});
    const double expect = std::sqrt(4.0 * kPi + 3.0 * kPi);
    CHECK_THAT(lp_norm(v, 2.0).value, Catch::Matchers::WithinRel(expect, 1e-6));
    // singular mixed sum: |x|^{-1/2} 1_{B_1} - 1_{B_1} in R^3 has
    // (L^2)^2 = 4 pi (1/2 - 2/(5/2) + 1/3) = 4 pi / 30
    const auto s = make_weighted_sum(
        {1.0, -1.0}, {make_radial_power(3, 1.0, 0.5, 1.0), make_indicator_ball(3, 1.0, 1.0)});
    CHECK_THAT(lp_norm(s, 2.0).value,
               Catch::Matchers::WithinRel(std::sqrt(4.0 * kPi / 30.0), 1e-7));
    // divergent singular sum is reported as infinite
    const auto dv = make_weighted_sum(
        {1.0, -1.0}, {make_radial_power(3, 1.0, 2.0, 1.0), make_indicator_ball(3, 1.0, 1.0)});
    CHECK(lp_norm(dv, 2.0).value == kInf);
  }
  SECTION("non-radial mixed sums fall back to Cartesian quadrature") {
    // 1_{disc} - 1_{square}: the difference is -1 on the square minus the
    // inscribed disc, so the L^2 norm is sqrt(4 - pi)
    const auto square = make_tensor(
        {make_indicator_ball(1, 1.0, 1.0), make_indicator_ball(1, 1.0, 1.0)});
    const auto v = make_weighted_sum({1.0, -1.0}, {make_indicator_ball(2, 1.0, 1.0), square});
    const auto r = lp_norm(v, 2.0);
    CHECK(r.method == LpNormResult::Method::Quadrature);
    CHECK_THAT(r.value, Catch::Matchers::WithinRel(std::sqrt(4.0 - kPi), 1e-4));
  }
  SECTION("p < 1 rejected") {
    CHECK_THROWS_AS(lp_norm(make_constant(1, 1.0), 0.5), std::invalid_argument);
  }
}

TEST_CASE("sign analysis and decomposition") {
  SECTION("classification") {
    CHECK(sign_class(make_constant(3, 0.0)) == SignClass::Zero);
    CHECK(sign_class(make_indicator_ball(3, -1.0, 1.0)) == SignClass::NonPositive);
    CHECK(sign_class(make_slab(4)) == SignClass::NonPositive);
    // product of two nonpositive factors is nonnegative
    CHECK(sign_class(build_example_5_4(0.5)) == SignClass::NonNegative);
    CHECK(sign_class(build_example_5_3(4)) == SignClass::NonPositive);
    const auto mix = make_weighted_sum(
        {1.0, -2.0}, {make_indicator_ball(2, 1.0, 2.0), make_indicator_ball(2, 1.0, 1.0)});
    CHECK(sign_class(mix) == SignClass::Mixed);
    // negative weights on one-signed terms still resolve
    CHECK(sign_class(make_weighted_sum({-1.0}, {make_indicator_ball(2, 1.0, 1.0)})) ==
          SignClass::NonPositive);
  }
  SECTION("pointwise identity V = V+ - V- on random points") {
    const auto mix = make_weighted_sum(
        {1.0, -2.0, 0.5},
        {make_indicator_ball(3, 1.0, 2.0), make_indicator_ball(3, 1.0, 1.0),
         make_shifted_radial_decay(3, -1.0, 2.0)});
    const auto [pos, neg] = sign_split(mix);
    std::mt19937 rng(991);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 1000; ++i) {
      Point z{u(rng), u(rng), u(rng)};
      const double v = evaluate(mix, z);
      const double vp = evaluate(pos, z);
      const double vm = evaluate(neg, z);
      REQUIRE(vp >= 0.0);
      REQUIRE(vm >= 0.0);
      REQUIRE_THAT(vp - vm, Catch::Matchers::WithinAbs(v, 1e-15));
      REQUIRE(vp * vm == 0.0);
    }
  }
  SECTION("one-signed specs decompose without wrapper nodes") {
    const auto v = build_example_5_3(4);
    const auto [pos, neg] = sign_split(v);
    CHECK(sign_class(pos) == SignClass::Zero);
    CHECK(std::holds_alternative<nodes::WeightedSum>(neg.node));  // negated tensor
    Point z{0.5, 1.0, 0.0, 0.0};
    CHECK(evaluate(neg, z) == -evaluate(v, z));
  }
  SECTION("abs matches |evaluate|") {
    const auto mix = make_weighted_sum(
        {1.0, -2.0}, {make_indicator_ball(2, 1.0, 2.0), make_indicator_ball(2, 1.0, 1.0)});
    const auto a = abs_spec(mix);
    CHECK(evaluate(a, {0.5, 0.0}) == 1.0);
    CHECK(evaluate(a, {1.5, 0.0}) == 1.0);
    CHECK(sign_class(a) == SignClass::NonNegative);
  }
}

TEST_CASE("builders assemble the documented constructions") {
  SECTION("mixed-norm slab family") {
    const auto v = build_example_5_1(3, 2.0);
    REQUIRE(v.dim == 3);
    CHECK(sign_class(v) == SignClass::NonPositive);
    // V(x) = -|x1|^{-1/2} on the unit slab-cylinder
    CHECK_THAT(evaluate(v, {0.25, 0.5, 0.0}), Catch::Matchers::WithinRel(-2.0, 1e-14));
    CHECK(evaluate(v, {0.25, 1.0, 0.5}) == 0.0);
    CHECK_THROWS_AS(build_example_5_1(2, 2.0), std::invalid_argument);
  }
  SECTION("series of near-critical 1-d slabs") {
    const auto v = build_example_5_2(3, 4, {{2, 1.0}, {3, 1.0}, {4, 1.0}});
    CHECK(sign_class(v) == SignClass::NonPositive);
    const double x1 = 0.5;
    double expect = 0.0;
    for (int n = 2; n <= 4; ++n)
      expect -= std::pow(x1, -1.0 + 1.0 / n) / (n * n);
    CHECK_THAT(evaluate(v, {x1, 0.3, 0.0}), Catch::Matchers::WithinRel(expect, 1e-14));
    CHECK(evaluate(v, {x1, 1.2, 0.0}) == 0.0);
    CHECK(lp_norm(v, kInf).value == kInf);  // unbounded near x1 = 0
    CHECK_THROWS_AS(build_example_5_2(3, 5, {{2, 1.0}}), std::invalid_argument);
  }
  SECTION("flat-extended decay potential") {
    const auto v3 = build_example_5_3(3);
    CHECK(std::holds_alternative<nodes::ShiftedRadialDecay>(v3.node));
    CHECK(evaluate(v3, {1.0, 0.0, 0.0}) == -0.125);
    const auto v4 = build_example_5_3(4);
    REQUIRE(v4.dim == 4);
    // constant along the first coordinate
    CHECK(evaluate(v4, {5.0, 1.0, 0.0, 0.0}) == evaluate(v4, {-2.0, 1.0, 0.0, 0.0}));
    CHECK(evaluate(v4, {5.0, 1.0, 0.0, 0.0}) == -0.125);
  }
  SECTION("nonnegative tensor square") {
    const auto v = build_example_5_4(0.5);
    REQUIRE(v.dim == 6);
    CHECK(sign_class(v) == SignClass::NonNegative);
    // (-1/4 * 0.5^{-3/2})^2 = 0.5
    CHECK_THAT(evaluate(v, {0.5, 0.0, 0.0, 0.0, 0.5, 0.0}), Catch::Matchers::WithinRel(0.5, 1e-14));
    CHECK_THROWS_AS(build_example_5_4(1.0), std::invalid_argument);
  }
  SECTION("compact counterexample: dilated truncated slabs") {
    const auto v = build_counterexample_compact(4, {8.0, 16.0});
    // each term contributes 2^{-n} r_n^2 V(r_n x)
    Point z{5.0, 0.5, 0.0, 0.0};
    Point x = (1.0 / 8.0) * z;
    const double t1 = 0.5 * 64.0 * (-1.0 / 5.0);
    const double t2 = 0.25 * 256.0 * (-1.0 / 10.0);
    CHECK_THAT(evaluate(v, x), Catch::Matchers::WithinRel(t1 + t2, 1e-13));
    CHECK(sign_class(v) == SignClass::NonPositive);
    CHECK_THROWS_AS(build_counterexample_compact(4, {3.0}), std::invalid_argument);
  }
}

TEST_CASE("JSON round trip and parse errors") {
  SECTION("canonical round trip for a deep spec") {
    const auto v = build_counterexample_compact(4, {8.0, 16.0});
    const auto j = potential_to_json(v);
    const auto back = parse_potential_json(j);
    CHECK(potential_to_json(back) == j);
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 50; ++i) {
      Point z{u(rng), u(rng), u(rng), u(rng)};
      CHECK(evaluate(back, z) == evaluate(v, z));
    }
  }
  SECTION("every node type survives the trip") {
    std::vector<PotentialSpec> specs{
        make_constant(2, -1.5),
        make_radial_power(3, -1.0, 0.5, 1.0, 0.25),
        make_indicator_ball(3, 2.0, 1.5),
        make_slab(4, 9.0),
        make_shifted_radial_decay(3, -1.0, 3.0),
        build_example_5_1(4, 2.0),
        build_example_5_4(0.25),
        make_positive_part(make_weighted_sum(
            {1.0, -2.0}, {make_indicator_ball(2, 1.0, 2.0), make_indicator_ball(2, 1.0, 1.0)})),
    };
    for (const auto& v : specs) {
      const auto j = potential_to_json(v);
      CHECK(potential_to_json(parse_potential_json(j)) == j);
    }
  }
  SECTION("factor dimension mismatch names the path") {
    nlohmann::json j = {
        {"type", "tensor"},
        {"dim", 4},
        {"factors",
         {{{"type", "constant"}, {"dim", 1}, {"value", -1.0}},
          {{"type", "indicator_ball"}, {"dim", 2}, {"coeff", 1.0}, {"radius", 1.0}}}}};
    try {
      parse_potential_json(j);
      FAIL("expected a parse error");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("/factors") != std::string::npos);
      CHECK(msg.find("3") != std::string::npos);
    }
  }
  SECTION("unknown keys and unknown types are rejected with paths") {
    nlohmann::json j = {{"type", "constant"}, {"dim", 1}, {"value", 1.0}, {"extra", 2.0}};
    CHECK_THROWS_WITH(parse_potential_json(j), Catch::Matchers::ContainsSubstring("extra"));
    nlohmann::json j2 = {{"type", "mystery"}, {"dim", 1}};
    CHECK_THROWS_WITH(parse_potential_json(j2), Catch::Matchers::ContainsSubstring("mystery"));
    nlohmann::json j3 = {
        {"type", "dilate"},
        {"dim", 2},
        {"scale", 2.0},
        {"inner", {{"type", "constant"}, {"dim", 2}, {"value", "oops"}}}};
    CHECK_THROWS_WITH(parse_potential_json(j3), Catch::Matchers::ContainsSubstring("/inner"));
  }
  SECTION("nested weighted-sum term errors carry the full pointer") {
    nlohmann::json j = {{"type", "weighted_sum"},
                        {"dim", 2},
                        {"terms",
                         {{{"weight", 1.0},
                           {"potential", {{"type", "constant"}, {"dim", 2}, {"value", 1.0}}}},
                          {{"weight", 2.0}, {"wrong", 1}}}}};
    CHECK_THROWS_WITH(parse_potential_json(j), Catch::Matchers::ContainsSubstring("/terms/1"));
  }
}

TEST_CASE("radial Gaussian density, ball mass, expectation") {
  QuadratureConfig cfg;
  SECTION("density values against an independent evaluation") {
    CHECK_THAT(radial_gauss_density(3, 1.2, 0.7, 0.35),
               Catch::Matchers::WithinRel(0.80216767192100545, 1e-13));
    CHECK_THAT(radial_gauss_density(5, 2.0, 1.3, 0.6),
               Catch::Matchers::WithinRel(0.62351531370414180, 1e-13));
    CHECK_THAT(radial_gauss_density(2, 0.3, 0.0, 0.25),
               Catch::Matchers::WithinRel(1.0023242536935264, 1e-13));
    // large argument exercises the scaled asymptotic branch
    CHECK_THAT(radial_gauss_density(4, 30.0, 25.0, 1.0),
               Catch::Matchers::WithinRel(1.9533659763587635e-06, 1e-12));
  }
  SECTION("k=1 is the folded two-sided Gaussian") {
    const double m = 0.3, s2 = 0.2, r = 0.5;
    const double s = std::sqrt(s2);
    auto phi = [&](double u) { return std::exp(-0.5 * u * u) / std::sqrt(2.0 * kPi); };
    const double expect = (phi((r - m) / s) + phi((r + m) / s)) / s;
    CHECK_THAT(radial_gauss_density(1, r, m, s2), Catch::Matchers::WithinRel(expect, 1e-13));
  }
  SECTION("densities integrate to one") {
    for (int k : {1, 2, 3, 5, 8}) {
      auto f = [&](double r) { return radial_gauss_density(k, r, 1.1, 0.4); };
      const auto q = integrate(f, 0.0, 1.1 + 10.0 * std::sqrt(0.4), cfg, {1.1});
      CHECK_THAT(q.value, Catch::Matchers::WithinRel(1.0, 1e-9));
    }
  }
  SECTION("ball mass: closed forms and quadrature") {
    CHECK_THAT(radial_gauss_ball_mass(3, 1.2, 0.7, 0.35, cfg),
               Catch::Matchers::WithinRel(0.56636204738579057, 1e-12));
    CHECK_THAT(radial_gauss_ball_mass(5, 2.0, 1.3, 0.6, cfg),
               Catch::Matchers::WithinRel(0.47186654618252115, 1e-9));
    // k=1: plain normal interval probability
    const double m = 0.3, s = std::sqrt(0.2);
    auto Phi = [&](double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); };
    CHECK_THAT(radial_gauss_ball_mass(1, 0.5, m, 0.2, cfg),
               Catch::Matchers::WithinRel(Phi((0.5 - m) / s) - Phi((-0.5 - m) / s), 1e-13));
    // centered k=3 agrees with the chi distribution
    const double R = 1.7, sc = 1.0;
    const double chi3 = std::erf(R / std::sqrt(2.0)) -
                        std::sqrt(2.0 / kPi) * R * std::exp(-0.5 * R * R);
    CHECK_THAT(radial_gauss_ball_mass(3, R, 0.0, sc, cfg), Catch::Matchers::WithinRel(chi3, 1e-12));
    // whole space has mass one
    CHECK_THAT(radial_gauss_ball_mass(3, kInf, 0.7, 0.35, cfg),
               Catch::Matchers::WithinRel(1.0, 1e-12));
  }
  SECTION("expectations: moments and singular profiles") {
    // E|Z|^2 = |m|^2 + k s2 exactly
    for (int k : {1, 3, 6}) {
      const double m = 0.8, s2 = 0.3;
      auto f = [](double r) { return r * r; };
      const auto e = radial_gauss_expectation(k, m, s2, f, 0.0, kInf, 0.0, cfg);
      CHECK_THAT(e.value, Catch::Matchers::WithinRel(m * m + k * s2, 1e-10));
    }
    // Coulomb profile in k=3 has the closed form erf(m/(sqrt 2 s))/m
    {
      const double m = 0.9, s2 = 0.4;
      auto f = [](double r) { return 1.0 / r; };
      const auto e = radial_gauss_expectation(3, m, s2, f, 0.0, kInf, 1.0, cfg);
      CHECK_THAT(e.value, Catch::Matchers::WithinRel(0.93919008501624611, 1e-10));
    }
    // steeper singularity routed through the endpoint substitution
    {
      const double m = 0.9, s2 = 0.4;
      auto f = [](double r) { return std::pow(r, -2.5); };
      const auto e = radial_gauss_expectation(3, m, s2, f, 0.0, kInf, 2.5, cfg);
      CHECK_THAT(e.value, Catch::Matchers::WithinRel(2.4020500187110055, 1e-9));
    }
    // window restriction reproduces the ball mass
    {
      const auto e = radial_gauss_expectation(
          3, 0.7, 0.35, [](double) { return 1.0; }, 0.0, 1.2, 0.0, cfg);
      CHECK_THAT(e.value, Catch::Matchers::WithinRel(0.56636204738579057, 1e-9));
    }
    // non-integrable profile is rejected rather than silently truncated
    {
      auto f = [](double r) { return std::pow(r, -3.0); };
      CHECK_THROWS_AS(radial_gauss_expectation(3, 0.9, 0.4, f, 0.0, kInf, 3.0, cfg),
                      std::domain_error);
    }
  }
}
