#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "bridgepot/supsearch.hpp"

using namespace bridgepot;
using Catch::Approx;

namespace {

// geometric ladder at scales 1, 2, 4, ... carrying the given values
std::vector<TrendPoint> ladder_of(std::initializer_list<double> values) {
  std::vector<TrendPoint> out;
  double s = 1.0;
  for (double v : values) {
    out.push_back({s, v});
    s *= 2.0;
  }
  return out;
}

SupHandle kOccupation(const PotentialSpec& V) {
  return [&V](double t, const Point& x, const Point& y) { return S_bridge(V, t, x, y).value; };
}

}  // namespace

TEST_CASE("trend classifier recognizes the canonical ladder shapes", "[supsearch]") {
  SECTION("flat ladder is bounded") {
    const auto t = classify_trend(ladder_of({1, 1, 1, 1, 1, 1, 1, 1}), 0, 0);
    CHECK(t.verdict == Verdict::Bounded);
    CHECK(t.law == GrowthLaw::Constant);
  }
  SECTION("constant increments per doubling read as logarithmic growth") {
    const auto t = classify_trend(ladder_of({1, 2, 3, 4, 5, 6, 7, 8}), 0, 0);
    CHECK(t.verdict == Verdict::DivergentTrend);
    CHECK(t.law == GrowthLaw::Logarithmic);
  }
  SECTION("geometric values recover the power exponent") {
    const auto t1 = classify_trend(ladder_of({1, 2, 4, 8, 16, 32, 64, 128}), 0, 0);
    CHECK(t1.verdict == Verdict::DivergentTrend);
    CHECK(t1.law == GrowthLaw::Power);
    CHECK(t1.exponent == Approx(1.0).margin(1e-9));

    std::vector<TrendPoint> half;
    for (int k = 0; k < 9; ++k) half.push_back({std::pow(2.0, k), std::pow(2.0, 0.5 * k)});
    const auto t2 = classify_trend(std::move(half), 0, 0);
    CHECK(t2.verdict == Verdict::DivergentTrend);
    CHECK(t2.law == GrowthLaw::Power);
    CHECK(t2.exponent == Approx(0.5).margin(1e-9));
  }
  SECTION("increments that collapse below a tenth of the first are bounded") {
    const auto t = classify_trend(ladder_of({1, 2, 2.5, 2.7, 2.8, 2.85, 2.89, 2.92}), 0, 0);
    CHECK(t.verdict == Verdict::Bounded);
  }
  SECTION("steadily decelerating increments sum to a finite limit") {
    std::vector<TrendPoint> l;
    double s = 1.0, v = 0.0;
    for (int k = 1; k <= 10; ++k) {
      v += 1.0 / (k * k);
      l.push_back({s, v});
      s *= 2.0;
    }
    const auto t = classify_trend(std::move(l), 0, 0);
    CHECK(t.verdict == Verdict::Bounded);
    CHECK(t.law == GrowthLaw::Constant);
  }
  SECTION("iterated-log growth keeps its divergent verdict despite deceleration") {
    std::vector<TrendPoint> l;
    double s = 4.0;
    for (int k = 0; k < 11; ++k, s *= 2.0) l.push_back({s, std::log(std::log(s))});
    const auto t = classify_trend(std::move(l), 0, 0);
    CHECK(t.verdict == Verdict::DivergentTrend);
  }
  SECTION("a dip in the ladder is inconclusive") {
    const auto t = classify_trend(ladder_of({1, 2, 1.5, 3, 4, 5, 6, 7}), 0, 0);
    CHECK(t.verdict == Verdict::Inconclusive);
  }
  SECTION("more than a fifth of probes failing is inconclusive") {
    const auto t = classify_trend(ladder_of({1, 2, 4, 8, 16, 32, 64}), 3, 10);
    CHECK(t.verdict == Verdict::Inconclusive);
    CHECK(t.failures == 3);
    CHECK(t.probes == 10);
  }
}

TEST_CASE("ladder probe rejects bad specs and absorbs throwing handles", "[supsearch]") {
  const auto ok = [](double s) { return s; };
  CHECK_THROWS_AS(divergence_probe(ok, {1.0, 2.0, 4}), Error);
  CHECK_THROWS_AS(divergence_probe(ok, {0.0, 2.0, 8}), Error);
  CHECK_THROWS_AS(divergence_probe(ok, {1.0, 1.0, 8}), Error);

  const auto t = divergence_probe([](double) -> double { throw Error("boom"); }, {1.0, 2.0, 6});
  CHECK(t.verdict == Verdict::Inconclusive);
  CHECK(t.failures == 6);
  CHECK(t.ladder.empty());
}

TEST_CASE("truncation ladder of the slab proxy grows like a logarithm", "[supsearch]") {
  const auto V = build_counterexample_slab(4);
  const Point x = Point::zero(4);
  Point y = Point::zero(4);
  y[0] = 1.0;
  const auto t = divergence_probe(
      [&](double R) { return K_functional(V, x, y, {}, R).value; }, {64.0, 2.0, 8});
  CHECK(t.verdict == Verdict::DivergentTrend);
  CHECK(t.law == GrowthLaw::Logarithmic);
  CHECK(t.ladder.size() == 8);
}

TEST_CASE("time ladder of the lattice-of-shells potential levels off", "[supsearch]") {
  const auto V = build_example_5_3(4);
  const Point o = Point::zero(4);
  const auto t =
      divergence_probe([&](double s) { return S_bridge(V, s, o, o).value; }, {1.0, 2.0, 11});
  CHECK(t.verdict == Verdict::Bounded);
  CHECK(t.ladder.size() == 11);
}

TEST_CASE("search on a constant potential rides the time border", "[supsearch]") {
  const auto V = make_constant(3, 2.0);
  auto dom = make_default_domain(V);
  dom.t_min = 1e-2;
  dom.t_max = 2.0;
  SearchConfig sc;
  sc.n_starts = 4;
  sc.max_iterations = 40;
  const auto res = sup_search(kOccupation(V), dom, sc);

  CHECK(res.sup_estimate == Approx(4.0).epsilon(1e-8));
  CHECK(res.arg_t == Approx(2.0).epsilon(1e-8));
  CHECK(res.verdict == Verdict::DivergentTrend);
  CHECK(res.trend.law == GrowthLaw::Power);
  CHECK(res.trend.exponent == Approx(1.0).margin(1e-6));
  CHECK(res.failures == 0);
  CHECK(res.evaluations > 0);
}

TEST_CASE("radius ladder of the slab inverse-Laplacian flattens out", "[supsearch]") {
  const auto V = build_counterexample_slab(4);
  auto dom = make_default_domain(V, SearchDomain::TimeMode::Free, false);
  SearchConfig sc;
  sc.n_starts = 2;
  sc.max_iterations = 30;
  const auto res = sup_search(
      [&](double, const Point& x, const Point&) { return newtonian_potential(V, x).value; }, dom,
      sc);

  // the half-space mass tops out at 1/2; probes run out to radius 1024
  CHECK(res.sup_estimate == Approx(0.5).margin(2e-6));
  CHECK(res.verdict == Verdict::Bounded);
  CHECK(res.trend.law == GrowthLaw::Constant);
  CHECK(res.trend.ladder.size() == 7);
}

TEST_CASE("searches repeat bitwise and refresh monotonically under more starts", "[supsearch]") {
  const auto V = build_example_5_3(3);
  auto dom = make_default_domain(V);
  dom.t_min = 1e-2;
  dom.t_max = 10.0;
  SearchConfig few;
  few.n_starts = 3;
  few.max_iterations = 30;

  const auto a = sup_search(kOccupation(V), dom, few);
  const auto b = sup_search(kOccupation(V), dom, few);
  CHECK(a.sup_estimate == b.sup_estimate);
  CHECK(a.arg_t == b.arg_t);
  CHECK(a.evaluations == b.evaluations);
  for (int i = 0; i < 3; ++i) {
    CHECK(a.arg_x[i] == b.arg_x[i]);
    CHECK(a.arg_y[i] == b.arg_y[i]);
  }

  SearchConfig more = few;
  more.n_starts = 6;
  const auto c = sup_search(kOccupation(V), dom, more);
  CHECK(c.sup_estimate >= a.sup_estimate - 1e-12);
  CHECK(c.n_starts == 6);
}

TEST_CASE("worker threads do not change the search result", "[supsearch]") {
  const auto V = make_indicator_ball(3, -1.0, 1.0);
  auto dom = make_default_domain(V);
  dom.t_min = 0.05;
  dom.t_max = 5.0;
  SearchConfig one;
  one.n_starts = 4;
  one.max_iterations = 30;
  SearchConfig two = one;
  two.threads = 2;

  const auto a = sup_search(kOccupation(V), dom, one);
  const auto b = sup_search(kOccupation(V), dom, two);
  CHECK(a.sup_estimate == b.sup_estimate);
  CHECK(a.arg_t == b.arg_t);
}

TEST_CASE("halving the pair domain by symmetry keeps the optimum", "[supsearch]") {
  const auto V = make_indicator_ball(3, -1.0, 1.0);
  auto dom = make_default_domain(V, SearchDomain::TimeMode::Fixed, true);
  dom.t_fixed = 1.0;
  SearchConfig sc;
  sc.n_starts = 4;
  sc.max_iterations = 40;

  dom.swap_symmetric = true;
  const auto sym = sup_search(kOccupation(V), dom, sc);
  dom.swap_symmetric = false;
  const auto full = sup_search(kOccupation(V), dom, sc);

  // both must see the center pair, whose value is the frozen reference
  CHECK(sym.sup_estimate >= 0.632120558828557678 - 2e-7);
  CHECK(full.sup_estimate >= 0.632120558828557678 - 2e-7);
  CHECK(sym.sup_estimate == Approx(full.sup_estimate).margin(1e-3));
}

TEST_CASE("search rejects malformed domains and configs", "[supsearch]") {
  const SupHandle h = [](double, const Point&, const Point&) { return 0.0; };
  SearchDomain dom;
  dom.dim = 0;
  CHECK_THROWS_AS(sup_search(h, dom, {}), Error);
  dom.dim = 2;
  dom.t_min = -1.0;
  CHECK_THROWS_AS(sup_search(h, dom, {}), Error);
  dom.t_min = 2.0;
  dom.t_max = 1.0;
  CHECK_THROWS_AS(sup_search(h, dom, {}), Error);
  dom.t_max = 4.0;
  SearchConfig sc;
  sc.n_starts = 0;
  CHECK_THROWS_AS(sup_search(h, dom, sc), Error);
}

TEST_CASE("fixed-time profile of a constant potential is linear", "[supsearch]") {
  const auto V = make_constant(2, 3.0);
  SearchConfig sc;
  sc.n_starts = 2;
  sc.max_iterations = 15;
  CHECK(f_of_t(V, 0.5, sc) == Approx(1.5).epsilon(1e-9));
  CHECK(F_of_t(V, 0.5, sc) == Approx(1.5).epsilon(1e-9));
  CHECK_THROWS_AS(f_of_t(V, 0.0), Error);

  // the running max can only sit above the pointwise profile
  const double f = f_of_t(V, 0.3, sc);
  const double F = F_of_t(V, 0.3, sc);
  CHECK(F >= f - 1e-12);
}

TEST_CASE("resolvent search at zero shift recovers the static mass", "[supsearch]") {
  const auto V = make_indicator_ball(3, 1.0, 1.0);
  SearchConfig sc;
  sc.n_starts = 2;
  sc.max_iterations = 15;

  // at lambda = 0 the sup over shifts collapses onto the ball's potential
  // peak at the center, 1/(2(d-2)) = 1/2
  const auto zero = e_star(V, 0.0, sc);
  CHECK(zero.value == Approx(0.5).margin(2e-3));
  CHECK(zero.converged);

  const auto damped = e_star(V, 2.0, sc);
  CHECK(damped.value < zero.value);
  CHECK(damped.value > 0.0);

  CHECK_THROWS_AS(e_star(V, -1.0, sc), Error);
}

TEST_CASE("search results serialize with the full trend record", "[supsearch]") {
  const auto V = make_constant(2, 1.0);
  auto dom = make_default_domain(V);
  dom.t_min = 0.1;
  dom.t_max = 1.0;
  SearchConfig sc;
  sc.n_starts = 2;
  sc.max_iterations = 15;
  const auto res = sup_search(kOccupation(V), dom, sc);

  const auto j = to_json(res);
  CHECK(j.at("sup_estimate").get<double>() == res.sup_estimate);
  CHECK(j.at("verdict").get<std::string>() == verdict_name(res.verdict));
  CHECK(j.at("arg").at("x").size() == 2);
  CHECK(j.at("arg").at("y").size() == 2);
  CHECK(j.at("trend").at("law").get<std::string>() == growth_law_name(res.trend.law));
  CHECK(j.at("trend").at("ladder").size() == res.trend.ladder.size());
  CHECK(j.at("seed").get<long>() == res.seed);
  CHECK(j.at("n_starts").get<int>() == res.n_starts);
}
