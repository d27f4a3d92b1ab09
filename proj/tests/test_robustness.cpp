#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "stlplan/robustness.hpp"

using namespace stlplan;
using namespace stlplan::stl;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> flatten(const Signal& s) {
  std::vector<double> x;
  for (const auto& v : s.vehicles) {
    for (int j = 0; j < 3; ++j) x.insert(x.end(), v.pos[j].begin(), v.pos[j].end());
    for (int j = 0; j < 3; ++j) x.insert(x.end(), v.vel[j].begin(), v.vel[j].end());
  }
  return x;
}

Signal unflatten(const Signal& shape, const std::vector<double>& x) {
  Signal s = shape;
  std::size_t i = 0;
  for (auto& v : s.vehicles) {
    for (int j = 0; j < 3; ++j)
      for (double& e : v.pos[j]) e = x[i++];
    for (int j = 0; j < 3; ++j)
      for (double& e : v.vel[j]) e = x[i++];
  }
  return s;
}

std::vector<double> flatten(const SignalGradient& g) {
  std::vector<double> x;
  for (std::size_t d = 0; d < g.pos.size(); ++d) {
    for (int j = 0; j < 3; ++j) x.insert(x.end(), g.pos[d][j].begin(), g.pos[d][j].end());
    for (int j = 0; j < 3; ++j) x.insert(x.end(), g.vel[d][j].begin(), g.vel[d][j].end());
  }
  return x;
}

}  // namespace

TEST_CASE("soft extrema bracket the hard extrema") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-50, 50);
  for (double beta : {0.5, 2.0, 10.0, 100.0}) {
    for (int m = 1; m <= 20; ++m) {
      std::vector<double> r(m);
      for (double& e : r) e = u(rng);
      const double hi = *std::max_element(r.begin(), r.end());
      const double lo = *std::min_element(r.begin(), r.end());
      const double slack = std::log(static_cast<double>(m)) / beta + 1e-12;
      const double smax = lse_max(r, beta);
      const double smin = lse_min(r, beta);
      CHECK(smax >= hi - 1e-12);
      CHECK(smax <= hi + slack);
      CHECK(smin <= lo + 1e-12);
      CHECK(smin >= lo - slack);
    }
  }
}

TEST_CASE("soft extrema stay finite for large arguments") {
  const std::vector<double> r{1e6, 1e6 - 1.0, -1e6};
  CHECK(std::isfinite(lse_max(r, 1000.0)));
  CHECK(lse_max(r, 1000.0) == doctest::Approx(1e6));
  CHECK(lse_min(r, 1000.0) == doctest::Approx(-1e6));
}

TEST_CASE("soft extrema weights sum to one and skip infinities") {
  const std::vector<double> r{1.0, kInf, 2.0};
  std::vector<double> w(3);
  const double v = lse_min(r, 5.0, w);
  CHECK(std::isfinite(v));
  CHECK(w[1] == 0.0);
  CHECK(w[0] + w[2] == doctest::Approx(1.0));
  CHECK(w[0] > w[2]);
  CHECK(lse_max(r, 5.0) == kInf);
  const std::vector<double> none{kInf, kInf};
  CHECK(lse_min(none, 5.0) == kInf);
}

TEST_CASE("smoothed robustness is within the composed log bound") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Formula phi = oracle::random_formula(rng, 2, 3);
    const Signal s = oracle::random_signal(rng, 2, horizon(phi) + 1);
    const double exact = rho(phi, s);
    if (!std::isfinite(exact)) continue;
    const double beta = 20.0;
    const double bound = minmax_depth(phi) * std::log(std::max(2, max_fanin(phi))) / beta;
    CAPTURE(print(phi));
    CHECK(std::abs(rho_smooth(phi, s, 0, beta) - exact) <= bound + 1e-9);
  }
}

TEST_CASE("the sign of robustness decides satisfaction") {
  std::mt19937_64 rng(5);
  int positive = 0, negative = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const Formula phi = oracle::random_formula(rng, 3, 3);
    const Signal s = oracle::random_signal(rng, 3, horizon(phi) + 1);
    const double r = rho(phi, s);
    CAPTURE(print(phi));
    if (r > 0) {
      ++positive;
      CHECK(eval_bool(phi, s));
    } else if (r < 0) {
      ++negative;
      CHECK_FALSE(eval_bool(phi, s));
    }
  }
  CHECK(positive > 50);
  CHECK(negative > 50);
}

TEST_CASE("exact robustness of simple predicates") {
  Signal s;
  s.vehicles.resize(2);
  for (int j = 0; j < 3; ++j) {
    s.vehicles[0].pos[j] = {0.0};
    s.vehicles[0].vel[j] = {0.0};
    s.vehicles[1].pos[j] = {j == 0 ? 3.0 : 0.0};
    s.vehicles[1].vel[j] = {j == 1 ? 4.0 : 0.0};
  }
  s.vehicles[1].vel[0] = {3.0};
  CHECK(rho(Formula::atom(AxisBand{1, 0, 1.0, 10.0, false}), s) == doctest::Approx(2.0));
  CHECK(rho(Formula::atom(AxisBand{1, 0, 1.0, 10.0, true}), s) == doctest::Approx(-2.0));
  CHECK(rho(Formula::atom(PairDistance{0, 1, 1.0}), s) == doctest::Approx(2.0));
  CHECK(rho(Formula::atom(SpeedBand{1, 4.0, 6.0}), s) == doctest::Approx(1.0));
  SegmentDistanceBand seg{0, 0, Vec3(0, 1, -5), Vec3(0, 1, 5), 0.5, 2.5};
  CHECK(rho(Formula::atom(seg), s) == doctest::Approx(0.5));
}

TEST_CASE("analytic gradient matches central differences") {
  std::mt19937_64 rng(17);
  int checked = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const Formula phi = oracle::random_formula(rng, 2, 3);
    const Signal s = oracle::random_signal(rng, 2, horizon(phi) + 1);
    const double beta = 4.0;
    const SmoothValue sv = grad_rho_smooth(phi, s, 0, beta);
    if (!std::isfinite(sv.value)) continue;
    CHECK(sv.value == doctest::Approx(rho_smooth(phi, s, 0, beta)));
    const auto numeric = oracle::central_differences(
        [&](const std::vector<double>& x) { return rho_smooth(phi, unflatten(s, x), 0, beta); }, flatten(s), 1e-6);
    CAPTURE(print(phi));
    CHECK(oracle::relative_max_error(flatten(sv.gradient), numeric) < 1e-4);
    ++checked;
  }
  CHECK(checked >= 100);
}

TEST_CASE("reusable evaluator agrees with the one-shot gradient") {
  std::mt19937_64 rng(23);
  const Formula phi = oracle::random_formula(rng, 2, 4);
  SmoothEvaluator ev(phi);
  for (int i = 0; i < 5; ++i) {
    const Signal s = oracle::random_signal(rng, 2, horizon(phi) + 3);
    SignalGradient g = SignalGradient::zeros_like(s);
    const double v = ev.value_and_gradient(s, 1, 6.0, g);
    const SmoothValue ref = grad_rho_smooth(phi, s, 1, 6.0);
    CHECK(v == doctest::Approx(ref.value));
    CHECK(ev.value(s, 1, 6.0) == doctest::Approx(ref.value));
    const auto a = flatten(g), b = flatten(ref.gradient);
    CHECK(oracle::relative_max_error(a, b) < 1e-12);
  }
}

TEST_CASE("fan-in and depth of a two-sided band") {
  const Formula band = Formula::atom(AxisBand{0, 0, 0.0, 1.0, false});
  CHECK(max_fanin(band) == 2);
  CHECK(minmax_depth(band) == 1);
  const Formula g = Formula::always({0, 4}, band);
  CHECK(max_fanin(g) == 5);
  CHECK(minmax_depth(g) == 2);
}

TEST_CASE("report lists subformula values") {
  std::mt19937_64 rng(29);
  const Formula phi = Formula::conjunction({Formula::always({0, 2}, Formula::atom(SpeedBand{0, 0.0, 100.0})),
                                            Formula::eventually({0, 2}, Formula::atom(AxisBand{0, 0, -1, 1, false}))});
  const Signal s = oracle::random_signal(rng, 1, 4);
  const RobustnessReport rep = robustness_report(phi, s, 0, 10.0);
  CHECK(rep.rho == doctest::Approx(rho(phi, s)));
  CHECK(rep.verdict == eval_bool(phi, s));
  REQUIRE(rep.breakdown.size() >= 3);
  CHECK(rep.breakdown.front().path == "root");
  CHECK(first_nonfinite_path(phi, s, 0).empty());
  CHECK(rho_series(phi.child(0), s).size() == 2);
}
