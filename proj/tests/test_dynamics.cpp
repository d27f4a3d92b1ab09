#include <random>
#include <sstream>

#include "doctest.h"
#include "stlplan/dynamics.hpp"

using namespace stlplan;

namespace {

AxisSeries random_accels(std::mt19937_64& rng, int n, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  AxisSeries a;
  for (auto& axis : a)
    for (int k = 0; k < n; ++k) axis.push_back(u(rng));
  return a;
}

}  // namespace

TEST_CASE("rollout follows the double-integrator recursion") {
  std::mt19937_64 rng(1);
  const State start{Vec3(1, 2, 3), Vec3(-0.5, 0.25, 0)};
  const AxisSeries a = random_accels(rng, 30, 2.0);
  const Trajectory t = rollout(0, start, a, 0.2);
  REQUIRE(t.steps() == 30);
  CHECK(t.position(0) == start.p);
  CHECK(t.velocity(0) == start.v);
  CHECK(consistency_residual(t) < 1e-12);
  for (int k = 0; k < 30; ++k) {
    for (int j = 0; j < 3; ++j) {
      CHECK(t.pos[j][k + 1] == doctest::Approx(t.pos[j][k] + 0.2 * t.vel[j][k] + 0.02 * a[j][k]));
      CHECK(t.vel[j][k + 1] == doctest::Approx(t.vel[j][k] + 0.2 * a[j][k]));
    }
  }
}

TEST_CASE("rollout is affine in start state and inputs") {
  std::mt19937_64 rng(2);
  const AxisSeries a1 = random_accels(rng, 20, 3.0), a2 = random_accels(rng, 20, 3.0);
  const State s1{Vec3(1, 0, 0), Vec3(0, 1, 0)}, s2{Vec3(0, -2, 5), Vec3(1, 1, -1)};
  AxisSeries sum;
  for (int j = 0; j < 3; ++j)
    for (int k = 0; k < 20; ++k) sum[j].push_back(a1[j][k] + a2[j][k]);
  const Trajectory t1 = rollout(0, s1, a1, 0.5), t2 = rollout(0, s2, a2, 0.5);
  const Trajectory t12 = rollout(0, {s1.p + s2.p, s1.v + s2.v}, sum, 0.5);
  for (int k = 0; k <= 20; ++k) {
    CHECK((t12.position(k) - t1.position(k) - t2.position(k)).norm() < 1e-9);
    CHECK((t12.velocity(k) - t1.velocity(k) - t2.velocity(k)).norm() < 1e-9);
  }
}

TEST_CASE("inconsistent trajectories are rejected") {
  std::mt19937_64 rng(3);
  Trajectory t = rollout(0, {}, random_accels(rng, 5, 1.0), 1.0);
  CHECK_NOTHROW(require_consistent(t));
  t.pos[1][3] += 1e-6;
  CHECK_THROWS_AS(require_consistent(t), InconsistentTrajectory);
  t.pos[1].pop_back();
  CHECK_THROWS_AS(consistency_residual(t), InconsistentTrajectory);
}

TEST_CASE("feasibility reports every bound violation") {
  VehicleSpec spec;
  spec.v_max = Vec3(1, 1, 1);
  spec.v_min = Vec3(-1, -1, -1);
  spec.a_max = Vec3(0.5, 0.5, 0.5);
  spec.a_min = Vec3(-0.5, -0.5, -0.5);
  AxisSeries a{std::vector<double>{0.5, 0.5, 0.5}, std::vector<double>{0, 0, 0}, std::vector<double>{-0.7, 0, 0}};
  const Trajectory t = rollout(spec, {}, a, 1.0);
  const FeasibilityReport rep = check_feasible(t, spec);
  CHECK_FALSE(rep.feasible());
  int vel = 0, acc = 0;
  for (const auto& v : rep.violations) {
    if (v.quantity == Quantity::Velocity) {
      ++vel;
      CHECK(v.axis == 0);
      CHECK(v.k == 3);
      CHECK(v.magnitude == doctest::Approx(0.5));
    } else {
      ++acc;
      CHECK(v.axis == 2);
      CHECK(v.k == 0);
      CHECK(v.magnitude == doctest::Approx(0.2));
    }
  }
  CHECK(vel == 1);
  CHECK(acc == 1);
}

TEST_CASE("time grid rounds halves up") {
  CHECK(time_grid(10.0, 1.0).steps == 10);
  CHECK(time_grid(2.5, 1.0).steps == 3);
  CHECK(time_grid(1.0, 0.3).steps == 3);
  CHECK(time_grid(3.0, 0.5).t.back() == doctest::Approx(3.0));
  CHECK_THROWS(time_grid(0.5, 1.0));
  CHECK_THROWS(time_grid(1.0, 0.0));
}

TEST_CASE("trajectory CSV round-trips to nine decimals") {
  std::mt19937_64 rng(4);
  std::vector<Trajectory> trajs{rollout(0, {}, random_accels(rng, 8, 1.0), 0.5),
                                rollout(1, {Vec3(1, 1, 1), Vec3::Zero()}, random_accels(rng, 8, 1.0), 0.5)};
  std::stringstream ss;
  write_trajectory_csv(ss, trajs);
  const std::string text = ss.str();
  CHECK(text.rfind("t,vehicle,px,py,pz,vx,vy,vz,ax,ay,az\n", 0) == 0);
  const auto back = read_trajectory_csv(ss);
  REQUIRE(back.size() == 2);
  CHECK(back[1].vehicle == 1);
  CHECK(back[0].ts == doctest::Approx(0.5));
  for (std::size_t d = 0; d < 2; ++d)
    for (int k = 0; k <= 8; ++k) CHECK((back[d].position(k) - trajs[d].position(k)).norm() < 1e-8);
  std::stringstream again;
  write_trajectory_csv(again, quantized(trajs));
  CHECK(again.str() == text);
}

TEST_CASE("malformed trajectory CSV is rejected") {
  std::stringstream empty;
  CHECK_THROWS_AS(read_trajectory_csv(empty), CsvError);
  std::stringstream header("t,vehicle,px\n");
  CHECK_THROWS_AS(read_trajectory_csv(header), CsvError);
  std::stringstream cols("t,vehicle,px,py,pz,vx,vy,vz,ax,ay,az\n0,1,0,0\n");
  CHECK_THROWS_AS(read_trajectory_csv(cols), CsvError);
  std::stringstream ragged(
      "t,vehicle,px,py,pz,vx,vy,vz,ax,ay,az\n0,1,0,0,0,0,0,0,0,0,0\n0,2,0,0,0,0,0,0,0,0,0\n"
      "1,1,0,0,0,0,0,0,0,0,0\n");
  CHECK_THROWS_AS(read_trajectory_csv(ragged), CsvError);
}
