#include <cmath>
#include <random>

#include "doctest.h"
#include "ktraj/kinematics.hpp"
#include "oracle_projection.hpp"

using namespace ktraj;

namespace {

// Limits whose derived bounds are exactly (v, a): with gamma = fov = dt = 1,
// v_max = g_max * 1e-3 and a_max = s_max.
KinematicLimits synthetic_limits(double v, double a) {
  KinematicLimits lim;
  lim.g_max = v * 1e3;
  lim.s_max = a;
  lim.dt = 1.0;
  lim.gamma = 1.0;
  lim.fov = 1.0;
  return lim;
}

TrajectorySet single_shot(const std::vector<double>& xy) {
  TrajectorySet traj(1, 1, static_cast<int>(xy.size() / 2));
  traj.coords() = xy;
  return traj;
}

}  // namespace

TEST_CASE("difference bounds from the paper's machine constraints") {
  KinematicLimits lim;  // defaults: 40 mT/m, 200 T/m/s, 10 us, proton, 0.3 m
  auto [v, a] = difference_bounds(lim);
  // independent arithmetic: 42.576e6 * 0.040 * 1e-5 * 0.3
  CHECK(v == doctest::Approx(5.10912).epsilon(1e-12));
  // 42.576e6 * 200 * (1e-5)^2 * 0.3
  CHECK(a == doctest::Approx(0.255456).epsilon(1e-12));
}

TEST_CASE("bound homogeneity in dwell time") {
  KinematicLimits lim;
  auto [v1, a1] = difference_bounds(lim);
  lim.dt *= 2.0;
  auto [v2, a2] = difference_bounds(lim);
  CHECK(v2 == doctest::Approx(2.0 * v1).epsilon(1e-14));
  CHECK(a2 == doctest::Approx(4.0 * a1).epsilon(1e-14));
}

TEST_CASE("vanishing gradient amplitude collapses the speed bound") {
  KinematicLimits lim;
  lim.g_max = 1e-12;
  auto [v, a] = difference_bounds(lim);
  CHECK(v < 1e-12);
  CHECK(v > 0.0);
  lim.g_max = 0.0;
  CHECK_THROWS_AS(difference_bounds(lim), ArgumentError);
}

TEST_CASE("audit: stationary trajectory is feasible for any positive limits") {
  TrajectorySet traj(2, 3, 16);
  for (auto& c : traj.coords()) c = 0.25;
  auto report = audit(traj, synthetic_limits(1e-9, 1e-9));
  CHECK(report.feasible);
  CHECK(report.max_speed_violation == 0.0);
  CHECK(report.max_accel_violation == 0.0);
}

TEST_CASE("audit: constructed speed violation is measured exactly") {
  const double v = 0.01;
  // straight spoke with step length 1.5 * v
  std::vector<double> xy;
  for (int i = 0; i < 4; ++i) {
    xy.push_back(-0.3 + 1.5 * v * i);
    xy.push_back(0.0);
  }
  auto traj = single_shot(xy);
  auto report = audit(traj, synthetic_limits(v, 1.0));
  CHECK_FALSE(report.feasible);
  CHECK(report.max_speed_violation == doctest::Approx(0.5 * v).epsilon(1e-12));
  CHECK(report.per_shot_worst.size() == 1);
  CHECK(report.per_shot_worst[0].kind == ViolationKind::Speed);
}

TEST_CASE("projection leaves a feasible trajectory untouched") {
  auto traj = init_radial(2, 4, 16, 0.45);
  auto lim = synthetic_limits(1.0, 1.0);  // generous bounds
  REQUIRE(audit(traj, lim).feasible);
  auto out = project_feasible(traj, lim, 50);
  for (std::size_t i = 0; i < traj.coords().size(); ++i)
    CHECK(out.coords()[i] == traj.coords()[i]);
}

TEST_CASE("two-point shot with gap 2*v_max halves symmetrically") {
  const double v = 0.1;
  auto traj = single_shot({-v, 0.0, v, 0.0});  // gap 2v centered at origin
  auto out = project_feasible(traj, synthetic_limits(v, 1.0), 200);
  const double* p0 = out.at(0, 0, 0);
  const double* p1 = out.at(0, 0, 1);
  CHECK(p1[0] - p0[0] == doctest::Approx(v).epsilon(1e-9));
  CHECK(p0[0] + p1[0] == doctest::Approx(0.0).epsilon(1e-12));  // midpoint preserved
  CHECK(p0[1] == doctest::Approx(0.0));
  CHECK(p1[1] == doctest::Approx(0.0));
}

TEST_CASE("projection output audits feasible and is idempotent") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> coord(-0.4, 0.4);
  auto lim = synthetic_limits(0.08, 0.03);
  for (int trial = 0; trial < 30; ++trial) {
    TrajectorySet traj(1, 2, 24);
    for (auto& c : traj.coords()) c = coord(rng);
    ProjectionInfo info;
    auto out = project_feasible(traj, lim, 200, &info);
    CHECK(audit(out, lim, 1e-6).feasible);
    CHECK(info.converged);

    auto twice = project_feasible(out, lim, 200);
    double diff = 0.0;
    for (std::size_t i = 0; i < out.coords().size(); ++i)
      diff = std::max(diff, std::abs(twice.coords()[i] - out.coords()[i]));
    CHECK(diff <= 1e-9);
  }
}

TEST_CASE("per-cycle violation trace is monotone non-increasing") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-0.4, 0.4);
  TrajectorySet traj(1, 1, 32);
  for (auto& c : traj.coords()) c = coord(rng);
  ProjectionInfo info;
  project_feasible(traj, synthetic_limits(0.05, 0.02), 100, &info);
  for (std::size_t i = 1; i < info.violation_trace.size(); ++i)
    CHECK(info.violation_trace[i] <= info.violation_trace[i - 1] + 1e-15);
}

TEST_CASE("tiny instances match the penalty-method projection oracle") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> coord(-0.3, 0.3);
  std::uniform_real_distribution<double> vdist(0.05, 0.15);
  std::uniform_real_distribution<double> adist(0.01, 0.05);
  for (int trial = 0; trial < 8; ++trial) {
    const int m = 8;
    std::vector<double> x(2 * m);
    for (auto& c : x) c = coord(rng);
    const double v = vdist(rng), a = adist(rng);

    auto traj = single_shot(x);
    auto out = project_feasible(traj, synthetic_limits(v, a), 2000);
    const double d_impl = oracle::dist(out.coords(), x);

    oracle::ShotProblem prob{m, v, a};
    const auto y = oracle::project(prob, x);
    REQUIRE(oracle::max_rel_violation(prob, y) <= 1e-9);
    const double d_oracle = oracle::dist(y, x);

    CHECK(d_impl <= d_oracle + 1e-4);
    CHECK(std::abs(d_impl - d_oracle) <= 1e-4);
  }
}

TEST_CASE("gradient passthrough is the identity") {
  auto traj = init_radial(1, 1, 4, 0.4);
  std::vector<double> g{1.0, -2.0, 3.0, 0.5, 0.0, -1.0, 2.5, 4.0};
  auto out = project_gradient_passthrough(g, traj, traj);
  CHECK(out == g);
}
