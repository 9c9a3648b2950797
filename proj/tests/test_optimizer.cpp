#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ktraj/optimizer.hpp"

using namespace ktraj;
namespace fs = std::filesystem;

namespace {

// independent reference update, written directly from the Adam equations
struct RefAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double x, double g, double lr) {
    t += 1;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    return x - lr * mh / (std::sqrt(vh) + 1e-8);
  }
};

}  // namespace

TEST_CASE("first step from zero state is a bias-corrected unit step") {
  double x = 0.0;
  const double g = 3.7;
  AdamState state(1);
  adam_step(&x, &g, 1, state, 0.01);
  CHECK(x == doctest::Approx(-0.01).epsilon(1e-6));  // -lr * sign(g)

  double y = 0.0;
  const double gneg = -0.002;
  AdamState s2(1);
  adam_step(&y, &gneg, 1, s2, 0.01);
  CHECK(y == doctest::Approx(0.01).epsilon(1e-4));
}

TEST_CASE("zero gradients never move parameters") {
  std::vector<double> x{1.0, -2.0, 3.0};
  std::vector<double> g{0.0, 0.0, 0.0};
  AdamState state(3);
  for (int i = 0; i < 50; ++i) adam_step(x.data(), g.data(), 3, state, 0.1);
  CHECK(x == std::vector<double>{1.0, -2.0, 3.0});
}

TEST_CASE("adam minimizes x^2 from x=1 within 100 steps") {
  double x = 1.0;
  AdamState state(1);
  RefAdam ref;
  double xr = 1.0;
  for (int i = 0; i < 100; ++i) {
    const double g = 2.0 * x;
    adam_step(&x, &g, 1, state, 0.1);
    xr = ref.step(xr, 2.0 * xr, 0.1);
    CHECK(x == doctest::Approx(xr).epsilon(1e-12));  // matches the reference path
  }
  CHECK(std::abs(x) < 0.05);
}

TEST_CASE("adam converges on shifted quadratics") {
  double x = 0.0;
  AdamState state(1);
  for (int i = 0; i < 500; ++i) {
    const double g = 2.0 * (x - 3.0);
    adam_step(&x, &g, 1, state, 0.05);
  }
  CHECK(std::abs(x - 3.0) <= 0.15);  // within 5% of the optimum
}

TEST_CASE("trajectory learning-rate schedule values") {
  auto sched = LrSchedule::make(0.2, 0.7, 3, LrDecayKind::MultiplicativeStep, 315);
  CHECK(sched.at_epoch(0) == doctest::Approx(0.2));
  CHECK(sched.at_epoch(2) == doctest::Approx(0.2));  // below the first period
  CHECK(sched.at_epoch(3) == doctest::Approx(0.14));
  CHECK(sched.at_epoch(6) == doctest::Approx(0.098));
}

TEST_CASE("reconstruction schedule: multiplicative (1 - 5e-3) every 30 epochs") {
  auto sched = LrSchedule::make(1e-4, 0.995, 30, LrDecayKind::MultiplicativeStep, 315);
  CHECK(sched.at_epoch(29) == doctest::Approx(1e-4));
  CHECK(sched.at_epoch(30) == doctest::Approx(9.95e-5));
  CHECK(sched.at_epoch(60) == doctest::Approx(1e-4 * 0.995 * 0.995));
}

TEST_CASE("schedules reaching non-positive rates are rejected at construction") {
  CHECK_THROWS_AS(LrSchedule::make(1e-4, 5e-3, 30, LrDecayKind::SubtractiveStep, 315),
                  ConfigError);
  CHECK_THROWS_AS(LrSchedule::make(0.0, 0.7, 3, LrDecayKind::MultiplicativeStep, 10),
                  ConfigError);
  CHECK_THROWS_AS(LrSchedule::make(0.1, 0.7, 0, LrDecayKind::MultiplicativeStep, 10),
                  ConfigError);
  // a subtractive schedule that stays positive over its horizon is fine
  auto ok = LrSchedule::make(1.0, 0.1, 10, LrDecayKind::SubtractiveStep, 50);
  CHECK(ok.at_epoch(50) == doctest::Approx(0.5));
}

TEST_CASE("reset restores fresh-optimizer behavior and leaves peers untouched") {
  double x = 1.0, y = 1.0;
  AdamState a(1), b(1);
  const double g = 0.5;
  for (int i = 0; i < 10; ++i) {
    adam_step(&x, &g, 1, a, 0.01);
    adam_step(&y, &g, 1, b, 0.01);
  }
  const auto b_m = b.m;
  const auto b_step = b.step;
  reset_state(a);
  CHECK(a.step == 0);
  CHECK(a.m == std::vector<double>{0.0});
  CHECK(a.v == std::vector<double>{0.0});
  CHECK(b.m == b_m);      // group isolation
  CHECK(b.step == b_step);

  // first step after reset equals a fresh optimizer's first step
  double x1 = 5.0, x2 = 5.0;
  AdamState fresh(1);
  adam_step(&x1, &g, 1, a, 0.01);
  adam_step(&x2, &g, 1, fresh, 0.01);
  CHECK(x1 == x2);
}

TEST_CASE("optimizer state round-trips through the OPTM container") {
  AdamState state(4);
  std::vector<double> x{1, 2, 3, 4}, g{0.1, -0.2, 0.3, -0.4};
  for (int i = 0; i < 5; ++i) adam_step(x.data(), g.data(), 4, state, 0.01);
  const auto path = (fs::temp_directory_path() / "ktraj_state.optm").string();
  save_adam(state, path);
  auto back = load_adam(path);
  CHECK(back.m == state.m);
  CHECK(back.v == state.v);
  CHECK(back.step == state.step);
  fs::remove(path);
}
