#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "doctest.h"
#include "ktraj/trajectory.hpp"

using namespace ktraj;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const char* name) {
  auto p = fs::temp_directory_path() / name;
  fs::remove(p);
  return p;
}

}  // namespace

TEST_CASE("radial single horizontal spoke") {
  auto traj = init_radial(1, 1, 3, 0.5);
  const double* p0 = traj.at(0, 0, 0);
  const double* p1 = traj.at(0, 0, 1);
  const double* p2 = traj.at(0, 0, 2);
  CHECK(p0[0] == -0.5);
  CHECK(p0[1] == 0.0);
  CHECK(p1[0] == 0.0);
  CHECK(p1[1] == 0.0);
  CHECK(p2[0] == 0.5);
  CHECK(p2[1] == 0.0);
}

TEST_CASE("radial two spokes at 0 and pi/2") {
  auto traj = init_radial(1, 2, 3, 0.5);
  // second spoke is vertical
  const double* q0 = traj.at(0, 1, 0);
  const double* q2 = traj.at(0, 1, 2);
  CHECK(q0[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(q0[1] == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(q2[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(q2[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("radial frames are identical") {
  auto traj = init_radial(8, 16, 32, 0.5);
  for (int t = 1; t < 8; ++t)
    for (std::size_t i = 0; i < traj.frame_size(); ++i)
      CHECK(traj.frame_data(t)[i] == traj.frame_data(0)[i]);
}

TEST_CASE("spokes pass through the origin at floor(m/2) for odd m") {
  for (int m : {3, 5, 9, 17}) {
    auto rad = init_radial(2, 4, m, 0.5);
    auto gar = init_golden_angle(2, 4, m, 0.5);
    for (const auto* traj : {&rad, &gar}) {
      for (int t = 0; t < 2; ++t) {
        for (int s = 0; s < 4; ++s) {
          const double* p = traj->at(t, s, m / 2);
          CHECK(p[0] == 0.0);
          CHECK(p[1] == 0.0);
        }
      }
    }
  }
}

TEST_CASE("golden angle with one frame equals radial") {
  auto rad = init_radial(1, 5, 8, 0.45);
  auto gar = init_golden_angle(1, 5, 8, 0.45);
  for (std::size_t i = 0; i < rad.coords().size(); ++i)
    CHECK(gar.coords()[i] == rad.coords()[i]);
}

TEST_CASE("golden angle second frame spoke rotated by the increment") {
  auto traj = init_golden_angle(2, 1, 3, 0.5);
  const double ang = kGoldenAngleDeg * kPi / 180.0;
  const double* p = traj.at(1, 0, 2);  // endpoint of the rotated spoke
  CHECK(p[0] == doctest::Approx(0.5 * std::cos(ang)).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5 * std::sin(ang)).epsilon(1e-12));
}

TEST_CASE("invalid dimensions rejected") {
  CHECK_THROWS_AS(init_radial(0, 1, 1, 0.5), ArgumentError);
  CHECK_THROWS_AS(init_radial(1, 1, 1, 0.0), ArgumentError);
  CHECK_THROWS_AS(init_radial(1, 1, 1, 0.6), ArgumentError);
}

TEST_CASE("clone frame copies coordinates without aliasing") {
  auto traj = init_golden_angle(3, 2, 4, 0.5);
  clone_frame_trajectory(0, 1, traj);
  for (std::size_t i = 0; i < traj.frame_size(); ++i)
    CHECK(traj.frame_data(1)[i] == traj.frame_data(0)[i]);

  SUBCASE("identity clone is a no-op") {
    auto before = traj.coords();
    clone_frame_trajectory(2, 2, traj);
    CHECK(traj.coords() == before);
  }
  SUBCASE("mutating the copy leaves the source untouched") {
    auto frame0 = std::vector<double>(traj.frame_data(0),
                                      traj.frame_data(0) + traj.frame_size());
    traj.frame_data(1)[0] = 0.123;
    for (std::size_t i = 0; i < traj.frame_size(); ++i)
      CHECK(traj.frame_data(0)[i] == frame0[i]);
  }
  SUBCASE("out of range indices rejected") {
    CHECK_THROWS_AS(clone_frame_trajectory(0, 3, traj), ArgumentError);
    CHECK_THROWS_AS(clone_frame_trajectory(-1, 0, traj), ArgumentError);
  }
}

TEST_CASE("save/load round trip is bit-exact for random trajectories") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_int_distribution<int> samples(1, 16);
  std::uniform_real_distribution<double> coord(-0.5, 0.5);
  const auto path = temp_file("ktraj_roundtrip.ktrj");
  for (int trial = 0; trial < 25; ++trial) {
    TrajectorySet traj(dim(rng), dim(rng), samples(rng));
    for (auto& c : traj.coords()) c = coord(rng);
    save_trajectory(traj, path.string());
    auto back = load_trajectory(path.string());
    REQUIRE(back.n_frames() == traj.n_frames());
    REQUIRE(back.n_shots() == traj.n_shots());
    REQUIRE(back.m() == traj.m());
    CHECK(std::memcmp(back.coords().data(), traj.coords().data(),
                      traj.coords().size() * sizeof(double)) == 0);
  }
  fs::remove(path);
}

TEST_CASE("truncated trajectory file reports the missing section") {
  auto traj = init_radial(2, 2, 8, 0.5);
  const auto path = temp_file("ktraj_trunc.ktrj");
  save_trajectory(traj, path.string());

  SUBCASE("payload shorter than header shape") {
    const auto full = fs::file_size(path);
    fs::resize_file(path, full - 16);
    CHECK_THROWS_WITH_AS(load_trajectory(path.string()),
                         doctest::Contains("payload shorter"), IoError);
  }
  SUBCASE("header cut off") {
    fs::resize_file(path, 8);
    CHECK_THROWS_WITH_AS(load_trajectory(path.string()),
                         doctest::Contains("truncated header"), IoError);
  }
  SUBCASE("bad magic") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_WITH_AS(load_trajectory(path.string()),
                         doctest::Contains("bad magic"), IoError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_trajectory("/nonexistent/nowhere.ktrj"), IoError);
  }
  fs::remove(path);
}
