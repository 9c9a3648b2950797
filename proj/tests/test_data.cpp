#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "doctest.h"
#include "ktraj/data.hpp"

using namespace ktraj;
namespace fs = std::filesystem;

namespace {

double frame_mse(const FrameSequence& seq, int a, int b) {
  double mse = 0.0;
  const auto* fa = seq.frame(a);
  const auto* fb = seq.frame(b);
  const std::size_t n = static_cast<std::size_t>(seq.h) * seq.w;
  for (std::size_t i = 0; i < n; ++i) mse += std::norm(fa[i] - fb[i]);
  return mse / n;
}

}  // namespace

TEST_CASE("static spec produces identical frames") {
  auto spec = default_phantom_spec(32, 32, 4);
  for (auto& e : spec.ellipses) {
    e.ay = e.ax = 0.0;
    e.pulse = 0.0;
    e.rot_amp = 0.0;
  }
  auto seq = generate_phantom(spec, 42);
  for (int t = 1; t < 4; ++t) CHECK(frame_mse(seq, 0, t) == 0.0);
}

TEST_CASE("generation is deterministic in (spec, seed)") {
  auto spec = default_phantom_spec(32, 32, 4);
  auto a = generate_phantom(spec, 7);
  auto b = generate_phantom(spec, 7);
  CHECK(a.frames == b.frames);
  auto c = generate_phantom(spec, 8);
  CHECK(a.frames != c.frames);
}

TEST_CASE("motion produces periodic frame differences") {
  auto spec = default_phantom_spec(32, 32, 16);
  spec.period = 8.0;
  auto seq = generate_phantom(spec, 3);
  CHECK(frame_mse(seq, 0, 1) > 0.0);
  // one full period later the geometry repeats
  for (int t = 0; t < 8; ++t)
    CHECK(frame_mse(seq, t, t + 8) <= 1e-12);
}

TEST_CASE("magnitude stays in [0, 1]") {
  auto seq = generate_phantom(default_phantom_spec(32, 32, 4), 9);
  for (const auto& v : seq.frames) CHECK(std::abs(v) <= 1.0f + 1e-6f);
  std::mt19937_64 rng(4);
  auto aug = augment(seq, rng);
  for (const auto& v : aug.frames) CHECK(std::abs(v) <= 1.0f + 1e-6f);
}

TEST_CASE("degenerate ellipse rejected") {
  auto spec = default_phantom_spec();
  spec.ellipses[0].ry = 0.0;
  CHECK_THROWS_AS(generate_phantom(spec, 1), ArgumentError);
}

TEST_CASE("empty augmentation plan is the identity") {
  auto seq = generate_phantom(default_phantom_spec(24, 24, 3), 11);
  auto out = apply_augment(seq, AugmentPlan{});
  CHECK(out.frames == seq.frames);
}

TEST_CASE("double horizontal flip is the identity") {
  auto seq = generate_phantom(default_phantom_spec(24, 24, 3), 13);
  AugmentPlan flip;
  flip.hflip = true;
  auto once = apply_augment(seq, flip);
  CHECK(once.frames != seq.frames);
  auto twice = apply_augment(once, flip);
  CHECK(twice.frames == seq.frames);
}

TEST_CASE("augmentations fire with frequency 0.4 +- 0.02") {
  std::mt19937_64 rng(2024);
  int vflips = 0, hflips = 0, rescales = 0, masks = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    auto plan = draw_augment_plan(rng);
    vflips += plan.vflip;
    hflips += plan.hflip;
    rescales += plan.rescale;
    masks += plan.mask;
  }
  for (int count : {vflips, hflips, rescales, masks}) {
    CHECK(count / double(n) >= 0.38);
    CHECK(count / double(n) <= 0.42);
  }
}

TEST_CASE("split sizes follow the floor/remainder rule") {
  auto split = split_dataset(4170, {0.8, 0.175, 0.025}, 1);
  CHECK(split.train.size() == 3336);
  CHECK(split.test.size() == 730);
  CHECK(split.val.size() == 104);

  auto all_train = split_dataset(100, {1.0, 0.0, 0.0}, 1);
  CHECK(all_train.train.size() == 100);
  CHECK(all_train.test.empty());
  CHECK(all_train.val.empty());

  auto desk = split_dataset(200, {0.8, 0.175, 0.025}, 1);
  CHECK(desk.train.size() == 160);
  CHECK(desk.test.size() == 35);
  CHECK(desk.val.size() == 5);
}

TEST_CASE("splits are deterministic, disjoint and covering") {
  auto a = split_dataset(97, {0.8, 0.175, 0.025}, 5);
  auto b = split_dataset(97, {0.8, 0.175, 0.025}, 5);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.val == b.val);

  std::set<int> seen;
  for (const auto* part : {&a.train, &a.test, &a.val})
    for (int i : *part) CHECK(seen.insert(i).second);
  CHECK(seen.size() == 97);
}

TEST_CASE("invalid fractions rejected before any work") {
  CHECK_THROWS_AS(split_dataset(10, {0.5, 0.4, 0.2}, 1), ArgumentError);
  CHECK_THROWS_AS(split_dataset(10, {-0.1, 1.0, 0.1}, 1), ArgumentError);
}

TEST_CASE("sequence round trip is bit-exact") {
  auto seq = generate_phantom(default_phantom_spec(16, 20, 3), 77);
  const auto path = (fs::temp_directory_path() / "ktraj_seq.dseq").string();
  save_sequence(seq, path);
  auto back = load_sequence(path);
  CHECK(back.n_frames == seq.n_frames);
  CHECK(back.h == seq.h);
  CHECK(back.w == seq.w);
  CHECK(back.frames == seq.frames);
  CHECK(back.meta == seq.meta);
  fs::remove(path);
  fs::remove(path + ".json");
}

TEST_CASE("version and truncation errors are structured") {
  auto seq = generate_phantom(default_phantom_spec(8, 8, 2), 1);
  const auto path = (fs::temp_directory_path() / "ktraj_seq_bad.dseq").string();
  save_sequence(seq, path);

  SUBCASE("bad version") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(4);
    const std::uint16_t v = 999;
    f.write(reinterpret_cast<const char*>(&v), 2);
    f.close();
    CHECK_THROWS_WITH_AS(load_sequence(path), doctest::Contains("version"), IoError);
  }
  SUBCASE("short payload") {
    fs::resize_file(path, fs::file_size(path) - 32);
    CHECK_THROWS_WITH_AS(load_sequence(path), doctest::Contains("payload"), IoError);
  }
  fs::remove(path);
  fs::remove(path + ".json");
}

TEST_CASE("directory listing is ordered by filename") {
  const auto dir = fs::temp_directory_path() / "ktraj_seqdir";
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto seq = generate_phantom(default_phantom_spec(8, 8, 2), 2);
  save_sequence(seq, (dir / "seq_002.dseq").string());
  save_sequence(seq, (dir / "seq_000.dseq").string());
  save_sequence(seq, (dir / "seq_001.dseq").string());
  auto files = list_sequence_files(dir.string());
  REQUIRE(files.size() == 3);
  CHECK(files[0].find("seq_000") != std::string::npos);
  CHECK(files[2].find("seq_002") != std::string::npos);
  fs::remove_all(dir);
}
