#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "ktraj/reconmodel.hpp"

using namespace ktraj;
namespace fs = std::filesystem;

namespace {

ReconInput random_input(std::mt19937_64& rng, int nf, int h, int w) {
  std::normal_distribution<double> d(0.0, 1.0);
  ReconInput in(nf, h, w);
  for (auto& v : in.v) v = d(rng);
  return in;
}

std::size_t expected_param_count(const ArchConfig& cfg) {
  const int cin0 = 2 * (2 * cfg.temporal_radius + 1);
  auto ch = [&](int j) { return cfg.base_channels << j; };
  std::size_t n = 0;
  auto conv = [&](int cout, int cin, int k) { n += std::size_t(cout) * cin * k * k + cout; };
  conv(ch(0), cin0, 3);
  for (int j = 1; j < cfg.scales; ++j) conv(ch(j), ch(j - 1), 3);
  conv(ch(cfg.scales - 1), ch(cfg.scales - 1), 3);
  for (int j = cfg.scales - 2; j >= 0; --j) conv(ch(j), ch(j) + ch(j + 1), 3);
  conv(1, ch(0), 1);
  return n;
}

}  // namespace

TEST_CASE("init is deterministic in (config, seed)") {
  ArchConfig cfg;
  auto a = init_params(cfg, 11);
  auto b = init_params(cfg, 11);
  CHECK(a.theta == b.theta);
  auto c = init_params(cfg, 12);
  CHECK(a.theta != c.theta);
}

TEST_CASE("parameter count matches the layout closed form") {
  for (ArchConfig cfg : {ArchConfig{8, 3, 1, 0.0}, ArchConfig{4, 2, 2, 0.0},
                         ArchConfig{6, 1, 0, 0.0}}) {
    auto params = init_params(cfg, 1);
    CHECK(params.theta.size() == expected_param_count(cfg));
    // layout covers the vector with no gaps
    std::size_t covered = 0;
    for (const auto& blk : params.layout) {
      CHECK(blk.offset == covered);
      covered += blk.size;
    }
    CHECK(covered == params.theta.size());
  }
}

TEST_CASE("zero parameters leave only the residual magnitude path") {
  ArchConfig cfg{4, 2, 1, 0.0};
  auto params = init_params(cfg, 3);
  std::fill(params.theta.begin(), params.theta.end(), 0.0);
  std::mt19937_64 rng(5);
  auto in = random_input(rng, 3, 8, 8);
  ReconWorkspace ws;
  auto out = recon_forward(params, in, ws);
  CHECK(out.n_frames == 3);
  CHECK(out.h == 8);
  CHECK(out.w == 8);
  for (int t = 0; t < 3; ++t) {
    const double* re = in.channel(t, 0);
    const double* im = in.channel(t, 1);
    const double* of = out.frame(t);
    for (int i = 0; i < 64; ++i)
      CHECK(of[i] == doctest::Approx(std::sqrt(re[i] * re[i] + im[i] * im[i])).epsilon(1e-14));
  }
}

TEST_CASE("temporal receptive field is exactly +-r") {
  ArchConfig cfg{4, 1, 1, 0.0};  // single scale keeps the probe sharp
  auto params = init_params(cfg, 21);
  std::mt19937_64 rng(9);
  auto in = random_input(rng, 5, 8, 8);
  ReconWorkspace ws;
  auto base = recon_forward(params, in, ws);

  // zeroing frame t=1 (a +-1 neighbor of t=2) changes frame 2's output
  auto in_zero1 = in;
  for (int c = 0; c < 2; ++c)
    std::fill(in_zero1.channel(1, c), in_zero1.channel(1, c) + 64, 0.0);
  auto out_zero1 = recon_forward(params, in_zero1, ws);
  double diff1 = 0.0;
  for (int i = 0; i < 64; ++i)
    diff1 = std::max(diff1, std::abs(out_zero1.frame(2)[i] - base.frame(2)[i]));
  CHECK(diff1 > 1e-9);

  // zeroing frame t=0 (distance 2 from t=2) does not
  auto in_zero0 = in;
  for (int c = 0; c < 2; ++c)
    std::fill(in_zero0.channel(0, c), in_zero0.channel(0, c) + 64, 0.0);
  auto out_zero0 = recon_forward(params, in_zero0, ws);
  for (int i = 0; i < 64; ++i)
    CHECK(out_zero0.frame(2)[i] == base.frame(2)[i]);
}

TEST_CASE("forward is deterministic") {
  ArchConfig cfg{4, 3, 1, 0.0};
  auto params = init_params(cfg, 31);
  std::mt19937_64 rng(13);
  auto in = random_input(rng, 2, 8, 8);
  ReconWorkspace ws1, ws2;
  auto a = recon_forward(params, in, ws1);
  auto b = recon_forward(params, in, ws2);
  CHECK(a.v == b.v);
}

TEST_CASE("gradients match central finite differences") {
  ArchConfig cfg{2, 2, 1, 0.0};
  auto params = init_params(cfg, 41);
  std::mt19937_64 rng(17);
  auto in = random_input(rng, 2, 8, 8);
  ReconOutput up(2, 8, 8);
  std::normal_distribution<double> d(0.0, 1.0);
  for (auto& v : up.v) v = d(rng);

  auto pair_loss = [&](const ReconParams& p, const ReconInput& x) {
    ReconWorkspace ws;
    auto out = recon_forward(p, x, ws);
    double L = 0.0;
    for (std::size_t i = 0; i < out.v.size(); ++i) L += up.v[i] * out.v[i];
    return L;
  };

  ReconWorkspace ws;
  recon_forward(params, in, ws);
  auto grads = recon_backward(params, ws, up);

  const double h = 1e-5;
  SUBCASE("parameter gradients") {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < params.theta.size(); ++i) {
      auto hi = params, lo = params;
      hi.theta[i] += h;
      lo.theta[i] -= h;
      const double fd = (pair_loss(hi, in) - pair_loss(lo, in)) / (2 * h);
      num += (grads.theta[i] - fd) * (grads.theta[i] - fd);
      den += fd * fd;
    }
    CHECK(std::sqrt(num / den) <= 1e-4);
  }
  SUBCASE("input gradients") {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < in.v.size(); ++i) {
      auto hi = in, lo = in;
      hi.v[i] += h;
      lo.v[i] -= h;
      const double fd = (pair_loss(params, hi) - pair_loss(params, lo)) / (2 * h);
      num += (grads.input.v[i] - fd) * (grads.input.v[i] - fd);
      den += fd * fd;
    }
    CHECK(std::sqrt(num / den) <= 1e-4);
  }
}

TEST_CASE("zero upstream produces exactly zero gradients") {
  ArchConfig cfg{2, 2, 1, 0.0};
  auto params = init_params(cfg, 43);
  std::mt19937_64 rng(19);
  auto in = random_input(rng, 2, 8, 8);
  ReconWorkspace ws;
  recon_forward(params, in, ws);
  ReconOutput up(2, 8, 8);  // zeros
  auto grads = recon_backward(params, ws, up);
  for (double g : grads.theta) CHECK(g == 0.0);
  for (double g : grads.input.v) CHECK(g == 0.0);
  CHECK(grads.input.v.size() == in.v.size());
}

TEST_CASE("backward without forward is rejected") {
  ArchConfig cfg{2, 1, 0, 0.0};
  auto params = init_params(cfg, 1);
  ReconWorkspace ws;
  ReconOutput up(1, 8, 8);
  CHECK_THROWS_AS(recon_backward(params, ws, up), ArgumentError);
}

TEST_CASE("reset reproduces the seeded init bitwise") {
  ArchConfig cfg{4, 2, 1, 0.0};
  auto params = init_params(cfg, 55);
  const auto original = params.theta;
  reset_params(params, 56);
  CHECK(params.theta != original);
  reset_params(params, 55);
  CHECK(params.theta == original);
}

TEST_CASE("checkpoint round trip and config hash guard") {
  ArchConfig cfg{4, 2, 1, 0.0};
  auto params = init_params(cfg, 77);
  const auto path = (fs::temp_directory_path() / "ktraj_params.rprm").string();
  save_params(params, path);
  auto back = load_params(path, cfg);
  CHECK(back.theta == params.theta);

  ArchConfig other{8, 2, 1, 0.0};
  CHECK_THROWS_WITH_AS(load_params(path, other), doctest::Contains("hash"), IoError);
  fs::remove(path);
}
