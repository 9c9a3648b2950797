#include <cmath>
#include <random>

#include "doctest.h"
#include "ktraj/pipeline.hpp"

using namespace ktraj;

namespace {

PipelineState make_state(TrajectorySet traj, const ArchConfig& arch, std::uint64_t seed,
                         NufftMode mode = NufftMode::Direct, bool shared = false) {
  PipelineState state;
  state.traj = std::move(traj);
  state.recon = init_params(arch, seed);
  state.config.nufft = mode;
  state.config.shared_traj = shared;
  return state;
}

FrameSequence phantom(int h, int w, int nf, std::uint64_t seed) {
  auto spec = default_phantom_spec(h, w, nf);
  return generate_phantom(spec, seed);
}

}  // namespace

TEST_CASE("all-zero data at the exact minimum: zero loss, exactly zero gradients") {
  const int h = 8, w = 8, nf = 2;
  ArchConfig arch{2, 2, 1, 0.0};
  auto state = make_state(init_radial(nf, 2, 8, 0.4), arch, 5);
  std::fill(state.recon.theta.begin(), state.recon.theta.end(), 0.0);

  FrameSequence zeros(nf, h, w);  // all-zero frames
  PipelineEngine engine;
  BatchCache caches;
  const double loss = forward_loss(state, {&zeros}, engine, caches);
  CHECK(loss == 0.0);

  auto grads = backward(state, {&zeros}, engine, caches);
  for (double g : grads.traj) CHECK(g == 0.0);
  for (double g : grads.theta) CHECK(g == 0.0);
}

TEST_CASE("fully-sampled Cartesian with identity recon reconstructs exactly") {
  const int h = 8, w = 8, nf = 2;
  ArchConfig arch{2, 2, 1, 0.0};
  auto seq = phantom(h, w, nf, 3);

  for (auto mode : {NufftMode::Direct, NufftMode::Fast}) {
    auto state = make_state(cartesian_trajectory(nf, h, w), arch, 5, mode);
    std::fill(state.recon.theta.begin(), state.recon.theta.end(), 0.0);
    PipelineEngine engine;
    BatchCache caches;
    const double loss = forward_loss(state, {&seq}, engine, caches);
    CHECK(loss <= (mode == NufftMode::Direct ? 1e-24 : 1e-10));
  }
}

TEST_CASE("loss is invariant to batch order") {
  const int h = 8, w = 8, nf = 2;
  ArchConfig arch{2, 2, 1, 0.0};
  auto state = make_state(init_radial(nf, 2, 8, 0.45), arch, 7);
  auto s1 = phantom(h, w, nf, 11);
  auto s2 = phantom(h, w, nf, 12);
  auto s3 = phantom(h, w, nf, 13);
  PipelineEngine engine;
  BatchCache c1, c2;
  const double a = forward_loss(state, {&s1, &s2, &s3}, engine, c1);
  const double b = forward_loss(state, {&s3, &s1, &s2}, engine, c2);
  CHECK(a == doctest::Approx(b).epsilon(1e-13));
}

TEST_CASE("strict mode refuses an infeasible trajectory") {
  ArchConfig arch{2, 1, 0, 0.0};
  auto state = make_state(init_radial(1, 1, 8, 0.5), arch, 1);
  state.config.strict_feasibility = true;
  state.limits.g_max = 1e-8;  // collapses v_max, every spoke is infeasible
  FrameSequence seq(1, 8, 8);
  PipelineEngine engine;
  BatchCache caches;
  CHECK_THROWS_WITH_AS(forward_loss(state, {&seq}, engine, caches),
                       doctest::Contains("infeasible"), ArgumentError);
}

TEST_CASE("end-to-end trajectory gradient matches finite differences") {
  const int h = 8, w = 8, nf = 1;
  ArchConfig arch{2, 2, 1, 0.0};
  auto seq = phantom(h, w, nf, 21);
  auto traj = init_radial(nf, 2, 8, 0.42);
  // perturb off the radial symmetry so the test point is generic
  std::mt19937_64 rng(31);
  std::normal_distribution<double> jitter(0.0, 0.01);
  for (auto& c : traj.coords()) c += jitter(rng);

  auto state = make_state(std::move(traj), arch, 9);
  PipelineEngine engine;
  BatchCache caches;
  forward_loss(state, {&seq}, engine, caches);
  auto grads = backward(state, {&seq}, engine, caches);

  const double step = 1e-5;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < state.traj.coords().size(); ++i) {
    auto hi = state, lo = state;
    hi.traj.coords()[i] += step;
    lo.traj.coords()[i] -= step;
    BatchCache tmp;
    const double fh = forward_loss(hi, {&seq}, engine, tmp);
    const double fl = forward_loss(lo, {&seq}, engine, tmp);
    const double fd = (fh - fl) / (2 * step);
    num += (grads.traj[i] - fd) * (grads.traj[i] - fd);
    den += fd * fd;
  }
  CHECK(std::sqrt(num / den) <= 1e-3);
}

TEST_CASE("pipeline parameter gradient matches finite differences") {
  const int h = 8, w = 8, nf = 2;
  ArchConfig arch{2, 2, 1, 0.0};
  auto seq = phantom(h, w, nf, 23);
  auto state = make_state(init_radial(nf, 2, 8, 0.42), arch, 13);
  PipelineEngine engine;
  BatchCache caches;
  forward_loss(state, {&seq}, engine, caches);
  auto grads = backward(state, {&seq}, engine, caches);

  const double step = 1e-5;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < state.recon.theta.size(); ++i) {
    auto hi = state, lo = state;
    hi.recon.theta[i] += step;
    lo.recon.theta[i] -= step;
    BatchCache tmp;
    const double fd =
        (forward_loss(hi, {&seq}, engine, tmp) - forward_loss(lo, {&seq}, engine, tmp)) /
        (2 * step);
    num += (grads.theta[i] - fd) * (grads.theta[i] - fd);
    den += fd * fd;
  }
  CHECK(std::sqrt(num / den) <= 1e-4);
}

TEST_CASE("shared-mode gradient equals the sum of per-frame gradients") {
  const int h = 8, w = 8, nf = 3;
  ArchConfig arch{2, 2, 1, 0.0};
  auto seq = phantom(h, w, nf, 33);

  auto per_frame = make_state(init_radial(nf, 2, 8, 0.44), arch, 17);
  auto shared = make_state(init_radial(1, 2, 8, 0.44), arch, 17, NufftMode::Direct, true);

  PipelineEngine engine;
  BatchCache c1, c2;
  const double l1 = forward_loss(per_frame, {&seq}, engine, c1);
  const double l2 = forward_loss(shared, {&seq}, engine, c2);
  CHECK(l1 == doctest::Approx(l2).epsilon(1e-14));  // identical first forward

  auto g1 = backward(per_frame, {&seq}, engine, c1);
  auto g2 = backward(shared, {&seq}, engine, c2);
  const std::size_t block = shared.traj.frame_size();
  for (std::size_t i = 0; i < block; ++i) {
    double sum = 0.0;
    for (int t = 0; t < nf; ++t) sum += g1.traj[t * block + i];
    CHECK(g2.traj[i] == doctest::Approx(sum).epsilon(1e-10));
  }
  // theta gradients agree as well
  for (std::size_t i = 0; i < g1.theta.size(); ++i)
    CHECK(g1.theta[i] == doctest::Approx(g2.theta[i]).epsilon(1e-10));
}
