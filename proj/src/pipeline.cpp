#include "ktraj/pipeline.hpp"

#include <cmath>

namespace ktraj {

GriddedNufft* PipelineEngine::gridded(int h, int w, const GriddingKernel& kernel) {
  if (!engine_ || h_ != h || w_ != w) {
    engine_ = std::make_unique<GriddedNufft>(h, w, kernel);
    h_ = h;
    w_ = w;
  }
  return engine_.get();
}

namespace {

int traj_frame_for(const PipelineState& state, int t) {
  return state.config.shared_traj ? 0 : t;
}

KSamples nufft_forward(const PipelineState& state, PipelineEngine& engine,
                       const ComplexImage& img, const FrameCoords& fc) {
  if (state.config.nufft == NufftMode::Direct) return forward_direct(img, fc);
  return engine.gridded(img.h, img.w, state.config.kernel)->forward(img, fc);
}

ComplexImage nufft_adjoint(const PipelineState& state, PipelineEngine& engine,
                           const KSamples& samples, const FrameCoords& fc, int h, int w) {
  if (state.config.nufft == NufftMode::Direct) return adjoint_direct(samples, fc, h, w);
  return engine.gridded(h, w, state.config.kernel)->adjoint(samples, fc);
}

std::vector<double> nufft_coord_grad(const PipelineState& state, PipelineEngine& engine,
                                     const ComplexImage& img, const FrameCoords& fc,
                                     const KSamples& upstream) {
  if (state.config.nufft == NufftMode::Direct)
    return grad_wrt_coords_direct(img, fc, upstream);
  return engine.gridded(img.h, img.w, state.config.kernel)->grad_wrt_coords(img, fc, upstream);
}

}  // namespace

double forward_sample(const PipelineState& state, const FrameSequence& seq,
                      PipelineEngine& engine, SampleCache& cache) {
  const int nf = seq.n_frames, h = seq.h, w = seq.w;
  if (!state.config.shared_traj)
    require(state.traj.n_frames() == nf, "trajectory frame count does not match data");
  if (state.config.strict_feasibility) {
    const auto report = audit(state.traj, state.limits, state.config.feas_tol);
    if (!report.feasible)
      throw ArgumentError("infeasible trajectory refused in strict mode; worst speed excess " +
                          std::to_string(report.max_speed_violation) + ", accel excess " +
                          std::to_string(report.max_accel_violation));
  }

  const double scale = state.regrid_scale();
  cache.n_frames = nf;
  cache.h = h;
  cache.w = w;
  cache.imgs.clear();
  cache.ksp.clear();
  cache.target_mag.clear();
  cache.imgs.reserve(nf);
  cache.ksp.reserve(nf);
  cache.target_mag.reserve(nf);

  ReconInput input(nf, h, w);
  for (int t = 0; t < nf; ++t) {
    cache.imgs.push_back(seq.frame_image(t));
    const auto fc = frame_coords(state.traj, traj_frame_for(state, t));
    cache.ksp.push_back(nufft_forward(state, engine, cache.imgs.back(), fc));
    const auto regridded = nufft_adjoint(state, engine, cache.ksp.back(), fc, h, w);
    double* re = input.channel(t, 0);
    double* im = input.channel(t, 1);
    for (std::size_t i = 0; i < regridded.v.size(); ++i) {
      re[i] = scale * regridded.v[i].real();
      im[i] = scale * regridded.v[i].imag();
    }
    cache.target_mag.push_back(seq.frame_magnitude(t));
  }

  cache.out = recon_forward(state.recon, input, cache.ws);
  cache.filled = true;

  double sum_sq = 0.0;
  for (int t = 0; t < nf; ++t) {
    const double* of = cache.out.frame(t);
    const auto& mag = cache.target_mag[t];
    for (std::size_t i = 0; i < mag.size(); ++i) {
      const double d = of[i] - mag[i];
      sum_sq += d * d;
    }
  }
  return sum_sq;
}

void PipelineGrads::accumulate(const PipelineGrads& other) {
  if (traj.empty()) traj.assign(other.traj.size(), 0.0);
  if (theta.empty()) theta.assign(other.theta.size(), 0.0);
  require(traj.size() == other.traj.size() && theta.size() == other.theta.size(),
          "gradient shape mismatch");
  for (std::size_t i = 0; i < traj.size(); ++i) traj[i] += other.traj[i];
  for (std::size_t i = 0; i < theta.size(); ++i) theta[i] += other.theta[i];
}

PipelineGrads backward_sample(const PipelineState& state, const FrameSequence& seq,
                              PipelineEngine& engine, SampleCache& cache,
                              std::size_t denom) {
  require(cache.filled, "stale cache: run forward_sample first");
  const int nf = cache.n_frames, h = cache.h, w = cache.w;
  (void)seq;

  // dL/d out with L = sum of squared errors / denom
  ReconOutput upstream(nf, h, w);
  for (int t = 0; t < nf; ++t) {
    const double* of = cache.out.frame(t);
    const auto& mag = cache.target_mag[t];
    double* uf = upstream.frame(t);
    for (std::size_t i = 0; i < mag.size(); ++i)
      uf[i] = 2.0 * (of[i] - mag[i]) / static_cast<double>(denom);
  }

  auto rg = recon_backward(state.recon, cache.ws, upstream);

  PipelineGrads grads;
  grads.theta = std::move(rg.theta);
  grads.traj.assign(state.traj.coords().size(), 0.0);

  const double scale = state.regrid_scale();
  for (int t = 0; t < nf; ++t) {
    const auto fc = frame_coords(state.traj, traj_frame_for(state, t));

    // W = dL/d(regridded frame), complex, in the real-pairing convention
    ComplexImage wimg(h, w);
    const double* gre = rg.input.channel(t, 0);
    const double* gim = rg.input.channel(t, 1);
    for (std::size_t i = 0; i < wimg.v.size(); ++i)
      wimg.v[i] = cplx{scale * gre[i], scale * gim[i]};

    // dL/d ksp = F(W): the adjoint of the regridding stage
    const KSamples u = nufft_forward(state, engine, wimg, fc);

    // forward-stage coordinate dependence
    const auto g_fwd = nufft_coord_grad(state, engine, cache.imgs[t], fc, u);
    // adjoint-stage coordinate dependence (same pairing with roles swapped)
    const auto g_adj = nufft_coord_grad(state, engine, wimg, fc, cache.ksp[t]);

    double* dst = grads.traj.data() +
                  (state.config.shared_traj ? 0
                                            : static_cast<std::size_t>(t) * state.traj.frame_size());
    for (std::size_t i = 0; i < g_fwd.size(); ++i) dst[i] += g_fwd[i] + g_adj[i];
  }
  return grads;
}

double forward_loss(const PipelineState& state,
                    const std::vector<const FrameSequence*>& batch,
                    PipelineEngine& engine, BatchCache& caches) {
  require(!batch.empty(), "batch must be non-empty");
  caches.samples.assign(batch.size(), SampleCache{});
  double sum_sq = 0.0;
  std::size_t denom = 0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    sum_sq += forward_sample(state, *batch[b], engine, caches.samples[b]);
    denom += static_cast<std::size_t>(batch[b]->n_frames) * batch[b]->h * batch[b]->w;
  }
  caches.denom = denom;
  caches.loss = sum_sq / static_cast<double>(denom);
  return caches.loss;
}

PipelineGrads backward(const PipelineState& state,
                       const std::vector<const FrameSequence*>& batch,
                       PipelineEngine& engine, BatchCache& caches) {
  require(caches.samples.size() == batch.size(), "stale cache: batch size changed");
  PipelineGrads total;
  for (std::size_t b = 0; b < batch.size(); ++b)
    total.accumulate(backward_sample(state, *batch[b], engine, caches.samples[b],
                                     caches.denom));
  return total;
}

TrajectorySet cartesian_trajectory(int n_frames, int h, int w) {
  TrajectorySet traj(n_frames, h, w);
  for (int t = 0; t < n_frames; ++t)
    for (int fy = 0; fy < h; ++fy)
      for (int fx = 0; fx < w; ++fx) {
        double* p = traj.at(t, fy, fx);
        p[0] = (fx - w / 2) / static_cast<double>(w);
        p[1] = (fy - h / 2) / static_cast<double>(h);
      }
  return traj;
}

}  // namespace ktraj
