#pragma once

#include <memory>
#include <vector>

#include "ktraj/data.hpp"
#include "ktraj/kinematics.hpp"
#include "ktraj/nufft.hpp"
#include "ktraj/reconmodel.hpp"
#include "ktraj/trajectory.hpp"

namespace ktraj {

enum class NufftMode { Direct, Fast };

struct PipelineConfig {
  NufftMode nufft = NufftMode::Fast;
  GriddingKernel kernel{};
  bool shared_traj = false;   // broadcast a single trajectory to all frames
  double regrid_scale = 0.0;  // 0 selects 1 / (n_shots * m)
  bool strict_feasibility = false;
  double feas_tol = 1e-6;
};

/// Everything one training step reads: the trajectory (one frame block in
/// shared mode), the reconstruction parameters, hardware limits and the
/// operator configuration. Read-only during a step; the training loop is the
/// single writer between steps.
struct PipelineState {
  TrajectorySet traj{1, 1, 1};
  ReconParams recon;
  KinematicLimits limits;
  PipelineConfig config;

  double regrid_scale() const {
    return config.regrid_scale > 0.0
               ? config.regrid_scale
               : 1.0 / (static_cast<double>(traj.n_shots()) * traj.m());
  }
};

/// Per-sample intermediates retained for the backward pass.
struct SampleCache {
  ReconWorkspace ws;
  std::vector<ComplexImage> imgs;   // ground-truth complex frames
  std::vector<KSamples> ksp;        // subsampled frequency data per frame
  ReconOutput out;
  std::vector<std::vector<double>> target_mag;
  int n_frames = 0, h = 0, w = 0;
  bool filled = false;
};

struct BatchCache {
  std::vector<SampleCache> samples;
  double loss = 0.0;
  std::size_t denom = 0;  // batch * frames * pixels
};

/// Scratch owned by one worker thread: the gridded engine plus reusable
/// buffers. Distinct engines make batch evaluation embarrassingly parallel.
class PipelineEngine {
public:
  PipelineEngine() = default;
  GriddedNufft* gridded(int h, int w, const GriddingKernel& kernel);

private:
  std::unique_ptr<GriddedNufft> engine_;
  int h_ = 0, w_ = 0;
};

/// Subsample -> regrid -> reconstruct one sample; returns the sum of squared
/// errors against the ground-truth magnitudes (pixel count in cache.denom
/// terms is handled by the caller).
double forward_sample(const PipelineState& state, const FrameSequence& seq,
                      PipelineEngine& engine, SampleCache& cache);

struct PipelineGrads {
  std::vector<double> traj;   // matches state.traj.coords() layout
  std::vector<double> theta;  // matches state.recon.theta layout

  void accumulate(const PipelineGrads& other);
};

/// Gradients of (sum of squared errors / denom) for one sample; `denom` is
/// the batch-level normalizer so per-sample results sum to the batch
/// gradient.
PipelineGrads backward_sample(const PipelineState& state, const FrameSequence& seq,
                              PipelineEngine& engine, SampleCache& cache,
                              std::size_t denom);

/// Mean-squared-error loss over the batch; caches retain what backward needs.
double forward_loss(const PipelineState& state,
                    const std::vector<const FrameSequence*>& batch,
                    PipelineEngine& engine, BatchCache& caches);

PipelineGrads backward(const PipelineState& state,
                       const std::vector<const FrameSequence*>& batch,
                       PipelineEngine& engine, BatchCache& caches);

/// All Cartesian grid frequencies as a trajectory (row per shot), for
/// fully-sampled sanity checks.
TrajectorySet cartesian_trajectory(int n_frames, int h, int w);

}  // namespace ktraj
