#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "ktraj/data.hpp"
#include "ktraj/kinematics.hpp"
#include "ktraj/pipeline.hpp"
#include "ktraj/training.hpp"

namespace ktraj {

/// Full experiment description. JSON round-trips through to_json/from_json;
/// unknown keys are rejected, and the resolved form is echoed into every run
/// directory.
struct ExperimentConfig {
  std::string name = "experiment";

  int height = 64, width = 64;
  int frames = 8;
  int shots = 6;
  int samples_per_shot = 64;
  double k_extent = 0.5;
  std::string init = "radial";     // radial | golden
  std::string mode = "per-frame";  // per-frame | shared | fixed
  std::string nufft = "fast";      // fast | direct

  GriddingKernel kernel{};
  KinematicLimits limits{};
  int projection_iters = 200;

  ArchConfig recon{};

  // optimizer group settings, section "optim"
  double traj_lr = 0.2, traj_decay = 0.7;
  int traj_period = 3;
  double recon_lr = 1e-4, recon_decay = 0.995;
  int recon_period = 30;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  double grad_clip = 0.0;

  // section "train"
  int total_epochs = 315;
  int epochs_per_stage = 35;
  int reset_period = 35;
  bool freeze = true;
  bool resets = true;
  int batch_size = 12;
  double regrid_scale = 0.0;  // 0 = auto

  // section "data"
  std::string data_dir = "data";
  int sequences = 200;
  std::array<double, 3> fractions{0.8, 0.175, 0.025};
  bool augment_data = true;
  double bg_amplitude = 0.12;
  double phase_ramp = 0.5;
  double motion_jitter = 0.35;  // relative per-sample spec variation

  // section "seeds"
  std::uint64_t seed_data = 1;
  std::uint64_t seed_init = 2;
  std::uint64_t seed_shuffle = 3;
  std::uint64_t seed_reset_base = 1000;

  int threads = 1;
  std::string out_dir = "runs/latest";

  void validate() const;
  std::string to_json() const;
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);

  /// Named presets: "desk-small" (CPU benchmark scale) and "paper-3.2"
  /// (the published hyperparameters and sizes).
  static ExperimentConfig preset(const std::string& name);

  // assembled pieces
  TrajMode traj_mode() const;
  NufftMode nufft_mode() const;
  TrajectorySet make_trajectory() const;
  PipelineState make_state() const;
  TrainConfig make_train_config() const;
  PhantomSpec make_phantom_spec(std::uint64_t sample_seed) const;
};

}  // namespace ktraj
