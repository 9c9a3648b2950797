#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "ktraj/data.hpp"
#include "ktraj/metrics.hpp"
#include "ktraj/optimizer.hpp"
#include "ktraj/pipeline.hpp"

namespace ktraj {

enum class TrajMode { PerFrame, Shared, Fixed };

struct Stage {
  enum class Kind { First, PerFrame, Joint, Plain };
  Kind kind = Kind::Plain;
  int active_frame = -1;  // -1 means every frame trains
  int epochs = 0;
  int clone_from = -1;    // source frame cloned into active_frame at stage start
  bool reset_after = false;
};

struct FreezeSchedule {
  std::vector<Stage> stages;
  int epochs_per_stage = 0;
  int total_epochs() const {
    int n = 0;
    for (const auto& s : stages) n += s.epochs;
    return n;
  }
};

struct TrainConfig {
  int total_epochs = 315;
  int epochs_per_stage = 35;
  int reset_period = 35;  // c, used when freezing is off
  bool freeze = true;
  bool resets = true;
  TrajMode mode = TrajMode::PerFrame;
  int batch_size = 12;

  LrSchedule traj_lr = LrSchedule{0.2, 0.7, 3, LrDecayKind::MultiplicativeStep};
  LrSchedule recon_lr = LrSchedule{1e-4, 0.995, 30, LrDecayKind::MultiplicativeStep};
  AdamConfig adam;
  double grad_clip = 0.0;  // 0 disables clipping
  int projection_iters = 200;

  std::uint64_t shuffle_seed = 1;
  std::uint64_t reset_seed_base = 1000;  // reset k re-inits with base + k

  int threads = 1;

  void validate(int n_frames) const;
};

/// Stage sequence per the freezing schedule: the first trajectory alone,
/// then each later frame initialized from its predecessor, then a joint
/// fine-tune. Without freezing, a single plain stage.
FreezeSchedule build_schedule(const TrainConfig& config, int n_frames);

struct Dataset {
  std::vector<FrameSequence> train;
  std::vector<FrameSequence> val;
  std::vector<FrameSequence> test;
};

struct LogRow {
  int epoch = 0;
  int stage = 0;
  int active_frame = -1;
  double lr_traj = 0.0;
  double lr_recon = 0.0;
  double train_loss = 0.0;
  double val_psnr = 0.0;
  double val_vif = 0.0;
  double val_fsim = 0.0;
  bool feasible = true;
};

struct ResetEvent {
  int epoch = 0;  // epoch index after which the reset fired
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<LogRow> log;
  std::vector<ResetEvent> resets;
  MetricStats test_psnr, test_vif, test_fsim;
};

/// Instrumentation hooks; every callback is optional.
struct TrainObserver {
  std::function<void(int stage_idx, const Stage&, const PipelineState&)> on_stage_start;
  std::function<void(int epoch, int stage_idx, const PipelineState&)> on_epoch_end;
  std::function<void(int epoch, std::uint64_t seed, const PipelineState&)> on_reset;
};

/// Executes the stage schedule: within a stage only the active trajectory
/// frame receives updates (theta always trains), the feasibility projection
/// runs after every trajectory step, and reconstruction resets fire at stage
/// boundaries (freezing) or every reset_period epochs (otherwise). Writes
/// log.csv, checkpoints/ and report.json under run_dir when non-empty.
TrainReport run(const TrainConfig& config, const Dataset& data, PipelineState& state,
                const std::string& run_dir = "", const TrainObserver* observer = nullptr);

struct EvalResult {
  MetricStats psnr, vif, fsim;
  std::vector<std::array<double, 3>> per_frame;  // (psnr, vif, fsim) rows
};

/// Metric report over a split using an arbitrary reconstructor; the stub
/// form exists so tests can cut the pipeline out of the loop.
EvalResult evaluate_with(
    const std::vector<FrameSequence>& split,
    const std::function<std::vector<RealImage>(const FrameSequence&)>& reconstruct);

/// Runs the pipeline forward (no optimizers are ever constructed here).
EvalResult evaluate(const PipelineState& state, const std::vector<FrameSequence>& split,
                    int threads = 1);

void write_log_csv(const std::vector<LogRow>& log, const std::string& path);

}  // namespace ktraj
