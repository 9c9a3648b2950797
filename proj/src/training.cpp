#include "ktraj/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace fs = std::filesystem;

namespace ktraj {

void TrainConfig::validate(int n_frames) const {
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (total_epochs < 1) throw ConfigError("total_epochs must be >= 1");
  if (freeze) {
    if (mode != TrajMode::PerFrame)
      throw ConfigError("trajectory freezing requires per-frame mode");
    if (epochs_per_stage < 1) throw ConfigError("epochs_per_stage must be >= 1");
    const int expected = (n_frames + 1) * epochs_per_stage;
    if (total_epochs != expected)
      throw ConfigError("freezing budget mismatch: total_epochs must equal (n_frames+1) * epochs_per_stage = " +
                        std::to_string(expected));
  } else if (resets && reset_period < 1) {
    throw ConfigError("reset_period must be >= 1");
  }
}

FreezeSchedule build_schedule(const TrainConfig& config, int n_frames) {
  require(n_frames >= 1, "n_frames must be >= 1");
  config.validate(n_frames);
  FreezeSchedule sched;
  if (!config.freeze) {
    Stage plain;
    plain.kind = Stage::Kind::Plain;
    plain.active_frame = -1;
    plain.epochs = config.total_epochs;
    sched.stages.push_back(plain);
    sched.epochs_per_stage = config.total_epochs;
    return sched;
  }
  sched.epochs_per_stage = config.epochs_per_stage;
  Stage first;
  first.kind = Stage::Kind::First;
  first.active_frame = 0;
  first.epochs = config.epochs_per_stage;
  first.reset_after = true;
  sched.stages.push_back(first);
  for (int i = 1; i < n_frames; ++i) {
    Stage s;
    s.kind = Stage::Kind::PerFrame;
    s.active_frame = i;
    s.epochs = config.epochs_per_stage;
    s.clone_from = i - 1;
    s.reset_after = true;
    sched.stages.push_back(s);
  }
  Stage joint;
  joint.kind = Stage::Kind::Joint;
  joint.active_frame = -1;
  joint.epochs = config.epochs_per_stage;
  sched.stages.push_back(joint);
  return sched;
}

namespace {

void parallel_for(int n, int threads, const std::function<void(int, int)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) fn(i, w);
    });
  }
  for (auto& t : pool) t.join();
}

void project_block(TrajectorySet& traj, int frame, const KinematicLimits& limits,
                   int iters) {
  TrajectorySet block(1, traj.n_shots(), traj.m());
  std::copy(traj.frame_data(frame), traj.frame_data(frame) + traj.frame_size(),
            block.coords().begin());
  auto projected = project_feasible(block, limits, iters);
  std::copy(projected.coords().begin(), projected.coords().end(), traj.frame_data(frame));
}

void clip_group(std::vector<double>& g, double clip) {
  if (clip <= 0.0) return;
  double norm = 0.0;
  for (double x : g) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > clip) {
    const double s = clip / norm;
    for (double& x : g) x *= s;
  }
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrainReport run(const TrainConfig& config, const Dataset& data, PipelineState& state,
                const std::string& run_dir, const TrainObserver* observer) {
  if (data.train.empty()) throw RuntimeAbort("training dataset is empty");
  const int n_frames = data.train.front().n_frames;
  const int h = data.train.front().h;
  const int w = data.train.front().w;
  for (const auto* split : {&data.train, &data.val, &data.test})
    for (const auto& seq : *split)
      require(seq.n_frames == n_frames && seq.h == h && seq.w == w,
              "all sequences must share one shape");
  config.validate(n_frames);
  if (config.mode == TrajMode::Shared) {
    state.config.shared_traj = true;
    require(state.traj.n_frames() == 1, "shared mode expects a 1-frame trajectory");
  } else if (config.mode == TrajMode::Fixed) {
    // a fixed acquisition may be shared or genuinely per-frame (e.g. GAR)
    require(state.traj.n_frames() == 1 || state.traj.n_frames() == n_frames,
            "fixed mode expects 1 or n_frames trajectory blocks");
    state.config.shared_traj = state.traj.n_frames() == 1;
  } else {
    state.config.shared_traj = false;
    require(state.traj.n_frames() == n_frames,
            "per-frame mode expects one trajectory block per frame");
  }

  auto schedule = build_schedule(config, n_frames);

  if (!run_dir.empty()) {
    fs::create_directories(run_dir);
    fs::create_directories(fs::path(run_dir) / "checkpoints");
  }

  std::vector<PipelineEngine> engines(config.threads);

  AdamState theta_state(state.recon.theta.size(), config.adam);
  const std::size_t block_size = state.traj.frame_size();
  const int n_blocks = state.traj.n_frames();
  std::vector<AdamState> traj_states;
  for (int b = 0; b < n_blocks; ++b) traj_states.emplace_back(block_size, config.adam);

  // start from a feasible trajectory
  state.traj = project_feasible(state.traj, state.limits, config.projection_iters);

  std::mt19937_64 shuffle_rng(config.shuffle_seed);
  TrainReport report;
  int global_epoch = 0;
  int reset_count = 0;

  auto fire_reset = [&](int after_epoch) {
    reset_count += 1;
    const std::uint64_t seed = config.reset_seed_base + static_cast<std::uint64_t>(reset_count);
    reset_params(state.recon, seed);
    reset_state(theta_state);
    report.resets.push_back({after_epoch, seed});
    if (observer && observer->on_reset) observer->on_reset(after_epoch, seed, state);
  };

  auto flush_files = [&]() {
    if (run_dir.empty()) return;
    write_log_csv(report.log, (fs::path(run_dir) / "log.csv").string());
  };

  std::vector<int> order(data.train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);

  for (std::size_t si = 0; si < schedule.stages.size(); ++si) {
    const Stage& stage = schedule.stages[si];
    if (stage.clone_from >= 0)
      clone_frame_trajectory(stage.clone_from, stage.active_frame, state.traj);
    if (observer && observer->on_stage_start)
      observer->on_stage_start(static_cast<int>(si), stage, state);

    for (int e = 0; e < stage.epochs; ++e) {
      const double lr_t =
          config.traj_lr.at_epoch(config.freeze ? e : global_epoch);
      const double lr_r = config.recon_lr.at_epoch(global_epoch);

      for (std::size_t i = order.size(); i > 1; --i) {
        const std::size_t j = shuffle_rng() % i;
        std::swap(order[i - 1], order[j]);
      }

      double loss_sum = 0.0;
      int batches = 0;
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t stop = std::min(order.size(), start + config.batch_size);
        const int bn = static_cast<int>(stop - start);
        std::vector<const FrameSequence*> batch(bn);
        for (int i = 0; i < bn; ++i) batch[i] = &data.train[order[start + i]];

        std::vector<SampleCache> caches(bn);
        std::vector<double> sums(bn, 0.0);
        parallel_for(bn, config.threads, [&](int i, int tid) {
          sums[i] = forward_sample(state, *batch[i], engines[tid], caches[i]);
        });
        std::size_t denom = 0;
        for (const auto* seq : batch)
          denom += static_cast<std::size_t>(seq->n_frames) * seq->h * seq->w;
        double loss = 0.0;
        for (double s : sums) loss += s;
        loss /= static_cast<double>(denom);
        if (!std::isfinite(loss)) {
          flush_files();
          throw RuntimeAbort("non-finite training loss at epoch " +
                             std::to_string(global_epoch) + ", batch " +
                             std::to_string(batches));
        }
        loss_sum += loss;
        ++batches;

        std::vector<PipelineGrads> grads(bn);
        parallel_for(bn, config.threads, [&](int i, int tid) {
          grads[i] = backward_sample(state, *batch[i], engines[tid], caches[i], denom);
        });
        PipelineGrads total;
        for (const auto& g : grads) total.accumulate(g);

        clip_group(total.theta, config.grad_clip);
        adam_step(state.recon.theta.data(), total.theta.data(), total.theta.size(),
                  theta_state, lr_r);

        if (config.mode != TrajMode::Fixed) {
          std::vector<int> active_blocks;
          if (stage.active_frame >= 0) {
            active_blocks.push_back(stage.active_frame);
          } else {
            for (int b = 0; b < n_blocks; ++b) active_blocks.push_back(b);
          }
          for (int b : active_blocks) {
            std::vector<double> g(total.traj.begin() + b * block_size,
                                  total.traj.begin() + (b + 1) * block_size);
            clip_group(g, config.grad_clip);
            adam_step(state.traj.frame_data(b), g.data(), block_size, traj_states[b],
                      lr_t);
            project_block(state.traj, b, state.limits, config.projection_iters);
          }
        }
      }

      LogRow row;
      row.epoch = global_epoch;
      row.stage = static_cast<int>(si);
      row.active_frame = stage.active_frame;
      row.lr_traj = config.mode == TrajMode::Fixed ? 0.0 : lr_t;
      row.lr_recon = lr_r;
      row.train_loss = loss_sum / std::max(batches, 1);
      if (!data.val.empty()) {
        const auto ev = evaluate(state, data.val, config.threads);
        row.val_psnr = ev.psnr.mean;
        row.val_vif = ev.vif.mean;
        row.val_fsim = ev.fsim.mean;
      }
      row.feasible = audit(state.traj, state.limits, 1e-6).feasible;
      report.log.push_back(row);
      if (observer && observer->on_epoch_end)
        observer->on_epoch_end(global_epoch, static_cast<int>(si), state);

      if (!config.freeze && config.resets && (global_epoch + 1) % config.reset_period == 0 &&
          global_epoch + 1 < config.total_epochs)
        fire_reset(global_epoch);

      ++global_epoch;
    }

    if (config.freeze && config.resets && stage.reset_after) fire_reset(global_epoch - 1);

    if (!run_dir.empty()) {
      const auto ck = fs::path(run_dir) / "checkpoints";
      const std::string tag = "stage_" + std::to_string(si);
      save_trajectory(state.traj, (ck / (tag + ".ktrj")).string());
      save_params(state.recon, (ck / (tag + ".rprm")).string());
      save_adam(theta_state, (ck / (tag + ".optm")).string());
    }
  }

  const auto& eval_split = !data.test.empty() ? data.test : data.val;
  if (!eval_split.empty()) {
    const auto ev = evaluate(state, eval_split, config.threads);
    report.test_psnr = ev.psnr;
    report.test_vif = ev.vif;
    report.test_fsim = ev.fsim;
  }

  flush_files();
  if (!run_dir.empty()) {
    nlohmann::json j;
    j["psnr"] = {{"mean", report.test_psnr.mean}, {"stderr", report.test_psnr.stderr_}};
    j["vif"] = {{"mean", report.test_vif.mean}, {"stderr", report.test_vif.stderr_}};
    j["fsim"] = {{"mean", report.test_fsim.mean}, {"stderr", report.test_fsim.stderr_}};
    j["epochs"] = global_epoch;
    j["resets"] = report.resets.size();
    std::ofstream out(fs::path(run_dir) / "report.json");
    out << j.dump(2) << '\n';
  }
  return report;
}

EvalResult evaluate_with(
    const std::vector<FrameSequence>& split,
    const std::function<std::vector<RealImage>(const FrameSequence&)>& reconstruct) {
  require(!split.empty(), "cannot evaluate an empty split");
  EvalResult result;
  std::vector<double> ps, vs, fs_;
  for (const auto& seq : split) {
    const auto pred = reconstruct(seq);
    require(static_cast<int>(pred.size()) == seq.n_frames,
            "reconstructor returned the wrong number of frames");
    for (int t = 0; t < seq.n_frames; ++t) {
      RealImage ref(seq.h, seq.w);
      ref.v = seq.frame_magnitude(t);
      const double p = psnr(ref, pred[t], 1.0);
      const double v = vif(ref, pred[t]);
      const double f = fsim(ref, pred[t]);
      ps.push_back(p);
      vs.push_back(v);
      fs_.push_back(f);
      result.per_frame.push_back({p, v, f});
    }
  }
  result.psnr = aggregate(ps);
  result.vif = aggregate(vs);
  result.fsim = aggregate(fs_);
  return result;
}

EvalResult evaluate(const PipelineState& state, const std::vector<FrameSequence>& split,
                    int threads) {
  require(!split.empty(), "cannot evaluate an empty split");
  // reconstruct all sequences (parallel), then collect metrics in order
  std::vector<std::vector<RealImage>> preds(split.size());
  std::vector<PipelineEngine> engines(std::max(threads, 1));
  parallel_for(static_cast<int>(split.size()), threads, [&](int i, int tid) {
    SampleCache cache;
    forward_sample(state, split[i], engines[tid], cache);
    std::vector<RealImage> frames;
    frames.reserve(split[i].n_frames);
    for (int t = 0; t < split[i].n_frames; ++t) {
      RealImage img(split[i].h, split[i].w);
      const double* of = cache.out.frame(t);
      std::copy(of, of + img.v.size(), img.v.begin());
      frames.push_back(std::move(img));
    }
    preds[i] = std::move(frames);
  });
  std::size_t next = 0;
  return evaluate_with(split, [&](const FrameSequence&) { return preds[next++]; });
}

void write_log_csv(const std::vector<LogRow>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "epoch,stage,active_frame,lr_traj,lr_recon,train_loss,val_psnr,val_vif,val_fsim,feasible\n";
  for (const auto& r : log) {
    out << r.epoch << ',' << r.stage << ',' << r.active_frame << ','
        << format_g17(r.lr_traj) << ',' << format_g17(r.lr_recon) << ','
        << format_g17(r.train_loss) << ',' << format_g17(r.val_psnr) << ','
        << format_g17(r.val_vif) << ',' << format_g17(r.val_fsim) << ','
        << (r.feasible ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace ktraj
