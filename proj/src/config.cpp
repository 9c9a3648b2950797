#include "ktraj/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

using nlohmann::json;

namespace ktraj {

namespace {

void check_keys(const json& j, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, _] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + key + "' in section '" + section + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (height < 8 || width < 8) throw ConfigError("image size must be at least 8x8");
  if (frames < 1) throw ConfigError("frames must be >= 1");
  if (shots < 1 || samples_per_shot < 1) throw ConfigError("shots and samples must be >= 1");
  if (k_extent <= 0.0 || k_extent > 0.5) throw ConfigError("k_extent must be in (0, 0.5]");
  if (init != "radial" && init != "golden") throw ConfigError("init must be radial or golden");
  if (mode != "per-frame" && mode != "shared" && mode != "fixed")
    throw ConfigError("mode must be per-frame, shared or fixed");
  if (nufft != "fast" && nufft != "direct") throw ConfigError("nufft must be fast or direct");
  if (projection_iters < 1) throw ConfigError("projection iters must be >= 1");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (sequences < 1) throw ConfigError("sequences must be >= 1");
  const double fsum = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(fsum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  try {
    kernel.validate();
    limits.validate();
    recon.validate();
  } catch (const ArgumentError& e) {
    throw ConfigError(e.what());
  }
  // constructing the schedules validates positivity over the horizon
  (void)LrSchedule::make(traj_lr, traj_decay, traj_period,
                         LrDecayKind::MultiplicativeStep, total_epochs);
  (void)LrSchedule::make(recon_lr, recon_decay, recon_period,
                         LrDecayKind::MultiplicativeStep, total_epochs);
  make_train_config().validate(frames);
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["image"] = {{"height", height}, {"width", width}};
  j["frames"] = frames;
  j["shots"] = shots;
  j["samples_per_shot"] = samples_per_shot;
  j["k_extent"] = k_extent;
  j["init"] = init;
  j["mode"] = mode;
  j["nufft"] = nufft;
  j["kernel"] = {{"width", kernel.width}, {"oversampling", kernel.oversampling}};
  j["limits"] = {{"g_max", limits.g_max},
                 {"s_max", limits.s_max},
                 {"dt", limits.dt},
                 {"gamma", limits.gamma},
                 {"fov", limits.fov}};
  j["projection"] = {{"iters", projection_iters}};
  j["recon"] = {{"base_channels", recon.base_channels},
                {"scales", recon.scales},
                {"temporal_radius", recon.temporal_radius},
                {"dropout", recon.dropout}};
  j["optim"] = {{"traj_lr", traj_lr},     {"traj_decay", traj_decay},
                {"traj_period", traj_period}, {"recon_lr", recon_lr},
                {"recon_decay", recon_decay}, {"recon_period", recon_period},
                {"beta1", beta1},         {"beta2", beta2},
                {"eps", adam_eps},        {"grad_clip", grad_clip}};
  j["train"] = {{"total_epochs", total_epochs},
                {"epochs_per_stage", epochs_per_stage},
                {"reset_period", reset_period},
                {"freeze", freeze},
                {"resets", resets},
                {"batch_size", batch_size},
                {"regrid_scale", regrid_scale}};
  j["data"] = {{"dir", data_dir},
               {"sequences", sequences},
               {"fractions", fractions},
               {"augment", augment_data},
               {"bg_amplitude", bg_amplitude},
               {"phase_ramp", phase_ramp},
               {"motion_jitter", motion_jitter}};
  j["seeds"] = {{"data", seed_data},
                {"init", seed_init},
                {"shuffle", seed_shuffle},
                {"reset_base", seed_reset_base}};
  j["threads"] = threads;
  j["out_dir"] = out_dir;
  return j.dump(2);
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "<root>",
             {"name", "image", "frames", "shots", "samples_per_shot", "k_extent", "init",
              "mode", "nufft", "kernel", "limits", "projection", "recon", "optim",
              "train", "data", "seeds", "threads", "out_dir", "preset"});

  ExperimentConfig cfg;
  if (j.contains("preset")) cfg = preset(j.at("preset").get<std::string>());

  try {
    cfg.name = j.value("name", cfg.name);
    if (j.contains("image")) {
      check_keys(j["image"], "image", {"height", "width"});
      cfg.height = j["image"].value("height", cfg.height);
      cfg.width = j["image"].value("width", cfg.width);
    }
    cfg.frames = j.value("frames", cfg.frames);
    cfg.shots = j.value("shots", cfg.shots);
    cfg.samples_per_shot = j.value("samples_per_shot", cfg.samples_per_shot);
    cfg.k_extent = j.value("k_extent", cfg.k_extent);
    cfg.init = j.value("init", cfg.init);
    cfg.mode = j.value("mode", cfg.mode);
    cfg.nufft = j.value("nufft", cfg.nufft);
    if (j.contains("kernel")) {
      check_keys(j["kernel"], "kernel", {"width", "oversampling"});
      cfg.kernel.width = j["kernel"].value("width", cfg.kernel.width);
      cfg.kernel.oversampling = j["kernel"].value("oversampling", cfg.kernel.oversampling);
    }
    if (j.contains("limits")) {
      check_keys(j["limits"], "limits", {"g_max", "s_max", "dt", "gamma", "fov"});
      cfg.limits.g_max = j["limits"].value("g_max", cfg.limits.g_max);
      cfg.limits.s_max = j["limits"].value("s_max", cfg.limits.s_max);
      cfg.limits.dt = j["limits"].value("dt", cfg.limits.dt);
      cfg.limits.gamma = j["limits"].value("gamma", cfg.limits.gamma);
      cfg.limits.fov = j["limits"].value("fov", cfg.limits.fov);
    }
    if (j.contains("projection")) {
      check_keys(j["projection"], "projection", {"iters"});
      cfg.projection_iters = j["projection"].value("iters", cfg.projection_iters);
    }
    if (j.contains("recon")) {
      check_keys(j["recon"], "recon",
                 {"base_channels", "scales", "temporal_radius", "dropout"});
      cfg.recon.base_channels = j["recon"].value("base_channels", cfg.recon.base_channels);
      cfg.recon.scales = j["recon"].value("scales", cfg.recon.scales);
      cfg.recon.temporal_radius =
          j["recon"].value("temporal_radius", cfg.recon.temporal_radius);
      cfg.recon.dropout = j["recon"].value("dropout", cfg.recon.dropout);
    }
    if (j.contains("optim")) {
      check_keys(j["optim"], "optim",
                 {"traj_lr", "traj_decay", "traj_period", "recon_lr", "recon_decay",
                  "recon_period", "beta1", "beta2", "eps", "grad_clip"});
      const auto& o = j["optim"];
      cfg.traj_lr = o.value("traj_lr", cfg.traj_lr);
      cfg.traj_decay = o.value("traj_decay", cfg.traj_decay);
      cfg.traj_period = o.value("traj_period", cfg.traj_period);
      cfg.recon_lr = o.value("recon_lr", cfg.recon_lr);
      cfg.recon_decay = o.value("recon_decay", cfg.recon_decay);
      cfg.recon_period = o.value("recon_period", cfg.recon_period);
      cfg.beta1 = o.value("beta1", cfg.beta1);
      cfg.beta2 = o.value("beta2", cfg.beta2);
      cfg.adam_eps = o.value("eps", cfg.adam_eps);
      cfg.grad_clip = o.value("grad_clip", cfg.grad_clip);
    }
    if (j.contains("train")) {
      check_keys(j["train"], "train",
                 {"total_epochs", "epochs_per_stage", "reset_period", "freeze", "resets",
                  "batch_size", "regrid_scale"});
      const auto& t = j["train"];
      cfg.total_epochs = t.value("total_epochs", cfg.total_epochs);
      cfg.epochs_per_stage = t.value("epochs_per_stage", cfg.epochs_per_stage);
      cfg.reset_period = t.value("reset_period", cfg.reset_period);
      cfg.freeze = t.value("freeze", cfg.freeze);
      cfg.resets = t.value("resets", cfg.resets);
      cfg.batch_size = t.value("batch_size", cfg.batch_size);
      cfg.regrid_scale = t.value("regrid_scale", cfg.regrid_scale);
    }
    if (j.contains("data")) {
      check_keys(j["data"], "data",
                 {"dir", "sequences", "fractions", "augment", "bg_amplitude",
                  "phase_ramp", "motion_jitter"});
      const auto& d = j["data"];
      cfg.data_dir = d.value("dir", cfg.data_dir);
      cfg.sequences = d.value("sequences", cfg.sequences);
      if (d.contains("fractions")) {
        const auto f = d["fractions"];
        if (!f.is_array() || f.size() != 3)
          throw ConfigError("data.fractions must be an array of 3 numbers");
        cfg.fractions = {f[0].get<double>(), f[1].get<double>(), f[2].get<double>()};
      }
      cfg.augment_data = d.value("augment", cfg.augment_data);
      cfg.bg_amplitude = d.value("bg_amplitude", cfg.bg_amplitude);
      cfg.phase_ramp = d.value("phase_ramp", cfg.phase_ramp);
      cfg.motion_jitter = d.value("motion_jitter", cfg.motion_jitter);
    }
    if (j.contains("seeds")) {
      check_keys(j["seeds"], "seeds", {"data", "init", "shuffle", "reset_base"});
      const auto& s = j["seeds"];
      cfg.seed_data = s.value("data", cfg.seed_data);
      cfg.seed_init = s.value("init", cfg.seed_init);
      cfg.seed_shuffle = s.value("shuffle", cfg.seed_shuffle);
      cfg.seed_reset_base = s.value("reset_base", cfg.seed_reset_base);
    }
    cfg.threads = j.value("threads", cfg.threads);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

ExperimentConfig ExperimentConfig::preset(const std::string& name) {
  if (name == "desk-small") {
    ExperimentConfig cfg;
    cfg.name = "desk-small";
    cfg.height = 64;
    cfg.width = 64;
    cfg.frames = 8;
    cfg.shots = 6;
    cfg.samples_per_shot = 64;
    cfg.recon = ArchConfig{6, 3, 1, 0.0};
    cfg.total_epochs = 63;
    cfg.epochs_per_stage = 7;
    cfg.reset_period = 7;
    cfg.batch_size = 4;
    cfg.sequences = 40;
    cfg.fractions = {0.8, 0.15, 0.05};
    cfg.traj_lr = 0.1;
    cfg.traj_period = 2;
    cfg.recon_lr = 1e-3;
    cfg.limits.dt = 2e-6;  // keeps the acceleration constraint mildly active
    cfg.threads = 2;
    return cfg;
  }
  if (name == "paper-3.2") {
    ExperimentConfig cfg;
    cfg.name = "paper-3.2";
    cfg.height = 384;
    cfg.width = 144;
    cfg.frames = 8;
    cfg.shots = 16;
    cfg.samples_per_shot = 512;
    cfg.recon = ArchConfig{8, 3, 1, 0.0};
    cfg.total_epochs = 315;
    cfg.epochs_per_stage = 35;
    cfg.reset_period = 35;
    cfg.batch_size = 12;
    cfg.sequences = 4170;
    cfg.fractions = {0.8, 0.175, 0.025};
    return cfg;
  }
  throw ConfigError("unknown preset: " + name + " (available: desk-small, paper-3.2)");
}

TrajMode ExperimentConfig::traj_mode() const {
  if (mode == "per-frame") return TrajMode::PerFrame;
  if (mode == "shared") return TrajMode::Shared;
  return TrajMode::Fixed;
}

NufftMode ExperimentConfig::nufft_mode() const {
  return nufft == "direct" ? NufftMode::Direct : NufftMode::Fast;
}

TrajectorySet ExperimentConfig::make_trajectory() const {
  const auto tm = traj_mode();
  if (tm == TrajMode::Shared) return init_radial(1, shots, samples_per_shot, k_extent);
  if (tm == TrajMode::Fixed) {
    if (init == "golden") return init_golden_angle(frames, shots, samples_per_shot, k_extent);
    return init_radial(1, shots, samples_per_shot, k_extent);
  }
  if (init == "golden") return init_golden_angle(frames, shots, samples_per_shot, k_extent);
  return init_radial(frames, shots, samples_per_shot, k_extent);
}

PipelineState ExperimentConfig::make_state() const {
  PipelineState state;
  state.traj = make_trajectory();
  state.recon = init_params(recon, seed_init);
  state.limits = limits;
  state.config.nufft = nufft_mode();
  state.config.kernel = kernel;
  state.config.shared_traj = state.traj.n_frames() == 1;
  state.config.regrid_scale = regrid_scale;
  return state;
}

TrainConfig ExperimentConfig::make_train_config() const {
  TrainConfig t;
  t.total_epochs = total_epochs;
  t.epochs_per_stage = epochs_per_stage;
  t.reset_period = reset_period;
  t.freeze = freeze && traj_mode() == TrajMode::PerFrame;
  t.resets = resets;
  t.mode = traj_mode();
  t.batch_size = batch_size;
  t.traj_lr = LrSchedule{traj_lr, traj_decay, traj_period, LrDecayKind::MultiplicativeStep};
  t.recon_lr =
      LrSchedule{recon_lr, recon_decay, recon_period, LrDecayKind::MultiplicativeStep};
  t.adam = AdamConfig{beta1, beta2, adam_eps};
  t.grad_clip = grad_clip;
  t.projection_iters = projection_iters;
  t.shuffle_seed = seed_shuffle;
  t.reset_seed_base = seed_reset_base;
  t.threads = threads;
  return t;
}

PhantomSpec ExperimentConfig::make_phantom_spec(std::uint64_t sample_seed) const {
  PhantomSpec spec = default_phantom_spec(height, width, frames);
  spec.bg_amplitude = bg_amplitude;
  spec.phase_ramp = phase_ramp;
  if (motion_jitter > 0.0) {
    std::mt19937_64 rng(sample_seed * 2654435761ull + 17);
    auto uniform = [&rng](double lo, double hi) {
      return lo + (hi - lo) * ((rng() >> 11) * 0x1.0p-53);
    };
    for (auto& e : spec.ellipses) {
      const double jc = motion_jitter;
      e.cy = std::clamp(e.cy + uniform(-jc, jc) * 0.1, 0.3, 0.7);
      e.cx = std::clamp(e.cx + uniform(-jc, jc) * 0.1, 0.3, 0.7);
      e.ry *= 1.0 + uniform(-jc, jc) * 0.5;
      e.rx *= 1.0 + uniform(-jc, jc) * 0.5;
      e.phase += uniform(0.0, kTwoPi) * jc;
      e.intensity = std::clamp(e.intensity * (1.0 + uniform(-jc, jc) * 0.3), 0.05, 1.0);
      e.pulse *= 1.0 + uniform(-jc, jc) * 0.5;
    }
  }
  spec.validate();
  return spec;
}

}  // namespace ktraj
