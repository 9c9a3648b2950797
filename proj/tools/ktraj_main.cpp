// ktraj: config-driven experiment runner for learned dynamic k-space
// acquisition. Subcommands: generate-data, train, evaluate, audit, plot-data.
//
// Configuration resolution order: preset < --config file < command-line
// flags. Selected flags can also come from the environment with the KTRAJ_
// prefix (e.g. KTRAJ_THREADS); exit codes: 0 ok, 2 config error, 3 runtime
// abort.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"
#include "ktraj/config.hpp"

namespace fs = std::filesystem;
using namespace ktraj;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::optional<std::string> config_file;
  std::optional<std::string> preset;
  std::optional<int> shots, samples, frames, epochs, epochs_per_stage, reset_period;
  std::optional<int> batch, sequences, threads, height, width;
  std::optional<std::string> mode, init, nufft, data_dir, out_dir;
  std::optional<bool> freeze, resets, augment;
  std::optional<std::uint64_t> seed_data, seed_init, seed_shuffle;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_file, "JSON config file");
  cmd->add_option("--preset", o.preset, "named preset: desk-small | paper-3.2");
  cmd->add_option("--shots", o.shots, "shots per frame");
  cmd->add_option("--samples", o.samples, "samples per shot");
  cmd->add_option("--frames", o.frames, "frames per sequence");
  cmd->add_option("--height", o.height, "image height");
  cmd->add_option("--width", o.width, "image width");
  cmd->add_option("--epochs", o.epochs, "total training epochs");
  cmd->add_option("--epochs-per-stage", o.epochs_per_stage, "epochs per freezing stage");
  cmd->add_option("--reset-period", o.reset_period, "reset period c (non-freezing)");
  cmd->add_option("--batch", o.batch, "batch size");
  cmd->add_option("--sequences", o.sequences, "dataset size");
  cmd->add_option("--threads", o.threads, "worker threads")->envname("KTRAJ_THREADS");
  cmd->add_option("--mode", o.mode, "per-frame | shared | fixed");
  cmd->add_option("--init", o.init, "radial | golden");
  cmd->add_option("--nufft", o.nufft, "fast | direct");
  cmd->add_option("--data-dir", o.data_dir, "dataset directory")->envname("KTRAJ_DATA_DIR");
  cmd->add_option("--out", o.out_dir, "output directory")->envname("KTRAJ_OUT_DIR");
  cmd->add_flag("--freeze,!--no-freeze", o.freeze, "trajectory freezing schedule");
  cmd->add_flag("--resets,!--no-resets", o.resets, "reconstruction resets");
  cmd->add_flag("--augment,!--no-augment", o.augment, "dataset augmentation");
  cmd->add_option("--seed-data", o.seed_data, "dataset seed");
  cmd->add_option("--seed-init", o.seed_init, "parameter init seed");
  cmd->add_option("--seed-shuffle", o.seed_shuffle, "batch shuffle seed");
}

ExperimentConfig resolve(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (o.preset) cfg = ExperimentConfig::preset(*o.preset);
  if (o.config_file) {
    // file overrides preset defaults field-by-field via its own preset key;
    // an explicit --preset plus --config applies preset first, then file
    auto file_cfg = ExperimentConfig::from_json_file(*o.config_file);
    cfg = file_cfg;
  }
  if (o.shots) cfg.shots = *o.shots;
  if (o.samples) cfg.samples_per_shot = *o.samples;
  if (o.frames) cfg.frames = *o.frames;
  if (o.height) cfg.height = *o.height;
  if (o.width) cfg.width = *o.width;
  if (o.epochs) cfg.total_epochs = *o.epochs;
  if (o.epochs_per_stage) cfg.epochs_per_stage = *o.epochs_per_stage;
  if (o.reset_period) cfg.reset_period = *o.reset_period;
  if (o.batch) cfg.batch_size = *o.batch;
  if (o.sequences) cfg.sequences = *o.sequences;
  if (o.threads) cfg.threads = *o.threads;
  if (o.mode) cfg.mode = *o.mode;
  if (o.init) cfg.init = *o.init;
  if (o.nufft) cfg.nufft = *o.nufft;
  if (o.data_dir) cfg.data_dir = *o.data_dir;
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.freeze) cfg.freeze = *o.freeze;
  if (o.resets) cfg.resets = *o.resets;
  if (o.augment) cfg.augment_data = *o.augment;
  if (o.seed_data) cfg.seed_data = *o.seed_data;
  if (o.seed_init) cfg.seed_init = *o.seed_init;
  if (o.seed_shuffle) cfg.seed_shuffle = *o.seed_shuffle;
  cfg.validate();
  return cfg;
}

std::string seq_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "seq_%04d.dseq", i);
  return buf;
}

void cmd_generate_data(const ExperimentConfig& cfg, bool force) {
  const fs::path dir(cfg.data_dir);
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force)
      throw ConfigError("dataset path exists and is not empty (use --force): " +
                        dir.string());
    fs::remove_all(dir);
  }
  fs::create_directories(dir);

  for (int i = 0; i < cfg.sequences; ++i) {
    const auto spec = cfg.make_phantom_spec(cfg.seed_data + i);
    auto seq = generate_phantom(spec, cfg.seed_data + 1000003ull * i);
    if (cfg.augment_data) {
      std::mt19937_64 rng(cfg.seed_data + 7777ull + i);
      seq = augment(seq, rng);
    }
    save_sequence(seq, (dir / seq_name(i)).string());
  }

  const auto split = split_dataset(cfg.sequences, cfg.fractions, cfg.seed_data);
  json manifest;
  manifest["sequences"] = cfg.sequences;
  manifest["seed"] = cfg.seed_data;
  manifest["fractions"] = cfg.fractions;
  auto names = [](const std::vector<int>& idx) {
    std::vector<std::string> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(seq_name(i));
    return out;
  };
  manifest["train"] = names(split.train);
  manifest["test"] = names(split.test);
  manifest["val"] = names(split.val);
  std::ofstream out(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
  std::cout << "wrote " << cfg.sequences << " sequences to " << dir.string() << " (train "
            << split.train.size() << ", test " << split.test.size() << ", val "
            << split.val.size() << ")\n";
}

Dataset load_dataset(const std::string& dir) {
  const fs::path manifest_path = fs::path(dir) / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw IoError("missing dataset manifest: " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw IoError("malformed manifest: " + std::string(e.what()));
  }
  Dataset data;
  auto load_list = [&](const char* key, std::vector<FrameSequence>& into) {
    for (const auto& name : manifest.at(key))
      into.push_back(load_sequence((fs::path(dir) / name.get<std::string>()).string()));
  };
  load_list("train", data.train);
  load_list("test", data.test);
  load_list("val", data.val);
  return data;
}

void cmd_train(const ExperimentConfig& cfg) {
  auto data = load_dataset(cfg.data_dir);
  auto state = cfg.make_state();
  auto tc = cfg.make_train_config();

  fs::create_directories(cfg.out_dir);
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config.json");
    echo << cfg.to_json() << '\n';
  }
  const auto report = run(tc, data, state, cfg.out_dir);
  std::cout << "run complete: " << report.log.size() << " epochs, test PSNR "
            << report.test_psnr.mean << " dB (vif " << report.test_vif.mean << ", fsim "
            << report.test_fsim.mean << ")\n"
            << "artifacts in " << cfg.out_dir << "\n";
}

int last_stage_index(const fs::path& ck_dir) {
  int last = -1;
  if (!fs::is_directory(ck_dir)) return last;
  for (const auto& entry : fs::directory_iterator(ck_dir)) {
    const auto name = entry.path().filename().string();
    int idx = -1;
    if (std::sscanf(name.c_str(), "stage_%d.rprm", &idx) == 1) last = std::max(last, idx);
  }
  return last;
}

void cmd_evaluate(const ExperimentConfig& cfg, const std::string& run_dir,
                  const std::string& split_name) {
  auto data = load_dataset(cfg.data_dir);
  const auto& split = split_name == "val"    ? data.val
                      : split_name == "train" ? data.train
                                               : data.test;
  auto state = cfg.make_state();
  if (!run_dir.empty()) {
    const fs::path ck = fs::path(run_dir) / "checkpoints";
    const int last = last_stage_index(ck);
    if (last < 0) throw IoError("no checkpoints under " + ck.string());
    const std::string tag = "stage_" + std::to_string(last);
    state.recon = load_params((ck / (tag + ".rprm")).string(), cfg.recon);
    state.traj = load_trajectory((ck / (tag + ".ktrj")).string());
    state.config.shared_traj = state.traj.n_frames() == 1;
  }
  const auto result = evaluate(state, split, cfg.threads);
  json j;
  j["split"] = split_name;
  j["samples"] = split.size();
  j["psnr"] = {{"mean", result.psnr.mean}, {"stderr", result.psnr.stderr_}};
  j["vif"] = {{"mean", result.vif.mean}, {"stderr", result.vif.stderr_}};
  j["fsim"] = {{"mean", result.fsim.mean}, {"stderr", result.fsim.stderr_}};
  std::cout << j.dump(2) << '\n';
}

void cmd_audit(const ExperimentConfig& cfg, const std::string& traj_file, double tol) {
  const auto traj = load_trajectory(traj_file);
  const auto report = audit(traj, cfg.limits, tol);
  const auto [v_max, a_max] = difference_bounds(cfg.limits);
  json j;
  j["file"] = traj_file;
  j["feasible"] = report.feasible;
  j["tolerance"] = tol;
  j["v_max"] = v_max;
  j["a_max"] = a_max;
  j["max_speed_violation"] = report.max_speed_violation;
  j["max_accel_violation"] = report.max_accel_violation;
  auto worst = report.per_shot_worst;
  std::sort(worst.begin(), worst.end(),
            [](const ShotViolation& a, const ShotViolation& b) { return a.excess > b.excess; });
  json list = json::array();
  const std::size_t cap = std::min<std::size_t>(worst.size(), 16);
  for (std::size_t i = 0; i < cap; ++i) {
    list.push_back({{"frame", worst[i].frame},
                    {"shot", worst[i].shot},
                    {"sample", worst[i].sample},
                    {"kind", worst[i].kind == ViolationKind::Speed ? "speed" : "accel"},
                    {"excess", worst[i].excess}});
  }
  j["per_shot_worst"] = list;
  std::cout << j.dump(2) << '\n';
}

void cmd_plot_data(const std::string& run_dir, std::string out_dir) {
  if (out_dir.empty()) out_dir = (fs::path(run_dir) / "plots").string();
  const fs::path ck = fs::path(run_dir) / "checkpoints";
  const int last = last_stage_index(ck);
  if (last < 0) throw IoError("no checkpoints under " + ck.string());
  const auto traj =
      load_trajectory((ck / ("stage_" + std::to_string(last) + ".ktrj")).string());
  fs::create_directories(out_dir);

  for (int t = 0; t < traj.n_frames(); ++t) {
    char name[48];
    std::snprintf(name, sizeof(name), "traj_frame_%02d.csv", t);
    std::ofstream out(fs::path(out_dir) / name);
    out << "frame,shot,sample,kx,ky\n";
    for (int s = 0; s < traj.n_shots(); ++s)
      for (int i = 0; i < traj.m(); ++i) {
        const double* p = traj.at(t, s, i);
        char row[128];
        std::snprintf(row, sizeof(row), "%d,%d,%d,%.17g,%.17g\n", t, s, i, p[0], p[1]);
        out << row;
      }
  }

  // loss/metric curves from the run log
  std::ifstream log_in(fs::path(run_dir) / "log.csv");
  if (!log_in) throw IoError("missing log.csv under " + run_dir);
  std::ofstream curves(fs::path(out_dir) / "curves.csv");
  curves << "epoch,train_loss,val_psnr,val_vif,val_fsim\n";
  std::string line;
  std::getline(log_in, line);  // header
  while (std::getline(log_in, line)) {
    int epoch, stage, active;
    char lr_t[64], lr_r[64], loss[64], psnr_[64], vif_[64], fsim_[64];
    int feas;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%63[^,],%63[^,],%63[^,],%63[^,],%63[^,],%63[^,],%d",
                    &epoch, &stage, &active, lr_t, lr_r, loss, psnr_, vif_, fsim_,
                    &feas) == 10) {
      curves << epoch << ',' << loss << ',' << psnr_ << ',' << vif_ << ',' << fsim_ << '\n';
    }
  }
  std::cout << "wrote " << traj.n_frames() << " trajectory CSVs and curves.csv to "
            << out_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"learned per-frame k-space trajectories for dynamic MRI"};
  app.require_subcommand(1);

  CommonOpts gen_opts, train_opts, eval_opts, audit_opts;
  bool force = false;
  std::string run_dir, split_name = "test", traj_file, plot_out;
  double audit_tol = 1e-9;

  auto* gen = app.add_subcommand("generate-data", "write a synthetic phantom dataset");
  add_common(gen, gen_opts);
  gen->add_flag("--force", force, "overwrite an existing dataset directory");

  auto* train = app.add_subcommand("train", "run the training schedule");
  add_common(train, train_opts);

  auto* eval = app.add_subcommand("evaluate", "metric report for a run checkpoint");
  add_common(eval, eval_opts);
  eval->add_option("--run", run_dir, "run directory holding checkpoints/");
  eval->add_option("--split", split_name, "train | test | val")->check(
      CLI::IsMember({"train", "test", "val"}));

  auto* aud = app.add_subcommand("audit", "kinematic feasibility report for a KTRJ file");
  add_common(aud, audit_opts);
  aud->add_option("--traj", traj_file, "trajectory file")->required();
  aud->add_option("--tol", audit_tol, "relative feasibility tolerance");

  auto* plot = app.add_subcommand("plot-data", "emit trajectory and curve CSV bundles");
  plot->add_option("--run", run_dir, "run directory")->required();
  plot->add_option("--out", plot_out, "output directory (default <run>/plots)");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) cmd_generate_data(resolve(gen_opts), force);
    if (train->parsed()) cmd_train(resolve(train_opts));
    if (eval->parsed()) cmd_evaluate(resolve(eval_opts), run_dir, split_name);
    if (aud->parsed()) cmd_audit(resolve(audit_opts), traj_file, audit_tol);
    if (plot->parsed()) cmd_plot_data(run_dir, plot_out);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
