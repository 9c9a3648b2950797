#include "ktraj/optimizer.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "ktraj/io.hpp"

namespace ktraj {

void adam_step(double* params, const double* grads, std::size_t n, AdamState& state,
               double lr) {
  require(state.m.size() == n && state.v.size() == n,
          "optimizer state does not match the parameter group size");
  const double b1 = state.config.beta1;
  const double b2 = state.config.beta2;
  const double eps = state.config.eps;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = b1 * state.m[i] + (1.0 - b1) * grads[i];
    state.v[i] = b2 * state.v[i] + (1.0 - b2) * grads[i] * grads[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

void reset_state(AdamState& state) {
  std::fill(state.m.begin(), state.m.end(), 0.0);
  std::fill(state.v.begin(), state.v.end(), 0.0);
  state.step = 0;
}

LrSchedule LrSchedule::make(double base_lr, double decay, int period_epochs,
                            LrDecayKind kind, int horizon_epochs) {
  if (period_epochs < 1) throw ConfigError("learning-rate period must be >= 1");
  if (base_lr <= 0.0) throw ConfigError("base learning rate must be positive");
  LrSchedule s{base_lr, decay, period_epochs, kind};
  if (kind == LrDecayKind::MultiplicativeStep) {
    if (decay <= 0.0) throw ConfigError("multiplicative decay factor must be positive");
  } else {
    if (decay < 0.0) throw ConfigError("subtractive decay must be non-negative");
    const int worst = horizon_epochs >= 0 ? horizon_epochs : period_epochs;
    if (s.at_epoch(worst) <= 0.0)
      throw ConfigError("subtractive schedule reaches a non-positive learning rate");
  }
  return s;
}

double LrSchedule::at_epoch(int epoch) const {
  require(epoch >= 0, "epoch must be >= 0");
  const int steps = epoch / period_epochs;
  if (kind == LrDecayKind::MultiplicativeStep)
    return base_lr * std::pow(decay, static_cast<double>(steps));
  return base_lr - decay * static_cast<double>(steps);
}

namespace {
constexpr char kAdamMagic[4] = {'O', 'P', 'T', 'M'};
}

void save_adam(const AdamState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kAdamMagic, 4);
  io::write_u64(out, state.m.size());
  io::write_u64(out, static_cast<std::uint64_t>(state.step));
  io::write_f64_array(out, &state.config.beta1, 1);
  io::write_f64_array(out, &state.config.beta2, 1);
  io::write_f64_array(out, &state.config.eps, 1);
  io::write_f64_array(out, state.m.data(), state.m.size());
  io::write_f64_array(out, state.v.data(), state.v.size());
  if (!out) throw IoError("write failed: " + path);
}

AdamState load_adam(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  char magic[4];
  if (!in.read(magic, 4)) throw IoError(path + ": truncated file, missing magic");
  if (std::memcmp(magic, kAdamMagic, 4) != 0)
    throw IoError(path + ": bad magic, not an OPTM file");
  const auto n = io::read_u64(in, path + ": truncated header, missing size");
  const auto step = io::read_u64(in, path + ": truncated header, missing step");
  AdamState state(n);
  state.step = static_cast<std::int64_t>(step);
  io::read_f64_array(in, &state.config.beta1, 1, path + ": truncated config");
  io::read_f64_array(in, &state.config.beta2, 1, path + ": truncated config");
  io::read_f64_array(in, &state.config.eps, 1, path + ": truncated config");
  io::read_f64_array(in, state.m.data(), n, path + ": moment payload too short");
  io::read_f64_array(in, state.v.data(), n, path + ": moment payload too short");
  return state;
}

}  // namespace ktraj
