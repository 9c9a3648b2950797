#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ktraj/common.hpp"

namespace ktraj {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers for one parameter group.
struct AdamState {
  AdamConfig config;
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  AdamState() = default;
  explicit AdamState(std::size_t n, AdamConfig cfg = {}) : config(cfg) {
    m.assign(n, 0.0);
    v.assign(n, 0.0);
  }
};

/// Standard Adam update with bias correction, in place.
void adam_step(double* params, const double* grads, std::size_t n, AdamState& state,
               double lr);

/// Zeroes moments and the step counter.
void reset_state(AdamState& state);

enum class LrDecayKind { MultiplicativeStep, SubtractiveStep };

/// Piecewise-constant learning-rate schedule, a pure function of the epoch.
struct LrSchedule {
  double base_lr = 0.1;
  double decay = 1.0;      // factor (multiplicative) or amount (subtractive)
  int period_epochs = 1;
  LrDecayKind kind = LrDecayKind::MultiplicativeStep;

  /// Validates positivity for every epoch in [0, horizon].
  static LrSchedule make(double base_lr, double decay, int period_epochs,
                         LrDecayKind kind, int horizon_epochs);

  double at_epoch(int epoch) const;
};

/// OPTM checkpoint: magic, little-endian counters and float64 moments.
void save_adam(const AdamState& state, const std::string& path);
AdamState load_adam(const std::string& path);

}  // namespace ktraj
