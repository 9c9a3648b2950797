#pragma once

#include <utility>
#include <vector>

#include "ktraj/common.hpp"
#include "ktraj/trajectory.hpp"

namespace ktraj {

/// Scanner hardware limits and the scaling constants that convert them into
/// per-sample difference bounds in normalized k-space units.
struct KinematicLimits {
  double g_max = 40.0;       // peak gradient amplitude, mT/m
  double s_max = 200.0;      // maximum slew rate, T/m/s
  double dt = 10e-6;         // dwell time between samples, s
  double gamma = 42.576e6;   // gyromagnetic ratio, Hz/T
  double fov = 0.3;          // field of view, m

  void validate() const {
    require(g_max > 0 && s_max > 0 && dt > 0 && gamma > 0 && fov > 0,
            "kinematic limits must be strictly positive");
  }

  /// Max |dk| per step: gamma * g_max*1e-3 * dt * fov.
  double v_max() const { return gamma * g_max * 1e-3 * dt * fov; }
  /// Max |d2k| per step: gamma * s_max * dt^2 * fov.
  double a_max() const { return gamma * s_max * dt * dt * fov; }
};

/// (v_max, a_max) in normalized k-space units per step.
std::pair<double, double> difference_bounds(const KinematicLimits& limits);

enum class ViolationKind { Speed, Accel };

struct ShotViolation {
  int frame = 0;
  int shot = 0;
  int sample = 0;              // index of the worst difference within the shot
  ViolationKind kind = ViolationKind::Speed;
  double excess = 0.0;         // Euclidean-norm excess over the bound (can be <= 0)
};

struct FeasibilityReport {
  double max_speed_violation = 0.0;   // worst excess over v_max, 0 if none
  double max_accel_violation = 0.0;   // worst excess over a_max, 0 if none
  bool feasible = true;
  std::vector<ShotViolation> per_shot_worst;  // one entry per (frame, shot)
};

/// Checks first and second difference norms of every shot against the
/// bounds. Feasible iff both worst excesses are <= tol relative to the
/// respective bound.
FeasibilityReport audit(const TrajectorySet& traj, const KinematicLimits& limits,
                        double tol = 1e-9);

struct ProjectionInfo {
  bool converged = true;     // worst relative violation <= 1e-6 after projection
  int cycles = 0;            // Dykstra cycles actually run (max over shots)
  double residual = 0.0;     // worst relative violation over all shots
  std::vector<double> violation_trace;  // per-cycle best-so-far violation (worst shot)
};

/// Projects each shot independently onto
///   { c : |c[i+1]-c[i]| <= v_max, |c[i+1]-2c[i]+c[i-1]| <= a_max } intersected
/// with the coordinate box [-0.5, 0.5), via Dykstra's alternating projections
/// over the closed-form single-constraint projections. A feasible input is
/// returned unchanged.
TrajectorySet project_feasible(const TrajectorySet& traj, const KinematicLimits& limits,
                               int iters = 200, ProjectionInfo* info = nullptr);

/// Projection is applied to parameters between optimizer steps and is not
/// differentiated through: the trajectory gradient passes unchanged.
inline std::vector<double> project_gradient_passthrough(std::vector<double> grad,
                                                        const TrajectorySet& /*traj_pre*/,
                                                        const TrajectorySet& /*traj_post*/) {
  return grad;
}

}  // namespace ktraj
