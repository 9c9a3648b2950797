#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ktraj/common.hpp"

namespace ktraj {

/// Per-frame, per-shot k-space sample coordinates.
///
/// Coordinates are in normalized frequency units: DC at (0,0), Nyquist at
/// +-0.5 cycles per pixel. Initializers may place samples on the closed
/// boundary (|k| = 0.5); the feasibility projection clamps into [-0.5, 0.5).
/// Layout is frame-major, then shot, then sample, then (kx, ky).
class TrajectorySet {
public:
  TrajectorySet(int n_frames, int n_shots, int m);

  int n_frames() const { return n_frames_; }
  int n_shots() const { return n_shots_; }
  int m() const { return m_; }

  double* at(int frame, int shot, int sample) {
    return coords_.data() + offset(frame, shot, sample);
  }
  const double* at(int frame, int shot, int sample) const {
    return coords_.data() + offset(frame, shot, sample);
  }

  /// Pointer to the first (kx, ky) pair of a frame; 2 * n_shots * m doubles.
  double* frame_data(int frame) { return coords_.data() + offset(frame, 0, 0); }
  const double* frame_data(int frame) const { return coords_.data() + offset(frame, 0, 0); }
  std::size_t frame_size() const { return static_cast<std::size_t>(n_shots_) * m_ * 2; }

  std::vector<double>& coords() { return coords_; }
  const std::vector<double>& coords() const { return coords_; }

  /// Throws if any coordinate is non-finite or strays outside |k| <= 0.5.
  void validate() const;

private:
  std::size_t offset(int frame, int shot, int sample) const {
    return ((static_cast<std::size_t>(frame) * n_shots_ + shot) * m_ + sample) * 2;
  }

  int n_frames_;
  int n_shots_;
  int m_;
  std::vector<double> coords_;
};

enum class TrajectoryInitKind { Radial, GoldenAngleRotated };

/// n_shots straight spokes through the origin, uniformly rotated over
/// [0, pi), spoke i at angle i*pi/n_shots. Every frame gets an identical
/// copy. Each spoke has m equispaced samples spanning [-k_extent, k_extent].
TrajectorySet init_radial(int n_frames, int n_shots, int m, double k_extent);

/// Radial pattern rotated by t * 111.246117975 degrees for frame t.
TrajectorySet init_golden_angle(int n_frames, int n_shots, int m, double k_extent);

/// Copies frame t_src's coordinate block onto frame t_dst.
void clone_frame_trajectory(int t_src, int t_dst, TrajectorySet& traj);

/// Binary KTRJ container, bit-exact round trip.
void save_trajectory(const TrajectorySet& traj, const std::string& path);
TrajectorySet load_trajectory(const std::string& path);

}  // namespace ktraj
