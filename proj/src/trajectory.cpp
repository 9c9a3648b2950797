#include "ktraj/trajectory.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "ktraj/io.hpp"

namespace ktraj {

TrajectorySet::TrajectorySet(int n_frames, int n_shots, int m)
    : n_frames_(n_frames), n_shots_(n_shots), m_(m) {
  require(n_frames >= 1 && n_shots >= 1 && m >= 1,
          "trajectory dimensions must be positive");
  coords_.assign(static_cast<std::size_t>(n_frames) * n_shots * m * 2, 0.0);
}

void TrajectorySet::validate() const {
  for (double c : coords_) {
    if (!std::isfinite(c)) throw ArgumentError("trajectory coordinate is not finite");
    if (std::abs(c) > 0.5) throw ArgumentError("trajectory coordinate outside [-0.5, 0.5]");
  }
}

namespace {

void fill_radial_frame(TrajectorySet& traj, int frame, int n_shots, int m,
                       double k_extent, double rot) {
  const double c = std::cos(rot);
  const double s = std::sin(rot);
  for (int shot = 0; shot < n_shots; ++shot) {
    const double angle = shot * kPi / n_shots;
    const double dx = std::cos(angle);
    const double dy = std::sin(angle);
    for (int i = 0; i < m; ++i) {
      // t hits 0 exactly at the middle index for odd m, and +-k_extent at
      // the ends.
      const double t = (m == 1) ? 0.0 : k_extent * (2.0 * i - (m - 1)) / (m - 1);
      const double x = t * dx;
      const double y = t * dy;
      double* p = traj.at(frame, shot, i);
      if (rot == 0.0) {
        p[0] = x;
        p[1] = y;
      } else {
        p[0] = c * x - s * y;
        p[1] = s * x + c * y;
      }
    }
  }
}

}  // namespace

TrajectorySet init_radial(int n_frames, int n_shots, int m, double k_extent) {
  require(k_extent > 0.0 && k_extent <= 0.5, "k_extent must be in (0, 0.5]");
  TrajectorySet traj(n_frames, n_shots, m);
  fill_radial_frame(traj, 0, n_shots, m, k_extent, 0.0);
  for (int t = 1; t < n_frames; ++t)
    std::memcpy(traj.frame_data(t), traj.frame_data(0), traj.frame_size() * sizeof(double));
  return traj;
}

TrajectorySet init_golden_angle(int n_frames, int n_shots, int m, double k_extent) {
  require(k_extent > 0.0 && k_extent <= 0.5, "k_extent must be in (0, 0.5]");
  TrajectorySet traj(n_frames, n_shots, m);
  for (int t = 0; t < n_frames; ++t) {
    const double rot = t * (kGoldenAngleDeg * kPi / 180.0);
    fill_radial_frame(traj, t, n_shots, m, k_extent, rot);
    // Rotation preserves radius <= k_extent <= 0.5, but guard the box anyway.
    double* p = traj.frame_data(t);
    for (std::size_t i = 0; i < traj.frame_size(); ++i) {
      if (p[i] > 0.5) p[i] = 0.5;
      if (p[i] < -0.5) p[i] = -0.5;
    }
  }
  return traj;
}

void clone_frame_trajectory(int t_src, int t_dst, TrajectorySet& traj) {
  require(t_src >= 0 && t_src < traj.n_frames(), "t_src out of range");
  require(t_dst >= 0 && t_dst < traj.n_frames(), "t_dst out of range");
  if (t_src == t_dst) return;
  std::memcpy(traj.frame_data(t_dst), traj.frame_data(t_src),
              traj.frame_size() * sizeof(double));
}

namespace {
constexpr char kTrajMagic[4] = {'K', 'T', 'R', 'J'};
constexpr std::uint16_t kTrajVersion = 1;
}  // namespace

void save_trajectory(const TrajectorySet& traj, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kTrajMagic, 4);
  io::write_u16(out, kTrajVersion);
  io::write_u32(out, static_cast<std::uint32_t>(traj.n_frames()));
  io::write_u32(out, static_cast<std::uint32_t>(traj.n_shots()));
  io::write_u32(out, static_cast<std::uint32_t>(traj.m()));
  io::write_f64_array(out, traj.coords().data(), traj.coords().size());
  if (!out) throw IoError("write failed: " + path);
}

TrajectorySet load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  char magic[4];
  if (!in.read(magic, 4)) throw IoError(path + ": truncated file, missing magic");
  if (std::memcmp(magic, kTrajMagic, 4) != 0)
    throw IoError(path + ": bad magic, not a KTRJ file");
  const auto version = io::read_u16(in, path + ": truncated header, missing version");
  if (version != kTrajVersion)
    throw IoError(path + ": unsupported KTRJ version " + std::to_string(version));
  const auto n_frames = io::read_u32(in, path + ": truncated header, missing n_frames");
  const auto n_shots = io::read_u32(in, path + ": truncated header, missing n_shots");
  const auto m = io::read_u32(in, path + ": truncated header, missing m");
  if (n_frames < 1 || n_shots < 1 || m < 1)
    throw IoError(path + ": header declares empty trajectory");
  TrajectorySet traj(static_cast<int>(n_frames), static_cast<int>(n_shots),
                     static_cast<int>(m));
  io::read_f64_array(in, traj.coords().data(), traj.coords().size(),
                     path + ": coordinate payload shorter than header shape");
  return traj;
}

}  // namespace ktraj
