#include "ktraj/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace ktraj {

std::pair<double, double> difference_bounds(const KinematicLimits& limits) {
  limits.validate();
  return {limits.v_max(), limits.a_max()};
}

namespace {

struct Pt {
  double x, y;
};

double norm2(double x, double y) { return std::sqrt(x * x + y * y); }

// Worst relative violation of one shot (max over speed and accel families).
double shot_violation(const Pt* p, int m, double v_max, double a_max,
                      int* worst_sample = nullptr, ViolationKind* worst_kind = nullptr,
                      double* worst_excess = nullptr) {
  double rel = -1.0;
  int sample = 0;
  ViolationKind kind = ViolationKind::Speed;
  double excess = 0.0;
  for (int i = 0; i + 1 < m; ++i) {
    const double L = norm2(p[i + 1].x - p[i].x, p[i + 1].y - p[i].y);
    const double r = (L - v_max) / v_max;
    if (r > rel) {
      rel = r;
      sample = i;
      kind = ViolationKind::Speed;
      excess = L - v_max;
    }
  }
  for (int i = 1; i + 1 < m; ++i) {
    const double L = norm2(p[i + 1].x - 2 * p[i].x + p[i - 1].x,
                           p[i + 1].y - 2 * p[i].y + p[i - 1].y);
    const double r = (L - a_max) / a_max;
    if (r > rel) {
      rel = r;
      sample = i;
      kind = ViolationKind::Accel;
      excess = L - a_max;
    }
  }
  if (worst_sample) *worst_sample = sample;
  if (worst_kind) *worst_kind = kind;
  if (worst_excess) *worst_excess = excess;
  return rel;  // negative means feasible with margin
}

// Single-constraint closed-form projections. Each touches only the points
// involved in the difference.

void project_speed(Pt& a, Pt& b, double v_max) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double L = norm2(dx, dy);
  if (L <= v_max) return;
  const double shrink = 0.5 * (L - v_max) / L;
  a.x += shrink * dx;
  a.y += shrink * dy;
  b.x -= shrink * dx;
  b.y -= shrink * dy;
}

void project_accel(Pt& a, Pt& b, Pt& c, double a_max) {
  const double qx = c.x - 2 * b.x + a.x;
  const double qy = c.y - 2 * b.y + a.y;
  const double L = norm2(qx, qy);
  if (L <= a_max) return;
  const double f = (a_max - L) / (6.0 * L);  // w = (1,-2,1), |w|^2 = 6
  a.x += f * qx;
  a.y += f * qy;
  b.x -= 2 * f * qx;
  b.y -= 2 * f * qy;
  c.x += f * qx;
  c.y += f * qy;
}

void project_box(Pt* p, int m, double lo, double hi) {
  for (int i = 0; i < m; ++i) {
    p[i].x = std::clamp(p[i].x, lo, hi);
    p[i].y = std::clamp(p[i].y, lo, hi);
  }
}

struct ShotProjector {
  int m;
  double v_max, a_max, box_lo, box_hi;
  std::vector<Pt> x;
  // Dykstra correction vectors, stored compactly on the points each
  // constraint touches: 2 points per speed constraint, 3 per accel,
  // m for the box.
  std::vector<Pt> corr_speed;  // (m-1) * 2
  std::vector<Pt> corr_accel;  // (m-2) * 3
  std::vector<Pt> corr_box;    // m

  double run(Pt* points, int max_cycles, std::vector<double>* trace) {
    x.assign(points, points + m);
    // feasible shots are returned bitwise unchanged
    {
      const double v0 = shot_violation(x.data(), m, v_max, a_max);
      bool in_box = true;
      for (const auto& p : x)
        if (p.x < box_lo || p.x > box_hi || p.y < box_lo || p.y > box_hi) in_box = false;
      if (v0 <= 1e-12 && in_box) {
        if (trace) trace->push_back(std::max(v0, 0.0));
        return v0;
      }
    }
    corr_speed.assign(std::max(m - 1, 0) * 2, Pt{0, 0});
    corr_accel.assign(std::max(m - 2, 0) * 3, Pt{0, 0});
    corr_box.assign(m, Pt{0, 0});

    double best = shot_violation(x.data(), m, v_max, a_max);
    std::vector<Pt> best_x = x;
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
      dykstra_cycle();
      const double v = shot_violation(x.data(), m, v_max, a_max);
      if (v < best) {
        best = v;
        best_x = x;
      }
      if (trace) trace->push_back(best);
      if (best <= 1e-12) break;
    }
    x = best_x;
    // The Dykstra iterate approaches the projection from outside the
    // intersection; a few plain cyclic passes push the tiny residual
    // violations to zero without measurably moving the point.
    for (int pass = 0; pass < 500; ++pass) {
      const double v = shot_violation(x.data(), m, v_max, a_max);
      if (v <= 1e-13) break;
      plain_cycle();
    }
    std::copy(x.begin(), x.end(), points);
    return shot_violation(x.data(), m, v_max, a_max);
  }

private:
  void dykstra_cycle() {
    for (int i = 0; i + 1 < m; ++i) {
      Pt* c = &corr_speed[2 * i];
      Pt a{x[i].x + c[0].x, x[i].y + c[0].y};
      Pt b{x[i + 1].x + c[1].x, x[i + 1].y + c[1].y};
      Pt a0 = a, b0 = b;
      project_speed(a, b, v_max);
      c[0] = {a0.x - a.x, a0.y - a.y};
      c[1] = {b0.x - b.x, b0.y - b.y};
      x[i] = a;
      x[i + 1] = b;
    }
    for (int i = 1; i + 1 < m; ++i) {
      Pt* c = &corr_accel[3 * (i - 1)];
      Pt a{x[i - 1].x + c[0].x, x[i - 1].y + c[0].y};
      Pt b{x[i].x + c[1].x, x[i].y + c[1].y};
      Pt d{x[i + 1].x + c[2].x, x[i + 1].y + c[2].y};
      Pt a0 = a, b0 = b, d0 = d;
      project_accel(a, b, d, a_max);
      c[0] = {a0.x - a.x, a0.y - a.y};
      c[1] = {b0.x - b.x, b0.y - b.y};
      c[2] = {d0.x - d.x, d0.y - d.y};
      x[i - 1] = a;
      x[i] = b;
      x[i + 1] = d;
    }
    for (int i = 0; i < m; ++i) {
      Pt z{x[i].x + corr_box[i].x, x[i].y + corr_box[i].y};
      Pt z0 = z;
      z.x = std::clamp(z.x, box_lo, box_hi);
      z.y = std::clamp(z.y, box_lo, box_hi);
      corr_box[i] = {z0.x - z.x, z0.y - z.y};
      x[i] = z;
    }
  }

  void plain_cycle() {
    for (int i = 0; i + 1 < m; ++i) project_speed(x[i], x[i + 1], v_max);
    for (int i = 1; i + 1 < m; ++i) project_accel(x[i - 1], x[i], x[i + 1], a_max);
    project_box(x.data(), m, box_lo, box_hi);
  }
};

}  // namespace

FeasibilityReport audit(const TrajectorySet& traj, const KinematicLimits& limits,
                        double tol) {
  limits.validate();
  require(tol >= 0.0, "audit tolerance must be >= 0");
  const double v_max = limits.v_max();
  const double a_max = limits.a_max();
  FeasibilityReport report;
  report.per_shot_worst.reserve(static_cast<std::size_t>(traj.n_frames()) * traj.n_shots());
  for (int f = 0; f < traj.n_frames(); ++f) {
    for (int s = 0; s < traj.n_shots(); ++s) {
      const Pt* p = reinterpret_cast<const Pt*>(traj.at(f, s, 0));
      ShotViolation worst{f, s, 0, ViolationKind::Speed, 0.0};
      shot_violation(p, traj.m(), v_max, a_max, &worst.sample, &worst.kind, &worst.excess);
      report.per_shot_worst.push_back(worst);
      for (int i = 0; i + 1 < traj.m(); ++i) {
        const double L = norm2(p[i + 1].x - p[i].x, p[i + 1].y - p[i].y);
        report.max_speed_violation = std::max(report.max_speed_violation, L - v_max);
      }
      for (int i = 1; i + 1 < traj.m(); ++i) {
        const double L = norm2(p[i + 1].x - 2 * p[i].x + p[i - 1].x,
                               p[i + 1].y - 2 * p[i].y + p[i - 1].y);
        report.max_accel_violation = std::max(report.max_accel_violation, L - a_max);
      }
    }
  }
  report.max_speed_violation = std::max(report.max_speed_violation, 0.0);
  report.max_accel_violation = std::max(report.max_accel_violation, 0.0);
  report.feasible = report.max_speed_violation <= tol * v_max &&
                    report.max_accel_violation <= tol * a_max;
  return report;
}

TrajectorySet project_feasible(const TrajectorySet& traj, const KinematicLimits& limits,
                               int iters, ProjectionInfo* info) {
  limits.validate();
  require(iters >= 1, "projection iteration count must be >= 1");
  if (info) *info = ProjectionInfo{};

  // Projection onto a set containing the point is the identity.
  if (audit(traj, limits, 1e-9).feasible) {
    if (info) info->converged = true;
    return traj;
  }

  TrajectorySet out = traj;
  // closed box: k = +0.5 aliases -0.5 on the integer pixel grid, and the
  // radial initializers legitimately place endpoint samples there
  const double box_hi = 0.5;
  ShotProjector proj;
  proj.m = traj.m();
  proj.v_max = limits.v_max();
  proj.a_max = limits.a_max();
  proj.box_lo = -0.5;
  proj.box_hi = box_hi;

  double worst_residual = 0.0;
  std::vector<double> worst_trace;
  for (int f = 0; f < out.n_frames(); ++f) {
    for (int s = 0; s < out.n_shots(); ++s) {
      std::vector<double> trace;
      Pt* points = reinterpret_cast<Pt*>(out.at(f, s, 0));
      const double res = proj.run(points, iters, info ? &trace : nullptr);
      worst_residual = std::max(worst_residual, res);
      if (info && trace.size() > worst_trace.size()) worst_trace = std::move(trace);
    }
  }
  if (info) {
    info->residual = std::max(worst_residual, 0.0);
    info->cycles = static_cast<int>(worst_trace.size());
    info->violation_trace = std::move(worst_trace);
    info->converged = worst_residual <= 1e-6;
  }
  return out;
}

}  // namespace ktraj
