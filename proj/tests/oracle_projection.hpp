#pragma once

// Independent brute-force oracle for the feasibility projection: penalty
// method with an increasing penalty ladder, minimized by gradient descent
// with Barzilai-Borwein steps and Armijo backtracking, followed by a shrink
// step that restores exact feasibility. Shares nothing with the Dykstra
// implementation under test.

#include <algorithm>
#include <cmath>
#include <vector>

namespace oracle {

struct ShotProblem {
  int m = 0;
  double v_max = 0.0;
  double a_max = 0.0;
};

inline double sq(double x) { return x * x; }

inline double penalty_value(const ShotProblem& p, const std::vector<double>& c,
                            const std::vector<double>& x, double mu) {
  double f = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) f += sq(c[i] - x[i]);
  for (int i = 0; i + 1 < p.m; ++i) {
    const double dx = c[2 * (i + 1)] - c[2 * i];
    const double dy = c[2 * (i + 1) + 1] - c[2 * i + 1];
    const double ex = std::sqrt(dx * dx + dy * dy) - p.v_max;
    if (ex > 0) f += mu * sq(ex);
  }
  for (int i = 1; i + 1 < p.m; ++i) {
    const double qx = c[2 * (i + 1)] - 2 * c[2 * i] + c[2 * (i - 1)];
    const double qy = c[2 * (i + 1) + 1] - 2 * c[2 * i + 1] + c[2 * (i - 1) + 1];
    const double ex = std::sqrt(qx * qx + qy * qy) - p.a_max;
    if (ex > 0) f += mu * sq(ex);
  }
  return f;
}

inline void penalty_grad(const ShotProblem& p, const std::vector<double>& c,
                         const std::vector<double>& x, double mu,
                         std::vector<double>& g) {
  g.assign(c.size(), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) g[i] = 2.0 * (c[i] - x[i]);
  for (int i = 0; i + 1 < p.m; ++i) {
    const double dx = c[2 * (i + 1)] - c[2 * i];
    const double dy = c[2 * (i + 1) + 1] - c[2 * i + 1];
    const double L = std::sqrt(dx * dx + dy * dy);
    const double ex = L - p.v_max;
    if (ex > 0 && L > 0) {
      const double s = 2.0 * mu * ex / L;
      g[2 * (i + 1)] += s * dx;
      g[2 * (i + 1) + 1] += s * dy;
      g[2 * i] -= s * dx;
      g[2 * i + 1] -= s * dy;
    }
  }
  for (int i = 1; i + 1 < p.m; ++i) {
    const double qx = c[2 * (i + 1)] - 2 * c[2 * i] + c[2 * (i - 1)];
    const double qy = c[2 * (i + 1) + 1] - 2 * c[2 * i + 1] + c[2 * (i - 1) + 1];
    const double L = std::sqrt(qx * qx + qy * qy);
    const double ex = L - p.a_max;
    if (ex > 0 && L > 0) {
      const double s = 2.0 * mu * ex / L;
      g[2 * (i + 1)] += s * qx;
      g[2 * (i + 1) + 1] += s * qy;
      g[2 * (i - 1)] += s * qx;
      g[2 * (i - 1) + 1] += s * qy;
      g[2 * i] -= 2 * s * qx;
      g[2 * i + 1] -= 2 * s * qy;
    }
  }
}

inline void minimize(const ShotProblem& p, std::vector<double>& c,
                     const std::vector<double>& x, double mu, int max_iters) {
  std::vector<double> g, g_prev, c_prev;
  penalty_grad(p, c, x, mu, g);
  double step = 1e-3;
  for (int it = 0; it < max_iters; ++it) {
    double gnorm2 = 0.0;
    for (double gi : g) gnorm2 += gi * gi;
    if (gnorm2 < 1e-26) break;

    if (!c_prev.empty()) {  // Barzilai-Borwein step length
      double sy = 0.0, yy = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) {
        const double si = c[i] - c_prev[i];
        const double yi = g[i] - g_prev[i];
        sy += si * yi;
        yy += yi * yi;
      }
      if (yy > 0 && sy > 0) step = std::clamp(sy / yy, 1e-12, 1e3);
    }

    const double f0 = penalty_value(p, c, x, mu);
    c_prev = c;
    g_prev = g;
    double t = step;
    std::vector<double> trial(c.size());
    for (int bt = 0; bt < 60; ++bt) {
      for (std::size_t i = 0; i < c.size(); ++i) trial[i] = c[i] - t * g[i];
      if (penalty_value(p, trial, x, mu) <= f0 - 1e-4 * t * gnorm2) break;
      t *= 0.5;
    }
    c = trial;
    penalty_grad(p, c, x, mu, g);
  }
}

inline double max_rel_violation(const ShotProblem& p, const std::vector<double>& c) {
  double worst = 0.0;
  for (int i = 0; i + 1 < p.m; ++i) {
    const double dx = c[2 * (i + 1)] - c[2 * i];
    const double dy = c[2 * (i + 1) + 1] - c[2 * i + 1];
    worst = std::max(worst, (std::sqrt(dx * dx + dy * dy) - p.v_max) / p.v_max);
  }
  for (int i = 1; i + 1 < p.m; ++i) {
    const double qx = c[2 * (i + 1)] - 2 * c[2 * i] + c[2 * (i - 1)];
    const double qy = c[2 * (i + 1) + 1] - 2 * c[2 * i + 1] + c[2 * (i - 1) + 1];
    worst = std::max(worst, (std::sqrt(qx * qx + qy * qy) - p.a_max) / p.a_max);
  }
  return worst;
}

/// Returns an exactly feasible point near the distance-optimal projection of
/// x (first/second difference constraints only; callers keep the coordinate
/// box inactive by construction).
inline std::vector<double> project(const ShotProblem& p, const std::vector<double>& x) {
  std::vector<double> c = x;
  for (double mu : {1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9})
    minimize(p, c, x, mu, mu >= 1e8 ? 20000 : 4000);

  // Differences are linear in a shrink toward the centroid, so scaling by
  // 1/(1+rho) with rho the worst relative violation restores feasibility
  // while moving the point O(rho).
  const double rho = max_rel_violation(p, c);
  if (rho > 0) {
    double cx = 0.0, cy = 0.0;
    for (int i = 0; i < p.m; ++i) {
      cx += c[2 * i];
      cy += c[2 * i + 1];
    }
    cx /= p.m;
    cy /= p.m;
    const double s = 1.0 / (1.0 + rho * 1.0000001);
    for (int i = 0; i < p.m; ++i) {
      c[2 * i] = cx + s * (c[2 * i] - cx);
      c[2 * i + 1] = cy + s * (c[2 * i + 1] - cy);
    }
  }
  return c;
}

inline double dist(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += sq(a[i] - b[i]);
  return std::sqrt(d);
}

}  // namespace oracle
