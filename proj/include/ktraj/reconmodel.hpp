#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ktraj/common.hpp"

namespace ktraj {

/// Reference reconstruction architecture: per-frame encoder-decoder over the
/// frame stacked with its +-temporal_radius neighbors (edges replicate),
/// conv3x3 + ReLU blocks over `scales` resolution levels with 2x2 average
/// pooling down and nearest-neighbor upsampling back, skip connections by
/// channel concatenation, a final 1x1 conv, and a residual add of the input
/// magnitude.
struct ArchConfig {
  int base_channels = 8;
  int scales = 3;
  int temporal_radius = 1;
  double dropout = 0.0;  // applied after each ReLU in training mode

  void validate() const {
    require(base_channels >= 1, "base_channels must be >= 1");
    require(scales >= 1 && scales <= 5, "scales must be in [1, 5]");
    require(temporal_radius >= 0, "temporal_radius must be >= 0");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
  }
  std::uint64_t hash() const;
};

struct ParamBlock {
  std::string name;
  std::size_t offset = 0;
  std::array<int, 4> shape{0, 0, 0, 0};  // [cout][cin][k][k]; bias: [cout,0,0,0]
  std::size_t size = 0;
};

/// Flat parameter store with a layer-layout table.
struct ReconParams {
  ArchConfig config;
  std::vector<double> theta;
  std::vector<ParamBlock> layout;

  const ParamBlock& block(const std::string& name) const;
};

/// Deterministic init: uniform fan-in scaling for conv kernels, zero biases.
/// The same (config, seed) yields a bitwise-identical vector.
ReconParams init_params(const ArchConfig& config, std::uint64_t seed);

/// Re-initializes in place; the caller owns clearing any optimizer state.
void reset_params(ReconParams& params, std::uint64_t seed);

/// Real/imaginary channel stack of the regridded frames, [n_frames][2][H][W].
struct ReconInput {
  int n_frames = 0, h = 0, w = 0;
  std::vector<double> v;

  ReconInput() = default;
  ReconInput(int nf, int hh, int ww) : n_frames(nf), h(hh), w(ww) {
    v.assign(static_cast<std::size_t>(nf) * 2 * hh * ww, 0.0);
  }
  double* channel(int t, int c) {
    return v.data() + (static_cast<std::size_t>(t) * 2 + c) * h * w;
  }
  const double* channel(int t, int c) const {
    return v.data() + (static_cast<std::size_t>(t) * 2 + c) * h * w;
  }
};

/// Magnitude reconstruction, [n_frames][1][H][W].
struct ReconOutput {
  int n_frames = 0, h = 0, w = 0;
  std::vector<double> v;

  ReconOutput() = default;
  ReconOutput(int nf, int hh, int ww) : n_frames(nf), h(hh), w(ww) {
    v.assign(static_cast<std::size_t>(nf) * hh * ww, 0.0);
  }
  double* frame(int t) { return v.data() + static_cast<std::size_t>(t) * h * w; }
  const double* frame(int t) const {
    return v.data() + static_cast<std::size_t>(t) * h * w;
  }
};

/// Holds the cached activations of one forward pass. Distinct workspaces make
/// forward/backward reentrant across threads.
class ReconWorkspace {
public:
  bool training = false;
  std::mt19937_64 dropout_rng{0};

  // filled by recon_forward, consumed by recon_backward
  struct Impl;
  std::shared_ptr<Impl> impl;
};

ReconOutput recon_forward(const ReconParams& params, const ReconInput& input,
                          ReconWorkspace& ws);

struct ReconGrads {
  std::vector<double> theta;  // same layout as ReconParams::theta
  ReconInput input;
};

/// Exact gradients of the cached forward pass. Throws on a stale workspace.
ReconGrads recon_backward(const ReconParams& params, const ReconWorkspace& ws,
                          const ReconOutput& upstream);

/// RPRM checkpoint: magic, config hash, little-endian float64 vector.
void save_params(const ReconParams& params, const std::string& path);
ReconParams load_params(const std::string& path, const ArchConfig& expected);

}  // namespace ktraj
