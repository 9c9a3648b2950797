#pragma once

#include <array>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "ktraj/common.hpp"
#include "ktraj/nufft.hpp"

namespace ktraj {

/// A dynamic sample: n complex-valued frames. Values are stored in float32
/// precision to match the DSEQ container bit-for-bit across round trips.
struct FrameSequence {
  int n_frames = 0;
  int h = 0;
  int w = 0;
  std::vector<std::complex<float>> frames;  // [n_frames][h][w]
  std::string meta;                         // JSON: phantom spec or source id

  FrameSequence() = default;
  FrameSequence(int nf, int hh, int ww) : n_frames(nf), h(hh), w(ww) {
    require(nf >= 1 && hh >= 1 && ww >= 1, "sequence dimensions must be positive");
    frames.assign(static_cast<std::size_t>(nf) * hh * ww, {0.f, 0.f});
  }

  std::complex<float>* frame(int t) {
    return frames.data() + static_cast<std::size_t>(t) * h * w;
  }
  const std::complex<float>* frame(int t) const {
    return frames.data() + static_cast<std::size_t>(t) * h * w;
  }

  /// Frame as a double-precision image for the operators.
  ComplexImage frame_image(int t) const;
  /// Magnitude of a frame.
  std::vector<double> frame_magnitude(int t) const;
};

struct PhantomEllipse {
  double cy = 0.5, cx = 0.5;   // center, fractional image coordinates
  double ry = 0.2, rx = 0.2;   // semi-axes, fractional
  double intensity = 0.5;      // additive contribution in [0, 1]
  double ay = 0.0, ax = 0.0;   // sinusoidal center motion amplitude, fractional
  double motion_cycles = 1.0;  // motion cycles per period
  double phase = 0.0;          // motion phase, radians
  double pulse = 0.0;          // fractional axis pulsation ("beating")
  double rot = 0.0;            // base orientation, radians
  double rot_amp = 0.0;        // sinusoidal rotation amplitude, radians
};

struct PhantomSpec {
  int h = 64, w = 64;
  int n_frames = 8;
  double period = 8.0;  // frames per motion cycle
  std::vector<PhantomEllipse> ellipses;
  double bg_amplitude = 0.12;  // low-frequency texture ceiling
  int bg_harmonics = 3;
  double edge_softness = 1.0;  // edge width in pixels
  double phase_ramp = 0.5;     // max phase gradient, cycles across the FOV

  void validate() const;
  std::string to_json() const;
  static PhantomSpec from_json(const std::string& text);
};

/// A cardiac-like default: static body, beating inner ellipse, a moving blob.
PhantomSpec default_phantom_spec(int h = 64, int w = 64, int n_frames = 8);

/// Deterministic given (spec, seed); the seed drives the background texture
/// and the per-sample phase ramp.
FrameSequence generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

struct AugmentPlan {
  bool vflip = false;
  bool hflip = false;
  bool rescale = false;
  double scale = 1.0;  // in [0.8, 1.2]
  bool mask = false;
  double mask_cy = 0.5, mask_cx = 0.5;  // fractional
  double mask_sigma = 0.3;              // fraction of min(h, w)
};

/// Each of the elementary operations fires independently with p = 0.4.
AugmentPlan draw_augment_plan(std::mt19937_64& rng);

/// Applies the same transform to every frame of the sequence.
FrameSequence apply_augment(const FrameSequence& seq, const AugmentPlan& plan);

inline FrameSequence augment(const FrameSequence& seq, std::mt19937_64& rng) {
  return apply_augment(seq, draw_augment_plan(rng));
}

struct DatasetSplit {
  std::vector<int> train;
  std::vector<int> test;
  std::vector<int> val;
};

/// Deterministic shuffled split: floor(n * f) for train and val, remainder
/// to test. fractions = (train, test, val) and must sum to 1.
DatasetSplit split_dataset(int n_samples, const std::array<double, 3>& fractions,
                           std::uint64_t seed);

/// Binary DSEQ container plus a JSON sidecar carrying `meta`.
void save_sequence(const FrameSequence& seq, const std::string& path);
FrameSequence load_sequence(const std::string& path);

/// All *.dseq files in a directory, ordered by filename.
std::vector<std::string> list_sequence_files(const std::string& dir);

}  // namespace ktraj
