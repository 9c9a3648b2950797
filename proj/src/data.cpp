#include "ktraj/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "ktraj/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ktraj {

ComplexImage FrameSequence::frame_image(int t) const {
  require(t >= 0 && t < n_frames, "frame index out of range");
  ComplexImage img(h, w);
  const auto* src = frame(t);
  for (std::size_t i = 0; i < img.v.size(); ++i)
    img.v[i] = cplx{src[i].real(), src[i].imag()};
  return img;
}

std::vector<double> FrameSequence::frame_magnitude(int t) const {
  require(t >= 0 && t < n_frames, "frame index out of range");
  std::vector<double> mag(static_cast<std::size_t>(h) * w);
  const auto* src = frame(t);
  for (std::size_t i = 0; i < mag.size(); ++i) mag[i] = std::abs(cplx{src[i].real(), src[i].imag()});
  return mag;
}

void PhantomSpec::validate() const {
  require(h >= 1 && w >= 1 && n_frames >= 1, "phantom dimensions must be positive");
  require(period > 0, "phantom period must be positive");
  require(bg_amplitude >= 0 && bg_amplitude <= 1, "background amplitude must be in [0,1]");
  for (const auto& e : ellipses) {
    require(e.ry > 0 && e.rx > 0, "degenerate ellipse: zero-size axes");
    require(e.intensity >= 0.0 && e.intensity <= 1.0, "ellipse intensity must be in [0,1]");
    const double ry_max = e.ry * (1.0 + std::abs(e.pulse));
    const double rx_max = e.rx * (1.0 + std::abs(e.pulse));
    const double reach = std::max(ry_max, rx_max);
    require(e.cy - std::abs(e.ay) - reach >= -0.05 && e.cy + std::abs(e.ay) + reach <= 1.05 &&
                e.cx - std::abs(e.ax) - reach >= -0.05 && e.cx + std::abs(e.ax) + reach <= 1.05,
            "ellipse motion leaves the field of view");
  }
}

namespace {

json ellipse_to_json(const PhantomEllipse& e) {
  return json{{"cy", e.cy},       {"cx", e.cx},
              {"ry", e.ry},       {"rx", e.rx},
              {"intensity", e.intensity},
              {"ay", e.ay},       {"ax", e.ax},
              {"motion_cycles", e.motion_cycles},
              {"phase", e.phase}, {"pulse", e.pulse},
              {"rot", e.rot},     {"rot_amp", e.rot_amp}};
}

PhantomEllipse ellipse_from_json(const json& j) {
  PhantomEllipse e;
  e.cy = j.at("cy");
  e.cx = j.at("cx");
  e.ry = j.at("ry");
  e.rx = j.at("rx");
  e.intensity = j.at("intensity");
  e.ay = j.value("ay", 0.0);
  e.ax = j.value("ax", 0.0);
  e.motion_cycles = j.value("motion_cycles", 1.0);
  e.phase = j.value("phase", 0.0);
  e.pulse = j.value("pulse", 0.0);
  e.rot = j.value("rot", 0.0);
  e.rot_amp = j.value("rot_amp", 0.0);
  return e;
}

}  // namespace

std::string PhantomSpec::to_json() const {
  json j{{"h", h},
         {"w", w},
         {"n_frames", n_frames},
         {"period", period},
         {"bg_amplitude", bg_amplitude},
         {"bg_harmonics", bg_harmonics},
         {"edge_softness", edge_softness},
         {"phase_ramp", phase_ramp}};
  j["ellipses"] = json::array();
  for (const auto& e : ellipses) j["ellipses"].push_back(ellipse_to_json(e));
  return j.dump(2);
}

PhantomSpec PhantomSpec::from_json(const std::string& text) {
  json j = json::parse(text);
  PhantomSpec spec;
  spec.h = j.at("h");
  spec.w = j.at("w");
  spec.n_frames = j.at("n_frames");
  spec.period = j.value("period", 8.0);
  spec.bg_amplitude = j.value("bg_amplitude", 0.12);
  spec.bg_harmonics = j.value("bg_harmonics", 3);
  spec.edge_softness = j.value("edge_softness", 1.0);
  spec.phase_ramp = j.value("phase_ramp", 0.5);
  for (const auto& je : j.value("ellipses", json::array()))
    spec.ellipses.push_back(ellipse_from_json(je));
  spec.validate();
  return spec;
}

PhantomSpec default_phantom_spec(int h, int w, int n_frames) {
  PhantomSpec spec;
  spec.h = h;
  spec.w = w;
  spec.n_frames = n_frames;
  spec.period = static_cast<double>(n_frames);

  // body
  spec.ellipses.push_back({0.5, 0.5, 0.38, 0.33, 0.35, 0.0, 0.0, 1.0, 0.0, 0.0, 0.15, 0.0});
  // beating chamber
  spec.ellipses.push_back({0.45, 0.47, 0.16, 0.13, 0.4, 0.01, 0.01, 1.0, 0.0, 0.22, 0.3, 0.0});
  // small moving blob
  spec.ellipses.push_back({0.62, 0.6, 0.06, 0.05, 0.45, 0.05, 0.04, 1.0, 1.1, 0.1, 0.0, 0.0});
  // faint lateral structure
  spec.ellipses.push_back({0.35, 0.68, 0.09, 0.05, 0.25, 0.02, 0.0, 1.0, 2.3, 0.0, 0.8, 0.02});
  return spec;
}

FrameSequence generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int h = spec.h, w = spec.w;
  FrameSequence seq(spec.n_frames, h, w);
  seq.meta = spec.to_json();

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    // fixed-width mantissa draw keeps the stream reproducible
    const double u = (rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };

  // low-frequency background texture
  std::vector<double> bg(static_cast<std::size_t>(h) * w, 0.0);
  if (spec.bg_amplitude > 0 && spec.bg_harmonics > 0) {
    struct Harmonic {
      double a, fy, fx, ph;
    };
    std::vector<Harmonic> harmonics;
    for (int i = 0; i <= spec.bg_harmonics; ++i)
      for (int j = 0; j <= spec.bg_harmonics; ++j) {
        if (i == 0 && j == 0) continue;
        harmonics.push_back({uniform(-1.0, 1.0), double(i), double(j), uniform(0.0, kTwoPi)});
      }
    double lo = 1e300, hi = -1e300;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const double py = (y + 0.5) / h, px = (x + 0.5) / w;
        double s = 0.0;
        for (const auto& hm : harmonics)
          s += hm.a * std::cos(kTwoPi * (hm.fy * py + hm.fx * px) + hm.ph);
        bg[static_cast<std::size_t>(y) * w + x] = s;
        lo = std::min(lo, s);
        hi = std::max(hi, s);
      }
    const double span = hi > lo ? hi - lo : 1.0;
    for (auto& s : bg) s = spec.bg_amplitude * (s - lo) / span;
  }

  // smooth per-sample phase ramp
  const double gy = uniform(-spec.phase_ramp, spec.phase_ramp);
  const double gx = uniform(-spec.phase_ramp, spec.phase_ramp);
  const double ph0 = uniform(0.0, kTwoPi);

  for (int t = 0; t < spec.n_frames; ++t) {
    auto* dst = seq.frame(t);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double py = (y + 0.5) / h, px = (x + 0.5) / w;
        double mag = bg[static_cast<std::size_t>(y) * w + x];
        for (const auto& e : spec.ellipses) {
          const double arg = kTwoPi * e.motion_cycles * t / spec.period + e.phase;
          const double cy = e.cy + e.ay * std::sin(arg);
          const double cx = e.cx + e.ax * std::sin(arg);
          const double ry = e.ry * (1.0 + e.pulse * std::sin(arg));
          const double rx = e.rx * (1.0 + e.pulse * std::sin(arg));
          const double rot = e.rot + e.rot_amp * std::sin(arg);
          const double c = std::cos(rot), s = std::sin(rot);
          const double dy = py - cy, dx = px - cx;
          const double ey = (c * dy + s * dx) / ry;
          const double ex = (-s * dy + c * dx) / rx;
          const double d = std::sqrt(ey * ey + ex * ex);
          const double edge = spec.edge_softness / (std::min(ry, rx) * std::min(h, w));
          const double cov = 0.5 * (1.0 + std::tanh((1.0 - d) / edge));
          mag += e.intensity * cov;
        }
        mag = std::clamp(mag, 0.0, 1.0);
        const double phase = kTwoPi * (gy * py + gx * px) + ph0;
        dst[static_cast<std::size_t>(y) * w + x] = {
            static_cast<float>(mag * std::cos(phase)),
            static_cast<float>(mag * std::sin(phase))};
      }
    }
  }
  return seq;
}

AugmentPlan draw_augment_plan(std::mt19937_64& rng) {
  auto uniform = [&rng](double lo, double hi) {
    const double u = (rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  };
  AugmentPlan plan;
  plan.vflip = uniform(0.0, 1.0) < 0.4;
  plan.hflip = uniform(0.0, 1.0) < 0.4;
  plan.rescale = uniform(0.0, 1.0) < 0.4;
  plan.scale = uniform(0.8, 1.2);
  plan.mask = uniform(0.0, 1.0) < 0.4;
  plan.mask_cy = uniform(0.0, 1.0);
  plan.mask_cx = uniform(0.0, 1.0);
  plan.mask_sigma = uniform(0.2, 0.5);
  return plan;
}

namespace {

std::complex<float> bilinear(const std::complex<float>* img, int h, int w, double y,
                             double x) {
  if (y < 0.0 || x < 0.0 || y > h - 1.0 || x > w - 1.0) return {0.f, 0.f};
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const int y1 = std::min(y0 + 1, h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const double fy = y - y0, fx = x - x0;
  auto at = [&](int yy, int xx) {
    const auto v = img[static_cast<std::size_t>(yy) * w + xx];
    return cplx{v.real(), v.imag()};
  };
  const cplx out = at(y0, x0) * ((1 - fy) * (1 - fx)) + at(y0, x1) * ((1 - fy) * fx) +
                   at(y1, x0) * (fy * (1 - fx)) + at(y1, x1) * (fy * fx);
  return {static_cast<float>(out.real()), static_cast<float>(out.imag())};
}

}  // namespace

FrameSequence apply_augment(const FrameSequence& seq, const AugmentPlan& plan) {
  FrameSequence out = seq;
  const int h = seq.h, w = seq.w;

  if (plan.vflip) {
    for (int t = 0; t < out.n_frames; ++t) {
      auto* f = out.frame(t);
      for (int y = 0; y < h / 2; ++y)
        for (int x = 0; x < w; ++x)
          std::swap(f[static_cast<std::size_t>(y) * w + x],
                    f[static_cast<std::size_t>(h - 1 - y) * w + x]);
    }
  }
  if (plan.hflip) {
    for (int t = 0; t < out.n_frames; ++t) {
      auto* f = out.frame(t);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w / 2; ++x)
          std::swap(f[static_cast<std::size_t>(y) * w + x],
                    f[static_cast<std::size_t>(y) * w + (w - 1 - x)]);
    }
  }
  if (plan.rescale && plan.scale != 1.0) {
    const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    FrameSequence scaled = out;
    for (int t = 0; t < out.n_frames; ++t) {
      const auto* src = out.frame(t);
      auto* dst = scaled.frame(t);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          dst[static_cast<std::size_t>(y) * w + x] =
              bilinear(src, h, w, cy + (y - cy) / plan.scale, cx + (x - cx) / plan.scale);
    }
    out = std::move(scaled);
  }
  if (plan.mask) {
    const double sigma = plan.mask_sigma * std::min(h, w);
    const double my = plan.mask_cy * (h - 1), mx = plan.mask_cx * (w - 1);
    for (int t = 0; t < out.n_frames; ++t) {
      auto* f = out.frame(t);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double d2 = (y - my) * (y - my) + (x - mx) * (x - mx);
          const float g = static_cast<float>(std::exp(-d2 / (2.0 * sigma * sigma)));
          f[static_cast<std::size_t>(y) * w + x] *= g;
        }
    }
  }
  // magnitude safety clamp to [0, 1]
  for (auto& v : out.frames) {
    const float mag = std::abs(v);
    if (mag > 1.0f) v /= mag;
  }
  return out;
}

DatasetSplit split_dataset(int n_samples, const std::array<double, 3>& fractions,
                           std::uint64_t seed) {
  require(n_samples >= 0, "negative sample count");
  for (double f : fractions) require(f >= 0.0, "split fractions must be non-negative");
  require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) <= 1e-9,
          "split fractions must sum to 1");
  std::vector<int> order(n_samples);
  for (int i = 0; i < n_samples; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (int i = n_samples - 1; i > 0; --i) {
    const int j = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[i], order[j]);
  }
  const int n_train = static_cast<int>(std::floor(n_samples * fractions[0]));
  const int n_val = static_cast<int>(std::floor(n_samples * fractions[2]));
  const int n_test = n_samples - n_train - n_val;
  require(n_test >= 0, "split fractions leave no room for the test set");
  DatasetSplit split;
  split.train.assign(order.begin(), order.begin() + n_train);
  split.test.assign(order.begin() + n_train, order.begin() + n_train + n_test);
  split.val.assign(order.begin() + n_train + n_test, order.end());
  return split;
}

namespace {
constexpr char kSeqMagic[4] = {'D', 'S', 'E', 'Q'};
constexpr std::uint16_t kSeqVersion = 1;
}  // namespace

void save_sequence(const FrameSequence& seq, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kSeqMagic, 4);
  io::write_u16(out, kSeqVersion);
  io::write_u32(out, static_cast<std::uint32_t>(seq.n_frames));
  io::write_u32(out, static_cast<std::uint32_t>(seq.h));
  io::write_u32(out, static_cast<std::uint32_t>(seq.w));
  io::write_f32_array(out, reinterpret_cast<const float*>(seq.frames.data()),
                      seq.frames.size() * 2);
  if (!out) throw IoError("write failed: " + path);
  if (!seq.meta.empty()) {
    std::ofstream side(path + ".json");
    side << seq.meta << '\n';
  }
}

FrameSequence load_sequence(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  char magic[4];
  if (!in.read(magic, 4)) throw IoError(path + ": truncated file, missing magic");
  if (std::memcmp(magic, kSeqMagic, 4) != 0)
    throw IoError(path + ": bad magic, not a DSEQ file");
  const auto version = io::read_u16(in, path + ": truncated header, missing version");
  if (version != kSeqVersion)
    throw IoError(path + ": unsupported DSEQ version " + std::to_string(version));
  const auto nf = io::read_u32(in, path + ": truncated header, missing n_frames");
  const auto h = io::read_u32(in, path + ": truncated header, missing height");
  const auto w = io::read_u32(in, path + ": truncated header, missing width");
  if (nf < 1 || h < 1 || w < 1) throw IoError(path + ": header declares empty sequence");
  FrameSequence seq(static_cast<int>(nf), static_cast<int>(h), static_cast<int>(w));
  io::read_f32_array(in, reinterpret_cast<float*>(seq.frames.data()),
                     seq.frames.size() * 2,
                     path + ": frame payload shorter than header shape");
  std::ifstream side(path + ".json");
  if (side) {
    std::string text((std::istreambuf_iterator<char>(side)),
                     std::istreambuf_iterator<char>());
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    seq.meta = text;
  }
  return seq;
}

std::vector<std::string> list_sequence_files(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".dseq")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace ktraj
