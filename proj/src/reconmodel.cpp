#include "ktraj/reconmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "ktraj/io.hpp"

namespace ktraj {

namespace {

struct T3 {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;
  T3() = default;
  T3(int cc, int hh, int ww) : c(cc), h(hh), w(ww) {
    v.assign(static_cast<std::size_t>(cc) * hh * ww, 0.0);
  }
  double* plane(int ci) { return v.data() + static_cast<std::size_t>(ci) * h * w; }
  const double* plane(int ci) const {
    return v.data() + static_cast<std::size_t>(ci) * h * w;
  }
};

// conv k x k (k in {1, 3}), zero-padded same, written as per-tap
// shift-and-scale passes so the inner loop stays contiguous.
void conv_fwd(const T3& in, const double* wgt, const double* bias, int cout, int k,
              T3& out) {
  const int h = in.h, w = in.w, cin = in.c;
  out.c = cout;
  out.h = h;
  out.w = w;
  out.v.assign(static_cast<std::size_t>(cout) * h * w, 0.0);
  const int off = k / 2;
  for (int co = 0; co < cout; ++co) {
    double* op = out.plane(co);
    const double b = bias[co];
    for (int i = 0; i < h * w; ++i) op[i] = b;
    for (int ci = 0; ci < cin; ++ci) {
      const double* ip = in.plane(ci);
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const double wv = wgt[((static_cast<std::size_t>(co) * cin + ci) * k + dy) * k + dx];
          if (wv == 0.0) continue;
          const int y0 = std::max(0, off - dy), y1 = std::min(h, h + off - dy);
          const int x0 = std::max(0, off - dx), x1 = std::min(w, w + off - dx);
          for (int y = y0; y < y1; ++y) {
            double* orow = op + static_cast<std::size_t>(y) * w;
            const double* irow = ip + static_cast<std::size_t>(y + dy - off) * w + (dx - off);
            for (int x = x0; x < x1; ++x) orow[x] += wv * irow[x];
          }
        }
      }
    }
  }
}

void conv_bwd(const T3& in, const double* wgt, int cout, int k, const T3& dz,
              double* dwgt, double* dbias, T3& din) {
  const int h = in.h, w = in.w, cin = in.c;
  din.c = cin;
  din.h = h;
  din.w = w;
  din.v.assign(in.v.size(), 0.0);
  const int off = k / 2;
  for (int co = 0; co < cout; ++co) {
    const double* zp = dz.plane(co);
    double db = 0.0;
    for (int i = 0; i < h * w; ++i) db += zp[i];
    dbias[co] += db;
    for (int ci = 0; ci < cin; ++ci) {
      const double* ip = in.plane(ci);
      double* dp = din.plane(ci);
      for (int dy = 0; dy < k; ++dy) {
        for (int dx = 0; dx < k; ++dx) {
          const std::size_t widx =
              ((static_cast<std::size_t>(co) * cin + ci) * k + dy) * k + dx;
          const double wv = wgt[widx];
          const int y0 = std::max(0, off - dy), y1 = std::min(h, h + off - dy);
          const int x0 = std::max(0, off - dx), x1 = std::min(w, w + off - dx);
          double dw = 0.0;
          for (int y = y0; y < y1; ++y) {
            const double* zrow = zp + static_cast<std::size_t>(y) * w;
            const double* irow = ip + static_cast<std::size_t>(y + dy - off) * w + (dx - off);
            double* drow = dp + static_cast<std::size_t>(y + dy - off) * w + (dx - off);
            for (int x = x0; x < x1; ++x) {
              dw += zrow[x] * irow[x];
              drow[x] += wv * zrow[x];
            }
          }
          dwgt[widx] += dw;
        }
      }
    }
  }
}

void avgpool2_fwd(const T3& in, T3& out) {
  out.c = in.c;
  out.h = in.h / 2;
  out.w = in.w / 2;
  out.v.assign(static_cast<std::size_t>(out.c) * out.h * out.w, 0.0);
  for (int ci = 0; ci < in.c; ++ci) {
    const double* ip = in.plane(ci);
    double* op = out.plane(ci);
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        const double* r0 = ip + static_cast<std::size_t>(2 * y) * in.w + 2 * x;
        const double* r1 = r0 + in.w;
        op[static_cast<std::size_t>(y) * out.w + x] =
            0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
      }
  }
}

void avgpool2_bwd(const T3& dout, int in_h, int in_w, T3& din) {
  din.c = dout.c;
  din.h = in_h;
  din.w = in_w;
  din.v.assign(static_cast<std::size_t>(din.c) * in_h * in_w, 0.0);
  for (int ci = 0; ci < dout.c; ++ci) {
    const double* op = dout.plane(ci);
    double* dp = din.plane(ci);
    for (int y = 0; y < dout.h; ++y)
      for (int x = 0; x < dout.w; ++x) {
        const double g = 0.25 * op[static_cast<std::size_t>(y) * dout.w + x];
        double* r0 = dp + static_cast<std::size_t>(2 * y) * in_w + 2 * x;
        double* r1 = r0 + in_w;
        r0[0] += g;
        r0[1] += g;
        r1[0] += g;
        r1[1] += g;
      }
  }
}

void upsample2_fwd(const T3& in, T3& out) {
  out.c = in.c;
  out.h = in.h * 2;
  out.w = in.w * 2;
  out.v.assign(static_cast<std::size_t>(out.c) * out.h * out.w, 0.0);
  for (int ci = 0; ci < in.c; ++ci) {
    const double* ip = in.plane(ci);
    double* op = out.plane(ci);
    for (int y = 0; y < out.h; ++y) {
      const double* irow = ip + static_cast<std::size_t>(y / 2) * in.w;
      double* orow = op + static_cast<std::size_t>(y) * out.w;
      for (int x = 0; x < out.w; ++x) orow[x] = irow[x / 2];
    }
  }
}

void upsample2_bwd(const T3& dout, T3& din) {
  din.c = dout.c;
  din.h = dout.h / 2;
  din.w = dout.w / 2;
  din.v.assign(static_cast<std::size_t>(din.c) * din.h * din.w, 0.0);
  for (int ci = 0; ci < dout.c; ++ci) {
    const double* op = dout.plane(ci);
    double* dp = din.plane(ci);
    for (int y = 0; y < dout.h; ++y) {
      const double* orow = op + static_cast<std::size_t>(y) * dout.w;
      double* drow = dp + static_cast<std::size_t>(y / 2) * din.w;
      for (int x = 0; x < dout.w; ++x) drow[x / 2] += orow[x];
    }
  }
}

}  // namespace

std::uint64_t ArchConfig::hash() const {
  // FNV-1a over the canonical field string
  char buf[128];
  std::snprintf(buf, sizeof(buf), "c%d s%d r%d d%.17g", base_channels, scales,
                temporal_radius, dropout);
  std::uint64_t h = 1469598103934665603ull;
  for (const char* p = buf; *p; ++p) {
    h ^= static_cast<unsigned char>(*p);
    h *= 1099511628211ull;
  }
  return h;
}

const ParamBlock& ReconParams::block(const std::string& name) const {
  for (const auto& b : layout)
    if (b.name == name) return b;
  throw ArgumentError("unknown parameter block: " + name);
}

namespace {

struct LayerDef {
  std::string name;
  int cout, cin, k;
};

std::vector<LayerDef> layer_plan(const ArchConfig& cfg) {
  const int cin0 = 2 * (2 * cfg.temporal_radius + 1);
  auto ch = [&](int j) { return cfg.base_channels << j; };
  std::vector<LayerDef> plan;
  plan.push_back({"enc0", ch(0), cin0, 3});
  for (int j = 1; j < cfg.scales; ++j)
    plan.push_back({"enc" + std::to_string(j), ch(j), ch(j - 1), 3});
  plan.push_back({"bott", ch(cfg.scales - 1), ch(cfg.scales - 1), 3});
  for (int j = cfg.scales - 2; j >= 0; --j)
    plan.push_back({"dec" + std::to_string(j), ch(j), ch(j) + ch(j + 1), 3});
  plan.push_back({"final", 1, ch(0), 1});
  return plan;
}

}  // namespace

ReconParams init_params(const ArchConfig& config, std::uint64_t seed) {
  config.validate();
  ReconParams params;
  params.config = config;
  std::size_t offset = 0;
  for (const auto& def : layer_plan(config)) {
    ParamBlock wblk;
    wblk.name = def.name + ".w";
    wblk.offset = offset;
    wblk.shape = {def.cout, def.cin, def.k, def.k};
    wblk.size = static_cast<std::size_t>(def.cout) * def.cin * def.k * def.k;
    offset += wblk.size;
    ParamBlock bblk;
    bblk.name = def.name + ".b";
    bblk.offset = offset;
    bblk.shape = {def.cout, 0, 0, 0};
    bblk.size = static_cast<std::size_t>(def.cout);
    offset += bblk.size;
    params.layout.push_back(wblk);
    params.layout.push_back(bblk);
  }
  params.theta.assign(offset, 0.0);

  std::mt19937_64 rng(seed);
  auto uniform01 = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  for (std::size_t bi = 0; bi + 1 < params.layout.size(); bi += 2) {
    const auto& wblk = params.layout[bi];
    const double fan_in = static_cast<double>(wblk.shape[1]) * wblk.shape[2] * wblk.shape[3];
    const double bound = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < wblk.size; ++i)
      params.theta[wblk.offset + i] = (2.0 * uniform01() - 1.0) * bound;
    // biases stay zero
  }
  return params;
}

void reset_params(ReconParams& params, std::uint64_t seed) {
  params = init_params(params.config, seed);
}

struct ReconWorkspace::Impl {
  ArchConfig config;
  int n_frames = 0, h = 0, w = 0;
  std::size_t theta_size = 0;
  bool filled = false;

  struct FrameCache {
    T3 stacked;
    std::vector<T3> pooled;   // input to enc[j], j >= 1
    std::vector<T3> enc_z;    // pre-activation per scale
    std::vector<T3> enc_a;    // post ReLU (+dropout)
    T3 bott_z, bott_a;
    std::vector<T3> dec_cat;  // concat input per decoder stage, index j
    std::vector<T3> dec_z;
    std::vector<T3> dec_a;
    T3 final_in;              // input to the 1x1 conv
    std::vector<double> mag;  // residual magnitude of the center frame
    std::vector<std::vector<std::uint8_t>> dropout_masks;  // in application order
  };
  std::vector<FrameCache> frames;
};

namespace {

void relu_dropout_fwd(const T3& z, T3& a, bool training, double p,
                      std::mt19937_64& rng, std::vector<std::uint8_t>* mask_out) {
  a.c = z.c;
  a.h = z.h;
  a.w = z.w;
  a.v.resize(z.v.size());
  for (std::size_t i = 0; i < z.v.size(); ++i) a.v[i] = z.v[i] > 0.0 ? z.v[i] : 0.0;
  if (training && p > 0.0) {
    mask_out->resize(z.v.size());
    const double keep = 1.0 - p;
    for (std::size_t i = 0; i < z.v.size(); ++i) {
      const bool on = ((rng() >> 11) * 0x1.0p-53) >= p;
      (*mask_out)[i] = on;
      a.v[i] = on ? a.v[i] / keep : 0.0;
    }
  }
}

void relu_dropout_bwd(const T3& z, const std::vector<std::uint8_t>* mask, double p,
                      T3& da) {
  if (mask && !mask->empty()) {
    const double keep = 1.0 - p;
    for (std::size_t i = 0; i < da.v.size(); ++i)
      da.v[i] = ((*mask)[i] && z.v[i] > 0.0) ? da.v[i] / keep : 0.0;
  } else {
    for (std::size_t i = 0; i < da.v.size(); ++i)
      if (z.v[i] <= 0.0) da.v[i] = 0.0;
  }
}

}  // namespace

ReconOutput recon_forward(const ReconParams& params, const ReconInput& input,
                          ReconWorkspace& ws) {
  const auto& cfg = params.config;
  cfg.validate();
  const int S = cfg.scales, r = cfg.temporal_radius;
  const int nf = input.n_frames, h = input.h, w = input.w;
  require(nf >= 1 && h >= 1 && w >= 1 &&
              input.v.size() == static_cast<std::size_t>(nf) * 2 * h * w,
          "recon input shape mismatch");
  const int div = 1 << (S - 1);
  require(h % div == 0 && w % div == 0,
          "image dimensions must be divisible by 2^(scales-1)");

  if (!ws.impl) ws.impl = std::make_shared<ReconWorkspace::Impl>();
  auto& impl = *ws.impl;
  impl.config = cfg;
  impl.n_frames = nf;
  impl.h = h;
  impl.w = w;
  impl.theta_size = params.theta.size();
  impl.frames.assign(nf, {});

  const int cin0 = 2 * (2 * r + 1);
  auto wptr = [&](const std::string& name) {
    return params.theta.data() + params.block(name + ".w").offset;
  };
  auto bptr = [&](const std::string& name) {
    return params.theta.data() + params.block(name + ".b").offset;
  };

  ReconOutput out(nf, h, w);
  for (int t = 0; t < nf; ++t) {
    auto& fc = impl.frames[t];
    fc.stacked = T3(cin0, h, w);
    for (int d = -r; d <= r; ++d) {
      const int nt = std::clamp(t + d, 0, nf - 1);
      for (int ch = 0; ch < 2; ++ch)
        std::memcpy(fc.stacked.plane((d + r) * 2 + ch), input.channel(nt, ch),
                    sizeof(double) * h * w);
    }

    fc.enc_z.resize(S);
    fc.enc_a.resize(S);
    fc.pooled.resize(S);
    auto push_mask = [&]() -> std::vector<std::uint8_t>* {
      if (ws.training && cfg.dropout > 0.0) {
        fc.dropout_masks.emplace_back();
        return &fc.dropout_masks.back();
      }
      return nullptr;
    };

    const T3* cur = &fc.stacked;
    for (int j = 0; j < S; ++j) {
      if (j > 0) {
        avgpool2_fwd(fc.enc_a[j - 1], fc.pooled[j]);
        cur = &fc.pooled[j];
      }
      const std::string name = "enc" + std::to_string(j);
      conv_fwd(*cur, wptr(name), bptr(name), cfg.base_channels << j, 3, fc.enc_z[j]);
      auto* mask = push_mask();
      relu_dropout_fwd(fc.enc_z[j], fc.enc_a[j], ws.training, cfg.dropout,
                       ws.dropout_rng, mask);
      cur = &fc.enc_a[j];
    }

    conv_fwd(*cur, wptr("bott"), bptr("bott"), cfg.base_channels << (S - 1), 3,
             fc.bott_z);
    {
      auto* mask = push_mask();
      relu_dropout_fwd(fc.bott_z, fc.bott_a, ws.training, cfg.dropout, ws.dropout_rng,
                       mask);
    }

    fc.dec_cat.resize(std::max(S - 1, 0));
    fc.dec_z.resize(std::max(S - 1, 0));
    fc.dec_a.resize(std::max(S - 1, 0));
    const T3* prev = &fc.bott_a;
    for (int j = S - 2; j >= 0; --j) {
      T3 up;
      upsample2_fwd(*prev, up);
      const T3& skip = fc.enc_a[j];
      T3& cat = fc.dec_cat[j];
      cat = T3(skip.c + up.c, skip.h, skip.w);
      std::memcpy(cat.plane(0), skip.v.data(), sizeof(double) * skip.v.size());
      std::memcpy(cat.plane(skip.c), up.v.data(), sizeof(double) * up.v.size());
      const std::string name = "dec" + std::to_string(j);
      conv_fwd(cat, wptr(name), bptr(name), cfg.base_channels << j, 3, fc.dec_z[j]);
      auto* mask = push_mask();
      relu_dropout_fwd(fc.dec_z[j], fc.dec_a[j], ws.training, cfg.dropout,
                       ws.dropout_rng, mask);
      prev = &fc.dec_a[j];
    }

    fc.final_in = *prev;
    T3 final_z;
    conv_fwd(fc.final_in, wptr("final"), bptr("final"), 1, 1, final_z);

    fc.mag.resize(static_cast<std::size_t>(h) * w);
    const double* re = input.channel(t, 0);
    const double* im = input.channel(t, 1);
    double* of = out.frame(t);
    for (std::size_t i = 0; i < fc.mag.size(); ++i) {
      fc.mag[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
      of[i] = final_z.v[i] + fc.mag[i];
    }
    // store re/im for the residual backward via stacked center channels
  }
  impl.filled = true;
  return out;
}

ReconGrads recon_backward(const ReconParams& params, const ReconWorkspace& ws,
                          const ReconOutput& upstream) {
  require(ws.impl && ws.impl->filled, "stale workspace: run recon_forward first");
  const auto& impl = *ws.impl;
  require(impl.theta_size == params.theta.size() &&
              impl.config.hash() == params.config.hash(),
          "stale workspace: parameters changed since forward");
  const auto& cfg = params.config;
  const int S = cfg.scales, r = cfg.temporal_radius;
  const int nf = impl.n_frames, h = impl.h, w = impl.w;
  require(upstream.n_frames == nf && upstream.h == h && upstream.w == w,
          "upstream shape mismatch");

  ReconGrads grads;
  grads.theta.assign(params.theta.size(), 0.0);
  grads.input = ReconInput(nf, h, w);

  auto wptr = [&](const std::string& name) {
    return params.theta.data() + params.block(name + ".w").offset;
  };
  auto dwptr = [&](const std::string& name) {
    return grads.theta.data() + params.block(name + ".w").offset;
  };
  auto dbptr = [&](const std::string& name) {
    return grads.theta.data() + params.block(name + ".b").offset;
  };

  for (int t = 0; t < nf; ++t) {
    const auto& fc = impl.frames[t];
    const double* up = upstream.frame(t);

    // residual path: d(mag) with mag = sqrt(re^2 + im^2)
    {
      const double* re = fc.stacked.plane(r * 2);      // center frame, channel 0
      const double* im = fc.stacked.plane(r * 2 + 1);  // center frame, channel 1
      double* dre = grads.input.channel(t, 0);
      double* dim = grads.input.channel(t, 1);
      for (std::size_t i = 0; i < fc.mag.size(); ++i) {
        if (fc.mag[i] > 0.0) {
          dre[i] += up[i] * re[i] / fc.mag[i];
          dim[i] += up[i] * im[i] / fc.mag[i];
        }
      }
    }

    // final 1x1 conv
    T3 dfinal_z(1, h, w);
    std::memcpy(dfinal_z.v.data(), up, sizeof(double) * dfinal_z.v.size());
    T3 dprev;
    conv_bwd(fc.final_in, wptr("final"), 1, 1, dfinal_z, dwptr("final"),
             dbptr("final"), dprev);

    int mask_idx = static_cast<int>(fc.dropout_masks.size());
    auto pop_mask = [&]() -> const std::vector<std::uint8_t>* {
      if (!fc.dropout_masks.empty()) return &fc.dropout_masks[--mask_idx];
      return nullptr;
    };

    // decoder stages j = 0 .. S-2 (reverse of forward application order)
    std::vector<T3> skip_grads(std::max(S - 1, 0));
    for (int j = 0; j <= S - 2; ++j) {
      relu_dropout_bwd(fc.dec_z[j], pop_mask(), cfg.dropout, dprev);
      const std::string name = "dec" + std::to_string(j);
      T3 dcat;
      conv_bwd(fc.dec_cat[j], wptr(name), cfg.base_channels << j, 3, dprev,
               dwptr(name), dbptr(name), dcat);
      // split: first part flows into the skip (enc_a[j]), rest into the
      // upsampled previous stage
      const int skip_c = fc.enc_a[j].c;
      T3 dskip(skip_c, dcat.h, dcat.w);
      std::memcpy(dskip.v.data(), dcat.plane(0), sizeof(double) * dskip.v.size());
      T3 dup(dcat.c - skip_c, dcat.h, dcat.w);
      std::memcpy(dup.v.data(), dcat.plane(skip_c), sizeof(double) * dup.v.size());
      T3 dprev_next;
      upsample2_bwd(dup, dprev_next);
      dprev = std::move(dprev_next);
      skip_grads[j] = std::move(dskip);
    }

    // bottleneck
    relu_dropout_bwd(fc.bott_z, pop_mask(), cfg.dropout, dprev);
    const T3& bott_in = (S >= 2) ? fc.enc_a[S - 1] : fc.enc_a[0];
    T3 denc_top;
    conv_bwd(bott_in, wptr("bott"), cfg.base_channels << (S - 1), 3, dprev,
             dwptr("bott"), dbptr("bott"), denc_top);

    // encoder stack, deepest first; each scale's gradient is the sum of the
    // downstream path and the decoder skip
    T3 da = std::move(denc_top);
    for (int j = S - 1; j >= 0; --j) {
      if (j <= S - 2) {
        const T3& dskip = skip_grads[j];
        for (std::size_t i = 0; i < da.v.size(); ++i) da.v[i] += dskip.v[i];
      }
      relu_dropout_bwd(fc.enc_z[j], pop_mask(), cfg.dropout, da);
      const T3& conv_in = (j == 0) ? fc.stacked : fc.pooled[j];
      const std::string name = "enc" + std::to_string(j);
      T3 dconv_in;
      conv_bwd(conv_in, wptr(name), cfg.base_channels << j, 3, da, dwptr(name),
               dbptr(name), dconv_in);
      if (j == 0) {
        da = std::move(dconv_in);
      } else {
        avgpool2_bwd(dconv_in, fc.enc_a[j - 1].h, fc.enc_a[j - 1].w, da);
      }
    }

    // unstack into per-frame input gradients (replicated edges accumulate)
    for (int d = -r; d <= r; ++d) {
      const int nt = std::clamp(t + d, 0, nf - 1);
      for (int ch = 0; ch < 2; ++ch) {
        const double* src = da.plane((d + r) * 2 + ch);
        double* dst = grads.input.channel(nt, ch);
        for (int i = 0; i < h * w; ++i) dst[i] += src[i];
      }
    }
  }
  return grads;
}

namespace {
constexpr char kParamsMagic[4] = {'R', 'P', 'R', 'M'};
}

void save_params(const ReconParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kParamsMagic, 4);
  io::write_u64(out, params.config.hash());
  io::write_u64(out, params.theta.size());
  io::write_f64_array(out, params.theta.data(), params.theta.size());
  if (!out) throw IoError("write failed: " + path);
}

ReconParams load_params(const std::string& path, const ArchConfig& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);
  char magic[4];
  if (!in.read(magic, 4)) throw IoError(path + ": truncated file, missing magic");
  if (std::memcmp(magic, kParamsMagic, 4) != 0)
    throw IoError(path + ": bad magic, not an RPRM file");
  const auto hash = io::read_u64(in, path + ": truncated header, missing config hash");
  if (hash != expected.hash())
    throw IoError(path + ": checkpoint config hash does not match");
  const auto count = io::read_u64(in, path + ": truncated header, missing count");
  ReconParams params = init_params(expected, 0);
  if (count != params.theta.size())
    throw IoError(path + ": parameter count does not match the architecture");
  io::read_f64_array(in, params.theta.data(), params.theta.size(),
                     path + ": parameter payload shorter than declared");
  return params;
}

}  // namespace ktraj
