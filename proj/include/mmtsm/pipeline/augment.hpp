#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "mmtsm/core/rng.hpp"
#include "mmtsm/core/tensor.hpp"
#include "mmtsm/data/image.hpp"

namespace mmtsm {

struct AugmentConfig {
  std::vector<Real> scales = {1.0, 0.875, 0.75, 0.66};
  Real flip_prob = 0.5;
  int crop_size = 224;
  int scale_target = 256;
  std::array<Real, 3> mean = {0.5, 0.5, 0.5};
  std::array<Real, 3> stdev = {0.5, 0.5, 0.5};
};

/// One set of augmentation decisions per clip. Position is stored in
/// normalized coordinates so the same draw lands consistently on modalities
/// of different native resolution.
struct GroupDraw {
  Real scale = 1.0;
  Real u = 0.5;
  Real v = 0.5;
  bool flip = false;
};

/// Draw the per-clip augmentation parameters. Scales that would produce a
/// crop larger than the frame are redrawn a few times, then the smallest
/// configured scale wins.
inline GroupDraw draw_group(const AugmentConfig& cfg, std::mt19937_64& rng) {
  if (cfg.scales.empty()) throw std::invalid_argument("augment: empty scale set");
  GroupDraw d;
  std::uniform_int_distribution<std::size_t> pick(0, cfg.scales.size() - 1);
  d.scale = cfg.scales[pick(rng)];
  for (int retry = 0; retry < 3 && d.scale > Real(1); ++retry) d.scale = cfg.scales[pick(rng)];
  if (d.scale > Real(1)) d.scale = *std::min_element(cfg.scales.begin(), cfg.scales.end());
  std::uniform_real_distribution<Real> unit(Real(0), Real(1));
  d.u = unit(rng);
  d.v = unit(rng);
  std::bernoulli_distribution coin(cfg.flip_prob);
  d.flip = coin(rng);
  return d;
}

namespace detail {

/// Bilinear sample of an image channel at real coordinates (half-pixel
/// convention), clamped to the rectangle [rx0, rx0+rw) x [ry0, ry0+rh).
inline Real bilinear_at(const Image& img, Real sx, Real sy, int c, int rx0, int ry0, int rw,
                        int rh) {
  sx = std::min(std::max(sx, static_cast<Real>(rx0)), static_cast<Real>(rx0 + rw - 1));
  sy = std::min(std::max(sy, static_cast<Real>(ry0)), static_cast<Real>(ry0 + rh - 1));
  const int x0 = static_cast<int>(std::floor(sx));
  const int y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, rx0 + rw - 1);
  const int y1 = std::min(y0 + 1, ry0 + rh - 1);
  const Real fx = sx - x0, fy = sy - y0;
  const Real v00 = img.at(y0, x0, c), v01 = img.at(y0, x1, c);
  const Real v10 = img.at(y1, x0, c), v11 = img.at(y1, x1, c);
  return (v00 * (1 - fx) + v01 * fx) * (1 - fy) + (v10 * (1 - fx) + v11 * fx) * fy;
}

/// Resize the rectangle [x0, x0+side) x [y0, y0+side) of img into a
/// [out, out] slice of dst (one frame of a stack), optionally mirrored.
/// Grayscale sources replicate into every destination channel.
inline void resample_into(TensorR& stack, int frame, const Image& img, int x0, int y0,
                          int side_w, int side_h, int out, bool flip) {
  const int channels = stack.dim(3);
  const Real sx_scale = static_cast<Real>(side_w) / out;
  const Real sy_scale = static_cast<Real>(side_h) / out;
  for (int oy = 0; oy < out; ++oy) {
    const Real sy = (oy + Real(0.5)) * sy_scale - Real(0.5) + y0;
    for (int ox = 0; ox < out; ++ox) {
      const int tx = flip ? out - 1 - ox : ox;
      const Real sx = (ox + Real(0.5)) * sx_scale - Real(0.5) + x0;
      for (int c = 0; c < channels; ++c) {
        const int src_c = img.channels == 1 ? 0 : c;
        stack.at(frame, oy, tx, c) =
            bilinear_at(img, sx, sy, src_c, x0, y0, side_w, side_h);
      }
    }
  }
}

}  // namespace detail

/// In-place channel-wise normalization of a [S, H, W, C] stack holding
/// 0..255 values: out = (in/255 - mean) / std.
inline void normalize_stack(TensorR& stack, const std::array<Real, 3>& mean,
                            const std::array<Real, 3>& stdev) {
  const int channels = stack.dim(3);
  for (int c = 0; c < channels; ++c)
    if (stdev[c] <= 0) throw std::invalid_argument("augment: std must be positive");
  const std::size_t n = stack.numel();
  for (std::size_t i = 0; i < n; ++i) {
    const int c = static_cast<int>(i % channels);
    stack[i] = (stack[i] / Real(255) - mean[c]) / stdev[c];
  }
}

/// Multi-scale crop + flip for one modality of one clip, applied with a
/// shared GroupDraw. frames are the S sampled images at native resolution;
/// output is a normalized [S, crop, crop, out_channels] stack.
inline TensorR apply_train_augment(const std::vector<const Image*>& frames,
                                   const AugmentConfig& cfg, const GroupDraw& draw,
                                   int out_channels) {
  if (frames.empty()) throw std::invalid_argument("augment: no frames");
  const int w = frames[0]->width, h = frames[0]->height;
  const int short_side = std::min(w, h);
  int side = static_cast<int>(std::lround(draw.scale * short_side));
  side = std::max(1, std::min(side, short_side));
  const int x0 = static_cast<int>(std::lround(draw.u * (w - side)));
  const int y0 = static_cast<int>(std::lround(draw.v * (h - side)));

  TensorR stack({static_cast<int>(frames.size()), cfg.crop_size, cfg.crop_size, out_channels});
  for (std::size_t s = 0; s < frames.size(); ++s) {
    const Image& img = *frames[s];
    if (img.width != w || img.height != h)
      throw std::invalid_argument("augment: frame size varies within a modality");
    detail::resample_into(stack, static_cast<int>(s), img, x0, y0, side, side, cfg.crop_size,
                          draw.flip);
  }
  normalize_stack(stack, cfg.mean, cfg.stdev);
  return stack;
}

/// Deterministic eval pipeline: scale the short side to cfg.scale_target,
/// center crop cfg.crop_size, optional horizontal flip (TTA), normalize.
inline TensorR apply_test_augment(const std::vector<const Image*>& frames,
                                  const AugmentConfig& cfg, bool tta_flip, int out_channels) {
  if (frames.empty()) throw std::invalid_argument("augment: no frames");
  const int w = frames[0]->width, h = frames[0]->height;
  const int short_side = std::min(w, h);
  const Real factor = static_cast<Real>(cfg.scale_target) / short_side;
  const int sw = std::max(cfg.crop_size, static_cast<int>(std::lround(w * factor)));
  const int sh = std::max(cfg.crop_size, static_cast<int>(std::lround(h * factor)));

  // Pixel (ox, oy) of the center crop is pixel (cx0+ox, cy0+oy) of the
  // resized image, which samples the source at the composed coordinates
  // below; evaluating directly skips materializing the resized frame.
  const int cx0 = (sw - cfg.crop_size) / 2;
  const int cy0 = (sh - cfg.crop_size) / 2;

  TensorR stack({static_cast<int>(frames.size()), cfg.crop_size, cfg.crop_size, out_channels});
  for (std::size_t s = 0; s < frames.size(); ++s) {
    const Image& img = *frames[s];
    for (int oy = 0; oy < cfg.crop_size; ++oy) {
      const Real sy = (cy0 + oy + Real(0.5)) * h / sh - Real(0.5);
      for (int ox = 0; ox < cfg.crop_size; ++ox) {
        const int tx = tta_flip ? cfg.crop_size - 1 - ox : ox;
        const Real sx = (cx0 + ox + Real(0.5)) * w / sw - Real(0.5);
        for (int c = 0; c < out_channels; ++c) {
          const int src_c = img.channels == 1 ? 0 : c;
          stack.at(static_cast<int>(s), oy, tx, c) =
              detail::bilinear_at(img, sx, sy, src_c, 0, 0, w, h);
        }
      }
    }
  }
  normalize_stack(stack, cfg.mean, cfg.stdev);
  return stack;
}

}  // namespace mmtsm
