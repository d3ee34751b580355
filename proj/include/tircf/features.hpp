#pragma once

#include <tircf/ops.hpp>

#include <algorithm>
#include <cmath>

namespace tircf {

// Single grayscale frame, values normalized into [0,1].
struct Frame {
  Field2D pixels;
  int bit_depth_origin = 8;  // 8 or 16
};

struct FeatureConfig {
  int cell_size = 4;
  int orientation_bins = 9;
  int window_size = 64;  // model window side in samples, pre cell pooling
};

// Cell-resolution feature stack; D = orientation_bins + 1 (intensity last).
struct FeatureTensor {
  Tensor3 data;
  int cell_size = 1;
  bool window_applied = false;
};

// Crops a padded window around bbox (each side scaled by 1+padding), with
// replicate-border sampling, and resizes it to out_h x out_w bilinearly.
inline Field2D extract_patch(const Frame& frame, const BoundingBox& bbox, double padding,
                             int out_h = 64, int out_w = 64) {
  if (!(bbox.w > 0.0) || !(bbox.h > 0.0) || !std::isfinite(bbox.w) || !std::isfinite(bbox.h))
    throw DegenerateBox("extract_patch: box sides must be positive");
  if (out_h < 1 || out_w < 1) throw DimensionTooSmall("extract_patch: output dims must be >= 1");
  const int h = static_cast<int>(frame.pixels.rows());
  const int w = static_cast<int>(frame.pixels.cols());
  if (h < 1 || w < 1) throw DimensionTooSmall("extract_patch: empty frame");
  const double win_w = bbox.w * (1.0 + padding);
  const double win_h = bbox.h * (1.0 + padding);
  const double x0 = bbox.cx() - win_w / 2.0;
  const double y0 = bbox.cy() - win_h / 2.0;
  auto clamp_i = [&](int v, int hi) { return std::min(std::max(v, 0), hi); };
  Field2D out(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    const double yin = y0 + (r + 0.5) * win_h / out_h - 0.5;
    const int i0 = static_cast<int>(std::floor(yin));
    const double fy = yin - i0;
    const int ia = clamp_i(i0, h - 1);
    const int ib = clamp_i(i0 + 1, h - 1);
    for (int c = 0; c < out_w; ++c) {
      const double xin = x0 + (c + 0.5) * win_w / out_w - 0.5;
      const int j0 = static_cast<int>(std::floor(xin));
      const double fx = xin - j0;
      const int ja = clamp_i(j0, w - 1);
      const int jb = clamp_i(j0 + 1, w - 1);
      out(r, c) = (1.0 - fy) * ((1.0 - fx) * frame.pixels(ia, ja) + fx * frame.pixels(ia, jb)) +
                  fy * ((1.0 - fx) * frame.pixels(ib, ja) + fx * frame.pixels(ib, jb));
    }
  }
  return out;
}

// Unsigned-orientation histogram per cell (bilinear orientation voting,
// per-cell L2 normalization) plus a mean-centered cell-intensity channel;
// a raised-cosine window is multiplied into every channel.
inline FeatureTensor extract_features(const Field2D& patch, const FeatureConfig& cfg) {
  const int h = static_cast<int>(patch.rows());
  const int w = static_cast<int>(patch.cols());
  if (cfg.cell_size < 1) throw InvalidConfig("extract_features: cell_size must be >= 1");
  if (cfg.orientation_bins < 1)
    throw InvalidConfig("extract_features: orientation_bins must be >= 1");
  if (h % cfg.cell_size != 0 || w % cfg.cell_size != 0)
    throw IndivisibleDimensions("extract_features: patch dims must be divisible by cell_size");
  const int ch = h / cfg.cell_size;
  const int cw = w / cfg.cell_size;
  if (ch < 2 || cw < 2)
    throw DimensionTooSmall("extract_features: need at least a 2x2 cell grid");
  const int bins = cfg.orientation_bins;
  constexpr double kPi = 3.14159265358979323846;

  Tensor3 feat = Tensor3::zeros(bins + 1, ch, cw);
  for (int i = 0; i < h; ++i) {
    const int iu = std::max(i - 1, 0);
    const int id = std::min(i + 1, h - 1);
    for (int j = 0; j < w; ++j) {
      const int jl = std::max(j - 1, 0);
      const int jr = std::min(j + 1, w - 1);
      const double dx = 0.5 * (patch(i, jr) - patch(i, jl));
      const double dy = 0.5 * (patch(id, j) - patch(iu, j));
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag <= 0.0) continue;
      double theta = std::atan2(dy, dx);
      if (theta < 0.0) theta += kPi;
      const double pos = theta / kPi * bins;  // [0, bins]
      int b0 = static_cast<int>(pos);
      const double frac = pos - b0;  // 0 when pos == bins exactly
      if (b0 >= bins) b0 = 0;
      const int b1 = (b0 + 1) % bins;
      const int cr = i / cfg.cell_size;
      const int cc = j / cfg.cell_size;
      feat[b0](cr, cc) += mag * (1.0 - frac);
      feat[b1](cr, cc) += mag * frac;
    }
  }

  for (int r = 0; r < ch; ++r)
    for (int c = 0; c < cw; ++c) {
      double sq = 0.0;
      for (int b = 0; b < bins; ++b) sq += feat[b](r, c) * feat[b](r, c);
      const double norm = std::sqrt(sq + 1e-12);
      for (int b = 0; b < bins; ++b) feat[b](r, c) /= norm;
    }

  const double global_mean = patch.mean();
  for (int r = 0; r < ch; ++r)
    for (int c = 0; c < cw; ++c) {
      double acc = 0.0;
      for (int i = r * cfg.cell_size; i < (r + 1) * cfg.cell_size; ++i)
        for (int j = c * cfg.cell_size; j < (c + 1) * cfg.cell_size; ++j) acc += patch(i, j);
      feat[bins](r, c) = acc / (cfg.cell_size * cfg.cell_size) - global_mean;
    }

  const Field2D win = cosine_window(ch, cw);
  for (auto& s : feat.slices) s *= win;

  FeatureTensor out;
  out.data = std::move(feat);
  out.cell_size = cfg.cell_size;
  out.window_applied = true;
  return out;
}

}  // namespace tircf
