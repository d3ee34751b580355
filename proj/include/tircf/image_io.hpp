#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <tircf/core.hpp>
#include <tircf/eval.hpp>
#include <tircf/features.hpp>

namespace tircf {

// Decodes an image file as grayscale with values normalized into [0,1].
// 16-bit sources keep their full range (divide by 65535), everything else
// is treated as 8-bit.
inline Frame load_image(const std::string& path) {
  cv::Mat raw = cv::imread(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  if (raw.empty()) throw ReadError("image: cannot decode " + path);
  Frame frame;
  frame.pixels = Field2D(raw.rows, raw.cols);
  if (raw.depth() == CV_16U) {
    frame.bit_depth_origin = 16;
    for (int r = 0; r < raw.rows; ++r)
      for (int c = 0; c < raw.cols; ++c)
        frame.pixels(r, c) = raw.at<std::uint16_t>(r, c) / 65535.0;
  } else {
    if (raw.depth() != CV_8U) raw.convertTo(raw, CV_8U);
    frame.bit_depth_origin = 8;
    for (int r = 0; r < raw.rows; ++r)
      for (int c = 0; c < raw.cols; ++c) frame.pixels(r, c) = raw.at<std::uint8_t>(r, c) / 255.0;
  }
  return frame;
}

// Writes a [0,1] plane as an 8-bit PNG (values clamped).
inline void save_image(const Field2D& pixels, const std::string& path) {
  if (pixels.size() == 0) throw EmptyInput("image: nothing to save");
  cv::Mat out(static_cast<int>(pixels.rows()), static_cast<int>(pixels.cols()), CV_8U);
  for (int r = 0; r < out.rows; ++r)
    for (int c = 0; c < out.cols; ++c) {
      const double v = std::clamp(pixels(r, c), 0.0, 1.0);
      out.at<std::uint8_t>(r, c) = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  if (!cv::imwrite(path, out)) throw WriteError("image: cannot write " + path);
}

namespace detail {

inline void draw_box(cv::Mat& img, const BoundingBox& b, const cv::Scalar& color) {
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) || !std::isfinite(b.h))
    return;
  const cv::Point2d tl(b.x, b.y);
  const cv::Point2d br(b.x + b.w, b.y + b.h);
  cv::rectangle(img, tl, br, color, 2);
}

}  // namespace detail

// Renders per-frame overlays: predicted box in red, ground truth (when
// given) in green, one PNG per frame under <out_dir>/<sequence_name>/.
inline void render_overlays(const std::vector<std::string>& frame_paths,
                            const std::vector<BoundingBox>& pred,
                            const std::vector<BoundingBox>& gt, const std::string& out_dir,
                            const std::string& sequence_name) {
  if (frame_paths.size() != pred.size())
    throw ShapeMismatch("overlays: frame/box count mismatch");
  if (!gt.empty() && gt.size() != pred.size())
    throw ShapeMismatch("overlays: ground-truth count mismatch");
  namespace fs = std::filesystem;
  const fs::path dir = fs::path(out_dir) / sequence_name;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw WriteError("overlays: cannot create " + dir.string());
  for (size_t i = 0; i < frame_paths.size(); ++i) {
    cv::Mat raw = cv::imread(frame_paths[i], cv::IMREAD_GRAYSCALE);
    if (raw.empty()) throw ReadError("overlays: cannot decode " + frame_paths[i]);
    cv::Mat rgb;
    cv::cvtColor(raw, rgb, cv::COLOR_GRAY2BGR);
    detail::draw_box(rgb, pred[i], cv::Scalar(0, 0, 255));
    if (!gt.empty()) detail::draw_box(rgb, gt[i], cv::Scalar(0, 255, 0));
    char name[32];
    std::snprintf(name, sizeof(name), "%04zu.png", i);
    const std::string path = (dir / name).string();
    if (!cv::imwrite(path, rgb)) throw WriteError("overlays: cannot write " + path);
  }
}

}  // namespace tircf
