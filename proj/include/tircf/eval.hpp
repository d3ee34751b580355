#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <tircf/core.hpp>
#include <tircf/tracker.hpp>

namespace tircf {

struct SequenceAnnotation {
  std::string name;
  std::vector<std::string> frame_paths;
  std::vector<BoundingBox> gt_boxes;  // one per frame; invalid entries mark unannotated frames
  std::set<std::string> attributes;
};

inline bool box_valid(const BoundingBox& b) {
  return std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) &&
         std::isfinite(b.h) && b.w > 0.0 && b.h > 0.0;
}

// Areas come from the same rounded edges as the intersection, so identical
// boxes score exactly 1 and the ratio can never exceed 1.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ax2 = a.x + a.w, ay2 = a.y + a.h;
  const double bx2 = b.x + b.w, by2 = b.y + b.h;
  const double iw = std::max(std::min(ax2, bx2) - std::max(a.x, b.x), 0.0);
  const double ih = std::max(std::min(ay2, by2) - std::max(a.y, b.y), 0.0);
  const double inter = iw * ih;
  const double area_a = (ax2 - a.x) * (ay2 - a.y);
  const double area_b = (bx2 - b.x) * (by2 - b.y);
  return inter / (area_a + area_b - inter);
}

inline double center_error(const BoundingBox& a, const BoundingBox& b) {
  return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

// Fraction of frames with center error <= t, for t = 0, 1, ..., 50 px.
inline std::vector<double> precision_curve(const std::vector<double>& errors) {
  if (errors.empty()) throw EmptyInput("precision_curve: no frames");
  std::vector<double> curve(51);
  for (int t = 0; t <= 50; ++t) {
    int hits = 0;
    for (double e : errors) hits += e <= static_cast<double>(t) ? 1 : 0;
    curve[static_cast<size_t>(t)] = hits / static_cast<double>(errors.size());
  }
  return curve;
}

// Fraction of frames with overlap strictly above t, for t = 0.02 * i,
// i = 0..49. The grid stops short of 1 so that perfect overlap scores a
// full curve.
inline std::vector<double> success_curve(const std::vector<double>& ious) {
  if (ious.empty()) throw EmptyInput("success_curve: no frames");
  std::vector<double> curve(50);
  for (int i = 0; i < 50; ++i) {
    const double t = 0.02 * i;
    int hits = 0;
    for (double v : ious) hits += v > t ? 1 : 0;
    curve[static_cast<size_t>(i)] = hits / static_cast<double>(ious.size());
  }
  return curve;
}

inline double auc(const std::vector<double>& curve) {
  if (curve.empty()) throw EmptyInput("auc: empty curve");
  double sum = 0.0;
  for (double v : curve) sum += v;
  return sum / static_cast<double>(curve.size());
}

inline double paper_precision(const std::vector<double>& ious) {
  if (ious.empty()) throw EmptyInput("paper_precision: no frames");
  double sum = 0.0;
  for (double v : ious) sum += v;
  return sum / static_cast<double>(ious.size());
}

// Mean of overlap divided by the frame-normalized ground-truth area, each
// term clamped to [0, 1].
inline double normalized_precision(const std::vector<double>& ious,
                                   const std::vector<BoundingBox>& gt_boxes,
                                   double frame_area) {
  if (ious.empty()) throw EmptyInput("normalized_precision: no frames");
  if (ious.size() != gt_boxes.size())
    throw ShapeMismatch("normalized_precision: one ground-truth box per overlap value");
  if (!(frame_area > 0.0))
    throw DegenerateBox("normalized_precision: frame area must be > 0");
  double sum = 0.0;
  for (size_t i = 0; i < ious.size(); ++i) {
    const double area = gt_boxes[i].w * gt_boxes[i].h;
    if (!(area > 0.0))
      throw DegenerateBox("normalized_precision: ground-truth areas must be > 0");
    sum += std::clamp(ious[i] / (area / frame_area), 0.0, 1.0);
  }
  return sum / static_cast<double>(ious.size());
}

struct SequenceResult {
  std::string name;
  std::set<std::string> attributes;
  std::vector<BoundingBox> boxes;  // one prediction per frame
  std::vector<double> ious;        // over frames with valid ground truth
  std::vector<double> center_errors;
  std::vector<double> precision;  // 51 thresholds, 0..50 px
  std::vector<double> success;    // 50 thresholds, 0..0.98 overlap
  double precision_at_20 = 0.0;
  double auc = 0.0;
  double paper_precision = 0.0;
  double normalized_precision = 0.0;
  int frames = 0;
  double elapsed = 0.0;  // tracking seconds, loading excluded
  double fps = 0.0;
};

struct AttributeRow {
  std::string name;
  double precision_at_20 = 0.0;
  double auc = 0.0;
  int sequences = 0;
};

struct EvalReport {
  std::vector<SequenceResult> sequences;  // sorted by name
  std::vector<std::string> skipped;       // one message per unusable sequence
  std::vector<double> precision_curve;    // sequence-averaged
  std::vector<double> success_curve;
  std::vector<AttributeRow> attribute_rows;  // sorted by attribute name
  double precision_at_20 = 0.0;
  double auc = 0.0;
  double paper_precision = 0.0;
  double normalized_precision = 0.0;
  double fps = 0.0;  // pooled: total frames over total tracking time
};

struct AblationRow {
  std::string label;
  double precision_at_20 = 0.0;
  double auc = 0.0;
  double fps = 0.0;
};

inline AblationRow ablation_row(std::string label, const EvalReport& rep) {
  return {std::move(label), rep.precision_at_20, rep.auc, rep.fps};
}

// A tracker as the harness sees it: start on frame 0 with its ground truth,
// then one predicted box per following frame.
struct OpeTracker {
  std::function<BoundingBox(const Frame&, const BoundingBox&)> start;
  std::function<BoundingBox(const Frame&)> step;
};
using TrackerFactory = std::function<OpeTracker()>;
using FrameLoader = std::function<Frame(const std::string&)>;

inline TrackerFactory default_tracker_factory(const TrackerConfig& cfg) {
  return [cfg]() {
    auto st = std::make_shared<TrackerState>();
    OpeTracker t;
    t.start = [st, cfg](const Frame& f, const BoundingBox& g0) {
      *st = init(f, g0, cfg);
      return st->bbox;
    };
    t.step = [st, cfg](const Frame& f) { return track(*st, f, cfg).bbox; };
    return t;
  };
}

inline SequenceResult evaluate_sequence(const SequenceAnnotation& seq, const OpeTracker& tracker,
                                        const FrameLoader& load) {
  if (seq.frame_paths.empty())
    throw SequenceReadError("sequence " + seq.name + ": no frames");
  if (seq.gt_boxes.size() != seq.frame_paths.size())
    throw SequenceReadError("sequence " + seq.name +
                            ": ground-truth count differs from frame count");
  if (!box_valid(seq.gt_boxes[0]))
    throw SequenceReadError("sequence " + seq.name + ": frame 0 ground truth is invalid");

  SequenceResult r;
  r.name = seq.name;
  r.attributes = seq.attributes;
  std::vector<BoundingBox> valid_gt;
  double frame_area = 0.0;
  for (size_t i = 0; i < seq.frame_paths.size(); ++i) {
    const Frame f = load(seq.frame_paths[i]);
    if (i == 0)
      frame_area = static_cast<double>(f.pixels.rows()) * static_cast<double>(f.pixels.cols());
    const auto t0 = std::chrono::steady_clock::now();
    const BoundingBox b = i == 0 ? tracker.start(f, seq.gt_boxes[0]) : tracker.step(f);
    r.elapsed += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.boxes.push_back(b);
    if (box_valid(seq.gt_boxes[i])) {
      r.ious.push_back(iou(b, seq.gt_boxes[i]));
      r.center_errors.push_back(center_error(b, seq.gt_boxes[i]));
      valid_gt.push_back(seq.gt_boxes[i]);
    }
  }
  r.frames = static_cast<int>(seq.frame_paths.size());
  r.fps = r.elapsed > 0.0 ? r.frames / r.elapsed : 0.0;
  r.precision = precision_curve(r.center_errors);
  r.success = success_curve(r.ious);
  r.precision_at_20 = r.precision[20];
  r.auc = auc(r.success);
  r.paper_precision = paper_precision(r.ious);
  r.normalized_precision = normalized_precision(r.ious, valid_gt, frame_area);
  return r;
}

// Sequence results arrive in any order; every aggregate below is a mean over
// sequences (or a pooled total), so the report does not depend on that order.
inline EvalReport aggregate_report(std::vector<SequenceResult> results,
                                   std::vector<std::string> skipped) {
  std::sort(results.begin(), results.end(),
            [](const SequenceResult& a, const SequenceResult& b) { return a.name < b.name; });
  std::sort(skipped.begin(), skipped.end());
  EvalReport rep;
  rep.sequences = std::move(results);
  rep.skipped = std::move(skipped);
  if (rep.sequences.empty()) return rep;

  const double n = static_cast<double>(rep.sequences.size());
  rep.precision_curve.assign(rep.sequences[0].precision.size(), 0.0);
  rep.success_curve.assign(rep.sequences[0].success.size(), 0.0);
  int total_frames = 0;
  double total_elapsed = 0.0;
  for (const SequenceResult& s : rep.sequences) {
    for (size_t i = 0; i < rep.precision_curve.size(); ++i) rep.precision_curve[i] += s.precision[i] / n;
    for (size_t i = 0; i < rep.success_curve.size(); ++i) rep.success_curve[i] += s.success[i] / n;
    rep.precision_at_20 += s.precision_at_20 / n;
    rep.auc += s.auc / n;
    rep.paper_precision += s.paper_precision / n;
    rep.normalized_precision += s.normalized_precision / n;
    total_frames += s.frames;
    total_elapsed += s.elapsed;
  }
  rep.fps = total_elapsed > 0.0 ? total_frames / total_elapsed : 0.0;

  std::map<std::string, std::pair<AttributeRow, int>> by_attr;
  for (const SequenceResult& s : rep.sequences)
    for (const std::string& a : s.attributes) {
      auto& slot = by_attr[a];
      slot.first.precision_at_20 += s.precision_at_20;
      slot.first.auc += s.auc;
      slot.second += 1;
    }
  for (auto& [name, slot] : by_attr) {
    AttributeRow row = slot.first;
    row.name = name;
    row.sequences = slot.second;
    row.precision_at_20 /= slot.second;
    row.auc /= slot.second;
    rep.attribute_rows.push_back(std::move(row));
  }
  return rep;
}

inline EvalReport run_ope(const std::vector<SequenceAnnotation>& dataset,
                          const TrackerFactory& factory, const FrameLoader& load) {
  if (dataset.empty()) throw EmptyInput("run_ope: no sequences");
  std::vector<SequenceResult> results;
  std::vector<std::string> skipped;
  for (const SequenceAnnotation& seq : dataset) {
    try {
      results.push_back(evaluate_sequence(seq, factory(), load));
    } catch (const SequenceReadError& e) {
      skipped.emplace_back(e.what());
    }
  }
  return aggregate_report(std::move(results), std::move(skipped));
}

inline EvalReport run_ope(const std::vector<SequenceAnnotation>& dataset,
                          const TrackerConfig& cfg, const FrameLoader& load) {
  return run_ope(dataset, default_tracker_factory(cfg), load);
}

}  // namespace tircf
