#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <tircf/config_io.hpp>
#include <tircf/core.hpp>
#include <tircf/eval.hpp>

namespace tircf {
namespace detail {

inline std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  std::transform(e.begin(), e.end(), e.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return e;
}

inline bool is_frame_file(const std::filesystem::path& p) {
  const std::string e = lower_ext(p);
  return e == ".png" || e == ".pgm" || e == ".jpg" || e == ".jpeg";
}

// Parses one annotation line: four numbers split on commas, tabs, or spaces.
// Any "nan" field marks the whole box invalid.
inline BoundingBox parse_box_line(const std::string& line, int line_no) {
  std::string spaced = line;
  std::replace(spaced.begin(), spaced.end(), ',', ' ');
  std::replace(spaced.begin(), spaced.end(), '\t', ' ');
  std::istringstream in(spaced);
  std::vector<double> vals;
  std::string tok;
  while (in >> tok) {
    std::string low = tok;
    std::transform(low.begin(), low.end(), low.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (low == "nan") {
      vals.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    double v = 0.0;
    const char* b = tok.data();
    const auto res = std::from_chars(b, b + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != b + tok.size())
      throw UnparsableLine("annotation line " + std::to_string(line_no) + ": bad field '" + tok +
                               "'",
                           line_no);
    vals.push_back(v);
  }
  if (vals.size() != 4)
    throw UnparsableLine("annotation line " + std::to_string(line_no) + ": expected 4 fields, got " +
                             std::to_string(vals.size()),
                         line_no);
  return BoundingBox{vals[0], vals[1], vals[2], vals[3]};
}

}  // namespace detail

// Reads one-box-per-line annotations. Coordinates on disk are 1-based
// (OTB convention); the returned boxes are 0-based.
inline std::vector<BoundingBox> load_boxes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ReadError("boxes: cannot read " + path);
  std::vector<BoundingBox> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    line_no += 1;
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    BoundingBox b = detail::parse_box_line(t, line_no);
    b.x -= 1.0;
    b.y -= 1.0;
    out.push_back(b);
  }
  return out;
}

// Writes boxes 1-based, comma separated, with round-trip-exact number text.
inline void write_boxes(const std::string& path, const std::vector<BoundingBox>& boxes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteError("boxes: cannot write " + path);
  for (const auto& b : boxes)
    out << detail::format_double(b.x + 1.0) << ',' << detail::format_double(b.y + 1.0) << ','
        << detail::format_double(b.w) << ',' << detail::format_double(b.h) << '\n';
  if (!out) throw WriteError("boxes: write failed for " + path);
}

// Loads one sequence directory:
//   <dir>/img/*.png|pgm|jpg|jpeg   frames, lexicographic by filename
//   <dir>/groundtruth_rect.txt     1-based x,y,w,h per frame
//   <dir>/attributes.txt           optional, one tag per line
inline SequenceAnnotation load_sequence(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  SequenceAnnotation seq;
  seq.name = root.filename().string();
  if (seq.name.empty()) seq.name = root.parent_path().filename().string();

  const fs::path img = root / "img";
  std::error_code ec;
  if (!fs::is_directory(img, ec))
    throw SequenceReadError(seq.name + ": missing img/ directory under " + dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(img, ec)) {
    if (entry.is_regular_file() && detail::is_frame_file(entry.path()))
      names.push_back(entry.path().filename().string());
  }
  if (ec) throw SequenceReadError(seq.name + ": cannot list " + img.string());
  std::sort(names.begin(), names.end());
  for (const auto& n : names) seq.frame_paths.push_back((img / n).string());
  if (seq.frame_paths.empty()) throw SequenceReadError(seq.name + ": no frames in " + img.string());

  const fs::path gt = root / "groundtruth_rect.txt";
  if (!fs::exists(gt, ec)) throw MissingGroundTruth(seq.name + ": missing " + gt.string());
  seq.gt_boxes = load_boxes(gt.string());
  if (seq.gt_boxes.size() != seq.frame_paths.size())
    throw FrameCountMismatch(seq.name + ": " + std::to_string(seq.frame_paths.size()) +
                             " frames vs " + std::to_string(seq.gt_boxes.size()) +
                             " annotation lines");

  const fs::path attr = root / "attributes.txt";
  if (fs::exists(attr, ec)) {
    std::ifstream in(attr, std::ios::binary);
    std::string line;
    while (std::getline(in, line)) {
      const std::string t = detail::trim(line);
      if (!t.empty()) seq.attributes.insert(t);
    }
  }
  return seq;
}

// Scans a dataset root for sequence subdirectories (any directory holding
// an img/ folder), sorted by name. `filters` keeps only named sequences.
inline std::vector<std::string> list_sequence_dirs(const std::string& dataset_root,
                                                   const std::vector<std::string>& filters = {}) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dataset_root, ec))
    throw ReadError("dataset: not a directory: " + dataset_root);
  std::vector<std::string> dirs;
  for (const auto& entry : fs::directory_iterator(dataset_root, ec)) {
    if (!entry.is_directory()) continue;
    if (!fs::is_directory(entry.path() / "img", ec)) continue;
    const std::string name = entry.path().filename().string();
    if (!filters.empty() &&
        std::find(filters.begin(), filters.end(), name) == filters.end())
      continue;
    dirs.push_back(entry.path().string());
  }
  std::sort(dirs.begin(), dirs.end());
  if (dirs.empty()) throw ReadError("dataset: no sequences found under " + dataset_root);
  return dirs;
}

}  // namespace tircf
