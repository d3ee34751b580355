#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include <tircf/config_io.hpp>
#include <tircf/eval.hpp>

namespace tircf {

struct RunManifest {
  std::string dataset_root;
  std::vector<std::string> filters;  // sequence names kept; empty = all
  std::string config_path;           // empty = built-in defaults
  std::string out_dir;
  std::string timestamp;    // UTC, ISO-8601
  std::string config_hash;  // hash of the canonical config serialization
};

namespace detail {

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteError("report: cannot write " + path);
  out << text;
  if (!out) throw WriteError("report: write failed for " + path);
}

inline std::string fixed3(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(3) << v;
  return s.str();
}

inline std::string pad(std::string s, size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

// One polyline chart, self-contained SVG.
inline std::string curve_svg(const std::string& title, const std::string& x_label,
                             const std::vector<double>& xs, const std::vector<double>& ys) {
  const double w = 640.0, h = 480.0, ml = 60.0, mr = 20.0, mt = 40.0, mb = 50.0;
  const double px = w - ml - mr, py = h - mt - mb;
  const double x0 = xs.front(), x1 = xs.back();
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
       "viewBox=\"0 0 640 480\">\n";
  s << "  <rect x=\"0\" y=\"0\" width=\"640\" height=\"480\" fill=\"white\"/>\n";
  s << "  <text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"16\">"
    << title << "</text>\n";
  s << "  <line x1=\"" << ml << "\" y1=\"" << mt + py << "\" x2=\"" << ml + px << "\" y2=\""
    << mt + py << "\" stroke=\"black\"/>\n";
  s << "  <line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + py
    << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double fy = mt + py - py * (i / 5.0);
    s << "  <text x=\"" << ml - 8 << "\" y=\"" << fy + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fixed3(i / 5.0)
      << "</text>\n";
    const double fx = ml + px * (i / 5.0);
    s << "  <text x=\"" << fx << "\" y=\"" << mt + py + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << fixed3(x0 + (x1 - x0) * (i / 5.0)) << "</text>\n";
  }
  s << "  <text x=\"" << ml + px / 2 << "\" y=\"" << h - 12
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << x_label
    << "</text>\n";
  s << "  <polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < xs.size(); ++i) {
    const double fx = ml + px * ((xs[i] - x0) / (x1 - x0));
    const double fy = mt + py - py * std::clamp(ys[i], 0.0, 1.0);
    if (i) s << ' ';
    s << fixed3(fx) << ',' << fixed3(fy);
  }
  s << "\"/>\n</svg>\n";
  return s.str();
}

inline nlohmann::json box_json(const BoundingBox& b) {
  return nlohmann::json{{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
}

}  // namespace detail

// report.json + report.txt (aligned summary table) under out_dir.
inline void write_report(const EvalReport& rep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  nlohmann::json j;
  j["overall"] = {{"precision_at_20", rep.precision_at_20},
                  {"auc", rep.auc},
                  {"mean_iou", rep.paper_precision},
                  {"normalized_precision", rep.normalized_precision},
                  {"fps", rep.fps},
                  {"sequences", rep.sequences.size()},
                  {"skipped", rep.skipped.size()}};
  j["precision_curve"] = rep.precision_curve;
  j["success_curve"] = rep.success_curve;
  j["sequences"] = nlohmann::json::array();
  for (const auto& s : rep.sequences) {
    nlohmann::json e = {{"name", s.name},
                        {"attributes", s.attributes},
                        {"precision_at_20", s.precision_at_20},
                        {"auc", s.auc},
                        {"mean_iou", s.paper_precision},
                        {"normalized_precision", s.normalized_precision},
                        {"frames", s.frames},
                        {"elapsed_seconds", s.elapsed},
                        {"fps", s.fps}};
    j["sequences"].push_back(std::move(e));
  }
  j["attributes"] = nlohmann::json::array();
  for (const auto& a : rep.attribute_rows)
    j["attributes"].push_back({{"name", a.name},
                               {"precision_at_20", a.precision_at_20},
                               {"auc", a.auc},
                               {"sequences", a.sequences}});
  j["skipped"] = rep.skipped;
  detail::write_text_file((fs::path(out_dir) / "report.json").string(), j.dump(2) + "\n");

  std::ostringstream t;
  const size_t name_w =
      std::max<size_t>(8, [&] {
        size_t m = 0;
        for (const auto& s : rep.sequences) m = std::max(m, s.name.size());
        for (const auto& a : rep.attribute_rows) m = std::max(m, a.name.size());
        return m;
      }()) +
      2;
  t << detail::pad("Sequence", name_w) << detail::pad("P@20", 8) << detail::pad("AUC", 8)
    << detail::pad("mIoU", 8) << detail::pad("NP", 8) << detail::pad("FPS", 10) << "Frames\n";
  t << std::string(name_w + 48, '-') << "\n";
  for (const auto& s : rep.sequences)
    t << detail::pad(s.name, name_w) << detail::pad(detail::fixed3(s.precision_at_20), 8)
      << detail::pad(detail::fixed3(s.auc), 8) << detail::pad(detail::fixed3(s.paper_precision), 8)
      << detail::pad(detail::fixed3(s.normalized_precision), 8)
      << detail::pad(detail::fixed3(s.fps), 10) << s.frames << "\n";
  t << std::string(name_w + 48, '-') << "\n";
  t << detail::pad("Overall", name_w) << detail::pad(detail::fixed3(rep.precision_at_20), 8)
    << detail::pad(detail::fixed3(rep.auc), 8) << detail::pad(detail::fixed3(rep.paper_precision), 8)
    << detail::pad(detail::fixed3(rep.normalized_precision), 8)
    << detail::pad(detail::fixed3(rep.fps), 10) << "\n";
  if (!rep.attribute_rows.empty()) {
    t << "\n" << detail::pad("Attribute", name_w) << detail::pad("P@20", 8) << detail::pad("AUC", 8)
      << "Seqs\n";
    for (const auto& a : rep.attribute_rows)
      t << detail::pad(a.name, name_w) << detail::pad(detail::fixed3(a.precision_at_20), 8)
        << detail::pad(detail::fixed3(a.auc), 8) << a.sequences << "\n";
  }
  if (!rep.skipped.empty()) {
    t << "\nSkipped:\n";
    for (const auto& msg : rep.skipped) t << "  " << msg << "\n";
  }
  detail::write_text_file((fs::path(out_dir) / "report.txt").string(), t.str());
}

// precision.csv / success.csv (threshold,value per row, exact number text)
// and matching SVG plots.
inline void emit_curves(const EvalReport& rep, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  std::string pcsv = "threshold,value\n";
  std::vector<double> pxs;
  for (size_t i = 0; i < rep.precision_curve.size(); ++i) {
    pxs.push_back(static_cast<double>(i));
    pcsv += detail::format_double(pxs.back()) + "," +
            detail::format_double(rep.precision_curve[i]) + "\n";
  }
  detail::write_text_file((fs::path(out_dir) / "precision.csv").string(), pcsv);

  std::string scsv = "threshold,value\n";
  std::vector<double> sxs;
  for (size_t i = 0; i < rep.success_curve.size(); ++i) {
    sxs.push_back(0.02 * static_cast<double>(i));
    scsv += detail::format_double(sxs.back()) + "," +
            detail::format_double(rep.success_curve[i]) + "\n";
  }
  detail::write_text_file((fs::path(out_dir) / "success.csv").string(), scsv);

  if (!rep.precision_curve.empty())
    detail::write_text_file(
        (fs::path(out_dir) / "precision.svg").string(),
        detail::curve_svg("Precision", "center error threshold (px)", pxs, rep.precision_curve));
  if (!rep.success_curve.empty())
    detail::write_text_file(
        (fs::path(out_dir) / "success.svg").string(),
        detail::curve_svg("Success", "overlap threshold", sxs, rep.success_curve));
}

inline void write_manifest(const RunManifest& m, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  nlohmann::json j = {{"dataset_root", m.dataset_root}, {"filters", m.filters},
                      {"config_path", m.config_path},   {"out_dir", m.out_dir},
                      {"timestamp", m.timestamp},       {"config_hash", m.config_hash}};
  detail::write_text_file((fs::path(out_dir) / "manifest.json").string(), j.dump(2) + "\n");
}

inline void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
  std::string csv = "variant,precision_at_20,auc,fps\n";
  for (const auto& r : rows)
    csv += r.label + "," + detail::format_double(r.precision_at_20) + "," +
           detail::format_double(r.auc) + "," + detail::format_double(r.fps) + "\n";
  detail::write_text_file(path, csv);
}

}  // namespace tircf
