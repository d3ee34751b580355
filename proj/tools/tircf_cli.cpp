#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <opencv2/imgproc.hpp>

#include <tircf/config_io.hpp>
#include <tircf/eval.hpp>
#include <tircf/gesr.hpp>
#include <tircf/image_io.hpp>
#include <tircf/report_io.hpp>
#include <tircf/sequence_io.hpp>
#include <tircf/tracker.hpp>

namespace {

using namespace tircf;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNonConverged = 3;

TrackerConfig load_cfg(const std::string& path) {
  if (path.empty()) return TrackerConfig{};
  return load_config(path);
}

Frame frame_loader(const std::string& path) { return load_image(path); }

// Wraps the library tracker and records whether the trainer failed to
// converge on any frame of any sequence.
TrackerFactory monitored_factory(const TrackerConfig& cfg, std::shared_ptr<bool> nonconverged) {
  return [cfg, nonconverged]() {
    auto st = std::make_shared<TrackerState>();
    OpeTracker t;
    t.start = [st, cfg, nonconverged](const Frame& f, const BoundingBox& b) {
      *st = init(f, b, cfg);
      if (cfg.use_astf && !st->astf_state.converged) *nonconverged = true;
      return st->bbox;
    };
    t.step = [st, cfg, nonconverged](const Frame& f) {
      const TrackResult r = track(*st, f, cfg);
      if (cfg.use_astf && !st->astf_state.converged) *nonconverged = true;
      return r.bbox;
    };
    return t;
  };
}

std::vector<SequenceAnnotation> build_dataset(const std::string& root,
                                              std::vector<std::string>& load_failures) {
  std::vector<SequenceAnnotation> ds;
  for (const auto& dir : list_sequence_dirs(root)) {
    try {
      ds.push_back(load_sequence(dir));
    } catch (const Error& e) {
      load_failures.emplace_back(e.what());
    }
  }
  if (ds.empty()) throw ReadError("dataset: no loadable sequences under " + root);
  return ds;
}

EvalReport run_eval(const std::vector<SequenceAnnotation>& ds, const TrackerConfig& cfg,
                    std::shared_ptr<bool> nonconverged) {
  return run_ope(ds, monitored_factory(cfg, nonconverged), frame_loader);
}

int cmd_track(const std::string& sequence_dir, const std::string& config_path,
              const std::string& out_dir, bool overlay) {
  const TrackerConfig cfg = load_cfg(config_path);
  cfg.validate();
  const SequenceAnnotation seq = load_sequence(sequence_dir);

  std::vector<BoundingBox> boxes;
  boxes.reserve(seq.frame_paths.size());
  TrackerState st;
  bool nonconverged = false;
  double elapsed = 0.0;
  for (size_t i = 0; i < seq.frame_paths.size(); ++i) {
    const Frame f = load_image(seq.frame_paths[i]);
    if (i == 0) {
      st = init(f, seq.gt_boxes[0], cfg);
      boxes.push_back(st.bbox);
    } else {
      const TrackResult r = track(st, f, cfg);
      boxes.push_back(r.bbox);
      elapsed += r.elapsed;
    }
    if (cfg.use_astf && !st.astf_state.converged) nonconverged = true;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  write_boxes((std::filesystem::path(out_dir) / "boxes.txt").string(), boxes);
  if (overlay) render_overlays(seq.frame_paths, boxes, seq.gt_boxes, out_dir, seq.name);

  double iou_sum = 0.0;
  int iou_n = 0;
  for (size_t i = 0; i < boxes.size(); ++i) {
    if (!box_valid(seq.gt_boxes[i])) continue;
    iou_sum += iou(boxes[i], seq.gt_boxes[i]);
    iou_n += 1;
  }
  std::cout << "sequence " << seq.name << ": " << boxes.size() << " frames";
  if (iou_n > 0) std::cout << ", mean overlap " << detail::fixed3(iou_sum / iou_n);
  if (elapsed > 0.0)
    std::cout << ", " << detail::fixed3((boxes.size() - 1) / elapsed) << " fps";
  std::cout << "\n";
  if (nonconverged) {
    std::cout << "warning: the filter trainer hit its iteration cap on at least one frame; "
                 "results were still written\n";
    return kExitNonConverged;
  }
  return kExitOk;
}

int cmd_eval(const std::string& dataset_root, const std::string& config_path,
             const std::string& out_dir, const std::string& attr) {
  const TrackerConfig cfg = load_cfg(config_path);
  cfg.validate();
  std::vector<std::string> load_failures;
  std::vector<SequenceAnnotation> ds = build_dataset(dataset_root, load_failures);
  std::vector<std::string> filters;
  if (!attr.empty()) {
    ds.erase(std::remove_if(ds.begin(), ds.end(),
                            [&](const SequenceAnnotation& s) { return !s.attributes.count(attr); }),
             ds.end());
    if (ds.empty()) throw ReadError("dataset: no sequence carries attribute '" + attr + "'");
    for (const auto& s : ds) filters.push_back(s.name);
  }

  auto nonconverged = std::make_shared<bool>(false);
  EvalReport rep = run_eval(ds, cfg, nonconverged);
  rep.skipped.insert(rep.skipped.end(), load_failures.begin(), load_failures.end());
  std::sort(rep.skipped.begin(), rep.skipped.end());

  write_report(rep, out_dir);
  emit_curves(rep, out_dir);
  RunManifest manifest{dataset_root, filters, config_path, out_dir, utc_timestamp(),
                       config_hash(cfg)};
  write_manifest(manifest, out_dir);
  const std::filesystem::path box_dir = std::filesystem::path(out_dir) / "boxes";
  std::error_code ec;
  std::filesystem::create_directories(box_dir, ec);
  for (const auto& s : rep.sequences) write_boxes((box_dir / (s.name + ".txt")).string(), s.boxes);

  std::cout << "evaluated " << rep.sequences.size() << " sequences (" << rep.skipped.size()
            << " skipped): precision@20 " << detail::fixed3(rep.precision_at_20) << ", auc "
            << detail::fixed3(rep.auc) << ", mean overlap " << detail::fixed3(rep.paper_precision)
            << ", " << detail::fixed3(rep.fps) << " fps\n";
  if (*nonconverged) {
    std::cout << "warning: the filter trainer hit its iteration cap on at least one frame; "
                 "results were still written\n";
    return kExitNonConverged;
  }
  return kExitOk;
}

int cmd_sr(const std::string& input, int scale, const std::string& config_path,
           const std::string& out_path, bool side_by_side) {
  TrackerConfig cfg = load_cfg(config_path);
  cfg.gesr.scale = scale;
  cfg.gesr.validate();
  const Frame in = load_image(input);
  const Field2D sr = gesr_reconstruct(in.pixels, cfg.gesr);
  if (!side_by_side) {
    save_image(sr, out_path);
  } else {
    cv::Mat raw(static_cast<int>(in.pixels.rows()), static_cast<int>(in.pixels.cols()), CV_64F);
    for (int r = 0; r < raw.rows; ++r)
      for (int c = 0; c < raw.cols; ++c) raw.at<double>(r, c) = in.pixels(r, c);
    cv::Mat up;
    cv::resize(raw, up, cv::Size(static_cast<int>(sr.cols()), static_cast<int>(sr.rows())), 0, 0,
               cv::INTER_CUBIC);
    const int gap = 4;
    Field2D panel = Field2D::Ones(sr.rows(), sr.cols() * 2 + gap);
    for (int r = 0; r < sr.rows(); ++r)
      for (int c = 0; c < sr.cols(); ++c) {
        panel(r, c) = std::clamp(up.at<double>(r, c), 0.0, 1.0);
        panel(r, c + sr.cols() + gap) = sr(r, c);
      }
    save_image(panel, out_path);
  }
  std::cout << "wrote " << out_path << " (" << sr.cols() << "x" << sr.rows() << ")\n";
  return kExitOk;
}

int cmd_ablate(const std::string& dataset_root, const std::string& config_path,
               const std::string& out_dir) {
  const TrackerConfig base = load_cfg(config_path);
  struct Variant {
    const char* label;
    bool astf, epsr, gesr;
  };
  const Variant variants[] = {{"baseline", false, false, false},
                              {"+trainer", true, false, false},
                              {"+refiner", true, true, false},
                              {"+upscaler", true, false, true},
                              {"full", true, true, true}};
  std::vector<std::string> load_failures;
  const std::vector<SequenceAnnotation> ds = build_dataset(dataset_root, load_failures);
  auto nonconverged = std::make_shared<bool>(false);
  std::vector<AblationRow> rows;
  for (const auto& v : variants) {
    TrackerConfig cfg = base;
    cfg.use_astf = v.astf;
    cfg.use_epsr = v.epsr;
    cfg.use_gesr = v.gesr;
    cfg.validate();
    const EvalReport rep = run_eval(ds, cfg, nonconverged);
    rows.push_back(ablation_row(v.label, rep));
    std::cout << detail::pad(v.label, 12) << "precision@20 "
              << detail::fixed3(rep.precision_at_20) << "  auc " << detail::fixed3(rep.auc)
              << "  fps " << detail::fixed3(rep.fps) << "\n";
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  write_ablation_csv(rows, (std::filesystem::path(out_dir) / "ablation.csv").string());
  if (*nonconverged) {
    std::cout << "warning: the filter trainer hit its iteration cap on at least one frame; "
                 "results were still written\n";
    return kExitNonConverged;
  }
  return kExitOk;
}

// Values are either "a:b:step" (inclusive range) or a comma list whose
// tokens are echoed verbatim into the CSV.
std::vector<std::string> sweep_tokens(const std::string& values) {
  std::vector<std::string> out;
  if (values.find(':') != std::string::npos) {
    std::istringstream in(values);
    std::string a, b, s;
    if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, s))
      throw InvalidConfig("sweep: range must be start:stop:step, got '" + values + "'");
    const double lo = detail::parse_double(detail::trim(a), 0);
    const double hi = detail::parse_double(detail::trim(b), 0);
    const double step = detail::parse_double(detail::trim(s), 0);
    if (step <= 0.0 || hi < lo)
      throw InvalidConfig("sweep: range must have stop >= start and step > 0");
    for (double v = lo; v <= hi + step * 1e-9; v += step) out.push_back(detail::format_double(v));
  } else {
    std::istringstream in(values);
    std::string tok;
    while (std::getline(in, tok, ',')) {
      tok = detail::trim(tok);
      if (!tok.empty()) out.push_back(tok);
    }
  }
  if (out.empty()) throw InvalidConfig("sweep: no values given");
  return out;
}

int cmd_sweep(const std::string& dataset_root, const std::string& config_path,
              const std::string& out_dir, const std::string& param, const std::string& values) {
  const size_t dot = param.find('.');
  if (dot == std::string::npos)
    throw InvalidConfig("sweep: parameter must be section.key, got '" + param + "'");
  const std::string section = param.substr(0, dot);
  const std::string key = param.substr(dot + 1);
  const detail::ConfigField* field = nullptr;
  for (const auto& [sname, fields] : detail::config_schema()) {
    if (sname != section) continue;
    for (const auto& [kname, f] : fields)
      if (kname == key) field = &f;
  }
  if (!field) throw InvalidConfig("sweep: unknown parameter '" + param + "'");

  const TrackerConfig base = load_cfg(config_path);
  std::vector<std::string> load_failures;
  const std::vector<SequenceAnnotation> ds = build_dataset(dataset_root, load_failures);
  auto nonconverged = std::make_shared<bool>(false);

  std::string csv = "value,precision,success\n";
  for (const auto& tok : sweep_tokens(values)) {
    TrackerConfig cfg = base;
    field->set(cfg, tok, 0);
    cfg.validate();
    const EvalReport rep = run_eval(ds, cfg, nonconverged);
    csv += tok + "," + detail::format_double(rep.precision_at_20) + "," +
           detail::format_double(rep.auc) + "\n";
    std::cout << param << " = " << detail::pad(tok, 10) << "precision@20 "
              << detail::fixed3(rep.precision_at_20) << "  auc " << detail::fixed3(rep.auc)
              << "\n";
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  detail::write_text_file((std::filesystem::path(out_dir) / "sweep.csv").string(), csv);
  if (*nonconverged) {
    std::cout << "warning: the filter trainer hit its iteration cap on at least one frame; "
                 "results were still written\n";
    return kExitNonConverged;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"thermal-infrared correlation-filter tracker"};
  app.require_subcommand(1);

  std::string sequence_dir, dataset_root, config_path, out_dir, out_path, input_path;
  std::string attr, param, values;
  bool overlay = false, side_by_side = false;
  int scale = 2;

  CLI::App* track_cmd = app.add_subcommand("track", "run the tracker over one sequence");
  track_cmd->add_option("--sequence", sequence_dir, "sequence directory")->required();
  track_cmd->add_option("--config", config_path, "config file (defaults when omitted)");
  track_cmd->add_option("--out", out_dir, "output directory")->required();
  track_cmd->add_flag("--overlay", overlay, "render per-frame box overlays");

  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate over a dataset of sequences");
  eval_cmd->add_option("--dataset", dataset_root, "dataset root directory")->required();
  eval_cmd->add_option("--config", config_path, "config file (defaults when omitted)");
  eval_cmd->add_option("--out", out_dir, "output directory")->required();
  eval_cmd->add_option("--attr", attr, "keep only sequences with this attribute");

  CLI::App* sr_cmd = app.add_subcommand("sr", "super-resolve a single image");
  sr_cmd->add_option("--input", input_path, "input image")->required();
  sr_cmd->add_option("--scale", scale, "upscaling factor")->required();
  sr_cmd->add_option("--config", config_path, "config file (defaults when omitted)");
  sr_cmd->add_option("--out", out_path, "output image path")->required();
  sr_cmd->add_flag("--side-by-side", side_by_side, "write bicubic | reconstruction panel");

  CLI::App* ablate_cmd = app.add_subcommand("ablate", "component on/off study over a dataset");
  ablate_cmd->add_option("--dataset", dataset_root, "dataset root directory")->required();
  ablate_cmd->add_option("--config", config_path, "config file (defaults when omitted)");
  ablate_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI::App* sweep_cmd = app.add_subcommand("sweep", "sweep one config parameter over a dataset");
  sweep_cmd->add_option("--param", param, "parameter as section.key, e.g. gesr.m")->required();
  sweep_cmd->add_option("--values", values, "comma list or start:stop:step range")->required();
  sweep_cmd->add_option("--dataset", dataset_root, "dataset root directory")->required();
  sweep_cmd->add_option("--config", config_path, "config file (defaults when omitted)");
  sweep_cmd->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (track_cmd->parsed()) return cmd_track(sequence_dir, config_path, out_dir, overlay);
    if (eval_cmd->parsed()) return cmd_eval(dataset_root, config_path, out_dir, attr);
    if (sr_cmd->parsed()) return cmd_sr(input_path, scale, config_path, out_path, side_by_side);
    if (ablate_cmd->parsed()) return cmd_ablate(dataset_root, config_path, out_dir);
    if (sweep_cmd->parsed()) return cmd_sweep(dataset_root, config_path, out_dir, param, values);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
