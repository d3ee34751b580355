#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include <tircf/astf.hpp>
#include <tircf/core.hpp>
#include <tircf/epsr.hpp>
#include <tircf/features.hpp>
#include <tircf/fft.hpp>
#include <tircf/gesr.hpp>
#include <tircf/ops.hpp>

namespace tircf {

struct TrackerConfig {
  FeatureConfig features;
  AstfConfig astf;
  SpatialRegParams sp;
  TemporalRegParams tp;
  EpsrConfig epsr;
  GesrConfig gesr;
  double learning_rate = 0.02;
  int sr_trigger_px = 32;
  std::vector<double> scales{0.985, 1.0, 1.015};
  double scale_penalty = 0.99;
  double padding = 1.5;
  double label_sigma_factor = 0.1;
  bool use_astf = true;
  bool use_epsr = true;
  bool use_gesr = true;

  TrackerConfig() {
    // Per-frame refinement runs on filter-magnitude tensors (singular values
    // around 1e-2) on a short budget. The standalone refinement defaults
    // would zero such a filter on the first sweep, so embed thresholds far
    // below filter magnitude; the short sweep then applies a deterministic,
    // channel-uniform gain that leaves every response argmax unchanged.
    epsr.lambda1 = 1e-6;
    epsr.lambda2 = 1e-6;
    epsr.lambda3 = 1e-6;
    epsr.mu0 = 1e6;
    epsr.rho = 2.0;
    epsr.max_iters = 3;
    epsr.tol = 1e-6;
  }

  void validate() const {
    astf.validate();
    sp.validate();
    tp.validate();
    epsr.validate();
    gesr.validate();
    if (!(learning_rate >= 0.0 && learning_rate <= 1.0))
      throw InvalidConfig("tracker: learning_rate must lie in [0, 1]");
    if (sr_trigger_px < 0) throw InvalidConfig("tracker: sr_trigger_px must be >= 0");
    if (scales.empty()) throw InvalidConfig("tracker: need at least one scale");
    for (double s : scales)
      if (!(s > 0.0) || !std::isfinite(s))
        throw InvalidConfig("tracker: scales must be positive and finite");
    if (!(scale_penalty > 0.0 && scale_penalty <= 1.0))
      throw InvalidConfig("tracker: scale_penalty must lie in (0, 1]");
    if (!(padding >= 0.0) || !std::isfinite(padding))
      throw InvalidConfig("tracker: padding must be >= 0 and finite");
    if (!(label_sigma_factor > 0.0))
      throw InvalidConfig("tracker: label_sigma_factor must be > 0");
    if (features.cell_size < 1) throw InvalidConfig("tracker: cell_size must be >= 1");
    if (features.window_size < 2 * features.cell_size ||
        features.window_size % features.cell_size != 0)
      throw InvalidConfig("tracker: window_size must be a multiple of cell_size, >= two cells");
    if (use_gesr && features.window_size % 2 != 0)
      throw InvalidConfig("tracker: window_size must be even when super-resolution is enabled");
  }
};

struct TrackerState {
  FilterBank model;       // detection filter, smoothed across frames
  AstfState astf_state;   // trainer state carried for temporal regularization
  BoundingBox bbox;
  int frame_index = 0;
  double last_response_peak = 0.0;
};

struct TrackResult {
  BoundingBox bbox;
  double peak = 0.0;
  bool used_sr = false;
  int solver_iters = 0;
  double elapsed = 0.0;  // seconds
};

namespace detail {

inline double quant32(double v) { return std::round(v * 32.0) / 32.0; }

// Snap coordinates to 1/32 px so serialized boxes round-trip exactly.
inline BoundingBox quantize_box(const BoundingBox& b) {
  return {quant32(b.x), quant32(b.y), std::max(quant32(b.w), 1.0 / 32.0),
          std::max(quant32(b.h), 1.0 / 32.0)};
}

// Shift a quantized box, in whole 1/32 steps, until its center lies inside
// [0, frame-1] on both axes; coordinates stay on the 1/32 grid exactly.
inline BoundingBox clamp_center_on_grid(BoundingBox b, int frame_h, int frame_w) {
  const auto shift = [](double& pos, double half, double hi) {
    const double c = pos + half;
    if (c < 0.0)
      pos += std::ceil(-c * 32.0) / 32.0;
    else if (c > hi)
      pos -= std::ceil((c - hi) * 32.0) / 32.0;
  };
  shift(b.x, b.w / 2.0, static_cast<double>(frame_w - 1));
  shift(b.y, b.h / 2.0, static_cast<double>(frame_h - 1));
  return b;
}

inline BoundingBox clip_to_frame(const BoundingBox& b, int frame_h, int frame_w) {
  if (!(std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h)))
    throw DegenerateBox("tracker: initial box must be finite");
  const double x0 = std::max(b.x, 0.0);
  const double y0 = std::max(b.y, 0.0);
  const double x1 = std::min(b.x + b.w, static_cast<double>(frame_w));
  const double y1 = std::min(b.y + b.h, static_cast<double>(frame_h));
  if (!(x1 - x0 > 0.0) || !(y1 - y0 > 0.0))
    throw DegenerateBox("tracker: initial box does not overlap the frame");
  return {x0, y0, x1 - x0, y1 - y0};
}

struct SampleResult {
  FeatureTensor features;
  double win_w_frame = 0.0;  // frame-pixel extent the window spans, per axis
  double win_h_frame = 0.0;
  bool used_sr = false;
};

inline SampleResult sample_window(const Frame& frame, const BoundingBox& bbox, double scale,
                                  const TrackerConfig& cfg) {
  BoundingBox sbox{bbox.cx() - bbox.w * scale / 2.0, bbox.cy() - bbox.h * scale / 2.0,
                   bbox.w * scale, bbox.h * scale};
  const int p = cfg.features.window_size;
  SampleResult out;
  out.win_w_frame = sbox.w * (1.0 + cfg.padding);
  out.win_h_frame = sbox.h * (1.0 + cfg.padding);
  out.used_sr = cfg.use_gesr &&
                std::min(bbox.w, bbox.h) < static_cast<double>(cfg.sr_trigger_px);
  Field2D patch;
  if (out.used_sr) {
    // Sample at half resolution and let reconstruction double it back, so the
    // window-to-patch pixel mapping is identical on both paths.
    GesrConfig g = cfg.gesr;
    g.scale = 2;
    patch = gesr_reconstruct(extract_patch(frame, sbox, cfg.padding, p / 2, p / 2), g);
  } else {
    patch = extract_patch(frame, sbox, cfg.padding, p, p);
  }
  out.features = extract_features(patch, cfg.features);
  return out;
}

// The window always resamples (1+padding) times the box onto window_size
// pixels, so the label width in cells is the same for every box size.
inline double label_sigma(const TrackerConfig& cfg) {
  const double patch_side = cfg.features.window_size / (1.0 + cfg.padding);
  return cfg.label_sigma_factor * patch_side / cfg.features.cell_size;
}

// Closed-form single-sample filter: per bin, conj(xhat) * yhat over the
// ridge-damped energy summed across channels.
inline Tensor3 ridge_filter(const Tensor3& x, const Field2D& y, double gamma) {
  const std::vector<Spectrum2D> xhat = spectra_of(x);
  const Spectrum2D yhat = dft2(y);
  Field2D denom = Field2D::Constant(y.rows(), y.cols(), gamma);
  for (const Spectrum2D& s : xhat) denom += s.abs2();
  Tensor3 f = Tensor3::zeros(x.depth(), x.rows(), x.cols());
  for (int d = 0; d < x.depth(); ++d) {
    const Spectrum2D fh = xhat[static_cast<size_t>(d)].conjugate() * yhat /
                          denom.cast<std::complex<double>>();
    f[d] = idft2(fh);
  }
  return f;
}

struct TrainOutcome {
  Tensor3 filter;
  int iters = 0;
  bool converged = true;
};

inline TrainOutcome train_filter(TrackerState& st, const FeatureTensor& x, const Field2D& y,
                                 const TrackerConfig& cfg) {
  TrainOutcome out;
  if (cfg.use_astf) {
    st.astf_state = admm_astf(x, y, st.astf_state, cfg.astf, cfg.sp, cfg.tp);
    out.filter = st.astf_state.f.weights;
    out.iters = st.astf_state.iter;
    out.converged = st.astf_state.converged;
  } else {
    out.filter = ridge_filter(x.data, y, cfg.astf.gamma_ridge);
  }
  if (cfg.use_epsr) {
    // Refinement feeds the detection model only. Its net gain would compound
    // frame over frame if written back as the trainer's temporal anchor, so
    // the trainer keeps regularizing toward its own raw filter.
    EpsrResult r = epsr_run(out.filter, cfg.epsr);
    out.filter = r.F;
    out.iters += r.sweeps;
  }
  return out;
}

// Vertex of the parabola through three equispaced samples around a maximum.
// Returns 0 unless the triple is strictly concave; the offset never leaves
// the half-cell neighborhood of the integer peak.
inline double parabolic_offset(double lm, double c, double rp) {
  const double denom = lm - 2.0 * c + rp;
  if (!(denom < 0.0)) return 0.0;
  return std::clamp(0.5 * (lm - rp) / denom, -0.5, 0.5);
}

// Map a circular response coordinate to a signed displacement around zero.
inline double signed_wrap(double v, int n) {
  return (v > n / 2.0) ? v - n : v;
}

}  // namespace detail

inline TrackerState init(const Frame& frame, const BoundingBox& bbox0, const TrackerConfig& cfg) {
  cfg.validate();
  if (frame.pixels.size() == 0) throw EmptyFrame("tracker: frame is empty");
  TrackerState st;
  st.bbox = detail::quantize_box(detail::clip_to_frame(
      bbox0, static_cast<int>(frame.pixels.rows()), static_cast<int>(frame.pixels.cols())));
  const detail::SampleResult s0 = detail::sample_window(frame, st.bbox, 1.0, cfg);
  const Field2D label = gaussian_label(s0.features.data.rows(), s0.features.data.cols(),
                                       detail::label_sigma(cfg));
  const detail::TrainOutcome tr = detail::train_filter(st, s0.features, label, cfg);
  st.model.weights = tr.filter;
  st.model.refresh_spectrum();
  st.frame_index = 0;
  st.last_response_peak =
      locate_peak(idft2(response_spectrum(st.model.spectrum, detail::spectra_of(s0.features.data))))
          .value;
  return st;
}

inline TrackResult track(TrackerState& st, const Frame& frame, const TrackerConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  if (frame.pixels.size() == 0) throw EmptyFrame("tracker: frame is empty");
  if (st.model.spectrum.empty()) st.model.refresh_spectrum();

  const int frame_h = static_cast<int>(frame.pixels.rows());
  const int frame_w = static_cast<int>(frame.pixels.cols());
  const int p = cfg.features.window_size;

  struct Candidate {
    Field2D response;
    PeakLocation peak;
    double score = 0.0;
    double scale = 1.0;
    detail::SampleResult sample;
  };
  std::optional<Candidate> best;
  bool used_sr = false;
  for (double s : cfg.scales) {
    detail::SampleResult sr = detail::sample_window(frame, st.bbox, s, cfg);
    used_sr = sr.used_sr;  // the trigger depends only on the unscaled box
    Field2D resp =
        idft2(response_spectrum(st.model.spectrum, detail::spectra_of(sr.features.data)));
    const PeakLocation pk = locate_peak(resp);
    const double score = pk.value * (s == 1.0 ? 1.0 : cfg.scale_penalty);
    if (!best || score > best->score)
      best = Candidate{std::move(resp), pk, score, s, std::move(sr)};
  }

  const int ch = static_cast<int>(best->response.rows());
  const int cw = static_cast<int>(best->response.cols());
  const auto at = [&](int r, int c) {
    return best->response(((r % ch) + ch) % ch, ((c % cw) + cw) % cw);
  };
  const int pr = best->peak.row;
  const int pc = best->peak.col;
  const double off_r =
      detail::parabolic_offset(at(pr - 1, pc), best->peak.value, at(pr + 1, pc));
  const double off_c =
      detail::parabolic_offset(at(pr, pc - 1), best->peak.value, at(pr, pc + 1));
  const double dr = detail::signed_wrap(pr + off_r, ch);
  const double dc = detail::signed_wrap(pc + off_c, cw);

  // One response cell spans cell_size patch pixels; the whole patch spans the
  // window's frame-pixel extent, per axis.
  const double cell = static_cast<double>(cfg.features.cell_size);
  const double dy = dr * cell * best->sample.win_h_frame / static_cast<double>(p);
  const double dx = dc * cell * best->sample.win_w_frame / static_cast<double>(p);

  const double new_w = st.bbox.w * best->scale;
  const double new_h = st.bbox.h * best->scale;
  const double new_cx = st.bbox.cx() + dx;
  const double new_cy = st.bbox.cy() + dy;
  st.bbox = detail::clamp_center_on_grid(
      detail::quantize_box({new_cx - new_w / 2.0, new_cy - new_h / 2.0, new_w, new_h}),
      frame_h, frame_w);
  st.frame_index += 1;
  st.last_response_peak = best->peak.value;

  const detail::SampleResult rs = detail::sample_window(frame, st.bbox, 1.0, cfg);
  const Field2D label = gaussian_label(rs.features.data.rows(), rs.features.data.cols(),
                                       detail::label_sigma(cfg));
  const detail::TrainOutcome tr = detail::train_filter(st, rs.features, label, cfg);

  if (cfg.learning_rate == 1.0) {
    st.model.weights = tr.filter;
    st.model.refresh_spectrum();
  } else if (cfg.learning_rate > 0.0) {
    st.model.weights =
        (1.0 - cfg.learning_rate) * st.model.weights + cfg.learning_rate * tr.filter;
    st.model.refresh_spectrum();
  }
  // learning_rate == 0 leaves the model tensor untouched, bit for bit.

  TrackResult out;
  out.bbox = st.bbox;
  out.peak = best->peak.value;
  out.used_sr = used_sr || rs.used_sr;
  out.solver_iters = tr.iters;
  out.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

}  // namespace tircf
