#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <vector>

#include <tircf/core.hpp>
#include <tircf/fft.hpp>
#include <tircf/ops.hpp>

namespace tircf {

// Super-resolution preprocessing: bicubic upscale refined by subgradient
// steps on a sparse gradient-consistency objective, with a decaying
// frequency-domain edge boost between steps.
struct GesrConfig {
  double m = 0.50;
  double q = 1.0;
  double lam1_sr = 0.1;
  double lam2_sr = 0.1;
  double eta = 0.05;
  int t_max = 20;
  // Per-pixel stop factor: iteration ends when the squared step norm drops
  // below stop_eps * pixel count.
  double stop_eps = 1e-4;
  int scale = 2;
  double blur_sigma = 1.0;
  double step = 0.1;

  void validate() const {
    if (m < 0.0 || q < 0.0 || lam1_sr < 0.0 || lam2_sr < 0.0 || eta < 0.0)
      throw InvalidConfig("GesrConfig: weights must be >= 0");
    if (t_max < 1) throw InvalidConfig("GesrConfig: t_max must be >= 1");
    if (!(stop_eps > 0.0)) throw InvalidConfig("GesrConfig: stop_eps must be > 0");
    if (scale < 2) throw InvalidScale("GesrConfig: scale must be >= 2");
    if (!(blur_sigma > 0.0)) throw NonPositiveSigma("GesrConfig: blur_sigma must be > 0");
    if (!(step > 0.0)) throw InvalidConfig("GesrConfig: step must be > 0");
  }
};

struct SrState {
  Field2D i_lr;
  Field2D i_hat;
  Field2D i_prev;
  Field2D x_sparse;
  int iter = 0;
  std::vector<double> residuals;
};

struct PeakLocation {
  int row = 0;
  int col = 0;
  double value = 0.0;
};

inline Spectrum2D response_spectrum(const std::vector<Spectrum2D>& w_hats,
                                    const std::vector<Spectrum2D>& d_hats) {
  if (w_hats.empty() || d_hats.empty())
    throw EmptyChannelList("response_spectrum: empty channel list");
  if (w_hats.size() != d_hats.size())
    throw ShapeMismatch("response_spectrum: channel count mismatch");
  Spectrum2D acc = Spectrum2D::Zero(w_hats[0].rows(), w_hats[0].cols());
  for (size_t d = 0; d < w_hats.size(); ++d) {
    if (w_hats[d].rows() != acc.rows() || w_hats[d].cols() != acc.cols() ||
        d_hats[d].rows() != acc.rows() || d_hats[d].cols() != acc.cols())
      throw ShapeMismatch("response_spectrum: channel shape mismatch");
    acc += w_hats[d] * d_hats[d];
  }
  return acc;
}

inline PeakLocation locate_peak(const Field2D& response) {
  PeakLocation best{0, 0, response(0, 0)};
  for (int i = 0; i < response.rows(); ++i)
    for (int j = 0; j < response.cols(); ++j)
      if (response(i, j) > best.value) best = {i, j, response(i, j)};
  return best;
}

// Adjoint of grad_forward as a linear map on fields:
// <grad_forward(f), g> == <f, grad_adjoint(g)> for every f, g.
inline Field2D grad_adjoint(const Gradient2D& g) {
  if (g.gx.rows() != g.gy.rows() || g.gx.cols() != g.gy.cols())
    throw ShapeMismatch("grad_adjoint: component shape mismatch");
  const int h = static_cast<int>(g.gx.rows());
  const int w = static_cast<int>(g.gx.cols());
  Field2D out = Field2D::Zero(h, w);
  for (int i = 0; i + 1 < h; ++i)
    for (int j = 0; j < w; ++j) {
      out(i + 1, j) += g.gx(i, j);
      out(i, j) -= g.gx(i, j);
    }
  for (int i = 0; i < h; ++i)
    for (int j = 0; j + 1 < w; ++j) {
      out(i, j + 1) += g.gy(i, j);
      out(i, j) -= g.gy(i, j);
    }
  return out;
}

inline double fine_grained_loss(const Field2D& x, const Field2D& w_ref,
                                const Spectrum2D& y_hat, const GesrConfig& cfg) {
  if (x.rows() != w_ref.rows() || x.cols() != w_ref.cols() ||
      x.rows() != y_hat.rows() || x.cols() != y_hat.cols())
    throw ShapeMismatch("fine_grained_loss: shape mismatch");
  const Field2D y = idft2(y_hat);
  const Gradient2D gx = grad_forward(x);
  const Gradient2D gw = grad_forward(w_ref);
  const double grad_term = (y * gx.gx - gw.gx).square().sum() +
                           (y * gx.gy - gw.gy).square().sum();
  return cfg.m * x.abs().sum() + cfg.q * grad_term;
}

namespace detail {

inline double cubic_weight(double t) {
  const double a = -0.5;
  const double x = std::abs(t);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return (((x - 5.0) * x + 8.0) * x - 4.0) * a;
  return 0.0;
}

// Radial high-pass gain: 0 at DC, 1 at the corner Nyquist bin, linear in the
// normalized frequency radius.
inline Field2D highpass_mask(int h, int w) {
  Field2D g(h, w);
  for (int u = 0; u < h; ++u) {
    const double ru = 2.0 * std::min(u, h - u) / h;
    for (int v = 0; v < w; ++v) {
      const double rv = 2.0 * std::min(v, w - v) / w;
      g(u, v) = std::sqrt((ru * ru + rv * rv) / 2.0);
    }
  }
  return g;
}

inline Field2D sgn_field(const Field2D& f) {
  return f.unaryExpr([](double v) { return sgn(v); });
}

}  // namespace detail

inline Field2D upsample(const Field2D& i_lr, int scale) {
  if (scale < 2) throw InvalidScale("upsample: scale must be >= 2");
  const int h = static_cast<int>(i_lr.rows());
  const int w = static_cast<int>(i_lr.cols());
  const int oh = scale * h;
  const int ow = scale * w;
  Field2D out(oh, ow);
  for (int r = 0; r < oh; ++r) {
    const double y = (r + 0.5) / scale - 0.5;
    const int iy = static_cast<int>(std::floor(y));
    double wy[4];
    for (int k = 0; k < 4; ++k) wy[k] = detail::cubic_weight(y - iy - (k - 1));
    for (int c = 0; c < ow; ++c) {
      const double x = (c + 0.5) / scale - 0.5;
      const int ix = static_cast<int>(std::floor(x));
      double wx[4];
      for (int k = 0; k < 4; ++k) wx[k] = detail::cubic_weight(x - ix - (k - 1));
      double acc = 0.0;
      double wsum = 0.0;
      for (int ky = 0; ky < 4; ++ky) {
        const int py = std::clamp(iy + ky - 1, 0, h - 1);
        for (int kx = 0; kx < 4; ++kx) {
          const int px = std::clamp(ix + kx - 1, 0, w - 1);
          const double wgt = wy[ky] * wx[kx];
          acc += wgt * i_lr(py, px);
          wsum += wgt;
        }
      }
      out(r, c) = std::clamp(acc / wsum, 0.0, 1.0);
    }
  }
  return out;
}

inline Field2D blur(const Field2D& img, double sigma) {
  if (!(sigma > 0.0)) throw NonPositiveSigma("blur: sigma must be > 0");
  const int radius = static_cast<int>(std::floor(3.0 * sigma));
  std::vector<double> kernel(static_cast<size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int t = -radius; t <= radius; ++t) {
    kernel[static_cast<size_t>(t + radius)] =
        std::exp(-(t * t) / (2.0 * sigma * sigma));
    sum += kernel[static_cast<size_t>(t + radius)];
  }
  for (double& k : kernel) k /= sum;
  const int h = static_cast<int>(img.rows());
  const int w = static_cast<int>(img.cols());
  Field2D rows_pass = Field2D::Zero(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t)
        acc += kernel[static_cast<size_t>(t + radius)] *
               img(((i + t) % h + h) % h, j);
      rows_pass(i, j) = acc;
    }
  Field2D out = Field2D::Zero(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      double acc = 0.0;
      for (int t = -radius; t <= radius; ++t)
        acc += kernel[static_cast<size_t>(t + radius)] *
               rows_pass(i, ((j + t) % w + w) % w);
      out(i, j) = acc;
    }
  return out;
}

inline double sr_objective(const SrState& s,
                           const std::optional<Field2D>& i_hr_ref,
                           const GesrConfig& cfg) {
  cfg.validate();
  const Field2D r_up = upsample(s.i_lr, cfg.scale);
  const Field2D& ref = i_hr_ref ? *i_hr_ref : r_up;
  if (s.i_hat.rows() != r_up.rows() || s.i_hat.cols() != r_up.cols() ||
      s.x_sparse.rows() != r_up.rows() || s.x_sparse.cols() != r_up.cols() ||
      ref.rows() != r_up.rows() || ref.cols() != r_up.cols())
    throw ShapeMismatch("sr_objective: shape mismatch");
  const Spectrum2D neutral =
      dft2(Field2D::Ones(s.x_sparse.rows(), s.x_sparse.cols()));
  return fine_grained_loss(s.x_sparse, ref, neutral, cfg) +
         cfg.lam1_sr * (s.x_sparse - r_up).square().sum() +
         cfg.lam2_sr * (ref - s.i_hat).square().sum() +
         cfg.eta * (blur(s.i_hat, cfg.blur_sigma) - ref).square().sum();
}

// Full reconstruction loop returning intermediate state: per-iteration
// residuals are the squared step norms the stop rule inspects.
inline SrState gesr_reconstruct_full(const Field2D& i_lr, const GesrConfig& cfg) {
  cfg.validate();
  if (i_lr.size() == 0) throw EmptyInput("gesr_reconstruct: empty input");
  SrState s;
  s.i_lr = i_lr;
  const Field2D proxy = upsample(i_lr, cfg.scale);
  s.i_hat = proxy;
  s.i_prev = proxy;
  s.x_sparse = proxy;
  const int h = static_cast<int>(proxy.rows());
  const int w = static_cast<int>(proxy.cols());
  const double stop = cfg.stop_eps * h * w;
  const Field2D mask = detail::highpass_mask(h, w);
  const Gradient2D gw = grad_forward(proxy);
  double gain = cfg.eta;
  while (s.iter < cfg.t_max) {
    s.i_prev = s.i_hat;
    const Gradient2D gx = grad_forward(s.x_sparse);
    const Gradient2D resid{gx.gx - gw.gx, gx.gy - gw.gy};
    const Field2D grad_x = cfg.m * detail::sgn_field(s.x_sparse) +
                           2.0 * cfg.q * grad_adjoint(resid) +
                           2.0 * cfg.lam1_sr * (s.x_sparse - proxy);
    s.x_sparse -= cfg.step * grad_x;
    const Field2D grad_i =
        2.0 * cfg.lam2_sr * (s.i_hat - proxy) +
        2.0 * cfg.eta * blur(blur(s.i_hat, cfg.blur_sigma) - proxy, cfg.blur_sigma);
    s.i_hat -= cfg.step * grad_i;
    Spectrum2D spec = dft2(s.i_hat);
    spec *= (1.0 + gain * mask).cast<std::complex<double>>();
    s.i_hat = idft2(spec);
    gain *= 0.9;
    s.iter += 1;
    const double res = (s.i_hat - s.i_prev).square().sum();
    s.residuals.push_back(res);
    if (res < stop) break;
  }
  return s;
}

inline Field2D gesr_reconstruct(const Field2D& i_lr, const GesrConfig& cfg) {
  return gesr_reconstruct_full(i_lr, cfg).i_hat.min(1.0).max(0.0);
}

}  // namespace tircf
