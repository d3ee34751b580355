#pragma once

#include <tircf/core.hpp>

#include <unsupported/Eigen/FFT>

#include <vector>

namespace tircf {
namespace detail {

inline Eigen::FFT<double>& fft_engine() {
  thread_local Eigen::FFT<double> engine;  // caches plans per length
  return engine;
}

inline void fwd1(std::vector<std::complex<double>>& out,
                 const std::vector<std::complex<double>>& in) {
  if (in.size() == 1) { out = in; return; }
  fft_engine().fwd(out, in);
}

inline void inv1(std::vector<std::complex<double>>& out,
                 const std::vector<std::complex<double>>& in) {
  if (in.size() == 1) { out = in; return; }
  fft_engine().inv(out, in);
}

}  // namespace detail

// X[u,v] = sum_{i,j} f[i,j] * exp(-2*pi*I*(u*i/H + v*j/W)); no scaling.
inline Spectrum2D dft2(const Field2D& f) {
  const int h = static_cast<int>(f.rows());
  const int w = static_cast<int>(f.cols());
  if (h < 1 || w < 1) throw DimensionTooSmall("dft2: field must be at least 1x1");
  Spectrum2D out(h, w);
  std::vector<std::complex<double>> buf_in(static_cast<size_t>(w)), buf_out(static_cast<size_t>(w));
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) buf_in[static_cast<size_t>(j)] = f(i, j);
    detail::fwd1(buf_out, buf_in);
    for (int j = 0; j < w; ++j) out(i, j) = buf_out[static_cast<size_t>(j)];
  }
  std::vector<std::complex<double>> col_in(static_cast<size_t>(h)), col_out(static_cast<size_t>(h));
  for (int j = 0; j < w; ++j) {
    for (int i = 0; i < h; ++i) col_in[static_cast<size_t>(i)] = out(i, j);
    detail::fwd1(col_out, col_in);
    for (int i = 0; i < h; ++i) out(i, j) = col_out[static_cast<size_t>(i)];
  }
  return out;
}

// Full complex inverse, scaled by 1/(H*W).
inline Spectrum2D idft2_complex(const Spectrum2D& s) {
  const int h = static_cast<int>(s.rows());
  const int w = static_cast<int>(s.cols());
  if (h < 1 || w < 1) throw DimensionTooSmall("idft2: spectrum must be at least 1x1");
  Spectrum2D out(h, w);
  std::vector<std::complex<double>> buf_in(static_cast<size_t>(w)), buf_out(static_cast<size_t>(w));
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) buf_in[static_cast<size_t>(j)] = s(i, j);
    detail::inv1(buf_out, buf_in);
    for (int j = 0; j < w; ++j) out(i, j) = buf_out[static_cast<size_t>(j)];
  }
  std::vector<std::complex<double>> col_in(static_cast<size_t>(h)), col_out(static_cast<size_t>(h));
  for (int j = 0; j < w; ++j) {
    for (int i = 0; i < h; ++i) col_in[static_cast<size_t>(i)] = out(i, j);
    detail::inv1(col_out, col_in);
    for (int i = 0; i < h; ++i) out(i, j) = col_out[static_cast<size_t>(i)];
  }
  return out;
}

// Real part of the inverse; intended for spectra of real-valued fields.
inline Field2D idft2(const Spectrum2D& s) { return idft2_complex(s).real(); }

}  // namespace tircf
