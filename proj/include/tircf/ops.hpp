#pragma once

#include <tircf/core.hpp>

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace tircf {

// Forward differences with a zero final row/column:
//   gx[i,j] = f[i+1,j] - f[i,j] (zero at i = H-1)
//   gy[i,j] = f[i,j+1] - f[i,j] (zero at j = W-1)
struct Gradient2D {
  Field2D gx;
  Field2D gy;
};

inline Gradient2D grad_forward(const Field2D& f) {
  const int h = static_cast<int>(f.rows());
  const int w = static_cast<int>(f.cols());
  if (h < 2 || w < 2) throw DimensionTooSmall("grad_forward: field must be at least 2x2");
  Gradient2D g{Field2D::Zero(h, w), Field2D::Zero(h, w)};
  g.gx.topRows(h - 1) = f.bottomRows(h - 1) - f.topRows(h - 1);
  g.gy.leftCols(w - 1) = f.rightCols(w - 1) - f.leftCols(w - 1);
  return g;
}

// 5-point stencil on the interior, zero on the boundary ring.
inline Field2D laplacian(const Field2D& f) {
  const int h = static_cast<int>(f.rows());
  const int w = static_cast<int>(f.cols());
  if (h < 3 || w < 3) throw DimensionTooSmall("laplacian: field must be at least 3x3");
  Field2D out = Field2D::Zero(h, w);
  for (int i = 1; i < h - 1; ++i)
    for (int j = 1; j < w - 1; ++j)
      out(i, j) = f(i + 1, j) + f(i - 1, j) + f(i, j + 1) + f(i, j - 1) - 4.0 * f(i, j);
  return out;
}

namespace detail {

inline Field2D forward_diff_rows(const Field2D& f) {
  const int h = static_cast<int>(f.rows());
  Field2D out = Field2D::Zero(h, f.cols());
  if (h > 1) out.topRows(h - 1) = f.bottomRows(h - 1) - f.topRows(h - 1);
  return out;
}

inline Field2D forward_diff_cols(const Field2D& f) {
  const int w = static_cast<int>(f.cols());
  Field2D out = Field2D::Zero(f.rows(), w);
  if (w > 1) out.leftCols(w - 1) = f.rightCols(w - 1) - f.leftCols(w - 1);
  return out;
}

}  // namespace detail

// Order-n forward difference composed per axis, then summed over both axes.
inline Field2D grad_n(const Field2D& f, int order) {
  if (order != 3 && order != 4) throw UnsupportedOrder("grad_n: order must be 3 or 4");
  const int h = static_cast<int>(f.rows());
  const int w = static_cast<int>(f.cols());
  if (h < order + 1 || w < order + 1)
    throw DimensionTooSmall("grad_n: field must be at least (order+1) per side");
  Field2D di = f;
  Field2D dj = f;
  for (int k = 0; k < order; ++k) {
    di = detail::forward_diff_rows(di);
    dj = detail::forward_diff_cols(dj);
  }
  return di + dj;
}

inline double soft_threshold(double v, double lam) {
  if (lam < 0.0) throw NegativeThreshold("soft_threshold: threshold must be >= 0");
  return sgn(v) * std::max(std::abs(v) - lam, 0.0);
}

inline Field2D soft_threshold(const Field2D& v, double lam) {
  if (lam < 0.0) throw NegativeThreshold("soft_threshold: threshold must be >= 0");
  Field2D out(v.rows(), v.cols());
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) out(i, j) = soft_threshold(v(i, j), lam);
  return out;
}

inline Tensor3 soft_threshold(const Tensor3& v, double lam) {
  Tensor3 out = v;
  for (auto& s : out.slices) s = soft_threshold(s, lam);
  return out;
}

inline double hard_threshold(double v, double lam) {
  if (lam < 0.0) throw NegativeThreshold("hard_threshold: threshold must be >= 0");
  return std::abs(v) > lam ? v : 0.0;
}

inline Field2D hard_threshold(const Field2D& v, double lam) {
  if (lam < 0.0) throw NegativeThreshold("hard_threshold: threshold must be >= 0");
  Field2D out(v.rows(), v.cols());
  for (int i = 0; i < v.rows(); ++i)
    for (int j = 0; j < v.cols(); ++j) out(i, j) = hard_threshold(v(i, j), lam);
  return out;
}

inline Tensor3 hard_threshold(const Tensor3& v, double lam) {
  Tensor3 out = v;
  for (auto& s : out.slices) s = hard_threshold(s, lam);
  return out;
}

// Singular-value soft shrinkage applied to every frontal slice.
// tau == 0 returns the input verbatim.
inline Tensor3 tsvt(const Tensor3& a, double tau) {
  if (tau < 0.0) throw NegativeThreshold("tsvt: threshold must be >= 0");
  a.check();
  if (tau == 0.0) return a;
  Tensor3 out = a;
  for (auto& s : out.slices) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(s.matrix(), Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::VectorXd sv = svd.singularValues();
    for (int k = 0; k < sv.size(); ++k) sv(k) = std::max(sv(k) - tau, 0.0);
    s = (svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose()).array();
  }
  return out;
}

// Gaussian response peaked at bin (0,0), wrapped circularly:
// label[i,j] = exp(-(di^2 + dj^2) / (2 sigma^2)), di/dj = signed wrap offsets.
inline Field2D gaussian_label(int h, int w, double sigma) {
  if (h < 1 || w < 1) throw DimensionTooSmall("gaussian_label: dims must be >= 1");
  if (!(sigma > 0.0)) throw NonPositiveSigma("gaussian_label: sigma must be > 0");
  Field2D out(h, w);
  for (int i = 0; i < h; ++i) {
    const double di = (i <= h - i) ? i : i - h;
    for (int j = 0; j < w; ++j) {
      const double dj = (j <= w - j) ? j : j - w;
      out(i, j) = std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
    }
  }
  return out;
}

// Separable raised-cosine taper: zero edges, ~1 in the middle.
inline Field2D cosine_window(int h, int w) {
  if (h < 2 || w < 2) throw DimensionTooSmall("cosine_window: dims must be >= 2");
  Eigen::ArrayXd wh(h), ww(w);
  constexpr double kPi = 3.14159265358979323846;
  for (int i = 0; i < h; ++i) wh(i) = 0.5 * (1.0 - std::cos(2.0 * kPi * i / (h - 1)));
  for (int j = 0; j < w; ++j) ww(j) = 0.5 * (1.0 - std::cos(2.0 * kPi * j / (w - 1)));
  Field2D out(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) out(i, j) = wh(i) * ww(j);
  return out;
}

}  // namespace tircf
