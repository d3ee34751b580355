#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tircf {

using Field2D = Eigen::ArrayXXd;     // (row, col) indexing, real-valued plane
using Spectrum2D = Eigen::ArrayXXcd; // same layout, frequency domain

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeMismatch : Error { using Error::Error; };
struct DimensionTooSmall : Error { using Error::Error; };
struct NegativeThreshold : Error { using Error::Error; };
struct NonPositiveSigma : Error { using Error::Error; };
struct UnsupportedOrder : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct ZeroBeta1 : Error { using Error::Error; };
struct ZeroBeta2 : Error { using Error::Error; };
struct NegativeRatio : Error { using Error::Error; };
struct DegenerateBox : Error { using Error::Error; };
struct IndivisibleDimensions : Error { using Error::Error; };
struct InvalidScale : Error { using Error::Error; };
struct EmptyChannelList : Error { using Error::Error; };
struct EmptyInput : Error { using Error::Error; };
struct EmptyFrame : Error { using Error::Error; };
struct MissingGroundTruth : Error { using Error::Error; };
struct FrameCountMismatch : Error { using Error::Error; };
struct SequenceReadError : Error { using Error::Error; };
struct ReadError : Error { using Error::Error; };
struct WriteError : Error { using Error::Error; };

struct UnparsableLine : Error {
  int line;
  UnparsableLine(const std::string& msg, int line_no) : Error(msg), line(line_no) {}
};

struct UnknownKey : Error {
  std::string key;
  std::string suggestion;
  UnknownKey(const std::string& msg, std::string k, std::string s)
      : Error(msg), key(std::move(k)), suggestion(std::move(s)) {}
};

struct TypeMismatch : Error { using Error::Error; };

inline double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Depth-indexed stack of equally-shaped planes; depth >= 1 once populated.
struct Tensor3 {
  std::vector<Field2D> slices;

  Tensor3() = default;
  explicit Tensor3(std::vector<Field2D> s) : slices(std::move(s)) { check(); }

  static Tensor3 zeros(int depth, int rows, int cols) {
    if (depth < 1 || rows < 1 || cols < 1)
      throw DimensionTooSmall("Tensor3::zeros: depth, rows, cols must be >= 1");
    Tensor3 t;
    t.slices.assign(static_cast<size_t>(depth), Field2D::Zero(rows, cols));
    return t;
  }

  int depth() const { return static_cast<int>(slices.size()); }
  int rows() const { return slices.empty() ? 0 : static_cast<int>(slices[0].rows()); }
  int cols() const { return slices.empty() ? 0 : static_cast<int>(slices[0].cols()); }

  Field2D& operator[](int d) { return slices[static_cast<size_t>(d)]; }
  const Field2D& operator[](int d) const { return slices[static_cast<size_t>(d)]; }

  void check() const {
    if (slices.empty())
      throw DimensionTooSmall("Tensor3: depth must be >= 1");
    for (const auto& s : slices) {
      if (s.rows() < 1 || s.cols() < 1)
        throw DimensionTooSmall("Tensor3: slices must be non-empty");
      if (s.rows() != slices[0].rows() || s.cols() != slices[0].cols())
        throw ShapeMismatch("Tensor3: slices must share one shape");
    }
  }
};

inline void require_same_shape(const Tensor3& a, const Tensor3& b, const char* who) {
  if (a.depth() != b.depth() || a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeMismatch(std::string(who) + ": tensor shapes differ");
}

inline Tensor3 operator+(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "Tensor3 operator+");
  Tensor3 out = a;
  for (int d = 0; d < a.depth(); ++d) out[d] += b[d];
  return out;
}

inline Tensor3 operator-(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "Tensor3 operator-");
  Tensor3 out = a;
  for (int d = 0; d < a.depth(); ++d) out[d] -= b[d];
  return out;
}

inline Tensor3 operator*(double s, const Tensor3& a) {
  Tensor3 out = a;
  for (auto& p : out.slices) p *= s;
  return out;
}

inline Tensor3 operator/(const Tensor3& a, double s) {
  Tensor3 out = a;
  for (auto& p : out.slices) p /= s;
  return out;
}

inline double dot(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "Tensor3 dot");
  double acc = 0.0;
  for (int d = 0; d < a.depth(); ++d) acc += (a[d] * b[d]).sum();
  return acc;
}

inline double squared_norm(const Tensor3& a) {
  double acc = 0.0;
  for (const auto& s : a.slices) acc += s.square().sum();
  return acc;
}

inline double l1_norm(const Tensor3& a) {
  double acc = 0.0;
  for (const auto& s : a.slices) acc += s.abs().sum();
  return acc;
}

inline double max_abs(const Tensor3& a) {
  double acc = 0.0;
  for (const auto& s : a.slices) acc = std::max(acc, s.abs().maxCoeff());
  return acc;
}

// Axis-aligned box, 0-based continuous pixel coordinates, (x, y) = top-left.
struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double cx() const { return x + w / 2.0; }
  double cy() const { return y + h / 2.0; }
};

}  // namespace tircf
