#pragma once

#include <cmath>
#include <vector>

#include <Eigen/SVD>

#include <tircf/core.hpp>
#include <tircf/ops.hpp>

namespace tircf {

// Filter refinement by alternating minimization over four coupled tensors:
// a low-rank component F, an elementwise-sparse component Z, a structured
// sparse component W, and a fidelity component R, tied together by scaled
// Lagrange multipliers and a geometrically growing penalty.
struct EpsrConfig {
  double lambda1 = 0.1;
  double lambda2 = 0.1;
  double lambda3 = 0.1;
  double mu0 = 1.0;
  double rho = 1.1;
  int max_iters = 100;
  double tol = 1e-3;
  // The averaged proximal argument (Z + R + (Y1+Y3)/mu)/2 is the exact
  // minimizer of the F subproblem; true drops the averaging.
  bool verbatim_eq19 = false;

  void validate() const {
    if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0)
      throw InvalidConfig("EpsrConfig: lambda weights must be >= 0");
    if (!(mu0 > 0.0)) throw InvalidConfig("EpsrConfig: mu0 must be > 0");
    if (!(rho > 1.0)) throw InvalidConfig("EpsrConfig: rho must be > 1");
    if (max_iters < 1) throw InvalidConfig("EpsrConfig: max_iters must be >= 1");
    if (!(tol > 0.0)) throw InvalidConfig("EpsrConfig: tol must be > 0");
  }
};

struct EpsrState {
  Tensor3 F, Z, R, W;
  Tensor3 Y1, Y2, Y3;
  double mu = 1.0;
  int iter = 0;
  Tensor3 F_prev;
};

struct EpsrSweepRecord {
  int iter = 0;
  double residual_zf = 0.0;
  double residual_wr = 0.0;
  double residual_rf = 0.0;
  double lagrangian = 0.0;
};

struct EpsrResult {
  Tensor3 F, Z, R, W;
  bool converged = true;
  int sweeps = 0;
};

namespace detail {

inline void require_epsr_shapes(const EpsrState& s) {
  require_same_shape(s.F, s.Z, "EpsrState F/Z");
  require_same_shape(s.F, s.R, "EpsrState F/R");
  require_same_shape(s.F, s.W, "EpsrState F/W");
  require_same_shape(s.F, s.Y1, "EpsrState F/Y1");
  require_same_shape(s.F, s.Y2, "EpsrState F/Y2");
  require_same_shape(s.F, s.Y3, "EpsrState F/Y3");
}

inline double nuclear_norm(const Field2D& a) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.matrix());
  return svd.singularValues().sum();
}

inline double frobenius(const Tensor3& a) { return std::sqrt(squared_norm(a)); }

}  // namespace detail

inline EpsrState epsr_init(const Tensor3& F_prev, const EpsrConfig& cfg) {
  cfg.validate();
  EpsrState s;
  s.F = F_prev;
  s.Z = F_prev;
  s.R = F_prev;
  s.W = F_prev;
  s.Y1 = Tensor3::zeros(F_prev.depth(), F_prev.rows(), F_prev.cols());
  s.Y2 = s.Y1;
  s.Y3 = s.Y1;
  s.mu = cfg.mu0;
  s.iter = 0;
  s.F_prev = F_prev;
  return s;
}

inline Tensor3 update_F(const EpsrState& s, const EpsrConfig& cfg) {
  detail::require_epsr_shapes(s);
  Tensor3 arg = s.Z + s.R + (s.Y1 + s.Y3) / s.mu;
  if (!cfg.verbatim_eq19) arg = 0.5 * arg;
  return tsvt(arg, 1.0 / s.mu);
}

inline Tensor3 update_R(const EpsrState& s, const EpsrConfig& cfg) {
  detail::require_epsr_shapes(s);
  const double scale = s.mu / (cfg.lambda3 + s.mu);
  return scale * (s.F + s.W + s.Y2 / s.mu);
}

inline Tensor3 update_Z(const EpsrState& s, const EpsrConfig& cfg) {
  detail::require_epsr_shapes(s);
  return hard_threshold(s.F + s.Y1 / s.mu, cfg.lambda1 / s.mu);
}

inline Tensor3 update_W(const EpsrState& s, const EpsrConfig& cfg) {
  detail::require_epsr_shapes(s);
  return soft_threshold(s.R + s.Y2 / s.mu, cfg.lambda2 / s.mu);
}

inline EpsrState update_multipliers(const EpsrState& s, const EpsrConfig& cfg) {
  detail::require_epsr_shapes(s);
  EpsrState out = s;
  out.Y1 = s.Y1 + s.mu * (s.Z - s.F);
  out.Y2 = s.Y2 + s.mu * (s.W - s.R);
  out.Y3 = s.Y3 + s.mu * (s.R - s.F);
  out.iter = s.iter + 1;
  // Recomputed from the base each sweep so mu carries no accumulated
  // rounding: mu == mu0 * rho^iter bitwise at every iterate.
  out.mu = cfg.mu0 * std::pow(cfg.rho, out.iter);
  return out;
}

inline double lagrangian_value(const EpsrState& s, const EpsrConfig& cfg) {
  detail::require_epsr_shapes(s);
  double tnl = 0.0;
  for (int d = 0; d < s.F.depth(); ++d) tnl += detail::nuclear_norm(s.F[d]);
  return tnl + cfg.lambda1 * l1_norm(s.Z) + cfg.lambda2 * l1_norm(s.W) +
         cfg.lambda3 * squared_norm(s.R) + dot(s.Y1, s.Z - s.F) +
         dot(s.Y2, s.W - s.R) + dot(s.Y3, s.R - s.F) +
         s.mu * squared_norm(s.Z - s.F) + squared_norm(s.W - s.R) +
         squared_norm(s.R - s.F);
}

// One full sweep is F, R, Z, W, multipliers; stops when the largest of the
// three coupling residuals (Frobenius) drops below tol or max_iters is hit.
inline EpsrResult epsr_run(const Tensor3& F_prev, const EpsrConfig& cfg,
                           std::vector<EpsrSweepRecord>* trace = nullptr) {
  EpsrState s = epsr_init(F_prev, cfg);
  EpsrResult out;
  while (true) {
    s.F = update_F(s, cfg);
    s.R = update_R(s, cfg);
    s.Z = update_Z(s, cfg);
    s.W = update_W(s, cfg);
    s = update_multipliers(s, cfg);
    const double res_zf = detail::frobenius(s.Z - s.F);
    const double res_wr = detail::frobenius(s.W - s.R);
    const double res_rf = detail::frobenius(s.R - s.F);
    const double res = std::max(res_zf, std::max(res_wr, res_rf));
    if (trace)
      trace->push_back(
          {s.iter, res_zf, res_wr, res_rf, lagrangian_value(s, cfg)});
    if (res < cfg.tol) {
      out.converged = true;
      break;
    }
    if (s.iter >= cfg.max_iters) {
      out.converged = false;
      break;
    }
  }
  out.F = s.F;
  out.Z = s.Z;
  out.R = s.R;
  out.W = s.W;
  out.sweeps = s.iter;
  return out;
}

}  // namespace tircf
