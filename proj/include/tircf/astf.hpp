#pragma once

#include <tircf/features.hpp>
#include <tircf/fft.hpp>
#include <tircf/ops.hpp>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

namespace tircf {

struct AstfConfig {
  double alpha1 = 0.01;      // l1 weight on the filter
  double alpha2 = 0.001;     // spatial-gradient weight (printed objective)
  double beta1 = 0.1;        // proximity to the previous filter
  double beta2 = 0.1;        // previous-frame fidelity weight
  double gamma_ridge = 1e-4; // plain ridge weight
  double delta1 = 0.001;     // gradient smoothness inside the f-subproblem
  double lambda1_g = 0.01;   // l1 weight on the auxiliary filter g
  double lambda2_w = 1.0;    // proximity weight in the w-subproblem
  double eta_w = 0.01;       // l1 weight in the w-subproblem
  double eps_sparse = 1.0;   // denominator guard of the ratio sparsity
  int max_admm_iters = 5;
  double tol = 1e-3;

  void validate() const {
    const double weights[] = {alpha1, alpha2,   beta1, beta2, gamma_ridge,
                              delta1, lambda1_g, lambda2_w, eta_w};
    for (double v : weights)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidConfig("AstfConfig: weights must be finite and >= 0");
    if (!(eps_sparse > 0.0)) throw InvalidConfig("AstfConfig: eps_sparse must be > 0");
    if (max_admm_iters < 1) throw InvalidConfig("AstfConfig: max_admm_iters must be >= 1");
    if (!(tol > 0.0)) throw InvalidConfig("AstfConfig: tol must be > 0");
  }
};

struct SpatialRegParams {
  double a2 = 0.001;
  double lam1_s = 1.0;
  double gam1 = 0.0;
  double mu1 = 0.0;
  double lam2_s = 1.0;
  double gam2 = 0.0;
  double mu2 = 0.0;
  double p_norm = 2.0;

  void validate() const {
    const double weights[] = {a2, lam1_s, gam1, mu1, lam2_s, gam2, mu2};
    for (double v : weights)
      if (!(v >= 0.0) || !std::isfinite(v))
        throw InvalidConfig("SpatialRegParams: coefficients must be finite and >= 0");
    if (!(p_norm >= 1.0)) throw InvalidConfig("SpatialRegParams: p_norm must be >= 1");
  }
};

struct TemporalRegParams {
  double beta1 = 0.1;
  double beta2 = 0.1;
  double delta_t = 1.0;
  double eps_off = 0.01;
  double gamma_off = 0.01;
  double k_weight = 1.0;  // stored/validated; the printed update does not use it

  void validate() const {
    if (!(beta1 >= 0.0) || !(beta2 >= 0.0))
      throw InvalidConfig("TemporalRegParams: beta weights must be >= 0");
    if (!(delta_t > 0.0)) throw InvalidConfig("TemporalRegParams: delta_t must be > 0");
    if (!(eps_off >= 0.0) || !(gamma_off >= 0.0))
      throw InvalidConfig("TemporalRegParams: offsets must be >= 0");
    if (!(k_weight > 0.0)) throw InvalidConfig("TemporalRegParams: k_weight must be > 0");
  }
};

// Multi-channel filter with a cached spectrum and the previous-frame filter.
struct FilterBank {
  Tensor3 weights;
  std::vector<Spectrum2D> spectrum;  // empty means not cached
  std::optional<Tensor3> prev;
  bool converged = true;

  void refresh_spectrum() {
    spectrum.clear();
    spectrum.reserve(static_cast<size_t>(weights.depth()));
    for (const auto& s : weights.slices) spectrum.push_back(dft2(s));
  }
};

struct AstfState {
  FilterBank f;
  FilterBank g;
  Tensor3 w_ref;
  FeatureTensor sample;
  FeatureTensor prev_sample;
  Field2D label;
  Field2D prev_label;
  int iter = 0;
  bool converged = true;
  std::vector<double> objective_trace;  // f-subproblem objective per sweep
  std::vector<double> spatial_trace;    // spatial regularizer per sweep
};

namespace detail {

inline std::vector<Spectrum2D> spectra_of(const Tensor3& t) {
  std::vector<Spectrum2D> out;
  out.reserve(static_cast<size_t>(t.depth()));
  for (const auto& s : t.slices) out.push_back(dft2(s));
  return out;
}

// idft2(sum_d xhat_d * fhat_d): the channel-summed circular response.
inline Field2D conv_response(const std::vector<Spectrum2D>& xhat,
                             const std::vector<Spectrum2D>& fhat) {
  if (xhat.empty() || xhat.size() != fhat.size())
    throw ShapeMismatch("conv_response: channel counts differ");
  Spectrum2D acc = xhat[0] * fhat[0];
  for (size_t d = 1; d < xhat.size(); ++d) acc += xhat[d] * fhat[d];
  return idft2(acc);
}

// Sum of squared wrap-around forward differences over all slices.
inline double wrap_grad_energy(const Tensor3& f) {
  double acc = 0.0;
  const int h = f.rows();
  const int w = f.cols();
  for (const auto& s : f.slices)
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < w; ++j) {
        const double di = s((i + 1) % h, j) - s(i, j);
        const double dj = s(i, (j + 1) % w) - s(i, j);
        acc += di * di + dj * dj;
      }
  return acc;
}

// J(f) = 0.5*||conv(x,f)-y||^2 + alpha_ratio*l1(f)/(l2(f)+eps) + lambda_l1*l1(f)
//        + prox_w*||f-p||^2 + grad_w*||wrap_grad f||^2 + 0.5*ridge_w*||f||^2
struct SubproblemSpec {
  double prox_w = 0.0;
  double grad_w = 0.0;
  double ridge_w = 0.0;
  double alpha_ratio = 0.0;
  double eps_sparse = 1.0;
  double lambda_l1 = 0.0;
};

inline double subproblem_objective(const Tensor3& f, const std::vector<Spectrum2D>& xhat,
                                   const Field2D& y, const Tensor3* p,
                                   const SubproblemSpec& sp) {
  const Field2D resp = conv_response(xhat, spectra_of(f));
  double obj = 0.5 * (resp - y).square().sum();
  if (sp.alpha_ratio > 0.0)
    obj += sp.alpha_ratio * l1_norm(f) / (std::sqrt(squared_norm(f)) + sp.eps_sparse);
  if (sp.lambda_l1 > 0.0) obj += sp.lambda_l1 * l1_norm(f);
  if (sp.prox_w > 0.0 && p != nullptr) obj += sp.prox_w * squared_norm(f - *p);
  if (sp.grad_w > 0.0) obj += sp.grad_w * wrap_grad_energy(f);
  if (sp.ridge_w > 0.0) obj += 0.5 * sp.ridge_w * squared_norm(f);
  return obj;
}

// One exact solve of the per-bin normal equations
//   (conj(a) a^T + diag(W)) f = conj(a) yhat + 2*prox_w*phat
// with W_d = 2*prox_w + 2*grad_w*m_uv + ridge_w + 2*rbar_d, via a rank-1 update.
inline std::vector<Spectrum2D> per_bin_solve(const std::vector<Spectrum2D>& xhat,
                                             const Spectrum2D& yhat,
                                             const std::vector<Spectrum2D>* phat,
                                             const Eigen::ArrayXd& rbar,
                                             const SubproblemSpec& sp) {
  const int d_count = static_cast<int>(xhat.size());
  const int h = static_cast<int>(yhat.rows());
  const int w = static_cast<int>(yhat.cols());
  constexpr double kPi = 3.14159265358979323846;
  std::vector<Spectrum2D> fhat(static_cast<size_t>(d_count), Spectrum2D::Zero(h, w));
  std::vector<std::complex<double>> a(static_cast<size_t>(d_count)), c(static_cast<size_t>(d_count));
  for (int u = 0; u < h; ++u) {
    const double su = 2.0 * std::sin(kPi * u / h);
    for (int v = 0; v < w; ++v) {
      const double sv = 2.0 * std::sin(kPi * v / w);
      const double m = su * su + sv * sv;
      const std::complex<double> yb = yhat(u, v);
      double wmax = 0.0;
      double anorm2 = 0.0;
      for (int d = 0; d < d_count; ++d) {
        a[static_cast<size_t>(d)] = xhat[static_cast<size_t>(d)](u, v);
        anorm2 += std::norm(a[static_cast<size_t>(d)]);
        c[static_cast<size_t>(d)] = std::conj(a[static_cast<size_t>(d)]) * yb;
        if (sp.prox_w > 0.0 && phat != nullptr)
          c[static_cast<size_t>(d)] += 2.0 * sp.prox_w * (*phat)[static_cast<size_t>(d)](u, v);
      }
      bool all_tiny = true;
      for (int d = 0; d < d_count; ++d) {
        const double wd = 2.0 * sp.prox_w + 2.0 * sp.grad_w * m + sp.ridge_w + 2.0 * rbar(d);
        if (wd > 1e-300) all_tiny = false;
      }
      if (all_tiny) {
        // pure least squares on a rank-1 operator: minimum-norm solution
        const double denom = std::max(anorm2, 1e-300);
        for (int d = 0; d < d_count; ++d)
          fhat[static_cast<size_t>(d)](u, v) = std::conj(a[static_cast<size_t>(d)]) * yb / denom;
        continue;
      }
      std::complex<double> a_dot_u(0.0, 0.0);
      double s_real = 0.0;
      for (int d = 0; d < d_count; ++d) {
        const double wd = 2.0 * sp.prox_w + 2.0 * sp.grad_w * m + sp.ridge_w + 2.0 * rbar(d);
        const std::complex<double> ud = c[static_cast<size_t>(d)] / wd;
        a_dot_u += a[static_cast<size_t>(d)] * ud;
        s_real += std::norm(a[static_cast<size_t>(d)]) / wd;
      }
      const std::complex<double> corr = a_dot_u / (1.0 + s_real);
      for (int d = 0; d < d_count; ++d) {
        const double wd = 2.0 * sp.prox_w + 2.0 * sp.grad_w * m + sp.ridge_w + 2.0 * rbar(d);
        fhat[static_cast<size_t>(d)](u, v) =
            (c[static_cast<size_t>(d)] - std::conj(a[static_cast<size_t>(d)]) * corr) / wd;
      }
    }
  }
  return fhat;
}

// Channel-uniform diagonal reweighting for the l1-type terms.
inline Eigen::ArrayXd l1_reweight(const Tensor3& f, double coeff) {
  Eigen::ArrayXd rbar = Eigen::ArrayXd::Zero(f.depth());
  if (coeff <= 0.0) return rbar;
  for (int d = 0; d < f.depth(); ++d) {
    double acc = 0.0;
    for (int i = 0; i < f.rows(); ++i)
      for (int j = 0; j < f.cols(); ++j)
        acc += 1.0 / (2.0 * std::max(std::abs(f[d](i, j)), 1e-8));
    rbar(d) = coeff * acc / (static_cast<double>(f.rows()) * f.cols());
  }
  return rbar;
}

// Safeguarded reweighted ridge loop shared by the f and g subproblems.
inline FilterBank solve_reweighted(const Tensor3& start, const std::vector<Spectrum2D>& xhat,
                                   const Field2D& y, const Tensor3* prox_target,
                                   const SubproblemSpec& sp, int max_iters, double tol) {
  std::vector<Spectrum2D> phat;
  const std::vector<Spectrum2D>* phat_ptr = nullptr;
  if (prox_target != nullptr && sp.prox_w > 0.0) {
    phat = spectra_of(*prox_target);
    phat_ptr = &phat;
  }
  const Spectrum2D yhat = dft2(y);
  Tensor3 cur = start;
  double cur_obj = subproblem_objective(cur, xhat, y, prox_target, sp);
  bool converged = false;
  for (int it = 0; it < max_iters; ++it) {
    double sparse_coeff = 0.0;
    if (sp.alpha_ratio > 0.0)
      sparse_coeff += sp.alpha_ratio / (std::sqrt(squared_norm(cur)) + sp.eps_sparse);
    if (sp.lambda_l1 > 0.0) sparse_coeff += sp.lambda_l1;
    const Eigen::ArrayXd rbar = l1_reweight(cur, sparse_coeff);
    const std::vector<Spectrum2D> fhat = per_bin_solve(xhat, yhat, phat_ptr, rbar, sp);
    Tensor3 cand = cur;
    for (int d = 0; d < cand.depth(); ++d) cand[d] = idft2(fhat[static_cast<size_t>(d)]);
    double cand_obj = subproblem_objective(cand, xhat, y, prox_target, sp);
    bool accepted = cand_obj <= cur_obj + 1e-12;
    for (int bt = 0; bt < 5 && !accepted; ++bt) {
      cand = 0.5 * (cand + cur);
      cand_obj = subproblem_objective(cand, xhat, y, prox_target, sp);
      accepted = cand_obj <= cur_obj + 1e-12;
    }
    if (!accepted) {
      converged = true;  // stalled at a safeguarded point; keep the best iterate
      break;
    }
    const double rel = std::sqrt(squared_norm(cand - cur)) /
                       std::max(std::sqrt(squared_norm(cur)), 1e-12);
    cur = std::move(cand);
    cur_obj = cand_obj;
    if (rel < tol) {
      converged = true;
      break;
    }
  }
  FilterBank out;
  out.weights = std::move(cur);
  out.refresh_spectrum();
  out.converged = converged;
  return out;
}

inline void require_state_shapes(const AstfState& state, const char* who) {
  const Tensor3& x = state.sample.data;
  const Tensor3& f = state.f.weights;
  if (x.depth() < 1 || f.depth() < 1) throw ShapeMismatch(std::string(who) + ": empty state");
  if (x.depth() != f.depth() || x.rows() != f.rows() || x.cols() != f.cols())
    throw ShapeMismatch(std::string(who) + ": sample and filter shapes differ");
  if (state.label.rows() != x.rows() || state.label.cols() != x.cols())
    throw ShapeMismatch(std::string(who) + ": label shape differs from sample");
}

}  // namespace detail

// The f-subproblem objective actually descended by solve_f; exposed so sweeps
// can be traced externally.
inline double solve_f_objective(const AstfState& state, const AstfConfig& cfg) {
  detail::require_state_shapes(state, "solve_f_objective");
  detail::SubproblemSpec sp;
  sp.prox_w = cfg.beta1;
  sp.grad_w = cfg.delta1;
  sp.ridge_w = cfg.gamma_ridge;
  sp.alpha_ratio = cfg.alpha1;
  sp.eps_sparse = cfg.eps_sparse;
  const Tensor3* prox = state.f.prev ? &*state.f.prev : nullptr;
  if (prox == nullptr) sp.prox_w = 0.0;
  return detail::subproblem_objective(state.f.weights, detail::spectra_of(state.sample.data),
                                      state.label, prox, sp);
}

// Sum of the six printed objective terms. sp/tp are accepted for signature
// parity but the printed objective needs only cfg.
inline double eval_objective(const AstfState& state, const AstfConfig& cfg,
                             const SpatialRegParams& sp = {}, const TemporalRegParams& tp = {}) {
  (void)sp;
  (void)tp;
  cfg.validate();
  detail::require_state_shapes(state, "eval_objective");
  const Tensor3& f = state.f.weights;
  const Field2D resp = detail::conv_response(detail::spectra_of(state.sample.data),
                                             detail::spectra_of(f));
  double obj = 0.5 * (resp - state.label).square().sum();
  obj += cfg.alpha1 * l1_norm(f);
  if (cfg.alpha2 > 0.0) {
    double grad_energy = 0.0;
    for (const auto& s : f.slices) {
      const Gradient2D g = grad_forward(s);
      grad_energy += g.gx.square().sum() + g.gy.square().sum();
    }
    obj += cfg.alpha2 * grad_energy;
  }
  if (state.f.prev) {
    require_same_shape(f, *state.f.prev, "eval_objective");
    obj += cfg.beta1 * squared_norm(f - *state.f.prev);
    if (cfg.beta2 > 0.0 && state.prev_sample.data.depth() == f.depth() &&
        state.prev_label.rows() == state.label.rows() &&
        state.prev_label.cols() == state.label.cols()) {
      const Field2D prev_resp = detail::conv_response(
          detail::spectra_of(state.prev_sample.data), detail::spectra_of(*state.f.prev));
      obj += cfg.beta2 * (prev_resp - state.prev_label).square().sum();
    }
  }
  obj += cfg.gamma_ridge * squared_norm(f);
  return obj;
}

// Reweighted per-bin ridge solve of the f-subproblem; starts from the current
// filter and never accepts an iterate that raises the subproblem objective.
inline FilterBank solve_f(const AstfState& state, const AstfConfig& cfg) {
  cfg.validate();
  detail::require_state_shapes(state, "solve_f");
  detail::SubproblemSpec sp;
  sp.prox_w = cfg.beta1;
  sp.grad_w = cfg.delta1;
  sp.ridge_w = cfg.gamma_ridge;
  sp.alpha_ratio = cfg.alpha1;
  sp.eps_sparse = cfg.eps_sparse;
  const Tensor3* prox = state.f.prev ? &*state.f.prev : nullptr;
  if (prox == nullptr) sp.prox_w = 0.0;
  FilterBank out = detail::solve_reweighted(state.f.weights, detail::spectra_of(state.sample.data),
                                            state.label, prox, sp, cfg.max_admm_iters, cfg.tol);
  out.prev = state.f.prev;
  return out;
}

// Previous-frame auxiliary solve; the result is averaged into state.f when the
// average does not raise the f-subproblem objective.
inline FilterBank solve_g(AstfState& state, const AstfConfig& cfg) {
  cfg.validate();
  detail::require_state_shapes(state, "solve_g");
  const Tensor3& xprev = state.prev_sample.data;
  if (xprev.depth() != state.f.weights.depth() || xprev.rows() != state.f.weights.rows() ||
      xprev.cols() != state.f.weights.cols())
    throw ShapeMismatch("solve_g: previous sample shape differs from filter");
  if (state.prev_label.rows() != xprev.rows() || state.prev_label.cols() != xprev.cols())
    throw ShapeMismatch("solve_g: previous label shape differs");

  detail::SubproblemSpec gspec;
  gspec.prox_w = cfg.beta2;
  gspec.lambda_l1 = cfg.lambda1_g;
  const Tensor3* prox = state.f.prev ? &*state.f.prev : nullptr;
  if (prox == nullptr) gspec.prox_w = 0.0;
  Tensor3 start = state.g.weights.depth() == state.f.weights.depth() &&
                          state.g.weights.rows() == state.f.weights.rows() &&
                          state.g.weights.cols() == state.f.weights.cols()
                      ? state.g.weights
                      : (prox ? *prox : state.f.weights);
  FilterBank g = detail::solve_reweighted(start, detail::spectra_of(xprev), state.prev_label,
                                          prox, gspec, cfg.max_admm_iters, cfg.tol);
  g.prev = state.f.prev;

  detail::SubproblemSpec fspec;
  fspec.prox_w = prox ? cfg.beta1 : 0.0;
  fspec.grad_w = cfg.delta1;
  fspec.ridge_w = cfg.gamma_ridge;
  fspec.alpha_ratio = cfg.alpha1;
  fspec.eps_sparse = cfg.eps_sparse;
  const std::vector<Spectrum2D> xhat = detail::spectra_of(state.sample.data);
  const double f_obj =
      detail::subproblem_objective(state.f.weights, xhat, state.label, prox, fspec);
  Tensor3 blend = 0.5 * (state.f.weights + g.weights);
  const double blend_obj = detail::subproblem_objective(blend, xhat, state.label, prox, fspec);
  if (blend_obj <= f_obj + 1e-12) {
    state.f.weights = std::move(blend);
    state.f.refresh_spectrum();
  }
  return g;
}

// a2 * sum_k [ sum_c (lap + lam1*grad_c + gam1*grad_c^2 + mu1*d3)^2
//              + lam2*(lap + gam2*lap^2 + mu2*d4)^2 ]
inline double spatial_reg(const FilterBank& f, const SpatialRegParams& sp) {
  sp.validate();
  f.weights.check();
  if (f.weights.rows() < 5 || f.weights.cols() < 5)
    throw DimensionTooSmall("spatial_reg: filter must be at least 5x5");
  double acc = 0.0;
  for (const auto& s : f.weights.slices) {
    const Field2D lap = laplacian(s);
    const Gradient2D g = grad_forward(s);
    const Field2D d3 = grad_n(s, 3);
    const Field2D d4 = grad_n(s, 4);
    const Field2D first_x = lap + sp.lam1_s * g.gx + sp.gam1 * g.gx.square() + sp.mu1 * d3;
    const Field2D first_y = lap + sp.lam1_s * g.gy + sp.gam1 * g.gy.square() + sp.mu1 * d3;
    const Field2D second = lap + sp.gam2 * lap.square() + sp.mu2 * d4;
    acc += first_x.square().sum() + first_y.square().sum() + sp.lam2_s * second.square().sum();
  }
  return sp.a2 * acc;
}

// p-norm over pixels of E[i,j] = sum_k sum_c (f + lam1*grad_c + gam1*grad_c^2 + mu1*d3)^2.
inline double adaptive_smoothness(const FilterBank& f, const SpatialRegParams& sp) {
  sp.validate();
  f.weights.check();
  if (f.weights.rows() < 4 || f.weights.cols() < 4)
    throw DimensionTooSmall("adaptive_smoothness: filter must be at least 4x4");
  const int h = f.weights.rows();
  const int w = f.weights.cols();
  Field2D e = Field2D::Zero(h, w);
  for (const auto& s : f.weights.slices) {
    const Gradient2D g = grad_forward(s);
    const Field2D d3 = grad_n(s, 3);
    const Field2D inner_x = s + sp.lam1_s * g.gx + sp.gam1 * g.gx.square() + sp.mu1 * d3;
    const Field2D inner_y = s + sp.lam1_s * g.gy + sp.gam1 * g.gy.square() + sp.mu1 * d3;
    e += inner_x.square() + inner_y.square();
  }
  double acc = 0.0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) acc += std::pow(e(i, j), sp.p_norm);
  return std::pow(acc, 1.0 / sp.p_norm);
}

// beta1*sum (dt*(ft - fp + eps*sgn(ft)))^2 + beta2*sum (dt^2*(ft - fp + gam*sgn(fp)))^2
inline double temporal_reg(const Tensor3& f_t, const Tensor3& f_prev,
                           const TemporalRegParams& tp) {
  tp.validate();
  require_same_shape(f_t, f_prev, "temporal_reg");
  double acc1 = 0.0;
  double acc2 = 0.0;
  for (int d = 0; d < f_t.depth(); ++d)
    for (int i = 0; i < f_t.rows(); ++i)
      for (int j = 0; j < f_t.cols(); ++j) {
        const double ft = f_t[d](i, j);
        const double fp = f_prev[d](i, j);
        const double t1 = tp.delta_t * (ft - fp + tp.eps_off * sgn(ft));
        const double t2 = tp.delta_t * tp.delta_t * (ft - fp + tp.gamma_off * sgn(fp));
        acc1 += t1 * t1;
        acc2 += t2 * t2;
      }
  return tp.beta1 * acc1 + tp.beta2 * acc2;
}

// Printed update: f_p = (eps/beta1)*sgn(f_t) + f_prev, elementwise.
inline Tensor3 update_p(const Tensor3& f_t, const Tensor3& f_prev, const TemporalRegParams& tp) {
  tp.validate();
  require_same_shape(f_t, f_prev, "update_p");
  if (tp.beta1 == 0.0) throw ZeroBeta1("update_p: beta1 must be > 0");
  Tensor3 out = f_prev;
  for (int d = 0; d < f_t.depth(); ++d)
    for (int i = 0; i < f_t.rows(); ++i)
      for (int j = 0; j < f_t.cols(); ++j)
        out[d](i, j) = (tp.eps_off / tp.beta1) * sgn(f_t[d](i, j)) + f_prev[d](i, j);
  return out;
}

// Printed update: f_q = sqrt(gamma/beta2) + f_prev, elementwise.
inline Tensor3 update_q(const Tensor3& f_prev, const TemporalRegParams& tp) {
  tp.validate();
  f_prev.check();
  if (tp.beta2 == 0.0) throw ZeroBeta2("update_q: beta2 must be > 0");
  const double ratio = tp.gamma_off / tp.beta2;
  if (ratio < 0.0) throw NegativeRatio("update_q: gamma/beta2 must be >= 0");
  const double off = std::sqrt(ratio);
  Tensor3 out = f_prev;
  for (int d = 0; d < f_prev.depth(); ++d)
    for (int i = 0; i < f_prev.rows(); ++i)
      for (int j = 0; j < f_prev.cols(); ++j) out[d](i, j) = off + f_prev[d](i, j);
  return out;
}

// Average of the two printed updates, shrunk by eta*lambda2/(1+lambda2);
// w_ref is replaced by the result.
inline Tensor3 solve_w(AstfState& state, const AstfConfig& cfg, const TemporalRegParams& tp) {
  cfg.validate();
  if (!state.f.prev) throw ShapeMismatch("solve_w: previous filter missing");
  require_same_shape(state.f.weights, *state.f.prev, "solve_w");
  const Tensor3 p = update_p(state.f.weights, *state.f.prev, tp);
  const Tensor3 q = update_q(*state.f.prev, tp);
  const Tensor3 avg = 0.5 * (p + q);
  const double level = cfg.eta_w * cfg.lambda2_w / (1.0 + cfg.lambda2_w);
  Tensor3 out = soft_threshold(avg, level);
  state.w_ref = out;
  return out;
}

// Alternates the three subproblem solves until the filter stabilizes; the
// returned state carries the new filter as its own previous filter.
inline AstfState admm_astf(const FeatureTensor& x, const Field2D& y, const AstfState& prev,
                           const AstfConfig& cfg, const SpatialRegParams& sp,
                           const TemporalRegParams& tp) {
  cfg.validate();
  sp.validate();
  tp.validate();
  const Tensor3& xd = x.data;
  xd.check();
  if (y.rows() != xd.rows() || y.cols() != xd.cols())
    throw ShapeMismatch("admm_astf: label shape differs from sample");

  AstfState s;
  s.sample = x;
  s.label = y;
  const bool has_prev = prev.sample.data.depth() == xd.depth() &&
                        prev.sample.data.rows() == xd.rows() &&
                        prev.sample.data.cols() == xd.cols();
  s.prev_sample = has_prev ? prev.sample : x;
  s.prev_label = has_prev ? prev.label : y;

  const bool has_prev_f = prev.f.weights.depth() == xd.depth() &&
                          prev.f.weights.rows() == xd.rows() &&
                          prev.f.weights.cols() == xd.cols();
  Tensor3 f_last = has_prev_f ? prev.f.weights : Tensor3::zeros(xd.depth(), xd.rows(), xd.cols());
  s.f.weights = f_last;
  s.f.prev = f_last;
  s.f.refresh_spectrum();
  s.g.weights = f_last;
  s.g.prev = f_last;
  s.w_ref = prev.w_ref.depth() == xd.depth() ? prev.w_ref : f_last;

  double rel = std::numeric_limits<double>::infinity();
  for (int k = 0; k < cfg.max_admm_iters; ++k) {
    const Tensor3 f_before = s.f.weights;
    s.f = solve_f(s, cfg);
    s.objective_trace.push_back(solve_f_objective(s, cfg));
    s.g = solve_g(s, cfg);
    if (tp.beta1 > 0.0 && tp.beta2 > 0.0) s.w_ref = solve_w(s, cfg, tp);
    if (s.f.weights.rows() >= 5 && s.f.weights.cols() >= 5)
      s.spatial_trace.push_back(spatial_reg(s.f, sp));
    s.iter = k + 1;
    rel = std::sqrt(squared_norm(s.f.weights - f_before)) /
          std::max(std::sqrt(squared_norm(f_before)), 1e-12);
    if (rel < cfg.tol) break;
  }
  s.converged = rel < cfg.tol;
  s.f.prev = s.f.weights;
  return s;
}

}  // namespace tircf
