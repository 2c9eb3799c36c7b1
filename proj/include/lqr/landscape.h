#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "lqr/lyap_riccati.h"

namespace lqr {

struct PgdIterate {
  int iter;
  double J;
  double grad_norm;
  double dist_to_K_star;
};

struct PgdResult {
  MatrixXd K_final;
  std::vector<PgdIterate> trace;
  bool converged;
};

// Gradient descent on the gain. Every iterate must stay stabilizing and the
// cost must be monotone; a violation is a hard failure with diagnostics, not a
// silent clamp.
PgdResult pgd_run(const Plant& plant, const MatrixXd& K0, double alpha,
                  int max_iters, double grad_tol,
                  const Tolerances& tol = default_tol());

// Empirical Lipschitz constant of the gradient over the sublevel set,
// estimated from directional second differences and inflated by a safety
// factor of 1.5.
double estimate_smoothness(const Plant& plant, const std::vector<MatrixXd>& samples,
                           std::uint64_t seed, const Tolerances& tol = default_tol());

struct SublevelSample {
  std::vector<MatrixXd> gains;
  double nu;
  int rejected;
};

// Draw stabilizing gains with J(K) <= nu: Gaussian rays from K_star bisected
// to the boundary, plus interior jitter. Deterministic per seed. Rays on which
// the sublevel set is unbounded are truncated at a fixed cap so sampling
// always terminates.
SublevelSample sample_sublevel(const Plant& plant, double nu, int count,
                               std::uint64_t seed,
                               const Tolerances& tol = default_tol());

// Largest singular value of Y -> -A_*^{-1}(B Y + Y' B') assembled through
// Kronecker products, where A_*(X) = (A + B K_star) X + X (A + B K_star)'.
double operator_norm_Astar_inv_B(const Plant& plant, const MatrixXd& K_star,
                                 const Tolerances& tol = default_tol());

struct PlConstant {
  double kappa_lo;      // lower bound on lambda_min of the Gramian over the set
  double kappa_bar;     // upper bound on tr of the Gramian over the set
  double op_norm;       // operator norm of the lift's linear coupling
  double mu_qg;         // quadratic-growth modulus of the convex image
  double c_lqr;         // inverse Lipschitz constant of the lift
  double mu;            // gradient-dominance modulus, mu_qg * c_lqr^2
  double nu;
  double kappa_closed_form;  // diagnostic; NaN unless Q and W are both PD
};

// Gradient-dominance constants over the sublevel set {J <= nu}, from sampled
// Gramian extrema plus the closed-form coupling norm. Requires a structural
// condition guaranteeing compactness (PD noise, or factored noise with PD Q).
PlConstant pl_constant(const Plant& plant, double nu,
                       const std::vector<MatrixXd>& samples,
                       const Tolerances& tol = default_tol());

struct PlCheckRow {
  int sample_id;
  double J;
  double grad_norm_sq;
  double ratio;  // mu (J - J_star) / (0.5 |grad|^2)
};

struct PlCheckResult {
  std::vector<PlCheckRow> rows;
  double worst_ratio;
  int violations;  // rows with ratio > 1 + 1e-6
};

PlCheckResult pl_check(const Plant& plant, double mu,
                       const std::vector<MatrixXd>& samples,
                       const Tolerances& tol = default_tol());

// Change of variables mapping a gain to the convex reparametrization:
// Y = (K - K_star) X, X the closed-loop Gramian of K.
struct EclPoint {
  MatrixXd Y;
  MatrixXd X;
};

EclPoint ecl_forward(const Plant& plant, const MatrixXd& K, const MatrixXd& K_star,
                     const Tolerances& tol = default_tol());

// Inverse map K = K_star + Y X^{-1}. Throws SingularLiftError when X is
// numerically singular (the boundary where distinct optima merge).
MatrixXd ecl_inverse(const Plant& plant, const EclPoint& point, const MatrixXd& K_star,
                     const Tolerances& tol = default_tol());

double f_cvx_eval(const Plant& plant, const EclPoint& point, const MatrixXd& K_star,
                  const Tolerances& tol = default_tol());

struct FcvxGradient {
  MatrixXd dY;
  MatrixXd dX;
};

FcvxGradient f_cvx_grad(const Plant& plant, const EclPoint& point, const MatrixXd& K_star,
                        const Tolerances& tol = default_tol());

struct QuadraticGrowthResult {
  double worst_ratio;  // max over samples of rhs / (f - f_star)
  int violations;
};

QuadraticGrowthResult quadratic_growth_check(const Plant& plant, double mu_qg,
                                             const std::vector<MatrixXd>& samples,
                                             const Tolerances& tol = default_tol());

// Projection of a gradient onto the secant direction toward the minimizer.
// Works on any smooth h with known minimizer; the scalar demo in the tests is
// h(x) = x^2 - x - 3.
struct CauchyDirection {
  VectorXd g_c;       // projected gradient
  double norm;        // |g_c|
  double value;       // h at the query point
  double value_star;  // h at the minimizer
  double secant_bound;  // (h - h_star) / |x - x_star|, lower bound on |g_c| for convex h
};

CauchyDirection cauchy_direction(const std::function<double(const VectorXd&)>& h,
                                 const std::function<VectorXd(const VectorXd&)>& grad_h,
                                 const VectorXd& x, const VectorXd& x_star);

struct CauchyBridgeResult {
  double worst_slack;  // min over samples of |grad J| - 2 c_lqr |g_c|
  int violations;
};

// The lifted Cauchy direction understates the true gradient by at most the
// lift's Lipschitz factor: 2 c_lqr |g_c| <= |grad J(K)|.
CauchyBridgeResult cauchy_bridge_check(const Plant& plant, double c_lqr,
                                       const std::vector<MatrixXd>& samples,
                                       const Tolerances& tol = default_tol());

struct HessianSlice {
  double k_min;        // slice minimizer location
  double curvature;    // second difference at the minimizer, Richardson refined
  double formula;      // closed-form comparison value when available, else NaN
};

// One-dimensional restriction J(k) = J(K(k)) along a parametrized slice.
// Minimizer located by golden-section after a coarse scan; curvature by
// central second differences with one Richardson extrapolation.
HessianSlice hessian_slice(const Plant& plant,
                           const std::function<MatrixXd(double)>& gain_of,
                           double lo, double hi,
                           double formula = std::numeric_limits<double>::quiet_NaN(),
                           const Tolerances& tol = default_tol());

struct GridPoint {
  double k1;
  double k2;
  double J;  // NaN marks an unstable gain
};

// Dense cost evaluation over a rectangle of two gain coordinates, row-major.
std::vector<GridPoint> landscape_grid(const Plant& plant,
                                      const std::function<MatrixXd(double, double)>& gain_of,
                                      double k1_lo, double k1_hi, int n1,
                                      double k2_lo, double k2_hi, int n2,
                                      const Tolerances& tol = default_tol());

}  // namespace lqr
