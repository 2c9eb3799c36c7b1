#include "lqr/gramian.h"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/MatrixFunctions>

#include "lqr/errors.h"

namespace lqr {

namespace {

// Composite Simpson integral of x(t) x(t)' over [0, T] on N equal panels
// (N even), with the state advanced exactly by the panel propagator e^{F dt}.
MatrixXd simpson_state_gramian(const MatrixXd& F, const VectorXd& x0, double T, int N) {
  const double dt = T / N;
  const MatrixXd E = (F * dt).exp();
  MatrixXd G = MatrixXd::Zero(x0.size(), x0.size());
  VectorXd x = x0;
  for (int k = 0; k <= N; ++k) {
    double w = (k == 0 || k == N) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    G += w * (x * x.transpose());
    if (k < N) x = E * x;
  }
  return (dt / 3.0) * G;
}

}  // namespace

TrajectoryGramian simulate_closed_loop(const Plant& plant, const MatrixXd& K,
                                       const VectorXd& x0, double T_hint, double dt0,
                                       const Tolerances& tol) {
  if (x0.size() != plant.n) throw DimensionError("x0 must have one entry per state");
  if (K.rows() != plant.m || K.cols() != plant.n) throw DimensionError("gain must be m x n");
  const MatrixXd F = plant.A + plant.B * K;
  const double abscissa = spectral_abscissa(F);
  if (abscissa >= -tol.stability_margin) {
    throw StabilityError("trajectory Gramian needs a stabilizing gain", abscissa);
  }

  constexpr double decay = 1e-8;
  constexpr double T_cap = 1e4;
  double T = T_hint;
  if (!(T > 0.0)) {
    // First guess from the decay rate alone, then stretch until the actual
    // propagated state is small enough (transient growth can beat the estimate).
    T = std::min(std::log(1.0 / decay) / (-abscissa), T_cap);
    const double x0n = x0.norm();
    if (x0n > 0.0) {
      while (T < T_cap && ((F * T).exp() * x0).norm() > decay * x0n) T *= 2.0;
      T = std::min(T, T_cap);
    } else {
      T = 1.0;
    }
  }

  TrajectoryGramian out;
  out.T = T;
  const Eigen::Index n = plant.n;
  const Eigen::Index m = plant.m;

  double dt = dt0 > 0.0 ? dt0 : 1e-2;
  int N = std::max(2, static_cast<int>(std::ceil(T / dt)));
  if (N % 2 == 1) ++N;

  MatrixXd G_prev;
  MatrixXd G = simpson_state_gramian(F, x0, T, N);
  out.refinements = 0;
  double quad_remainder = 0.0;
  for (int r = 0; r < 3; ++r) {
    G_prev = G;
    N *= 2;
    G = simpson_state_gramian(F, x0, T, N);
    ++out.refinements;
    // The step between successive refinements dominates the remaining
    // quadrature error of a fourth-order rule, so it doubles as the
    // remainder estimate when the loop exhausts its budget.
    quad_remainder = (G - G_prev).norm();
    if (quad_remainder < 1e-8) break;
  }
  out.dt = T / N;

  // Everything past the horizon in closed form: the remaining state Gramian
  // solves F G_tail + G_tail F' + x(T) x(T)' = 0.
  const VectorXd xT = (F * T).exp() * x0;
  const MatrixXd G_tail = solve_lyapunov(F, xT * xT.transpose(), tol);
  out.tail_bound = (quad_remainder + G_tail.norm()) * (1.0 + K.squaredNorm());
  G += G_tail;

  MatrixXd stack(n + m, n);
  stack.topRows(n) = MatrixXd::Identity(n, n);
  stack.bottomRows(m) = K;
  out.Z = stack * G * stack.transpose();
  out.Z = 0.5 * (out.Z + out.Z.transpose()).eval();
  return out;
}

GramianComparison trajectory_gramian_vs_lyapunov(const Plant& plant, const MatrixXd& K,
                                                 const VectorXd& x0,
                                                 const Tolerances& tol) {
  const TrajectoryGramian sim = simulate_closed_loop(plant, K, x0, 0.0, 1e-2, tol);
  const Plant rebased = with_covariance(plant, x0 * x0.transpose(), tol);
  const PrimalLift lift = lift_primal(rebased, K, tol);
  GramianComparison out;
  out.gap = (sim.Z - lift.Z).norm();
  out.tail_bound = sim.tail_bound;
  out.consistent = out.gap <= std::max(1e-6, out.tail_bound);
  return out;
}

SdpMembership v_sdp_membership(const Plant& plant, const MatrixXd& Z, const VectorXd& x0,
                               const Tolerances& tol) {
  const Eigen::Index n = plant.n;
  const Eigen::Index m = plant.m;
  if (Z.rows() != n + m || Z.cols() != n + m) {
    throw DimensionError("Z must be (n+m) x (n+m)");
  }
  if (x0.size() != n) throw DimensionError("x0 must have one entry per state");

  const MatrixXd Z11 = Z.topLeftCorner(n, n);
  const MatrixXd Z12 = Z.topRightCorner(n, m);
  const MatrixXd Z22 = Z.bottomRightCorner(m, m);

  SdpMembership out;
  out.sdp_residual = (plant.A * Z11 + plant.B * Z12.transpose() +
                      Z11 * plant.A.transpose() + Z12 * plant.B.transpose() +
                      x0 * x0.transpose())
                         .norm();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (Z + Z.transpose()),
                                             Eigen::EigenvaluesOnly);
  out.psd_violation = std::max(0.0, -es.eigenvalues().minCoeff());

  // Best static-gain explanation of the off-diagonal block: Z12 = Z11 K'.
  const MatrixXd Kt = Z11.completeOrthogonalDecomposition().solve(Z12);
  out.K_recovered = Kt.transpose();
  out.static_structure_gap = (Z12 - Z11 * Kt).norm() +
                             (Z22 - out.K_recovered * Z11 * Kt).norm();
  (void)tol;
  return out;
}

Sandwich optimality_sandwich(const Plant& plant, const VectorXd& x0,
                             const Tolerances& tol) {
  if (x0.size() != plant.n) throw DimensionError("x0 must have one entry per state");
  const RiccatiSolution riccati = solve_care(plant, tol);
  Sandwich out;
  out.degenerate = x0.norm() == 0.0;
  out.J1 = x0.dot(riccati.P_star * x0);
  const Plant rebased = with_covariance(plant, x0 * x0.transpose(), tol);
  out.J2 = cost(rebased, riccati.K_star, tol);
  out.gap = out.J1 - out.J2;
  return out;
}

}  // namespace lqr
