#pragma once

#include "lqr/duality.h"

namespace lqr {

// Trajectory Gramian Z = integral of [x; u][x; u]' along the closed-loop
// solution from x0, integrated by Simpson panels on matrix-exponential steps
// with the tail past the horizon added exactly from a Lyapunov solve.
struct TrajectoryGramian {
  MatrixXd Z;          // (n+m) x (n+m)
  double T;            // integration horizon actually used
  double dt;           // final panel width after refinement
  double tail_bound;   // conservative bound on the truncated tail before the exact patch
  int refinements;     // how many times dt was halved
};

TrajectoryGramian simulate_closed_loop(const Plant& plant, const MatrixXd& K,
                                       const VectorXd& x0,
                                       double T_hint = 0.0, double dt0 = 1e-2,
                                       const Tolerances& tol = default_tol());

struct GramianComparison {
  double gap;         // Frobenius distance between trajectory and Lyapunov Gramians
  double tail_bound;
  bool consistent;    // gap <= max(1e-6, tail_bound)
};

// The trajectory Gramian of a static gain equals the primal lift evaluated at
// covariance x0 x0'.
GramianComparison trajectory_gramian_vs_lyapunov(const Plant& plant, const MatrixXd& K,
                                                 const VectorXd& x0,
                                                 const Tolerances& tol = default_tol());

struct SdpMembership {
  double sdp_residual;        // defect in the affine constraint at covariance x0 x0'
  double psd_violation;       // max(0, -lambda_min(Z))
  double static_structure_gap;  // distance to the rank-structured static-gain form
  MatrixXd K_recovered;       // least-squares gain explaining the off-diagonal block
};

SdpMembership v_sdp_membership(const Plant& plant, const MatrixXd& Z,
                               const VectorXd& x0,
                               const Tolerances& tol = default_tol());

struct Sandwich {
  double J1;  // x0' P_star x0
  double J2;  // best static-gain cost at covariance x0 x0'
  double gap;
  bool degenerate;  // x0 == 0 pins every layer to zero
};

// The value of the relaxed program and the best static policy coincide: both
// equal x0' P_star x0.
Sandwich optimality_sandwich(const Plant& plant, const VectorXd& x0,
                             const Tolerances& tol = default_tol());

}  // namespace lqr
