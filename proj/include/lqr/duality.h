#pragma once

#include "lqr/lyap_riccati.h"

namespace lqr {

// Feasibility of a symmetric P in the dual program: the block matrix
// [[A'P + PA + Q, PB], [B'P, R]] must be PSD.
struct DualCertificate {
  MatrixXd M;          // (n+m) x (n+m) constraint block
  double value;        // tr(W P)
  double lambda_min;   // smallest eigenvalue of M
  bool feasible;
};

// Primal SDP variable assembled from a stabilizing gain:
// Z = [[X, XK'], [KX, KXK']] with X the closed-loop Gramian.
struct PrimalLift {
  MatrixXd Z;
  double objective;        // tr(diag(Q, R) Z), equal to the cost of K
  double affine_residual;  // Frobenius norm of A Z11 + B Z12' + (.)' + W
};

// KKT-optimal primal variable reconstructed from the Riccati solution.
struct PrimalRecovery {
  MatrixXd Z;
  double objective;
  double affine_residual;
};

struct DualityGap {
  double primal;  // J(K_star)
  double dual;    // tr(W P_star)
  double gap;     // primal - dual
};

struct Complementarity {
  double slackness;  // <Z, M(P)>
  int rank_M;
  int rank_Z;
  bool strict;  // rank_M + rank_Z == n + m
};

MatrixXd lmi_matrix(const Plant& plant, const MatrixXd& P);

DualCertificate dual_certificate(const Plant& plant, const MatrixXd& P,
                                 const Tolerances& tol = default_tol());

PrimalLift lift_primal(const Plant& plant, const MatrixXd& K,
                       const Tolerances& tol = default_tol());

PrimalRecovery kkt_primal_from_dual(const Plant& plant, const RiccatiSolution& riccati,
                                    const Tolerances& tol = default_tol());

DualityGap duality_gap(const Plant& plant, const Tolerances& tol = default_tol());

Complementarity complementarity(const Plant& plant, const MatrixXd& Z,
                                const MatrixXd& P, const Tolerances& tol = default_tol());

}  // namespace lqr
