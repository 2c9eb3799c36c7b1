#pragma once

#include "lqr/plant.h"

namespace lqr {

// Solution of F X + X F' + S = 0 for the closed loop F = A + B K.
struct GramianSolution {
  MatrixXd X;
  MatrixXd K;
  double residual = 0.0;      // Frobenius norm of the Lyapunov defect
  double lambda_min_X = 0.0;  // smallest eigenvalue of X
};

struct RiccatiSolution {
  MatrixXd P_star;  // symmetric PSD stabilizing solution
  MatrixXd K_star;  // -R^{-1} B' P_star
  double are_residual = 0.0;
  double closed_loop_abscissa = 0.0;  // max real part of eig(A + B K_star), negative
};

// Solution of (A+BK)' P + P (A+BK) + K'RK + Q = 0. Traces against W give the cost.
struct ValueMatrix {
  MatrixXd P;
  double residual = 0.0;
};

struct CostGap {
  double lhs;  // J(K) - J(K_star)
  double rhs;  // tr((K - K_star)' R (K - K_star) X)
  double gap;  // lhs - rhs
};

// Continuous Lyapunov solve F X + X F' + S = 0 by Kronecker vectorization.
// Requires F Hurwitz. Throws StabilityError otherwise, NumericalError when the
// vectorized system cannot be solved to tolerance.
MatrixXd solve_lyapunov(const MatrixXd& F, const MatrixXd& S,
                        const Tolerances& tol = default_tol());

GramianSolution closed_loop_gramian(const Plant& plant, const MatrixXd& K,
                                    const Tolerances& tol = default_tol());

double cost(const Plant& plant, const MatrixXd& K,
            const Tolerances& tol = default_tol());

ValueMatrix dual_value_matrix(const Plant& plant, const MatrixXd& K,
                              const Tolerances& tol = default_tol());

// Gradient of the cost in K, equal to 2 (R K + B' P) X. The factor of two is
// pinned by the finite-difference tests.
MatrixXd gradient(const Plant& plant, const MatrixXd& K,
                  const Tolerances& tol = default_tol());

// Residual map of the algebraic Riccati equation, A'P + PA - P B R^{-1} B' P + Q.
MatrixXd riccati_residual(const Plant& plant, const MatrixXd& P);

// Stabilizing solution of the Riccati equation via an ordered Schur
// decomposition of the 2n x 2n Hamiltonian. Checks the standing assumptions
// first (AssumptionError) and refuses Hamiltonians with spectrum within
// tol.axis_guard of the imaginary axis (IllConditionedError).
RiccatiSolution solve_care(const Plant& plant, const Tolerances& tol = default_tol());

MatrixXd optimal_gain(const Plant& plant, const MatrixXd& P_star);

// Independent cross-check: Kleinman iteration (repeated Lyapunov solves) from a
// stabilizing initial gain.
MatrixXd solve_care_newton(const Plant& plant, const MatrixXd& K0,
                           int max_iters = 60, const Tolerances& tol = default_tol());

// Bass-style construction of a stabilizing gain. Returns zero when A is already
// Hurwitz; otherwise needs (A, B) controllable to certify the construction.
MatrixXd initial_stabilizing_gain(const Plant& plant,
                                  const Tolerances& tol = default_tol());

// Completion-of-squares identity: the excess cost of K over the optimum equals
// tr((K - K_star)' R (K - K_star) X) with X the closed-loop Gramian of K.
CostGap cost_gap_identity(const Plant& plant, const MatrixXd& K,
                          const Tolerances& tol = default_tol());

}  // namespace lqr
