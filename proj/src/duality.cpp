#include "lqr/duality.h"

#include <Eigen/Eigenvalues>

#include "lqr/errors.h"

namespace lqr {

MatrixXd lmi_matrix(const Plant& plant, const MatrixXd& P) {
  if (P.rows() != plant.n || P.cols() != plant.n) {
    throw DimensionError("P must be n x n");
  }
  const Eigen::Index n = plant.n;
  const Eigen::Index m = plant.m;
  MatrixXd M(n + m, n + m);
  M.topLeftCorner(n, n) =
      plant.A.transpose() * P + P * plant.A + plant.Q;
  M.topRightCorner(n, m) = P * plant.B;
  M.bottomLeftCorner(m, n) = plant.B.transpose() * P;
  M.bottomRightCorner(m, m) = plant.R;
  return 0.5 * (M + M.transpose());
}

DualCertificate dual_certificate(const Plant& plant, const MatrixXd& P,
                                 const Tolerances& tol) {
  DualCertificate cert;
  cert.M = lmi_matrix(plant, P);
  cert.value = (plant.W * P).trace();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(cert.M, Eigen::EigenvaluesOnly);
  cert.lambda_min = es.eigenvalues().minCoeff();
  const double lambda_max = es.eigenvalues().maxCoeff();
  cert.feasible = cert.lambda_min >= -1e-9 * (1.0 + lambda_max);
  (void)tol;
  return cert;
}

namespace {

PrimalLift assemble_lift(const Plant& plant, const MatrixXd& X, const MatrixXd& K) {
  const Eigen::Index n = plant.n;
  const Eigen::Index m = plant.m;
  PrimalLift lift;
  lift.Z.resize(n + m, n + m);
  lift.Z.topLeftCorner(n, n) = X;
  lift.Z.topRightCorner(n, m) = X * K.transpose();
  lift.Z.bottomLeftCorner(m, n) = K * X;
  lift.Z.bottomRightCorner(m, m) = K * X * K.transpose();
  lift.Z = 0.5 * (lift.Z + lift.Z.transpose()).eval();
  lift.objective = (plant.Q * X).trace() + (plant.R * K * X * K.transpose()).trace();
  const MatrixXd Z12 = lift.Z.topRightCorner(n, m);
  lift.affine_residual = (plant.A * X + plant.B * Z12.transpose() + X * plant.A.transpose() +
                          Z12 * plant.B.transpose() + plant.W)
                             .norm();
  return lift;
}

}  // namespace

PrimalLift lift_primal(const Plant& plant, const MatrixXd& K, const Tolerances& tol) {
  const MatrixXd X = closed_loop_gramian(plant, K, tol).X;
  return assemble_lift(plant, X, K);
}

PrimalRecovery kkt_primal_from_dual(const Plant& plant, const RiccatiSolution& riccati,
                                    const Tolerances& tol) {
  // The complementary primal block is the Gramian of the optimal closed loop;
  // the off-diagonal and control blocks follow from the optimal gain.
  const MatrixXd F = plant.A + plant.B * riccati.K_star;
  const MatrixXd Z11 = solve_lyapunov(F, plant.W, tol);
  const PrimalLift lift = assemble_lift(plant, Z11, riccati.K_star);
  return PrimalRecovery{lift.Z, lift.objective, lift.affine_residual};
}

DualityGap duality_gap(const Plant& plant, const Tolerances& tol) {
  const RiccatiSolution riccati = solve_care(plant, tol);
  DualityGap out;
  out.primal = cost(plant, riccati.K_star, tol);
  out.dual = (plant.W * riccati.P_star).trace();
  out.gap = out.primal - out.dual;
  return out;
}

Complementarity complementarity(const Plant& plant, const MatrixXd& Z, const MatrixXd& P,
                                const Tolerances& tol) {
  const MatrixXd M = lmi_matrix(plant, P);
  if (Z.rows() != M.rows() || Z.cols() != M.cols()) {
    throw DimensionError("Z must match the certificate block size");
  }
  Complementarity out;
  out.slackness = (Z * M).trace();
  out.rank_M = numerical_rank(M, tol.cert_rank_rel);
  out.rank_Z = numerical_rank(Z, tol.cert_rank_rel);
  out.strict = out.rank_M + out.rank_Z == static_cast<int>(plant.n + plant.m);
  return out;
}

}  // namespace lqr
