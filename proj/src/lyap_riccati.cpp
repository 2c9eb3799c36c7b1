#include "lqr/lyap_riccati.h"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>

#include "lqr/errors.h"

namespace lqr {

MatrixXd solve_lyapunov(const MatrixXd& F, const MatrixXd& S, const Tolerances& tol) {
  const Eigen::Index n = F.rows();
  if (F.cols() != n || S.rows() != n || S.cols() != n) {
    throw DimensionError("solve_lyapunov: F and S must be square of equal size");
  }
  const double abscissa = spectral_abscissa(F);
  if (abscissa >= -tol.stability_margin) {
    throw StabilityError("Lyapunov solve needs a Hurwitz coefficient matrix", abscissa);
  }

  // Vectorize F X + X F' + S = 0 into (I kron F + F kron I) vec(X) = -vec(S).
  // Column-major vec matches Eigen's default storage, so Map round-trips.
  const MatrixXd eye = MatrixXd::Identity(n, n);
  MatrixXd M = Eigen::kroneckerProduct(eye, F).eval();
  M += Eigen::kroneckerProduct(F, eye);
  Eigen::VectorXd rhs = -Eigen::Map<const Eigen::VectorXd>(S.data(), n * n);
  Eigen::VectorXd x = M.partialPivLu().solve(rhs);
  MatrixXd X = Eigen::Map<const MatrixXd>(x.data(), n, n);

  if ((S - S.transpose()).norm() <= 1e-12 * (1.0 + S.norm())) {
    X = 0.5 * (X + X.transpose()).eval();
  }
  // Backward-stable solves leave a residual proportional to the data that
  // enters the equation, so scale by it: a unit-scale floor alone rejects
  // perfectly good solutions whenever S is large.
  const double scale = 1.0 + S.norm() + 2.0 * F.norm() * X.norm();
  const double residual = (F * X + X * F.transpose() + S).norm();
  if (!(residual <= tol.lyap_residual_rel * scale)) {
    std::ostringstream os;
    os << "Lyapunov solve residual " << residual << " exceeds tolerance";
    throw NumericalError(os.str());
  }
  return X;
}

GramianSolution closed_loop_gramian(const Plant& plant, const MatrixXd& K,
                                    const Tolerances& tol) {
  if (K.rows() != plant.m || K.cols() != plant.n) {
    throw DimensionError("gain must be m x n");
  }
  const MatrixXd F = plant.A + plant.B * K;
  const double abscissa = spectral_abscissa(F);
  if (abscissa >= -tol.stability_margin) {
    std::ostringstream os;
    os << "gain is not stabilizing (closed-loop abscissa " << abscissa << ")";
    throw StabilityError(os.str(), abscissa);
  }
  GramianSolution out;
  out.K = K;
  out.X = solve_lyapunov(F, plant.W, tol);
  out.residual = (F * out.X + out.X * F.transpose() + plant.W).norm();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.X, Eigen::EigenvaluesOnly);
  out.lambda_min_X = es.eigenvalues().minCoeff();
  return out;
}

double cost(const Plant& plant, const MatrixXd& K, const Tolerances& tol) {
  const MatrixXd X = closed_loop_gramian(plant, K, tol).X;
  return ((plant.Q + K.transpose() * plant.R * K) * X).trace();
}

ValueMatrix dual_value_matrix(const Plant& plant, const MatrixXd& K,
                              const Tolerances& tol) {
  if (K.rows() != plant.m || K.cols() != plant.n) {
    throw DimensionError("gain must be m x n");
  }
  const MatrixXd F = plant.A + plant.B * K;
  const double abscissa = spectral_abscissa(F);
  if (abscissa >= -tol.stability_margin) {
    std::ostringstream os;
    os << "gain is not stabilizing (closed-loop abscissa " << abscissa << ")";
    throw StabilityError(os.str(), abscissa);
  }
  const MatrixXd S = plant.Q + K.transpose() * plant.R * K;
  ValueMatrix out;
  out.P = solve_lyapunov(F.transpose(), S, tol);
  out.residual = (F.transpose() * out.P + out.P * F + S).norm();
  return out;
}

MatrixXd gradient(const Plant& plant, const MatrixXd& K, const Tolerances& tol) {
  const MatrixXd X = closed_loop_gramian(plant, K, tol).X;
  const MatrixXd P = dual_value_matrix(plant, K, tol).P;
  return 2.0 * (plant.R * K + plant.B.transpose() * P) * X;
}

MatrixXd riccati_residual(const Plant& plant, const MatrixXd& P) {
  const MatrixXd BtP = plant.B.transpose() * P;
  return plant.A.transpose() * P + P * plant.A -
         BtP.transpose() * plant.R.llt().solve(BtP) + plant.Q;
}

namespace {

// Swap the adjacent diagonal entries of a complex Schur form at position k by
// a unitary 2x2 rotation built from the eigenvector of the trailing eigenvalue.
void swap_schur_entries(Eigen::MatrixXcd& T, Eigen::MatrixXcd& U, Eigen::Index k) {
  const std::complex<double> t11 = T(k, k);
  const std::complex<double> t12 = T(k, k + 1);
  const std::complex<double> t22 = T(k + 1, k + 1);
  Eigen::Vector2cd x(t12, t22 - t11);
  const double nx = x.norm();
  if (nx == 0.0) return;  // equal eigenvalues, order is immaterial
  x /= nx;
  Eigen::Matrix2cd G;
  G << x(0), -std::conj(x(1)),
       x(1),  std::conj(x(0));
  T.middleRows(k, 2) = (G.adjoint() * T.middleRows(k, 2)).eval();
  T.middleCols(k, 2) = (T.middleCols(k, 2) * G).eval();
  U.middleCols(k, 2) = (U.middleCols(k, 2) * G).eval();
  T(k + 1, k) = 0.0;
}

}  // namespace

RiccatiSolution solve_care(const Plant& plant, const Tolerances& tol) {
  const StructuralReport rep = structural_report(plant, {}, tol);
  if (!rep.stabilizable) throw AssumptionError("pair (A, B) is not stabilizable");
  if (!rep.detectable) {
    throw AssumptionError("pair (Q^{1/2}, A) is not detectable");
  }

  const Eigen::Index n = plant.n;
  const MatrixXd RinvBt = plant.R.llt().solve(plant.B.transpose());
  Eigen::MatrixXd H(2 * n, 2 * n);
  H.topLeftCorner(n, n) = plant.A;
  H.topRightCorner(n, n) = -plant.B * RinvBt;
  H.bottomLeftCorner(n, n) = -plant.Q;
  H.bottomRightCorner(n, n) = -plant.A.transpose();

  Eigen::ComplexSchur<Eigen::MatrixXcd> schur(H.cast<std::complex<double>>());
  if (schur.info() != Eigen::Success) {
    throw NumericalError("Schur decomposition of the Hamiltonian failed");
  }
  Eigen::MatrixXcd T = schur.matrixT();
  Eigen::MatrixXcd U = schur.matrixU();

  Eigen::Index stable_count = 0;
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    const double re = T(i, i).real();
    if (std::abs(re) < tol.axis_guard) {
      std::ostringstream os;
      os << "Hamiltonian eigenvalue " << T(i, i) << " is within " << tol.axis_guard
         << " of the imaginary axis";
      throw IllConditionedError(os.str());
    }
    if (re < 0.0) ++stable_count;
  }
  if (stable_count != n) {
    throw IllConditionedError("Hamiltonian spectrum does not split evenly across the axis");
  }

  // Bubble the stable eigenvalues to the leading positions. Each pass moves
  // every misplaced unstable entry at least one slot right, so this terminates.
  bool swapped = true;
  while (swapped) {
    swapped = false;
    for (Eigen::Index k = 0; k + 1 < 2 * n; ++k) {
      if (T(k, k).real() > 0.0 && T(k + 1, k + 1).real() < 0.0) {
        swap_schur_entries(T, U, k);
        swapped = true;
      }
    }
  }

  const Eigen::MatrixXcd U1 = U.topLeftCorner(n, n);
  const Eigen::MatrixXcd U2 = U.bottomLeftCorner(n, n);
  Eigen::FullPivLU<Eigen::MatrixXcd> lu(U1);
  if (!lu.isInvertible()) {
    throw NumericalError("stable invariant subspace has no graph representation");
  }
  // P U1 = U2, solved through the transposed system to reuse the factorization.
  Eigen::FullPivLU<Eigen::MatrixXcd> lut(U1.transpose());
  const Eigen::MatrixXcd Pc = lut.solve(U2.transpose()).transpose();
  MatrixXd P = Pc.real();
  P = 0.5 * (P + P.transpose()).eval();

  RiccatiSolution out;
  out.P_star = P;
  out.are_residual = riccati_residual(plant, P).norm();
  if (!(out.are_residual <= tol.are_residual_rel * (1.0 + P.norm()))) {
    std::ostringstream os;
    os << "Riccati residual " << out.are_residual << " exceeds tolerance";
    throw NumericalError(os.str());
  }
  out.K_star = optimal_gain(plant, P);
  out.closed_loop_abscissa = spectral_abscissa(plant.A + plant.B * out.K_star);
  if (out.closed_loop_abscissa >= 0.0) {
    throw NumericalError("computed Riccati solution is not stabilizing");
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P, Eigen::EigenvaluesOnly);
  const double p_min = es.eigenvalues().minCoeff();
  const double p_max = es.eigenvalues().maxCoeff();
  if (p_min < -1e-9 * (1.0 + std::max(p_max, 0.0))) {
    std::ostringstream os;
    os << "Riccati solution is not positive semidefinite (lambda_min " << p_min << ")";
    throw NumericalError(os.str());
  }
  return out;
}

MatrixXd optimal_gain(const Plant& plant, const MatrixXd& P_star) {
  return -plant.R.llt().solve(plant.B.transpose() * P_star);
}

MatrixXd solve_care_newton(const Plant& plant, const MatrixXd& K0, int max_iters,
                           const Tolerances& tol) {
  if (!is_stable(plant.A + plant.B * K0, tol)) {
    throw StabilityError("Kleinman iteration needs a stabilizing initial gain",
                         spectral_abscissa(plant.A + plant.B * K0));
  }
  MatrixXd K = K0;
  MatrixXd P;
  for (int it = 0; it < max_iters; ++it) {
    const MatrixXd F = plant.A + plant.B * K;
    const MatrixXd S = plant.Q + K.transpose() * plant.R * K;
    MatrixXd P_next = solve_lyapunov(F.transpose(), S, tol);
    K = optimal_gain(plant, P_next);
    const bool settled = it > 0 && (P_next - P).norm() <= 1e-13 * (1.0 + P_next.norm());
    P = std::move(P_next);
    if (settled) break;
  }
  const double residual = riccati_residual(plant, P).norm();
  if (!(residual <= tol.are_residual_rel * (1.0 + P.norm()))) {
    std::ostringstream os;
    os << "Kleinman iteration stalled at residual " << residual;
    throw NumericalError(os.str());
  }
  return P;
}

MatrixXd initial_stabilizing_gain(const Plant& plant, const Tolerances& tol) {
  if (is_stable(plant.A, tol)) return MatrixXd::Zero(plant.m, plant.n);
  if (!is_controllable(plant.A, plant.B, tol)) {
    throw AssumptionError(
        "stabilizing-gain construction needs a controllable pair when A is unstable");
  }
  // Shift A far into the right half plane; the controllability Gramian of the
  // negated shifted system then yields a gain that moves everything left of it.
  const double beta = plant.A.norm() + 1.0;
  const MatrixXd Fneg = -(plant.A + beta * MatrixXd::Identity(plant.n, plant.n));
  const MatrixXd Z = solve_lyapunov(Fneg, 2.0 * plant.B * plant.B.transpose(), tol);
  Eigen::FullPivLU<MatrixXd> lu(Z);
  if (!lu.isInvertible()) {
    throw NumericalError("shifted controllability Gramian is singular");
  }
  const MatrixXd K0 = -plant.B.transpose() * lu.inverse();
  if (!is_stable(plant.A + plant.B * K0, tol)) {
    throw NumericalError("constructed gain failed to stabilize the plant");
  }
  return K0;
}

CostGap cost_gap_identity(const Plant& plant, const MatrixXd& K, const Tolerances& tol) {
  const RiccatiSolution riccati = solve_care(plant, tol);
  const MatrixXd X = closed_loop_gramian(plant, K, tol).X;
  const MatrixXd D = K - riccati.K_star;
  CostGap out;
  out.lhs = cost(plant, K, tol) - cost(plant, riccati.K_star, tol);
  out.rhs = (D.transpose() * plant.R * D * X).trace();
  out.gap = out.lhs - out.rhs;
  return out;
}

}  // namespace lqr
