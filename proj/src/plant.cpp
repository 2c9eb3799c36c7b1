#include "lqr/plant.h"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <sstream>

#include "lqr/errors.h"

namespace lqr {

namespace {

bool all_finite(const MatrixXd& M) { return M.allFinite(); }

void require_square(const MatrixXd& M, Eigen::Index n, const char* name) {
  if (M.rows() != n || M.cols() != n) {
    std::ostringstream os;
    os << name << " must be " << n << "x" << n << ", got " << M.rows() << "x"
       << M.cols();
    throw DimensionError(os.str());
  }
}

// Validates near-symmetry, returns the symmetrized matrix and its eigenvalue
// range. Definiteness decisions are made on the symmetrized copy.
struct SymCheck {
  MatrixXd S;
  double lambda_min;
  double lambda_max;
};

SymCheck symmetrize(const MatrixXd& M, const char* name) {
  const double skew = (M - M.transpose()).norm();
  if (skew > 1e-9 * (1.0 + M.norm())) {
    std::ostringstream os;
    os << name << " is not symmetric (skew part " << skew << ")";
    throw DimensionError(os.str());
  }
  SymCheck out;
  out.S = 0.5 * (M + M.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.S, Eigen::EigenvaluesOnly);
  out.lambda_min = es.eigenvalues().minCoeff();
  out.lambda_max = es.eigenvalues().maxCoeff();
  return out;
}

}  // namespace

Plant make_plant(MatrixXd A, MatrixXd B, MatrixXd Q, MatrixXd R, MatrixXd W,
                 std::optional<MatrixXd> B1, std::optional<VectorXd> x0,
                 const Tolerances& tol) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n) throw DimensionError("A must be square");
  if (n == 0) throw DimensionError("state dimension must be positive");
  if (B.rows() != n || B.cols() == 0) {
    throw DimensionError("B must have one row per state and at least one column");
  }
  const Eigen::Index m = B.cols();
  require_square(Q, n, "Q");
  require_square(R, m, "R");
  require_square(W, n, "W");

  for (const auto* M : {&A, &B, &Q, &R, &W}) {
    if (!all_finite(*M)) throw DimensionError("problem data contain non-finite entries");
  }

  auto q = symmetrize(Q, "Q");
  auto r = symmetrize(R, "R");
  auto w = symmetrize(W, "W");

  const double q_floor = -tol.psd_rel * std::max(q.lambda_max, 1.0);
  if (q.lambda_min < q_floor) {
    std::ostringstream os;
    os << "Q must be positive semidefinite (lambda_min " << q.lambda_min << ")";
    throw AssumptionError(os.str());
  }
  if (q.S.norm() == 0.0) throw AssumptionError("Q must be nonzero");

  if (r.lambda_min <= tol.psd_rel * std::max(r.lambda_max, 1.0)) {
    std::ostringstream os;
    os << "R must be positive definite (lambda_min " << r.lambda_min << ")";
    throw AssumptionError(os.str());
  }

  const double w_floor = -tol.psd_rel * std::max(w.lambda_max, 1.0);
  if (w.lambda_min < w_floor) {
    std::ostringstream os;
    os << "W must be positive semidefinite (lambda_min " << w.lambda_min << ")";
    throw AssumptionError(os.str());
  }

  Plant plant;
  plant.A = std::move(A);
  plant.B = std::move(B);
  plant.Q = std::move(q.S);
  plant.R = std::move(r.S);
  plant.W = std::move(w.S);
  plant.n = n;
  plant.m = m;

  if (B1) {
    if (B1->rows() != n) throw DimensionError("B1 must have one row per state");
    if (!all_finite(*B1)) throw DimensionError("B1 contains non-finite entries");
    plant.B1 = std::move(*B1);
  }
  if (x0) {
    if (x0->size() != n) throw DimensionError("x0 must have one entry per state");
    if (!x0->allFinite()) throw DimensionError("x0 contains non-finite entries");
    plant.x0 = std::move(*x0);
  }
  return plant;
}

Plant with_covariance(const Plant& plant, const MatrixXd& W_new, const Tolerances& tol) {
  return make_plant(plant.A, plant.B, plant.Q, plant.R, W_new, plant.B1, plant.x0, tol);
}

const char* to_string(CompactnessCondition c) {
  switch (c) {
    case CompactnessCondition::PositiveCovariance: return "positive-covariance";
    case CompactnessCondition::FactoredCovariance: return "factored-covariance";
    case CompactnessCondition::Unknown: return "unknown";
    case CompactnessCondition::None: return "none";
  }
  return "none";
}

double spectral_abscissa(const MatrixXd& M) {
  Eigen::EigenSolver<MatrixXd> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().real().maxCoeff();
}

bool is_stable(const MatrixXd& M, const Tolerances& tol) {
  return spectral_abscissa(M) < -tol.stability_margin;
}

namespace {

// PBH test: for every eigenvalue lambda of A in the closed right half plane,
// [A - lambda I, B] must have full row rank.
bool pbh_full_rank_at_unstable_modes(const MatrixXd& A, const MatrixXd& B,
                                     const Tolerances& tol) {
  const Eigen::Index n = A.rows();
  Eigen::EigenSolver<MatrixXd> es(A, /*computeEigenvectors=*/false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lam = es.eigenvalues()(i);
    if (lam.real() < -tol.stability_margin) continue;
    Eigen::MatrixXcd pencil(n, n + B.cols());
    pencil.leftCols(n) = A.cast<std::complex<double>>();
    pencil.leftCols(n).diagonal().array() -= lam;
    pencil.rightCols(B.cols()) = B.cast<std::complex<double>>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    const auto& sv = svd.singularValues();
    if (sv(n - 1) <= tol.rank_rel * sv(0)) return false;
  }
  return true;
}

}  // namespace

bool pbh_stabilizable(const MatrixXd& A, const MatrixXd& B, const Tolerances& tol) {
  return pbh_full_rank_at_unstable_modes(A, B, tol);
}

bool pbh_detectable(const MatrixXd& C, const MatrixXd& A, const Tolerances& tol) {
  // Detectability of (C, A) is stabilizability of the transposed pair.
  return pbh_full_rank_at_unstable_modes(A.transpose(), C.transpose(), tol);
}

bool is_controllable(const MatrixXd& A, const MatrixXd& B, const Tolerances& tol) {
  const Eigen::Index n = A.rows();
  const Eigen::Index m = B.cols();
  MatrixXd ctrb(n, n * m);
  MatrixXd block = B;
  for (Eigen::Index k = 0; k < n; ++k) {
    ctrb.middleCols(k * m, m) = block;
    block = A * block;
  }
  return numerical_rank(ctrb, tol.rank_rel) == static_cast<int>(n);
}

bool image_inclusion(const MatrixXd& B, const MatrixXd& B1, const Tolerances& tol) {
  if (B.rows() != B1.rows()) throw DimensionError("image_inclusion: row counts differ");
  MatrixXd stacked(B1.rows(), B1.cols() + B.cols());
  stacked << B1, B;
  return numerical_rank(stacked, tol.rank_rel) == numerical_rank(B1, tol.rank_rel);
}

MatrixXd psd_sqrt(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()));
  VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

int numerical_rank(const MatrixXd& M, double rel_cutoff) {
  if (M.size() == 0) return 0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  if (smax == 0.0) return 0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > rel_cutoff * smax) ++rank;
  }
  return rank;
}

StructuralReport structural_report(const Plant& plant,
                                   const std::optional<MatrixXd>& B1_override,
                                   const Tolerances& tol) {
  StructuralReport rep;
  rep.spectral_abscissa = spectral_abscissa(plant.A);
  rep.stable = rep.spectral_abscissa < -tol.stability_margin;
  rep.stabilizable = pbh_stabilizable(plant.A, plant.B, tol);
  rep.detectable = pbh_detectable(psd_sqrt(plant.Q), plant.A, tol);
  rep.controllable = is_controllable(plant.A, plant.B, tol);
  rep.assumption_holds = rep.stabilizable && rep.detectable;

  Eigen::SelfAdjointEigenSolver<MatrixXd> ew(plant.W, Eigen::EigenvaluesOnly);
  const double w_min = ew.eigenvalues().minCoeff();
  const double w_max = ew.eigenvalues().maxCoeff();
  const bool w_pd = w_min > tol.psd_rel * std::max(w_max, 1.0);

  Eigen::SelfAdjointEigenSolver<MatrixXd> eq(plant.Q, Eigen::EigenvaluesOnly);
  const double q_min = eq.eigenvalues().minCoeff();
  const double q_max = eq.eigenvalues().maxCoeff();
  const bool q_pd = q_min > tol.psd_rel * std::max(q_max, 1.0);

  const std::optional<MatrixXd>& B1 = B1_override ? B1_override : plant.B1;
  bool factored = false;
  bool image_ok = false;
  if (B1) {
    factored = (plant.W - *B1 * B1->transpose()).norm() <= 1e-9;
    image_ok = image_inclusion(plant.B, *B1, tol);
  }

  if (w_pd) {
    rep.sufficient_condition = CompactnessCondition::PositiveCovariance;
  } else if (q_pd && rep.controllable && factored && image_ok) {
    rep.sufficient_condition = CompactnessCondition::FactoredCovariance;
  } else if (q_pd && rep.stabilizable && factored && image_ok) {
    // The weaker sufficient condition also demands a limit property of the
    // cost along unbounded gain sequences, which is not finitely checkable.
    rep.sufficient_condition = CompactnessCondition::Unknown;
  } else {
    rep.sufficient_condition = CompactnessCondition::None;
  }
  return rep;
}

}  // namespace lqr
