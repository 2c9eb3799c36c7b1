#pragma once

#include <Eigen/Dense>
#include <optional>

#include "lqr/tolerances.h"

namespace lqr {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Problem data for the continuous-time quadratic regulator
//
//   xdot = A x + B u,   J = E int_0^inf (x'Qx + u'Ru) dt,   W = E[x0 x0'].
//
// Build instances through make_plant, which validates dimensions and
// definiteness and symmetrizes the weight matrices. Treat as immutable after
// construction.
struct Plant {
  MatrixXd A;
  MatrixXd B;
  MatrixXd Q;  // symmetric PSD, nonzero
  MatrixXd R;  // symmetric PD
  MatrixXd W;  // symmetric PSD
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  std::optional<MatrixXd> B1;  // optional covariance factor, W = B1 B1'
  std::optional<VectorXd> x0;  // optional deterministic initial state
};

Plant make_plant(MatrixXd A, MatrixXd B, MatrixXd Q, MatrixXd R, MatrixXd W,
                 std::optional<MatrixXd> B1 = {}, std::optional<VectorXd> x0 = {},
                 const Tolerances& tol = default_tol());

// Replaces the covariance (used to rebase a plant onto a specific initial state).
Plant with_covariance(const Plant& plant, const MatrixXd& W_new,
                      const Tolerances& tol = default_tol());

enum class CompactnessCondition {
  PositiveCovariance,   // W is positive definite
  FactoredCovariance,   // Q pd, (A,B) controllable, W = B1 B1', Im B inside Im B1
  Unknown,              // only the finitely checkable parts of the weaker condition hold
  None,
};

const char* to_string(CompactnessCondition c);

struct StructuralReport {
  bool stable = false;  // A itself is Hurwitz
  bool stabilizable = false;
  bool detectable = false;    // of (Q^{1/2}, A)
  bool controllable = false;
  double spectral_abscissa = 0.0;  // max real part of eig(A)
  bool assumption_holds = false;   // stabilizable and detectable (weights hold by construction)
  CompactnessCondition sufficient_condition = CompactnessCondition::None;
};

double spectral_abscissa(const MatrixXd& M);

bool is_stable(const MatrixXd& M, const Tolerances& tol = default_tol());

bool pbh_stabilizable(const MatrixXd& A, const MatrixXd& B,
                      const Tolerances& tol = default_tol());

bool pbh_detectable(const MatrixXd& C, const MatrixXd& A,
                    const Tolerances& tol = default_tol());

bool is_controllable(const MatrixXd& A, const MatrixXd& B,
                     const Tolerances& tol = default_tol());

// True iff the column space of B lies inside the column space of B1.
bool image_inclusion(const MatrixXd& B, const MatrixXd& B1,
                     const Tolerances& tol = default_tol());

// Symmetric PSD square root; slightly negative eigenvalues are clamped to zero.
MatrixXd psd_sqrt(const MatrixXd& S);

StructuralReport structural_report(const Plant& plant,
                                   const std::optional<MatrixXd>& B1_override = {},
                                   const Tolerances& tol = default_tol());

// Numerical rank from singular values with a relative cutoff.
int numerical_rank(const MatrixXd& M, double rel_cutoff);

}  // namespace lqr
