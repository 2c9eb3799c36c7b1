#pragma once

namespace lqr {

// Shared numerical tolerances, tuned for desk-scale problems (n <= 32).
// Rank and definiteness decisions are relative to the largest singular value
// or eigenvalue of the matrix being tested; stability margins are absolute.
struct Tolerances {
  double stability_margin = 1e-9;  // eigenvalues must clear the imaginary axis by this
  double rank_rel = 1e-9;          // singular-value cutoff for rank decisions
  double cert_rank_rel = 1e-7;     // looser cutoff for certificate rank reporting
  double psd_rel = 1e-10;          // slack when validating positive semidefiniteness
  double lyap_residual_rel = 1e-9;
  double are_residual_rel = 1e-8;
  double axis_guard = 1e-8;        // minimum distance of Hamiltonian spectrum to the axis
};

inline const Tolerances& default_tol() {
  static const Tolerances t;
  return t;
}

}  // namespace lqr
