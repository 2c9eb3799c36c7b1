#include "lqr/example_suite.h"

#include <cmath>
#include <sstream>

#include "lqr/builtins.h"
#include "lqr/duality.h"
#include "lqr/errors.h"
#include "lqr/gramian.h"
#include "lqr/landscape.h"

namespace lqr {

namespace {

// Collects mismatches for one check; tolerances stretch with the CLI's --tol.
struct Harness {
  double scale = 1.0;
  std::ostringstream fail;

  void near(const std::string& label, double got, double want, double tol) {
    if (!(std::abs(got - want) <= tol * scale)) {
      fail << label << ": got " << got << ", want " << want << " +/- " << tol * scale
           << "; ";
    }
  }
  void near_mat(const std::string& label, const MatrixXd& got, const MatrixXd& want,
                double tol) {
    if (!((got - want).norm() <= tol * scale)) {
      fail << label << ": off by " << (got - want).norm() << " (tol " << tol * scale
           << "); ";
    }
  }
  void expect(const std::string& label, bool ok) {
    if (!ok) fail << label << "; ";
  }
};

std::string closed_forms_check(double scale) {
  Harness h{scale};
  const Plant plant = builtin_plant("single-integrator");
  for (double k : {0.5, 1.0, 2.0, 4.0}) {
    MatrixXd K(1, 1);
    K << -k;
    h.near("cost at k=" + std::to_string(k), cost(plant, K), k + 1.0 / k, 1e-10);
  }
  const RiccatiSolution rs = solve_care(plant);
  h.near("P_star", rs.P_star(0, 0), 2.0, 1e-12);
  h.near("K_star", rs.K_star(0, 0), -1.0, 1e-12);
  const DualityGap gap = duality_gap(plant);
  h.near("primal value", gap.primal, 2.0, 1e-10);
  h.near("dual value", gap.dual, 2.0, 1e-10);
  h.near("duality gap", gap.gap, 0.0, 1e-10);
  return h.fail.str();
}

std::string certificate_check(double scale) {
  Harness h{scale};
  const Plant plant = builtin_plant("single-integrator");
  MatrixXd P(1, 1);
  P << 2.0;
  const DualCertificate at_opt = dual_certificate(plant, P);
  MatrixXd M_expected(2, 2);
  M_expected << 1.0, 1.0, 1.0, 1.0;
  h.near_mat("certificate block at the optimum", at_opt.M, M_expected, 1e-9);
  h.expect("optimal certificate is feasible", at_opt.feasible);
  h.near("dual value at the optimum", at_opt.value, 2.0, 1e-12);

  P << 3.0;
  const DualCertificate beyond = dual_certificate(plant, P);
  h.expect("overshooting P is infeasible", !beyond.feasible);
  h.expect("overshooting P has a negative eigenvalue", beyond.lambda_min < 0.0);
  return h.fail.str();
}

std::string equal_costs_check(double scale) {
  Harness h{scale};
  const Plant plant = builtin_plant("coupled-pair", 0.1);
  MatrixXd X_first;
  for (double k : {-1.0, -2.0, -5.0}) {
    MatrixXd K(1, 2);
    K << k, k;
    h.near("cost at k=" + std::to_string(k), cost(plant, K), 1.0 / 1.1, 1e-8);
    const MatrixXd X = closed_loop_gramian(plant, K).X;
    if (X_first.size() == 0) {
      X_first = X;
    } else {
      h.near_mat("Gramian at k=" + std::to_string(k), X, X_first, 1e-8);
    }
  }
  const RiccatiSolution rs = solve_care(plant);
  h.near("optimal gain symmetry", rs.K_star(0, 0) - rs.K_star(0, 1), 0.0, 1e-8);
  h.near("Riccati gain cost", cost(plant, rs.K_star), 1.0 / 1.1, 1e-8);
  return h.fail.str();
}

std::string singular_lift_check(double scale) {
  Harness h{scale};
  const Plant plant = builtin_plant("coupled-pair", 0.1);
  const RiccatiSolution rs = solve_care(plant);
  MatrixXd K(1, 2);
  K << -1.0, -1.0;
  const EclPoint p = ecl_forward(plant, K, rs.K_star);
  bool threw = false;
  try {
    ecl_inverse(plant, p, rs.K_star);
  } catch (const SingularLiftError&) {
    threw = true;
  }
  h.expect("rank-deficient covariance rejects gain recovery", threw);
  threw = false;
  try {
    f_cvx_eval(plant, p, rs.K_star);
  } catch (const SingularLiftError&) {
    threw = true;
  }
  h.expect("rank-deficient covariance rejects the lifted objective", threw);
  return h.fail.str();
}

std::string lift_closed_forms_check(double scale) {
  Harness h{scale};
  const Plant plant = builtin_plant("single-integrator");
  const RiccatiSolution rs = solve_care(plant);
  MatrixXd K(1, 1);
  K << -2.0;
  const EclPoint p = ecl_forward(plant, K, rs.K_star);
  h.near("lifted Y", p.Y(0, 0), -0.5, 1e-12);
  h.near("lifted X", p.X(0, 0), 0.5, 1e-12);
  h.near("lifted objective", f_cvx_eval(plant, p, rs.K_star), 2.5, 1e-9);
  h.near("lifted objective equals the cost", f_cvx_eval(plant, p, rs.K_star),
         cost(plant, K), 1e-9);
  const MatrixXd K_back = ecl_inverse(plant, p, rs.K_star);
  h.near_mat("round trip", K_back, K, 1e-12);
  return h.fail.str();
}

std::string pl_constants_check(double scale) {
  Harness h{scale};
  const Plant plant = builtin_plant("single-integrator");
  const double nu = 2.5;
  const SublevelSample sample = sample_sublevel(plant, nu, 80, 777);
  const PlConstant pl = pl_constant(plant, nu, sample.gains);
  h.near("kappa_lo", pl.kappa_lo, 0.5, 1e-9);
  h.near("kappa_bar", pl.kappa_bar, 2.0, 1e-9);
  h.near("coupling operator norm", pl.op_norm, 1.0, 1e-9);
  h.near("mu_qg", pl.mu_qg, 0.5, 1e-9);
  h.near("c_lqr", pl.c_lqr, 0.125, 1e-9);
  h.near("mu", pl.mu, 0.0078125, 1e-9);
  return h.fail.str();
}

std::string trajectory_gramian_check(double scale) {
  Harness h{scale};
  const Plant unit = builtin_plant("unit-integrator");
  MatrixXd K(1, 1);
  K << -1.0;
  VectorXd x0(1);
  x0 << 1.0;
  const TrajectoryGramian sim = simulate_closed_loop(unit, K, x0, 40.0, 0.01);
  MatrixXd Z_expected(2, 2);
  Z_expected << 0.5, -0.5, -0.5, 0.5;
  h.near_mat("trajectory Gramian", sim.Z, Z_expected, 1e-6);

  const Plant single = builtin_plant("single-integrator");
  const TrajectoryGramian sim2 = simulate_closed_loop(single, K, x0, 0.0, 0.01);
  h.near("slow-loop state energy", sim2.Z(0, 0), 1.0, 1e-6);
  return h.fail.str();
}

std::string sandwich_check(double scale) {
  Harness h{scale};
  const Plant unit = builtin_plant("unit-integrator");
  VectorXd x0(1);
  x0 << 1.0;
  const Sandwich s = optimality_sandwich(unit, x0);
  h.near("relaxation value", s.J1, 1.0, 1e-8);
  h.near("best static cost", s.J2, 1.0, 1e-8);
  h.near("sandwich gap", s.gap, 0.0, 1e-8);

  MatrixXd K(1, 1);
  K << -1.0;
  const TrajectoryGramian sim = simulate_closed_loop(unit, K, x0, 40.0, 0.01);
  const SdpMembership mem = v_sdp_membership(unit, sim.Z, x0);
  h.expect("trajectory Gramian satisfies the affine constraint",
           mem.sdp_residual <= 1e-6 * scale);
  h.expect("trajectory Gramian is PSD", mem.psd_violation <= 1e-9 * scale);
  h.expect("trajectory Gramian has static structure",
           mem.static_structure_gap <= 1e-6 * scale);
  return h.fail.str();
}

std::string zero_noise_check(double scale) {
  Harness h{scale};
  const Plant plant = builtin_plant("coupled-pair", 0.1);
  const Plant silent = with_covariance(plant, MatrixXd::Zero(2, 2));
  const RiccatiSolution rs = solve_care(silent);
  const PrimalRecovery rec = kkt_primal_from_dual(silent, rs);
  h.near("primal variable collapses with the noise", rec.Z.norm(), 0.0, 1e-12);
  h.near("objective collapses with the noise", rec.objective, 0.0, 1e-12);
  return h.fail.str();
}

}  // namespace

const std::vector<ExampleCheck>& example_checks() {
  static const std::vector<ExampleCheck> checks = {
      {"closed-forms", "scalar instance: costs, Riccati solution, duality gap",
       closed_forms_check},
      {"dual-certificate", "certificate block at and beyond the optimum",
       certificate_check},
      {"equal-costs", "symmetric pair: one cost across distinct optimal gains",
       equal_costs_check},
      {"singular-lift", "rank-deficient covariance rejects the change of variables",
       singular_lift_check},
      {"lift-closed-forms", "lifted coordinates and objective at a known gain",
       lift_closed_forms_check},
      {"pl-constants", "gradient-dominance constants over a sampled sublevel set",
       pl_constants_check},
      {"trajectory-gramian", "quadrature Gramian against closed forms",
       trajectory_gramian_check},
      {"sandwich", "relaxation value equals the best static cost",
       sandwich_check},
      {"zero-noise", "zero covariance collapses the primal variable",
       zero_noise_check},
  };
  return checks;
}

}  // namespace lqr
