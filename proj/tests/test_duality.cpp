#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "lqr/builtins.h"
#include "lqr/duality.h"
#include "lqr/errors.h"
#include "lqr/lyap_riccati.h"
#include "lqr/random_instance.h"

using namespace lqr;

namespace {

// Draw a dual-feasible point by perturbing P_star and halving the step until
// the constraint block is PSD again. Always terminates: s = 0 is feasible.
MatrixXd feasible_dual_point(const Plant& plant, const MatrixXd& P_star,
                             std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  MatrixXd G(plant.n, plant.n);
  for (int i = 0; i < plant.n; ++i)
    for (int j = 0; j < plant.n; ++j) G(i, j) = gauss(rng);
  G = MatrixXd(0.5 * (G + G.transpose())) * (1.0 + P_star.norm());
  double s = 1.0;
  while (s > 1e-14 && !dual_certificate(plant, P_star + s * G).feasible) s *= 0.5;
  return dual_certificate(plant, P_star + s * G).feasible ? P_star + s * G : P_star;
}

}  // namespace

TEST_CASE("constraint block on the single integrator", "[duality]") {
  const Plant plant = builtin_plant("single-integrator");
  MatrixXd P(1, 1);
  P << 2.0;
  const DualCertificate at_opt = dual_certificate(plant, P);
  MatrixXd expected(2, 2);
  expected << 1, 1, 1, 1;
  CHECK((at_opt.M - expected).norm() < 1e-12);
  CHECK(at_opt.feasible);
  CHECK(at_opt.value == Catch::Approx(2.0));
  CHECK(std::abs(at_opt.lambda_min) < 1e-12);

  P << 3.0;
  const DualCertificate above = dual_certificate(plant, P);
  CHECK_FALSE(above.feasible);
  CHECK(above.lambda_min < -0.4);
}

TEST_CASE("primal lift carries the cost and satisfies the affine constraint",
          "[duality]") {
  for (unsigned seed = 0; seed < 15; ++seed) {
    const Plant plant = random_plant(seed);
    for (const MatrixXd& K : random_stabilizing_gains(plant, 2, seed + 300)) {
      const PrimalLift lift = lift_primal(plant, K);
      const double J = cost(plant, K);
      INFO("seed=" << seed);
      CHECK(std::abs(lift.objective - J) <= 1e-9 * (1.0 + J));
      CHECK(lift.affine_residual <= 1e-8 * (1.0 + lift.Z.norm()));
      CHECK((lift.Z - lift.Z.transpose()).norm() == 0.0);
      // The lift is PSD by construction: it is a congruence of the Gramian.
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(lift.Z, Eigen::EigenvaluesOnly);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9 * (1.0 + lift.Z.norm()));
    }
  }
}

TEST_CASE("weak duality and maximality of the dual value", "[duality]") {
  std::mt19937_64 rng(7);
  for (unsigned seed = 0; seed < 10; ++seed) {
    const Plant plant = random_plant(seed);
    const RiccatiSolution sol = solve_care(plant);
    const double dual_opt = dual_certificate(plant, sol.P_star).value;
    const auto gains = random_stabilizing_gains(plant, 2, seed + 41);
    for (int trial = 0; trial < 5; ++trial) {
      const MatrixXd P_hat = feasible_dual_point(plant, sol.P_star, rng);
      const double dual_val = (plant.W * P_hat).trace();
      INFO("seed=" << seed << " trial=" << trial);
      // Every feasible dual value sits below every achievable cost...
      for (const MatrixXd& K : gains) {
        const double J = cost(plant, K);
        CHECK(dual_val <= J + 1e-8 * (1.0 + std::abs(J)));
      }
      // ...and below the optimal dual value.
      CHECK(dual_val <= dual_opt + 1e-8 * (1.0 + std::abs(dual_opt)));
    }
  }
}

TEST_CASE("KKT recovery closes the duality gap", "[duality]") {
  for (unsigned seed = 0; seed < 15; ++seed) {
    const Plant plant = random_plant(seed);
    const RiccatiSolution sol = solve_care(plant);
    const PrimalRecovery rec = kkt_primal_from_dual(plant, sol);
    const double dual_val = (plant.W * sol.P_star).trace();
    INFO("seed=" << seed);
    CHECK(std::abs(rec.objective - dual_val) <= 1e-8 * (1.0 + std::abs(dual_val)));
    CHECK(rec.affine_residual <= 1e-8 * (1.0 + rec.Z.norm()));

    const DualityGap gap = duality_gap(plant);
    CHECK(std::abs(gap.gap) <= 1e-8 * (1.0 + std::abs(gap.primal)));
    CHECK(gap.primal == Catch::Approx(cost(plant, sol.K_star)).epsilon(1e-12));
  }
}

TEST_CASE("complementary slackness and strictness under definite noise",
          "[duality]") {
  for (unsigned seed = 0; seed < 15; ++seed) {
    const Plant plant = random_plant(seed);  // W is positive definite here
    const RiccatiSolution sol = solve_care(plant);
    const PrimalRecovery rec = kkt_primal_from_dual(plant, sol);
    const Complementarity comp = complementarity(plant, rec.Z, sol.P_star);
    const double scale =
        1.0 + rec.Z.norm() * lmi_matrix(plant, sol.P_star).norm();
    INFO("seed=" << seed);
    CHECK(std::abs(comp.slackness) <= 1e-7 * scale);
    CHECK(comp.rank_Z == plant.n);
    CHECK(comp.rank_M == plant.m);
    CHECK(comp.strict);
  }
}

TEST_CASE("strictness survives factored singular noise", "[duality]") {
  const Plant plant = builtin_plant("stiff-pair");
  const RiccatiSolution sol = solve_care(plant);
  const PrimalRecovery rec = kkt_primal_from_dual(plant, sol);
  const Complementarity comp = complementarity(plant, rec.Z, sol.P_star);
  // W = BB' is rank one, but the closed-loop Gramian is still full rank
  // because (A + BK_star, B) is controllable.
  CHECK(comp.rank_Z == 2);
  CHECK(comp.rank_M == 1);
  CHECK(comp.strict);
}

TEST_CASE("degenerate noise breaks strictness and uniqueness", "[duality]") {
  const Plant plant = builtin_plant("coupled-pair", 0.1);
  const RiccatiSolution sol = solve_care(plant);
  const PrimalRecovery rec = kkt_primal_from_dual(plant, sol);
  const Complementarity comp = complementarity(plant, rec.Z, sol.P_star);
  CHECK(comp.rank_Z == 1);
  CHECK_FALSE(comp.strict);

  // Many distinct gains attain the optimal value: the dual certificate cannot
  // separate them, which is exactly the failure of strict complementarity.
  const double J_opt = (plant.W * sol.P_star).trace();
  for (double k : {-1.0, -2.0, -5.0}) {
    MatrixXd K(1, 2);
    K << k, k;
    CHECK(cost(plant, K) == Catch::Approx(J_opt).epsilon(1e-8));
  }
  // And the Riccati gain itself lies on that slice.
  CHECK(sol.K_star(0, 0) == Catch::Approx(sol.K_star(0, 1)).epsilon(1e-8));
}
