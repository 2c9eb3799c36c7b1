#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lqr/builtins.h"
#include "lqr/errors.h"
#include "lqr/landscape.h"
#include "lqr/lyap_riccati.h"
#include "lqr/random_instance.h"

using namespace lqr;

namespace {

// Shared fixture for the scalar plant: sublevel samples at nu = 2.5, the
// smoothness estimate over them, and the dominance constants.
struct ScalarSetup {
  Plant plant = builtin_plant("single-integrator");
  SublevelSample sample;
  double L_hat;
  PlConstant pl;

  ScalarSetup() {
    sample = sample_sublevel(plant, 2.5, 64, 0);
    L_hat = estimate_smoothness(plant, sample.gains, 0);
    pl = pl_constant(plant, 2.5, sample.gains);
  }
};

const ScalarSetup& scalar_setup() {
  static ScalarSetup s;
  return s;
}

}  // namespace

TEST_CASE("smoothness estimate lands in the pinned window", "[landscape][pgd]") {
  const auto& s = scalar_setup();
  CHECK(s.L_hat >= 16.0);
  CHECK(s.L_hat <= 24.0);
}

TEST_CASE("gradient descent contract on the scalar plant", "[landscape][pgd]") {
  const auto& s = scalar_setup();
  MatrixXd K0(1, 1);
  K0 << -0.5;
  const double alpha = 1.0 / s.L_hat;
  const PgdResult run = pgd_run(s.plant, K0, alpha, 200, 1e-8);
  REQUIRE(run.converged);
  CHECK(run.trace.back().dist_to_K_star <= 1e-6);

  const double J_star = 2.0;
  const double gamma = 1.0 - s.pl.mu / s.L_hat;
  for (std::size_t t = 1; t < run.trace.size(); ++t) {
    const double prev = run.trace[t - 1].J;
    const double cur = run.trace[t].J;
    CHECK(cur <= prev + 1e-12);  // monotone descent
    const double gap_prev = prev - J_star;
    if (gap_prev > 1e-12 * (1.0 + J_star)) {
      INFO("step " << t);
      CHECK((cur - J_star) <= gamma * gap_prev + 1e-12);
    }
  }
}

TEST_CASE("gradient descent contract on the stiff plant", "[landscape][pgd]") {
  const Plant plant = builtin_plant("stiff-pair");
  const RiccatiSolution sol = solve_care(plant);
  const double J_star = cost(plant, sol.K_star);
  const double nu = 2.0 * J_star;
  const SublevelSample sample = sample_sublevel(plant, nu, 64, 3);
  const double L_hat = estimate_smoothness(plant, sample.gains, 3);
  const PlConstant pl = pl_constant(plant, nu, sample.gains);

  const MatrixXd K0 = MatrixXd::Zero(1, 2);  // open loop is stable here
  const PgdResult run = pgd_run(plant, K0, 1.0 / L_hat, 5000, 1e-10);
  REQUIRE(run.converged);
  const double gamma = 1.0 - pl.mu / L_hat;
  for (std::size_t t = 1; t < run.trace.size(); ++t) {
    const double gap_prev = run.trace[t - 1].J - J_star;
    const double gap_cur = run.trace[t].J - J_star;
    CHECK(run.trace[t].J <= run.trace[t - 1].J + 1e-12);
    if (gap_prev > 1e-10 * (1.0 + J_star)) {
      INFO("step " << t);
      CHECK(gap_cur <= gamma * gap_prev + 1e-12);
    }
  }
}

TEST_CASE("gradient descent failures are loud", "[landscape][pgd][errors]") {
  const Plant plant = builtin_plant("single-integrator");
  MatrixXd K_bad(1, 1), K0(1, 1);
  K_bad << 1.0;
  K0 << -0.5;
  CHECK_THROWS_AS(pgd_run(plant, K_bad, 0.01, 10, 1e-8), StabilityError);
  // A step size far above 2/L breaks monotonicity immediately.
  CHECK_THROWS_AS(pgd_run(plant, K0, 1.0, 10, 1e-8), NumericalError);
}

TEST_CASE("sublevel sampler is deterministic and respects the level", "[landscape][sampling]") {
  const Plant plant = builtin_plant("single-integrator");
  const SublevelSample a = sample_sublevel(plant, 2.5, 40, 11);
  const SublevelSample b = sample_sublevel(plant, 2.5, 40, 11);
  REQUIRE(a.gains.size() == 40);
  REQUIRE(b.gains.size() == 40);
  for (std::size_t i = 0; i < a.gains.size(); ++i) {
    CHECK((a.gains[i] - b.gains[i]).norm() == 0.0);
    const double J = cost(plant, a.gains[i]);
    CHECK(J <= 2.5 * (1.0 + 1e-9));
  }
}

TEST_CASE("sampling terminates on unbounded sublevel sets", "[landscape][sampling]") {
  // The coupled pair has an entire unbounded line of optimal gains, so rays
  // along it never exit the sublevel set; the cap must kick in.
  const Plant plant = builtin_plant("coupled-pair", 0.1);
  const SublevelSample s = sample_sublevel(plant, 1.0, 30, 5);
  REQUIRE(s.gains.size() == 30);
  double max_norm = 0.0;
  for (const MatrixXd& K : s.gains) {
    CHECK(cost(plant, K) <= 1.0 * (1.0 + 1e-9));
    max_norm = std::max(max_norm, K.norm());
  }
  // Rays near the flat direction run two orders of magnitude past the optimal
  // gain before the boundary (or the cap) stops them.
  CHECK(max_norm > 10.0);
}

TEST_CASE("coupling operator norm", "[landscape]") {
  const auto& s = scalar_setup();
  const RiccatiSolution sol = solve_care(s.plant);
  CHECK(operator_norm_Astar_inv_B(s.plant, sol.K_star) ==
        Catch::Approx(1.0).epsilon(1e-12));

  // With no input coupling the operator vanishes identically.
  MatrixXd A(1, 1), B(1, 1), one(1, 1);
  A << -1.0;
  B << 0.0;
  one << 1.0;
  const Plant decoupled = make_plant(A, B, one, one, one);
  CHECK(operator_norm_Astar_inv_B(decoupled, MatrixXd::Zero(1, 1)) == 0.0);
}

TEST_CASE("dominance constants: structure and preconditions", "[landscape][pl]") {
  const auto& s = scalar_setup();
  CHECK(s.pl.mu == Catch::Approx(s.pl.mu_qg * s.pl.c_lqr * s.pl.c_lqr).epsilon(1e-12));
  CHECK(s.pl.kappa_lo > 0.0);
  CHECK(s.pl.kappa_lo <= s.pl.kappa_bar);
  CHECK(std::isfinite(s.pl.kappa_closed_form));  // Q and W are both PD here

  // Factored singular noise: constants exist but the closed form does not.
  const Plant stiff = builtin_plant("stiff-pair");
  const double nu = 2.0 * cost(stiff, solve_care(stiff).K_star);
  const SublevelSample sample = sample_sublevel(stiff, nu, 32, 9);
  const PlConstant pl = pl_constant(stiff, nu, sample.gains);
  CHECK(pl.mu > 0.0);
  CHECK(std::isnan(pl.kappa_closed_form));

  // No compactness certificate at all: refuse rather than emit constants.
  const Plant coupled = builtin_plant("coupled-pair", 0.1);
  const SublevelSample cs = sample_sublevel(coupled, 1.0, 8, 2);
  CHECK_THROWS_AS(pl_constant(coupled, 1.0, cs.gains), AssumptionError);
}

TEST_CASE("dominance holds inside, degrades far outside", "[landscape][pl]") {
  const auto& s = scalar_setup();
  const PlCheckResult inside = pl_check(s.plant, s.pl.mu, s.sample.gains);
  CHECK(inside.violations == 0);
  CHECK(inside.worst_ratio <= 1.0 + 1e-6);

  // The inequality is local to the sublevel set: far out along the flat
  // direction the ratio grows without bound.
  MatrixXd K_near(1, 1), K_far(1, 1);
  K_near << -10.0;
  K_far << -1000.0;
  const PlCheckResult out = pl_check(s.plant, s.pl.mu, {K_near, K_far});
  REQUIRE(out.rows.size() == 2);
  CHECK(out.rows[1].ratio / out.rows[0].ratio > 100.0);
}

TEST_CASE("convex lift round trip and objective agreement", "[landscape][ecl]") {
  for (unsigned seed = 0; seed < 15; ++seed) {
    const Plant plant = random_plant(seed);
    const RiccatiSolution sol = solve_care(plant);
    for (const MatrixXd& K : random_stabilizing_gains(plant, 2, seed + 600)) {
      const EclPoint p = ecl_forward(plant, K, sol.K_star);
      const MatrixXd K_back = ecl_inverse(plant, p, sol.K_star);
      INFO("seed=" << seed);
      CHECK((K_back - K).norm() <= 1e-12 * (1.0 + K.norm()));
      const double f = f_cvx_eval(plant, p, sol.K_star);
      const double J = cost(plant, K);
      CHECK(std::abs(f - J) <= 1e-9 * (1.0 + std::abs(J)));
    }
  }
}

TEST_CASE("lifted objective is convex along segments", "[landscape][ecl]") {
  // Midpoint convexity between lifted images of two stabilizing gains. The
  // domain {(Y, X) : X > 0} is convex, so the midpoint is admissible.
  const Plant plant = builtin_plant("stiff-pair");
  const RiccatiSolution sol = solve_care(plant);
  MatrixXd Ka(1, 2), Kb(1, 2);
  Ka << -0.3, -0.7;
  Kb << -2.0, 0.4;
  const EclPoint pa = ecl_forward(plant, Ka, sol.K_star);
  const EclPoint pb = ecl_forward(plant, Kb, sol.K_star);
  EclPoint mid;
  mid.Y = 0.5 * (pa.Y + pb.Y);
  mid.X = 0.5 * (pa.X + pb.X);
  const double f_mid = f_cvx_eval(plant, mid, sol.K_star);
  const double chord =
      0.5 * (f_cvx_eval(plant, pa, sol.K_star) + f_cvx_eval(plant, pb, sol.K_star));
  CHECK(f_mid <= chord + 1e-10 * (1.0 + std::abs(chord)));
}

TEST_CASE("lifted gradient matches directional differences", "[landscape][ecl]") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> gauss;
  for (unsigned seed = 0; seed < 8; ++seed) {
    const Plant plant = random_plant(seed);
    const RiccatiSolution sol = solve_care(plant);
    const auto gains = random_stabilizing_gains(plant, 1, seed + 71);
    const EclPoint p = ecl_forward(plant, gains[0], sol.K_star);

    MatrixXd dY(plant.m, plant.n), dG(plant.n, plant.n);
    for (int i = 0; i < plant.m; ++i)
      for (int j = 0; j < plant.n; ++j) dY(i, j) = gauss(rng);
    for (int i = 0; i < plant.n; ++i)
      for (int j = 0; j < plant.n; ++j) dG(i, j) = gauss(rng);
    const MatrixXd dX = 0.5 * (dG + dG.transpose());

    Eigen::SelfAdjointEigenSolver<MatrixXd> es(p.X, Eigen::EigenvaluesOnly);
    const double h = 1e-6 * es.eigenvalues().minCoeff() / (1.0 + dX.norm());
    auto shifted = [&](double t) {
      EclPoint q;
      q.Y = p.Y + t * dY;
      q.X = p.X + t * dX;
      return f_cvx_eval(plant, q, sol.K_star);
    };
    const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
    const FcvxGradient g = f_cvx_grad(plant, p, sol.K_star);
    const double analytic =
        (g.dY.array() * dY.array()).sum() + (g.dX.array() * dX.array()).sum();
    INFO("seed=" << seed);
    CHECK(std::abs(fd - analytic) <= 1e-5 * (1.0 + std::abs(analytic)));
  }
}

TEST_CASE("singular covariance block is rejected by the lift", "[landscape][ecl]") {
  const Plant plant = builtin_plant("coupled-pair", 0.1);
  const RiccatiSolution sol = solve_care(plant);
  MatrixXd K(1, 2);
  K << -1.0, -1.0;
  const EclPoint p = ecl_forward(plant, K, sol.K_star);
  CHECK_THROWS_AS(ecl_inverse(plant, p, sol.K_star), SingularLiftError);
  CHECK_THROWS_AS(f_cvx_eval(plant, p, sol.K_star), SingularLiftError);
  CHECK_THROWS_AS(f_cvx_grad(plant, p, sol.K_star), SingularLiftError);
}

TEST_CASE("quadratic growth and the Cauchy bridge", "[landscape][pl]") {
  const Plant plant = builtin_plant("stiff-pair");
  const RiccatiSolution sol = solve_care(plant);
  const double nu = 2.0 * cost(plant, sol.K_star);
  const SublevelSample sample = sample_sublevel(plant, nu, 120, 555);
  const PlConstant pl = pl_constant(plant, nu, sample.gains);

  const QuadraticGrowthResult qg =
      quadratic_growth_check(plant, pl.mu_qg, sample.gains);
  CHECK(qg.violations == 0);
  CHECK(qg.worst_ratio <= 1.0 + 1e-6);

  const CauchyBridgeResult bridge =
      cauchy_bridge_check(plant, pl.c_lqr, sample.gains);
  CHECK(bridge.violations == 0);
  CHECK(bridge.worst_slack >= -1e-9);
}

TEST_CASE("Cauchy direction on a scalar oracle", "[landscape][cauchy]") {
  auto h = [](const VectorXd& x) { return x(0) * x(0) - x(0) - 3.0; };
  auto grad = [](const VectorXd& x) {
    VectorXd g(1);
    g(0) = 2.0 * x(0) - 1.0;
    return g;
  };
  VectorXd x(1), x_star(1);
  x << 2.0;
  x_star << 0.5;
  const CauchyDirection c = cauchy_direction(h, grad, x, x_star);
  CHECK(c.g_c(0) == Catch::Approx(3.0).epsilon(1e-12));
  CHECK(c.norm == Catch::Approx(3.0).epsilon(1e-12));
  CHECK(c.value == Catch::Approx(-1.0).epsilon(1e-12));
  CHECK(c.value_star == Catch::Approx(-3.25).epsilon(1e-12));
  CHECK(c.secant_bound == Catch::Approx(1.5).epsilon(1e-12));
  CHECK(c.norm >= c.secant_bound);  // convexity of h
}

TEST_CASE("slice curvature matches the quadratic restriction and flattens",
          "[landscape][slice]") {
  // Restricting the cost to K = [k, -b-k] gives an exactly quadratic function
  // of k (solve the 2x2 Lyapunov system by hand: the denominator is free of
  // k), with minimizer at the symmetry point k = -b/2 and constant curvature
  //   40 (11 b + 38) / (11 (10 b^2 + 29 b + 18)).
  auto curvature_at = [](double b) {
    const Plant plant = builtin_plant("coupled-pair", 0.1);
    auto gain_of = [b](double k) {
      MatrixXd K(1, 2);
      K << k, -b - k;
      return K;
    };
    const double closed_form = 40.0 * (11.0 * b + 38.0) /
                               (11.0 * (10.0 * b * b + 29.0 * b + 18.0));
    const HessianSlice slice =
        hessian_slice(plant, gain_of, -b / 2.0 - 5.0, -b / 2.0 + 5.0, closed_form);
    CHECK(slice.formula == closed_form);  // diagnostic passes through untouched
    CHECK(slice.k_min == Catch::Approx(-b / 2.0).margin(1e-6));
    CHECK(slice.curvature == Catch::Approx(closed_form).epsilon(1e-6));
    return slice.curvature;
  };
  const double c1 = curvature_at(1.0);
  const double c10 = curvature_at(10.0);
  CHECK(c1 == Catch::Approx(1960.0 / 627.0).epsilon(1e-7));
  CHECK(c10 < c1);
}

TEST_CASE("landscape grid is row-major with unstable cells marked", "[landscape][grid]") {
  const Plant plant = builtin_plant("coupled-pair", 0.1);
  auto gain_of = [](double k1, double k2) {
    MatrixXd K(1, 2);
    K << k1, k2;
    return K;
  };
  const int n1 = 5, n2 = 4;
  const auto grid = landscape_grid(plant, gain_of, -2.0, 2.0, n1, -2.0, 2.0, n2);
  REQUIRE(grid.size() == static_cast<std::size_t>(n1 * n2));
  int unstable = 0, stable = 0;
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j) {
      const GridPoint& g = grid[static_cast<std::size_t>(i) * n2 + j];
      CHECK(g.k1 == Catch::Approx(-2.0 + 4.0 * i / (n1 - 1)).margin(1e-12));
      CHECK(g.k2 == Catch::Approx(-2.0 + 4.0 * j / (n2 - 1)).margin(1e-12));
      if (std::isnan(g.J)) {
        ++unstable;
      } else {
        ++stable;
        CHECK(g.J > 0.0);
      }
    }
  CHECK(unstable > 0);  // (2, 2) has positive closed-loop trace
  CHECK(stable > 0);
}
