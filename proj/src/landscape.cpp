#include "lqr/landscape.h"

#include <Eigen/Eigenvalues>
#include <atomic>
#include <cmath>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>

#include "lqr/errors.h"

namespace lqr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Cost of K, or nullopt when K is not stabilizing. Used where instability is
// an expected outcome (sampling, grids) rather than an error.
std::optional<double> try_cost(const Plant& plant, const MatrixXd& K,
                               const Tolerances& tol) {
  if (!is_stable(plant.A + plant.B * K, tol)) return std::nullopt;
  return cost(plant, K, tol);
}

double lambda_min_sym(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double lambda_max_sym(const MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double spectral_norm(const MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues()(0);
}

}  // namespace

PgdResult pgd_run(const Plant& plant, const MatrixXd& K0, double alpha,
                  int max_iters, double grad_tol, const Tolerances& tol) {
  if (alpha <= 0.0) throw AssumptionError("step size must be positive");
  const RiccatiSolution riccati = solve_care(plant, tol);

  PgdResult res;
  res.converged = false;
  MatrixXd K = K0;
  double J_prev = kInf;
  for (int it = 0; it <= max_iters; ++it) {
    const double abscissa = spectral_abscissa(plant.A + plant.B * K);
    if (abscissa >= -tol.stability_margin) {
      std::ostringstream os;
      os << "gradient iterate " << it << " left the stabilizing set (abscissa "
         << abscissa << ", step " << alpha << ")";
      throw StabilityError(os.str(), abscissa);
    }
    const double J = cost(plant, K, tol);
    if (J > J_prev + 1e-12 * (1.0 + std::abs(J_prev))) {
      std::ostringstream os;
      os << "cost increased at iteration " << it << " (" << J_prev << " -> " << J
         << "); the step size is too large for this sublevel set";
      throw NumericalError(os.str());
    }
    J_prev = J;
    const MatrixXd G = gradient(plant, K, tol);
    const double gn = G.norm();
    res.trace.push_back({it, J, gn, (K - riccati.K_star).norm()});
    if (gn <= grad_tol) {
      res.converged = true;
      break;
    }
    if (it == max_iters) break;
    K -= alpha * G;
  }
  res.K_final = K;
  return res;
}

double estimate_smoothness(const Plant& plant, const std::vector<MatrixXd>& samples,
                           std::uint64_t seed, const Tolerances& tol) {
  if (samples.empty()) throw AssumptionError("smoothness estimate needs samples");
  double nu_hat = -kInf;
  for (const auto& K : samples) {
    const auto J = try_cost(plant, K, tol);
    if (!J) throw StabilityError("smoothness sample is not stabilizing",
                                 spectral_abscissa(plant.A + plant.B * K));
    nu_hat = std::max(nu_hat, *J);
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr int directions_per_sample = 3;

  double max_dd = 0.0;
  bool any = false;
  for (const auto& K : samples) {
    const double J0 = *try_cost(plant, K, tol);
    const double h = 1e-4 * (1.0 + K.norm());
    for (int d = 0; d < directions_per_sample; ++d) {
      MatrixXd D(plant.m, plant.n);
      for (Eigen::Index i = 0; i < D.size(); ++i) D.data()[i] = gauss(rng);
      const double dn = D.norm();
      if (dn == 0.0) continue;
      D /= dn;
      // Only probe pairs that stay inside the sublevel set; the constant being
      // estimated is a property of the set, not of its exterior.
      const auto Jp = try_cost(plant, K + h * D, tol);
      const auto Jm = try_cost(plant, K - h * D, tol);
      if (!Jp || !Jm || *Jp > nu_hat || *Jm > nu_hat) continue;
      const double dd = (*Jp - 2.0 * J0 + *Jm) / (h * h);
      max_dd = std::max(max_dd, std::abs(dd));
      any = true;
    }
  }
  if (!any) {
    throw NumericalError("no admissible second-difference pair inside the sublevel set");
  }
  return 1.5 * max_dd;
}

SublevelSample sample_sublevel(const Plant& plant, double nu, int count,
                               std::uint64_t seed, const Tolerances& tol) {
  const RiccatiSolution riccati = solve_care(plant, tol);
  const double J_star = cost(plant, riccati.K_star, tol);
  if (!(nu > J_star * (1.0 + 1e-12))) {
    throw AssumptionError("sublevel threshold must exceed the optimal cost");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  const auto feasible = [&](const MatrixXd& K) {
    const auto J = try_cost(plant, K, tol);
    return J && *J <= nu;
  };

  // Rays along which the sublevel set never closes are cut here so the search
  // terminates; the capped endpoint still lands inside the set.
  const double cap = 1e3 * (1.0 + riccati.K_star.norm());

  SublevelSample out;
  out.nu = nu;
  out.rejected = 0;
  long attempts = 0;
  while (static_cast<int>(out.gains.size()) < count) {
    ++attempts;
    if (attempts > 1000 && static_cast<double>(out.gains.size()) < 1e-3 * attempts) {
      throw SamplingError("sublevel sampling acceptance rate fell below 0.1%");
    }
    MatrixXd D(plant.m, plant.n);
    for (Eigen::Index i = 0; i < D.size(); ++i) D.data()[i] = gauss(rng);
    const double dn = D.norm();
    if (dn == 0.0) continue;
    D /= dn;

    double t_lo = 0.0;
    double t_hi = 1.0;
    while (t_hi < cap && feasible(riccati.K_star + t_hi * D)) {
      t_lo = t_hi;
      t_hi *= 2.0;
    }
    double t_boundary;
    if (t_hi >= cap) {
      t_boundary = cap;
    } else {
      // Bisect to the boundary; t_lo stays on the feasible side throughout.
      while (t_hi - t_lo > 1e-13 * std::max(1.0, t_hi)) {
        const double mid = 0.5 * (t_lo + t_hi);
        if (feasible(riccati.K_star + mid * D)) {
          t_lo = mid;
        } else {
          t_hi = mid;
        }
      }
      t_boundary = t_lo;
    }

    const MatrixXd K_boundary = riccati.K_star + t_boundary * D;
    if (feasible(K_boundary)) {
      out.gains.push_back(K_boundary);
    } else {
      ++out.rejected;
    }
    if (static_cast<int>(out.gains.size()) >= count) break;

    const MatrixXd K_inner = riccati.K_star + unif(rng) * t_boundary * D;
    if (feasible(K_inner)) {
      out.gains.push_back(K_inner);
    } else {
      ++out.rejected;
    }
  }
  return out;
}

double operator_norm_Astar_inv_B(const Plant& plant, const MatrixXd& K_star,
                                 const Tolerances& tol) {
  const MatrixXd F = plant.A + plant.B * K_star;
  const double abscissa = spectral_abscissa(F);
  if (abscissa >= -tol.stability_margin) {
    throw StabilityError("operator norm needs a stabilizing gain", abscissa);
  }
  const Eigen::Index n = plant.n;
  const Eigen::Index m = plant.m;
  const MatrixXd eye = MatrixXd::Identity(n, n);

  MatrixXd MA = Eigen::kroneckerProduct(eye, F).eval();
  MA += Eigen::kroneckerProduct(F, eye);

  // vec(B Y + Y' B') = (I + T) (I kron B) vec(Y), with T the commutation
  // matrix sending vec(M) to vec(M').
  MatrixXd T = MatrixXd::Zero(n * n, n * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      T(j * n + i, i * n + j) = 1.0;
    }
  }
  MatrixXd MB = Eigen::kroneckerProduct(eye, plant.B).eval();
  MB = (MatrixXd::Identity(n * n, n * n) + T) * MB;

  const MatrixXd composite = -MA.partialPivLu().solve(MB);
  if (composite.size() == 0 || m == 0) return 0.0;
  return spectral_norm(composite);
}

PlConstant pl_constant(const Plant& plant, double nu,
                       const std::vector<MatrixXd>& samples, const Tolerances& tol) {
  const StructuralReport rep = structural_report(plant, {}, tol);
  if (rep.sufficient_condition != CompactnessCondition::PositiveCovariance &&
      rep.sufficient_condition != CompactnessCondition::FactoredCovariance) {
    throw AssumptionError(
        "gradient-dominance constants need a verified compactness condition "
        "(positive-definite noise, or a factored covariance with definite state cost)");
  }
  const RiccatiSolution riccati = solve_care(plant, tol);
  const double J_star = cost(plant, riccati.K_star, tol);
  if (!(nu > J_star)) throw AssumptionError("sublevel threshold must exceed the optimal cost");

  PlConstant out;
  out.nu = nu;
  const MatrixXd X_star = closed_loop_gramian(plant, riccati.K_star, tol).X;
  out.kappa_lo = lambda_min_sym(X_star);
  out.kappa_bar = lambda_max_sym(X_star);
  for (const auto& K : samples) {
    const MatrixXd X = closed_loop_gramian(plant, K, tol).X;
    out.kappa_lo = std::min(out.kappa_lo, lambda_min_sym(X));
    out.kappa_bar = std::max(out.kappa_bar, lambda_max_sym(X));
  }
  if (!(out.kappa_lo > 0.0)) {
    throw NumericalError("sampled Gramians are not uniformly positive definite");
  }

  out.op_norm = operator_norm_Astar_inv_B(plant, riccati.K_star, tol);
  const double r_min = lambda_min_sym(plant.R);
  out.mu_qg = std::min(r_min / out.kappa_bar,
                       out.op_norm > 0.0
                           ? r_min / (out.kappa_bar * out.op_norm * out.op_norm)
                           : kInf);
  if (!std::isfinite(out.mu_qg)) out.mu_qg = r_min / out.kappa_bar;

  const double root = std::sqrt((nu - J_star) / (out.kappa_lo * r_min));
  out.c_lqr = (out.kappa_lo * std::sqrt(static_cast<double>(plant.n)) / 2.0) /
              (1.0 + root);
  out.mu = out.mu_qg * out.c_lqr * out.c_lqr;

  const double q_min = lambda_min_sym(plant.Q);
  const double w_min = lambda_min_sym(plant.W);
  if (q_min > 0.0 && w_min > 0.0) {
    const double denom = spectral_norm(plant.A) / std::sqrt(q_min) +
                         spectral_norm(plant.B) / std::sqrt(r_min);
    out.kappa_closed_form =
        denom > 0.0 ? (w_min * w_min / 4.0) / (denom * denom)
                    : std::numeric_limits<double>::quiet_NaN();
  } else {
    out.kappa_closed_form = std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

PlCheckResult pl_check(const Plant& plant, double mu,
                       const std::vector<MatrixXd>& samples, const Tolerances& tol) {
  const RiccatiSolution riccati = solve_care(plant, tol);
  const double J_star = cost(plant, riccati.K_star, tol);

  PlCheckResult res;
  res.worst_ratio = 0.0;
  res.violations = 0;
  int id = 0;
  for (const auto& K : samples) {
    PlCheckRow row;
    row.sample_id = id++;
    row.J = cost(plant, K, tol);
    row.grad_norm_sq = gradient(plant, K, tol).squaredNorm();
    const double num = mu * (row.J - J_star);
    const double den = 0.5 * row.grad_norm_sq;
    if (den <= 1e-300) {
      row.ratio = num <= 1e-12 * (1.0 + std::abs(J_star)) ? 0.0 : kInf;
    } else {
      row.ratio = num / den;
    }
    res.worst_ratio = std::max(res.worst_ratio, row.ratio);
    if (row.ratio > 1.0 + 1e-6) ++res.violations;
    res.rows.push_back(row);
  }
  return res;
}

EclPoint ecl_forward(const Plant& plant, const MatrixXd& K, const MatrixXd& K_star,
                     const Tolerances& tol) {
  EclPoint p;
  p.X = closed_loop_gramian(plant, K, tol).X;
  p.Y = (K - K_star) * p.X;
  return p;
}

MatrixXd ecl_inverse(const Plant& plant, const EclPoint& point, const MatrixXd& K_star,
                     const Tolerances& tol) {
  if (numerical_rank(point.X, tol.rank_rel) != static_cast<int>(plant.n)) {
    throw SingularLiftError(
        "lifted covariance is singular, the gain cannot be recovered from (Y, X)");
  }
  // K = K_star + Y X^{-1}; X is symmetric PD here, so solve through LDLT.
  const MatrixXd YXinv = point.X.ldlt().solve(point.Y.transpose()).transpose();
  return K_star + YXinv;
}

namespace {

// Residual of the affine constraint tying the lifted pair to the plant:
// A_*(X) + B Y + Y' B' + W = 0 on the image of the change of variables.
double ecl_affine_residual(const Plant& plant, const EclPoint& point,
                           const MatrixXd& K_star) {
  const MatrixXd F = plant.A + plant.B * K_star;
  return (F * point.X + point.X * F.transpose() + plant.B * point.Y +
          point.Y.transpose() * plant.B.transpose() + plant.W)
      .norm();
}

void warn_if_off_manifold(const Plant& plant, const EclPoint& point,
                          const MatrixXd& K_star, const char* where) {
  const double r = ecl_affine_residual(plant, point, K_star);
  if (r > 1e-6 * (1.0 + point.X.norm())) {
    // Evaluating off the manifold is legitimate (finite differencing does it
    // on purpose), so warn once per process instead of flooding stderr.
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
      std::cerr << "warning: " << where << ": lifted point violates the affine "
                << "constraint (residual " << r << "); value is an extension off "
                << "the feasible image (further warnings suppressed)\n";
    }
  }
}

}  // namespace

double f_cvx_eval(const Plant& plant, const EclPoint& point, const MatrixXd& K_star,
                  const Tolerances& tol) {
  if (numerical_rank(point.X, tol.rank_rel) != static_cast<int>(plant.n)) {
    throw SingularLiftError("lifted objective needs a nonsingular covariance block");
  }
  warn_if_off_manifold(plant, point, K_star, "f_cvx_eval");
  const MatrixXd Q_star = plant.Q + K_star.transpose() * plant.R * K_star;
  const MatrixXd XinvYt = point.X.ldlt().solve(point.Y.transpose());  // X^{-1} Y'
  double value = (Q_star * point.X).trace();
  value += (XinvYt * plant.R * point.Y).trace();
  value += 2.0 * (K_star.transpose() * plant.R * point.Y).trace();
  return value;
}

FcvxGradient f_cvx_grad(const Plant& plant, const EclPoint& point,
                        const MatrixXd& K_star, const Tolerances& tol) {
  if (numerical_rank(point.X, tol.rank_rel) != static_cast<int>(plant.n)) {
    throw SingularLiftError("lifted gradient needs a nonsingular covariance block");
  }
  warn_if_off_manifold(plant, point, K_star, "f_cvx_grad");
  const MatrixXd Q_star = plant.Q + K_star.transpose() * plant.R * K_star;
  const MatrixXd Xinv = point.X.ldlt().solve(MatrixXd::Identity(plant.n, plant.n));
  FcvxGradient g;
  g.dY = 2.0 * plant.R * point.Y * Xinv + 2.0 * plant.R * K_star;
  const MatrixXd S = Xinv * point.Y.transpose() * plant.R * point.Y * Xinv;
  g.dX = Q_star - 0.5 * (S + S.transpose());
  return g;
}

QuadraticGrowthResult quadratic_growth_check(const Plant& plant, double mu_qg,
                                             const std::vector<MatrixXd>& samples,
                                             const Tolerances& tol) {
  const RiccatiSolution riccati = solve_care(plant, tol);
  const double f_star = cost(plant, riccati.K_star, tol);
  const MatrixXd X_star = closed_loop_gramian(plant, riccati.K_star, tol).X;

  QuadraticGrowthResult res;
  res.worst_ratio = 0.0;
  res.violations = 0;
  for (const auto& K : samples) {
    const EclPoint p = ecl_forward(plant, K, riccati.K_star, tol);
    const double f = f_cvx_eval(plant, p, riccati.K_star, tol);
    const double dist_sq = p.Y.squaredNorm() + (p.X - X_star).squaredNorm();
    const double rhs = 0.5 * mu_qg * dist_sq;
    const double gap = f - f_star;
    double ratio;
    if (gap <= 1e-15 * (1.0 + std::abs(f_star))) {
      ratio = rhs <= 1e-12 ? 0.0 : kInf;
    } else {
      ratio = rhs / gap;
    }
    res.worst_ratio = std::max(res.worst_ratio, ratio);
    if (ratio > 1.0 + 1e-6) ++res.violations;
  }
  return res;
}

CauchyDirection cauchy_direction(const std::function<double(const VectorXd&)>& h,
                                 const std::function<VectorXd(const VectorXd&)>& grad_h,
                                 const VectorXd& x, const VectorXd& x_star) {
  CauchyDirection out;
  out.value = h(x);
  out.value_star = h(x_star);
  const VectorXd diff = x - x_star;
  const double dist = diff.norm();
  if (dist == 0.0) {
    out.g_c = VectorXd::Zero(x.size());
    out.norm = 0.0;
    out.secant_bound = 0.0;
    return out;
  }
  const VectorXd u = diff / dist;
  const double scale = grad_h(x).dot(u);
  out.g_c = scale * u;
  out.norm = std::abs(scale);
  out.secant_bound = (out.value - out.value_star) / dist;
  return out;
}

CauchyBridgeResult cauchy_bridge_check(const Plant& plant, double c_lqr,
                                       const std::vector<MatrixXd>& samples,
                                       const Tolerances& tol) {
  const RiccatiSolution riccati = solve_care(plant, tol);
  const MatrixXd X_star = closed_loop_gramian(plant, riccati.K_star, tol).X;

  CauchyBridgeResult res;
  res.worst_slack = kInf;
  res.violations = 0;
  for (const auto& K : samples) {
    const EclPoint p = ecl_forward(plant, K, riccati.K_star, tol);
    const FcvxGradient g = f_cvx_grad(plant, p, riccati.K_star, tol);
    const double dist =
        std::sqrt(p.Y.squaredNorm() + (p.X - X_star).squaredNorm());
    double g_c_norm = 0.0;
    if (dist > 0.0) {
      const double inner = (g.dY.array() * p.Y.array()).sum() +
                           (g.dX.array() * (p.X - X_star).array()).sum();
      g_c_norm = std::abs(inner) / dist;
    }
    const double grad_norm = gradient(plant, K, tol).norm();
    const double slack = grad_norm - 2.0 * c_lqr * g_c_norm;
    res.worst_slack = std::min(res.worst_slack, slack);
    if (slack < -1e-9 * (1.0 + grad_norm)) ++res.violations;
  }
  return res;
}

namespace {

double golden_section_min(const std::function<double(double)>& f, double a, double b) {
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12 * (1.0 + std::abs(a) + std::abs(b));
       ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

HessianSlice hessian_slice(const Plant& plant,
                           const std::function<MatrixXd(double)>& gain_of,
                           double lo, double hi, double formula,
                           const Tolerances& tol) {
  if (!(lo < hi)) throw AssumptionError("slice interval is empty");
  const auto phi = [&](double k) {
    const auto J = try_cost(plant, gain_of(k), tol);
    return J ? *J : kInf;
  };

  constexpr int scan_points = 41;
  double best_k = lo;
  double best_phi = kInf;
  int best_i = -1;
  for (int i = 0; i < scan_points; ++i) {
    const double k = lo + (hi - lo) * i / (scan_points - 1);
    const double v = phi(k);
    if (v < best_phi) {
      best_phi = v;
      best_k = k;
      best_i = i;
    }
  }
  if (best_i < 0 || !std::isfinite(best_phi)) {
    throw NumericalError("slice contains no stabilizing gain");
  }
  const double step = (hi - lo) / (scan_points - 1);
  const double a = std::max(lo, best_k - step);
  const double b = std::min(hi, best_k + step);

  HessianSlice out;
  out.k_min = golden_section_min(phi, a, b);
  out.formula = formula;

  const double h = 1e-4 * (1.0 + std::abs(out.k_min));
  const auto second_diff = [&](double hh) {
    return (phi(out.k_min + hh) - 2.0 * phi(out.k_min) + phi(out.k_min - hh)) /
           (hh * hh);
  };
  const double d_h = second_diff(h);
  const double d_h2 = second_diff(0.5 * h);
  if (!std::isfinite(d_h) || !std::isfinite(d_h2)) {
    throw NumericalError("curvature probe stepped outside the stabilizing set");
  }
  out.curvature = (4.0 * d_h2 - d_h) / 3.0;  // one Richardson pass on O(h^2) error
  return out;
}

std::vector<GridPoint> landscape_grid(const Plant& plant,
                                      const std::function<MatrixXd(double, double)>& gain_of,
                                      double k1_lo, double k1_hi, int n1,
                                      double k2_lo, double k2_hi, int n2,
                                      const Tolerances& tol) {
  if (n1 < 2 || n2 < 2) throw AssumptionError("grid needs at least 2 points per axis");
  std::vector<GridPoint> grid;
  grid.reserve(static_cast<std::size_t>(n1) * n2);
  for (int i = 0; i < n1; ++i) {
    const double k1 = k1_lo + (k1_hi - k1_lo) * i / (n1 - 1);
    for (int j = 0; j < n2; ++j) {
      const double k2 = k2_lo + (k2_hi - k2_lo) * j / (n2 - 1);
      const auto J = try_cost(plant, gain_of(k1, k2), tol);
      grid.push_back({k1, k2, J ? *J : std::numeric_limits<double>::quiet_NaN()});
    }
  }
  return grid;
}

}  // namespace lqr
