#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <json.hpp>
#include <sstream>
#include <thread>
#include <unsupported/Eigen/MatrixFunctions>

#include "lqr/builtins.h"
#include "lqr/duality.h"
#include "lqr/errors.h"
#include "lqr/example_suite.h"
#include "lqr/gramian.h"
#include "lqr/json_io.h"
#include "lqr/landscape.h"
#include "lqr/random_instance.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lqr;

namespace {

struct Common {
  std::string instance;
  std::string builtin;
  double a = 0.1;
  std::string out;
  std::uint64_t seed = 0;
  double tol_scale = 1.0;
};

void add_common(CLI::App* sub, Common& c, bool out_required) {
  auto* inst = sub->add_option("--instance", c.instance,
                               "path to a JSON problem instance");
  auto* blt = sub->add_option("--builtin", c.builtin,
                              "builtin instance name (see `examples --help`)");
  inst->excludes(blt);
  blt->excludes(inst);
  sub->add_option("--a", c.a, "coupling parameter of the coupled-pair builtin")
      ->capture_default_str();
  auto* out = sub->add_option("--out", c.out, "directory for result files");
  if (out_required) out->required();
  sub->add_option("--seed", c.seed, "seed for every randomized step")
      ->capture_default_str();
  sub->add_option("--tol", c.tol_scale, "multiplier applied to all tolerances")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
}

Plant resolve_plant(const Common& c) {
  if (!c.instance.empty()) return load_plant(c.instance);
  if (!c.builtin.empty()) return builtin_plant(c.builtin, c.a);
  throw Error("pass --instance PATH or --builtin NAME");
}

Tolerances scaled_tol(double s) {
  Tolerances t;
  t.stability_margin *= s;
  t.rank_rel *= s;
  t.cert_rank_rel *= s;
  t.psd_rel *= s;
  t.lyap_residual_rel *= s;
  t.are_residual_rel *= s;
  t.axis_guard *= s;
  return t;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json mat_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

json describe_instance(const Common& c) {
  if (!c.instance.empty()) {
    std::ifstream in(c.instance, std::ios::binary);
    if (!in) throw Error("cannot open instance file: " + c.instance);
    std::ostringstream buf;
    buf << in.rdbuf();
    return json{{"path", c.instance}, {"content_fnv1a", hex64(fnv1a(buf.str()))}};
  }
  if (c.builtin.empty()) return json{{"generator", "seed-suite"}};
  json j{{"builtin", c.builtin}};
  if (c.builtin == "coupled-pair") j["a"] = c.a;
  return j;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

// The manifest pins the full resolved configuration; its hash is stamped on
// every result file so outputs can be traced back to the exact invocation.
std::string write_manifest(const std::string& command, const Common& c, json params) {
  fs::create_directories(c.out);
  json m;
  m["command"] = command;
  m["instance"] = describe_instance(c);
  m["params"] = std::move(params);
  m["seed"] = c.seed;
  m["tol_scale"] = c.tol_scale;
  const std::string hash = hex64(fnv1a(m.dump()));
  m["hash"] = hash;
  write_text(fs::path(c.out) / "manifest.json", m.dump(2) + "\n");
  return hash;
}

std::vector<double> parse_list(const std::string& s, const char* what) {
  std::vector<double> values;
  std::size_t pos = 0;
  while (pos < s.size()) {
    std::size_t used = 0;
    try {
      values.push_back(std::stod(s.substr(pos), &used));
    } catch (const std::exception&) {
      throw Error(std::string("cannot parse ") + what + ": " + s);
    }
    pos += used;
    if (pos < s.size()) {
      if (s[pos] != ',') throw Error(std::string("cannot parse ") + what + ": " + s);
      ++pos;
    }
  }
  if (values.empty()) throw Error(std::string(what) + " is empty");
  return values;
}

MatrixXd parse_gain(const std::string& s, Eigen::Index m, Eigen::Index n) {
  const std::vector<double> v = parse_list(s, "gain");
  if (static_cast<Eigen::Index>(v.size()) != m * n) {
    throw Error("gain needs " + std::to_string(m * n) + " entries (row-major)");
  }
  MatrixXd K(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = v[i * n + j];
  return K;
}

// ---- solve ---------------------------------------------------------------

int run_solve(const Common& c) {
  const Plant plant = resolve_plant(c);
  const Tolerances tol = scaled_tol(c.tol_scale);
  const StructuralReport rep = structural_report(plant, {}, tol);
  const RiccatiSolution rs = solve_care(plant, tol);
  const double J_star = cost(plant, rs.K_star, tol);
  const double dual = (plant.W * rs.P_star).trace();

  const std::string hash = write_manifest("solve", c, json::object());
  json out;
  out["manifest_hash"] = hash;
  out["structural"] = {{"stable", rep.stable},
                       {"stabilizable", rep.stabilizable},
                       {"detectable", rep.detectable},
                       {"controllable", rep.controllable},
                       {"spectral_abscissa", rep.spectral_abscissa},
                       {"assumption_holds", rep.assumption_holds},
                       {"sufficient_condition", to_string(rep.sufficient_condition)}};
  out["P_star"] = mat_json(rs.P_star);
  out["K_star"] = mat_json(rs.K_star);
  out["are_residual"] = rs.are_residual;
  out["closed_loop_abscissa"] = rs.closed_loop_abscissa;
  out["J_star"] = J_star;
  out["dual_value"] = dual;
  write_text(fs::path(c.out) / "solve.json", out.dump(2) + "\n");
  std::cout << "J_star=" << fmt_g(J_star) << " dual=" << fmt_g(dual)
            << " abscissa=" << fmt_g(rs.closed_loop_abscissa) << " manifest=" << hash
            << "\n";
  return 0;
}

// ---- certify ---------------------------------------------------------------

// One certificate bundle per seed; a bundle passes when the certificate is
// feasible, the gap and slackness vanish at their natural scales, and
// complementarity is strict (the generator's PD noise guarantees strictness).
int run_certify_random(const Common& c, int seeds, int n_fix, int m_fix) {
  const Tolerances tol = scaled_tol(c.tol_scale);
  const int n_min = n_fix > 0 ? n_fix : 2;
  const int n_max = n_fix > 0 ? n_fix : 6;
  const int m_min = m_fix > 0 ? m_fix : 1;
  const int m_max = m_fix > 0 ? m_fix : 3;

  const std::string hash = write_manifest(
      "certify", c,
      json{{"random_seeds", seeds}, {"n", n_fix}, {"m", m_fix}});

  json rows = json::array();
  int passes = 0;
  for (int seed = 0; seed < seeds; ++seed) {
    const Plant plant = random_plant(seed, n_max, m_max, n_min, m_min);
    const RiccatiSolution rs = solve_care(plant, tol);
    const DualCertificate cert = dual_certificate(plant, rs.P_star, tol);
    const PrimalRecovery rec = kkt_primal_from_dual(plant, rs, tol);
    const DualityGap gap = duality_gap(plant, tol);
    const Complementarity comp = complementarity(plant, rec.Z, rs.P_star, tol);
    const MatrixXd M = lmi_matrix(plant, rs.P_star);

    const double s = c.tol_scale;
    const bool pass =
        cert.feasible &&
        std::abs(gap.gap) <= s * 1e-7 * (1.0 + std::abs(gap.primal)) &&
        rec.affine_residual <= s * 1e-8 * (1.0 + rec.Z.norm()) &&
        std::abs(comp.slackness) <= s * 1e-7 * (1.0 + rec.Z.norm() * M.norm()) &&
        comp.strict;
    passes += pass;
    rows.push_back(json{{"seed", seed},
                        {"n", plant.n},
                        {"m", plant.m},
                        {"primal", gap.primal},
                        {"dual", gap.dual},
                        {"gap", gap.gap},
                        {"slackness", comp.slackness},
                        {"rank_M", comp.rank_M},
                        {"rank_Z", comp.rank_Z},
                        {"strict_complementarity", comp.strict},
                        {"pass", pass}});
  }

  json out;
  out["manifest_hash"] = hash;
  out["bundles"] = seeds;
  out["passes"] = passes;
  out["rows"] = std::move(rows);
  write_text(fs::path(c.out) / "certify_random.json", out.dump(2) + "\n");
  std::cout << "bundles=" << passes << "/" << seeds << " manifest=" << hash << "\n";
  if (passes != seeds) {
    std::cerr << "numerical failure: " << (seeds - passes)
              << " certificate bundle(s) failed\n";
    return 3;
  }
  return 0;
}

int run_certify(const Common& c, int random_seeds, int random_n, int random_m) {
  if (random_seeds > 0) return run_certify_random(c, random_seeds, random_n, random_m);
  const Plant plant = resolve_plant(c);
  const Tolerances tol = scaled_tol(c.tol_scale);
  const RiccatiSolution rs = solve_care(plant, tol);
  const DualCertificate cert = dual_certificate(plant, rs.P_star, tol);
  const PrimalRecovery rec = kkt_primal_from_dual(plant, rs, tol);
  const DualityGap gap = duality_gap(plant, tol);
  const Complementarity comp = complementarity(plant, rec.Z, rs.P_star, tol);

  Eigen::SelfAdjointEigenSolver<MatrixXd> ew(plant.W, Eigen::EigenvaluesOnly);
  const bool w_pd = ew.eigenvalues().minCoeff() > 0.0;

  const std::string hash = write_manifest("certify", c, json::object());
  json out;
  out["manifest_hash"] = hash;
  out["primal_value"] = gap.primal;
  out["dual_value"] = gap.dual;
  out["duality_gap"] = gap.gap;
  out["certificate_lambda_min"] = cert.lambda_min;
  out["certificate_feasible"] = cert.feasible;
  out["recovered_objective"] = rec.objective;
  out["affine_residual"] = rec.affine_residual;
  out["slackness"] = comp.slackness;
  out["rank_M"] = comp.rank_M;
  out["rank_Z"] = comp.rank_Z;
  out["strict_complementarity"] = comp.strict;
  out["W_positive_definite"] = w_pd;
  write_text(fs::path(c.out) / "certify.json", out.dump(2) + "\n");
  std::cout << "primal=" << fmt_g(gap.primal) << " dual=" << fmt_g(gap.dual)
            << " gap=" << fmt_g(gap.gap) << " slackness=" << fmt_g(comp.slackness)
            << " ranks=" << comp.rank_M << "+" << comp.rank_Z
            << (comp.strict ? " (strict)" : " (degenerate)") << " manifest=" << hash
            << "\n";
  return 0;
}

// ---- landscape -------------------------------------------------------------

int grid_threads(int rows) {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  if (const char* s = std::getenv("LQR_LANDSCAPE_THREADS")) {
    const int cap = std::atoi(s);
    hw = cap >= 1 ? std::min(hw, cap) : 1;
  }
  return std::max(1, std::min(hw, rows));
}

// One-dimensional restriction along k -> [k, -b-k]: the line on which the
// coupled pair's optima merge. The curvature of this slice is what collapses
// as b grows, so it gets its own CSV and summary.
int run_landscape_slice(const Common& c, const Plant& plant, const Tolerances& tol,
                        double b, double lo, double hi, int n_pts) {
  if (std::isnan(lo)) lo = -b / 2.0 - 5.0;
  if (std::isnan(hi)) hi = -b / 2.0 + 5.0;
  if (!(lo < hi)) throw Error("slice needs --slice-lo < --slice-hi");
  if (n_pts < 2) throw Error("slice needs at least 2 points");

  const auto gain_of = [&](double k) {
    MatrixXd K(plant.m, plant.n);
    K(0, 0) = k;
    (plant.m == 1 ? K(0, 1) : K(1, 0)) = -b - k;
    return K;
  };

  // Closed-form curvature is only on file for the coupled pair at its default
  // coupling; anywhere else the summary reports the measurement alone.
  double reference = std::numeric_limits<double>::quiet_NaN();
  if (c.builtin == "coupled-pair") {
    reference = 5.0 * (304.0 + 84.0 * b) / (11.0 * (10.0 * b * b + 29.0 * b + 18.0));
  }
  const HessianSlice slice = hessian_slice(plant, gain_of, lo, hi, reference, tol);

  const std::string hash = write_manifest(
      "landscape", c,
      json{{"slice_b", b}, {"slice_lo", lo}, {"slice_hi", hi}, {"slice_n", n_pts}});
  std::ostringstream csv;
  csv << "# manifest_hash=" << hash << "\nk,J\n";
  for (int i = 0; i < n_pts; ++i) {
    const double k = lo + (hi - lo) * i / (n_pts - 1);
    const MatrixXd K = gain_of(k);
    const double J = is_stable(plant.A + plant.B * K, tol)
                         ? cost(plant, K, tol)
                         : std::numeric_limits<double>::quiet_NaN();
    csv << fmt_g(k) << "," << fmt_g(J) << "\n";
  }
  write_text(fs::path(c.out) / "slice.csv", csv.str());

  json out;
  out["manifest_hash"] = hash;
  out["b"] = b;
  out["k_min"] = slice.k_min;
  out["curvature"] = slice.curvature;
  if (std::isnan(slice.formula)) {
    out["curvature_reference"] = nullptr;
  } else {
    out["curvature_reference"] = slice.formula;
  }
  write_text(fs::path(c.out) / "slice.json", out.dump(2) + "\n");
  std::cout << "slice b=" << fmt_g(b) << " k_min=" << fmt_g(slice.k_min)
            << " curvature=" << fmt_g(slice.curvature) << " manifest=" << hash << "\n";
  return 0;
}

int run_landscape(const Common& c, double k1_lo, double k1_hi, int n1, double k2_lo,
                  double k2_hi, int n2, double slice_b, double slice_lo,
                  double slice_hi, int slice_n) {
  const Plant plant = resolve_plant(c);
  const Tolerances tol = scaled_tol(c.tol_scale);
  if (plant.m * plant.n != 2) {
    throw Error("landscape grids need a plant with exactly two gain entries");
  }
  if (!std::isnan(slice_b)) {
    return run_landscape_slice(c, plant, tol, slice_b, slice_lo, slice_hi, slice_n);
  }
  if (n1 < 2 || n2 < 2) throw Error("grid needs at least 2 points per axis");

  const auto gain_of = [&](double k1, double k2) {
    MatrixXd K(plant.m, plant.n);
    K(0, 0) = k1;
    (plant.m == 1 ? K(0, 1) : K(1, 0)) = k2;
    return K;
  };

  std::vector<double> J(static_cast<std::size_t>(n1) * n2);
  const int threads = grid_threads(n1);
  std::vector<std::thread> pool;
  std::atomic<int> next_row{0};
  const auto worker = [&]() {
    for (int i; (i = next_row.fetch_add(1)) < n1;) {
      const double k1 = k1_lo + (k1_hi - k1_lo) * i / (n1 - 1);
      for (int j = 0; j < n2; ++j) {
        const double k2 = k2_lo + (k2_hi - k2_lo) * j / (n2 - 1);
        const MatrixXd K = gain_of(k1, k2);
        J[static_cast<std::size_t>(i) * n2 + j] =
            is_stable(plant.A + plant.B * K, tol)
                ? cost(plant, K, tol)
                : std::numeric_limits<double>::quiet_NaN();
      }
    }
  };
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  const std::string hash = write_manifest(
      "landscape", c,
      json{{"k1_lo", k1_lo}, {"k1_hi", k1_hi}, {"k1_n", n1},
           {"k2_lo", k2_lo}, {"k2_hi", k2_hi}, {"k2_n", n2}});
  std::ostringstream csv;
  csv << "# manifest_hash=" << hash << "\nk1,k2,J\n";
  for (int i = 0; i < n1; ++i) {
    const double k1 = k1_lo + (k1_hi - k1_lo) * i / (n1 - 1);
    for (int j = 0; j < n2; ++j) {
      const double k2 = k2_lo + (k2_hi - k2_lo) * j / (n2 - 1);
      csv << fmt_g(k1) << "," << fmt_g(k2) << ","
          << fmt_g(J[static_cast<std::size_t>(i) * n2 + j]) << "\n";
    }
  }
  write_text(fs::path(c.out) / "landscape.csv", csv.str());
  std::cout << "grid " << n1 << "x" << n2 << " written (threads=" << threads
            << ") manifest=" << hash << "\n";
  return 0;
}

// ---- pgd -------------------------------------------------------------------

int run_pgd(const Common& c, const std::string& k0_str, double alpha, int iters,
            double grad_tol, double nu) {
  const Plant plant = resolve_plant(c);
  const Tolerances tol = scaled_tol(c.tol_scale);
  const MatrixXd K0 = k0_str.empty() ? initial_stabilizing_gain(plant, tol)
                                     : parse_gain(k0_str, plant.m, plant.n);

  double L_hat = 0.0;
  if (!(alpha > 0.0)) {
    const RiccatiSolution rs = solve_care(plant, tol);
    const double J_star = cost(plant, rs.K_star, tol);
    const double level = nu > 0.0 ? nu : 2.0 * J_star;
    const SublevelSample sample = sample_sublevel(plant, level, 64, c.seed, tol);
    L_hat = estimate_smoothness(plant, sample.gains, c.seed, tol);
    alpha = 1.0 / L_hat;
  }

  const PgdResult res = pgd_run(plant, K0, alpha, iters, grad_tol, tol);

  const std::string hash = write_manifest(
      "pgd", c,
      json{{"k0", k0_str}, {"alpha", alpha}, {"iters", iters},
           {"grad_tol", grad_tol}, {"nu", nu}});
  std::ostringstream csv;
  csv << "# manifest_hash=" << hash << "\niter,J,grad_norm,dist_to_Kstar\n";
  for (const auto& row : res.trace) {
    csv << row.iter << "," << fmt_g(row.J) << "," << fmt_g(row.grad_norm) << ","
        << fmt_g(row.dist_to_K_star) << "\n";
  }
  write_text(fs::path(c.out) / "pgd.csv", csv.str());

  json out;
  out["manifest_hash"] = hash;
  out["alpha"] = alpha;
  if (L_hat > 0.0) out["smoothness_estimate"] = L_hat;
  out["converged"] = res.converged;
  out["iterations"] = res.trace.empty() ? 0 : res.trace.back().iter;
  out["final_J"] = res.trace.empty() ? 0.0 : res.trace.back().J;
  out["final_dist_to_Kstar"] = res.trace.empty() ? 0.0 : res.trace.back().dist_to_K_star;
  out["K_final"] = mat_json(res.K_final);
  write_text(fs::path(c.out) / "pgd.json", out.dump(2) + "\n");
  std::cout << (res.converged ? "converged" : "stopped") << " after "
            << (res.trace.empty() ? 0 : res.trace.back().iter)
            << " iterations, final J=" << fmt_g(res.trace.back().J)
            << " manifest=" << hash << "\n";
  return 0;
}

// ---- pl --------------------------------------------------------------------

int run_pl(const Common& c, double nu, int n_samples) {
  const Plant plant = resolve_plant(c);
  const Tolerances tol = scaled_tol(c.tol_scale);
  const RiccatiSolution rs = solve_care(plant, tol);
  const double J_star = cost(plant, rs.K_star, tol);
  const double level = nu > 0.0 ? nu : 2.0 * J_star;

  const SublevelSample sample = sample_sublevel(plant, level, n_samples, c.seed, tol);
  const PlConstant pl = pl_constant(plant, level, sample.gains, tol);
  const PlCheckResult chk = pl_check(plant, pl.mu, sample.gains, tol);
  const QuadraticGrowthResult qg = quadratic_growth_check(plant, pl.mu_qg, sample.gains, tol);
  const CauchyBridgeResult br = cauchy_bridge_check(plant, pl.c_lqr, sample.gains, tol);

  const std::string hash = write_manifest(
      "pl", c, json{{"nu", level}, {"samples", n_samples}});
  std::ostringstream csv;
  csv << "# manifest_hash=" << hash << "\nsample_id,J,grad_norm_sq,ratio\n";
  for (const auto& row : chk.rows) {
    csv << row.sample_id << "," << fmt_g(row.J) << "," << fmt_g(row.grad_norm_sq)
        << "," << fmt_g(row.ratio) << "\n";
  }
  write_text(fs::path(c.out) / "pl.csv", csv.str());

  json out;
  out["manifest_hash"] = hash;
  out["nu"] = pl.nu;
  out["J_star"] = J_star;
  out["kappa_lo"] = pl.kappa_lo;
  out["kappa_bar"] = pl.kappa_bar;
  out["coupling_op_norm"] = pl.op_norm;
  out["mu_qg"] = pl.mu_qg;
  out["c_lqr"] = pl.c_lqr;
  out["mu"] = pl.mu;
  if (std::isfinite(pl.kappa_closed_form)) {
    out["kappa_closed_form"] = pl.kappa_closed_form;
  }
  out["worst_ratio"] = chk.worst_ratio;
  out["violations"] = chk.violations;
  out["qg_worst_ratio"] = qg.worst_ratio;
  out["qg_violations"] = qg.violations;
  out["bridge_worst_slack"] = br.worst_slack;
  out["bridge_violations"] = br.violations;
  out["samples"] = static_cast<int>(sample.gains.size());
  out["rejected"] = sample.rejected;
  write_text(fs::path(c.out) / "pl.json", out.dump(2) + "\n");
  std::cout << "mu=" << fmt_g(pl.mu) << " worst_ratio=" << fmt_g(chk.worst_ratio)
            << " violations=" << chk.violations << "/" << sample.gains.size()
            << " manifest=" << hash << "\n";
  return 0;
}

// ---- gramian ----------------------------------------------------------------

int run_gramian(const Common& c, const std::string& gain_str, const std::string& x0_str,
                double T, double dt) {
  const Plant plant = resolve_plant(c);
  const Tolerances tol = scaled_tol(c.tol_scale);

  VectorXd x0;
  if (!x0_str.empty()) {
    const std::vector<double> v = parse_list(x0_str, "x0");
    if (static_cast<Eigen::Index>(v.size()) != plant.n) {
      throw Error("x0 needs " + std::to_string(plant.n) + " entries");
    }
    x0 = Eigen::Map<const VectorXd>(v.data(), plant.n);
  } else if (plant.x0) {
    x0 = *plant.x0;
  } else {
    throw Error("instance provides no initial state; pass --x0");
  }

  const RiccatiSolution rs = solve_care(plant, tol);
  const MatrixXd K =
      gain_str.empty() ? rs.K_star : parse_gain(gain_str, plant.m, plant.n);

  const TrajectoryGramian sim = simulate_closed_loop(plant, K, x0, T, dt, tol);
  const GramianComparison cmp = trajectory_gramian_vs_lyapunov(plant, K, x0, tol);
  const SdpMembership mem = v_sdp_membership(plant, sim.Z, x0, tol);
  const Sandwich s = optimality_sandwich(plant, x0, tol);

  const std::string hash = write_manifest(
      "gramian", c,
      json{{"gain", gain_str}, {"x0", x0_str}, {"T", T}, {"dt", dt}});
  json out;
  out["manifest_hash"] = hash;
  out["Z"] = mat_json(sim.Z);
  out["T"] = sim.T;
  out["dt"] = sim.dt;
  out["refinements"] = sim.refinements;
  out["tail_bound"] = sim.tail_bound;
  out["lyapunov_gap"] = cmp.gap;
  out["lyapunov_consistent"] = cmp.consistent;
  out["sdp_residual"] = mem.sdp_residual;
  out["psd_violation"] = mem.psd_violation;
  out["static_structure_gap"] = mem.static_structure_gap;
  out["K_recovered"] = mat_json(mem.K_recovered);
  out["J1_relaxation"] = s.J1;
  out["J2_static"] = s.J2;
  out["sandwich_gap"] = s.gap;
  out["degenerate"] = s.degenerate;
  write_text(fs::path(c.out) / "gramian.json", out.dump(2) + "\n");

  // Path dump on the quadrature grid, strided so the file stays desk-sized.
  // Stepping reuses the exact propagator, so the rows are the simulated states
  // rather than a re-integration.
  {
    const MatrixXd F = plant.A + plant.B * K;
    const int n_steps = std::max(1, static_cast<int>(std::lround(sim.T / sim.dt)));
    const int stride = std::max(1, n_steps / 2000);
    const MatrixXd E = MatrixXd((F * sim.dt).exp());
    std::ostringstream csv;
    csv << "# manifest_hash=" << hash << "\nt";
    for (Eigen::Index i = 0; i < plant.n; ++i) csv << ",x_" << (i + 1);
    for (Eigen::Index i = 0; i < plant.m; ++i) csv << ",u_" << (i + 1);
    csv << "\n";
    VectorXd x = x0;
    for (int k = 0; k <= n_steps; ++k) {
      if (k % stride == 0 || k == n_steps) {
        const VectorXd u = K * x;
        csv << fmt_g(k * sim.dt);
        for (Eigen::Index i = 0; i < plant.n; ++i) csv << "," << fmt_g(x(i));
        for (Eigen::Index i = 0; i < plant.m; ++i) csv << "," << fmt_g(u(i));
        csv << "\n";
      }
      x = E * x;
    }
    write_text(fs::path(c.out) / "trajectory.csv", csv.str());
  }

  std::cout << "gramian gap=" << fmt_g(cmp.gap) << " sandwich=" << fmt_g(s.J1) << "/"
            << fmt_g(s.J2) << " manifest=" << hash << "\n";
  return 0;
}

// ---- examples ----------------------------------------------------------------

int run_examples(const Common& c, const std::string& only) {
  int failures = 0;
  int ran = 0;
  std::ostringstream csv;
  std::cout << "status  check                   detail\n";
  for (const auto& check : example_checks()) {
    if (!only.empty() && check.name.find(only) == std::string::npos) continue;
    ++ran;
    std::string msg;
    try {
      msg = check.run(c.tol_scale);
    } catch (const std::exception& e) {
      msg = e.what();
    }
    const bool ok = msg.empty();
    if (!ok) ++failures;
    std::printf("%-7s %-23s %s\n", ok ? "PASS" : "FAIL", check.name.c_str(),
                ok ? check.detail.c_str() : msg.c_str());
    csv << check.name << "," << (ok ? "pass" : "fail") << "\n";
  }
  if (ran == 0) {
    std::cout << "no check matches --only " << only << "\n";
    return 1;
  }
  if (!c.out.empty()) {
    const std::string hash = write_manifest("examples", c, json{{"only", only}});
    write_text(fs::path(c.out) / "examples.csv",
               "# manifest_hash=" + hash + "\ncheck,status\n" + csv.str());
  }
  std::cout << (failures == 0 ? "all checks passed" : "some checks FAILED") << " ("
            << ran - failures << "/" << ran << ")\n";
  return failures == 0 ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certificates, landscape diagnostics, and trajectory Gramians\n"
               "for continuous-time quadratic regulators"};
  app.require_subcommand(1);

  Common c_solve, c_certify, c_landscape, c_pgd, c_pl, c_gramian, c_examples;

  auto* cmd_solve = app.add_subcommand(
      "solve", "structural report, Riccati solution, and optimal cost");
  add_common(cmd_solve, c_solve, true);

  auto* cmd_certify = app.add_subcommand(
      "certify", "primal/dual optimality certificates and complementarity");
  add_common(cmd_certify, c_certify, true);
  int cert_seeds = 0, cert_n = 0, cert_m = 0;
  auto* cert_rand = cmd_certify->add_option(
      "--random-seeds", cert_seeds,
      "certify generated instances for seeds 0..N-1 instead of one instance");
  cert_rand->check(CLI::PositiveNumber);
  cert_rand->excludes(cmd_certify->get_option("--instance"));
  cert_rand->excludes(cmd_certify->get_option("--builtin"));
  cmd_certify
      ->add_option("--random-n", cert_n, "fix the state dimension of generated instances")
      ->check(CLI::Range(1, 6))
      ->needs(cert_rand);
  cmd_certify
      ->add_option("--random-m", cert_m, "fix the input dimension of generated instances")
      ->check(CLI::Range(1, 3))
      ->needs(cert_rand);

  auto* cmd_landscape =
      app.add_subcommand("landscape", "cost over a grid of two gain entries");
  add_common(cmd_landscape, c_landscape, true);
  double k1_lo = -5.0, k1_hi = 1.0, k2_lo = -5.0, k2_hi = 1.0;
  int k1_n = 41, k2_n = 41;
  cmd_landscape->add_option("--k1-lo", k1_lo)->capture_default_str();
  cmd_landscape->add_option("--k1-hi", k1_hi)->capture_default_str();
  cmd_landscape->add_option("--k1-n", k1_n)->capture_default_str();
  cmd_landscape->add_option("--k2-lo", k2_lo)->capture_default_str();
  cmd_landscape->add_option("--k2-hi", k2_hi)->capture_default_str();
  cmd_landscape->add_option("--k2-n", k2_n)->capture_default_str();
  double slice_b = std::numeric_limits<double>::quiet_NaN();
  double slice_lo = std::numeric_limits<double>::quiet_NaN();
  double slice_hi = std::numeric_limits<double>::quiet_NaN();
  int slice_n = 201;
  cmd_landscape->add_option(
      "--slice-b", slice_b,
      "instead of a grid, slice along k -> [k, -b-k] and report its curvature");
  cmd_landscape->add_option("--slice-lo", slice_lo,
                            "slice range start (default: -b/2 - 5)");
  cmd_landscape->add_option("--slice-hi", slice_hi,
                            "slice range end (default: -b/2 + 5)");
  cmd_landscape->add_option("--slice-n", slice_n)->capture_default_str();

  auto* cmd_pgd = app.add_subcommand("pgd", "gradient descent on the gain");
  add_common(cmd_pgd, c_pgd, true);
  std::string pgd_k0;
  double pgd_alpha = 0.0, pgd_grad_tol = 1e-8, pgd_nu = 0.0;
  int pgd_iters = 200;
  cmd_pgd->add_option("--k0", pgd_k0, "initial gain, row-major comma list");
  cmd_pgd->add_option("--alpha", pgd_alpha,
                      "step size (default: inverse smoothness estimate)");
  cmd_pgd->add_option("--iters", pgd_iters)->capture_default_str();
  cmd_pgd->add_option("--grad-tol", pgd_grad_tol)->capture_default_str();
  cmd_pgd->add_option("--nu", pgd_nu,
                      "sublevel threshold for the smoothness estimate "
                      "(default: twice the optimal cost)");

  auto* cmd_pl = app.add_subcommand(
      "pl", "gradient-dominance constants and inequality checks");
  add_common(cmd_pl, c_pl, true);
  double pl_nu = 0.0;
  int pl_samples = 200;
  cmd_pl->add_option("--nu", pl_nu,
                     "sublevel threshold (default: twice the optimal cost)");
  cmd_pl->add_option("--samples", pl_samples)->capture_default_str();

  auto* cmd_gramian = app.add_subcommand(
      "gramian", "trajectory Gramian, relaxation membership, and the sandwich");
  add_common(cmd_gramian, c_gramian, true);
  std::string gr_gain, gr_x0;
  double gr_T = 0.0, gr_dt = 1e-2;
  cmd_gramian->add_option("--gain", gr_gain,
                          "static gain, row-major comma list (default: optimal)");
  cmd_gramian->add_option("--x0", gr_x0, "initial state, comma list");
  cmd_gramian->add_option("--T", gr_T, "horizon (default: adaptive)");
  cmd_gramian->add_option("--dt", gr_dt)->capture_default_str();

  auto* cmd_examples = app.add_subcommand(
      "examples", "verify the built-in worked examples; builtins: single-integrator, "
                  "coupled-pair, stiff-pair, unit-integrator");
  add_common(cmd_examples, c_examples, false);
  std::string only;
  cmd_examples->add_option("--only", only, "run only checks whose name contains this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*cmd_solve) return run_solve(c_solve);
    if (*cmd_certify) return run_certify(c_certify, cert_seeds, cert_n, cert_m);
    if (*cmd_landscape) {
      return run_landscape(c_landscape, k1_lo, k1_hi, k1_n, k2_lo, k2_hi, k2_n,
                           slice_b, slice_lo, slice_hi, slice_n);
    }
    if (*cmd_pgd) {
      return run_pgd(c_pgd, pgd_k0, pgd_alpha, pgd_iters, pgd_grad_tol, pgd_nu);
    }
    if (*cmd_pl) return run_pl(c_pl, pl_nu, pl_samples);
    if (*cmd_gramian) return run_gramian(c_gramian, gr_gain, gr_x0, gr_T, gr_dt);
    if (*cmd_examples) return run_examples(c_examples, only);
  } catch (const AssumptionError& e) {
    std::cerr << "assumption violated: " << e.what() << "\n";
    return 2;
  } catch (const DimensionError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const StabilityError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const SamplingError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const SingularLiftError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
