// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.
//
// usage: acceptance WORK_DIR [CLI_PATH]

#include "kdpc/config.hpp"
#include "kdpc/data.hpp"
#include "kdpc/io.hpp"
#include "kdpc/kernel.hpp"
#include "kdpc/pipeline.hpp"
#include "kdpc/predictor.hpp"
#include "kdpc/qp.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace kdpc;

namespace {

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("[%s] %2d %s: %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char b[32];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

const ControllerSummary& find(const RunSummary& r, const std::string& scenario,
                              ControllerKind kind) {
  for (const auto& s : r.scenarios) {
    if (s.name != scenario) continue;
    for (const auto& c : s.controllers) {
      if (c.kind == kind) return c;
    }
  }
  std::fprintf(stderr, "missing %s result\n", scenario.c_str());
  std::exit(2);
}

void offset_criterion(int id, const std::string& what, const RunSummary& r,
                      const std::string& scenario, bool extra_ok = true,
                      const std::string& extra = "") {
  const auto& k = find(r, scenario, ControllerKind::kdpc);
  const auto& n = find(r, scenario, ControllerKind::nmpc);
  const bool ok = extra_ok && !k.diverged && !n.diverged &&
                  k.disturbed_error <= std::max(0.02, 0.1 * n.disturbed_error) &&
                  n.disturbed_error >= 0.05;
  report(id, ok, what,
         "mean |e| on [17,20) s: kdpc " + fmt(k.disturbed_error) + ", nmpc " +
             fmt(n.disturbed_error) + " (need kdpc <= max(0.02, 0.1 nmpc), nmpc >= 0.05)" + extra);
}

std::map<std::string, std::string> csv_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  if (!fs::exists(root)) return out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ".csv") {
      out[fs::relative(e.path(), root).generic_string()] = read_text(e.path());
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: acceptance WORK_DIR [CLI_PATH]\n");
    return 2;
  }
  const fs::path work = argv[1];
  const std::string cli = argc > 2 ? argv[2] : "";
  fs::remove_all(work);
  fs::create_directories(work);

  const RunConfig cfg = default_config();
  std::ostringstream log;
  const auto t0 = std::chrono::steady_clock::now();
  const RunSummary run = run_all(cfg, work / "run", false, log);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << log.str();

  // 1-3: closed-loop disturbance rejection.
  offset_criterion(1, "input disturbance rejected without offset", run, "input_disturbance",
                   seconds < 30.0, "; collect + fit + run took " + fmt(seconds) + " s (need < 30)");
  offset_criterion(2, "output disturbance rejected without offset", run, "output_disturbance");
  {
    const auto& a = find(run, "input_disturbance", ControllerKind::kdpc);
    const auto& b = find(run, "output_disturbance", ControllerKind::kdpc);
    const bool ok = a.final_error <= 0.02 && b.final_error <= 0.02;
    report(3, ok, "re-convergence after the disturbance ends",
           "max |e| over final 2 s: input " + fmt(a.final_error) + ", output " +
               fmt(b.final_error) + " (need <= 0.02)");
  }

  // 4: kernel gradient against central differences.
  {
    std::mt19937 rng(404);
    std::uniform_real_distribution<double> sig(0.5, 10.0), rad(0.0, 10.0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
      const KernelSpec k{KernelFamily::gaussian_rbf, sig(rng)};
      Eigen::VectorXd d = oracle::random_matrix(rng, 15, 1);
      d *= rad(rng) / d.norm();
      const auto f = [&](const Eigen::VectorXd& z) {
        return Eigen::VectorXd::Constant(1, oracle::rbf(d, z, k.bandwidth));
      };
      const Eigen::MatrixXd fd = oracle::fd_jacobian(f, Eigen::VectorXd::Zero(15), 1e-5);
      worst = std::max(worst, (rbf_jacobian_row_at_zero(k, d) - fd.row(0)).cwiseAbs().maxCoeff());
    }
    report(4, worst <= 1e-6, "kernel gradient vs finite differences",
           "max abs error " + fmt(worst) + " over 100 cases (need <= 1e-6)");
  }

  const Dataset data = load_dataset(work / "run" / "dataset");
  const Predictors pred = load_predictors(work / "run" / "predictors");

  // 5: future-input linearisation on the benchmark dataset.
  {
    const Eigen::Index t = data.num_columns();
    const double sf = pred.kernel_future.bandwidth;
    Eigen::MatrixXd kff(t, t);
    for (Eigen::Index j = 0; j < t; ++j) {
      for (Eigen::Index i = 0; i < t; ++i) kff(i, j) = oracle::rbf(data.d_f_u.col(i), data.d_f_u.col(j), sf);
    }
    kff.diagonal().array() += pred.mu_reg;
    const Eigen::MatrixXd w = kff.ldlt().solve(data.y_f.transpose()).transpose();
    const auto f = [&](const Eigen::VectorXd& du) {
      Eigen::VectorXd s(t);
      for (Eigen::Index j = 0; j < t; ++j) s(j) = oracle::rbf(data.d_f_u.col(j), du, sf);
      return Eigen::VectorXd(w * s);
    };
    const Eigen::MatrixXd fd =
        oracle::fd_jacobian(f, Eigen::VectorXd::Zero(data.n_horizon), 1e-5);
    const double rel = (pred.p2 - fd).norm() / fd.norm();
    report(5, rel <= 1e-5, "future-input linearisation vs finite differences",
           "relative Frobenius error " + fmt(rel) + " (need <= 1e-5)");
  }

  // 6: ridge solve against an explicit inverse; two-route identity.
  {
    std::mt19937 rng(606);
    double worst_inv = 0.0;
    for (int i = 0; i < 100; ++i) {
      const Eigen::MatrixXd k = oracle::random_spd(rng, 5);
      const Eigen::MatrixXd y = oracle::random_matrix(rng, 3, 5);
      const Eigen::MatrixXd ref = y * (k + 1e-3 * Eigen::MatrixXd::Identity(5, 5)).inverse();
      worst_inv = std::max(worst_inv, (fit_p1(y, k, 1e-3) - ref).norm() / ref.norm());
    }
    const Eigen::MatrixXd kpp = gram(pred.kernel_past, data.d_ini);
    FitConfig fc = cfg.fit;
    const Eigen::VectorXd scale = regularization_scale(data, fc);
    double worst_route = 0.0;
    for (Eigen::Index c = 0; c < data.num_columns(); c += 300) {
      const Eigen::VectorXd kq = past_similarity(pred, 0.95 * data.d_ini.col(c));
      const Eigen::VectorXd a = pred.p1 * kq;
      const Eigen::VectorXd b = data.y_f * compute_alpha_p(kpp, pred.lambda_reg, scale, kq);
      worst_route = std::max(worst_route, (a - b).norm() / std::max(1e-12, b.norm()));
    }
    report(6, worst_inv <= 1e-10 && worst_route <= 1e-9, "ridge solve correctness",
           "explicit-inverse rel error " + fmt(worst_inv) + " (need <= 1e-10), two-route rel error " +
               fmt(worst_route) + " (need <= 1e-9)");
  }

  // 7: QP solver against exhaustive active-set enumeration.
  {
    std::mt19937 rng(707);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    double worst_z = 0.0, worst_kkt = 0.0;
    int optimal = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const Eigen::Index n = 1 + trial % 4;
      QPProblem p;
      p.h = oracle::random_spd(rng, n, 0.05);
      p.g = 3.0 * oracle::random_matrix(rng, n, 1);
      p.a_ineq.resize(0, n);
      p.b_ineq.resize(0);
      p.lb.resize(n);
      p.ub.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a = u(rng), b = u(rng);
        p.lb(i) = std::min(a, b);
        p.ub(i) = std::max(a, b);
      }
      const QPSolution s = solve_qp(p);
      Eigen::MatrixXd gm(0, n);
      Eigen::VectorXd wv(0);
      oracle::append_box(p.lb, p.ub, gm, wv);
      const auto ref = oracle::brute_force_qp(p.h, p.g, gm, wv);
      worst_z = std::max(worst_z, (s.z - ref.z).cwiseAbs().maxCoeff());
      if (s.status == QPStatus::optimal) {
        ++optimal;
        worst_kkt = std::max(worst_kkt, check_kkt(p, s.z, s.dual_box, s.dual_ineq).max());
      }
    }
    report(7, worst_z <= 1e-7 && worst_kkt <= 1e-8 && optimal == 200, "QP solver correctness",
           std::to_string(optimal) + "/200 optimal, max argmin error " + fmt(worst_z) +
               " (need <= 1e-7), max KKT residual " + fmt(worst_kkt) + " (need <= 1e-8)");
  }

  // 8: rest in, rest out.
  {
    const Eigen::VectorXd y =
        predict(pred, past_similarity(pred, Eigen::VectorXd::Zero(2 * pred.t_ini)),
                Eigen::VectorXd::Zero(pred.n_horizon));
    const double m = y.cwiseAbs().maxCoeff();
    report(8, m <= 1e-3, "equilibrium consistency at rest",
           "max |y_hat| " + fmt(m) + " (need <= 1e-3)");
  }

  // 9: every QP solved to optimality.
  {
    bool ok = true;
    std::string detail;
    for (const auto& s : run.scenarios) {
      for (const auto& c : s.controllers) {
        ok &= c.metrics.feasible_fraction == 1.0 && !c.diverged;
        detail += s.name + "/" + std::string(to_string(c.kind)) + " " +
                  fmt(100.0 * c.metrics.feasible_fraction) + "%  ";
      }
    }
    report(9, ok, "optimal QP status at every step", detail + "(need 100%)");
  }

  // 10: Gram matrix of the default dataset.
  {
    const double lmin = check_pe(gram(pred.kernel_past, data.d_ini));
    report(10, lmin >= -1e-10 && lmin > 0.0, "past-window Gram matrix positive definite",
           "lambda_min " + fmt(lmin) + " over T = " + std::to_string(data.num_columns()));
  }

  // 11: two CLI runs with one seed give byte-identical CSVs.
  {
    std::map<std::string, std::string> a, b;
    if (!cli.empty()) {
      for (const char* d : {"cli1", "cli2"}) {
        const std::string cmd = "\"" + cli + "\" all --seed 0 --out \"" + (work / d).string() +
                                "\" > \"" + (work / d).string() + ".log\" 2>&1";
        if (std::system(cmd.c_str()) != 0) std::fprintf(stderr, "command failed: %s\n", cmd.c_str());
      }
      a = csv_bytes(work / "cli1");
      b = csv_bytes(work / "cli2");
    } else {
      std::ostringstream sink;
      run_all(cfg, work / "again", false, sink);
      a = csv_bytes(work / "run");
      b = csv_bytes(work / "again");
    }
    const bool ok = !a.empty() && a == b;
    report(11, ok, "deterministic output",
           std::to_string(a.size()) + " CSV files compared, " + (ok ? "identical" : "different"));
  }

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
