// Acceptance suite: one pass/fail line per criterion, exit code equals the
// number of failed criteria. The CLI binary path is argv[1] (used by the
// determinism criterion).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "arw/gr.hpp"
#include "arw/harness.hpp"
#include "arw/idla.hpp"
#include "arw/lattice.hpp"
#include "arw/potential.hpp"
#include "arw/rng.hpp"

using namespace arw;
using harness::ExperimentSpec;
using lattice::Ball;
using lattice::Norm;

namespace {

std::string g_cli_path;

struct Criterion {
  std::string name;
  std::function<bool(std::string&)> run;
};

bool close_rel(double value, double target, double tol) {
  return std::abs(value - target) <= tol * std::max(1.0, std::abs(target));
}

// --- C1: exact d=1 values ---------------------------------------------

bool c1_line_exact(std::string& detail) {
  bool ok = true;
  std::ostringstream msg;
  for (int M : {5, 10, 50, 200}) {
    const Ball ball(1, M, Norm::sup);
    const auto [row, g00] = potential::green_row(ball);
    const auto u = potential::solve_exit_time(ball);
    const double e0 = u[ball.origin_id()];
    const bool g_ok = close_rel(g00, M, 1e-8);
    const bool e_ok = close_rel(e0, static_cast<double>(M) * M, 1e-8);
    ok = ok && g_ok && e_ok;
    msg << " M=" << M << ": g00=" << harness::fmt17(g00)
        << " exit0=" << harness::fmt17(e0) << (g_ok && e_ok ? "" : " <-");
  }
  detail = msg.str();
  return ok;
}

// --- C2: Green identities ----------------------------------------------

bool c2_green_identities(std::string& detail) {
  bool ok = true;
  double worst_point = 0.0, worst_sum = 0.0;
  for (int d : {1, 2}) {
    for (int M = 1; M <= 20; ++M) {
      const Ball ball(d, M, Norm::euclidean);
      const auto table = potential::build_green_table(ball);
      double sum_g = 0.0;
      for (int32_t s = 0; s < ball.size(); ++s) {
        worst_point = std::max(
            worst_point, std::abs(table.h[s] * table.g00 - table.g_row0[s]));
        sum_g += table.g_row0[s];
      }
      const double e0 = table.exit_time[ball.origin_id()];
      worst_sum = std::max(worst_sum, std::abs(sum_g - e0) / e0);
      ok = ok && worst_point <= 1e-8 && worst_sum <= 1e-8;
    }
  }
  std::ostringstream msg;
  msg << " max |h*g00 - G(0,x)|=" << worst_point
      << " max rel |sum G - E0tau|=" << worst_sum;
  detail = msg.str();
  return ok;
}

// --- C3: higher-dimension bounds ----------------------------------------

bool c3_high_dim_bounds(std::string& detail) {
  bool ok = true;
  std::ostringstream msg;
  for (int d : {2, 3}) {
    for (int M : {5, 10, 20}) {
      const Ball ball(d, M, Norm::euclidean);
      const auto [row, g00] = potential::green_row(ball);
      const auto u = potential::solve_exit_time(ball);
      const double e0 = u[ball.origin_id()];
      const bool g_ok = g00 < static_cast<double>(M);
      const bool e_ok = e0 >= static_cast<double>(M) * M * (1.0 - 1e-9) &&
                        e0 <= static_cast<double>(M + 1) * (M + 1);
      ok = ok && g_ok && e_ok;
      msg << " d=" << d << ",M=" << M << ": g00=" << g00 << " exit0=" << e0
          << (g_ok && e_ok ? "" : " <-");
    }
  }
  detail = msg.str();
  return ok;
}

// --- C4/C5: randomized campaigns ----------------------------------------

bool c4_abelian(std::string& detail) {
  const auto res = harness::abelian_campaign(200, 20240142, 8);
  std::ostringstream msg;
  msg << " " << res.passes << "/" << res.instances << " pass";
  if (res.failures > 0)
    msg << "; first failure at instance " << res.first_failed_instance << " ("
        << res.first_failure << ")";
  detail = msg.str();
  return res.failures == 0 && res.inconclusive == 0;
}

bool c5_monotone(std::string& detail) {
  const auto res = harness::monotone_campaign(200, 20240143, 8);
  std::ostringstream msg;
  msg << " " << res.passes << "/" << res.instances << " pass";
  if (res.failures > 0)
    msg << "; first failure at instance " << res.first_failed_instance << " ("
        << res.first_failure << ")";
  detail = msg.str();
  return res.failures == 0 && res.inconclusive == 0;
}

// --- C6: pathwise coupling inequality ------------------------------------

bool c6_coupling(std::string& detail) {
  const Ball ball(1, 20, Norm::sup);
  const auto records =
      harness::run_idla_trials(ball, 1.5, 0, 10'000, 61, false, 8);
  int64_t violations = 0;
  for (const auto& r : records)
    if (r.V < r.W - r.L) ++violations;
  std::ostringstream msg;
  msg << " " << records.size() << " trials, " << violations
      << " violations of V >= W - L";
  detail = msg.str();
  return violations == 0;
}

// --- C7: indicator-sum laws ----------------------------------------------

bool c7_indicator_sums(std::string& detail) {
  bool ok = true;
  std::ostringstream msg;
  struct Case {
    int d;
    int M;
    Norm norm;
  };
  for (const Case& c : {Case{1, 20, Norm::sup}, Case{2, 8, Norm::euclidean}}) {
    const Ball ball(c.d, c.M, c.norm);
    const auto table = potential::build_green_table(ball);
    const double sum_h = potential::elhat_exact(table, ball);
    const int64_t N = static_cast<int64_t>(std::ceil(1.25 * ball.size()));
    const double expect_W = static_cast<double>(N) / ball.size() * sum_h;

    const auto records =
        harness::run_idla_trials(ball, 1.5, 0, 10'000, 62, true, 8);
    double w_mean = 0.0, w_m2 = 0.0, l_mean = 0.0, l_m2 = 0.0;
    for (const auto& r : records) {
      w_mean += static_cast<double>(r.W);
      w_m2 += static_cast<double>(r.W) * r.W;
      l_mean += static_cast<double>(r.lhat);
      l_m2 += static_cast<double>(r.lhat) * r.lhat;
    }
    const double n = static_cast<double>(records.size());
    w_mean /= n;
    l_mean /= n;
    const double w_se = std::sqrt((w_m2 / n - w_mean * w_mean) / n);
    const double l_se = std::sqrt((l_m2 / n - l_mean * l_mean) / n);
    const bool w_ok = std::abs(w_mean - expect_W) <= 3.0 * w_se;
    const bool l_ok = std::abs(l_mean - sum_h) <= 3.0 * l_se;
    ok = ok && w_ok && l_ok;
    msg << " d=" << c.d << ",M=" << c.M << ": W " << w_mean << " vs "
        << expect_W << (w_ok ? "" : " <-") << ", L-hat " << l_mean << " vs "
        << sum_h << (l_ok ? "" : " <-") << ";";
  }
  detail = msg.str();
  return ok;
}

// --- C8: non-fixation trend ----------------------------------------------

bool c8_nonfixation_trend(std::string& detail) {
  ExperimentSpec spec;
  spec.dims = 1;
  spec.radii = {10, 20, 40, 80};
  spec.norm = Norm::sup;
  spec.mu = 1.5;
  spec.lambda = 1.0;
  spec.r = 10;
  spec.trials = 300;
  spec.seed = 8088;
  spec.threads = 8;
  const auto cells = harness::estimate_Ar(spec);

  bool ok = true;
  std::ostringstream msg;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].capped > 0) ok = false;
    if (i > 0 && cells[i].ci.hi < cells[i - 1].ci.lo) ok = false;
    msg << " M=" << cells[i].M << ": p=" << cells[i].p_hat << " ["
        << cells[i].ci.lo << "," << cells[i].ci.hi << "]";
  }
  if (cells.back().p_hat < 0.9) ok = false;
  detail = msg.str();
  return ok;
}

// --- C9: certificate decay and simulation consistency ---------------------

bool c9_certificate(std::string& detail) {
  bool ok = true;
  std::ostringstream msg;
  double prev_bound = 2.1;
  for (int M : {20, 40, 80}) {
    const auto rep =
        harness::certificate(1, M, 1.5, Norm::sup, 400, 4242, 8);
    const bool decay = rep.total_bound < prev_bound;
    double sigma = 0.0;
    if (rep.trials_F > 0)
      sigma = std::sqrt(
          std::max(rep.p_empirical * (1.0 - rep.p_empirical), 0.0) /
          static_cast<double>(rep.trials_F));
    const bool consistent =
        rep.trials_F > 0 &&
        rep.p_empirical >= 1.0 - rep.total_bound - 3.0 * sigma;
    ok = ok && decay && consistent && rep.bounds_exact;
    msg << " M=" << M << ": bound=" << rep.total_bound
        << " p_emp=" << rep.p_empirical << " (F " << rep.trials_F << "/"
        << rep.trials_total << ")" << (decay && consistent ? "" : " <-");
    prev_bound = rep.total_bound;
  }
  detail = msg.str();
  return ok;
}

// --- C10: byte-identical CLI outputs --------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = g_cli_path + " " + args + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return rc < 0 ? rc : WEXITSTATUS(rc);
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

bool c10_determinism(std::string& detail) {
  if (g_cli_path.empty()) {
    detail = " no CLI path given (pass it as argv[1])";
    return false;
  }
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "arw_acceptance";
  fs::create_directories(dir);

  struct Job {
    std::string name;
    std::string args;   // without --out
    std::string variant;  // thread-count variation, same expected bytes
  };
  const std::vector<Job> jobs = {
      {"stabilize",
       "stabilize --dim 1 --radius 12 --norm linf --mu 1.5 --lambda 1 --r 3 "
       "--trials 40 --seed 99 --format csv --threads 1",
       "stabilize --dim 1 --radius 12 --norm linf --mu 1.5 --lambda 1 --r 3 "
       "--trials 40 --seed 99 --format csv --threads 4"},
      {"idla",
       "idla --dim 1 --radius 10 --norm linf --mu 1.5 --trials 50 --seed 5 "
       "--with-lhat --format json --threads 1",
       "idla --dim 1 --radius 10 --norm linf --mu 1.5 --trials 50 --seed 5 "
       "--with-lhat --format json --threads 4"},
      {"certificate",
       "certificate --dim 1 --radius 20 --norm l2 --mu 1.5 --trials 50 "
       "--seed 3 --format csv --threads 1",
       "certificate --dim 1 --radius 20 --norm l2 --mu 1.5 --trials 50 "
       "--seed 3 --format csv --threads 4"},
      {"green", "green --dim 2 --radius 6 --norm l2 --format csv", ""},
      {"scan",
       "scan --dim 1 --radius 8 --norm linf --mu-grid 1.2 --mu-grid 1.8 "
       "--lambda-grid 0.5 --lambda-grid 2 --r 2 --trials 20 --seed 11 "
       "--format csv --threads 4",
       ""},
  };

  bool ok = true;
  std::ostringstream msg;
  for (const auto& job : jobs) {
    const fs::path f1 = dir / (job.name + "_1.out");
    const fs::path f2 = dir / (job.name + "_2.out");
    const int r1 = run_cli(job.args + " --out " + f1.string());
    const int r2 = run_cli(job.args + " --out " + f2.string());
    bool job_ok = r1 == 0 && r2 == 0 && slurp(f1) == slurp(f2) &&
                  !slurp(f1).empty();
    if (!job.variant.empty()) {
      const fs::path f3 = dir / (job.name + "_3.out");
      const int r3 = run_cli(job.variant + " --out " + f3.string());
      job_ok = job_ok && r3 == 0 && slurp(f1) == slurp(f3);
    }
    ok = ok && job_ok;
    msg << " " << job.name << (job_ok ? ": ok" : ": MISMATCH") << ";";
  }
  detail = msg.str();
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc > 1) g_cli_path = argv[1];

  const std::vector<Criterion> criteria = {
      {"C1 exact d=1 potential theory (g00=M, exit0=M^2)", c1_line_exact},
      {"C2 Green identities (d=1,2, M<=20)", c2_green_identities},
      {"C3 higher-dimension bounds (d=2,3)", c3_high_dim_bounds},
      {"C4 abelianness, 200 randomized instances", c4_abelian},
      {"C5 monotonicity, 200 randomized pairs", c5_monotone},
      {"C6 coupling inequality V >= W - L, 10^4 trials", c6_coupling},
      {"C7 indicator-sum laws for W and L-hat", c7_indicator_sums},
      {"C8 non-fixation trend P_M(A_10)", c8_nonfixation_trend},
      {"C9 certificate decay and consistency", c9_certificate},
      {"C10 determinism of CLI outputs", c10_determinism},
  };

  int failures = 0;
  for (const auto& crit : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool pass = false;
    try {
      pass = crit.run(detail);
    } catch (const std::exception& e) {
      detail = std::string(" exception: ") + e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] %s (%.1fs)%s\n", pass ? "PASS" : "FAIL",
                crit.name.c_str(), secs, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
  }
  return failures;
}
