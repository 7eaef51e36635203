// Command line driver for the activated-random-walk simulator.
//
// Subcommands: stabilize, idla, green, certificate, scan, verify-abelian,
// verify-monotone. A flat JSON config file (--config) provides defaults for
// the same flags; explicit flags win. Exit codes: 0 success, 1 domain or
// usage error, 2 step-cap exhaustion in any trial (partial output is still
// written).

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arw/gr.hpp"
#include "arw/harness.hpp"
#include "arw/idla.hpp"
#include "arw/lattice.hpp"
#include "arw/potential.hpp"
#include "arw/rng.hpp"
#include "json.hpp"

namespace {

using arw::harness::ExperimentSpec;
using arw::harness::Format;
using arw::lattice::Norm;

struct CliOptions {
  ExperimentSpec spec;
  std::string norm_name = "l2";
  std::string out;
  std::string format_name = "csv";
  std::string snapshot;
  std::vector<double> mus;      // scan grid
  std::vector<double> lambdas;  // scan grid
  int64_t n_walks = 0;          // idla: 0 = derive from mu
  bool with_lhat = false;
};

Norm parse_norm(const std::string& name) {
  if (name == "l2") return Norm::euclidean;
  if (name == "linf") return Norm::sup;
  throw std::invalid_argument("unknown norm: " + name + " (use l2 or linf)");
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  throw std::invalid_argument("unknown format: " + name);
}

// Expand --config file.json into argv-style tokens placed before the real
// flags, so explicitly passed options override the file.
std::vector<std::string> config_tokens(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot read config: " + path);
  nlohmann::json cfg = nlohmann::json::parse(f);
  if (!cfg.is_object())
    throw std::invalid_argument("config must be a flat JSON object");
  std::vector<std::string> tokens;
  for (const auto& [key, value] : cfg.items()) {
    tokens.push_back("--" + key);
    if (value.is_array()) {
      for (const auto& v : value) tokens.push_back(v.dump());
    } else if (value.is_string()) {
      tokens.push_back(value.get<std::string>());
    } else {
      tokens.push_back(value.dump());
    }
  }
  return tokens;
}

void add_common_options(CLI::App* cmd, CliOptions& opt) {
  cmd->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  cmd->add_option("--dim", opt.spec.dims, "lattice dimension");
  cmd->add_option("--radius", opt.spec.radii, "ball radius M (repeatable)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  cmd->add_option("--norm", opt.norm_name, "ball norm: l2 or linf");
  cmd->add_option("--mu", opt.spec.mu, "mean particles per site");
  cmd->add_option("--lambda", opt.spec.lambda, "sleep rate");
  cmd->add_option("--r", opt.spec.r, "origin visit threshold");
  cmd->add_option("--trials", opt.spec.trials, "Monte Carlo trials");
  cmd->add_option("--seed", opt.spec.seed, "master seed");
  cmd->add_option("--step-cap", opt.spec.step_cap, "max envelope burns per trial");
  cmd->add_option("--threads", opt.spec.threads, "worker threads");
  cmd->add_option("--out", opt.out, "output file path");
  cmd->add_option("--format", opt.format_name, "output format: csv or json");
}

void emit(const CliOptions& opt, const std::string& contents) {
  if (opt.out.empty())
    std::cout << contents;
  else
    arw::harness::write_file(opt.out, contents);
}

int run_stabilize(CliOptions& opt) {
  opt.spec.mode = arw::harness::Mode::stabilize;
  const auto cells = arw::harness::estimate_Ar(opt.spec);
  emit(opt, parse_format(opt.format_name) == Format::csv
                ? arw::harness::ar_csv(cells, opt.spec.seed)
                : arw::harness::ar_json(cells, opt.spec.seed));

  if (!opt.snapshot.empty()) {
    // Final state of trial 0 at the first radius, for inspection.
    const arw::lattice::Ball ball(opt.spec.dims, opt.spec.radii.front(),
                                  opt.spec.norm);
    const uint64_t s =
        arw::harness::trial_seed(opt.spec.seed, opt.spec.dims,
                                 opt.spec.radii.front(), opt.spec.norm,
                                 opt.spec.mu, opt.spec.lambda, 0);
    const arw::gr::EnvelopeTapes tapes(arw::rng::derive(s, 11), opt.spec.dims,
                                       opt.spec.lambda);
    const auto config =
        arw::harness::init_poisson(ball, opt.spec.mu, arw::rng::derive(s, 12));
    const auto res = arw::gr::stabilize(
        config, tapes, arw::gr::OrderPolicy::random(arw::rng::derive(s, 13)),
        ball, opt.spec.step_cap);
    arw::harness::write_file(
        opt.snapshot,
        arw::gr::snapshot_json(ball, res.config, res.odometer, res.fixated) +
            "\n");
  }

  int64_t capped = 0;
  for (const auto& c : cells) {
    std::fprintf(stderr, "M=%d  P(A_%lld)=%s  [%s, %s]  capped=%lld\n", c.M,
                 static_cast<long long>(c.r),
                 arw::harness::fmt17(c.p_hat).c_str(),
                 arw::harness::fmt17(c.ci.lo).c_str(),
                 arw::harness::fmt17(c.ci.hi).c_str(),
                 static_cast<long long>(c.capped));
    capped += c.capped;
  }
  return capped > 0 ? 2 : 0;
}

int run_idla(CliOptions& opt) {
  const arw::lattice::Ball ball(opt.spec.dims, opt.spec.radii.front(),
                                opt.spec.norm);
  const auto records = arw::harness::run_idla_trials(
      ball, opt.spec.mu, opt.n_walks, opt.spec.trials, opt.spec.seed,
      opt.with_lhat, opt.spec.threads);
  emit(opt, parse_format(opt.format_name) == Format::csv
                ? arw::harness::idla_csv(records, opt.spec.dims,
                                         opt.spec.radii.front(), opt.spec.norm)
                : arw::harness::idla_json(records, opt.spec.dims,
                                          opt.spec.radii.front(),
                                          opt.spec.norm));
  return 0;
}

int run_green(CliOptions& opt) {
  const arw::lattice::Ball ball(opt.spec.dims, opt.spec.radii.front(),
                                opt.spec.norm);
  const auto table = arw::potential::build_green_table(ball);
  emit(opt, parse_format(opt.format_name) == Format::csv
                ? arw::harness::green_csv(ball, table)
                : arw::harness::green_json(ball, table));
  std::fprintf(stderr, "g00=%s exit_time(0)=%s sum_h=%s\n",
               arw::harness::fmt17(table.g00).c_str(),
               arw::harness::fmt17(table.exit_time[ball.origin_id()]).c_str(),
               arw::harness::fmt17(
                   arw::potential::elhat_exact(table, ball)).c_str());
  return 0;
}

int run_certificate(CliOptions& opt) {
  std::vector<arw::harness::CertificateReport> reports;
  for (int M : opt.spec.radii)
    reports.push_back(arw::harness::certificate(opt.spec.dims, M, opt.spec.mu,
                                                opt.spec.norm, opt.spec.trials,
                                                opt.spec.seed,
                                                opt.spec.threads));
  emit(opt, parse_format(opt.format_name) == Format::csv
                ? arw::harness::certificate_csv(reports)
                : arw::harness::certificate_json(reports));
  for (const auto& r : reports)
    std::fprintf(stderr, "M=%d total_bound=%s%s\n", r.M,
                 arw::harness::fmt17(r.total_bound).c_str(),
                 r.epsilon_clamped ? " (eps clamped below 1/2)" : "");
  return 0;
}

int run_scan(CliOptions& opt) {
  if (opt.mus.empty()) opt.mus = {opt.spec.mu};
  if (opt.lambdas.empty()) opt.lambdas = {opt.spec.lambda};
  opt.spec.mode = arw::harness::Mode::scan;
  const auto cells = arw::harness::scan(opt.spec, opt.mus, opt.lambdas);
  emit(opt, parse_format(opt.format_name) == Format::csv
                ? arw::harness::ar_csv(cells, opt.spec.seed)
                : arw::harness::ar_json(cells, opt.spec.seed));
  int64_t capped = 0;
  for (const auto& c : cells) capped += c.capped;
  return capped > 0 ? 2 : 0;
}

int run_campaign(CliOptions& opt, bool abelian) {
  const auto result =
      abelian
          ? arw::harness::abelian_campaign(opt.spec.trials, opt.spec.seed,
                                           opt.spec.threads)
          : arw::harness::monotone_campaign(opt.spec.trials, opt.spec.seed,
                                            opt.spec.threads);
  if (!opt.out.empty())
    arw::harness::write_file(opt.out,
                             arw::harness::campaign_csv(result, opt.spec.seed));
  std::fprintf(stderr, "%lld instances: %lld pass, %lld fail, %lld inconclusive\n",
               static_cast<long long>(result.instances),
               static_cast<long long>(result.passes),
               static_cast<long long>(result.failures),
               static_cast<long long>(result.inconclusive));
  if (result.failures > 0) {
    std::fprintf(stderr, "first failure: instance %lld (%s)\n",
                 static_cast<long long>(result.first_failed_instance),
                 result.first_failure.c_str());
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"activated random walks: stabilization, embedded IDLA, "
               "lattice potential theory, non-fixation certificates"};
  app.require_subcommand(1);

  CliOptions opt;
  std::string config_path;
  app.add_option("--config", config_path,
                 "flat JSON file with flag defaults")
      ->envname("ARW_CONFIG");

  CLI::App* stab = app.add_subcommand("stabilize", "estimate P_M(A_r)");
  add_common_options(stab, opt);
  stab->add_option("--snapshot", opt.snapshot,
                   "write trial-0 final state snapshot (JSON)");
  CLI::App* idla = app.add_subcommand("idla", "coupled IDLA trials");
  add_common_options(idla, opt);
  idla->add_option("--n-walks", opt.n_walks, "override walk count");
  idla->add_flag("--with-lhat", opt.with_lhat, "sample L-hat per trial");
  CLI::App* green = app.add_subcommand("green", "exact killed-walk table");
  add_common_options(green, opt);
  CLI::App* cert = app.add_subcommand("certificate",
                                      "non-fixation certificate (mu > 1)");
  add_common_options(cert, opt);
  CLI::App* scan = app.add_subcommand("scan", "phase table over (mu, lambda)");
  add_common_options(scan, opt);
  scan->add_option("--mu-grid", opt.mus, "scan values of mu")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  scan->add_option("--lambda-grid", opt.lambdas, "scan values of lambda")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  CLI::App* vab = app.add_subcommand("verify-abelian",
                                     "randomized order-independence check");
  add_common_options(vab, opt);
  CLI::App* vmo = app.add_subcommand("verify-monotone",
                                     "randomized monotonicity check");
  add_common_options(vmo, opt);

  // Config expansion: re-parse with the file's tokens in front.
  std::vector<std::string> args(argv + 1, argv + argc);
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) {
      try {
        const auto extra = config_tokens(args[i + 1]);
        // Insert after the subcommand name so they land in its scope.
        size_t at = 0;
        while (at < args.size() && !args[at].empty() && args[at][0] != '-') ++at;
        if (at < args.size()) ++at;
        args.insert(args.begin() + static_cast<long>(at), extra.begin(),
                    extra.end());
      } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
      }
      break;
    }
  }

  try {
    std::vector<const char*> cargs;
    cargs.push_back(argv[0]);
    for (const auto& a : args) cargs.push_back(a.c_str());
    app.parse(static_cast<int>(cargs.size()), cargs.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    opt.spec.norm = parse_norm(opt.norm_name);
    parse_format(opt.format_name);  // validate early
    if (stab->parsed()) return run_stabilize(opt);
    if (idla->parsed()) return run_idla(opt);
    if (green->parsed()) return run_green(opt);
    if (cert->parsed()) return run_certificate(opt);
    if (scan->parsed()) return run_scan(opt);
    if (vab->parsed()) return run_campaign(opt, true);
    if (vmo->parsed()) return run_campaign(opt, false);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "domain error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
