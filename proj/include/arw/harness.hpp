#pragma once

// Experiment driver: Poisson initialization, the event F, Monte Carlo
// estimates of P_M(A_r) and of the embedded-process statistic V, exact tail
// oracles for sums of indicators, and the certificate assembling
//
//   P[V < eps*M/4] <= P[W <= a + eps*M/4] + P[L-hat >= a],
//   a = (1 - eps/2) E[W],
//
// with E[W] = (N/|B|) sum_x h(x) and E[L-hat] = sum_x h(x) taken from the
// exact solver.
//
// Reproducibility contract: every trial draws its seed from
// trial_seed(master, dims, M, norm, mu, lambda, trial) (a fixed mix chain
// over those fields, floats by bit pattern), results are merged in trial
// order, and files are written with a fixed column order and %.17g floats.
// Outputs are therefore byte-identical for a given spec, whatever the
// thread count.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "arw/gr.hpp"
#include "arw/idla.hpp"
#include "arw/lattice.hpp"
#include "arw/potential.hpp"
#include "arw/rng.hpp"

namespace arw::harness {

enum class Mode { stabilize, idla, certificate, scan };
enum class Format { csv, json };

struct ExperimentSpec {
  int dims = 1;
  std::vector<int> radii = {20};
  lattice::Norm norm = lattice::Norm::euclidean;
  double mu = 1.5;
  double lambda = 1.0;
  int64_t r = 1;
  int64_t trials = 100;
  uint64_t seed = 1;
  uint64_t step_cap = gr::kDefaultStepCap;
  int threads = 1;
  Mode mode = Mode::stabilize;

  void validate() const;  // throws std::invalid_argument
};

uint64_t trial_seed(uint64_t master, int dims, int M, lattice::Norm norm,
                    double mu, double lambda, int64_t trial);

// Run fn(0..count-1) on up to `threads` workers. Each index must write only
// its own slot of any shared output.
void parallel_for(int64_t count, int threads,
                  const std::function<void(int64_t)>& fn);

// i.i.d. Poisson(mu) active particles per site. Throws for mu <= 0.
gr::Configuration init_poisson(const lattice::Ball& ball, double mu,
                               uint64_t seed);

// F = {n > (1+eps)|B|} with eps = (mu-1)/2; N = ceil((1+eps)|B|).
// Throws for mu <= 1 (the proof regime needs eps > 0).
struct EventF {
  bool holds = false;
  int64_t n = 0;
  double epsilon = 0.0;
  int64_t N = 0;
};

EventF event_F(const gr::Configuration& config, const lattice::Ball& ball,
               double mu);

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

Interval wilson95(int64_t successes, int64_t trials);

// One (mu, lambda, M) stabilization cell: empirical P_M(A_r).
struct ArCell {
  int dims;
  int M;
  lattice::Norm norm;
  double mu, lambda;
  int64_t r;
  int64_t trials = 0;
  int64_t successes = 0;  // fixated with origin_visits >= r
  int64_t capped = 0;     // step-cap exhausted, never a success
  double p_hat = 0.0;
  Interval ci;
  double mean_origin_visits = 0.0;
  double mean_steps = 0.0;
};

ArCell run_ar_cell(const ExperimentSpec& spec, int M);
std::vector<ArCell> estimate_Ar(const ExperimentSpec& spec);  // mode=stabilize

// Uniform draw of `count` particles (as their site ids) from a
// configuration, without replacement, in selection order.
std::vector<int32_t> select_particles(const gr::Configuration& config,
                                      int64_t count, rng::SplitMix64& gen);

// V-statistic of the embedded process, conditioned on F by rejection.
// lambda plays no role here, so per-trial seeds use lambda = 0; a
// certificate's empirical column therefore matches estimate_V under the
// same master seed.
struct VSummary {
  int dims;
  int M;
  lattice::Norm norm;
  double mu;
  double epsilon = 0.0;
  int64_t N = 0;
  int64_t ball_size = 0;
  double threshold = 0.0;  // eps*M/4
  int64_t trials_total = 0;
  int64_t trials_F = 0;
  int64_t successes = 0;  // V > threshold among F-trials
  double p_cond = 0.0;    // NaN when no trial satisfies F
  double mean_V = 0.0;    // over F-trials
  std::vector<int64_t> v_values;  // V per F-trial, trial order
};

VSummary estimate_V_cell(const ExperimentSpec& spec, int M);
std::vector<VSummary> estimate_V(const ExperimentSpec& spec);  // mode=idla

// Exact binomial tail by summation of the smaller side when it has at most
// 1e6 terms, Chernoff bound beyond (value is then an upper bound, flagged
// not exact). Tails are inclusive: lower = P[S <= x], upper = P[S >= x].
enum class TailSide { lower, upper };

struct TailResult {
  double value = 0.0;
  bool exact = true;
};

TailResult binomial_tail(int64_t n, double p, double x, TailSide side);

// Exact P[sum Bernoulli(p_i) >= k] by the O(n k) convolution recurrence.
double poisson_binomial_tail_geq(const std::vector<double>& probs, int64_t k);

struct CertificateReport {
  int dims;
  int M;
  lattice::Norm norm;
  double mu;
  double epsilon = 0.0;       // (mu-1)/2
  double epsilon_used = 0.0;  // clamped below 1/2 when necessary
  bool epsilon_clamped = false;
  int64_t ball_size = 0;
  int64_t N = 0;
  double sum_h = 0.0;      // E[L-hat]
  double g00 = 0.0;
  double exit_time0 = 0.0;
  double EW = 0.0;         // (N/|B|) sum_h
  double a = 0.0;          // (1 - eps/2) E[W]
  double bound_W = 0.0;    // P[W <= a + eps*M/4]
  double bound_L = 0.0;    // P[L-hat >= a]
  double total_bound = 0.0;
  bool bounds_exact = true;
  // Empirical comparison column, filled when empirical_trials > 0.
  int64_t trials_total = 0;
  int64_t trials_F = 0;
  int64_t successes = 0;
  double p_empirical = 0.0;
  bool has_empirical = false;
};

CertificateReport certificate(int dims, int M, double mu, lattice::Norm norm,
                              int64_t empirical_trials, uint64_t seed,
                              int threads);

// Phase table over a (mu, lambda) grid; each cell is exactly the
// run_ar_cell of the matching single-cell spec, same seeds included.
std::vector<ArCell> scan(const ExperimentSpec& base,
                         const std::vector<double>& mus,
                         const std::vector<double>& lambdas);

// Randomized check campaigns used by the verify-* subcommands and the
// acceptance suite. Instances: d in {1,2}, M <= 6, at most 20 particles,
// lambda in {0.5, 1, 2}; abelian instances run under random/fifo/lifo.
struct CampaignResult {
  int64_t instances = 0;
  int64_t passes = 0;
  int64_t failures = 0;
  int64_t inconclusive = 0;
  int64_t first_failed_instance = -1;
  std::string first_failure;
  std::vector<gr::CheckStatus> statuses;  // per instance
};

CampaignResult abelian_campaign(int64_t instances, uint64_t seed, int threads);
CampaignResult monotone_campaign(int64_t instances, uint64_t seed, int threads);

// IDLA trial records for the `idla` subcommand and the indicator-sum tests.
// Starts are i.i.d. uniform, N = ceil((1+eps)|B|) from mu unless
// n_walks_override > 0.
struct IdlaRecord {
  int64_t trial = 0;
  uint64_t seed = 0;
  int64_t N = 0;
  int64_t V = 0;
  int64_t W = 0;
  int64_t L = 0;
  int64_t lhat = -1;  // -1 when not sampled
};

std::vector<IdlaRecord> run_idla_trials(const lattice::Ball& ball, double mu,
                                        int64_t n_walks_override,
                                        int64_t trials, uint64_t seed,
                                        bool with_lhat, int threads);

// --- output writers (fixed column order, %.17g floats, '\n' endings) ---

std::string fmt17(double x);

std::string ar_csv(const std::vector<ArCell>& cells, uint64_t seed);
std::string ar_json(const std::vector<ArCell>& cells, uint64_t seed);
std::string idla_csv(const std::vector<IdlaRecord>& records, int dims, int M,
                     lattice::Norm norm);
std::string idla_json(const std::vector<IdlaRecord>& records, int dims, int M,
                      lattice::Norm norm);
std::string green_csv(const lattice::Ball& ball,
                      const potential::GreenTable& table);
std::string green_json(const lattice::Ball& ball,
                       const potential::GreenTable& table);
std::string certificate_csv(const std::vector<CertificateReport>& reports);
std::string certificate_json(const std::vector<CertificateReport>& reports);
std::string campaign_csv(const CampaignResult& result, uint64_t seed);

void write_file(const std::string& path, const std::string& contents);

}  // namespace arw::harness
