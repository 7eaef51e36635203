#include "arw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "arw/potential.hpp"
#include "arw/rng.hpp"
#include "json.hpp"

namespace arw::harness {

using lattice::Ball;
using lattice::Norm;

namespace {

std::string norm_name(Norm norm) {
  return norm == Norm::euclidean ? "l2" : "linf";
}

// Stream tags separating the independent randomness of one trial.
enum : uint64_t {
  kTagTapes = 11,
  kTagPoisson = 12,
  kTagPolicy = 13,
  kTagSelect = 21,
  kTagWalks = 22,
  kTagLhat = 23,
};

}  // namespace

void ExperimentSpec::validate() const {
  if (dims < 1) throw std::invalid_argument("spec: dims must be >= 1");
  if (radii.empty()) throw std::invalid_argument("spec: no radius given");
  for (int M : radii)
    if (M < 1) throw std::invalid_argument("spec: radius must be >= 1");
  if (!(mu > 0.0)) throw std::invalid_argument("spec: mu must be > 0");
  if (!(lambda >= 0.0)) throw std::invalid_argument("spec: lambda must be >= 0");
  if (r < 1) throw std::invalid_argument("spec: r must be >= 1");
  if (trials < 1) throw std::invalid_argument("spec: trials must be >= 1");
  if (step_cap < 1) throw std::invalid_argument("spec: step cap must be >= 1");
  if (threads < 1) throw std::invalid_argument("spec: threads must be >= 1");
}

uint64_t trial_seed(uint64_t master, int dims, int M, Norm norm, double mu,
                    double lambda, int64_t trial) {
  uint64_t h = rng::derive(master, 0x41525754ull);
  h = rng::derive(h, static_cast<uint64_t>(dims));
  h = rng::derive(h, static_cast<uint64_t>(M));
  h = rng::derive(h, norm == Norm::euclidean ? 0u : 1u);
  h = rng::derive(h, std::bit_cast<uint64_t>(mu));
  h = rng::derive(h, std::bit_cast<uint64_t>(lambda));
  h = rng::derive(h, static_cast<uint64_t>(trial));
  return h;
}

void parallel_for(int64_t count, int threads,
                  const std::function<void(int64_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto worker = [&] {
    for (;;) {
      const int64_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = static_cast<int>(std::min<int64_t>(threads, count));
  pool.reserve(workers);
  for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

gr::Configuration init_poisson(const Ball& ball, double mu, uint64_t seed) {
  if (!(mu > 0.0)) throw std::invalid_argument("init_poisson: mu must be > 0");
  gr::Configuration config(ball.size());
  for (int32_t s = 0; s < ball.size(); ++s) {
    rng::SplitMix64 gen(rng::stream_word(seed, static_cast<uint64_t>(s), 0));
    config.active[s] = static_cast<int32_t>(rng::poisson(gen, mu));
  }
  return config;
}

EventF event_F(const gr::Configuration& config, const Ball& ball, double mu) {
  if (!(mu > 1.0))
    throw std::invalid_argument("event_F: mu must exceed 1");
  EventF ev;
  ev.epsilon = (mu - 1.0) / 2.0;
  ev.n = config.total_particles();
  const double threshold = (1.0 + ev.epsilon) * ball.size();
  ev.holds = static_cast<double>(ev.n) > threshold;
  ev.N = static_cast<int64_t>(std::ceil(threshold));
  return ev;
}

Interval wilson95(int64_t successes, int64_t trials) {
  if (trials <= 0) return {0.0, 1.0};
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double center = (p + z * z / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

ArCell run_ar_cell(const ExperimentSpec& spec, int M) {
  spec.validate();
  const Ball ball(spec.dims, M, spec.norm);
  ArCell cell;
  cell.dims = spec.dims;
  cell.M = M;
  cell.norm = spec.norm;
  cell.mu = spec.mu;
  cell.lambda = spec.lambda;
  cell.r = spec.r;
  cell.trials = spec.trials;

  struct Trial {
    bool fixated = false;
    int64_t visits = 0;
    uint64_t steps = 0;
  };
  std::vector<Trial> out(spec.trials);
  parallel_for(spec.trials, spec.threads, [&](int64_t t) {
    const uint64_t s = trial_seed(spec.seed, spec.dims, M, spec.norm, spec.mu,
                                  spec.lambda, t);
    const gr::EnvelopeTapes tapes(rng::derive(s, kTagTapes), spec.dims,
                                  spec.lambda);
    const gr::Configuration config =
        init_poisson(ball, spec.mu, rng::derive(s, kTagPoisson));
    const gr::StabilizeResult res =
        gr::stabilize(config, tapes,
                      gr::OrderPolicy::random(rng::derive(s, kTagPolicy)), ball,
                      spec.step_cap);
    out[t] = {res.fixated, res.odometer.origin_visits, res.steps};
  });

  double visit_sum = 0.0, step_sum = 0.0;
  for (const Trial& tr : out) {
    if (!tr.fixated)
      ++cell.capped;
    else if (tr.visits >= spec.r)
      ++cell.successes;
    visit_sum += static_cast<double>(tr.visits);
    step_sum += static_cast<double>(tr.steps);
  }
  cell.p_hat = static_cast<double>(cell.successes) / spec.trials;
  cell.ci = wilson95(cell.successes, spec.trials);
  cell.mean_origin_visits = visit_sum / spec.trials;
  cell.mean_steps = step_sum / spec.trials;
  return cell;
}

std::vector<ArCell> estimate_Ar(const ExperimentSpec& spec) {
  if (spec.mode != Mode::stabilize)
    throw std::invalid_argument("estimate_Ar: spec mode must be stabilize");
  std::vector<ArCell> cells;
  cells.reserve(spec.radii.size());
  for (int M : spec.radii) cells.push_back(run_ar_cell(spec, M));
  return cells;
}

std::vector<int32_t> select_particles(const gr::Configuration& config,
                                      int64_t count, rng::SplitMix64& gen) {
  std::vector<int32_t> particles;
  particles.reserve(static_cast<size_t>(config.total_particles()));
  for (int32_t s = 0; s < static_cast<int32_t>(config.active.size()); ++s) {
    for (int32_t k = 0; k < config.active[s] + config.sleeping[s]; ++k)
      particles.push_back(s);
  }
  if (count > static_cast<int64_t>(particles.size()))
    throw std::invalid_argument("select_particles: not enough particles");
  for (int64_t i = 0; i < count; ++i) {
    const int64_t j =
        i + static_cast<int64_t>(gen.next_below(particles.size() - i));
    std::swap(particles[i], particles[j]);
  }
  particles.resize(count);
  return particles;
}

namespace {

// Shared by estimate_V and the certificate's empirical column. The event F
// always uses the raw eps = (mu-1)/2; N and the pass threshold use
// eps_used, which a certificate may have clamped below 1/2 (eps_used <=
// eps, so F guarantees enough particles either way).
VSummary v_core(const Ball& ball, double mu, double eps_used, int64_t trials,
                uint64_t master, int threads) {
  VSummary sum;
  sum.dims = ball.dims();
  sum.M = ball.radius();
  sum.norm = ball.norm();
  sum.mu = mu;
  sum.epsilon = eps_used;
  sum.ball_size = ball.size();
  sum.N = static_cast<int64_t>(std::ceil((1.0 + eps_used) * ball.size()));
  sum.threshold = eps_used * ball.radius() / 4.0;
  sum.trials_total = trials;

  struct Out {
    bool in_F = false;
    int64_t V = 0;
  };
  std::vector<Out> out(trials);
  parallel_for(trials, threads, [&](int64_t t) {
    const uint64_t s = trial_seed(master, ball.dims(), ball.radius(),
                                  ball.norm(), mu, 0.0, t);
    const gr::Configuration config =
        init_poisson(ball, mu, rng::derive(s, kTagPoisson));
    const EventF ev = event_F(config, ball, mu);
    if (!ev.holds) return;
    rng::SplitMix64 gen(rng::derive(s, kTagSelect));
    const std::vector<int32_t> starts =
        select_particles(config, sum.N, gen);
    const idla::EmbeddedResult emb =
        idla::run_embedded(ball, starts, rng::derive(s, kTagWalks));
    out[t] = {true, emb.V};
  });

  double v_sum = 0.0;
  for (const Out& o : out) {
    if (!o.in_F) continue;
    ++sum.trials_F;
    sum.v_values.push_back(o.V);
    v_sum += static_cast<double>(o.V);
    if (static_cast<double>(o.V) > sum.threshold) ++sum.successes;
  }
  if (sum.trials_F > 0) {
    sum.p_cond = static_cast<double>(sum.successes) / sum.trials_F;
    sum.mean_V = v_sum / sum.trials_F;
  } else {
    sum.p_cond = std::numeric_limits<double>::quiet_NaN();
    sum.mean_V = std::numeric_limits<double>::quiet_NaN();
  }
  return sum;
}

}  // namespace

VSummary estimate_V_cell(const ExperimentSpec& spec, int M) {
  spec.validate();
  if (!(spec.mu > 1.0))
    throw std::invalid_argument("estimate_V: mu must exceed 1");
  const Ball ball(spec.dims, M, spec.norm);
  return v_core(ball, spec.mu, (spec.mu - 1.0) / 2.0, spec.trials, spec.seed,
                spec.threads);
}

std::vector<VSummary> estimate_V(const ExperimentSpec& spec) {
  if (spec.mode != Mode::idla)
    throw std::invalid_argument("estimate_V: spec mode must be idla");
  std::vector<VSummary> out;
  out.reserve(spec.radii.size());
  for (int M : spec.radii) out.push_back(estimate_V_cell(spec, M));
  return out;
}

namespace {

constexpr int64_t kExactTailTerms = 1'000'000;

double log_choose(int64_t n, int64_t k) {
  return std::lgamma(static_cast<double>(n + 1)) -
         std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1));
}

// Kahan sum of binomial pmf over [lo, hi].
double pmf_sum(int64_t n, double p, int64_t lo, int64_t hi) {
  const double lp = std::log(p);
  const double l1p = std::log1p(-p);
  double sum = 0.0, comp = 0.0;
  for (int64_t j = lo; j <= hi; ++j) {
    const double term =
        std::exp(log_choose(n, j) + j * lp + (n - j) * l1p);
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
  return std::min(1.0, sum);
}

}  // namespace

TailResult binomial_tail(int64_t n, double p, double x, TailSide side) {
  if (n < 0) throw std::invalid_argument("binomial_tail: n < 0");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("binomial_tail: p outside [0, 1]");

  if (side == TailSide::lower) {
    if (x < 0.0) return {0.0, true};
    if (x >= static_cast<double>(n)) return {1.0, true};
    const int64_t k = static_cast<int64_t>(std::floor(x));  // 0 <= k < n
    if (p == 0.0) return {1.0, true};
    if (p == 1.0) return {0.0, true};
    if (k + 1 <= kExactTailTerms) return {pmf_sum(n, p, 0, k), true};
    if (n - k <= kExactTailTerms)
      return {std::max(0.0, 1.0 - pmf_sum(n, p, k + 1, n)), true};
    // Chernoff lower tail: P[S <= (1-d)np] <= exp(-d^2 np / 2).
    const double mean = static_cast<double>(n) * p;
    if (static_cast<double>(k) >= mean) return {1.0, false};
    const double d = 1.0 - static_cast<double>(k) / mean;
    return {std::exp(-d * d * mean / 2.0), false};
  }

  if (x <= 0.0) return {1.0, true};
  const int64_t k = static_cast<int64_t>(std::ceil(x));
  if (k > n) return {0.0, true};
  if (p == 0.0) return {0.0, true};
  if (p == 1.0) return {1.0, true};
  if (n - k + 1 <= kExactTailTerms) return {pmf_sum(n, p, k, n), true};
  if (k <= kExactTailTerms)
    return {std::max(0.0, 1.0 - pmf_sum(n, p, 0, k - 1)), true};
  // Chernoff upper tail: exp(-d^2 np / 3) for d <= 1, exp(-d np / 3) above.
  const double mean = static_cast<double>(n) * p;
  if (static_cast<double>(k) <= mean) return {1.0, false};
  const double d = static_cast<double>(k) / mean - 1.0;
  return {std::exp(-(d <= 1.0 ? d * d : d) * mean / 3.0), false};
}

double poisson_binomial_tail_geq(const std::vector<double>& probs, int64_t k) {
  for (double p : probs)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("poisson_binomial_tail: prob outside [0, 1]");
  const auto n = static_cast<int64_t>(probs.size());
  if (k <= 0) return 1.0;
  if (k > n) return 0.0;

  // f[j] = P[S = j] over the processed prefix, tracked only for j < k;
  // mass at j >= k leaves the window and is exactly the tail we want.
  std::vector<double> f(static_cast<size_t>(k), 0.0);
  f[0] = 1.0;
  int64_t processed = 0;
  for (double p : probs) {
    const int64_t top = std::min(processed + 1, k - 1);
    for (int64_t j = top; j >= 1; --j)
      f[j] = f[j] * (1.0 - p) + f[j - 1] * p;
    f[0] *= 1.0 - p;
    ++processed;
  }
  double cdf = 0.0, comp = 0.0;
  for (double v : f) {
    const double y = v - comp;
    const double t = cdf + y;
    comp = (t - cdf) - y;
    cdf = t;
  }
  return std::clamp(1.0 - cdf, 0.0, 1.0);
}

CertificateReport certificate(int dims, int M, double mu, Norm norm,
                              int64_t empirical_trials, uint64_t seed,
                              int threads) {
  if (!(mu > 1.0))
    throw std::invalid_argument("certificate: mu must exceed 1");
  const Ball ball(dims, M, norm);
  const potential::GreenTable table = potential::build_green_table(ball);

  CertificateReport rep;
  rep.dims = dims;
  rep.M = M;
  rep.norm = norm;
  rep.mu = mu;
  rep.epsilon = (mu - 1.0) / 2.0;
  rep.epsilon_clamped = rep.epsilon >= 0.5;  // the chain's algebra needs eps < 1/2
  rep.epsilon_used = std::min(rep.epsilon, 0.49);
  rep.ball_size = ball.size();
  rep.N = static_cast<int64_t>(
      std::ceil((1.0 + rep.epsilon_used) * ball.size()));
  rep.sum_h = potential::elhat_exact(table, ball);
  rep.g00 = table.g00;
  rep.exit_time0 = table.exit_time[ball.origin_id()];
  rep.EW = static_cast<double>(rep.N) / ball.size() * rep.sum_h;

  // Both hold by construction; a violation flags a solver problem.
  if (!(rep.EW >= (1.0 + rep.epsilon_used) * rep.sum_h * (1.0 - 1e-12)))
    throw std::runtime_error("certificate: E[W] >= (1+eps)E[L-hat] violated");
  if (!(rep.sum_h >= M * (1.0 - 1e-9)))
    throw std::runtime_error("certificate: E[L-hat] >= M violated");

  rep.a = (1.0 - rep.epsilon_used / 2.0) * rep.EW;
  const TailResult bw =
      binomial_tail(rep.N, rep.sum_h / ball.size(),
                    rep.a + rep.epsilon_used * M / 4.0, TailSide::lower);
  rep.bound_W = bw.value;
  rep.bound_L = poisson_binomial_tail_geq(
      table.h, static_cast<int64_t>(std::ceil(rep.a)));
  rep.total_bound = rep.bound_W + rep.bound_L;
  rep.bounds_exact = bw.exact;

  if (empirical_trials > 0) {
    const VSummary vs = v_core(ball, mu, rep.epsilon_used, empirical_trials,
                               seed, threads);
    rep.trials_total = vs.trials_total;
    rep.trials_F = vs.trials_F;
    rep.successes = vs.successes;
    rep.p_empirical = vs.p_cond;
    rep.has_empirical = true;
  }
  return rep;
}

std::vector<ArCell> scan(const ExperimentSpec& base,
                         const std::vector<double>& mus,
                         const std::vector<double>& lambdas) {
  if (mus.empty() || lambdas.empty())
    throw std::invalid_argument("scan: empty grid");
  std::vector<ArCell> cells;
  cells.reserve(mus.size() * lambdas.size() * base.radii.size());
  for (double mu : mus) {
    for (double lambda : lambdas) {
      ExperimentSpec spec = base;
      spec.mu = mu;
      spec.lambda = lambda;
      for (int M : base.radii) cells.push_back(run_ar_cell(spec, M));
    }
  }
  return cells;
}

namespace {

struct Instance {
  int dims;
  int M;
  Norm norm;
  double lambda;
  uint64_t tape_seed;
  uint64_t policy_seed;
  gr::Configuration config;
};

// Desk-scale random instance: d in {1,2}, M in [2,6], <= 20 particles, a few
// of them asleep, lambda in {0.5, 1, 2}.
Instance make_instance(rng::SplitMix64& gen, const Ball& ball, int dims, int M,
                       Norm norm) {
  Instance inst;
  inst.dims = dims;
  inst.M = M;
  inst.norm = norm;
  const double lambdas[3] = {0.5, 1.0, 2.0};
  inst.lambda = lambdas[gen.next_below(3)];
  inst.config = gr::Configuration(ball.size());
  const int64_t particles = static_cast<int64_t>(gen.next_below(21));
  for (int64_t k = 0; k < particles; ++k)
    ++inst.config.active[gen.next_below(static_cast<uint64_t>(ball.size()))];
  for (int32_t s = 0; s < ball.size(); ++s) {
    if (inst.config.active[s] == 1 && gen.next_below(4) == 0) {
      inst.config.active[s] = 0;
      inst.config.sleeping[s] = 1;
    }
  }
  inst.tape_seed = gen.next();
  inst.policy_seed = gen.next();
  return inst;
}

struct InstanceGeometry {
  int dims;
  int M;
  Norm norm;
};

InstanceGeometry draw_geometry(rng::SplitMix64& gen) {
  InstanceGeometry g;
  g.dims = 1 + static_cast<int>(gen.next_below(2));
  g.M = 2 + static_cast<int>(gen.next_below(5));
  g.norm = gen.next_below(2) == 0 ? Norm::euclidean : Norm::sup;
  return g;
}

constexpr uint64_t kCampaignStepCap = 10'000'000;

void merge_campaign(CampaignResult& result,
                    const std::vector<gr::CheckStatus>& statuses,
                    const std::vector<std::string>& details) {
  result.instances = static_cast<int64_t>(statuses.size());
  result.statuses = statuses;
  for (size_t i = 0; i < statuses.size(); ++i) {
    switch (statuses[i]) {
      case gr::CheckStatus::pass:
        ++result.passes;
        break;
      case gr::CheckStatus::fail:
        ++result.failures;
        if (result.first_failed_instance < 0) {
          result.first_failed_instance = static_cast<int64_t>(i);
          result.first_failure = details[i];
        }
        break;
      case gr::CheckStatus::inconclusive:
        ++result.inconclusive;
        break;
    }
  }
}

}  // namespace

CampaignResult abelian_campaign(int64_t instances, uint64_t seed, int threads) {
  std::vector<gr::CheckStatus> statuses(instances,
                                        gr::CheckStatus::inconclusive);
  std::vector<std::string> details(instances);
  parallel_for(instances, threads, [&](int64_t i) {
    rng::SplitMix64 gen(rng::derive(seed, static_cast<uint64_t>(i)));
    const InstanceGeometry geo = draw_geometry(gen);
    const Ball ball(geo.dims, geo.M, geo.norm);
    const Instance inst = make_instance(gen, ball, geo.dims, geo.M, geo.norm);
    const gr::EnvelopeTapes tapes(inst.tape_seed, inst.dims, inst.lambda);

    const gr::StabilizeResult runs[3] = {
        gr::stabilize(inst.config, tapes,
                      gr::OrderPolicy::random(inst.policy_seed), ball,
                      kCampaignStepCap),
        gr::stabilize(inst.config, tapes, gr::OrderPolicy::fifo(), ball,
                      kCampaignStepCap),
        gr::stabilize(inst.config, tapes, gr::OrderPolicy::lifo(), ball,
                      kCampaignStepCap),
    };
    const gr::AbelianReport ab = gr::compare_runs(runs[0], runs[1]);
    const gr::AbelianReport ac = gr::compare_runs(runs[0], runs[2]);
    auto worse = [](gr::CheckStatus x, gr::CheckStatus y) {
      if (x == gr::CheckStatus::fail || y == gr::CheckStatus::fail)
        return gr::CheckStatus::fail;
      if (x == gr::CheckStatus::inconclusive ||
          y == gr::CheckStatus::inconclusive)
        return gr::CheckStatus::inconclusive;
      return gr::CheckStatus::pass;
    };
    statuses[i] = worse(ab.status, ac.status);
    if (statuses[i] != gr::CheckStatus::pass)
      details[i] = ab.status != gr::CheckStatus::pass ? ab.what : ac.what;
  });
  CampaignResult result;
  merge_campaign(result, statuses, details);
  return result;
}

CampaignResult monotone_campaign(int64_t instances, uint64_t seed,
                                 int threads) {
  std::vector<gr::CheckStatus> statuses(instances,
                                        gr::CheckStatus::inconclusive);
  std::vector<std::string> details(instances);
  parallel_for(instances, threads, [&](int64_t i) {
    rng::SplitMix64 gen(rng::derive(seed, static_cast<uint64_t>(i)));
    const InstanceGeometry geo = draw_geometry(gen);
    const Ball ball(geo.dims, geo.M, geo.norm);
    const Instance inst = make_instance(gen, ball, geo.dims, geo.M, geo.norm);
    const gr::EnvelopeTapes tapes(inst.tape_seed, inst.dims, inst.lambda);

    gr::Modification mod;
    for (int32_t s = 0; s < ball.size(); ++s) {
      if (inst.config.active[s] > 0 && gen.next_below(3) == 0)
        mod.remove_active.emplace_back(
            s, 1 + static_cast<int32_t>(
                       gen.next_below(inst.config.active[s])));
      if (inst.config.sleeping[s] > 0 && gen.next_below(3) == 0)
        mod.remove_sleeping.push_back(s);
      if (gen.next_below(4) == 0) mod.make_sleeping.push_back(s);
    }
    const int64_t inserts = static_cast<int64_t>(gen.next_below(6));
    for (int64_t k = 0; k < inserts; ++k)
      mod.insert_sleep.emplace_back(
          static_cast<int32_t>(gen.next_below(static_cast<uint64_t>(ball.size()))),
          static_cast<int64_t>(gen.next_below(31)));

    const gr::MonotoneReport rep = gr::verify_monotone(
        inst.config, tapes, mod, gr::OrderPolicy::random(inst.policy_seed),
        ball, kCampaignStepCap);
    statuses[i] = rep.status;
    if (rep.status != gr::CheckStatus::pass) details[i] = rep.what;
  });
  CampaignResult result;
  merge_campaign(result, statuses, details);
  return result;
}

std::vector<IdlaRecord> run_idla_trials(const Ball& ball, double mu,
                                        int64_t n_walks_override,
                                        int64_t trials, uint64_t seed,
                                        bool with_lhat, int threads) {
  int64_t n_walks = n_walks_override;
  if (n_walks <= 0) {
    if (!(mu > 1.0))
      throw std::invalid_argument(
          "run_idla_trials: mu must exceed 1 unless a walk count is given");
    const double eps = (mu - 1.0) / 2.0;
    n_walks = static_cast<int64_t>(std::ceil((1.0 + eps) * ball.size()));
  }
  std::vector<IdlaRecord> records(trials);
  parallel_for(trials, threads, [&](int64_t t) {
    const uint64_t s = trial_seed(seed, ball.dims(), ball.radius(), ball.norm(),
                                  mu, 0.0, t);
    rng::SplitMix64 gen(rng::derive(s, kTagSelect));
    const std::vector<int32_t> starts =
        idla::uniform_starts(ball, n_walks, gen);
    const idla::IdlaTrace trace =
        idla::run_coupled(ball, starts, rng::derive(s, kTagWalks));
    IdlaRecord rec;
    rec.trial = t;
    rec.seed = s;
    rec.N = n_walks;
    rec.V = trace.V;
    rec.W = trace.W;
    rec.L = trace.L;
    if (with_lhat)
      rec.lhat = idla::sample_lhat(ball, rng::derive(s, kTagLhat)).total;
    records[t] = rec;
  });
  return records;
}

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

std::string status_name(gr::CheckStatus s) {
  switch (s) {
    case gr::CheckStatus::pass:
      return "pass";
    case gr::CheckStatus::fail:
      return "fail";
    default:
      return "inconclusive";
  }
}

}  // namespace

std::string ar_csv(const std::vector<ArCell>& cells, uint64_t seed) {
  std::string out =
      "d,M,norm,mu,lambda,r,trials,successes,capped,p_hat,ci_lo,ci_hi,"
      "mean_origin_visits,mean_steps,seed\n";
  for (const ArCell& c : cells) {
    out += std::to_string(c.dims) + ',' + std::to_string(c.M) + ',' +
           norm_name(c.norm) + ',' + fmt17(c.mu) + ',' + fmt17(c.lambda) +
           ',' + std::to_string(c.r) + ',' + std::to_string(c.trials) + ',' +
           std::to_string(c.successes) + ',' + std::to_string(c.capped) + ',' +
           fmt17(c.p_hat) + ',' + fmt17(c.ci.lo) + ',' + fmt17(c.ci.hi) + ',' +
           fmt17(c.mean_origin_visits) + ',' + fmt17(c.mean_steps) + ',' +
           std::to_string(seed) + '\n';
  }
  return out;
}

std::string ar_json(const std::vector<ArCell>& cells, uint64_t seed) {
  nlohmann::ordered_json root;
  root["seed"] = seed;
  auto& arr = root["cells"] = nlohmann::ordered_json::array();
  for (const ArCell& c : cells) {
    arr.push_back({{"d", c.dims},
                   {"M", c.M},
                   {"norm", norm_name(c.norm)},
                   {"mu", c.mu},
                   {"lambda", c.lambda},
                   {"r", c.r},
                   {"trials", c.trials},
                   {"successes", c.successes},
                   {"capped", c.capped},
                   {"p_hat", c.p_hat},
                   {"ci_lo", c.ci.lo},
                   {"ci_hi", c.ci.hi},
                   {"mean_origin_visits", c.mean_origin_visits},
                   {"mean_steps", c.mean_steps}});
  }
  return root.dump(2) + "\n";
}

std::string idla_csv(const std::vector<IdlaRecord>& records, int dims, int M,
                     Norm norm) {
  std::string out = "trial,seed,d,M,norm,N,V,W,L,lhat\n";
  for (const IdlaRecord& r : records) {
    out += std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
           std::to_string(dims) + ',' + std::to_string(M) + ',' +
           norm_name(norm) + ',' + std::to_string(r.N) + ',' +
           std::to_string(r.V) + ',' + std::to_string(r.W) + ',' +
           std::to_string(r.L) + ',' +
           (r.lhat >= 0 ? std::to_string(r.lhat) : std::string()) + '\n';
  }
  return out;
}

std::string idla_json(const std::vector<IdlaRecord>& records, int dims, int M,
                      Norm norm) {
  nlohmann::ordered_json root;
  root["d"] = dims;
  root["M"] = M;
  root["norm"] = norm_name(norm);
  auto& arr = root["records"] = nlohmann::ordered_json::array();
  for (const IdlaRecord& r : records) {
    nlohmann::ordered_json rec =
        {{"trial", r.trial}, {"seed", r.seed}, {"N", r.N},
         {"V", r.V},         {"W", r.W},       {"L", r.L}};
    if (r.lhat >= 0) rec["lhat"] = r.lhat;
    arr.push_back(std::move(rec));
  }
  return root.dump(2) + "\n";
}

std::string green_csv(const Ball& ball, const potential::GreenTable& table) {
  std::string out;
  for (int i = 0; i < ball.dims(); ++i) out += "x" + std::to_string(i) + ',';
  out += "h,g_row0,exit_time\n";
  for (int32_t s = 0; s < ball.size(); ++s) {
    for (int32_t c : ball.site(s)) out += std::to_string(c) + ',';
    out += fmt17(table.h[s]) + ',' + fmt17(table.g_row0[s]) + ',' +
           fmt17(table.exit_time[s]) + '\n';
  }
  return out;
}

std::string green_json(const Ball& ball, const potential::GreenTable& table) {
  nlohmann::ordered_json root;
  root["d"] = ball.dims();
  root["M"] = ball.radius();
  root["norm"] = norm_name(ball.norm());
  root["g00"] = table.g00;
  root["exit_time_origin"] = table.exit_time[ball.origin_id()];
  auto& arr = root["sites"] = nlohmann::ordered_json::array();
  for (int32_t s = 0; s < ball.size(); ++s) {
    arr.push_back({{"coords", ball.site(s)},
                   {"h", table.h[s]},
                   {"g_row0", table.g_row0[s]},
                   {"exit_time", table.exit_time[s]}});
  }
  return root.dump(2) + "\n";
}

std::string certificate_csv(const std::vector<CertificateReport>& reports) {
  std::string out =
      "d,M,norm,mu,eps,eps_used,eps_clamped,ball_size,N,sum_h,g00,exit_time0,"
      "EW,a,bound_W,bound_L,total_bound,exact,trials,trials_F,successes,"
      "p_empirical\n";
  for (const CertificateReport& r : reports) {
    out += std::to_string(r.dims) + ',' + std::to_string(r.M) + ',' +
           norm_name(r.norm) + ',' + fmt17(r.mu) + ',' + fmt17(r.epsilon) +
           ',' + fmt17(r.epsilon_used) + ',' +
           (r.epsilon_clamped ? "1" : "0") + ',' +
           std::to_string(r.ball_size) + ',' + std::to_string(r.N) + ',' +
           fmt17(r.sum_h) + ',' + fmt17(r.g00) + ',' + fmt17(r.exit_time0) +
           ',' + fmt17(r.EW) + ',' + fmt17(r.a) + ',' + fmt17(r.bound_W) +
           ',' + fmt17(r.bound_L) + ',' + fmt17(r.total_bound) + ',' +
           (r.bounds_exact ? "1" : "0") + ',' +
           std::to_string(r.trials_total) + ',' + std::to_string(r.trials_F) +
           ',' + std::to_string(r.successes) + ',' +
           (r.has_empirical ? fmt17(r.p_empirical) : std::string()) + '\n';
  }
  return out;
}

std::string certificate_json(const std::vector<CertificateReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const CertificateReport& r : reports) {
    nlohmann::ordered_json rec = {{"d", r.dims},
                                  {"M", r.M},
                                  {"norm", norm_name(r.norm)},
                                  {"mu", r.mu},
                                  {"eps", r.epsilon},
                                  {"eps_used", r.epsilon_used},
                                  {"eps_clamped", r.epsilon_clamped},
                                  {"ball_size", r.ball_size},
                                  {"N", r.N},
                                  {"sum_h", r.sum_h},
                                  {"g00", r.g00},
                                  {"exit_time0", r.exit_time0},
                                  {"EW", r.EW},
                                  {"a", r.a},
                                  {"bound_W", r.bound_W},
                                  {"bound_L", r.bound_L},
                                  {"total_bound", r.total_bound},
                                  {"exact", r.bounds_exact}};
    if (r.has_empirical) {
      rec["trials"] = r.trials_total;
      rec["trials_F"] = r.trials_F;
      rec["successes"] = r.successes;
      rec["p_empirical"] = r.p_empirical;
    }
    arr.push_back(std::move(rec));
  }
  return arr.dump(2) + "\n";
}

std::string campaign_csv(const CampaignResult& result, uint64_t seed) {
  std::string out = "instance,seed,status\n";
  for (size_t i = 0; i < result.statuses.size(); ++i) {
    out += std::to_string(i) + ',' +
           std::to_string(rng::derive(seed, static_cast<uint64_t>(i))) + ',' +
           status_name(result.statuses[i]) + '\n';
  }
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace arw::harness
