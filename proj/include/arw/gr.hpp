#pragma once

// Envelope (graphical) representation of activated random walks and the
// abelian stabilization engine.
//
// Every site carries an i.i.d. instruction stream: with probability
// lambda/(1+lambda) an instruction is "try to sleep", otherwise it is a
// jump to one of the 2d neighbors, each with probability 1/(2d(1+lambda)).
// An acting particle always consumes ("burns") the next envelope of its
// site, whether or not the instruction has an effect. Particles stepping
// outside the ball are absorbed. The per-site burn counts and the fixated
// configuration do not depend on the order in which active sites act;
// verify_abelian and verify_monotone turn that statement and the
// sleep-insertion monotonicity into executable checks.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "arw/lattice.hpp"

namespace arw::gr {

struct Instruction {
  int8_t direction;  // -1 = sleep, else jump direction in [0, 2d)
  bool inserted;     // true if this envelope was inserted by a modification

  bool is_sleep() const { return direction < 0; }
  bool is_jump() const { return direction >= 0; }
};

// Base instruction stream: pure function of (seed, site, position), so any
// two runs over the same seed read identical envelopes regardless of order,
// policy or thread. Throws for lambda < 0 or dims < 1.
Instruction draw_instruction(uint64_t seed, int32_t site, int64_t position,
                             double lambda, int dims);

// Per-site envelope sequences plus the sleep insertions used by the
// monotonicity check. Reading position k of a site is deterministic:
// inserted positions yield sleep envelopes flagged `inserted`, the rest are
// the base stream shifted past the insertions.
class EnvelopeTapes {
 public:
  EnvelopeTapes(uint64_t seed, int dims, double lambda);

  Instruction at(int32_t site, int64_t position) const;

  // Insert a sleep envelope so that it is read at `position` of the site's
  // stream. Positions already taken shift to the next free slot.
  void insert_sleep(int32_t site, int64_t position);

  uint64_t seed() const { return seed_; }
  int dims() const { return dims_; }
  double lambda() const { return lambda_; }
  bool has_insertions() const { return !inserted_.empty(); }

 private:
  uint64_t seed_;
  int dims_;
  double lambda_;
  std::unordered_map<int32_t, std::vector<int64_t>> inserted_;  // sorted
};

// ARW state: per-site active and sleeping counts. A sleeping particle is
// always alone on its site (anything arriving wakes it), so sleeping is
// 0/1 with active == 0 wherever sleeping == 1.
struct Configuration {
  std::vector<int32_t> active;
  std::vector<int32_t> sleeping;

  explicit Configuration(int32_t n_sites = 0)
      : active(n_sites, 0), sleeping(n_sites, 0) {}

  int64_t total_particles() const;
  bool fixated() const;       // no active particle anywhere
  bool invariant_ok() const;  // the sleeping-implies-alone rule
};

// Conserved accounting of one stabilization: burned counts only envelopes
// of the original tapes; inserted ones are tracked separately so the
// monotonicity statement ("not counting the ones inserted") is directly
// checkable. origin_visits = particles initially at the origin plus every
// jump arrival there.
struct Odometer {
  std::vector<int64_t> burned;
  std::vector<int64_t> inserted_burned;
  int64_t origin_visits = 0;

  explicit Odometer(int32_t n_sites = 0)
      : burned(n_sites, 0), inserted_burned(n_sites, 0) {}
};

enum class PolicyKind { random, fifo, lifo, site_sweep };

// Rule selecting which site with active particles acts next. Particles on a
// site are exchangeable, so site granularity loses nothing.
struct OrderPolicy {
  PolicyKind kind = PolicyKind::fifo;
  uint64_t seed = 0;  // only used by PolicyKind::random

  static OrderPolicy random(uint64_t seed) { return {PolicyKind::random, seed}; }
  static OrderPolicy fifo() { return {PolicyKind::fifo, 0}; }
  static OrderPolicy lifo() { return {PolicyKind::lifo, 0}; }
  static OrderPolicy site_sweep() { return {PolicyKind::site_sweep, 0}; }
};

struct ApplyEvent {
  bool slept = false;              // a lone particle fell asleep
  bool absorbed = false;           // the mover left the ball
  bool woke = false;               // arrival woke a sleeping particle
  bool arrived_at_origin = false;  // the mover landed on the origin
  int32_t to_site = -1;            // landing site for an in-ball jump
};

// One envelope applied at `site`. Requires active[site] >= 1 (throws
// std::logic_error otherwise). The envelope is consumed in every case.
ApplyEvent apply_instruction(Configuration& config, int32_t site,
                             const Instruction& instr,
                             const lattice::Ball& ball);

constexpr uint64_t kDefaultStepCap = 1'000'000'000;

struct StabilizeResult {
  Configuration config;
  Odometer odometer;
  bool fixated = false;
  uint64_t steps = 0;     // envelopes burned, inserted ones included
  int64_t absorbed = 0;   // particles removed at the boundary
};

// Drive the system until no active particle remains or step_cap envelopes
// have been burned. A capped run is returned with fixated == false; it is
// never silently truncated.
StabilizeResult stabilize(const Configuration& initial,
                          const EnvelopeTapes& tapes, OrderPolicy policy,
                          const lattice::Ball& ball,
                          uint64_t step_cap = kDefaultStepCap);

enum class CheckStatus { pass, fail, inconclusive };

struct AbelianReport {
  CheckStatus status = CheckStatus::inconclusive;
  int32_t divergent_site = -1;
  std::string what;
};

// Field-by-field comparison of two stabilization results (burn counts,
// final active/sleeping placement, origin visits). Exposed separately from
// verify_abelian so tests can feed it deliberately corrupted runs.
AbelianReport compare_runs(const StabilizeResult& a, const StabilizeResult& b);

// Stabilize the same initial state twice under policy_a and policy_b over
// the same tapes and compare. Non-fixation under the cap is inconclusive.
AbelianReport verify_abelian(const Configuration& initial,
                             const EnvelopeTapes& tapes, OrderPolicy policy_a,
                             OrderPolicy policy_b, const lattice::Ball& ball,
                             uint64_t step_cap = kDefaultStepCap);

// The modification class of the monotonicity statement: delete particles,
// put lone active particles to sleep, insert sleep envelopes. A flip at a
// site with company is a no-op (the sleeper would wake immediately).
struct Modification {
  std::vector<std::pair<int32_t, int32_t>> remove_active;  // (site, count)
  std::vector<int32_t> remove_sleeping;                    // sites
  std::vector<int32_t> make_sleeping;                      // sites
  std::vector<std::pair<int32_t, int64_t>> insert_sleep;   // (site, position)
};

Configuration apply_modification(const Configuration& config,
                                 const Modification& mod);

struct MonotoneReport {
  CheckStatus status = CheckStatus::inconclusive;
  int32_t violating_site = -1;
  int64_t burned_original = 0;
  int64_t burned_modified = 0;
  std::string what;
};

// Checks burned_modified[x] <= burned_original[x] for every site, with
// inserted envelopes excluded from the modified count.
MonotoneReport verify_monotone(const Configuration& initial,
                               const EnvelopeTapes& tapes,
                               const Modification& mod, OrderPolicy policy,
                               const lattice::Ball& ball,
                               uint64_t step_cap = kDefaultStepCap);

// Flat JSON snapshot of (configuration, odometer) keyed by site
// coordinates ("x" or "x,y,..."), used by the CLI and by tests.
std::string snapshot_json(const lattice::Ball& ball, const Configuration& config,
                          const Odometer& odometer, bool fixated);

}  // namespace arw::gr
