#pragma once

// The IDLA-like process embedded in the stabilization, and its coupled
// keep-walking variant.
//
// run_embedded sends particles out one at a time; each settles at the first
// site not occupied by a previously settled particle (possibly its start)
// and V counts the particles whose path up to and including settling
// touches the origin. run_coupled replays the *same* step streams but lets
// every walk continue to the ball boundary, marking the first unmarked site
// it visits; W counts walks hitting the origin before exit, L those hitting
// it strictly after their marking time. Because the streams are shared,
// V >= W - L holds walk by walk, not just in law.
//
// A walk that exits the ball before finding an unoccupied/unmarked site
// settles nowhere (with more walks than sites this is the rule, not the
// exception); it still counts toward V when it touched the origin first.

#include <cstdint>
#include <vector>

#include "arw/lattice.hpp"
#include "arw/rng.hpp"

namespace arw::idla {

struct WalkRecord {
  int32_t start = -1;
  bool settled = false;
  int32_t marked_site = -1;          // -1 when the walk never settled
  int64_t marking_time = -1;
  bool hit_before_exit = false;      // counts toward W
  bool hit_after_marking = false;    // counts toward L
  bool visited_before_settle = false;  // counts toward V
};

struct IdlaTrace {
  int64_t n_walks = 0;
  std::vector<int32_t> starts;
  std::vector<int32_t> settled;  // marked sites, in walk order
  int64_t V = 0;
  int64_t W = 0;
  int64_t L = 0;
  std::vector<WalkRecord> walks;
};

struct EmbeddedResult {
  int64_t V = 0;
  std::vector<int32_t> settled;
  int64_t unsettled = 0;  // walks absorbed before finding a free site
};

// Starts are site ids; the Point overload validates membership and throws
// std::invalid_argument for starts outside the ball.
EmbeddedResult run_embedded(const lattice::Ball& ball,
                            const std::vector<int32_t>& starts, uint64_t seed);
EmbeddedResult run_embedded(const lattice::Ball& ball,
                            const std::vector<lattice::Point>& starts,
                            uint64_t seed);

IdlaTrace run_coupled(const lattice::Ball& ball,
                      const std::vector<int32_t>& starts, uint64_t seed);
IdlaTrace run_coupled(const lattice::Ball& ball,
                      const std::vector<lattice::Point>& starts, uint64_t seed);

// One independent walk per site of the ball, run until it hits the origin
// or exits; total is the number of hits. The walk from the origin always
// hits.
struct LHatSample {
  std::vector<uint8_t> indicator;
  int64_t total = 0;
};

LHatSample sample_lhat(const lattice::Ball& ball, uint64_t seed);

// N i.i.d. uniform start sites.
std::vector<int32_t> uniform_starts(const lattice::Ball& ball, int64_t count,
                                    rng::SplitMix64& gen);

// Empirical check of P[L >= a] <= P[L-hat >= a]: reports both frequencies
// and a one-sided 99% confidence slack on their difference.
struct DominanceReport {
  int64_t trials = 0;
  double freq_L = 0.0;
  double freq_lhat = 0.0;
  double slack = 0.0;  // z_.99 * se of the difference
  bool consistent = false;
};

DominanceReport dominance_check(const std::vector<IdlaTrace>& traces,
                                const std::vector<LHatSample>& lhats, double a);

}  // namespace arw::idla
