#include "arw/idla.hpp"

#include <cmath>
#include <stdexcept>

namespace arw::idla {

namespace {

std::vector<int32_t> to_ids(const lattice::Ball& ball,
                            const std::vector<lattice::Point>& starts) {
  std::vector<int32_t> ids;
  ids.reserve(starts.size());
  for (const auto& p : starts) {
    const int32_t id = ball.index_of(p);
    if (id < 0)
      throw std::invalid_argument("idla: start outside the ball");
    ids.push_back(id);
  }
  return ids;
}

// Step of walk `walk` at its local time `t`; shared by the embedded and the
// coupled process so their trajectories agree under one seed.
inline int32_t step(const lattice::Ball& ball, uint64_t seed, uint64_t walk,
                    int32_t pos, uint64_t t) {
  const uint32_t dir = rng::word_below(rng::stream_word(seed, walk, t),
                                       static_cast<uint32_t>(2 * ball.dims()));
  return ball.neighbor_id(pos, static_cast<int>(dir));
}

}  // namespace

EmbeddedResult run_embedded(const lattice::Ball& ball,
                            const std::vector<int32_t>& starts, uint64_t seed) {
  EmbeddedResult res;
  std::vector<char> occupied(ball.size(), 0);
  const int32_t origin = ball.origin_id();

  for (size_t w = 0; w < starts.size(); ++w) {
    int32_t pos = starts[w];
    if (pos < 0 || pos >= ball.size())
      throw std::invalid_argument("idla: start outside the ball");
    bool touched_origin = pos == origin;
    for (uint64_t t = 0;; ++t) {
      if (!occupied[pos]) {
        occupied[pos] = 1;
        res.settled.push_back(pos);
        if (touched_origin) ++res.V;
        break;
      }
      const int32_t nb = step(ball, seed, w, pos, t);
      if (nb < 0) {  // absorbed with the cluster in the way
        ++res.unsettled;
        if (touched_origin) ++res.V;
        break;
      }
      pos = nb;
      if (pos == origin) touched_origin = true;
    }
  }
  return res;
}

EmbeddedResult run_embedded(const lattice::Ball& ball,
                            const std::vector<lattice::Point>& starts,
                            uint64_t seed) {
  return run_embedded(ball, to_ids(ball, starts), seed);
}

IdlaTrace run_coupled(const lattice::Ball& ball,
                      const std::vector<int32_t>& starts, uint64_t seed) {
  IdlaTrace trace;
  trace.n_walks = static_cast<int64_t>(starts.size());
  trace.starts = starts;
  trace.walks.resize(starts.size());
  std::vector<char> marked(ball.size(), 0);
  const int32_t origin = ball.origin_id();

  for (size_t w = 0; w < starts.size(); ++w) {
    WalkRecord& rec = trace.walks[w];
    rec.start = starts[w];
    if (rec.start < 0 || rec.start >= ball.size())
      throw std::invalid_argument("idla: start outside the ball");

    int32_t pos = rec.start;
    for (uint64_t t = 0;; ++t) {
      if (!rec.settled && !marked[pos]) {
        marked[pos] = 1;
        rec.settled = true;
        rec.marked_site = pos;
        rec.marking_time = static_cast<int64_t>(t);
        trace.settled.push_back(pos);
      }
      if (pos == origin) {
        rec.hit_before_exit = true;
        if (rec.settled && static_cast<int64_t>(t) > rec.marking_time)
          rec.hit_after_marking = true;
        else
          rec.visited_before_settle = true;
      }
      const int32_t nb = step(ball, seed, w, pos, t);
      if (nb < 0) break;
      pos = nb;
    }

    trace.W += rec.hit_before_exit ? 1 : 0;
    trace.L += rec.hit_after_marking ? 1 : 0;
    // A walk that never settles is absorbed in the embedded process; any
    // origin visit before exit counts toward V there.
    trace.V += (rec.settled ? rec.visited_before_settle : rec.hit_before_exit)
                   ? 1
                   : 0;
  }
  return trace;
}

IdlaTrace run_coupled(const lattice::Ball& ball,
                      const std::vector<lattice::Point>& starts, uint64_t seed) {
  return run_coupled(ball, to_ids(ball, starts), seed);
}

LHatSample sample_lhat(const lattice::Ball& ball, uint64_t seed) {
  LHatSample sample;
  sample.indicator.assign(ball.size(), 0);
  const int32_t origin = ball.origin_id();
  for (int32_t s = 0; s < ball.size(); ++s) {
    int32_t pos = s;
    uint64_t t = 0;
    while (pos >= 0 && pos != origin)
      pos = step(ball, seed, static_cast<uint64_t>(s), pos, t++);
    if (pos == origin) {
      sample.indicator[s] = 1;
      ++sample.total;
    }
  }
  return sample;
}

std::vector<int32_t> uniform_starts(const lattice::Ball& ball, int64_t count,
                                    rng::SplitMix64& gen) {
  std::vector<int32_t> starts(count);
  for (auto& s : starts)
    s = static_cast<int32_t>(gen.next_below(static_cast<uint64_t>(ball.size())));
  return starts;
}

DominanceReport dominance_check(const std::vector<IdlaTrace>& traces,
                                const std::vector<LHatSample>& lhats,
                                double a) {
  if (traces.size() != lhats.size())
    throw std::invalid_argument("dominance_check: trial counts differ");
  DominanceReport rep;
  rep.trials = static_cast<int64_t>(traces.size());
  if (rep.trials == 0) return rep;

  int64_t count_L = 0, count_lhat = 0;
  for (const auto& tr : traces)
    if (static_cast<double>(tr.L) >= a) ++count_L;
  for (const auto& lh : lhats)
    if (static_cast<double>(lh.total) >= a) ++count_lhat;
  rep.freq_L = static_cast<double>(count_L) / rep.trials;
  rep.freq_lhat = static_cast<double>(count_lhat) / rep.trials;

  constexpr double z99 = 2.3263478740408408;  // one-sided 99%
  const double var = rep.freq_L * (1.0 - rep.freq_L) / rep.trials +
                     rep.freq_lhat * (1.0 - rep.freq_lhat) / rep.trials;
  rep.slack = z99 * std::sqrt(var);
  rep.consistent = rep.freq_L <= rep.freq_lhat + rep.slack + 1e-12;
  return rep;
}

}  // namespace arw::idla
