#include "arw/gr.hpp"

#include <algorithm>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "arw/rng.hpp"
#include "json.hpp"

namespace arw::gr {

Instruction draw_instruction(uint64_t seed, int32_t site, int64_t position,
                             double lambda, int dims) {
  if (lambda < 0) throw std::invalid_argument("draw_instruction: lambda < 0");
  if (dims < 1) throw std::invalid_argument("draw_instruction: dims < 1");
  const double p_sleep = lambda / (1.0 + lambda);
  const double u = rng::to_unit(rng::stream_word(
      seed, static_cast<uint64_t>(site), static_cast<uint64_t>(position)));
  if (u < p_sleep) return {-1, false};
  const double v = (u - p_sleep) / (1.0 - p_sleep);
  const int dir = std::min(2 * dims - 1, static_cast<int>(v * (2 * dims)));
  return {static_cast<int8_t>(dir), false};
}

EnvelopeTapes::EnvelopeTapes(uint64_t seed, int dims, double lambda)
    : seed_(seed), dims_(dims), lambda_(lambda) {
  if (dims < 1) throw std::invalid_argument("EnvelopeTapes: dims < 1");
  if (lambda < 0) throw std::invalid_argument("EnvelopeTapes: lambda < 0");
}

Instruction EnvelopeTapes::at(int32_t site, int64_t position) const {
  if (!inserted_.empty()) {
    auto it = inserted_.find(site);
    if (it != inserted_.end()) {
      const auto& pos = it->second;
      auto lb = std::lower_bound(pos.begin(), pos.end(), position);
      if (lb != pos.end() && *lb == position) return {-1, true};
      const int64_t shift = lb - pos.begin();  // insertions before `position`
      return draw_instruction(seed_, site, position - shift, lambda_, dims_);
    }
  }
  return draw_instruction(seed_, site, position, lambda_, dims_);
}

void EnvelopeTapes::insert_sleep(int32_t site, int64_t position) {
  if (position < 0) throw std::invalid_argument("insert_sleep: position < 0");
  auto& pos = inserted_[site];
  while (std::binary_search(pos.begin(), pos.end(), position)) ++position;
  pos.insert(std::upper_bound(pos.begin(), pos.end(), position), position);
}

int64_t Configuration::total_particles() const {
  return std::accumulate(active.begin(), active.end(), int64_t{0}) +
         std::accumulate(sleeping.begin(), sleeping.end(), int64_t{0});
}

bool Configuration::fixated() const {
  return std::all_of(active.begin(), active.end(),
                     [](int32_t a) { return a == 0; });
}

bool Configuration::invariant_ok() const {
  for (size_t i = 0; i < active.size(); ++i) {
    if (active[i] < 0 || sleeping[i] < 0 || sleeping[i] > 1) return false;
    if (sleeping[i] > 0 && active[i] > 0) return false;
  }
  return true;
}

ApplyEvent apply_instruction(Configuration& config, int32_t site,
                             const Instruction& instr,
                             const lattice::Ball& ball) {
  if (config.active[site] < 1)
    throw std::logic_error("apply_instruction: no active particle at site");

  ApplyEvent ev;
  if (instr.is_sleep()) {
    if (config.active[site] == 1 && config.sleeping[site] == 0) {
      config.active[site] = 0;
      config.sleeping[site] = 1;
      ev.slept = true;
    }
    // Other particles present: the envelope is burned anyway, no effect.
    return ev;
  }

  if (instr.direction >= 2 * ball.dims())
    throw std::logic_error("apply_instruction: direction out of range");
  const int32_t nb = ball.neighbor_id(site, instr.direction);
  config.active[site] -= 1;
  if (nb < 0) {
    ev.absorbed = true;
    return ev;
  }
  if (config.sleeping[nb] == 1) {  // arrival wakes the sleeper
    config.sleeping[nb] = 0;
    config.active[nb] += 2;
    ev.woke = true;
  } else {
    config.active[nb] += 1;
  }
  ev.to_site = nb;
  ev.arrived_at_origin = nb == ball.origin_id();
  return ev;
}

namespace {

// Bookkeeping of which active site acts next. A site's active count can only
// drop through its own action, so queued sites stay active until popped;
// fifo/lifo therefore never hold stale entries.
class ActiveSet {
 public:
  ActiveSet(const OrderPolicy& policy, const Configuration& config)
      : policy_(policy),
        rng_(policy.seed),
        in_list_(config.active.size(), -1),
        queued_(config.active.size(), 0) {
    for (int32_t s = 0; s < static_cast<int32_t>(config.active.size()); ++s)
      if (config.active[s] > 0) activate(s);
  }

  bool empty() const { return n_active_ == 0; }

  void activate(int32_t site) {
    ++n_active_;
    switch (policy_.kind) {
      case PolicyKind::random:
        in_list_[site] = static_cast<int32_t>(list_.size());
        list_.push_back(site);
        break;
      case PolicyKind::fifo:
      case PolicyKind::lifo:
        queue_.push_back(site);
        queued_[site] = 1;
        break;
      case PolicyKind::site_sweep:
        break;
    }
  }

  void deactivate(int32_t site) {
    --n_active_;
    if (policy_.kind == PolicyKind::random) {
      const int32_t at = in_list_[site];
      const int32_t last = list_.back();
      list_[at] = last;
      in_list_[last] = at;
      list_.pop_back();
      in_list_[site] = -1;
    }
    // fifo/lifo: only the in-hand site can deactivate, already popped.
  }

  // Next acting site; requires !empty().
  int32_t select(const Configuration& config) {
    switch (policy_.kind) {
      case PolicyKind::random:
        return list_[rng_.next_below(list_.size())];
      case PolicyKind::fifo: {
        const int32_t s = queue_.front();
        queue_.pop_front();
        queued_[s] = 0;
        return s;
      }
      case PolicyKind::lifo: {
        const int32_t s = queue_.back();
        queue_.pop_back();
        queued_[s] = 0;
        return s;
      }
      case PolicyKind::site_sweep:
        while (config.active[sweep_] == 0)
          sweep_ = (sweep_ + 1) % static_cast<int32_t>(config.active.size());
        return sweep_;
    }
    return -1;  // unreachable
  }

  // Called after the envelope at `site` was applied.
  void post_act(int32_t site, const Configuration& config) {
    if ((policy_.kind == PolicyKind::fifo || policy_.kind == PolicyKind::lifo) &&
        config.active[site] > 0 && !queued_[site]) {
      queue_.push_back(site);
      queued_[site] = 1;
    }
  }

 private:
  OrderPolicy policy_;
  rng::SplitMix64 rng_;
  int64_t n_active_ = 0;
  std::vector<int32_t> list_;     // random: dense list of active sites
  std::vector<int32_t> in_list_;  // random: position in list_, -1 if absent
  std::deque<int32_t> queue_;     // fifo/lifo
  std::vector<char> queued_;
  int32_t sweep_ = 0;
};

}  // namespace

StabilizeResult stabilize(const Configuration& initial,
                          const EnvelopeTapes& tapes, OrderPolicy policy,
                          const lattice::Ball& ball, uint64_t step_cap) {
  StabilizeResult res;
  res.config = initial;
  res.odometer = Odometer(ball.size());
  res.odometer.origin_visits = initial.active[ball.origin_id()] +
                               initial.sleeping[ball.origin_id()];

  ActiveSet set(policy, res.config);
  while (res.steps < step_cap) {
    if (set.empty()) {
      res.fixated = true;
      break;
    }
    const int32_t site = set.select(res.config);
    const int64_t cursor =
        res.odometer.burned[site] + res.odometer.inserted_burned[site];
    const Instruction ins = tapes.at(site, cursor);
    if (ins.inserted)
      ++res.odometer.inserted_burned[site];
    else
      ++res.odometer.burned[site];
    ++res.steps;

    const bool to_sites_was_empty = [&] {
      if (!ins.is_jump()) return false;
      const int32_t nb = ball.neighbor_id(site, ins.direction);
      return nb >= 0 && res.config.active[nb] == 0;
    }();

    const ApplyEvent ev = apply_instruction(res.config, site, ins, ball);
    if (ev.absorbed) ++res.absorbed;
    if (ev.arrived_at_origin) ++res.odometer.origin_visits;

    if (res.config.active[site] == 0) set.deactivate(site);
    if (ev.to_site >= 0 && to_sites_was_empty) set.activate(ev.to_site);
    set.post_act(site, res.config);
  }
  if (set.empty()) res.fixated = true;
  return res;
}

AbelianReport compare_runs(const StabilizeResult& a, const StabilizeResult& b) {
  AbelianReport rep;
  if (!a.fixated || !b.fixated) {
    rep.status = CheckStatus::inconclusive;
    rep.what = "at least one run did not fixate under the step cap";
    return rep;
  }
  const auto n = static_cast<int32_t>(a.odometer.burned.size());
  for (int32_t s = 0; s < n; ++s) {
    if (a.odometer.burned[s] != b.odometer.burned[s]) {
      rep.status = CheckStatus::fail;
      rep.divergent_site = s;
      rep.what = "burned counts differ";
      return rep;
    }
    if (a.odometer.inserted_burned[s] != b.odometer.inserted_burned[s]) {
      rep.status = CheckStatus::fail;
      rep.divergent_site = s;
      rep.what = "inserted burn counts differ";
      return rep;
    }
    if (a.config.active[s] != b.config.active[s] ||
        a.config.sleeping[s] != b.config.sleeping[s]) {
      rep.status = CheckStatus::fail;
      rep.divergent_site = s;
      rep.what = "final placement differs";
      return rep;
    }
  }
  if (a.odometer.origin_visits != b.odometer.origin_visits) {
    rep.status = CheckStatus::fail;
    rep.what = "origin visit counts differ";
    return rep;
  }
  rep.status = CheckStatus::pass;
  return rep;
}

AbelianReport verify_abelian(const Configuration& initial,
                             const EnvelopeTapes& tapes, OrderPolicy policy_a,
                             OrderPolicy policy_b, const lattice::Ball& ball,
                             uint64_t step_cap) {
  const StabilizeResult a = stabilize(initial, tapes, policy_a, ball, step_cap);
  const StabilizeResult b = stabilize(initial, tapes, policy_b, ball, step_cap);
  return compare_runs(a, b);
}

Configuration apply_modification(const Configuration& config,
                                 const Modification& mod) {
  Configuration out = config;
  for (auto [site, count] : mod.remove_active)
    out.active[site] -= std::min(count, out.active[site]);
  for (int32_t site : mod.remove_sleeping) out.sleeping[site] = 0;
  for (int32_t site : mod.make_sleeping) {
    if (out.active[site] == 1 && out.sleeping[site] == 0) {
      out.active[site] = 0;
      out.sleeping[site] = 1;
    }
  }
  return out;
}

MonotoneReport verify_monotone(const Configuration& initial,
                               const EnvelopeTapes& tapes,
                               const Modification& mod, OrderPolicy policy,
                               const lattice::Ball& ball, uint64_t step_cap) {
  MonotoneReport rep;
  const StabilizeResult orig = stabilize(initial, tapes, policy, ball, step_cap);

  EnvelopeTapes modified_tapes = tapes;
  for (auto [site, position] : mod.insert_sleep)
    modified_tapes.insert_sleep(site, position);
  const Configuration modified = apply_modification(initial, mod);
  const StabilizeResult alt =
      stabilize(modified, modified_tapes, policy, ball, step_cap);

  if (!orig.fixated || !alt.fixated) {
    rep.status = CheckStatus::inconclusive;
    rep.what = "at least one run did not fixate under the step cap";
    return rep;
  }
  for (int32_t s = 0; s < ball.size(); ++s) {
    if (alt.odometer.burned[s] > orig.odometer.burned[s]) {
      rep.status = CheckStatus::fail;
      rep.violating_site = s;
      rep.burned_original = orig.odometer.burned[s];
      rep.burned_modified = alt.odometer.burned[s];
      rep.what = "modified run burned more original envelopes";
      return rep;
    }
  }
  rep.status = CheckStatus::pass;
  return rep;
}

std::string snapshot_json(const lattice::Ball& ball, const Configuration& config,
                          const Odometer& odometer, bool fixated) {
  nlohmann::ordered_json root;
  root["dims"] = ball.dims();
  root["radius"] = ball.radius();
  root["norm"] = ball.norm() == lattice::Norm::euclidean ? "l2" : "linf";
  root["fixated"] = fixated;
  root["origin_visits"] = odometer.origin_visits;
  nlohmann::ordered_json sites = nlohmann::ordered_json::object();
  for (int32_t s = 0; s < ball.size(); ++s) {
    std::string key;
    const auto& p = ball.site(s);
    for (size_t i = 0; i < p.size(); ++i) {
      if (i) key += ',';
      key += std::to_string(p[i]);
    }
    sites[key] = {{"active", config.active[s]},
                  {"sleeping", config.sleeping[s]},
                  {"burned", odometer.burned[s]},
                  {"inserted_burned", odometer.inserted_burned[s]}};
  }
  root["sites"] = std::move(sites);
  return root.dump(2);
}

}  // namespace arw::gr
