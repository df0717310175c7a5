#pragma once

// Slot-accurate saturated contention on one shared collision channel.
//
// Time advances in generic slots: an empty backoff slot, or one busy period
// (T_s for a lone transmitter, T_c when two or more transmit together).
// Counters freeze while the channel is busy. Colliders additionally sit out
// T_o before resuming countdown, while other nodes may keep counting.
// Runs of idle slots are skipped in bulk, so one loop iteration costs O(N)
// per busy period.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "arbsim/analytic.hpp"
#include "arbsim/backoff.hpp"
#include "arbsim/errors.hpp"
#include "arbsim/mac_timing.hpp"

namespace arbsim {

struct AllNodes {
  bool operator==(const AllNodes&) const = default;
};

/// Only `count` nodes contend, all activated together at `activation_slot`.
struct EventBurst {
  std::uint32_t count = 0;
  std::uint64_t activation_slot = 0;
  bool operator==(const EventBurst&) const = default;
};

using ActiveSet = std::variant<AllNodes, EventBurst>;

struct SlotBudget {
  std::uint64_t slots = 0;
  bool operator==(const SlotBudget&) const = default;
};

struct TimeBudget {
  double us = 0;
  bool operator==(const TimeBudget&) const = default;
};

using Horizon = std::variant<SlotBudget, TimeBudget>;

struct ScenarioConfig {
  std::string id;
  std::uint32_t n_nodes = 1;
  ActiveSet active = AllNodes{};
  PolicyKind policy = PolicyKind::Beb;
  PolicyParams policy_params;
  PhyParams phy;
  AccessMode mode = AccessMode::Basic;
  std::uint64_t seed = 1;
  Horizon horizon = SlotBudget{1'000'000};
  std::uint64_t warmup_slots = 10'000;

  std::uint32_t active_count() const {
    if (const auto* b = std::get_if<EventBurst>(&active)) return b->count;
    return n_nodes;
  }

  bool operator==(const ScenarioConfig&) const = default;
};

inline void validate(const ScenarioConfig& c) {
  validate(c.phy);
  validate(c.policy_params);
  if (c.n_nodes < 1) throw ConfigError("scenario.n_nodes must be >= 1");
  if (const auto* b = std::get_if<EventBurst>(&c.active)) {
    if (b->count < 1) throw ConfigError("scenario.active.count must be >= 1");
    if (b->count > c.n_nodes) throw ConfigError("scenario.active.count must be <= n_nodes");
  }
  if (const auto* s = std::get_if<SlotBudget>(&c.horizon)) {
    if (s->slots <= c.warmup_slots)
      throw ConfigError("scenario.horizon_slots must be > warmup_slots");
  } else if (std::get<TimeBudget>(c.horizon).us <= 0) {
    throw ConfigError("scenario.horizon_us must be > 0");
  }
}

/// Per-node packet accounting over the whole run, warmup included.
struct NodeLedger {
  std::uint64_t started = 0;
  std::uint64_t delivered = 0;
  std::uint64_t dropped = 0;
  std::uint64_t pending = 0;
  bool operator==(const NodeLedger&) const = default;
};

struct SimMetrics {
  std::uint64_t delivered_packets = 0;
  std::uint64_t collided_tx = 0;
  std::uint64_t dropped_packets = 0;
  std::uint64_t attempts = 0;
  std::uint64_t slots = 0;
  std::uint64_t idle_slots = 0;
  std::uint64_t busy_slots = 0;
  double busy_time_us = 0;
  double idle_time_us = 0;
  double elapsed_us = 0;
  double payload_bits_delivered = 0;
  double throughput_bps = 0;
  double throughput_norm = 0;
  double mean_access_delay_us = 0;
  std::vector<double> access_delay_samples;
  double measured_p = 0;
  double measured_tau = 0;
  bool zero_delivery = true;
  std::vector<NodeLedger> nodes;

  double drop_ratio() const {
    const auto done = delivered_packets + dropped_packets;
    return done ? static_cast<double>(dropped_packets) / static_cast<double>(done) : 0.0;
  }

  bool operator==(const SimMetrics&) const = default;
};

/// One busy period as seen by an observer.
struct BusyPeriod {
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  std::uint32_t transmitters = 0;
  std::uint32_t collision_outcomes = 0;
  bool success = false;
};

struct NullObserver {
  void on_busy(const BusyPeriod&) {}
};

inline constexpr std::size_t kMaxDelaySamples = 1'000'000;

namespace detail {

inline std::int64_t to_ns(double us) { return std::llround(us * 1000.0); }

struct SimNode {
  BackoffState state;
  std::mt19937_64 rng;
  std::int64_t blocked_until_ns = 0;
  std::int64_t hol_since_ns = 0;
  NodeLedger ledger;
};

inline std::mt19937_64 node_stream(std::uint64_t seed, std::uint64_t node) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(node), static_cast<std::uint32_t>(node >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace detail

template <class Observer = NullObserver>
SimMetrics run(const ScenarioConfig& cfg, Observer&& observer = {}) {
  validate(cfg);
  const SlotDurations d = slot_durations(cfg.phy, cfg.mode);
  const std::int64_t slot_ns = detail::to_ns(d.t_idle_us);
  const std::int64_t ts_ns = detail::to_ns(d.t_s_us);
  const std::int64_t tc_ns = detail::to_ns(d.t_c_us);
  const std::int64_t to_ns = detail::to_ns(d.t_o_us);
  const double payload_us = cfg.phy.payload_time_us();
  const BackoffPolicy policy(cfg.policy, cfg.policy_params);

  const std::uint64_t slot_budget = std::holds_alternative<SlotBudget>(cfg.horizon)
                                        ? std::get<SlotBudget>(cfg.horizon).slots
                                        : std::numeric_limits<std::uint64_t>::max();
  const std::int64_t time_budget_ns = std::holds_alternative<TimeBudget>(cfg.horizon)
                                          ? detail::to_ns(std::get<TimeBudget>(cfg.horizon).us)
                                          : std::numeric_limits<std::int64_t>::max();
  const std::uint64_t warmup = cfg.warmup_slots;

  SimMetrics m;
  std::int64_t now = 0;
  std::uint64_t slot = 0;
  std::optional<std::int64_t> measure_start;
  std::int64_t idle_ns = 0, busy_ns = 0;
  std::uint64_t eligible_node_slots = 0;
  std::uint64_t post_attempts = 0;
  double delay_sum_us = 0;
  std::uint64_t delay_count = 0;
  std::mt19937_64 reservoir_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  // Accounts k idle slots starting at slot index `first`, time `t0`.
  auto account_idle = [&](std::uint64_t first, std::uint64_t k, std::int64_t t0) {
    const std::uint64_t end = first + k;
    if (end <= warmup) return;
    const std::uint64_t from = std::max(first, warmup);
    if (!measure_start) measure_start = t0 + static_cast<std::int64_t>(from - first) * slot_ns;
    const std::uint64_t counted = end - from;
    m.idle_slots += counted;
    idle_ns += static_cast<std::int64_t>(counted) * slot_ns;
  };

  std::uint64_t activation = 0;
  if (const auto* b = std::get_if<EventBurst>(&cfg.active)) activation = b->activation_slot;
  if (activation > 0) {
    const std::uint64_t k = std::min(activation, slot_budget);
    account_idle(0, k, 0);
    now += static_cast<std::int64_t>(k) * slot_ns;
    slot += k;
  }

  std::vector<detail::SimNode> nodes(cfg.active_count());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    nodes[i].rng = detail::node_stream(cfg.seed, i);
    nodes[i].state = policy.initial(nodes[i].rng);
    nodes[i].hol_since_ns = now;
    nodes[i].ledger.started = 1;
  }

  std::vector<std::uint64_t> wait_slots(nodes.size());  // idle slots still blocked
  std::vector<std::size_t> transmitters;
  transmitters.reserve(nodes.size());

  while (slot < slot_budget && now < time_budget_ns) {
    // Idle slots until the earliest transmission, assuming the channel stays idle.
    std::uint64_t k = std::numeric_limits<std::uint64_t>::max();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const std::int64_t blocked = nodes[i].blocked_until_ns - now;
      wait_slots[i] = blocked > 0 ? static_cast<std::uint64_t>((blocked + slot_ns - 1) / slot_ns) : 0;
      k = std::min(k, wait_slots[i] + nodes[i].state.counter);
    }

    // Horizon ends inside this idle run.
    std::uint64_t room = slot_budget - slot;
    if (time_budget_ns != std::numeric_limits<std::int64_t>::max()) {
      room = std::min<std::uint64_t>(room, static_cast<std::uint64_t>(
                                               (time_budget_ns - now + slot_ns - 1) / slot_ns));
    }
    // Node-slots in which a node was free to count down or transmit.
    auto count_eligible = [&](std::uint64_t run_end, bool with_busy_slot) {
      if (run_end + (with_busy_slot ? 1 : 0) <= warmup) return;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        const std::uint64_t usable_from = std::max(slot + wait_slots[i], warmup);
        if (usable_from < run_end) eligible_node_slots += run_end - usable_from;
        if (with_busy_slot && run_end >= warmup && slot + wait_slots[i] <= run_end)
          ++eligible_node_slots;
      }
    };

    if (k >= room) {
      account_idle(slot, room, now);
      count_eligible(slot + room, false);
      now += static_cast<std::int64_t>(room) * slot_ns;
      slot += room;
      break;
    }

    account_idle(slot, k, now);
    count_eligible(slot + k, true);
    transmitters.clear();
    const std::uint64_t busy_slot = slot + k;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (wait_slots[i] >= k) {
        if (wait_slots[i] == k && nodes[i].state.counter == 0) transmitters.push_back(i);
        continue;
      }
      nodes[i].state.counter -= static_cast<std::uint32_t>(k - wait_slots[i]);
      if (nodes[i].state.counter == 0) transmitters.push_back(i);
    }
    now += static_cast<std::int64_t>(k) * slot_ns;
    slot = busy_slot + 1;

    const bool counted = busy_slot >= warmup;
    if (counted && !measure_start) measure_start = now;

    BusyPeriod bp;
    bp.start_ns = now;
    bp.transmitters = static_cast<std::uint32_t>(transmitters.size());
    if (transmitters.size() == 1) {
      const std::int64_t end = now + ts_ns;
      detail::SimNode& n = nodes[transmitters.front()];
      n.state = policy.on_outcome(n.state, TxOutcome::Success, n.rng).state;
      ++n.ledger.delivered;
      ++n.ledger.started;
      if (counted) {
        const double delay_us = static_cast<double>(end - n.hol_since_ns) / 1000.0;
        delay_sum_us += delay_us;
        ++delay_count;
        if (m.access_delay_samples.size() < kMaxDelaySamples) {
          m.access_delay_samples.push_back(delay_us);
        } else {
          std::uniform_int_distribution<std::uint64_t> pick(0, delay_count - 1);
          const std::uint64_t j = pick(reservoir_rng);
          if (j < kMaxDelaySamples) m.access_delay_samples[j] = delay_us;
        }
        ++m.delivered_packets;
        m.payload_bits_delivered += cfg.phy.payload_bits;
        ++post_attempts;
      }
      n.hol_since_ns = end;
      bp.success = true;
      bp.end_ns = end;
      if (counted) busy_ns += ts_ns;
    } else {
      const std::int64_t end = now + tc_ns;
      for (std::size_t idx : transmitters) {
        detail::SimNode& n = nodes[idx];
        const Transition tr = policy.on_outcome(n.state, TxOutcome::Collision, n.rng);
        n.state = tr.state;
        n.blocked_until_ns = end + to_ns;
        ++bp.collision_outcomes;
        if (counted) {
          ++m.collided_tx;
          ++post_attempts;
        }
        if (tr.dropped) {
          ++n.ledger.dropped;
          ++n.ledger.started;
          n.hol_since_ns = end;
          if (counted) ++m.dropped_packets;
        }
      }
      bp.end_ns = end;
      if (counted) busy_ns += tc_ns;
    }
    if (counted) ++m.busy_slots;
    observer.on_busy(bp);
    now = bp.end_ns;
  }

  for (auto& n : nodes) {
    n.ledger.pending = 1;
    m.nodes.push_back(n.ledger);
  }
  m.slots = m.idle_slots + m.busy_slots;
  m.attempts = post_attempts;
  m.idle_time_us = static_cast<double>(idle_ns) / 1000.0;
  m.busy_time_us = static_cast<double>(busy_ns) / 1000.0;
  m.elapsed_us = measure_start ? static_cast<double>(now - *measure_start) / 1000.0 : 0.0;
  if (m.elapsed_us > 0) {
    m.throughput_bps = m.payload_bits_delivered / (m.elapsed_us * 1e-6);
    m.throughput_norm = static_cast<double>(m.delivered_packets) * payload_us / m.elapsed_us;
  }
  m.mean_access_delay_us = delay_count ? delay_sum_us / static_cast<double>(delay_count) : 0.0;
  m.measured_p = post_attempts ? static_cast<double>(m.collided_tx) / post_attempts : 0.0;
  m.measured_tau =
      eligible_node_slots ? static_cast<double>(post_attempts) / eligible_node_slots : 0.0;
  m.zero_delivery = m.delivered_packets == 0;
  return m;
}

struct SweepResult {
  std::string config_id;
  SimMetrics metrics;
};

/// Runs every scenario independently; results keep input order.
inline std::vector<SweepResult> sweep(const std::vector<ScenarioConfig>& configs,
                                      unsigned workers = 0) {
  if (configs.empty()) throw ConfigError("sweep: empty scenario list");
  std::vector<SweepResult> out(configs.size());
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(configs.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++)
      out[i] = {configs[i].id, run(configs[i])};
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

struct RelativeError {
  std::string metric;
  double sim = 0;
  double analytic = 0;
  std::optional<double> rel_error;  // unset when the analytic value is zero
};

/// (sim - analytic) / analytic, signed.
inline std::optional<double> relative_error(double sim, double analytic) {
  if (analytic == 0) return std::nullopt;
  return (sim - analytic) / analytic;
}

inline std::vector<RelativeError> compare(const SimMetrics& sim, const AnalyticMetrics& a) {
  auto row = [](std::string name, double s, double an) {
    return RelativeError{std::move(name), s, an, relative_error(s, an)};
  };
  return {
      row("nst_bps", sim.throughput_bps, a.throughput_bps),
      row("cad_us", sim.mean_access_delay_us, a.e_delay_us),
      row("throughput_norm", sim.throughput_norm, a.throughput_norm),
      row("p", sim.measured_p, a.solution.p),
      row("tau", sim.measured_tau, a.solution.tau),
      row("p_drop", sim.drop_ratio(), a.p_drop),
  };
}

}  // namespace arbsim
