#include <gtest/gtest.h>

#include <vector>

#include "arbsim/analytic.hpp"
#include "arbsim/simulator.hpp"

using namespace arbsim;

namespace {

ScenarioConfig scenario(std::uint32_t n, PolicyKind kind = PolicyKind::Beb, std::uint64_t slots = 200'000) {
  ScenarioConfig c;
  c.id = "t";
  c.n_nodes = n;
  c.policy = kind;
  c.horizon = SlotBudget{slots};
  c.warmup_slots = 1000;
  return c;
}

struct Recorder {
  std::vector<BusyPeriod> periods;
  void on_busy(const BusyPeriod& b) { periods.push_back(b); }
};

}  // namespace

TEST(Simulator, SingleNodeMatchesClosedForm) {
  ScenarioConfig c = scenario(1, PolicyKind::Beb, 2'000'000);
  const SimMetrics m = run(c);
  const auto d = slot_durations(c.phy, c.mode);
  const double closed = c.phy.payload_time_us() / (d.t_s_us + 15.5 * c.phy.slot_us);
  EXPECT_EQ(m.measured_p, 0.0);
  EXPECT_EQ(m.collided_tx, 0u);
  EXPECT_NEAR(m.throughput_norm, closed, 0.01 * closed);
}

TEST(Simulator, EqualCountersCollideAndBothBackOff) {
  ScenarioConfig c = scenario(2);
  c.policy_params.cw_min = 1;  // both counters start at 0
  c.policy_params.t_cw = 1;
  c.policy_params.retry_limit = 10;
  c.warmup_slots = 0;
  c.horizon = SlotBudget{5};
  Recorder rec;
  const SimMetrics m = run(c, rec);
  ASSERT_FALSE(rec.periods.empty());
  EXPECT_EQ(rec.periods.front().start_ns, 0);
  EXPECT_EQ(rec.periods.front().transmitters, 2u);
  EXPECT_EQ(rec.periods.front().collision_outcomes, 2u);
  EXPECT_FALSE(rec.periods.front().success);
  EXPECT_GE(m.collided_tx, 2u);
}

TEST(Simulator, UnitWindowsNeverDeliver) {
  ScenarioConfig c = scenario(3, PolicyKind::Beb, 10'000);
  c.policy_params.cw_min = c.policy_params.cw_max = 1;
  c.policy_params.t_cw = 1;
  c.policy_params.cw_th = 0;
  const SimMetrics m = run(c);
  EXPECT_TRUE(m.zero_delivery);
  EXPECT_EQ(m.delivered_packets, 0u);
  EXPECT_EQ(m.measured_p, 1.0);
  EXPECT_GT(m.dropped_packets, 0u);
}

TEST(Simulator, Deterministic) {
  for (PolicyKind kind : {PolicyKind::Beb, PolicyKind::Arb, PolicyKind::ArbHalving}) {
    ScenarioConfig c = scenario(20, kind);
    c.policy_params.halving_prob_f = 0.5;
    EXPECT_EQ(run(c), run(c));
    ScenarioConfig other = c;
    other.seed = 2;
    EXPECT_NE(run(c), run(other));
  }
}

class SimulatorProperties : public ::testing::TestWithParam<std::tuple<PolicyKind, std::uint32_t>> {};

TEST_P(SimulatorProperties, ConservationExclusivitySymmetry) {
  const auto [kind, n] = GetParam();
  ScenarioConfig c = scenario(n, kind);
  c.policy_params.retry_limit = 3;
  const auto d = slot_durations(c.phy, c.mode);
  const std::int64_t ts = std::llround(d.t_s_us * 1000), tc = std::llround(d.t_c_us * 1000);
  Recorder rec;
  const SimMetrics m = run(c, rec);

  for (const auto& node : m.nodes) {
    EXPECT_EQ(node.started, node.delivered + node.dropped + node.pending);
    EXPECT_LE(node.pending, 1u);
  }
  std::int64_t last_end = -1;
  for (const auto& b : rec.periods) {
    EXPECT_GE(b.start_ns, last_end);
    EXPECT_EQ(b.end_ns - b.start_ns, b.success ? ts : tc);
    EXPECT_GE(b.transmitters, 1u);
    if (b.transmitters >= 2) {
      EXPECT_EQ(b.collision_outcomes, b.transmitters);
      EXPECT_FALSE(b.success);
    } else {
      EXPECT_EQ(b.collision_outcomes, 0u);
      EXPECT_TRUE(b.success);
    }
    last_end = b.end_ns;
  }
  EXPECT_NEAR(m.busy_time_us + m.idle_time_us, m.elapsed_us, 1e-6 * m.elapsed_us);
  EXPECT_GE(m.throughput_norm, 0);
  EXPECT_LE(m.throughput_norm, 1);
  EXPECT_LE(m.delivered_packets + m.dropped_packets, m.attempts);
  EXPECT_EQ(m.attempts, m.delivered_packets + m.collided_tx);
  EXPECT_EQ(m.access_delay_samples.size(), m.delivered_packets);
}

INSTANTIATE_TEST_SUITE_P(
    Grid, SimulatorProperties,
    ::testing::Combine(::testing::Values(PolicyKind::Beb, PolicyKind::Arb, PolicyKind::ArbHalving),
                       ::testing::Values(1u, 2u, 10u, 60u)));

TEST(Simulator, WarmupExcludedFromMetrics) {
  ScenarioConfig c = scenario(5, PolicyKind::Beb, 100'000);
  c.warmup_slots = 50'000;
  const SimMetrics m = run(c);
  EXPECT_LE(m.slots, 50'000u + 1);
  EXPECT_GE(m.slots, 49'000u);
}

TEST(Simulator, TimeBudget) {
  ScenarioConfig c = scenario(10);
  c.horizon = TimeBudget{2e6};
  c.warmup_slots = 0;
  const SimMetrics m = run(c);
  // the last busy period may run past the budget
  EXPECT_GE(m.elapsed_us, 2e6);
  EXPECT_LT(m.elapsed_us, 2e6 + 2000);
}

TEST(Simulator, EventBurstActivatesSubset) {
  ScenarioConfig c = scenario(100);
  c.active = EventBurst{10, 5000};
  c.warmup_slots = 0;
  Recorder rec;
  const SimMetrics m = run(c, rec);
  EXPECT_EQ(m.nodes.size(), 10u);
  ASSERT_FALSE(rec.periods.empty());
  EXPECT_GE(rec.periods.front().start_ns, 5000ll * 20'000);
  EXPECT_GE(m.idle_slots, 5000u);
}

TEST(Simulator, MeasuredTauMatchesAttemptRateForSingleNode) {
  ScenarioConfig c = scenario(1, PolicyKind::Beb, 1'000'000);
  const SimMetrics m = run(c);
  EXPECT_NEAR(m.measured_tau, 2.0 / 33.0, 0.002);
}

TEST(Simulator, ValidationErrors) {
  ScenarioConfig c = scenario(5);
  c.active = EventBurst{6, 0};
  EXPECT_THROW(run(c), ConfigError);
  c = scenario(5);
  c.warmup_slots = 1'000'000;
  EXPECT_THROW(run(c), ConfigError);
  c = scenario(5);
  c.n_nodes = 0;
  EXPECT_THROW(run(c), ConfigError);
}

TEST(Sweep, KeepsOrderAndMatchesIndividualRuns) {
  std::vector<ScenarioConfig> cs;
  for (std::uint32_t n : {40u, 5u, 20u, 1u}) {
    ScenarioConfig c = scenario(n, PolicyKind::Arb, 50'000);
    c.id = "n" + std::to_string(n);
    cs.push_back(c);
  }
  const auto res = sweep(cs, 3);
  ASSERT_EQ(res.size(), cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    EXPECT_EQ(res[i].config_id, cs[i].id);
    EXPECT_EQ(res[i].metrics, run(cs[i]));
  }
  const auto single = sweep({cs[0]});
  EXPECT_EQ(single.front().metrics, run(cs[0]));
  EXPECT_THROW(sweep({}), ConfigError);
}

TEST(Compare, RelativeErrorExamples) {
  EXPECT_NEAR(*relative_error(701360, 650260) * 100, 7.86, 0.005);
  EXPECT_EQ(*relative_error(42, 42), 0.0);
  EXPECT_NEAR(*relative_error(7.349, 6.175) * 100, 19.0, 0.05);
  EXPECT_FALSE(relative_error(1, 0).has_value());
}

TEST(Compare, ReportRows) {
  SimMetrics s;
  s.throughput_bps = 701360;
  AnalyticMetrics a;
  a.throughput_bps = 650260;
  const auto rows = compare(s, a);
  ASSERT_EQ(rows.front().metric, "nst_bps");
  EXPECT_NEAR(*rows.front().rel_error, 51100.0 / 650260.0, 1e-12);
  for (const auto& r : rows)
    if (r.analytic == 0) EXPECT_FALSE(r.rel_error);
}
