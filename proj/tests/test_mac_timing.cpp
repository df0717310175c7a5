#include <gtest/gtest.h>

#include <random>

#include "arbsim/mac_timing.hpp"

using namespace arbsim;

TEST(MacTiming, DefaultsMatchDsssSet) {
  const PhyParams p;
  EXPECT_EQ(p.sifs_us, 10.0);
  EXPECT_EQ(p.difs_us, 50.0);
  EXPECT_EQ(p.slot_us, 20.0);
  EXPECT_EQ(p.phys_header_bits, 192.0);
  EXPECT_EQ(p.mac_header_bits, 224.0);
  EXPECT_EQ(p.udp_ip_header_bits, 320.0);
  EXPECT_EQ(p.ack_bits, 112.0);
  EXPECT_EQ(p.prop_delay_us, 1.0);
  EXPECT_EQ(p.control_rate_bps, 1e6);
  EXPECT_EQ(p.data_rate_bps, 11e6);
  EXPECT_NO_THROW(validate(p));
}

TEST(MacTiming, HeaderTimeDefaults) {
  // 192 bits at 1 Mb/s plus 544 bits at 11 Mb/s
  EXPECT_NEAR(compute_header_time(PhyParams{}), 192.0 + 544.0 / 11.0, 1e-9);
  EXPECT_NEAR(compute_header_time(PhyParams{}), 241.45, 0.01);
}

TEST(MacTiming, HeaderTimeZeroAndSingleTerm) {
  PhyParams p;
  p.phys_header_bits = p.mac_header_bits = p.udp_ip_header_bits = 0;
  EXPECT_EQ(compute_header_time(p), 0.0);
  p.phys_header_bits = 1000;
  EXPECT_NEAR(compute_header_time(p), 1000.0, 1e-9);
}

TEST(MacTiming, BasicAccessDefaults) {
  const SlotDurations d = slot_durations(PhyParams{}, AccessMode::Basic);
  const double header = 192.0 + 544.0 / 11.0;
  const double payload = 8000.0 / 11.0;
  EXPECT_NEAR(d.t_c_us, 50 + header + payload + 10 + 112, 1e-9);
  EXPECT_NEAR(d.t_c_us, 1140.72, 0.01);
  EXPECT_NEAR(d.t_s_us, 1142.72, 0.01);
  EXPECT_EQ(d.t_idle_us, 20.0);
  // SIFS + default ACK timeout (SIFS + T_ACK + delta)
  EXPECT_NEAR(d.t_o_us, 10 + (10 + 112 + 1), 1e-12);
}

TEST(MacTiming, RtsCtsDefaults) {
  const SlotDurations d = slot_durations(PhyParams{}, AccessMode::RtsCts);
  const double header = 192.0 + 544.0 / 11.0;
  const double payload = 8000.0 / 11.0;
  EXPECT_NEAR(d.t_s_us, 50 + 160 + 10 + 1 + 112 + 10 + 1 + header + payload + 10 + 1 + 112 + 2, 1e-9);
  EXPECT_NEAR(d.t_c_us, 50 + 160 + 10 + 112, 1e-12);
  EXPECT_NEAR(d.t_o_us, 10 + (10 + 112 + 1), 1e-12);
}

TEST(MacTiming, ExplicitTimeouts) {
  PhyParams p;
  p.ack_timeout_us = 300;
  p.cts_timeout_us = 200;
  EXPECT_EQ(slot_durations(p, AccessMode::Basic).t_o_us, 310.0);
  EXPECT_EQ(slot_durations(p, AccessMode::RtsCts).t_o_us, 210.0);
}

TEST(MacTiming, ZeroDeltaGivesEqualBasicDurations) {
  PhyParams p;
  p.prop_delay_us = 0;
  const SlotDurations d = slot_durations(p, AccessMode::Basic);
  EXPECT_EQ(d.t_s_us, d.t_c_us);
}

namespace {
PhyParams random_phy(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  PhyParams p;
  p.sifs_us *= u(rng);
  p.difs_us *= u(rng);
  p.slot_us *= u(rng);
  p.phys_header_bits *= u(rng);
  p.mac_header_bits *= u(rng);
  p.udp_ip_header_bits *= u(rng);
  p.ack_bits *= u(rng);
  p.control_rate_bps *= u(rng);
  p.data_rate_bps = p.control_rate_bps * (1.0 + 10.0 * u(rng));
  p.prop_delay_us *= u(rng);
  p.payload_bits *= u(rng);
  return p;
}
}  // namespace

TEST(MacTimingProperty, BasicSuccessMinusCollisionIsTwoDelta) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    const PhyParams p = random_phy(rng);
    ASSERT_NO_THROW(validate(p));
    const SlotDurations d = slot_durations(p, AccessMode::Basic);
    EXPECT_NEAR(d.t_s_us - d.t_c_us, 2 * p.prop_delay_us, 1e-9);
    EXPECT_GE(d.t_s_us, d.t_c_us);
    EXPECT_GT(d.t_c_us, 0);
    EXPECT_EQ(d.t_idle_us, p.slot_us);
  }
}

TEST(MacTimingProperty, LinearInPayload) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    PhyParams a = random_phy(rng);
    PhyParams b = a;
    b.payload_bits = a.payload_bits + 4000;
    const double slope = 4000 / a.data_rate_bps * 1e6;
    const auto da = slot_durations(a, AccessMode::Basic);
    const auto db = slot_durations(b, AccessMode::Basic);
    EXPECT_NEAR(db.t_s_us - da.t_s_us, slope, 1e-9);
    EXPECT_NEAR(db.t_c_us - da.t_c_us, slope, 1e-9);
  }
}

TEST(MacTimingProperty, Pure) {
  std::mt19937_64 rng(3);
  const PhyParams p = random_phy(rng);
  for (auto mode : {AccessMode::Basic, AccessMode::RtsCts})
    EXPECT_EQ(slot_durations(p, mode), slot_durations(p, mode));
}

TEST(MacTiming, ValidationRejects) {
  PhyParams p;
  p.slot_us = 0;
  EXPECT_THROW(validate(p), ConfigError);
  p = PhyParams{};
  p.data_rate_bps = 5e5;
  EXPECT_THROW(validate(p), ConfigError);
  p = PhyParams{};
  p.payload_bits = -1;
  EXPECT_THROW(validate(p), ConfigError);
  p = PhyParams{};
  p.ack_timeout_us = 0.0;
  EXPECT_THROW(validate(p), ConfigError);
}

TEST(MacTiming, ProfilesDifferOnlyInDataRate) {
  PhyParams a = make_profile(Profile::Dsss11);
  PhyParams b = make_profile(Profile::OneMbps);
  EXPECT_EQ(a.data_rate_bps, 11e6);
  EXPECT_EQ(b.data_rate_bps, 1e6);
  b.data_rate_bps = a.data_rate_bps;
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, PhyParams{});
}

TEST(MacTiming, IdleSlotBasis) {
  PhyParams p;
  EXPECT_EQ(p.idle_slot_us(), 20.0);
  p.idle_slot_basis = IdleSlotBasis::PropagationDelay;
  EXPECT_EQ(p.idle_slot_us(), 1.0);
}
