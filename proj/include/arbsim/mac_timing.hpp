#pragma once

// PHY/MAC constants and the per-slot occupancy durations derived from them.
// All durations are in microseconds, sizes in bits, rates in bits/s.

#include <optional>
#include <string>
#include <string_view>

#include "arbsim/errors.hpp"

namespace arbsim {

enum class AccessMode { Basic, RtsCts };

/// Which duration stands in for one idle backoff slot in the delay formula.
enum class IdleSlotBasis { SlotTime, PropagationDelay };

/// Named parameter sets. They differ only in the data rate.
enum class Profile { Dsss11, OneMbps };

struct PhyParams {
  double sifs_us = 10.0;
  double difs_us = 50.0;
  double slot_us = 20.0;
  double phys_header_bits = 192.0;
  double mac_header_bits = 224.0;
  double udp_ip_header_bits = 320.0;
  double ack_bits = 112.0;
  double rts_bits = 160.0;
  double cts_bits = 112.0;
  double data_rate_bps = 11e6;
  double control_rate_bps = 1e6;
  double prop_delay_us = 1.0;
  double payload_bits = 8000.0;
  // Unset means SIFS + T_ACK + delta (resp. SIFS + T_CTS + delta).
  std::optional<double> ack_timeout_us;
  std::optional<double> cts_timeout_us;
  IdleSlotBasis idle_slot_basis = IdleSlotBasis::SlotTime;

  double ack_time_us() const { return ack_bits / control_rate_bps * 1e6; }
  double rts_time_us() const { return rts_bits / control_rate_bps * 1e6; }
  double cts_time_us() const { return cts_bits / control_rate_bps * 1e6; }
  double payload_time_us() const { return payload_bits / data_rate_bps * 1e6; }

  double effective_ack_timeout_us() const {
    return ack_timeout_us.value_or(sifs_us + ack_time_us() + prop_delay_us);
  }
  double effective_cts_timeout_us() const {
    return cts_timeout_us.value_or(sifs_us + cts_time_us() + prop_delay_us);
  }

  /// Duration charged per idle backoff slot in the expected-delay formula.
  double idle_slot_us() const {
    return idle_slot_basis == IdleSlotBasis::SlotTime ? slot_us : prop_delay_us;
  }

  bool operator==(const PhyParams&) const = default;
};

inline PhyParams make_profile(Profile profile) {
  PhyParams p;
  p.data_rate_bps = profile == Profile::Dsss11 ? 11e6 : 1e6;
  return p;
}

/// Throws ConfigError naming the first violated constraint.
inline void validate(const PhyParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("phy: ") + what);
  };
  require(p.sifs_us > 0, "sifs_us must be > 0");
  require(p.difs_us > 0, "difs_us must be > 0");
  require(p.slot_us > 0, "slot_us must be > 0");
  require(p.phys_header_bits >= 0, "phys_header_bits must be >= 0");
  require(p.mac_header_bits >= 0, "mac_header_bits must be >= 0");
  require(p.udp_ip_header_bits >= 0, "udp_ip_header_bits must be >= 0");
  require(p.ack_bits > 0, "ack_bits must be > 0");
  require(p.rts_bits > 0, "rts_bits must be > 0");
  require(p.cts_bits > 0, "cts_bits must be > 0");
  require(p.control_rate_bps > 0, "control_rate_bps must be > 0");
  require(p.data_rate_bps >= p.control_rate_bps, "data_rate_bps must be >= control_rate_bps");
  require(p.prop_delay_us >= 0, "prop_delay_us must be >= 0");
  require(p.payload_bits > 0, "payload_bits must be > 0");
  require(!p.ack_timeout_us || *p.ack_timeout_us > 0, "ack_timeout_us must be > 0");
  require(!p.cts_timeout_us || *p.cts_timeout_us > 0, "cts_timeout_us must be > 0");
}

struct SlotDurations {
  double t_s_us = 0;     // successful transmission
  double t_c_us = 0;     // collision
  double t_o_us = 0;     // extra wait of a collider (timeout)
  double t_idle_us = 0;  // empty slot

  bool operator==(const SlotDurations&) const = default;
};

/// PHY preamble at the control rate, MAC and UDP/IP headers at the data rate.
inline double compute_header_time(const PhyParams& p) {
  return p.phys_header_bits / p.control_rate_bps * 1e6 +
         (p.mac_header_bits + p.udp_ip_header_bits) / p.data_rate_bps * 1e6;
}

inline SlotDurations slot_durations(const PhyParams& p, AccessMode mode) {
  const double header = compute_header_time(p);
  const double payload = p.payload_time_us();
  const double delta = p.prop_delay_us;
  SlotDurations d;
  d.t_idle_us = p.slot_us;
  if (mode == AccessMode::Basic) {
    d.t_s_us = p.difs_us + header + payload + delta + p.sifs_us + p.ack_time_us() + delta;
    d.t_c_us = p.difs_us + header + payload + p.sifs_us + p.ack_time_us();
    d.t_o_us = p.sifs_us + p.effective_ack_timeout_us();
  } else {
    d.t_s_us = p.difs_us + p.rts_time_us() + p.sifs_us + delta + p.cts_time_us() + p.sifs_us +
               delta + header + payload + p.sifs_us + delta + p.ack_time_us() + 2 * delta;
    d.t_c_us = p.difs_us + p.rts_time_us() + p.sifs_us + p.cts_time_us();
    d.t_o_us = p.sifs_us + p.effective_cts_timeout_us();
  }
  return d;
}

inline std::string_view to_string(AccessMode m) {
  return m == AccessMode::Basic ? "basic" : "rts-cts";
}

inline std::string_view to_string(Profile p) {
  return p == Profile::Dsss11 ? "table1" : "1mbps";
}

inline std::string_view to_string(IdleSlotBasis b) {
  return b == IdleSlotBasis::SlotTime ? "slot" : "propagation";
}

}  // namespace arbsim
