#pragma once

// Saturation model of a single collision domain: the coupled (tau, p)
// fixed point and the closed-form throughput, drop and delay metrics that
// follow from it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "arbsim/backoff.hpp"
#include "arbsim/errors.hpp"
#include "arbsim/mac_timing.hpp"

namespace arbsim {

struct FixedPointSolution {
  double tau = 0;
  double p = 0;
  double residual = 0;
  std::uint32_t iterations = 0;
  std::uint32_t n_nodes = 0;
};

struct AnalyticMetrics {
  FixedPointSolution solution;
  double p_tr = 0;
  double p_s = 0;
  double throughput_norm = 0;
  double throughput_bps = 0;
  double p_drop = 0;
  double e_x_slots = 0;
  double e_b_slots = 0;
  double e_retry = 0;
  double e_delay_us = 0;
};

struct SolverOptions {
  double tolerance = 1e-12;
  std::uint32_t max_iterations = 200;
};

/// Attempt probability as a function of the collision probability.
///
/// Uses 1 - p^(L+1) = (1 - p) sum p^i so that the p -> 1 limit stays finite;
/// each stage contributes 2 * mean_backoff, which equals W_i - 1 for a
/// zero-floor window.
inline double attempt_probability(double p, std::span<const StageWindow> windows) {
  double geometric = 0;  // sum p^i
  double backoff = 0;    // sum 2 * mean_i * p^i
  double pow_i = 1;
  for (const StageWindow& w : windows) {
    geometric += pow_i;
    backoff += 2.0 * w.mean_backoff() * pow_i;
    pow_i *= p;
  }
  const double success_part = 2.0 * (1.0 - p) * geometric;
  const double denom = success_part + backoff;
  if (denom <= 0) return 1.0;  // unit windows at p = 1
  return success_part / denom;
}

/// 1 - (1 - tau)^(n - 1).
inline double collision_probability(double tau, std::uint32_t n) {
  if (n <= 1) return 0.0;
  return 1.0 - std::pow(1.0 - tau, static_cast<double>(n - 1));
}

/// Bisection on p in [0, 1] for g(p) = p - collision_probability(tau(p)).
/// g(0) <= 0 and g(1) >= 0, so the bracket always holds.
inline FixedPointSolution solve_fixed_point(std::uint32_t n, std::span<const StageWindow> windows,
                                            SolverOptions opts = {}) {
  if (n == 0) throw DomainError("solve_fixed_point: n must be >= 1");
  if (windows.empty()) throw DomainError("solve_fixed_point: empty window sequence");
  for (const StageWindow& w : windows)
    if (w.upper < 1) throw DomainError("solve_fixed_point: window width must be >= 1");

  auto g = [&](double p) { return p - collision_probability(attempt_probability(p, windows), n); };

  FixedPointSolution best;
  best.n_nodes = n;
  best.residual = INFINITY;
  auto consider = [&](double p, std::uint32_t it) {
    const double r = std::abs(g(p));
    if (r < best.residual) {
      best.p = p;
      best.tau = attempt_probability(p, windows);
      best.residual = r;
      best.iterations = it;
    }
  };

  double lo = 0.0, hi = 1.0;
  consider(lo, 0);
  consider(hi, 0);
  std::uint32_t it = 0;
  while (it < opts.max_iterations && best.residual > 0) {
    ++it;
    const double mid = lo + (hi - lo) / 2;
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    consider(mid, it);
    if (gm > 0) hi = mid; else lo = mid;
  }
  if (!(best.residual < opts.tolerance))
    throw SolverError("solve_fixed_point: residual " + std::to_string(best.residual) +
                          " above tolerance after " + std::to_string(it) + " iterations",
                      best.residual);
  return best;
}

struct ThroughputResult {
  double p_tr = 0;
  double p_s = 0;
  double throughput_norm = 0;
  double throughput_bps = 0;
};

inline double busy_probability(double tau, std::uint32_t n) {
  return 1.0 - std::pow(1.0 - tau, static_cast<double>(n));
}

/// Success probability given a busy slot, N tau (1 - tau)^(N-1) / P_tr.
inline double success_probability(double tau, std::uint32_t n) {
  const double p_tr = busy_probability(tau, n);
  if (p_tr <= 0) return 0.0;
  return std::min(1.0, n * tau * std::pow(1.0 - tau, static_cast<double>(n) - 1.0) / p_tr);
}

inline ThroughputResult throughput(const FixedPointSolution& sol, const SlotDurations& d,
                                   double payload_bits, double data_rate_bps) {
  ThroughputResult r;
  r.p_tr = busy_probability(sol.tau, sol.n_nodes);
  r.p_s = success_probability(sol.tau, sol.n_nodes);
  if (r.p_tr <= 0) return r;
  const double payload_us = payload_bits / data_rate_bps * 1e6;
  const double num = r.p_s * r.p_tr * payload_us;
  const double den = r.p_s * r.p_tr * d.t_s_us + r.p_tr * (1.0 - r.p_s) * d.t_c_us +
                     (1.0 - r.p_tr) * d.t_idle_us;
  r.throughput_norm = num / den;
  r.throughput_bps = r.throughput_norm * data_rate_bps;
  return r;
}

inline double drop_probability(const FixedPointSolution& sol, std::uint32_t retry_limit) {
  return std::pow(sol.p, static_cast<double>(retry_limit) + 1.0);
}

struct DelayResult {
  double e_x_slots = 0;
  double e_b_slots = 0;
  double e_retry = 0;
  double e_delay_us = 0;
};

/// Expected access delay of a successfully delivered packet.
inline DelayResult access_delay(const FixedPointSolution& sol,
                                std::span<const StageWindow> windows, const SlotDurations& d,
                                double idle_slot_us) {
  const double p = sol.p;
  if (p >= 1.0) throw SaturationError("access_delay: p = 1, delay diverges");
  const std::size_t stages = windows.size();
  const double norm = 1.0 - std::pow(p, static_cast<double>(stages));

  DelayResult r;
  double pow_i = 1;
  for (std::size_t i = 0; i < stages; ++i) {
    const double weight = pow_i * (1.0 - p) / norm;
    r.e_x_slots += weight * windows[i].mean_backoff();
    r.e_retry += static_cast<double>(i) * weight;
    pow_i *= p;
  }
  r.e_b_slots = r.e_x_slots / (1.0 - p) * p;

  const double p_tr = busy_probability(sol.tau, sol.n_nodes);
  const double p_s = success_probability(sol.tau, sol.n_nodes);
  double busy_slot_us = d.t_s_us;
  if (p_tr > 0) busy_slot_us = (p_s / p_tr) * d.t_s_us + ((p_tr - p_s) / p_tr) * d.t_c_us;

  r.e_delay_us = r.e_x_slots * idle_slot_us + r.e_b_slots * busy_slot_us +
                 r.e_retry * (d.t_c_us + d.t_o_us) + d.t_s_us;
  return r;
}

/// All analytic metrics for one (N, policy, PHY) point.
inline AnalyticMetrics analyze(std::uint32_t n, const PhyParams& phy, AccessMode mode,
                               PolicyKind kind, const PolicyParams& policy,
                               SolverOptions opts = {}) {
  const std::vector<StageWindow> windows = window_sequence(policy, kind);
  const SlotDurations d = slot_durations(phy, mode);
  AnalyticMetrics m;
  m.solution = solve_fixed_point(n, windows, opts);
  const ThroughputResult t = throughput(m.solution, d, phy.payload_bits, phy.data_rate_bps);
  m.p_tr = t.p_tr;
  m.p_s = t.p_s;
  m.throughput_norm = t.throughput_norm;
  m.throughput_bps = t.throughput_bps;
  m.p_drop = drop_probability(m.solution, policy.retry_limit);
  const DelayResult dr = access_delay(m.solution, windows, d, phy.idle_slot_us());
  m.e_x_slots = dr.e_x_slots;
  m.e_b_slots = dr.e_b_slots;
  m.e_retry = dr.e_retry;
  m.e_delay_us = dr.e_delay_us;
  return m;
}

}  // namespace arbsim
