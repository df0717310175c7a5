#pragma once

// Contention-window state machines: binary exponential backoff and adaptive
// random backoff (with an optional probabilistic window-halving variant).
//
// Every transition is a pure function of (state, params, outcome) plus an
// explicit random stream, so one machine per simulated node can be stepped
// independently.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "arbsim/errors.hpp"

namespace arbsim {

enum class PolicyKind { Beb, Arb, ArbHalving };

enum class TxOutcome { Success, Collision };

/// Origin of the ARB window growth after collisions.
enum class ArbGrowthBase {
  InitialWindow,  // upper = t_cw * sigma^n_f
  MinWindow,      // upper = cw_min * sigma^n_f (printed 2^(i_min + n_f) form)
};

/// When ARB folds the last draw into its running CW average.
enum class ArbAverageUpdate {
  OnSuccess,    // algorithm listing
  OnCollision,  // prose description
};

struct PolicyParams {
  std::uint32_t cw_min = 32;
  std::uint32_t cw_max = 1024;
  std::uint32_t backoff_order_m = 5;
  std::uint32_t retry_limit = 6;
  double sigma = 2.0;
  std::uint32_t t_cw = 16;
  std::optional<std::uint32_t> cw_th;  // unset: t_cw / 2
  double alpha = 0.5;
  double halving_prob_f = 1.0;
  ArbGrowthBase growth_base = ArbGrowthBase::InitialWindow;
  ArbAverageUpdate avg_update = ArbAverageUpdate::OnSuccess;

  std::uint32_t threshold() const { return cw_th.value_or(t_cw / 2); }

  /// Window used for the first draw of a fresh packet under ARB.
  std::uint32_t arb_initial_window() const {
    return growth_base == ArbGrowthBase::InitialWindow ? t_cw : cw_min;
  }

  bool operator==(const PolicyParams&) const = default;
};

inline void validate(const PolicyParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("policy: ") + what);
  };
  require(p.cw_min >= 1, "cw_min must be >= 1");
  require(p.cw_min <= p.cw_max, "cw_min must be <= cw_max");
  require(p.t_cw >= 1, "t_cw must be >= 1");
  require(p.t_cw <= p.cw_max, "t_cw must be <= cw_max");
  require(p.sigma >= 1.0, "sigma must be >= 1");
  require(p.alpha >= 0.0 && p.alpha <= 1.0, "alpha must be in [0, 1]");
  require(p.halving_prob_f >= 0.0 && p.halving_prob_f <= 1.0,
          "halving_prob_f must be in [0, 1]");
  require(p.threshold() <= p.cw_min, "cw_th must be <= cw_min");
}

struct BackoffState {
  std::uint32_t stage = 0;     // consecutive failures of the current packet
  std::uint32_t cw_lower = 0;  // ARB lower bound
  std::uint32_t cw_upper = 1;  // window of the current draw
  std::uint32_t cw_base = 1;   // window a fresh packet starts from
  std::uint64_t cw_avg = 0;    // ARB running weighted CW sum
  std::uint32_t last_draw = 0;
  std::uint32_t counter = 0;

  bool operator==(const BackoffState&) const = default;
};

struct Transition {
  BackoffState state;
  bool dropped = false;
};

/// ceil(base * sigma^exponent), saturated at cap.
inline std::uint32_t grown_window(std::uint32_t base, double sigma, std::uint32_t exponent,
                                  std::uint32_t cap) {
  double w = static_cast<double>(base);
  for (std::uint32_t k = 0; k < exponent && w < cap; ++k) w *= sigma;
  w = std::ceil(w - 1e-9);
  return w >= cap ? cap : static_cast<std::uint32_t>(w);
}

/// BEB window for a stage: frozen after backoff_order_m, capped at cw_max.
inline std::uint32_t beb_window(const PolicyParams& p, std::uint32_t stage) {
  return grown_window(p.cw_min, p.sigma, std::min(stage, p.backoff_order_m), p.cw_max);
}

/// First value of the draw range [max(lower - 1, 0), upper - 1].
inline std::uint32_t draw_floor(std::uint32_t lower) { return lower > 0 ? lower - 1 : 0; }

/// Draws a fresh counter. Keeps lower inside [0, upper - 1] so the range is never empty.
template <class Rng>
BackoffState draw_counter(BackoffState s, Rng& rng) {
  s.cw_upper = std::max<std::uint32_t>(s.cw_upper, 1);
  s.cw_lower = std::min(s.cw_lower, s.cw_upper - 1);
  std::uniform_int_distribution<std::uint32_t> dist(draw_floor(s.cw_lower), s.cw_upper - 1);
  s.counter = dist(rng);
  s.last_draw = s.counter;
  return s;
}

template <class Rng>
BackoffState beb_initial(const PolicyParams& p, Rng& rng) {
  BackoffState s;
  s.cw_upper = p.cw_min;
  s.cw_base = p.cw_min;
  return draw_counter(s, rng);
}

template <class Rng>
Transition beb_on_outcome(BackoffState s, const PolicyParams& p, TxOutcome outcome, Rng& rng) {
  bool dropped = false;
  if (outcome == TxOutcome::Collision) {
    ++s.stage;
    if (s.stage > p.retry_limit) dropped = true;
  }
  if (outcome == TxOutcome::Success || dropped) {
    s.stage = 0;
    s.cw_upper = p.cw_min;
  } else {
    s.cw_upper = beb_window(p, s.stage);
  }
  s.cw_lower = 0;
  return {draw_counter(s, rng), dropped};
}

/// With probability f halves the window, never below t_cw.
template <class Rng>
std::uint32_t apply_halving(std::uint32_t current_upper, const PolicyParams& p, Rng& rng) {
  std::bernoulli_distribution coin(p.halving_prob_f);
  if (!coin(rng)) return current_upper;
  return std::max(current_upper / 2, p.t_cw);
}

namespace detail {

inline std::uint32_t round_half_up(double x) {
  const double r = std::floor(x + 0.5);
  if (r >= static_cast<double>(std::numeric_limits<std::uint32_t>::max()))
    return std::numeric_limits<std::uint32_t>::max();
  return r <= 0 ? 0 : static_cast<std::uint32_t>(r);
}

inline std::uint64_t saturating_add(std::uint64_t a, std::uint64_t b) {
  return a > std::numeric_limits<std::uint64_t>::max() - b
             ? std::numeric_limits<std::uint64_t>::max()
             : a + b;
}

/// Folds the last draw into the running average and returns the new lower bound.
inline BackoffState fold_last_draw(BackoffState s, const PolicyParams& p) {
  const std::uint32_t last = s.last_draw;
  if (last == 0) {
    s.cw_avg = 0;
    s.cw_lower = 1;
  } else if (last < p.threshold()) {
    s.cw_avg = saturating_add(2ull * last, s.cw_avg);
    s.cw_lower = round_half_up(p.alpha * static_cast<double>(s.cw_avg));
  } else {
    s.cw_avg = 0;
    s.cw_lower = 0;
  }
  return s;
}

inline std::uint32_t arb_stage_window(const BackoffState& s, const PolicyParams& p) {
  return grown_window(s.cw_base, p.sigma, s.stage, p.cw_max);
}

template <class Rng>
BackoffState arb_reset_window(BackoffState s, const PolicyParams& p, PolicyKind kind, Rng& rng) {
  s.stage = 0;
  if (kind == PolicyKind::ArbHalving) {
    s.cw_base = apply_halving(std::max(s.cw_upper, p.t_cw), p, rng);
  } else {
    s.cw_base = p.arb_initial_window();
  }
  s.cw_upper = s.cw_base;
  return s;
}

}  // namespace detail

template <class Rng>
BackoffState arb_initial(const PolicyParams& p, Rng& rng) {
  BackoffState s;
  s.cw_avg = 2;
  s.cw_base = p.arb_initial_window();
  s.cw_upper = s.cw_base;
  return draw_counter(s, rng);
}

/// Success path of ARB. `kind` selects plain reset (Arb) or halving (ArbHalving).
template <class Rng>
BackoffState arb_on_success(BackoffState s, const PolicyParams& p, Rng& rng,
                            PolicyKind kind = PolicyKind::Arb) {
  if (p.avg_update == ArbAverageUpdate::OnSuccess) s = detail::fold_last_draw(s, p);
  s = detail::arb_reset_window(s, p, kind, rng);
  return draw_counter(s, rng);
}

template <class Rng>
Transition arb_on_collision(BackoffState s, const PolicyParams& p, Rng& rng,
                            PolicyKind kind = PolicyKind::Arb) {
  if (p.avg_update == ArbAverageUpdate::OnCollision) s = detail::fold_last_draw(s, p);
  ++s.stage;
  if (s.stage > p.retry_limit) {
    s = detail::arb_reset_window(s, p, kind, rng);
    s.cw_lower = 0;
    return {draw_counter(s, rng), true};
  }
  s.cw_upper = detail::arb_stage_window(s, p);
  return {draw_counter(s, rng), false};
}

/// A policy choice bound to its parameters; the simulator holds one per scenario.
class BackoffPolicy {
 public:
  BackoffPolicy(PolicyKind kind, PolicyParams params) : kind_(kind), params_(params) {}

  PolicyKind kind() const { return kind_; }
  const PolicyParams& params() const { return params_; }

  template <class Rng>
  BackoffState initial(Rng& rng) const {
    return kind_ == PolicyKind::Beb ? beb_initial(params_, rng) : arb_initial(params_, rng);
  }

  template <class Rng>
  Transition on_outcome(const BackoffState& s, TxOutcome outcome, Rng& rng) const {
    if (kind_ == PolicyKind::Beb) return beb_on_outcome(s, params_, outcome, rng);
    if (outcome == TxOutcome::Success) return {arb_on_success(s, params_, rng, kind_), false};
    return arb_on_collision(s, params_, rng, kind_);
  }

 private:
  PolicyKind kind_;
  PolicyParams params_;
};

struct StageWindow {
  std::uint32_t lower = 0;
  std::uint32_t upper = 1;

  /// Mean of the uniform draw over [max(lower - 1, 0), upper - 1].
  double mean_backoff() const {
    return (static_cast<double>(draw_floor(lower)) + static_cast<double>(upper) - 1.0) / 2.0;
  }

  bool operator==(const StageWindow&) const = default;
};

/// Steady-state lower bound of ARB under success-only operation.
///
/// The running sum obeys E[avg] = (2 E[cw | 0 < cw < th] + E[avg]) P(0 < cw < th),
/// with cw uniform over the post-success window. Because that window's floor
/// depends on the lower bound itself, the bound is iterated to a fixed point.
inline std::uint32_t expected_arb_lower_bound(const PolicyParams& p) {
  const std::uint32_t upper = p.arb_initial_window();
  const std::uint32_t th = p.threshold();
  std::uint32_t lb = 0;
  for (int iter = 0; iter < 64; ++iter) {
    const std::uint32_t lo = draw_floor(lb);
    const std::uint32_t hi = upper - 1;
    const double count = static_cast<double>(hi - lo + 1);
    const std::uint32_t a = std::max<std::uint32_t>(lo, 1);
    const std::uint32_t b = th > 0 ? std::min(hi, th - 1) : 0;
    const double hits = (th > 0 && b >= a) ? static_cast<double>(b - a + 1) : 0.0;
    const double prob = hits / count;
    const double cond_mean = hits > 0 ? (static_cast<double>(a) + b) / 2.0 : 0.0;
    std::uint32_t next = upper - 1;
    if (prob < 1.0) {
      const double avg = 2.0 * cond_mean * prob / (1.0 - prob);
      next = std::min(detail::round_half_up(p.alpha * avg), upper - 1);
    }
    if (next == lb) break;
    lb = next;
  }
  return lb;
}

/// Per-stage draw windows for stages 0..L, as consumed by the analytic model.
inline std::vector<StageWindow> window_sequence(const PolicyParams& p, PolicyKind kind) {
  if (kind == PolicyKind::ArbHalving)
    throw DomainError("window_sequence: the halving variant has no per-stage closed form");
  std::vector<StageWindow> out;
  out.reserve(p.retry_limit + 1);
  if (kind == PolicyKind::Beb) {
    for (std::uint32_t i = 0; i <= p.retry_limit; ++i) out.push_back({0, beb_window(p, i)});
    return out;
  }
  const std::uint32_t lb = expected_arb_lower_bound(p);
  const std::uint32_t first = p.arb_initial_window();
  for (std::uint32_t i = 0; i <= p.retry_limit; ++i) {
    const std::uint32_t upper = grown_window(first, p.sigma, i, p.cw_max);
    out.push_back({std::min(lb, upper - 1), upper});
  }
  return out;
}

inline std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Beb: return "beb";
    case PolicyKind::Arb: return "arb";
    case PolicyKind::ArbHalving: return "arb-halving";
  }
  return "?";
}

inline PolicyKind parse_policy_kind(std::string_view name) {
  if (name == "beb") return PolicyKind::Beb;
  if (name == "arb") return PolicyKind::Arb;
  if (name == "arb-halving") return PolicyKind::ArbHalving;
  throw ConfigError("policy.name: expected one of beb, arb, arb-halving; got '" +
                    std::string(name) + "'");
}

}  // namespace arbsim
