#pragma once

// Run configuration: a JSON document with top-level keys
//   command, phy, policy, scenario, sweep, output
// Every field is optional and defaults to the 11 Mb/s DSSS parameter set.
// Unknown keys are rejected so that a typo in a sweep axis fails loudly.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "arbsim/backoff.hpp"
#include "arbsim/errors.hpp"
#include "arbsim/mac_timing.hpp"
#include "arbsim/simulator.hpp"

namespace arbsim {

enum class Command { Analyze, Simulate, Compare, Sweep };
enum class OutputFormat { Csv, Json };
enum class SeriesSource { Analytic, Simulation };

/// Swept parameter.
enum class SweepAxis { NNodes, ActiveNodes, TCw, HalvingProbF, Alpha, CwMin, RetryLimit, PayloadBits };

struct SeriesSpec {
  std::string label;
  PolicyKind policy = PolicyKind::Beb;
  PolicyParams params;
  bool operator==(const SeriesSpec&) const = default;
};

struct SweepSpec {
  SweepAxis axis = SweepAxis::NNodes;
  std::vector<double> values;
  std::vector<SeriesSpec> series;
  std::vector<std::uint64_t> seeds;  // empty: the scenario seed only
  bool operator==(const SweepSpec&) const = default;
};

struct OutputSpec {
  std::string path;  // empty: stdout
  OutputFormat format = OutputFormat::Csv;
  std::vector<std::string> metrics{"nst"};
  SeriesSource source = SeriesSource::Analytic;
  bool operator==(const OutputSpec&) const = default;
};

struct RunManifest {
  Command command = Command::Analyze;
  Profile profile = Profile::Dsss11;
  ScenarioConfig base;
  std::optional<SweepSpec> sweep;
  OutputSpec output;
  std::vector<ScenarioConfig> scenarios;  // expanded from base + sweep
  bool operator==(const RunManifest&) const = default;
};

/// Where each expanded scenario sits in the sweep grid.
struct ScenarioSlot {
  std::size_t series = 0;
  std::size_t value = 0;
  std::size_t seed = 0;
};

namespace detail {

using nlohmann::json;

template <class E>
struct EnumName {
  E value;
  std::string_view name;
};

inline constexpr EnumName<Command> kCommands[] = {
    {Command::Analyze, "analyze"},
    {Command::Simulate, "simulate"},
    {Command::Compare, "compare"},
    {Command::Sweep, "sweep"}};
inline constexpr EnumName<OutputFormat> kFormats[] = {{OutputFormat::Csv, "csv"},
                                                      {OutputFormat::Json, "json"}};
inline constexpr EnumName<SeriesSource> kSources[] = {{SeriesSource::Analytic, "analytic"},
                                                      {SeriesSource::Simulation, "simulation"}};
inline constexpr EnumName<Profile> kProfiles[] = {{Profile::Dsss11, "table1"},
                                                  {Profile::OneMbps, "1mbps"}};
inline constexpr EnumName<AccessMode> kModes[] = {{AccessMode::Basic, "basic"},
                                                  {AccessMode::RtsCts, "rts-cts"}};
inline constexpr EnumName<IdleSlotBasis> kIdleBases[] = {
    {IdleSlotBasis::SlotTime, "slot"}, {IdleSlotBasis::PropagationDelay, "propagation"}};
inline constexpr EnumName<ArbGrowthBase> kGrowthBases[] = {
    {ArbGrowthBase::InitialWindow, "t_cw"}, {ArbGrowthBase::MinWindow, "cw_min"}};
inline constexpr EnumName<ArbAverageUpdate> kAvgUpdates[] = {
    {ArbAverageUpdate::OnSuccess, "success"}, {ArbAverageUpdate::OnCollision, "collision"}};
inline constexpr EnumName<SweepAxis> kAxes[] = {
    {SweepAxis::NNodes, "n_nodes"},        {SweepAxis::ActiveNodes, "active_nodes"},
    {SweepAxis::TCw, "t_cw"},              {SweepAxis::HalvingProbF, "halving_prob_f"},
    {SweepAxis::Alpha, "alpha"},           {SweepAxis::CwMin, "cw_min"},
    {SweepAxis::RetryLimit, "retry_limit"}, {SweepAxis::PayloadBits, "payload_bits"}};

template <class E, std::size_t N>
std::string_view name_of(const EnumName<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "?";
}

template <class E, std::size_t N>
E parse_enum(const EnumName<E> (&table)[N], const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(key + ": expected string");
  const std::string s = j.get<std::string>();
  std::string options;
  for (const auto& e : table) {
    if (e.name == s) return e.value;
    options += (options.empty() ? "" : ", ") + std::string(e.name);
  }
  throw ConfigError(key + ": expected one of " + options + "; got '" + s + "'");
}

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected object");
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == item.key();
    if (!ok) throw ConfigError(where + "." + item.key() + ": unknown key");
  }
}

inline double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) throw ConfigError(key + ": expected number");
  return j.get<double>();
}

template <class U>
U get_unsigned(const json& j, const std::string& key) {
  if (!j.is_number_integer() || (j.is_number_integer() && j.get<std::int64_t>() < 0 &&
                                 !j.is_number_unsigned()))
    throw ConfigError(key + ": expected non-negative integer");
  const auto v = j.get<std::uint64_t>();
  if (v > std::numeric_limits<U>::max()) throw ConfigError(key + ": value too large");
  return static_cast<U>(v);
}

inline std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) throw ConfigError(key + ": expected string");
  return j.get<std::string>();
}

inline void apply_phy(const json& j, PhyParams& p, Profile& profile) {
  reject_unknown(j, "phy",
                 {"profile", "sifs_us", "difs_us", "slot_us", "phys_header_bits",
                  "mac_header_bits", "udp_ip_header_bits", "ack_bits", "rts_bits", "cts_bits",
                  "data_rate_bps", "control_rate_bps", "prop_delay_us", "payload_bits",
                  "ack_timeout_us", "cts_timeout_us", "idle_slot"});
  if (j.contains("profile")) {
    profile = parse_enum(kProfiles, j["profile"], "phy.profile");
    p.data_rate_bps = make_profile(profile).data_rate_bps;
  }
  auto num = [&](const char* key, double& field) {
    if (j.contains(key)) field = get_number(j[key], std::string("phy.") + key);
  };
  num("sifs_us", p.sifs_us);
  num("difs_us", p.difs_us);
  num("slot_us", p.slot_us);
  num("phys_header_bits", p.phys_header_bits);
  num("mac_header_bits", p.mac_header_bits);
  num("udp_ip_header_bits", p.udp_ip_header_bits);
  num("ack_bits", p.ack_bits);
  num("rts_bits", p.rts_bits);
  num("cts_bits", p.cts_bits);
  num("data_rate_bps", p.data_rate_bps);
  num("control_rate_bps", p.control_rate_bps);
  num("prop_delay_us", p.prop_delay_us);
  num("payload_bits", p.payload_bits);
  if (j.contains("ack_timeout_us")) p.ack_timeout_us = get_number(j["ack_timeout_us"], "phy.ack_timeout_us");
  if (j.contains("cts_timeout_us")) p.cts_timeout_us = get_number(j["cts_timeout_us"], "phy.cts_timeout_us");
  if (j.contains("idle_slot")) p.idle_slot_basis = parse_enum(kIdleBases, j["idle_slot"], "phy.idle_slot");
}

inline void apply_policy(const json& j, const std::string& where, PolicyKind& kind,
                         PolicyParams& p) {
  reject_unknown(j, where,
                 {"name", "cw_min", "cw_max", "backoff_order_m", "retry_limit", "sigma", "t_cw",
                  "cw_th", "alpha", "halving_prob_f", "growth_base", "avg_update"});
  if (j.contains("name")) kind = parse_policy_kind(get_string(j["name"], where + ".name"));
  auto u32 = [&](const char* key, std::uint32_t& field) {
    if (j.contains(key)) field = get_unsigned<std::uint32_t>(j[key], where + "." + key);
  };
  auto num = [&](const char* key, double& field) {
    if (j.contains(key)) field = get_number(j[key], where + "." + key);
  };
  u32("cw_min", p.cw_min);
  u32("cw_max", p.cw_max);
  u32("backoff_order_m", p.backoff_order_m);
  u32("retry_limit", p.retry_limit);
  u32("t_cw", p.t_cw);
  num("sigma", p.sigma);
  num("alpha", p.alpha);
  num("halving_prob_f", p.halving_prob_f);
  if (j.contains("cw_th")) {
    // null restores the t_cw / 2 default, e.g. in a series overriding a base policy
    if (j["cw_th"].is_null()) p.cw_th.reset();
    else p.cw_th = get_unsigned<std::uint32_t>(j["cw_th"], where + ".cw_th");
  }
  if (j.contains("growth_base"))
    p.growth_base = parse_enum(kGrowthBases, j["growth_base"], where + ".growth_base");
  if (j.contains("avg_update"))
    p.avg_update = parse_enum(kAvgUpdates, j["avg_update"], where + ".avg_update");
}

inline void apply_scenario(const json& j, ScenarioConfig& s) {
  reject_unknown(j, "scenario",
                 {"id", "n_nodes", "active", "mode", "seed", "horizon_slots", "horizon_us",
                  "warmup_slots"});
  if (j.contains("id")) s.id = get_string(j["id"], "scenario.id");
  if (j.contains("n_nodes")) s.n_nodes = get_unsigned<std::uint32_t>(j["n_nodes"], "scenario.n_nodes");
  if (j.contains("mode")) s.mode = parse_enum(kModes, j["mode"], "scenario.mode");
  if (j.contains("seed")) s.seed = get_unsigned<std::uint64_t>(j["seed"], "scenario.seed");
  if (j.contains("warmup_slots"))
    s.warmup_slots = get_unsigned<std::uint64_t>(j["warmup_slots"], "scenario.warmup_slots");
  if (j.contains("horizon_slots") && j.contains("horizon_us"))
    throw ConfigError("scenario: horizon_slots and horizon_us are mutually exclusive");
  if (j.contains("horizon_slots"))
    s.horizon = SlotBudget{get_unsigned<std::uint64_t>(j["horizon_slots"], "scenario.horizon_slots")};
  if (j.contains("horizon_us"))
    s.horizon = TimeBudget{get_number(j["horizon_us"], "scenario.horizon_us")};
  if (j.contains("active")) {
    const json& a = j["active"];
    if (a.is_string()) {
      if (a.get<std::string>() != "all")
        throw ConfigError("scenario.active: expected \"all\" or {count, activation_slot}");
      s.active = AllNodes{};
    } else {
      reject_unknown(a, "scenario.active", {"count", "activation_slot"});
      EventBurst b;
      if (!a.contains("count")) throw ConfigError("scenario.active.count: required");
      b.count = get_unsigned<std::uint32_t>(a["count"], "scenario.active.count");
      if (a.contains("activation_slot"))
        b.activation_slot = get_unsigned<std::uint64_t>(a["activation_slot"], "scenario.active.activation_slot");
      s.active = b;
    }
  }
}

inline std::string format_axis_value(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline void apply_axis(ScenarioConfig& s, SweepAxis axis, double v) {
  const std::string key = std::string(name_of(kAxes, axis));
  auto as_u32 = [&] {
    if (v < 0 || v != std::floor(v) || v > std::numeric_limits<std::uint32_t>::max())
      throw ConfigError("sweep.values: " + key + " needs non-negative integers");
    return static_cast<std::uint32_t>(v);
  };
  switch (axis) {
    case SweepAxis::NNodes: s.n_nodes = as_u32(); break;
    case SweepAxis::ActiveNodes: {
      EventBurst b;
      if (const auto* cur = std::get_if<EventBurst>(&s.active)) b = *cur;
      b.count = as_u32();
      s.active = b;
      break;
    }
    case SweepAxis::TCw: s.policy_params.t_cw = as_u32(); break;
    case SweepAxis::HalvingProbF: s.policy_params.halving_prob_f = v; break;
    case SweepAxis::Alpha: s.policy_params.alpha = v; break;
    case SweepAxis::CwMin: s.policy_params.cw_min = as_u32(); break;
    case SweepAxis::RetryLimit: s.policy_params.retry_limit = as_u32(); break;
    case SweepAxis::PayloadBits: s.phy.payload_bits = v; break;
  }
}

inline json phy_to_json(const PhyParams& p, Profile profile) {
  json j;
  j["profile"] = name_of(kProfiles, profile);
  j["sifs_us"] = p.sifs_us;
  j["difs_us"] = p.difs_us;
  j["slot_us"] = p.slot_us;
  j["phys_header_bits"] = p.phys_header_bits;
  j["mac_header_bits"] = p.mac_header_bits;
  j["udp_ip_header_bits"] = p.udp_ip_header_bits;
  j["ack_bits"] = p.ack_bits;
  j["rts_bits"] = p.rts_bits;
  j["cts_bits"] = p.cts_bits;
  j["data_rate_bps"] = p.data_rate_bps;
  j["control_rate_bps"] = p.control_rate_bps;
  j["prop_delay_us"] = p.prop_delay_us;
  j["payload_bits"] = p.payload_bits;
  if (p.ack_timeout_us) j["ack_timeout_us"] = *p.ack_timeout_us;
  if (p.cts_timeout_us) j["cts_timeout_us"] = *p.cts_timeout_us;
  j["idle_slot"] = name_of(kIdleBases, p.idle_slot_basis);
  return j;
}

inline json policy_to_json(PolicyKind kind, const PolicyParams& p) {
  json j;
  j["name"] = to_string(kind);
  j["cw_min"] = p.cw_min;
  j["cw_max"] = p.cw_max;
  j["backoff_order_m"] = p.backoff_order_m;
  j["retry_limit"] = p.retry_limit;
  j["sigma"] = p.sigma;
  j["t_cw"] = p.t_cw;
  j["cw_th"] = p.cw_th ? json(*p.cw_th) : json(nullptr);
  j["alpha"] = p.alpha;
  j["halving_prob_f"] = p.halving_prob_f;
  j["growth_base"] = name_of(kGrowthBases, p.growth_base);
  j["avg_update"] = name_of(kAvgUpdates, p.avg_update);
  return j;
}

}  // namespace detail

inline std::string_view to_string(Command c) { return detail::name_of(detail::kCommands, c); }
inline std::string_view to_string(SweepAxis a) { return detail::name_of(detail::kAxes, a); }
inline std::string_view to_string(OutputFormat f) { return detail::name_of(detail::kFormats, f); }

inline Command parse_command(std::string_view s) {
  return detail::parse_enum(detail::kCommands, nlohmann::json(std::string(s)), "command");
}
inline Profile parse_profile(std::string_view s) {
  return detail::parse_enum(detail::kProfiles, nlohmann::json(std::string(s)), "profile");
}
inline OutputFormat parse_format(std::string_view s) {
  return detail::parse_enum(detail::kFormats, nlohmann::json(std::string(s)), "format");
}

/// Expands base + sweep into the scenario list: series-major, then values, then seeds.
inline std::vector<ScenarioConfig> expand_scenarios(const RunManifest& m,
                                                    std::vector<ScenarioSlot>* slots = nullptr) {
  std::vector<ScenarioConfig> out;
  if (slots) slots->clear();
  if (!m.sweep) {
    ScenarioConfig s = m.base;
    if (s.id.empty()) s.id = std::string(to_string(s.policy)) + "/n_nodes=" + std::to_string(s.n_nodes);
    validate(s);
    out.push_back(s);
    if (slots) slots->push_back({});
    return out;
  }
  const SweepSpec& sw = *m.sweep;
  const std::vector<std::uint64_t> seeds =
      sw.seeds.empty() ? std::vector<std::uint64_t>{m.base.seed} : sw.seeds;
  for (std::size_t si = 0; si < sw.series.size(); ++si) {
    for (std::size_t vi = 0; vi < sw.values.size(); ++vi) {
      for (std::size_t ki = 0; ki < seeds.size(); ++ki) {
        ScenarioConfig s = m.base;
        s.policy = sw.series[si].policy;
        s.policy_params = sw.series[si].params;
        detail::apply_axis(s, sw.axis, sw.values[vi]);
        s.seed = seeds[ki];
        s.id = sw.series[si].label + "/" + std::string(to_string(sw.axis)) + "=" +
               detail::format_axis_value(sw.values[vi]) + "/seed=" + std::to_string(seeds[ki]);
        validate(s);
        out.push_back(std::move(s));
        if (slots) slots->push_back({si, vi, ki});
      }
    }
  }
  return out;
}

inline RunManifest parse_config_document(const nlohmann::json& doc) {
  using detail::json;
  detail::reject_unknown(doc, "config", {"command", "phy", "policy", "scenario", "sweep", "output"});
  RunManifest m;
  m.base.phy = make_profile(m.profile);
  if (doc.contains("command"))
    m.command = detail::parse_enum(detail::kCommands, doc["command"], "command");
  if (doc.contains("phy")) detail::apply_phy(doc["phy"], m.base.phy, m.profile);
  if (doc.contains("policy"))
    detail::apply_policy(doc["policy"], "policy", m.base.policy, m.base.policy_params);
  if (doc.contains("scenario")) detail::apply_scenario(doc["scenario"], m.base);

  if (doc.contains("sweep")) {
    const json& j = doc["sweep"];
    detail::reject_unknown(j, "sweep", {"axis", "values", "series", "seeds"});
    SweepSpec sw;
    if (j.contains("axis")) sw.axis = detail::parse_enum(detail::kAxes, j["axis"], "sweep.axis");
    if (!j.contains("values") || !j["values"].is_array() || j["values"].empty())
      throw ConfigError("sweep.values: expected non-empty array of numbers");
    for (const auto& v : j["values"]) sw.values.push_back(detail::get_number(v, "sweep.values[]"));
    if (j.contains("seeds")) {
      if (!j["seeds"].is_array()) throw ConfigError("sweep.seeds: expected array of integers");
      for (const auto& v : j["seeds"])
        sw.seeds.push_back(detail::get_unsigned<std::uint64_t>(v, "sweep.seeds[]"));
    }
    if (j.contains("series")) {
      if (!j["series"].is_array()) throw ConfigError("sweep.series: expected array");
      std::set<std::string> seen;
      for (std::size_t i = 0; i < j["series"].size(); ++i) {
        const json& sj = j["series"][i];
        const std::string where = "sweep.series[" + std::to_string(i) + "]";
        detail::reject_unknown(sj, where, {"label", "policy"});
        SeriesSpec spec{"", m.base.policy, m.base.policy_params};
        if (sj.contains("policy")) detail::apply_policy(sj["policy"], where + ".policy", spec.policy, spec.params);
        spec.label = sj.contains("label") ? detail::get_string(sj["label"], where + ".label")
                                          : std::string(to_string(spec.policy));
        if (spec.label.empty()) throw ConfigError(where + ".label: must be non-empty");
        if (!seen.insert(spec.label).second) throw ConfigError(where + ".label: duplicate '" + spec.label + "'");
        sw.series.push_back(std::move(spec));
      }
    }
    if (sw.series.empty())
      throw ConfigError("sweep.series: at least one labelled series is required");
    m.sweep = std::move(sw);
  }

  if (doc.contains("output")) {
    const json& j = doc["output"];
    detail::reject_unknown(j, "output", {"path", "format", "metrics", "source"});
    if (j.contains("path")) m.output.path = detail::get_string(j["path"], "output.path");
    if (j.contains("format")) m.output.format = detail::parse_enum(detail::kFormats, j["format"], "output.format");
    if (j.contains("source")) m.output.source = detail::parse_enum(detail::kSources, j["source"], "output.source");
    if (j.contains("metrics")) {
      if (!j["metrics"].is_array() || j["metrics"].empty())
        throw ConfigError("output.metrics: expected non-empty array of strings");
      m.output.metrics.clear();
      for (const auto& v : j["metrics"]) m.output.metrics.push_back(detail::get_string(v, "output.metrics[]"));
    }
  }
  static const std::set<std::string> kMetricNames{"nst", "cad", "pdrop", "s", "p", "tau"};
  for (const auto& name : m.output.metrics)
    if (!kMetricNames.count(name))
      throw ConfigError("output.metrics: unknown metric '" + name + "' (nst, cad, pdrop, s, p, tau)");

  m.scenarios = expand_scenarios(m);
  return m;
}

inline RunManifest parse_config(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  return parse_config_document(doc);
}

inline RunManifest load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

/// Fully explicit document; parse_config_document(serialize(m)) == m.
inline nlohmann::json serialize(const RunManifest& m) {
  using detail::json;
  json doc;
  doc["command"] = to_string(m.command);
  doc["phy"] = detail::phy_to_json(m.base.phy, m.profile);
  doc["policy"] = detail::policy_to_json(m.base.policy, m.base.policy_params);
  json s;
  if (!m.base.id.empty()) s["id"] = m.base.id;
  s["n_nodes"] = m.base.n_nodes;
  if (const auto* b = std::get_if<EventBurst>(&m.base.active)) {
    s["active"] = {{"count", b->count}, {"activation_slot", b->activation_slot}};
  } else {
    s["active"] = "all";
  }
  s["mode"] = to_string(m.base.mode);
  s["seed"] = m.base.seed;
  if (const auto* sb = std::get_if<SlotBudget>(&m.base.horizon)) {
    s["horizon_slots"] = sb->slots;
  } else {
    s["horizon_us"] = std::get<TimeBudget>(m.base.horizon).us;
  }
  s["warmup_slots"] = m.base.warmup_slots;
  doc["scenario"] = s;
  if (m.sweep) {
    json sw;
    sw["axis"] = to_string(m.sweep->axis);
    sw["values"] = m.sweep->values;
    if (!m.sweep->seeds.empty()) sw["seeds"] = m.sweep->seeds;
    sw["series"] = json::array();
    for (const auto& spec : m.sweep->series)
      sw["series"].push_back({{"label", spec.label}, {"policy", detail::policy_to_json(spec.policy, spec.params)}});
    doc["sweep"] = sw;
  }
  json out;
  if (!m.output.path.empty()) out["path"] = m.output.path;
  out["format"] = to_string(m.output.format);
  out["metrics"] = m.output.metrics;
  out["source"] = detail::name_of(detail::kSources, m.output.source);
  doc["output"] = out;
  return doc;
}

/// Re-resolves the PHY rate for a different profile and re-expands.
inline void override_profile(RunManifest& m, Profile profile) {
  m.profile = profile;
  m.base.phy.data_rate_bps = make_profile(profile).data_rate_bps;
  m.scenarios = expand_scenarios(m);
}

inline void override_seed(RunManifest& m, std::uint64_t seed) {
  m.base.seed = seed;
  if (m.sweep) m.sweep->seeds.clear();
  m.scenarios = expand_scenarios(m);
}

}  // namespace arbsim
