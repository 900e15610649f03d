#pragma once

// YAML configuration: strict parsing into ScenarioConfig and the per-command
// sections, dotted-path overrides, built-in presets, and a canonical JSON
// rendering used for hashing and for the resolved-config dump.
//
// Requires linking yaml-cpp.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "mimasim/engine.hpp"

namespace mimasim::config {

struct Range {
  int from = 0;
  int to = 0;
};

struct AnalyzeConfig {
  int formula_instances = 200;
  int formula_max_sus = 4;
  int formula_max_channels = 4;
  Range theorem1_sus{2, 6};
  Range theorem1_channels{1, 6};
  double grid_step = 1e-3;
  Range theorem2_sus{2, 8};
  Range theorem2_channels{2, 8};
  Range appendix_sus{2, 8};
  Range appendix_channels{2, 8};
  double fd_step = 1e-6;
  double fd_tolerance = 1e-4;
};

struct SenseCurvesConfig {
  std::vector<double> tnr_db;
  std::vector<int> k_values{1, 2, 5, 10};
  std::int64_t trials = 10'000;
  EnergyDetector detector;
};

struct Document {
  ScenarioConfig scenario;
  std::optional<SweepSpec> sweep;
  AnalyzeConfig analyze;
  SenseCurvesConfig sense_curves;
};

// ---------------------------------------------------------------------------
// Formatting helpers
// ---------------------------------------------------------------------------

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace detail {

inline std::string figure_preset(double lambda, int td_min, int td_max) {
  std::ostringstream os;
  os << "channels: 20\n"
        "mac_algorithm: csma\n"
        "traffic:\n"
        "  arrivals: poisson\n"
        "  lambda: " << format_number(lambda) << "\n"
        "  td_min: " << td_min << "\n"
        "  td_max: " << td_max << "\n"
        "  sensing_slots: 1\n"
        "horizon: 100000\n"
        "replications: 20\n"
        "seed: 1\n"
        "sweep:\n"
        "  parameter: num_sus\n"
        "  range: {from: 2, to: 40, step: 1}\n"
        "  algorithms: [csma_f, csma_p, csma]\n";
  return os.str();
}

}  // namespace detail

inline const std::map<std::string, std::string>& presets() {
  static const std::map<std::string, std::string> p = {
      {"fig6a", detail::figure_preset(70, 50, 50)},
      {"fig6b", detail::figure_preset(50, 50, 50)},
      {"fig6c", detail::figure_preset(20, 50, 50)},
      {"fig7a", detail::figure_preset(70, 30, 70)},
      {"fig7b", detail::figure_preset(50, 30, 70)},
      {"fig7c", detail::figure_preset(20, 30, 70)},
      {"single_su",
       "channels: 1\nnum_sus: 1\nmac_algorithm: csma\n"
       "traffic: {arrivals: saturated, td_min: 50, td_max: 50, sensing_slots: 1}\n"
       "horizon: 1000000\nreplications: 1\nseed: 1\n"},
      {"sense",
       "sense_curves:\n  tnr_db: {from: 0, to: 45, step: 0.5}\n  k_values: [1, 2, 5, 10]\n  trials: 10000\n"},
      {"analyze",
       "analyze:\n  theorem1: {sus: [2, 6], channels: [1, 6], grid_step: 0.001}\n"
       "  theorem2: {sus: [2, 8], channels: [2, 8]}\n"
       "  appendix: {sus: [2, 8], channels: [2, 8]}\n"},
  };
  return p;
}

// ---------------------------------------------------------------------------
// YAML tree handling
// ---------------------------------------------------------------------------

inline std::string where(const YAML::Node& n) {
  const auto m = n.Mark();
  if (m.is_null()) return "(override) ";
  return "line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1) + ": ";
}

inline YAML::Node load_text(const std::string& text, const std::string& source) {
  try {
    YAML::Node n = YAML::Load(text);
    return n.IsNull() ? YAML::Node(YAML::NodeType::Map) : n;
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ": line " + std::to_string(e.mark.line + 1) + ", column " +
                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
}

inline YAML::Node load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_text(ss.str(), path);
}

inline YAML::Node load_preset(const std::string& name) {
  auto it = presets().find(name);
  if (it == presets().end()) {
    std::string names;
    for (const auto& [k, v] : presets()) names += (names.empty() ? "" : ", ") + k;
    throw ConfigError("unknown preset '" + name + "' (known: " + names + ")");
  }
  return load_text(it->second, "preset " + name);
}

// Deep-merges `overlay` into `base`; maps merge key by key, anything else replaces.
inline void merge(YAML::Node base, const YAML::Node& overlay) {
  if (!overlay.IsMap()) return;
  for (const auto& kv : overlay) {
    const auto key = kv.first.as<std::string>();
    YAML::Node existing = base[key];
    if (existing.IsMap() && kv.second.IsMap()) merge(existing, kv.second);
    else base[key] = YAML::Clone(kv.second);
  }
}

// Deep copy without source positions, so errors point at the override.
inline YAML::Node unmarked(const YAML::Node& n) {
  if (n.IsScalar()) return YAML::Node(n.Scalar());
  if (n.IsSequence()) {
    YAML::Node out(YAML::NodeType::Sequence);
    for (const auto& v : n) out.push_back(unmarked(v));
    return out;
  }
  if (n.IsMap()) {
    YAML::Node out(YAML::NodeType::Map);
    for (const auto& kv : n) out[kv.first.Scalar()] = unmarked(kv.second);
    return out;
  }
  return YAML::Node();
}

// Applies KEY=VALUE where KEY is a dotted path and VALUE is parsed as YAML.
inline void apply_override(YAML::Node root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' is not KEY=VALUE");
  const std::string path = assignment.substr(0, eq);
  YAML::Node value;
  try {
    value = unmarked(YAML::Load(assignment.substr(eq + 1)));
  } catch (const YAML::Exception& e) {
    throw ConfigError("override '" + assignment + "': " + e.msg);
  }
  std::vector<std::string> parts;
  std::stringstream ss(path);
  for (std::string p; std::getline(ss, p, '.');) {
    if (p.empty()) throw ConfigError("override '" + assignment + "' has an empty path segment");
    parts.push_back(p);
  }
  YAML::Node cur = root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    YAML::Node next = cur[parts[i]];
    if (!next.IsDefined() || next.IsNull()) {
      cur[parts[i]] = YAML::Node(YAML::NodeType::Map);
      next.reset(cur[parts[i]]);
    } else if (!next.IsMap()) {
      throw ConfigError("override '" + assignment + "': '" + parts[i] + "' is not a section");
    }
    cur.reset(next);
  }
  cur[parts.back()] = value;
}

// ---------------------------------------------------------------------------
// Strict parsing
// ---------------------------------------------------------------------------

namespace detail {

inline void require_map(const YAML::Node& n, const std::string& what) {
  if (!n.IsMap()) throw ConfigError(where(n) + what + " must be a mapping");
}

inline void check_keys(const YAML::Node& n, const std::set<std::string>& allowed, const std::string& section) {
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) {
      std::string known;
      for (const auto& a : allowed) known += (known.empty() ? "" : ", ") + a;
      throw ConfigError(where(kv.first) + "unknown key '" + key + "' in " + section + " (known: " + known + ")");
    }
  }
}

template <typename T>
T as(const YAML::Node& n, const std::string& key, const char* expected) {
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(where(n) + key + " must be " + expected);
  }
}

template <typename T>
void read(const YAML::Node& map, const char* key, T& out, const char* expected) {
  if (const auto n = map[key]) out = as<T>(n, key, expected);
}

inline Range read_range(const YAML::Node& n, const std::string& key) {
  if (!n.IsSequence() || n.size() != 2) throw ConfigError(where(n) + key + " must be [from, to]");
  Range r{as<int>(n[0], key, "an integer"), as<int>(n[1], key, "an integer")};
  if (r.from > r.to) throw ConfigError(where(n) + key + " range is empty");
  return r;
}

// A list of values, or {from, to, step} expanded inclusively.
inline std::vector<std::string> read_values(const YAML::Node& n, const std::string& key) {
  std::vector<std::string> out;
  if (n.IsSequence()) {
    for (const auto& v : n) {
      if (!v.IsScalar()) throw ConfigError(where(v) + key + " entries must be scalars");
      out.push_back(v.Scalar());
    }
    return out;
  }
  require_map(n, key);
  check_keys(n, {"from", "to", "step"}, key);
  if (!n["from"] || !n["to"]) throw ConfigError(where(n) + key + " range needs from and to");
  const double from = as<double>(n["from"], key + ".from", "a number");
  const double to = as<double>(n["to"], key + ".to", "a number");
  double step = 1.0;
  read(n, "step", step, "a number");
  if (!(step > 0.0)) throw ConfigError(where(n) + key + ".step must be > 0");
  const auto count = static_cast<std::int64_t>(std::floor((to - from) / step + 1e-9)) + 1;
  if (count < 1) throw ConfigError(where(n) + key + " range is empty");
  if (count > 1'000'000) throw ConfigError(where(n) + key + " range is too long");
  for (std::int64_t i = 0; i < count; ++i) out.push_back(format_number(from + static_cast<double>(i) * step));
  return out;
}

inline ArrivalMode parse_arrivals(const YAML::Node& n) {
  const auto s = as<std::string>(n, "arrivals", "a string");
  if (s == "poisson") return ArrivalMode::Poisson;
  if (s == "saturated") return ArrivalMode::Saturated;
  if (s == "none") return ArrivalMode::None;
  throw ConfigError(where(n) + "arrivals must be poisson, saturated or none");
}

inline DeferPolicy parse_defer(const YAML::Node& n) {
  const auto s = as<std::string>(n, "defer_policy", "a string");
  if (s == "one_slot") return DeferPolicy::OneSlot;
  if (s == "backoff") return DeferPolicy::Backoff;
  throw ConfigError(where(n) + "defer_policy must be one_slot or backoff");
}

inline SuInformationMode parse_su_info(const YAML::Node& n) {
  const auto s = as<std::string>(n, "su_info", "a string");
  if (s == "full") return SuInformationMode::Full;
  if (s == "partial") return SuInformationMode::Partial;
  if (s == "none") return SuInformationMode::None;
  throw ConfigError(where(n) + "su_info must be full, partial or none");
}

inline ContentionCount parse_contention(const YAML::Node& n) {
  const auto s = as<std::string>(n, "contention_count", "a string");
  if (s == "deciding") return ContentionCount::Deciding;
  if (s == "access_states") return ContentionCount::AccessStates;
  throw ConfigError(where(n) + "contention_count must be deciding or access_states");
}

inline const char* to_string(ContentionCount c) {
  return c == ContentionCount::Deciding ? "deciding" : "access_states";
}

inline void parse_traffic(const YAML::Node& n, TrafficModel& t, DeferPolicy& defer) {
  require_map(n, "traffic");
  check_keys(n, {"arrivals", "lambda", "td_min", "td_max", "backoff_mean", "sensing_slots", "transition_slots",
                 "defer_policy"},
             "traffic");
  if (n["arrivals"]) t.arrivals = parse_arrivals(n["arrivals"]);
  read(n, "lambda", t.mean_arrival_interval, "a number");
  read(n, "td_min", t.packet_size_min, "an integer");
  read(n, "td_max", t.packet_size_max, "an integer");
  read(n, "backoff_mean", t.backoff_mean, "a number");
  read(n, "sensing_slots", t.sensing_slots, "an integer");
  read(n, "transition_slots", t.transition_slots, "an integer");
  if (n["defer_policy"]) defer = parse_defer(n["defer_policy"]);
}

inline void parse_detector(const YAML::Node& n, EnergyDetector& e, const std::string& section) {
  check_keys(n, {"model", "snr_db", "per_channel_snr_db", "threshold_tnr_db", "averaging_depth",
                 "samples_per_channel", "noise_power", "sidelobe_rel_db", "iq_image_rel_db"},
             section);
  read(n, "snr_db", e.signal_snr_db, "a number");
  read(n, "threshold_tnr_db", e.threshold_tnr_db, "a number");
  read(n, "averaging_depth", e.averaging_depth, "an integer");
  read(n, "samples_per_channel", e.samples_per_channel, "an integer");
  read(n, "noise_power", e.noise_power, "a number");
  read(n, "sidelobe_rel_db", e.sidelobe_rel_db, "a number");
  read(n, "iq_image_rel_db", e.iq_image_rel_db, "a number");
  if (const auto pc = n["per_channel_snr_db"]) {
    require_map(pc, "per_channel_snr_db");
    for (const auto& kv : pc)
      e.per_channel_snr_db[as<int>(kv.first, "channel", "an integer")] = as<double>(kv.second, "snr_db", "a number");
  }
}

inline SensingModel parse_sensing(const YAML::Node& n) {
  require_map(n, "sensing");
  std::string model = "perfect";
  read(n, "model", model, "a string");
  if (model == "perfect") {
    check_keys(n, {"model"}, "sensing (perfect)");
    return PerfectSensing{};
  }
  if (model == "bernoulli") {
    check_keys(n, {"model", "p_false_alarm", "p_miss", "per_channel"}, "sensing (bernoulli)");
    BernoulliSensing b;
    read(n, "p_false_alarm", b.p_false_alarm, "a number");
    read(n, "p_miss", b.p_miss, "a number");
    if (const auto pc = n["per_channel"]) {
      require_map(pc, "per_channel");
      for (const auto& kv : pc) {
        require_map(kv.second, "per_channel entry");
        check_keys(kv.second, {"p_false_alarm", "p_miss"}, "per_channel entry");
        BernoulliSensing::Override o{b.p_false_alarm, b.p_miss};
        read(kv.second, "p_false_alarm", o.p_false_alarm, "a number");
        read(kv.second, "p_miss", o.p_miss, "a number");
        b.per_channel[as<int>(kv.first, "channel", "an integer")] = o;
      }
    }
    return b;
  }
  if (model == "energy_detector") {
    EnergyDetector e;
    parse_detector(n, e, "sensing (energy_detector)");
    return e;
  }
  throw ConfigError(where(n["model"]) + "sensing.model must be perfect, bernoulli or energy_detector");
}

inline ChannelSet parse_channels(const YAML::Node& n) {
  if (n.IsScalar()) return ChannelSet(as<int>(n, "channels", "an integer"));
  require_map(n, "channels");
  check_keys(n, {"total", "available"}, "channels");
  if (!n["total"]) throw ConfigError(where(n) + "channels needs total");
  const int total = as<int>(n["total"], "channels.total", "an integer");
  if (!n["available"]) return ChannelSet(total);
  return ChannelSet(total, as<std::vector<int>>(n["available"], "channels.available", "a list of integers"));
}

inline void parse_analyze(const YAML::Node& n, AnalyzeConfig& a) {
  require_map(n, "analyze");
  check_keys(n, {"formula", "theorem1", "theorem2", "appendix"}, "analyze");
  if (const auto f = n["formula"]) {
    require_map(f, "analyze.formula");
    check_keys(f, {"instances", "max_sus", "max_channels"}, "analyze.formula");
    read(f, "instances", a.formula_instances, "an integer");
    read(f, "max_sus", a.formula_max_sus, "an integer");
    read(f, "max_channels", a.formula_max_channels, "an integer");
  }
  if (const auto t = n["theorem1"]) {
    require_map(t, "analyze.theorem1");
    check_keys(t, {"sus", "channels", "grid_step"}, "analyze.theorem1");
    if (t["sus"]) a.theorem1_sus = read_range(t["sus"], "theorem1.sus");
    if (t["channels"]) a.theorem1_channels = read_range(t["channels"], "theorem1.channels");
    read(t, "grid_step", a.grid_step, "a number");
  }
  if (const auto t = n["theorem2"]) {
    require_map(t, "analyze.theorem2");
    check_keys(t, {"sus", "channels"}, "analyze.theorem2");
    if (t["sus"]) a.theorem2_sus = read_range(t["sus"], "theorem2.sus");
    if (t["channels"]) a.theorem2_channels = read_range(t["channels"], "theorem2.channels");
  }
  if (const auto t = n["appendix"]) {
    require_map(t, "analyze.appendix");
    check_keys(t, {"sus", "channels", "step", "tolerance"}, "analyze.appendix");
    if (t["sus"]) a.appendix_sus = read_range(t["sus"], "appendix.sus");
    if (t["channels"]) a.appendix_channels = read_range(t["channels"], "appendix.channels");
    read(t, "step", a.fd_step, "a number");
    read(t, "tolerance", a.fd_tolerance, "a number");
  }
  if (a.formula_instances < 0 || a.formula_max_sus < 1 || a.formula_max_channels < 1)
    throw ConfigError(where(n) + "analyze.formula needs instances >= 0 and positive dimensions");
  if (!(a.grid_step > 0.0)) throw ConfigError(where(n) + "analyze.theorem1.grid_step must be > 0");
  if (!(a.fd_step > 0.0) || !(a.fd_tolerance > 0.0))
    throw ConfigError(where(n) + "analyze.appendix step and tolerance must be > 0");
}

inline void parse_sense_curves(const YAML::Node& n, SenseCurvesConfig& s) {
  require_map(n, "sense_curves");
  check_keys(n, {"tnr_db", "k_values", "trials", "detector"}, "sense_curves");
  if (const auto t = n["tnr_db"]) {
    s.tnr_db.clear();
    for (const auto& v : read_values(t, "tnr_db")) s.tnr_db.push_back(std::stod(v));
    if (s.tnr_db.empty()) throw ConfigError(where(t) + "tnr_db must not be empty");
  }
  if (const auto k = n["k_values"]) {
    s.k_values = as<std::vector<int>>(k, "k_values", "a list of integers");
    if (s.k_values.empty()) throw ConfigError(where(k) + "k_values must not be empty");
  }
  read(n, "trials", s.trials, "an integer");
  if (s.trials < 1) throw ConfigError(where(n) + "sense_curves.trials must be >= 1");
  if (const auto d = n["detector"]) {
    require_map(d, "sense_curves.detector");
    parse_detector(d, s.detector, "sense_curves.detector");
  }
}

}  // namespace detail

inline Document parse(const YAML::Node& root) {
  using namespace detail;
  require_map(root, "config");
  check_keys(root,
             {"channels", "num_sus", "mac_algorithm", "su_info", "contention_count", "traffic", "sensing", "horizon",
              "warmup", "seed", "replications", "rates", "pu_schedule", "su_activity", "sweep", "analyze",
              "sense_curves"},
             "config");
  Document doc;
  auto& s = doc.scenario;
  if (root["channels"]) s.channels = parse_channels(root["channels"]);
  read(root, "num_sus", s.num_sus, "an integer");
  if (const auto a = root["mac_algorithm"]) {
    try {
      set_algorithm(s, parse_mac_algorithm(as<std::string>(a, "mac_algorithm", "a string")));
    } catch (const ConfigError& e) {
      throw ConfigError(where(a) + e.what());
    }
  }
  if (root["su_info"]) s.su_info = parse_su_info(root["su_info"]);
  if (root["contention_count"]) s.contention_count = parse_contention(root["contention_count"]);
  if (root["traffic"]) parse_traffic(root["traffic"], s.traffic, s.defer_policy);
  if (root["sensing"]) s.sensing = parse_sensing(root["sensing"]);
  read(root, "horizon", s.horizon, "an integer");
  if (const auto w = root["warmup"]) s.warmup = as<std::int64_t>(w, "warmup", "an integer");
  read(root, "seed", s.seed, "an unsigned 64-bit integer");
  read(root, "replications", s.replications, "an integer");
  if (const auto r = root["rates"]) s.rates = as<std::vector<double>>(r, "rates", "a list of numbers");
  if (const auto pu = root["pu_schedule"]) {
    if (!pu.IsSequence()) throw ConfigError(where(pu) + "pu_schedule must be a list");
    for (const auto& e : pu) {
      require_map(e, "pu_schedule entry");
      check_keys(e, {"start", "end", "busy"}, "pu_schedule entry");
      PuInterval iv;
      read(e, "start", iv.start, "an integer");
      read(e, "end", iv.end, "an integer");
      read(e, "busy", iv.busy, "a list of integers");
      s.pu_schedule.push_back(iv);
    }
  }
  if (const auto act = root["su_activity"]) {
    if (!act.IsSequence()) throw ConfigError(where(act) + "su_activity must be a list");
    for (const auto& e : act) {
      require_map(e, "su_activity entry");
      check_keys(e, {"su", "join", "leave"}, "su_activity entry");
      SuActivity a;
      read(e, "su", a.su, "an integer");
      read(e, "join", a.join, "an integer");
      if (e["leave"]) a.leave = as<std::int64_t>(e["leave"], "leave", "an integer");
      s.su_activity.push_back(a);
    }
  }
  if (const auto sw = root["sweep"]) {
    require_map(sw, "sweep");
    check_keys(sw, {"parameter", "values", "range", "algorithms"}, "sweep");
    SweepSpec spec;
    if (!sw["parameter"]) throw ConfigError(where(sw) + "sweep needs parameter");
    spec.parameter = as<std::string>(sw["parameter"], "sweep.parameter", "a string");
    const auto& known = sweep_parameters();
    if (std::find(known.begin(), known.end(), spec.parameter) == known.end())
      throw ConfigError(where(sw["parameter"]) + "unknown sweep parameter '" + spec.parameter + "'");
    if (sw["values"] && sw["range"]) throw ConfigError(where(sw) + "sweep takes values or range, not both");
    if (sw["values"]) spec.values = read_values(sw["values"], "sweep.values");
    if (sw["range"]) spec.values = read_values(sw["range"], "sweep.range");
    if (spec.values.empty()) throw ConfigError(where(sw) + "sweep needs at least one value");
    if (const auto al = sw["algorithms"]) {
      for (const auto& name : as<std::vector<std::string>>(al, "sweep.algorithms", "a list of names")) {
        try {
          spec.algorithms.push_back(parse_mac_algorithm(name));
        } catch (const ConfigError& e) {
          throw ConfigError(where(al) + e.what());
        }
      }
    }
    doc.sweep = spec;
  }
  if (root["analyze"]) parse_analyze(root["analyze"], doc.analyze);
  if (doc.sense_curves.tnr_db.empty())
    for (int i = 0; i <= 90; ++i) doc.sense_curves.tnr_db.push_back(0.5 * i);
  if (root["sense_curves"]) parse_sense_curves(root["sense_curves"], doc.sense_curves);
  return doc;
}

// Builds the effective tree: preset, then config file, then overrides.
inline YAML::Node resolve_tree(const std::optional<std::string>& preset, const std::optional<std::string>& path,
                               const std::vector<std::string>& overrides) {
  YAML::Node root(YAML::NodeType::Map);
  if (preset) merge(root, load_preset(*preset));
  if (path) {
    const YAML::Node file = load_file(*path);
    if (!file.IsMap()) throw ConfigError(*path + ": top level must be a mapping");
    if (!preset) root.reset(file);
    else merge(root, file);
  }
  for (const auto& o : overrides) apply_override(root, o);
  return root;
}

// ---------------------------------------------------------------------------
// Canonical rendering
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EnergyDetector& e) {
  nlohmann::json j = {{"snr_db", e.signal_snr_db},
                      {"threshold_tnr_db", e.threshold_tnr_db},
                      {"averaging_depth", e.averaging_depth},
                      {"samples_per_channel", e.samples_per_channel},
                      {"noise_power", e.noise_power},
                      {"sidelobe_rel_db", e.sidelobe_rel_db},
                      {"iq_image_rel_db", e.iq_image_rel_db}};
  nlohmann::json pc = nlohmann::json::object();
  for (const auto& [c, v] : e.per_channel_snr_db) pc[std::to_string(c)] = v;
  j["per_channel_snr_db"] = pc;
  return j;
}

inline nlohmann::json to_json(const ScenarioConfig& s) {
  nlohmann::json j;
  j["channels"] = {{"total", s.channels.total_channels()}, {"available", s.channels.available()}};
  j["num_sus"] = s.num_sus;
  j["mac_algorithm"] = to_string(s.mac_algorithm);
  j["su_info"] = to_string(s.su_info);
  j["contention_count"] = detail::to_string(s.contention_count);
  const auto& t = s.traffic;
  j["traffic"] = {{"arrivals", t.arrivals == ArrivalMode::Poisson     ? "poisson"
                               : t.arrivals == ArrivalMode::Saturated ? "saturated"
                                                                      : "none"},
                  {"lambda", t.mean_arrival_interval},
                  {"td_min", t.packet_size_min},
                  {"td_max", t.packet_size_max},
                  {"backoff_mean", t.backoff_mean},
                  {"sensing_slots", t.sensing_slots},
                  {"transition_slots", t.transition_slots},
                  {"defer_policy", s.defer_policy == DeferPolicy::OneSlot ? "one_slot" : "backoff"}};
  if (std::holds_alternative<PerfectSensing>(s.sensing)) {
    j["sensing"] = {{"model", "perfect"}};
  } else if (auto* b = std::get_if<BernoulliSensing>(&s.sensing)) {
    nlohmann::json pc = nlohmann::json::object();
    for (const auto& [c, o] : b->per_channel)
      pc[std::to_string(c)] = {{"p_false_alarm", o.p_false_alarm}, {"p_miss", o.p_miss}};
    j["sensing"] = {{"model", "bernoulli"},
                    {"p_false_alarm", b->p_false_alarm},
                    {"p_miss", b->p_miss},
                    {"per_channel", pc}};
  } else {
    j["sensing"] = to_json(std::get<EnergyDetector>(s.sensing));
    j["sensing"]["model"] = "energy_detector";
  }
  j["horizon"] = s.horizon;
  j["warmup"] = s.warmup_slots();
  j["seed"] = s.seed;
  j["replications"] = s.replications;
  j["rates"] = s.rates;
  j["pu_schedule"] = nlohmann::json::array();
  for (const auto& p : s.pu_schedule) j["pu_schedule"].push_back({{"start", p.start}, {"end", p.end}, {"busy", p.busy}});
  j["su_activity"] = nlohmann::json::array();
  for (const auto& a : s.su_activity) {
    nlohmann::json e = {{"su", a.su}, {"join", a.join}};
    if (a.leave) e["leave"] = *a.leave;
    j["su_activity"].push_back(e);
  }
  return j;
}

inline nlohmann::json to_json(const Document& d) {
  nlohmann::json j = to_json(d.scenario);
  if (d.sweep) {
    nlohmann::json algs = nlohmann::json::array();
    for (auto a : d.sweep->algorithms) algs.push_back(to_string(a));
    j["sweep"] = {{"parameter", d.sweep->parameter}, {"values", d.sweep->values}, {"algorithms", algs}};
  }
  const auto& a = d.analyze;
  auto range = [](Range r) { return nlohmann::json::array({r.from, r.to}); };
  j["analyze"] = {
      {"formula", {{"instances", a.formula_instances}, {"max_sus", a.formula_max_sus}, {"max_channels", a.formula_max_channels}}},
      {"theorem1", {{"sus", range(a.theorem1_sus)}, {"channels", range(a.theorem1_channels)}, {"grid_step", a.grid_step}}},
      {"theorem2", {{"sus", range(a.theorem2_sus)}, {"channels", range(a.theorem2_channels)}}},
      {"appendix",
       {{"sus", range(a.appendix_sus)}, {"channels", range(a.appendix_channels)}, {"step", a.fd_step}, {"tolerance", a.fd_tolerance}}}};
  j["sense_curves"] = {{"tnr_db", d.sense_curves.tnr_db},
                       {"k_values", d.sense_curves.k_values},
                       {"trials", d.sense_curves.trials},
                       {"detector", to_json(d.sense_curves.detector)}};
  return j;
}

inline std::string config_hash(const ScenarioConfig& s) { return hex64(fnv1a64(to_json(s).dump())); }

}  // namespace mimasim::config
