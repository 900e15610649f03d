#pragma once

// Slotted simulation of M SUs sharing N collision channels under one of the
// multichannel CSMA policies, plus the efficiency metrics, the collision-free
// upper bound, replication statistics and parameter sweeps.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <exception>
#include <set>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "mimasim/core.hpp"
#include "mimasim/mac.hpp"
#include "mimasim/sensing.hpp"

namespace mimasim {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PuInterval {
  std::int64_t start = 0;  // inclusive
  std::int64_t end = 0;    // exclusive
  std::vector<int> busy;   // raw channels
};

struct SuActivity {
  int su = 1;
  std::int64_t join = 0;
  std::optional<std::int64_t> leave;  // takes effect once the SU is back in Monitoring
};

// Which SUs make up M_k at a slot boundary.
enum class ContentionCount {
  AccessStates,  // every SU in Initial or ReRendezvous, whatever its phase
  Deciding,      // only SUs taking an access decision in this slot
};

struct ScenarioConfig {
  ChannelSet channels{20};
  int num_sus = 20;
  MacAlgorithm mac_algorithm = MacAlgorithm::Csma;
  SuInformationMode su_info = SuInformationMode::None;
  TrafficModel traffic;
  DeferPolicy defer_policy = DeferPolicy::OneSlot;
  ContentionCount contention_count = ContentionCount::Deciding;
  SensingModel sensing = PerfectSensing{};
  std::int64_t horizon = 100'000;
  std::optional<std::int64_t> warmup;  // default 5 (T_s + E[T_d])
  std::uint64_t seed = 1;
  int replications = 20;
  std::vector<double> rates;  // R_m; empty means all 1
  std::vector<PuInterval> pu_schedule;
  std::vector<SuActivity> su_activity;

  int sensing_window() const { return traffic.sensing_slots + traffic.transition_slots; }

  std::int64_t warmup_slots() const {
    if (warmup) return *warmup;
    return static_cast<std::int64_t>(
        std::ceil(5.0 * (sensing_window() + traffic.mean_packet_size())));
  }

  double rate(int su) const {
    return rates.empty() ? 1.0 : rates[static_cast<std::size_t>(su - 1)];
  }

  void validate() const {
    if (num_sus < 1) throw ConfigError("num_sus must be >= 1");
    if (required_information(mac_algorithm) != su_info)
      throw ConfigError(std::string("mac_algorithm ") + to_string(mac_algorithm) + " requires su_info " +
                        to_string(required_information(mac_algorithm)) + ", got " + to_string(su_info));
    traffic.validate();
    if (traffic.sensing_slots < 1) throw ConfigError("sensing_slots must be >= 1 in simulation");
    mimasim::validate(sensing);
    if (replications < 1) throw ConfigError("replications must be >= 1");
    if (static_cast<double>(horizon) < 10.0 * traffic.mean_packet_size())
      throw ConfigError("horizon must be at least 10 mean packet sizes");
    if (warmup_slots() < 0 || warmup_slots() >= horizon)
      throw ConfigError("warmup must lie in [0, horizon)");
    if (!rates.empty()) {
      if (static_cast<int>(rates.size()) != num_sus) throw ConfigError("rates must list one entry per SU");
      double sum = 0.0;
      for (double r : rates) {
        if (!(r >= 0.0)) throw ConfigError("rates must be nonnegative");
        sum += r;
      }
      if (!(sum > 0.0)) throw ConfigError("rates must not all be zero");
    }
    for (const auto& pu : pu_schedule) {
      if (pu.end < pu.start) throw ConfigError("pu_schedule interval ends before it starts");
      for (int c : pu.busy)
        if (c < 1 || c > channels.total_channels()) throw ConfigError("pu_schedule channel out of range");
    }
    for (const auto& a : su_activity) {
      if (a.su < 1 || a.su > num_sus) throw ConfigError("su_activity names an unknown SU");
      if (a.join < 0 || (a.leave && *a.leave < a.join)) throw ConfigError("su_activity window invalid");
    }
  }
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// Where one SU spent its slots over the whole horizon.
struct SlotAccount {
  std::int64_t idle = 0;  // inactive or monitoring
  std::int64_t sensing = 0;
  std::int64_t backoff = 0;
  std::int64_t defer = 0;
  std::int64_t transmitting = 0;

  std::int64_t total() const { return idle + sensing + backoff + defer + transmitting; }
};

struct ReplicationResult {
  int replication = 0;
  std::int64_t measured_slots = 0;
  std::vector<double> delivered_slots;  // successful payload slots per SU, measured window
  std::vector<SlotAccount> accounts;    // per SU, full horizon
  double efficiency = 0.0;
  std::int64_t collisions = 0;          // channel-slots with two or more occupants
  std::int64_t idle_channel_slots = 0;  // available channel-slots with no occupant
  std::int64_t false_alarms = 0;
  std::int64_t miss_detections = 0;
  std::int64_t packets_delivered = 0;
  std::int64_t packets_lost = 0;
};

inline double compute_efficiency(const std::vector<double>& delivered_slots, const std::vector<double>& rates,
                                 std::int64_t horizon) {
  if (horizon <= 0) throw ConfigError("horizon must be positive");
  if (delivered_slots.size() != rates.size()) throw ConfigError("one rate per SU required");
  double payload = 0.0;
  double rate_sum = 0.0;
  for (std::size_t m = 0; m < rates.size(); ++m) {
    payload += rates[m] * delivered_slots[m];
    rate_sum += rates[m];
  }
  if (!(rate_sum > 0.0)) throw ConfigError("rate sum must be positive");
  return payload / (static_cast<double>(horizon) * rate_sum);
}

// Collision-free, backoff-free bound: min(1, N/M) E[T_d] / (T_s + E[T_d]).
inline double upper_bound(int sus, int channels, double sensing_slots, double mean_packet_slots) {
  if (sus < 1 || channels < 1) throw ConfigError("upper bound needs M, N >= 1");
  if (sensing_slots < 0.0 || !(mean_packet_slots > 0.0)) throw ConfigError("upper bound needs T_s >= 0, E[T_d] > 0");
  return std::min(1.0, static_cast<double>(channels) / sus) * mean_packet_slots /
         (sensing_slots + mean_packet_slots);
}

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;
  double se = 0.0;
  double ci95 = 0.0;  // Student-t half width
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  const auto n = xs.size();
  if (n == 0) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
  if (n < 2) return s;
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(ss / static_cast<double>(n - 1));
  s.se = s.stddev / std::sqrt(static_cast<double>(n));
  boost::math::students_t t(static_cast<double>(n - 1));
  s.ci95 = boost::math::quantile(boost::math::complement(t, 0.025)) * s.se;
  return s;
}

struct MetricsReport {
  int num_sus = 0;
  int num_channels = 0;
  std::int64_t measured_slots = 0;
  std::vector<double> delivered;    // D_m, rate weighted, mean over replications
  std::vector<double> per_su_rate;  // G_m
  double total_rate = 0.0;          // G
  Summary efficiency;
  double e_upper = 0.0;
  double collisions = 0.0;  // means over replications
  double idle_channel_slots = 0.0;
  double sensing_slots = 0.0;
  double backoff_slots = 0.0;
  double defer_slots = 0.0;
  double false_alarms = 0.0;
  double miss_detections = 0.0;
  std::vector<ReplicationResult> replications;
};

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct RunOptions {
  int jobs = 1;
  std::ostream* event_log = nullptr;  // replication 0 only
  // Called with every slot's resolved outcome (replication 0 only; slow).
  std::function<void(const SlotOutcome&)> slot_observer;
};

namespace detail {

struct SuStreams {
  std::optional<ArrivalProcess> arrivals;
  Rng sizes;
  Rng mac;
  Rng sensing;
};

inline void log_change(std::ostream* log, std::int64_t slot, const SuTransmitter& su, SuState before,
                       const std::string& detail = {}) {
  if (!log || su.state == before) return;
  *log << slot << ' ' << su.id << ' ' << to_string(before) << ' ' << to_string(su.state);
  if (!detail.empty()) *log << ' ' << detail;
  *log << '\n';
}

}  // namespace detail

// One replication. Slot k proceeds as: arrivals and scripted joins/leaves;
// monitoring SUs with a packet start sensing; SUs whose sensing window closed
// at k-1 take a policy decision from what they sensed; occupancy is resolved
// on the collision channel; timers advance. A packet hit by a collision in any
// of its slots is lost as a whole, but its transmitter keeps the channel for
// the full T_d since there is no slot-level feedback.
inline ReplicationResult run_replication(const ScenarioConfig& cfg, int replication,
                                         std::ostream* event_log = nullptr,
                                         const std::function<void(const SlotOutcome&)>& observer = {}) {
  const int M = cfg.num_sus;
  const int total = cfg.channels.total_channels();
  const auto& avail = cfg.channels.available();
  const int window = cfg.sensing_window();
  const std::int64_t warmup = cfg.warmup_slots();
  const MacParams mac_params{cfg.traffic.backoff_mean, cfg.defer_policy};
  const auto rep = static_cast<std::uint64_t>(replication);

  std::vector<SuTransmitter> sus(static_cast<std::size_t>(M));
  std::vector<detail::SuStreams> streams;
  streams.reserve(static_cast<std::size_t>(M));
  std::vector<const SuActivity*> activity(static_cast<std::size_t>(M), nullptr);
  for (const auto& a : cfg.su_activity) activity[static_cast<std::size_t>(a.su - 1)] = &a;
  for (int m = 1; m <= M; ++m) {
    auto& su = sus[static_cast<std::size_t>(m - 1)];
    su.id = m;
    su.rate_weight = cfg.rate(m);
    if (activity[static_cast<std::size_t>(m - 1)]) su.state = SuState::Inactive;
    const auto id = static_cast<std::uint64_t>(m);
    detail::SuStreams s{std::nullopt, make_rng(cfg.seed, rep, id, Stream::PacketSizes),
                        make_rng(cfg.seed, rep, id, Stream::Mac), make_rng(cfg.seed, rep, id, Stream::Sensing)};
    if (cfg.traffic.arrivals == ArrivalMode::Poisson)
      s.arrivals.emplace(cfg.traffic.mean_arrival_interval, make_rng(cfg.seed, rep, id, Stream::Arrivals));
    streams.push_back(std::move(s));
  }

  ReplicationResult res;
  res.replication = replication;
  res.measured_slots = cfg.horizon - warmup;
  res.delivered_slots.assign(static_cast<std::size_t>(M), 0.0);
  res.accounts.assign(static_cast<std::size_t>(M), {});

  const auto C = static_cast<std::size_t>(total) + 1;
  std::vector<std::uint8_t> pu_busy(C, 0);
  std::vector<std::int64_t> last_busy(C, -1);   // last slot each channel carried energy
  std::vector<std::int64_t> sense_start(static_cast<std::size_t>(M), 0);
  std::vector<int> occupants(C, 0);
  std::vector<int> touched;
  touched.reserve(C);
  std::vector<bool> truth(C, false);
  std::vector<SuState> before(static_cast<std::size_t>(M));
  std::vector<std::string> details(event_log ? static_cast<std::size_t>(M) : 0);
  std::vector<int> observed;

  for (std::int64_t k = 0; k < cfg.horizon; ++k) {
    const bool measured = k >= warmup;

    if (!cfg.pu_schedule.empty()) {
      std::fill(pu_busy.begin(), pu_busy.end(), 0);
      for (const auto& pu : cfg.pu_schedule)
        if (k >= pu.start && k < pu.end)
          for (int c : pu.busy) pu_busy[static_cast<std::size_t>(c)] = 1;
    }

    // Arrivals, scripted activity, start of access.
    for (int i = 0; i < M; ++i) {
      auto& su = sus[static_cast<std::size_t>(i)];
      auto& st = streams[static_cast<std::size_t>(i)];
      before[static_cast<std::size_t>(i)] = su.state;
      if (event_log) details[static_cast<std::size_t>(i)].clear();
      if (const auto* a = activity[static_cast<std::size_t>(i)]) {
        if (su.state == SuState::Inactive && k >= a->join && (!a->leave || k < *a->leave)) join(su);
        if (su.state == SuState::Monitoring && a->leave && k >= *a->leave) leave(su);
      }
      std::uint64_t arrived = 0;
      if (st.arrivals) arrived = st.arrivals->take_until(k);
      if (su.state == SuState::Inactive) continue;  // out of the system; traffic dropped
      if (cfg.traffic.arrivals == ArrivalMode::Saturated) su.pending_packets = std::max<std::uint64_t>(su.pending_packets, 1);
      else su.pending_packets += arrived;
      if (su.state == SuState::Monitoring && su.pending_packets > 0) {
        const int size = sample_packet_size(st.sizes, cfg.traffic.packet_size_min, cfg.traffic.packet_size_max);
        begin_slot(su, window, size);
      }
    }

    // Contention state at the slot boundary.
    int contending = 0;
    for (const auto& su : sus)
      contending += cfg.contention_count == ContentionCount::AccessStates
                        ? is_accessing(su.state)
                        : (is_accessing(su.state) && su.phase == AccessPhase::AwaitDecision);
    int truly_available = 0;
    {
      std::fill(truth.begin(), truth.end(), false);
      for (const auto& su : sus)
        if (su.state == SuState::Transmitting) truth[static_cast<std::size_t>(*su.current_channel)] = true;
      for (int c : avail) truly_available += !(truth[static_cast<std::size_t>(c)] || pu_busy[static_cast<std::size_t>(c)]);
    }

    // Policy decisions for SUs whose sensing window just closed.
    for (int i = 0; i < M; ++i) {
      auto& su = sus[static_cast<std::size_t>(i)];
      if (!(is_accessing(su.state) && su.phase == AccessPhase::AwaitDecision)) continue;
      auto& st = streams[static_cast<std::size_t>(i)];
      const std::int64_t from = sense_start[static_cast<std::size_t>(i)];
      for (std::size_t c = 1; c < C; ++c) truth[c] = last_busy[c] >= from;
      observed = sense(cfg.sensing, truth, cfg.channels, st.sensing);
      // The database knows which channels the PUs hold right now.
      if (!cfg.pu_schedule.empty())
        std::erase_if(observed, [&](int c) { return pu_busy[static_cast<std::size_t>(c)] != 0; });
      if (measured) {
        std::size_t j = 0;
        for (int c : avail) {
          const bool reported_idle = j < observed.size() && observed[j] == c;
          if (reported_idle) ++j;
          const bool busy = truth[static_cast<std::size_t>(c)];
          res.false_alarms += !busy && !reported_idle && !pu_busy[static_cast<std::size_t>(c)];
          res.miss_detections += busy && reported_idle;
        }
      }
      const auto info = su_information_oracle(cfg.su_info, contending, truly_available);
      const auto d = decide(cfg.mac_algorithm, su, observed, info, st.mac, mac_params);
      apply_decision(su, d, window, k);
      if (event_log) {
        if (auto* tx = std::get_if<decision::Transmit>(&d)) details[static_cast<std::size_t>(i)] = "ch=" + std::to_string(tx->channel);
        else if (auto* b = std::get_if<decision::Backoff>(&d)) details[static_cast<std::size_t>(i)] = "backoff=" + std::to_string(b->slots);
        else if (auto* df = std::get_if<decision::Defer>(&d)) details[static_cast<std::size_t>(i)] = "defer=" + std::to_string(df->slots);
      }
    }

    // Collision channel.
    touched.clear();
    for (int c : avail)
      if (pu_busy[static_cast<std::size_t>(c)]) {
        occupants[static_cast<std::size_t>(c)] = 1;
        touched.push_back(c);
      }
    for (const auto& su : sus) {
      if (su.state != SuState::Transmitting) continue;
      const auto c = static_cast<std::size_t>(*su.current_channel);
      if (occupants[c]++ == 0) touched.push_back(*su.current_channel);
    }
    for (auto& su : sus)
      if (su.state == SuState::Transmitting && occupants[static_cast<std::size_t>(*su.current_channel)] > 1)
        su.packet_corrupted = true;
    if (measured) {
      for (int c : touched) res.collisions += occupants[static_cast<std::size_t>(c)] > 1;
      res.idle_channel_slots += static_cast<std::int64_t>(avail.size()) - static_cast<std::int64_t>(touched.size());
    }
    if (observer) {
      std::map<int, std::set<int>> tx;
      for (const auto& su : sus)
        if (su.state == SuState::Transmitting) tx[*su.current_channel].insert(su.id);
      observer(resolve_slot(tx, k));
    }
    for (int c : touched) {
      last_busy[static_cast<std::size_t>(c)] = k;
      occupants[static_cast<std::size_t>(c)] = 0;
    }

    // Accounting and timers.
    for (int i = 0; i < M; ++i) {
      auto& su = sus[static_cast<std::size_t>(i)];
      auto& acct = res.accounts[static_cast<std::size_t>(i)];
      if (su.state == SuState::Transmitting) ++acct.transmitting;
      else if (!is_accessing(su.state)) ++acct.idle;
      else {
        switch (su.phase) {
          case AccessPhase::Sensing:
            ++acct.sensing;
            if (su.sensing_remaining == window) sense_start[static_cast<std::size_t>(i)] = k;
            break;
          case AccessPhase::Backoff: ++acct.backoff; break;
          case AccessPhase::Defer: ++acct.defer; break;
          case AccessPhase::AwaitDecision: throw ModelViolation("undecided SU at accounting");
        }
      }
      if (auto done = end_slot(su, window)) {
        if (done->delivered) {
          ++res.packets_delivered;
          const std::int64_t first = std::max(done->start_slot, warmup);
          if (k >= first) res.delivered_slots[static_cast<std::size_t>(i)] += static_cast<double>(k - first + 1);
        } else {
          ++res.packets_lost;
        }
      }
      if (event_log)
        detail::log_change(event_log, k, su, before[static_cast<std::size_t>(i)],
                           details[static_cast<std::size_t>(i)]);
    }
  }

  std::vector<double> rates(static_cast<std::size_t>(M));
  for (int m = 1; m <= M; ++m) rates[static_cast<std::size_t>(m - 1)] = cfg.rate(m);
  res.efficiency = compute_efficiency(res.delivered_slots, rates, res.measured_slots);
  return res;
}

inline MetricsReport aggregate(const ScenarioConfig& cfg, std::vector<ReplicationResult> reps) {
  MetricsReport r;
  r.num_sus = cfg.num_sus;
  r.num_channels = cfg.channels.size();
  r.measured_slots = cfg.horizon - cfg.warmup_slots();
  r.e_upper = upper_bound(cfg.num_sus, std::max(1, cfg.channels.size()), cfg.sensing_window(),
                          cfg.traffic.mean_packet_size());
  const auto n = static_cast<double>(reps.size());
  r.delivered.assign(static_cast<std::size_t>(cfg.num_sus), 0.0);
  std::vector<double> effs;
  for (const auto& rep : reps) {
    effs.push_back(rep.efficiency);
    for (int m = 0; m < cfg.num_sus; ++m)
      r.delivered[static_cast<std::size_t>(m)] += cfg.rate(m + 1) * rep.delivered_slots[static_cast<std::size_t>(m)] / n;
    r.collisions += static_cast<double>(rep.collisions) / n;
    r.idle_channel_slots += static_cast<double>(rep.idle_channel_slots) / n;
    r.false_alarms += static_cast<double>(rep.false_alarms) / n;
    r.miss_detections += static_cast<double>(rep.miss_detections) / n;
    for (const auto& a : rep.accounts) {
      r.sensing_slots += static_cast<double>(a.sensing) / n;
      r.backoff_slots += static_cast<double>(a.backoff) / n;
      r.defer_slots += static_cast<double>(a.defer) / n;
    }
  }
  for (double d : r.delivered) {
    r.per_su_rate.push_back(d / static_cast<double>(r.measured_slots));
    r.total_rate += r.per_su_rate.back();
  }
  r.efficiency = summarize(effs);
  r.replications = std::move(reps);
  return r;
}

// Runs `tasks` indexed callables on up to `jobs` threads.
inline void parallel_for(std::size_t tasks, int jobs, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || tasks <= 1) {
    for (std::size_t i = 0; i < tasks; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, tasks); ++w)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < tasks;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline MetricsReport run(const ScenarioConfig& cfg, const RunOptions& opts = {}) {
  cfg.validate();
  std::vector<ReplicationResult> reps(static_cast<std::size_t>(cfg.replications));
  parallel_for(reps.size(), opts.jobs, [&](std::size_t i) {
    const bool first = i == 0;
    reps[i] = run_replication(cfg, static_cast<int>(i), first ? opts.event_log : nullptr,
                              first ? opts.slot_observer : std::function<void(const SlotOutcome&)>{});
  });
  return aggregate(cfg, std::move(reps));
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

inline MacAlgorithm parse_mac_algorithm(const std::string& s) {
  if (s == "csma_f") return MacAlgorithm::CsmaF;
  if (s == "csma_p") return MacAlgorithm::CsmaP;
  if (s == "csma") return MacAlgorithm::Csma;
  throw ConfigError("unknown mac_algorithm '" + s + "'");
}

inline void set_algorithm(ScenarioConfig& cfg, MacAlgorithm a) {
  cfg.mac_algorithm = a;
  cfg.su_info = required_information(a);
}

inline const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names = {
      "num_sus",       "lambda",      "packet_size", "mac_algorithm",   "backoff_mean", "sensing_slots",
      "p_false_alarm", "p_miss",      "threshold_tnr_db", "averaging_depth", "num_channels"};
  return names;
}

// Applies one sweep value (textual, as written in a config) to a scenario.
inline void apply_sweep_value(ScenarioConfig& cfg, const std::string& parameter, const std::string& value) {
  auto to_int = [&] {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw ConfigError("bad integer '" + value + "' for " + parameter);
    return v;
  };
  auto to_double = [&] {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw ConfigError("bad number '" + value + "' for " + parameter);
    return v;
  };
  try {
    if (parameter == "num_sus") cfg.num_sus = to_int();
    else if (parameter == "lambda") cfg.traffic.mean_arrival_interval = to_double();
    else if (parameter == "packet_size") {
      const auto colon = value.find(':');
      if (colon == std::string::npos) {
        cfg.traffic.packet_size_min = cfg.traffic.packet_size_max = to_int();
      } else {
        cfg.traffic.packet_size_min = std::stoi(value.substr(0, colon));
        cfg.traffic.packet_size_max = std::stoi(value.substr(colon + 1));
      }
    } else if (parameter == "mac_algorithm") set_algorithm(cfg, parse_mac_algorithm(value));
    else if (parameter == "backoff_mean") cfg.traffic.backoff_mean = to_double();
    else if (parameter == "sensing_slots") cfg.traffic.sensing_slots = to_int();
    else if (parameter == "num_channels") cfg.channels = ChannelSet(to_int());
    else if (parameter == "p_false_alarm" || parameter == "p_miss") {
      auto* b = std::get_if<BernoulliSensing>(&cfg.sensing);
      if (!b) throw ConfigError(parameter + " sweep needs the bernoulli sensing model");
      (parameter == "p_miss" ? b->p_miss : b->p_false_alarm) = to_double();
    } else if (parameter == "threshold_tnr_db" || parameter == "averaging_depth") {
      auto* e = std::get_if<EnergyDetector>(&cfg.sensing);
      if (!e) throw ConfigError(parameter + " sweep needs the energy_detector sensing model");
      if (parameter == "averaging_depth") e->averaging_depth = to_int();
      else e->threshold_tnr_db = to_double();
    } else {
      throw ConfigError("unknown sweep parameter '" + parameter + "'");
    }
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError("bad value '" + value + "' for " + parameter);
  }
}

struct SweepSpec {
  std::string parameter;
  std::vector<std::string> values;
  std::vector<MacAlgorithm> algorithms;  // crossed with values; empty keeps the base algorithm
};

struct SweepRow {
  std::string value;
  ScenarioConfig config;
  MetricsReport report;
};

inline double sweep_sort_key(const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
    if (v[pos] == ':') return d + 0.5 * (std::stod(v.substr(pos + 1)) - d);
  } catch (const std::exception&) {
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Every point reuses the base seed; traffic streams do not depend on the MAC
// algorithm, so points that differ only in the algorithm see identical
// arrivals and packet sizes.
inline std::vector<SweepRow> sweep(const ScenarioConfig& base, const SweepSpec& spec, const RunOptions& opts = {}) {
  if (std::find(sweep_parameters().begin(), sweep_parameters().end(), spec.parameter) == sweep_parameters().end())
    throw ConfigError("unknown sweep parameter '" + spec.parameter + "'");
  if (spec.values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepRow> rows;
  const auto algorithms = spec.algorithms.empty() ? std::vector<MacAlgorithm>{base.mac_algorithm} : spec.algorithms;
  for (const auto& v : spec.values)
    for (auto a : algorithms) {
      SweepRow row{v, base, {}};
      set_algorithm(row.config, a);
      apply_sweep_value(row.config, spec.parameter, v);
      row.config.validate();
      rows.push_back(std::move(row));
    }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& x, const SweepRow& y) {
    const double kx = sweep_sort_key(x.value), ky = sweep_sort_key(y.value);
    if (!std::isnan(kx) && !std::isnan(ky) && kx != ky) return kx < ky;
    if (std::isnan(kx) || std::isnan(ky))
      if (x.value != y.value) return x.value < y.value;
    return std::string(to_string(x.config.mac_algorithm)) < to_string(y.config.mac_algorithm);
  });

  std::vector<std::vector<ReplicationResult>> results(rows.size());
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    results[r].resize(static_cast<std::size_t>(rows[r].config.replications));
    for (int i = 0; i < rows[r].config.replications; ++i) tasks.emplace_back(r, i);
  }
  parallel_for(tasks.size(), opts.jobs, [&](std::size_t t) {
    const auto [r, i] = tasks[t];
    results[r][static_cast<std::size_t>(i)] = run_replication(rows[r].config, i);
  });
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r].report = aggregate(rows[r].config, std::move(results[r]));
  return rows;
}

}  // namespace mimasim
