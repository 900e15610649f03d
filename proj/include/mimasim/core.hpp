#pragma once

// Domain types shared by the analysis and the simulator: channel sets, the SU
// transmitter record, traffic/backoff samplers and collision-channel slot
// resolution.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mimasim {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a caller asks the model to do something it cannot represent
// (an SU on two channels, an illegal state transition, ...).
struct ModelViolation : std::logic_error {
  using std::logic_error::logic_error;
};

using Rng = std::mt19937_64;

// splitmix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream identifiers. Traffic streams depend only on (seed, replication, su)
// so that every MAC algorithm sees the same arrivals and packet sizes.
enum class Stream : std::uint64_t { Arrivals = 1, PacketSizes = 2, Mac = 3, Sensing = 4 };

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t replication,
                                    std::uint64_t su, Stream stream) noexcept {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ replication);
  h = mix64(h ^ (su + 0x100000000ULL));
  return mix64(h ^ static_cast<std::uint64_t>(stream));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t replication, std::uint64_t su,
                    Stream stream) {
  return Rng{derive_seed(seed, replication, su, stream)};
}

// ---------------------------------------------------------------------------
// Channels
// ---------------------------------------------------------------------------

// Raw channel indices are 1-based in [1, total_channels].
class ChannelSet {
 public:
  ChannelSet() = default;

  explicit ChannelSet(int total_channels) : total_(total_channels) {
    if (total_channels < 1) throw ConfigError("total_channels must be positive");
    available_.resize(static_cast<std::size_t>(total_channels));
    for (int c = 1; c <= total_channels; ++c) available_[static_cast<std::size_t>(c - 1)] = c;
  }

  ChannelSet(int total_channels, std::vector<int> available)
      : total_(total_channels), available_(std::move(available)) {
    if (total_channels < 1) throw ConfigError("total_channels must be positive");
    for (std::size_t i = 0; i < available_.size(); ++i) {
      const int c = available_[i];
      if (c < 1 || c > total_channels)
        throw ConfigError("available channel " + std::to_string(c) + " outside 1.." +
                          std::to_string(total_channels));
      if (i > 0 && available_[i - 1] >= c)
        throw ConfigError("available channels must be strictly increasing");
    }
  }

  int total_channels() const noexcept { return total_; }
  const std::vector<int>& available() const noexcept { return available_; }
  int size() const noexcept { return static_cast<int>(available_.size()); }

  bool contains(int channel) const {
    return std::binary_search(available_.begin(), available_.end(), channel);
  }

  // Position of a raw channel in the relabelled 1..N ordering, 0 if absent.
  int relabel(int channel) const {
    auto it = std::lower_bound(available_.begin(), available_.end(), channel);
    if (it == available_.end() || *it != channel) return 0;
    return static_cast<int>(it - available_.begin()) + 1;
  }

  // Mirror image of a raw channel within the full band (IQ image position).
  int mirror(int channel) const noexcept { return total_ + 1 - channel; }

 private:
  int total_ = 0;
  std::vector<int> available_;
};

// ---------------------------------------------------------------------------
// SU transmitter record
// ---------------------------------------------------------------------------

enum class SuState { Inactive, Monitoring, Initial, Transmitting, ReRendezvous };

// What an SU in Initial/ReRendezvous is doing in the current slot.
enum class AccessPhase { Sensing, AwaitDecision, Backoff, Defer };

inline const char* to_string(SuState s) {
  switch (s) {
    case SuState::Inactive: return "inactive";
    case SuState::Monitoring: return "monitoring";
    case SuState::Initial: return "initial";
    case SuState::Transmitting: return "transmitting";
    case SuState::ReRendezvous: return "rerendezvous";
  }
  return "?";
}

inline bool is_accessing(SuState s) noexcept {
  return s == SuState::Initial || s == SuState::ReRendezvous;
}

struct SuTransmitter {
  int id = 1;
  SuState state = SuState::Monitoring;
  AccessPhase phase = AccessPhase::Sensing;
  std::optional<int> previous_channel;
  std::optional<int> current_channel;

  // Pending packets in FIFO order. Sizes come from a dedicated per-SU stream
  // consumed in arrival order, so they are drawn when a packet enters service;
  // the k-th packet gets the same size whenever it is served.
  std::uint64_t pending_packets = 0;

  int packet_slots = 0;  // T_d of the packet in service
  int remaining_tx_slots = 0;
  int backoff_remaining = 0;
  int sensing_remaining = 0;
  double rate_weight = 1.0;

  // Packet-level bookkeeping for the packet currently on air.
  bool packet_corrupted = false;
  std::int64_t tx_start_slot = 0;
};

// ---------------------------------------------------------------------------
// Traffic
// ---------------------------------------------------------------------------

enum class ArrivalMode { Poisson, Saturated, None };

struct TrafficModel {
  ArrivalMode arrivals = ArrivalMode::Poisson;
  double mean_arrival_interval = 50.0;  // slots
  int packet_size_min = 50;             // slots
  int packet_size_max = 50;             // slots
  double backoff_mean = 10.0;           // slots
  int sensing_slots = 1;
  int transition_slots = 0;

  double mean_packet_size() const noexcept {
    return 0.5 * (static_cast<double>(packet_size_min) + packet_size_max);
  }

  void validate() const {
    if (arrivals == ArrivalMode::Poisson && !(mean_arrival_interval > 0.0))
      throw ConfigError("mean_arrival_interval must be > 0");
    if (packet_size_min < 1) throw ConfigError("packet_size_min must be >= 1");
    if (packet_size_min > packet_size_max)
      throw ConfigError("packet_size_min must not exceed packet_size_max");
    if (!(backoff_mean >= 1.0)) throw ConfigError("backoff_mean must be >= 1");
    if (sensing_slots < 0) throw ConfigError("sensing_slots must be >= 0");
    if (transition_slots < 0) throw ConfigError("transition_slots must be >= 0");
  }
};

// Continuous-time Poisson arrivals floored to slot indices.
class ArrivalProcess {
 public:
  ArrivalProcess(double mean_interval, Rng rng) : rng_(std::move(rng)), gap_(1.0 / mean_interval) {
    if (!(mean_interval > 0.0)) throw ConfigError("mean arrival interval must be > 0");
    advance();
  }

  // Slot of the next arrival not yet consumed.
  std::int64_t peek() const noexcept { return next_slot_; }

  // Number of arrivals with slot index <= slot; consumes them.
  std::uint64_t take_until(std::int64_t slot) {
    std::uint64_t n = 0;
    while (next_slot_ <= slot) {
      ++n;
      advance();
    }
    return n;
  }

 private:
  void advance() {
    time_ += gap_(rng_);
    next_slot_ = time_ >= 9.0e18 ? std::numeric_limits<std::int64_t>::max()
                                 : static_cast<std::int64_t>(std::floor(time_));
  }

  Rng rng_;
  std::exponential_distribution<double> gap_;
  double time_ = 0.0;
  std::int64_t next_slot_ = 0;
};

inline std::vector<std::int64_t> sample_arrivals(Rng& rng, double mean_interval,
                                                 std::int64_t horizon) {
  if (!(mean_interval > 0.0)) throw ConfigError("mean arrival interval must be > 0");
  std::exponential_distribution<double> gap(1.0 / mean_interval);
  std::vector<std::int64_t> out;
  double t = 0.0;
  for (;;) {
    t += gap(rng);
    if (!(t < static_cast<double>(horizon))) break;
    out.push_back(static_cast<std::int64_t>(std::floor(t)));
  }
  return out;
}

inline int sample_packet_size(Rng& rng, int min_slots, int max_slots) {
  if (min_slots < 1) throw ConfigError("packet size minimum must be >= 1");
  if (min_slots > max_slots) throw ConfigError("packet size minimum exceeds maximum");
  if (min_slots == max_slots) return min_slots;
  return std::uniform_int_distribution<int>(min_slots, max_slots)(rng);
}

// Geometric on {1, 2, ...} with success probability 1/mean.
inline int sample_backoff(Rng& rng, double mean_slots) {
  if (!(mean_slots >= 1.0)) throw ConfigError("backoff mean must be >= 1");
  if (mean_slots == 1.0) return 1;
  std::geometric_distribution<int> failures(1.0 / mean_slots);
  return 1 + failures(rng);
}

// ---------------------------------------------------------------------------
// Collision channel
// ---------------------------------------------------------------------------

struct SlotOutcome {
  std::int64_t slot_index = 0;
  std::map<int, std::set<int>> transmissions;  // channel -> SU ids
  std::set<std::pair<int, int>> successes;     // (SU id, channel)

  int collided_channels() const {
    int n = 0;
    for (const auto& [ch, ids] : transmissions)
      if (ids.size() > 1) ++n;
    return n;
  }
};

inline SlotOutcome resolve_slot(const std::map<int, std::set<int>>& transmissions,
                                std::int64_t slot_index) {
  SlotOutcome out;
  out.slot_index = slot_index;
  std::set<int> seen;
  for (const auto& [channel, ids] : transmissions) {
    for (int id : ids)
      if (!seen.insert(id).second)
        throw ModelViolation("SU " + std::to_string(id) + " transmits on more than one channel in slot " +
                             std::to_string(slot_index));
    if (ids.size() == 1) out.successes.emplace(*ids.begin(), channel);
  }
  out.transmissions = transmissions;
  return out;
}

}  // namespace mimasim
