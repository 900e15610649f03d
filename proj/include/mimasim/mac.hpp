#pragma once

// SU transmitter state machine and the three multichannel CSMA access
// policies, which differ only in how much they know about the number of
// contending SUs.

#include <algorithm>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "mimasim/core.hpp"

namespace mimasim {

enum class MacAlgorithm { CsmaF, CsmaP, Csma };
enum class SuInformationMode { Full, Partial, None };
enum class DeferPolicy { OneSlot, Backoff };

inline const char* to_string(MacAlgorithm a) {
  switch (a) {
    case MacAlgorithm::CsmaF: return "csma_f";
    case MacAlgorithm::CsmaP: return "csma_p";
    case MacAlgorithm::Csma: return "csma";
  }
  return "?";
}

inline const char* to_string(SuInformationMode m) {
  switch (m) {
    case SuInformationMode::Full: return "full";
    case SuInformationMode::Partial: return "partial";
    case SuInformationMode::None: return "none";
  }
  return "?";
}

inline SuInformationMode required_information(MacAlgorithm a) {
  switch (a) {
    case MacAlgorithm::CsmaF: return SuInformationMode::Full;
    case MacAlgorithm::CsmaP: return SuInformationMode::Partial;
    case MacAlgorithm::Csma: return SuInformationMode::None;
  }
  return SuInformationMode::None;
}

// ---------------------------------------------------------------------------
// SU information
// ---------------------------------------------------------------------------

struct FullInformation {
  int contending;  // M_k
};
struct PartialInformation {
  bool contending_at_least_channels;  // M_k >= N_k
};
struct NoInformation {};

using SuInformation = std::variant<FullInformation, PartialInformation, NoInformation>;

inline SuInformation su_information_oracle(SuInformationMode mode, int true_contending,
                                           int available_channels) {
  switch (mode) {
    case SuInformationMode::Full: return FullInformation{true_contending};
    case SuInformationMode::Partial:
      return PartialInformation{true_contending >= available_channels};
    case SuInformationMode::None: return NoInformation{};
  }
  return NoInformation{};
}

// ---------------------------------------------------------------------------
// Decisions
// ---------------------------------------------------------------------------

namespace decision {
struct Sense {};
struct Backoff {
  int slots;
};
struct Transmit {
  int channel;
};
struct Defer {
  int slots;
};
}  // namespace decision

using MacDecision =
    std::variant<decision::Sense, decision::Backoff, decision::Transmit, decision::Defer>;

struct MacParams {
  double backoff_mean = 10.0;
  DeferPolicy defer_policy = DeferPolicy::OneSlot;
};

namespace detail {
inline int uniform_channel(std::span<const int> available, Rng& rng) {
  const auto i = std::uniform_int_distribution<std::size_t>(0, available.size() - 1)(rng);
  return available[i];
}
inline bool holds_previous(const SuTransmitter& su, std::span<const int> available) {
  return su.previous_channel &&
         std::find(available.begin(), available.end(), *su.previous_channel) != available.end();
}
}  // namespace detail

// Multichannel CSMA-F: re-rendezvous when M_k <= N_k, otherwise transmit with
// per-channel probability min{1/M_k, 1/N_k} on a uniformly chosen channel.
inline MacDecision decide_csma_f(const SuTransmitter& su, std::span<const int> available,
                                 int contending, Rng& rng, const MacParams& params = {}) {
  if (contending < 1) throw ModelViolation("CSMA-F needs M_k >= 1");
  if (available.empty()) return decision::Backoff{sample_backoff(rng, params.backoff_mean)};
  const int n = static_cast<int>(available.size());
  if (contending <= n && detail::holds_previous(su, available))
    return decision::Transmit{*su.previous_channel};
  const int channel = detail::uniform_channel(available, rng);
  if (contending <= n) return decision::Transmit{channel};
  const double transmit = static_cast<double>(n) / contending;
  if (std::uniform_real_distribution<double>(0.0, 1.0)(rng) < transmit)
    return decision::Transmit{channel};
  if (params.defer_policy == DeferPolicy::Backoff)
    return decision::Defer{sample_backoff(rng, params.backoff_mean)};
  return decision::Defer{1};
}

// Multichannel CSMA-P: only the one-bit M_k >= N_k signal is available.
inline MacDecision decide_csma_p(const SuTransmitter& su, std::span<const int> available,
                                 bool contending_at_least_channels, Rng& rng,
                                 const MacParams& params = {}) {
  if (available.empty()) return decision::Backoff{sample_backoff(rng, params.backoff_mean)};
  if (!contending_at_least_channels && detail::holds_previous(su, available))
    return decision::Transmit{*su.previous_channel};
  return decision::Transmit{detail::uniform_channel(available, rng)};
}

// Multichannel CSMA: no SU information, no channel preference.
inline MacDecision decide_csma(const SuTransmitter& /*su*/, std::span<const int> available, Rng& rng,
                               const MacParams& params = {}) {
  if (available.empty()) return decision::Backoff{sample_backoff(rng, params.backoff_mean)};
  return decision::Transmit{detail::uniform_channel(available, rng)};
}

inline MacDecision decide(MacAlgorithm algorithm, const SuTransmitter& su,
                          std::span<const int> available, const SuInformation& info, Rng& rng,
                          const MacParams& params = {}) {
  switch (algorithm) {
    case MacAlgorithm::CsmaF:
      if (auto* full = std::get_if<FullInformation>(&info))
        return decide_csma_f(su, available, full->contending, rng, params);
      throw ConfigError("csma_f requires full SU information");
    case MacAlgorithm::CsmaP:
      if (auto* partial = std::get_if<PartialInformation>(&info))
        return decide_csma_p(su, available, partial->contending_at_least_channels, rng, params);
      throw ConfigError("csma_p requires partial SU information");
    case MacAlgorithm::Csma:
      if (std::holds_alternative<NoInformation>(info)) return decide_csma(su, available, rng, params);
      throw ConfigError("csma takes no SU information");
  }
  throw ConfigError("unknown MAC algorithm");
}

// ---------------------------------------------------------------------------
// State machine
// ---------------------------------------------------------------------------

// The nine enumerated transitions; self-loop Initial -> Initial is the backoff edge.
inline bool is_legal_transition(SuState from, SuState to) {
  using S = SuState;
  switch (from) {
    case S::Inactive: return to == S::Monitoring;
    case S::Monitoring: return to == S::Initial || to == S::ReRendezvous || to == S::Inactive;
    case S::Initial: return to == S::Initial || to == S::Transmitting;
    case S::ReRendezvous: return to == S::Transmitting || to == S::Initial;
    case S::Transmitting: return to == S::Monitoring;
  }
  return false;
}

inline void transition(SuTransmitter& su, SuState to) {
  if (!is_legal_transition(su.state, to))
    throw ModelViolation(std::string("illegal transition ") + to_string(su.state) + " -> " + to_string(to) +
                         " for SU " + std::to_string(su.id));
  su.state = to;
}

inline void join(SuTransmitter& su) { transition(su, SuState::Monitoring); }
inline void leave(SuTransmitter& su) { transition(su, SuState::Inactive); }

// Slot-start bookkeeping. A monitoring SU with a pending packet starts a
// sensing window of `sensing_window` slots. Returns true when the SU owes a
// policy decision this slot.
inline bool begin_slot(SuTransmitter& su, int sensing_window, int packet_slots) {
  if (su.state == SuState::Monitoring && su.pending_packets > 0) {
    --su.pending_packets;
    transition(su, su.previous_channel ? SuState::ReRendezvous : SuState::Initial);
    su.packet_slots = packet_slots;
    su.phase = AccessPhase::Sensing;
    su.sensing_remaining = sensing_window;
    if (sensing_window == 0) su.phase = AccessPhase::AwaitDecision;
  }
  return is_accessing(su.state) && su.phase == AccessPhase::AwaitDecision;
}

inline void apply_decision(SuTransmitter& su, const MacDecision& d, int sensing_window,
                           std::int64_t slot) {
  if (!is_accessing(su.state) || su.phase != AccessPhase::AwaitDecision)
    throw ModelViolation("SU " + std::to_string(su.id) + " is not awaiting a decision");
  if (auto* tx = std::get_if<decision::Transmit>(&d)) {
    transition(su, SuState::Transmitting);
    su.current_channel = tx->channel;
    su.remaining_tx_slots = su.packet_slots;
    su.packet_corrupted = false;
    su.tx_start_slot = slot;
    return;
  }
  transition(su, SuState::Initial);
  if (auto* b = std::get_if<decision::Backoff>(&d)) {
    su.phase = AccessPhase::Backoff;
    su.backoff_remaining = std::max(1, b->slots);
  } else if (auto* df = std::get_if<decision::Defer>(&d)) {
    su.phase = AccessPhase::Defer;
    su.backoff_remaining = std::max(1, df->slots);
  } else {
    su.phase = AccessPhase::Sensing;
    su.sensing_remaining = std::max(1, sensing_window);
  }
}

struct CompletedPacket {
  int su = 0;
  int channel = 0;
  int slots = 0;
  std::int64_t start_slot = 0;
  bool delivered = false;
};

// Slot-end bookkeeping: counts down transmission, sensing and backoff timers.
inline std::optional<CompletedPacket> end_slot(SuTransmitter& su, int sensing_window) {
  if (su.state == SuState::Transmitting) {
    if (--su.remaining_tx_slots > 0) return std::nullopt;
    CompletedPacket done{su.id, *su.current_channel, su.packet_slots, su.tx_start_slot,
                         !su.packet_corrupted};
    transition(su, SuState::Monitoring);
    su.previous_channel = su.current_channel;
    su.current_channel.reset();
    return done;
  }
  if (!is_accessing(su.state)) return std::nullopt;
  switch (su.phase) {
    case AccessPhase::Sensing:
      if (--su.sensing_remaining <= 0) su.phase = AccessPhase::AwaitDecision;
      break;
    case AccessPhase::Backoff:
    case AccessPhase::Defer:
      if (--su.backoff_remaining <= 0) {
        su.phase = sensing_window > 0 ? AccessPhase::Sensing : AccessPhase::AwaitDecision;
        su.sensing_remaining = sensing_window;
      }
      break;
    case AccessPhase::AwaitDecision:
      throw ModelViolation("SU " + std::to_string(su.id) + " ended a slot without a decision");
  }
  return std::nullopt;
}

struct StepContext {
  std::int64_t slot = 0;
  int sensing_window = 1;
  int next_packet_slots = 1;
  std::function<MacDecision(const SuTransmitter&)> decide;
};

struct StepResult {
  std::optional<MacDecision> decision;
  std::optional<CompletedPacket> completed;
};

// One full slot for a single SU: arrival handling, decision, timers.
inline StepResult step_state_machine(SuTransmitter& su, const StepContext& ctx) {
  StepResult r;
  if (begin_slot(su, ctx.sensing_window, ctx.next_packet_slots)) {
    if (!ctx.decide) throw ModelViolation("decision required but no policy supplied");
    r.decision = ctx.decide(su);
    apply_decision(su, *r.decision, ctx.sensing_window, ctx.slot);
  }
  r.completed = end_slot(su, ctx.sensing_window);
  return r;
}

}  // namespace mimasim
