#include <gtest/gtest.h>

#include <map>
#include <vector>

#include "mimasim/mac.hpp"

using namespace mimasim;

namespace {

SuTransmitter accessing(std::optional<int> previous = std::nullopt) {
  SuTransmitter su;
  su.state = previous ? SuState::ReRendezvous : SuState::Initial;
  su.phase = AccessPhase::AwaitDecision;
  su.previous_channel = previous;
  su.packet_slots = 5;
  return su;
}

const std::vector<int> kFour{2, 4, 6, 8};

}  // namespace

TEST(Transitions, ExactlyTheNineLegalEdges) {
  using S = SuState;
  const std::vector<S> all{S::Inactive, S::Monitoring, S::Initial, S::Transmitting, S::ReRendezvous};
  const std::set<std::pair<S, S>> legal{{S::Inactive, S::Monitoring},    {S::Monitoring, S::Initial},
                                        {S::Monitoring, S::ReRendezvous}, {S::Monitoring, S::Inactive},
                                        {S::Initial, S::Initial},         {S::Initial, S::Transmitting},
                                        {S::ReRendezvous, S::Transmitting}, {S::ReRendezvous, S::Initial},
                                        {S::Transmitting, S::Monitoring}};
  int count = 0;
  for (auto a : all)
    for (auto b : all) {
      EXPECT_EQ(is_legal_transition(a, b), legal.count({a, b}) == 1) << to_string(a) << "->" << to_string(b);
      count += is_legal_transition(a, b);
    }
  EXPECT_EQ(count, 9);
}

TEST(Transitions, IllegalEdgeThrows) {
  SuTransmitter su;
  su.state = SuState::Transmitting;
  EXPECT_THROW(transition(su, SuState::Initial), ModelViolation);
  EXPECT_THROW(leave(su), ModelViolation);
  su.state = SuState::Inactive;
  EXPECT_NO_THROW(join(su));
  EXPECT_EQ(su.state, SuState::Monitoring);
}

TEST(CsmaF, RerendezvousWhenContentionFits) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const auto d = decide_csma_f(accessing(6), kFour, 3, rng);
    ASSERT_TRUE(std::holds_alternative<decision::Transmit>(d));
    EXPECT_EQ(std::get<decision::Transmit>(d).channel, 6);
  }
}

TEST(CsmaF, UniformWithCertaintyWhenPreviousUnavailable) {
  Rng rng(2);
  std::map<int, int> counts;
  const int n = 80'000;
  for (int i = 0; i < n; ++i) {
    const auto d = decide_csma_f(accessing(5), kFour, 4, rng);
    ASSERT_TRUE(std::holds_alternative<decision::Transmit>(d));
    ++counts[std::get<decision::Transmit>(d).channel];
  }
  for (int c : kFour) EXPECT_NEAR(counts[c] / (n / 4.0), 1.0, 0.03);
}

TEST(CsmaF, TransmitProbabilityIsChannelsOverContenders) {
  // M_k = 10, N_k = 4: transmit with probability 0.4 even with a previous channel.
  Rng rng(3);
  const int n = 100'000;
  int tx = 0, defer = 0;
  for (int i = 0; i < n; ++i) {
    const auto d = decide_csma_f(accessing(4), kFour, 10, rng);
    if (std::holds_alternative<decision::Transmit>(d)) ++tx;
    if (auto* df = std::get_if<decision::Defer>(&d)) {
      ++defer;
      EXPECT_EQ(df->slots, 1);
    }
  }
  EXPECT_EQ(tx + defer, n);
  EXPECT_NEAR(static_cast<double>(tx) / n, 0.4, 0.004);
}

TEST(CsmaF, DeferBackoffPolicyDrawsGeometricSlots) {
  Rng rng(4);
  MacParams params{8.0, DeferPolicy::Backoff};
  double sum = 0.0;
  int defers = 0;
  for (int i = 0; i < 100'000; ++i) {
    const auto d = decide_csma_f(accessing(), kFour, 40, rng, params);
    if (auto* df = std::get_if<decision::Defer>(&d)) {
      sum += df->slots;
      ++defers;
    }
  }
  EXPECT_NEAR(sum / defers, 8.0, 0.08);
}

TEST(CsmaF, NoContendersIsAModelViolation) {
  Rng rng(5);
  EXPECT_THROW(decide_csma_f(accessing(), kFour, 0, rng), ModelViolation);
}

TEST(Policies, EmptyAvailableSetBacksOff) {
  Rng rng(6);
  const std::vector<int> none;
  EXPECT_TRUE(std::holds_alternative<decision::Backoff>(decide_csma_f(accessing(), none, 3, rng)));
  EXPECT_TRUE(std::holds_alternative<decision::Backoff>(decide_csma_p(accessing(), none, false, rng)));
  EXPECT_TRUE(std::holds_alternative<decision::Backoff>(decide_csma(accessing(), none, rng)));
}

TEST(CsmaP, BitControlsRerendezvous) {
  Rng rng(7);
  int stayed = 0;
  const int n = 40'000;
  for (int i = 0; i < n; ++i) {
    EXPECT_EQ(std::get<decision::Transmit>(decide_csma_p(accessing(8), kFour, false, rng)).channel, 8);
    stayed += std::get<decision::Transmit>(decide_csma_p(accessing(8), kFour, true, rng)).channel == 8;
  }
  // With the bit set the previous channel is just one of four uniform picks.
  EXPECT_NEAR(stayed / (n / 4.0), 1.0, 0.04);
}

TEST(Csma, IgnoresPreviousChannel) {
  Rng rng(8);
  std::map<int, int> counts;
  const int n = 80'000;
  for (int i = 0; i < n; ++i) ++counts[std::get<decision::Transmit>(decide_csma(accessing(2), kFour, rng)).channel];
  for (int c : kFour) EXPECT_NEAR(counts[c] / (n / 4.0), 1.0, 0.03);
}

TEST(Dispatch, InformationMustMatchAlgorithm) {
  Rng rng(9);
  const auto su = accessing();
  EXPECT_THROW(decide(MacAlgorithm::CsmaF, su, kFour, NoInformation{}, rng), ConfigError);
  EXPECT_THROW(decide(MacAlgorithm::CsmaP, su, kFour, FullInformation{3}, rng), ConfigError);
  EXPECT_THROW(decide(MacAlgorithm::Csma, su, kFour, PartialInformation{true}, rng), ConfigError);
  EXPECT_NO_THROW(decide(MacAlgorithm::CsmaF, su, kFour, FullInformation{3}, rng));
}

TEST(Oracle, PartialBitIsContendersAtLeastChannels) {
  EXPECT_TRUE(std::get<PartialInformation>(su_information_oracle(SuInformationMode::Partial, 4, 4))
                  .contending_at_least_channels);
  EXPECT_FALSE(std::get<PartialInformation>(su_information_oracle(SuInformationMode::Partial, 3, 4))
                   .contending_at_least_channels);
  EXPECT_EQ(std::get<FullInformation>(su_information_oracle(SuInformationMode::Full, 7, 2)).contending, 7);
}

TEST(StateMachine, SingleSuLifecycle) {
  // Sense one slot, transmit three slots, back to monitoring.
  SuTransmitter su;
  su.pending_packets = 1;
  StepContext ctx;
  ctx.sensing_window = 1;
  ctx.next_packet_slots = 3;
  ctx.decide = [](const SuTransmitter&) -> MacDecision { return decision::Transmit{4}; };

  std::vector<SuState> states;
  for (std::int64_t k = 0; k < 6; ++k) {
    ctx.slot = k;
    const auto r = step_state_machine(su, ctx);
    states.push_back(su.state);
    if (k == 3) {
      ASSERT_TRUE(r.completed.has_value());
      EXPECT_TRUE(r.completed->delivered);
      EXPECT_EQ(r.completed->slots, 3);
      EXPECT_EQ(r.completed->start_slot, 1);
    }
  }
  EXPECT_EQ(states, (std::vector<SuState>{SuState::Initial, SuState::Transmitting, SuState::Transmitting,
                                          SuState::Monitoring, SuState::Monitoring, SuState::Monitoring}));
  EXPECT_EQ(su.previous_channel, 4);
}

TEST(StateMachine, SecondPacketStartsInRerendezvous) {
  SuTransmitter su;
  su.previous_channel = 2;
  su.pending_packets = 1;
  EXPECT_FALSE(begin_slot(su, 1, 5));
  EXPECT_EQ(su.state, SuState::ReRendezvous);
  EXPECT_EQ(su.phase, AccessPhase::Sensing);
}

TEST(StateMachine, BackoffThenResense) {
  SuTransmitter su = accessing(3);
  apply_decision(su, decision::Backoff{2}, 1, 0);
  EXPECT_EQ(su.state, SuState::Initial);
  EXPECT_EQ(su.phase, AccessPhase::Backoff);
  end_slot(su, 1);
  EXPECT_EQ(su.phase, AccessPhase::Backoff);
  end_slot(su, 1);
  EXPECT_EQ(su.phase, AccessPhase::Sensing);
  end_slot(su, 1);
  EXPECT_EQ(su.phase, AccessPhase::AwaitDecision);
}

TEST(StateMachine, UndecidedSuCannotEndSlot) {
  SuTransmitter su = accessing();
  EXPECT_THROW(end_slot(su, 1), ModelViolation);
  SuTransmitter idle;
  EXPECT_THROW(apply_decision(idle, decision::Transmit{1}, 1, 0), ModelViolation);
}

TEST(StateMachine, CorruptedPacketIsReportedUndelivered) {
  SuTransmitter su = accessing();
  apply_decision(su, decision::Transmit{1}, 1, 10);
  su.packet_corrupted = true;
  std::optional<CompletedPacket> done;
  for (int i = 0; i < 5; ++i) done = end_slot(su, 1);
  ASSERT_TRUE(done);
  EXPECT_FALSE(done->delivered);
  EXPECT_EQ(su.state, SuState::Monitoring);
}
