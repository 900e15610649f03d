#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "mimasim/engine.hpp"

using namespace mimasim;

namespace {

ScenarioConfig small(MacAlgorithm a, int sus = 6, int channels = 4) {
  ScenarioConfig c;
  c.channels = ChannelSet(channels);
  c.num_sus = sus;
  set_algorithm(c, a);
  c.traffic.mean_arrival_interval = 30;
  c.traffic.packet_size_min = 5;
  c.traffic.packet_size_max = 15;
  c.horizon = 20'000;
  c.replications = 4;
  return c;
}

constexpr MacAlgorithm kAlgorithms[] = {MacAlgorithm::CsmaF, MacAlgorithm::CsmaP, MacAlgorithm::Csma};

}  // namespace

TEST(ComputeEfficiency, WorkedExamples) {
  EXPECT_DOUBLE_EQ(compute_efficiency({1000, 1000}, {1, 1}, 1000), 1.0);
  EXPECT_DOUBLE_EQ(compute_efficiency({500, 0}, {1, 1}, 1000), 0.25);
  EXPECT_DOUBLE_EQ(compute_efficiency({300, 150}, {2, 1}, 1000), 0.25);
  EXPECT_THROW(compute_efficiency({1, 1}, {0, 0}, 10), ConfigError);
  EXPECT_THROW(compute_efficiency({1}, {1}, 0), ConfigError);
}

TEST(UpperBound, WorkedExamples) {
  EXPECT_NEAR(upper_bound(10, 20, 1, 50), 50.0 / 51.0, 1e-12);
  EXPECT_NEAR(upper_bound(40, 20, 1, 50), 0.5 * 50.0 / 51.0, 1e-12);
  EXPECT_DOUBLE_EQ(upper_bound(30, 20, 0, 50), 20.0 / 30.0);
}

TEST(Summary, StudentTHalfWidth) {
  const auto s = summarize({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_NEAR(s.stddev, std::sqrt(5.0 / 3.0), 1e-12);
  EXPECT_NEAR(s.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
  EXPECT_NEAR(s.ci95, 3.182446305284263 * s.se, 1e-9);  // t_{0.975, 3}
}

TEST(Run, SingleSaturatedSuDutyCycle) {
  ScenarioConfig c;
  c.channels = ChannelSet(1);
  c.num_sus = 1;
  c.traffic.arrivals = ArrivalMode::Saturated;
  c.horizon = 200'000;
  c.replications = 1;
  const auto r = run(c);
  EXPECT_NEAR(r.efficiency.mean, 50.0 / 51.0, 0.01 * 50.0 / 51.0);
  EXPECT_EQ(r.replications[0].collisions, 0);
}

TEST(Run, NoArrivalsMeansZeroEfficiencyAndIdleSlots) {
  ScenarioConfig c = small(MacAlgorithm::Csma, 1, 1);
  c.traffic.arrivals = ArrivalMode::None;
  c.replications = 1;
  const auto r = run(c);
  EXPECT_EQ(r.efficiency.mean, 0.0);
  EXPECT_EQ(r.replications[0].accounts[0].idle, c.horizon);
}

TEST(Run, TwoSusBelowUpperBound) {
  ScenarioConfig c;
  c.num_sus = 2;
  c.horizon = 1'000'000;
  c.replications = 1;
  const auto r = run(c);
  EXPECT_LE(r.efficiency.mean, upper_bound(2, 20, 1, 50) + 0.01);
}

TEST(Run, AccountingIdentityHoldsForEverySu) {
  for (auto a : kAlgorithms) {
    ScenarioConfig c = small(a, 8, 4);
    c.sensing = BernoulliSensing{0.1, 0.1, {}};
    c.traffic.transition_slots = 2;
    c.defer_policy = DeferPolicy::Backoff;
    const auto r = run(c);
    for (const auto& rep : r.replications)
      for (const auto& acct : rep.accounts) EXPECT_EQ(acct.total(), c.horizon);
  }
}

TEST(Run, EfficiencyWithinBoundsAndDeliveredNonDecreasing) {
  for (auto a : kAlgorithms) {
    ScenarioConfig c = small(a);
    const auto r = run(c);
    EXPECT_GE(r.efficiency.mean, 0.0);
    EXPECT_LE(r.efficiency.mean, 1.0);
    ScenarioConfig longer = c;
    longer.horizon = 2 * c.horizon;
    longer.warmup = c.warmup_slots();
    const auto r2 = run(longer);
    for (int m = 0; m < c.num_sus; ++m) EXPECT_GE(r2.delivered[static_cast<std::size_t>(m)], r.delivered[static_cast<std::size_t>(m)]);
  }
}

TEST(Run, DeterministicForFixedSeed) {
  for (auto a : kAlgorithms) {
    ScenarioConfig c = small(a);
    c.sensing = BernoulliSensing{0.05, 0.05, {}};
    RunOptions serial, parallel;
    parallel.jobs = 3;
    const auto x = run(c, serial), y = run(c, parallel);
    ASSERT_EQ(x.replications.size(), y.replications.size());
    for (std::size_t i = 0; i < x.replications.size(); ++i) {
      EXPECT_EQ(x.replications[i].delivered_slots, y.replications[i].delivered_slots);
      EXPECT_EQ(x.replications[i].collisions, y.replications[i].collisions);
      EXPECT_EQ(x.replications[i].false_alarms, y.replications[i].false_alarms);
    }
    EXPECT_EQ(x.efficiency.mean, y.efficiency.mean);
  }
}

TEST(Run, SeedChangesOutcome) {
  ScenarioConfig c = small(MacAlgorithm::Csma);
  const auto x = run(c);
  c.seed = 99;
  const auto y = run(c);
  EXPECT_NE(x.efficiency.mean, y.efficiency.mean);
}

TEST(Run, CommonRandomNumbersAcrossAlgorithms) {
  // A lone SU never contends, so every algorithm must deliver the same
  // packets at the same times when arrivals and sizes are shared.
  std::vector<double> effs;
  std::vector<std::int64_t> delivered;
  for (auto a : kAlgorithms) {
    ScenarioConfig c = small(a, 1, 5);
    c.traffic.mean_arrival_interval = 12;
    const auto r = run(c);
    effs.push_back(r.efficiency.mean);
    delivered.push_back(r.replications[0].packets_delivered);
  }
  EXPECT_EQ(effs[0], effs[1]);
  EXPECT_EQ(effs[1], effs[2]);
  EXPECT_EQ(delivered[0], delivered[2]);
}

TEST(Run, CollisionResolutionInvariantsPerSlot) {
  for (auto a : kAlgorithms) {
    ScenarioConfig c = small(a, 10, 3);
    c.replications = 1;
    c.horizon = 5000;
    std::int64_t expected_slot = 0;
    std::int64_t collided = 0;
    RunOptions o;
    o.slot_observer = [&](const SlotOutcome& s) {
      EXPECT_EQ(s.slot_index, expected_slot++);
      std::set<int> sus;
      for (const auto& [ch, ids] : s.transmissions) {
        EXPECT_GE(ch, 1);
        EXPECT_LE(ch, 3);
        for (int id : ids) EXPECT_TRUE(sus.insert(id).second);
        if (ids.size() == 1) EXPECT_TRUE(s.successes.count({*ids.begin(), ch}));
      }
      EXPECT_LE(s.successes.size(), 3u);
      if (s.slot_index >= c.warmup_slots()) collided += s.collided_channels();
    };
    const auto r = run(c, o);
    EXPECT_EQ(expected_slot, c.horizon);
    EXPECT_EQ(collided, r.replications[0].collisions);
  }
}

TEST(Run, CollisionSymmetryUnderCsma) {
  ScenarioConfig c = small(MacAlgorithm::Csma, 6, 3);
  c.traffic.arrivals = ArrivalMode::Saturated;
  c.replications = 20;
  const auto r = run(c);
  std::vector<std::vector<double>> per_su(static_cast<std::size_t>(c.num_sus));
  for (const auto& rep : r.replications)
    for (int m = 0; m < c.num_sus; ++m)
      per_su[static_cast<std::size_t>(m)].push_back(rep.delivered_slots[static_cast<std::size_t>(m)]);
  const double overall = std::accumulate(r.delivered.begin(), r.delivered.end(), 0.0) / c.num_sus;
  for (const auto& xs : per_su) {
    const auto s = summarize(xs);
    EXPECT_NEAR(s.mean, overall, 3 * s.se + 1e-9);
  }
}

TEST(Run, MissDetectionsIncreaseCollisions) {
  ScenarioConfig c = small(MacAlgorithm::Csma, 8, 6);
  c.replications = 10;
  c.sensing = BernoulliSensing{0.0, 0.0, {}};
  const auto clean = run(c);
  c.sensing = BernoulliSensing{0.0, 0.3, {}};
  const auto noisy = run(c);
  auto collisions = [](const MetricsReport& r) {
    std::vector<double> xs;
    for (const auto& rep : r.replications) xs.push_back(static_cast<double>(rep.collisions));
    return summarize(xs);
  };
  const auto a = collisions(clean), b = collisions(noisy);
  EXPECT_GT(b.mean - a.mean, 2.0 * std::sqrt(a.se * a.se + b.se * b.se));
  EXPECT_GT(noisy.miss_detections, 0.0);
  EXPECT_EQ(clean.miss_detections, 0.0);
}

TEST(Run, PuChannelsAreAvoided) {
  ScenarioConfig c = small(MacAlgorithm::CsmaF, 4, 4);
  c.replications = 1;
  c.pu_schedule = {{0, c.horizon, {1, 2}}};
  RunOptions o;
  o.slot_observer = [](const SlotOutcome& s) {
    for (const auto& [ch, ids] : s.transmissions) EXPECT_GE(ch, 3);
  };
  const auto r = run(c, o);
  EXPECT_GT(r.efficiency.mean, 0.0);
}

TEST(Run, ScriptedActivityKeepsSuOutUntilJoin) {
  ScenarioConfig c = small(MacAlgorithm::Csma, 2, 2);
  c.replications = 1;
  c.su_activity = {{2, 10'000, std::nullopt}};
  const auto r = run(c);
  EXPECT_GE(r.replications[0].accounts[1].idle, 10'000);
  EXPECT_GT(r.replications[0].delivered_slots[1], 0.0);
}

TEST(Run, EventLogFormat) {
  ScenarioConfig c = small(MacAlgorithm::CsmaF, 2, 2);
  c.horizon = 500;
  c.replications = 1;
  std::ostringstream log;
  RunOptions o;
  o.event_log = &log;
  run(c, o);
  std::istringstream in(log.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    std::istringstream f(line);
    std::int64_t slot;
    int su;
    std::string from, to;
    ASSERT_TRUE(static_cast<bool>(f >> slot >> su >> from >> to)) << line;
    EXPECT_NE(from, to);
    if (to == "transmitting") EXPECT_NE(line.find("ch="), std::string::npos);
    ++lines;
  }
  EXPECT_GT(lines, 10);
}

TEST(Validate, ConsistencyRules) {
  ScenarioConfig c;
  c.mac_algorithm = MacAlgorithm::CsmaF;
  c.su_info = SuInformationMode::None;
  EXPECT_THROW(c.validate(), ConfigError);
  set_algorithm(c, MacAlgorithm::CsmaF);
  EXPECT_NO_THROW(c.validate());
  c.horizon = 400;
  EXPECT_THROW(c.validate(), ConfigError);
  c.horizon = 100'000;
  c.replications = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.replications = 1;
  c.traffic.sensing_slots = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.traffic.sensing_slots = 1;
  c.rates = {1.0};
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Sweep, OrderingAndCommonSeeds) {
  ScenarioConfig base = small(MacAlgorithm::Csma, 4, 4);
  base.replications = 2;
  SweepSpec spec{"num_sus", {"6", "2", "10"}, {MacAlgorithm::Csma, MacAlgorithm::CsmaF}};
  RunOptions o;
  o.jobs = 2;
  const auto rows = sweep(base, spec, o);
  ASSERT_EQ(rows.size(), 6u);
  const std::vector<std::pair<std::string, std::string>> order{{"2", "csma"},  {"2", "csma_f"},  {"6", "csma"},
                                                               {"6", "csma_f"}, {"10", "csma"}, {"10", "csma_f"}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].value, order[i].first);
    EXPECT_EQ(to_string(rows[i].config.mac_algorithm), order[i].second);
    EXPECT_EQ(rows[i].config.seed, base.seed);
  }
  ScenarioConfig direct = rows[2].config;
  EXPECT_EQ(run(direct).efficiency.mean, rows[2].report.efficiency.mean);
}

TEST(Sweep, UnknownParameterRejected) {
  EXPECT_THROW(sweep(ScenarioConfig{}, SweepSpec{"colour", {"1"}, {}}), ConfigError);
  ScenarioConfig c;
  EXPECT_THROW(apply_sweep_value(c, "p_miss", "0.1"), ConfigError);  // needs bernoulli sensing
  EXPECT_THROW(apply_sweep_value(c, "num_sus", "ten"), ConfigError);
  apply_sweep_value(c, "packet_size", "30:70");
  EXPECT_EQ(c.traffic.packet_size_min, 30);
  EXPECT_EQ(c.traffic.packet_size_max, 70);
}
