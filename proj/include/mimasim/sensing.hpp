#pragma once

// Spectrum observation models: perfect, independent per-channel Bernoulli
// errors, and an averaged energy detector with side-lobe and IQ-image leakage.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "mimasim/core.hpp"

namespace mimasim {

struct PerfectSensing {};

struct BernoulliSensing {
  double p_false_alarm = 0.0;
  double p_miss = 0.0;
  struct Override {
    double p_false_alarm;
    double p_miss;
  };
  std::map<int, Override> per_channel;  // raw channel -> rates

  Override rates(int channel) const {
    auto it = per_channel.find(channel);
    return it == per_channel.end() ? Override{p_false_alarm, p_miss} : it->second;
  }
};

struct EnergyDetector {
  double noise_power = 1.0;      // per complex sample, linear
  double signal_snr_db = 42.0;   // per sample when a channel is occupied
  std::map<int, double> per_channel_snr_db;
  double threshold_tnr_db = 17.0;  // threshold over the expected noise-only statistic
  int averaging_depth = 10;        // K
  int samples_per_channel = 120;   // |D_n|
  double sidelobe_rel_db = -30.0;  // leaked into n +- 1, relative to the occupying signal
  double iq_image_rel_db = -19.5;  // leaked into the mirror channel, relative to the signal

  double snr_db(int channel) const {
    auto it = per_channel_snr_db.find(channel);
    return it == per_channel_snr_db.end() ? signal_snr_db : it->second;
  }

  // Expected statistic with nothing but noise on the channel.
  double noise_floor() const { return samples_per_channel * noise_power; }

  double threshold() const { return noise_floor() * std::pow(10.0, threshold_tnr_db / 10.0); }
};

using SensingModel = std::variant<PerfectSensing, BernoulliSensing, EnergyDetector>;

inline void validate(const SensingModel& model) {
  auto prob = [](double p, const char* what) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string(what) + " must lie in [0,1]");
  };
  if (auto* b = std::get_if<BernoulliSensing>(&model)) {
    prob(b->p_false_alarm, "p_false_alarm");
    prob(b->p_miss, "p_miss");
    for (const auto& [ch, o] : b->per_channel) {
      prob(o.p_false_alarm, "p_false_alarm");
      prob(o.p_miss, "p_miss");
    }
  } else if (auto* e = std::get_if<EnergyDetector>(&model)) {
    if (e->averaging_depth < 1) throw ConfigError("averaging_depth must be >= 1");
    if (e->samples_per_channel < 1) throw ConfigError("samples_per_channel must be >= 1");
    if (!(e->noise_power > 0.0)) throw ConfigError("noise_power must be > 0");
  }
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

// Non-noise power present on a channel during sensing.
struct InterferenceContext {
  int adjacent_occupied = 0;           // occupied neighbours n-1, n+1
  bool mirror_occupied = false;        // channel N_c + 1 - n occupied
  double adjacent_snr_db = 42.0;       // SNR of the neighbouring signal
  double mirror_snr_db = 42.0;         // SNR of the mirror signal
};

// y_n = (1/K) sum_k sum_{i in D_n} |x_{i,k} + w_{i,k}|^2. x is a constant-power
// phasor with random phase carrying the signal (if occupied) plus leakage; w is
// circular complex Gaussian noise.
inline double energy_statistic(const EnergyDetector& model, int channel, bool occupied,
                               const InterferenceContext& ctx, Rng& rng) {
  const double sigma2 = model.noise_power;
  double power = 0.0;
  if (occupied) power += sigma2 * db_to_linear(model.snr_db(channel));
  if (ctx.adjacent_occupied > 0)
    power += ctx.adjacent_occupied * sigma2 * db_to_linear(ctx.adjacent_snr_db + model.sidelobe_rel_db);
  if (ctx.mirror_occupied) power += sigma2 * db_to_linear(ctx.mirror_snr_db + model.iq_image_rel_db);

  const double amplitude = std::sqrt(power);
  std::normal_distribution<double> noise(0.0, std::sqrt(sigma2 / 2.0));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  const std::int64_t n = static_cast<std::int64_t>(model.samples_per_channel) * model.averaging_depth;
  double acc = 0.0;
  for (std::int64_t i = 0; i < n; ++i) {
    double re = noise(rng);
    double im = noise(rng);
    if (amplitude > 0.0) {
      const double th = phase(rng);
      re += amplitude * std::cos(th);
      im += amplitude * std::sin(th);
    }
    acc += re * re + im * im;
  }
  return acc / model.averaging_depth;
}

inline InterferenceContext interference_for(const EnergyDetector& model, int channel,
                                            const std::vector<bool>& busy, int total_channels) {
  InterferenceContext ctx;
  auto occ = [&](int c) { return c >= 1 && c <= total_channels && busy[static_cast<std::size_t>(c)]; };
  for (int c : {channel - 1, channel + 1}) {
    if (occ(c)) {
      ++ctx.adjacent_occupied;
      ctx.adjacent_snr_db = model.snr_db(c);
    }
  }
  const int mirror = total_channels + 1 - channel;
  if (mirror != channel && occ(mirror)) {
    ctx.mirror_occupied = true;
    ctx.mirror_snr_db = model.snr_db(mirror);
  }
  return ctx;
}

// `busy` is indexed by raw channel (size total_channels + 1). Returns the
// channels of `channels.available()` reported idle.
inline std::vector<int> sense(const SensingModel& model, const std::vector<bool>& busy,
                              const ChannelSet& channels, Rng& rng) {
  std::vector<int> out;
  out.reserve(channels.available().size());
  auto is_busy = [&](int c) { return busy[static_cast<std::size_t>(c)]; };
  if (std::holds_alternative<PerfectSensing>(model)) {
    for (int c : channels.available())
      if (!is_busy(c)) out.push_back(c);
  } else if (auto* b = std::get_if<BernoulliSensing>(&model)) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int c : channels.available()) {
      const auto r = b->rates(c);
      const bool reported_busy = is_busy(c) ? !(u(rng) < r.p_miss) : (u(rng) < r.p_false_alarm);
      if (!reported_busy) out.push_back(c);
    }
  } else {
    const auto& e = std::get<EnergyDetector>(model);
    const double gamma = e.threshold();
    for (int c : channels.available()) {
      const auto ctx = interference_for(e, c, busy, channels.total_channels());
      if (!(energy_statistic(e, c, is_busy(c), ctx, rng) > gamma)) out.push_back(c);
    }
  }
  return out;
}

inline std::vector<int> sense(const SensingModel& model, const std::set<int>& busy,
                              const ChannelSet& channels, Rng& rng) {
  std::vector<bool> mask(static_cast<std::size_t>(channels.total_channels()) + 1, false);
  for (int c : busy) mask.at(static_cast<std::size_t>(c)) = true;
  return sense(model, mask, channels, rng);
}

// ---------------------------------------------------------------------------
// Detection curves
// ---------------------------------------------------------------------------

enum class SensingScenario { Noise, Sidelobe, IqImage, Signal };

inline const char* to_string(SensingScenario s) {
  switch (s) {
    case SensingScenario::Noise: return "noise";
    case SensingScenario::Sidelobe: return "sidelobe";
    case SensingScenario::IqImage: return "iq-image";
    case SensingScenario::Signal: return "signal";
  }
  return "?";
}

inline constexpr SensingScenario kAllScenarios[] = {SensingScenario::Noise, SensingScenario::Sidelobe,
                                                    SensingScenario::IqImage, SensingScenario::Signal};

struct DetectionPoint {
  double tnr_db = 0.0;
  SensingScenario scenario = SensingScenario::Noise;
  std::int64_t trials = 0;
  std::optional<double> p_f;  // H0 scenarios
  std::optional<double> p_m;  // signal scenario
  int k = 1;
};

// Empirical P_F / P_M per threshold. The same statistic samples are compared
// against every threshold, so the curves are monotone in TNR by construction.
inline std::vector<DetectionPoint> detection_curves(EnergyDetector model, const std::vector<double>& tnr_db,
                                                    const std::vector<int>& k_values, std::int64_t trials,
                                                    std::uint64_t seed) {
  if (tnr_db.empty()) throw ConfigError("TNR sweep is empty");
  if (k_values.empty()) throw ConfigError("K list is empty");
  if (trials < 1) throw ConfigError("trials must be >= 1");
  std::vector<DetectionPoint> rows;
  for (int k : k_values) {
    model.averaging_depth = k;
    validate(SensingModel{model});
    for (auto scenario : kAllScenarios) {
      Rng rng = make_rng(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(scenario),
                         Stream::Sensing);
      InterferenceContext ctx;
      ctx.adjacent_snr_db = model.signal_snr_db;
      ctx.mirror_snr_db = model.signal_snr_db;
      bool occupied = false;
      switch (scenario) {
        case SensingScenario::Noise: break;
        case SensingScenario::Sidelobe: ctx.adjacent_occupied = 1; break;
        case SensingScenario::IqImage: ctx.mirror_occupied = true; break;
        case SensingScenario::Signal: occupied = true; break;
      }
      std::vector<double> y(static_cast<std::size_t>(trials));
      for (auto& v : y) v = energy_statistic(model, 1, occupied, ctx, rng);
      for (double t : tnr_db) {
        const double gamma = model.noise_floor() * db_to_linear(t);
        std::int64_t above = 0;
        for (double v : y) above += v > gamma;
        DetectionPoint p;
        p.tnr_db = t;
        p.scenario = scenario;
        p.trials = trials;
        p.k = k;
        const auto n = static_cast<double>(trials);
        if (occupied) p.p_m = static_cast<double>(trials - above) / n;
        else p.p_f = static_cast<double>(above) / n;
        rows.push_back(p);
      }
    }
  }
  return rows;
}

}  // namespace mimasim
