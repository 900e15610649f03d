#pragma once

// Slot-level throughput of M_k contending SUs on N_k collision channels:
// closed forms, an exact enumeration oracle, and numerical verification of the
// optimal-access and re-rendezvous results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mimasim::analysis {

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct TractabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kProbabilityTolerance = 1e-12;

// Largest number of joint outcomes the enumeration oracle will visit.
inline constexpr std::uint64_t kEnumerationLimit = 100'000'000;

// Per-SU channel selection law over N_k channels; 1 - sum is the abstain mass.
class AccessDistribution {
 public:
  AccessDistribution() = default;
  explicit AccessDistribution(std::vector<double> p) : p_(std::move(p)) { validate(); }

  static AccessDistribution uniform(int channels, double per_channel) {
    return AccessDistribution(std::vector<double>(static_cast<std::size_t>(channels), per_channel));
  }
  static AccessDistribution one_hot(int channels, int index0) {
    std::vector<double> p(static_cast<std::size_t>(channels), 0.0);
    p.at(static_cast<std::size_t>(index0)) = 1.0;
    return AccessDistribution(std::move(p));
  }

  std::size_t size() const noexcept { return p_.size(); }
  double operator[](std::size_t n) const noexcept { return p_[n]; }
  const std::vector<double>& values() const noexcept { return p_; }

  double transmit_probability() const noexcept {
    double s = 0.0;
    for (double v : p_) s += v;
    return s;
  }

 private:
  void validate() const {
    double s = 0.0;
    for (double v : p_) {
      if (!(v >= 0.0 && v <= 1.0)) throw ShapeError("access probability outside [0,1]");
      s += v;
    }
    if (s > 1.0 + kProbabilityTolerance) throw ShapeError("access probabilities sum above 1");
  }

  std::vector<double> p_;
};

// Columns are SUs, rows are channels.
class AccessMatrix {
 public:
  AccessMatrix() = default;
  explicit AccessMatrix(std::vector<AccessDistribution> columns) : cols_(std::move(columns)) {
    for (const auto& c : cols_)
      if (c.size() != cols_.front().size()) throw ShapeError("access columns differ in length");
  }

  std::size_t num_sus() const noexcept { return cols_.size(); }
  std::size_t num_channels() const noexcept { return cols_.empty() ? 0 : cols_.front().size(); }
  const AccessDistribution& column(std::size_t m) const { return cols_.at(m); }
  const std::vector<AccessDistribution>& columns() const noexcept { return cols_; }

 private:
  std::vector<AccessDistribution> cols_;
};

inline AccessMatrix symmetric_matrix(int sus, const AccessDistribution& p) {
  return AccessMatrix(std::vector<AccessDistribution>(static_cast<std::size_t>(sus), p));
}

// l SUs pinned to channels 1..l, the remaining M-l uniform over all N.
inline AccessMatrix rerendezvous_matrix(int sus, int channels, int rerendezvous) {
  std::vector<AccessDistribution> cols;
  for (int m = 0; m < rerendezvous; ++m) cols.push_back(AccessDistribution::one_hot(channels, m));
  for (int m = rerendezvous; m < sus; ++m)
    cols.push_back(AccessDistribution::uniform(channels, 1.0 / channels));
  return AccessMatrix(std::move(cols));
}

// Y(P) = sum_n sum_m p_mn prod_{j != m} (1 - p_jn)
inline double expected_successes(const AccessMatrix& P) {
  const std::size_t M = P.num_sus();
  const std::size_t N = P.num_channels();
  double total = 0.0;
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t m = 0; m < M; ++m) {
      double term = P.column(m)[n];
      for (std::size_t j = 0; j < M && term != 0.0; ++j)
        if (j != m) term *= 1.0 - P.column(j)[n];
      total += term;
    }
  }
  return total;
}

// Exact expectation by visiting every joint action with positive probability.
inline double enumerate_expected_successes(const AccessMatrix& P) {
  const std::size_t M = P.num_sus();
  const std::size_t N = P.num_channels();

  struct Action {
    int channel;  // -1 abstains
    double prob;
  };
  std::vector<std::vector<Action>> actions(M);
  std::uint64_t outcomes = 1;
  for (std::size_t m = 0; m < M; ++m) {
    const auto& col = P.column(m);
    double abstain = 1.0;
    for (std::size_t n = 0; n < N; ++n) {
      abstain -= col[n];
      if (col[n] > 0.0) actions[m].push_back({static_cast<int>(n), col[n]});
    }
    if (abstain > kProbabilityTolerance) actions[m].push_back({-1, abstain});
    if (actions[m].empty()) actions[m].push_back({-1, 1.0});
    outcomes *= actions[m].size();
    if (outcomes > kEnumerationLimit)
      throw TractabilityError("enumeration exceeds " + std::to_string(kEnumerationLimit) + " outcomes");
  }
  if (M == 0) return 0.0;

  std::vector<std::size_t> digit(M, 0);
  std::vector<int> occupancy(N, 0);
  long double sum = 0.0L;
  long double carry = 0.0L;  // Neumaier compensation
  for (;;) {
    std::fill(occupancy.begin(), occupancy.end(), 0);
    long double weight = 1.0L;
    for (std::size_t m = 0; m < M; ++m) {
      const Action& a = actions[m][digit[m]];
      weight *= a.prob;
      if (a.channel >= 0) ++occupancy[static_cast<std::size_t>(a.channel)];
    }
    int singles = 0;
    for (int c : occupancy) singles += (c == 1);
    if (singles > 0) {
      const long double term = weight * singles;
      const long double t = sum + term;
      carry += std::fabs(sum) >= std::fabs(term) ? (sum - t) + term : (term - t) + sum;
      sum = t;
    }
    std::size_t m = 0;
    while (m < M && ++digit[m] == actions[m].size()) digit[m++] = 0;
    if (m == M) break;
  }
  return static_cast<double>(sum + carry);
}

// All SUs share p: Y(p) = sum_n M p_n (1 - p_n)^(M-1).
inline double symmetric_expected_successes(const AccessDistribution& p, int sus) {
  if (sus < 0) throw ShapeError("negative SU count");
  double total = 0.0;
  for (double pn : p.values()) total += sus * pn * std::pow(1.0 - pn, sus - 1);
  return total;
}

inline void require_positive(int sus, int channels) {
  if (sus < 1 || channels < 1) throw DomainError("M and N must both be >= 1");
}

inline double optimal_symmetric_probability(int sus, int channels) {
  require_positive(sus, channels);
  return std::min(1.0 / channels, 1.0 / sus);
}

inline double max_expected_successes(int sus, int channels) {
  require_positive(sus, channels);
  if (sus > channels) return channels * std::pow(1.0 - 1.0 / sus, sus - 1);
  return sus * std::pow(1.0 - 1.0 / channels, sus - 1);
}

struct Theorem1Report {
  int sus = 0;
  int channels = 0;
  double argmax_p = 0.0;
  double max_value = 0.0;
  double expected_p = 0.0;
  double expected_value = 0.0;
  bool formula_match = false;
};

// Grid search over a common per-channel probability p in [0, 1/N], followed by
// golden-section refinement around the best grid cell.
inline Theorem1Report verify_theorem1(int sus, int channels, double grid_step = 1e-3) {
  require_positive(sus, channels);
  if (!(grid_step > 0.0)) throw DomainError("grid step must be positive");
  const double hi = 1.0 / channels;
  auto value = [&](double p) {
    return static_cast<double>(channels) * sus * p * std::pow(1.0 - p, sus - 1);
  };

  double best_p = 0.0;
  double best_v = value(0.0);
  const auto steps = static_cast<std::int64_t>(std::ceil(hi / grid_step));
  for (std::int64_t i = 1; i <= steps; ++i) {
    const double p = std::min(hi, static_cast<double>(i) * grid_step);
    const double v = value(p);
    if (v > best_v) {
      best_v = v;
      best_p = p;
    }
  }

  double a = std::max(0.0, best_p - grid_step);
  double b = std::min(hi, best_p + grid_step);
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = value(c);
  double fd = value(d);
  for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = value(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = value(d);
    }
  }
  for (double p : {a, b, 0.5 * (a + b)}) {
    if (value(p) > best_v) {
      best_v = value(p);
      best_p = p;
    }
  }

  Theorem1Report r;
  r.sus = sus;
  r.channels = channels;
  r.argmax_p = best_p;
  r.max_value = best_v;
  r.expected_p = optimal_symmetric_probability(sus, channels);
  r.expected_value = max_expected_successes(sus, channels);
  r.formula_match = std::fabs(r.argmax_p - r.expected_p) <= grid_step &&
                    std::fabs(r.max_value - r.expected_value) <= 1e-9;
  return r;
}

inline void require_rerendezvous_scope(int sus, int channels, int rerendezvous) {
  require_positive(sus, channels);
  if (sus > channels) throw DomainError("re-rendezvous analysis requires M <= N");
  if (rerendezvous < 0 || rerendezvous > sus) throw DomainError("l must lie in [0, M]");
}

// Y' for l pinned SUs on distinct channels and M-l SUs uniform over all N:
//   l (1-1/N)^(M-l) + (N-l) (M-l)/N (1-1/N)^(M-l-1)
inline double rerendezvous_expected_successes(int sus, int channels, int rerendezvous) {
  require_rerendezvous_scope(sus, channels, rerendezvous);
  const double q = 1.0 - 1.0 / channels;
  const int free_sus = sus - rerendezvous;
  const double pinned = rerendezvous * std::pow(q, free_sus);
  const double others = free_sus == 0 ? 0.0
                                      : static_cast<double>(channels - rerendezvous) * free_sus /
                                            channels * std::pow(q, free_sus - 1);
  return pinned + others;
}

// The variant with exponents N-l and N-l-1 (and l in place of the undefined
// l_r). Kept for comparison; it disagrees with enumeration unless M == N.
inline double rerendezvous_expected_successes_printed(int sus, int channels, int rerendezvous) {
  require_rerendezvous_scope(sus, channels, rerendezvous);
  const double q = 1.0 - 1.0 / channels;
  const int l = rerendezvous;
  return l * std::pow(q, channels - l) +
         static_cast<double>(channels - l) * (sus - l) / channels * std::pow(q, channels - l - 1);
}

struct Theorem2Report {
  int sus = 0;
  int channels = 0;
  std::vector<double> gaps;  // Y'(l) - Y for l = 0..M, both by enumeration
  bool all_nonnegative = false;
  std::set<int> equality_set;
  bool holds = false;  // equality exactly at {0, 1}, strict gain elsewhere
};

inline Theorem2Report verify_theorem2(int sus, int channels) {
  require_rerendezvous_scope(sus, channels, 0);
  Theorem2Report r;
  r.sus = sus;
  r.channels = channels;
  const double baseline = enumerate_expected_successes(rerendezvous_matrix(sus, channels, 0));
  r.all_nonnegative = true;
  bool strict = true;
  for (int l = 0; l <= sus; ++l) {
    const double y =
        l == 0 ? baseline : enumerate_expected_successes(rerendezvous_matrix(sus, channels, l));
    const double gap = y - baseline;
    r.gaps.push_back(gap);
    if (gap < -kProbabilityTolerance) r.all_nonnegative = false;
    if (std::fabs(gap) < kProbabilityTolerance) r.equality_set.insert(l);
    if (l >= 2 && !(gap > kProbabilityTolerance)) strict = false;
  }
  const std::set<int> expected = sus >= 1 ? std::set<int>{0, 1} : std::set<int>{0};
  r.holds = r.all_nonnegative && strict && r.equality_set == expected;
  return r;
}

// f(l) = (MN + l^2 - Ml - l)/N - M (1 - 1/N)^l, with Y'(l) - Y = f(l) (1-1/N)^(M-l-1).
template <typename T = double>
T appendix_f(int sus, int channels, T l) {
  if (channels < 2) throw DomainError("appendix functions need N >= 2");
  const T M = sus, N = channels;
  return (M * N + l * l - M * l - l) / N - M * std::pow(T(1) - T(1) / N, l);
}

template <typename T = double>
T appendix_f_prime(int sus, int channels, T l) {
  if (channels < 2) throw DomainError("appendix functions need N >= 2");
  const T M = sus, N = channels;
  const T q = T(1) - T(1) / N;
  return (T(2) * l - M - T(1)) / N - M * std::pow(q, l) * std::log(q);
}

template <typename T = double>
T appendix_f_double_prime(int sus, int channels, T l) {
  if (channels < 2) throw DomainError("appendix functions need N >= 2");
  const T M = sus, N = channels;
  const T q = T(1) - T(1) / N;
  const T lq = std::log(q);
  return T(2) / N - M * std::pow(q, l) * lq * lq;
}

struct AppendixReport {
  int sus = 0;
  int channels = 0;
  double f0 = 0.0;
  double f1 = 0.0;
  double max_fd_error_first = 0.0;
  double max_fd_error_second = 0.0;
  double min_second_derivative = 0.0;  // over l in [1, M]
  bool holds = false;
};

// Finite-difference audit of f', f'' over l in [0, M]. The second difference
// is taken in long double: at h = 1e-6 double round-off alone is ~1e-3.
inline AppendixReport check_appendix(int sus, int channels, double step = 1e-6,
                                     double tolerance = 1e-4, double l_spacing = 0.05) {
  if (channels < 2 || sus < 2 || sus > channels) throw DomainError("appendix check needs 2 <= M <= N");
  AppendixReport r;
  r.sus = sus;
  r.channels = channels;
  r.f0 = appendix_f<double>(sus, channels, 0.0);
  r.f1 = appendix_f<double>(sus, channels, 1.0);
  r.min_second_derivative = appendix_f_double_prime<double>(sus, channels, 1.0);
  const long double h = step;
  const int points = static_cast<int>(std::lround(sus / l_spacing));
  for (int i = 0; i <= points; ++i) {
    const long double l = static_cast<long double>(i) * l_spacing;
    const long double fp = appendix_f<long double>(sus, channels, l + h);
    const long double fm = appendix_f<long double>(sus, channels, l - h);
    const long double f0 = appendix_f<long double>(sus, channels, l);
    const double d1 = static_cast<double>((fp - fm) / (2 * h));
    const double d2 = static_cast<double>((fp - 2 * f0 + fm) / (h * h));
    r.max_fd_error_first = std::max(
        r.max_fd_error_first, std::fabs(d1 - appendix_f_prime<double>(sus, channels, static_cast<double>(l))));
    r.max_fd_error_second =
        std::max(r.max_fd_error_second,
                 std::fabs(d2 - appendix_f_double_prime<double>(sus, channels, static_cast<double>(l))));
    if (l >= 1.0L)
      r.min_second_derivative = std::min(
          r.min_second_derivative, appendix_f_double_prime<double>(sus, channels, static_cast<double>(l)));
  }
  r.holds = std::fabs(r.f0) < 1e-12 && std::fabs(r.f1) < 1e-12 && r.max_fd_error_first < tolerance &&
            r.max_fd_error_second < tolerance && r.min_second_derivative > 0.0;
  return r;
}

}  // namespace mimasim::analysis
