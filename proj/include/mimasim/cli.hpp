#pragma once

// Subcommand implementations behind tools/mimasim. Each command reads a
// resolved Document, writes CSV into the output directory and returns a
// process exit code.

#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mimasim/analysis.hpp"
#include "mimasim/config.hpp"
#include "mimasim/engine.hpp"
#include "mimasim/sensing.hpp"

namespace mimasim::cli {

enum ExitCode : int { kOk = 0, kRuntimeFailure = 1, kValidationFailure = 2 };

struct Manifest {
  std::string command;
  std::optional<std::string> config_path;
  std::optional<std::string> preset;
  std::string out_dir = ".";
  std::vector<std::string> overrides;
  int jobs = 1;
  std::optional<std::string> event_log;
};

inline const char* kRunCsvHeader =
    "config_hash,algorithm,M,N,lambda,td_min,td_max,ts,efficiency_mean,efficiency_ci95,e_upper,collisions,"
    "false_alarms,miss_detections,seed,parameter,value";

namespace detail {

using config::format_number;

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

inline std::string run_row(const ScenarioConfig& c, const MetricsReport& r, const std::string& parameter,
                           const std::string& value) {
  std::string row = config::config_hash(c);
  auto add = [&](const std::string& s) { row += "," + s; };
  add(to_string(c.mac_algorithm));
  add(std::to_string(c.num_sus));
  add(std::to_string(c.channels.size()));
  add(format_number(c.traffic.mean_arrival_interval));
  add(std::to_string(c.traffic.packet_size_min));
  add(std::to_string(c.traffic.packet_size_max));
  add(std::to_string(c.sensing_window()));
  add(format_number(r.efficiency.mean));
  add(format_number(r.efficiency.ci95));
  add(format_number(r.e_upper));
  add(format_number(r.collisions));
  add(format_number(r.false_alarms));
  add(format_number(r.miss_detections));
  add(std::to_string(c.seed));
  add(parameter);
  add(value);
  return row;
}

inline void write_resolved(const std::filesystem::path& dir, const config::Document& doc) {
  auto f = open_out(dir / "resolved_config.json");
  f << config::to_json(doc).dump(2) << '\n';
}

}  // namespace detail

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

inline int cmd_simulate(const config::Document& doc, const Manifest& m, std::ostream& out) {
  const auto& cfg = doc.scenario;
  cfg.validate();
  std::optional<std::ofstream> log;
  if (m.event_log) log = detail::open_out(*m.event_log);
  RunOptions opts;
  opts.jobs = m.jobs;
  opts.event_log = log ? &*log : nullptr;
  const auto report = run(cfg, opts);

  const std::filesystem::path dir(m.out_dir);
  auto csv = detail::open_out(dir / "simulate.csv");
  csv << kRunCsvHeader << '\n' << detail::run_row(cfg, report, "", "") << '\n';
  detail::write_resolved(dir, doc);

  out << std::fixed << std::setprecision(5) << "algorithm " << to_string(cfg.mac_algorithm) << ", M=" << cfg.num_sus
      << ", N=" << cfg.channels.size() << ", replications " << cfg.replications << '\n'
      << "efficiency " << report.efficiency.mean << " +/- " << report.efficiency.ci95 << " (95% CI)\n"
      << "upper bound " << report.e_upper << '\n'
      << "collisions/replication " << report.collisions << ", idle channel-slots/replication "
      << report.idle_channel_slots << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

inline int cmd_sweep(const config::Document& doc, const Manifest& m, std::ostream& out) {
  if (!doc.sweep) throw ConfigError("sweep needs a 'sweep' section (parameter, values or range)");
  RunOptions opts;
  opts.jobs = m.jobs;
  const auto rows = sweep(doc.scenario, *doc.sweep, opts);

  const std::filesystem::path dir(m.out_dir);
  auto csv = detail::open_out(dir / "sweep.csv");
  csv << kRunCsvHeader << '\n';
  out << std::left << std::setw(10) << doc.sweep->parameter << std::setw(8) << "alg" << "efficiency (95% CI)  upper\n";
  for (const auto& row : rows) {
    csv << detail::run_row(row.config, row.report, doc.sweep->parameter, row.value) << '\n';
    out << std::left << std::setw(10) << row.value << std::setw(8) << to_string(row.config.mac_algorithm)
        << std::fixed << std::setprecision(4) << row.report.efficiency.mean << " +/- " << row.report.efficiency.ci95
        << "  " << row.report.e_upper << '\n';
  }
  detail::write_resolved(dir, doc);
  return kOk;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

// Random access matrix: each SU splits its mass over N channels plus abstain.
inline analysis::AccessMatrix random_access_matrix(int sus, int channels, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<analysis::AccessDistribution> cols;
  for (int m = 0; m < sus; ++m) {
    std::vector<double> w(static_cast<std::size_t>(channels) + 1);
    double total = 0.0;
    for (auto& v : w) total += (v = e(rng));
    std::vector<double> p(static_cast<std::size_t>(channels));
    for (int n = 0; n < channels; ++n) p[static_cast<std::size_t>(n)] = w[static_cast<std::size_t>(n)] / total;
    cols.emplace_back(std::move(p));
  }
  return analysis::AccessMatrix(std::move(cols));
}

inline int cmd_analyze(const config::Document& doc, const Manifest& m, std::ostream& out) {
  using config::format_number;
  const auto& a = doc.analyze;
  const std::filesystem::path dir(m.out_dir);
  auto csv = detail::open_out(dir / "analyze.csv");
  csv << "check,M,N,l,value,expected,error,status,note\n";
  int failures = 0;
  auto row = [&](const char* check, int M, int N, const std::string& l, double value, double expected, double error,
                 bool ok, const std::string& note) {
    csv << check << ',' << M << ',' << N << ',' << l << ',' << format_number(value) << ',' << format_number(expected)
        << ',' << format_number(error) << ',' << (ok ? "pass" : "fail") << ',' << note << '\n';
    failures += !ok;
  };
  auto skip = [&](const char* check, int M, int N, const std::string& reason) {
    csv << check << ',' << M << ',' << N << ",,,,,skipped," << reason << '\n';
  };

  // Closed-form expected successes against brute-force enumeration.
  Rng rng = make_rng(doc.scenario.seed, 0, 0, Stream::Mac);
  std::uniform_int_distribution<int> pick_m(1, a.formula_max_sus), pick_n(1, a.formula_max_channels);
  double worst = 0.0;
  for (int i = 0; i < a.formula_instances; ++i) {
    const int M = pick_m(rng), N = pick_n(rng);
    const auto P = random_access_matrix(M, N, rng);
    const double f = analysis::expected_successes(P), e = analysis::enumerate_expected_successes(P);
    const double err = std::fabs(f - e);
    worst = std::max(worst, err);
    row("formula", M, N, "", f, e, err, err < 1e-12, "instance " + std::to_string(i));
  }
  out << "formula vs enumeration: " << a.formula_instances << " instances, max |error| " << worst << '\n';

  out << "\noptimal symmetric access\n   M   N   argmax_p   expected_p   max_value    expected_max  status\n";
  for (int M = a.theorem1_sus.from; M <= a.theorem1_sus.to; ++M)
    for (int N = a.theorem1_channels.from; N <= a.theorem1_channels.to; ++N) {
      if (M < 1 || N < 1) {
        skip("theorem1", M, N, "needs M>=1 and N>=1");
        continue;
      }
      const auto r = analysis::verify_theorem1(M, N, a.grid_step);
      row("theorem1", M, N, "", r.argmax_p, r.expected_p, std::fabs(r.argmax_p - r.expected_p), r.formula_match,
          "max " + format_number(r.max_value) + " expected " + format_number(r.expected_value));
      out << std::setw(4) << M << std::setw(4) << N << std::fixed << std::setprecision(6) << std::setw(11)
          << r.argmax_p << std::setw(13) << r.expected_p << std::setw(12) << r.max_value << std::setw(16)
          << r.expected_value << "  " << (r.formula_match ? "pass" : "FAIL") << '\n';
      out.unsetf(std::ios::fixed);
    }

  out << "\nre-rendezvous gain Y'(l) - Y\n";
  auto eq = detail::open_out(dir / "rerendezvous.csv");
  eq << "M,N,l,general_form,corrected,printed,delta_corrected,delta_printed\n";
  for (int M = a.theorem2_sus.from; M <= a.theorem2_sus.to; ++M)
    for (int N = a.theorem2_channels.from; N <= a.theorem2_channels.to; ++N) {
      if (M > N) {
        skip("theorem2", M, N, "theorem scope M≤N");
        continue;
      }
      if (M < 1) {
        skip("theorem2", M, N, "needs M>=1");
        continue;
      }
      try {
        const auto r = analysis::verify_theorem2(M, N);
        out << "M=" << M << " N=" << N << ':';
        for (int l = 0; l <= M; ++l) {
          const double gap = r.gaps[static_cast<std::size_t>(l)];
          const bool should_tie = l <= 1;
          const bool ok = should_tie ? std::fabs(gap) < 1e-12 : gap > 1e-12;
          row("theorem2", M, N, std::to_string(l), gap, 0.0, should_tie ? std::fabs(gap) : 0.0, ok,
              should_tie ? "equality expected" : "strict gain expected");
          out << ' ' << std::scientific << std::setprecision(3) << gap;
          out.unsetf(std::ios::scientific);

          const double general = analysis::expected_successes(analysis::rerendezvous_matrix(M, N, l));
          const double corrected = analysis::rerendezvous_expected_successes(M, N, l);
          const double printed = analysis::rerendezvous_expected_successes_printed(M, N, l);
          eq << M << ',' << N << ',' << l << ',' << format_number(general) << ',' << format_number(corrected) << ','
             << format_number(printed) << ',' << format_number(corrected - general) << ','
             << format_number(printed - general) << '\n';
        }
        out << (r.holds ? "  pass" : "  FAIL") << '\n';
      } catch (const analysis::TractabilityError& e) {
        skip("theorem2", M, N, std::string("intractable: ") + e.what());
      }
    }

  out << "\nappendix function checks\n";
  for (int M = a.appendix_sus.from; M <= a.appendix_sus.to; ++M)
    for (int N = a.appendix_channels.from; N <= a.appendix_channels.to; ++N) {
      if (M > N || M < 2 || N < 2) {
        skip("appendix", M, N, "scope 2≤M≤N");
        continue;
      }
      const auto r = analysis::check_appendix(M, N, a.fd_step, a.fd_tolerance);
      row("appendix", M, N, "", std::max(std::fabs(r.f0), std::fabs(r.f1)), 0.0,
          std::max(r.max_fd_error_first, r.max_fd_error_second), r.holds,
          "min f'' on [1,M] " + format_number(r.min_second_derivative));
      out << "M=" << M << " N=" << N << " |f(0)|,|f(1)| " << std::fabs(r.f0) << ',' << std::fabs(r.f1)
          << " fd errors " << r.max_fd_error_first << ',' << r.max_fd_error_second << " min f'' "
          << r.min_second_derivative << (r.holds ? " pass" : " FAIL") << '\n';
    }

  detail::write_resolved(dir, doc);
  out << '\n' << (failures == 0 ? "all checks passed" : std::to_string(failures) + " check(s) failed") << '\n';
  return failures == 0 ? kOk : kRuntimeFailure;
}

// ---------------------------------------------------------------------------
// sense-curves
// ---------------------------------------------------------------------------

inline int cmd_sense_curves(const config::Document& doc, const Manifest& m, std::ostream& out, std::ostream& err) {
  const auto& s = doc.sense_curves;
  if (s.tnr_db.empty()) throw ConfigError("sense_curves.tnr_db must not be empty");
  if (s.trials < 1000)
    err << "warning: " << s.trials << " trials per point; probabilities below 1e-3 are not resolvable\n";
  const auto points = detection_curves(s.detector, s.tnr_db, s.k_values, s.trials, doc.scenario.seed);

  const std::filesystem::path dir(m.out_dir);
  auto csv = detail::open_out(dir / "sense_curves.csv");
  csv << "tnr_db,scenario,trials,p_f,p_m,k\n";
  for (const auto& p : points)
    csv << config::format_number(p.tnr_db) << ',' << to_string(p.scenario) << ',' << p.trials << ','
        << (p.p_f ? config::format_number(*p.p_f) : "") << ',' << (p.p_m ? config::format_number(*p.p_m) : "") << ','
        << p.k << '\n';
  detail::write_resolved(dir, doc);
  out << points.size() << " detection points written to " << (dir / "sense_curves.csv").string() << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

inline int run_command(const Manifest& m, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  try {
    const auto tree = config::resolve_tree(m.preset, m.config_path, m.overrides);
    const auto doc = config::parse(tree);
    if (m.jobs < 1) throw ConfigError("--jobs must be >= 1");
    std::filesystem::create_directories(m.out_dir);
    if (m.command == "simulate") return cmd_simulate(doc, m, out);
    if (m.command == "sweep") return cmd_sweep(doc, m, out);
    if (m.command == "analyze") return cmd_analyze(doc, m, out);
    if (m.command == "sense-curves") return cmd_sense_curves(doc, m, out, err);
    throw ConfigError("unknown subcommand '" + m.command + "'");
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::invalid_argument& e) {
    err << "invalid input: " << e.what() << '\n';
    return kValidationFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
}

}  // namespace mimasim::cli
