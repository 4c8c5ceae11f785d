#pragma once

// Result files: comparison.csv, trace.csv, profile.csv and summary.json.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "covgame/docs.hpp"
#include "covgame/harness/experiments.hpp"
#include "covgame/harness/scenario.hpp"

namespace covgame::harness {

inline double to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

inline void write_comparison_csv(std::ostream& os, std::span<const ComparisonReport> reports) {
  os << "method,value_s,time_s,iters,certified\n";
  os.precision(17);
  for (const auto& r : reports)
    os << r.method << ',' << r.value << ',' << r.wall_time << ',' << r.iterations << ',' << (r.certified ? 1 : 0)
       << '\n';
}

/// One row per round.  wall_time_s follows the four required columns.
inline void write_trace_csv(std::ostream& os, std::span<const RoundTrace> traces) {
  os << "iter,phi_s,n_innovators,max_regret_s,wall_time_s\n";
  os.precision(17);
  for (const auto& t : traces)
    os << t.iteration << ',' << t.phi << ',' << t.innovators.size() << ',' << t.max_regret() << ',' << t.wall_time
       << '\n';
}

/// Active agents only, 1-based, theta in degrees.
inline void write_profile_csv(std::ostream& os, const GameInstance& g, std::span<const double> theta) {
  os << "agent,theta_deg,energy_penalty\n";
  os.precision(17);
  for (std::size_t k = 0; k < g.size() && k < theta.size(); ++k)
    if (g.agent(k).active) os << k + 1 << ',' << to_deg(theta[k]) << ',' << energy_penalty(g.agent(k), theta[k]) << '\n';
}

/// Reads a profile.csv back into a full-length profile (radians).  Agents not
/// listed keep theta = 0.
inline StrategyProfile read_profile_csv(std::istream& is, std::size_t n_agents) {
  StrategyProfile p{std::vector<double>(n_agents, 0.0)};
  std::string line;
  if (!std::getline(is, line) || line.rfind("agent,theta_deg", 0) != 0)
    throw std::runtime_error("profile csv: missing 'agent,theta_deg,...' header");
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string agent, theta;
    if (!std::getline(ls, agent, ',') || !std::getline(ls, theta, ','))
      throw std::runtime_error("profile csv: malformed row " + std::to_string(row));
    std::size_t k = 0;
    double deg = 0.0;
    try {
      k = std::stoul(agent);
      deg = std::stod(theta);
    } catch (const std::exception&) {
      throw std::runtime_error("profile csv: malformed row " + std::to_string(row));
    }
    if (k < 1 || k > n_agents) throw std::runtime_error("profile csv: agent out of range on row " + std::to_string(row));
    p[k - 1] = deg * std::numbers::pi / 180.0;
  }
  return p;
}

struct SweepCsv {
  static void counts(std::ostream& os, std::span<const SweepRow> rows) {
    os << "N,method,value,time\n";
    os.precision(17);
    for (const auto& r : rows) os << r.n << ',' << r.method << ',' << r.value << ',' << r.time << '\n';
  }
  static void energy(std::ostream& os, std::span<const EnergyRow> rows) {
    os << "theta_max,abs_theta_k,abs_theta_neighbor\n";
    os.precision(17);
    for (const auto& r : rows) os << r.theta_max << ',' << r.abs_theta_agent << ',' << r.abs_theta_neighbor << '\n';
  }
};

/// Least-squares line through (k, phase_k) over the active agents; phase is
/// M_k(t0) + theta_k in degrees.  The RMS residual says how close the final
/// phases are to an even spread.
struct PhaseFit {
  double slope_deg = 0.0;
  double intercept_deg = 0.0;
  double rms_residual_deg = 0.0;
  std::size_t points = 0;
};

inline PhaseFit fit_phase_line(const GameInstance& g, std::span<const double> mean_anomaly0,
                               std::span<const double> theta) {
  PhaseFit f;
  std::vector<double> xs, ys;
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!g.agent(k).active) continue;
    xs.push_back(static_cast<double>(k + 1));
    ys.push_back(to_deg(mean_anomaly0[k] + theta[k]));
  }
  f.points = xs.size();
  if (xs.size() < 2) return f;
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  f.slope_deg = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.intercept_deg = (sy - f.slope_deg * sx) / n;
  double ss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (f.intercept_deg + f.slope_deg * xs[i]);
    ss += r * r;
  }
  f.rms_residual_deg = std::sqrt(ss / n);
  return f;
}

inline nlohmann::json report_json(const ComparisonReport& r) {
  nlohmann::json theta = nlohmann::json::array();
  for (double t : r.theta) theta.push_back(to_deg(t));
  return {{"method", r.method},         {"value_s", r.value},         {"wall_time_s", r.wall_time},
          {"iterations", r.iterations}, {"evaluations", r.evaluations}, {"certified", r.certified},
          {"worst_gain_s", r.worst_gain}, {"theta_deg", theta}};
}

/// Writes the four result files into `out_dir` (created if needed).  With no
/// reports the CSVs carry headers only.
inline void emit_results(const ScenarioConfig& cfg, const GameInstance& g, std::span<const ComparisonReport> reports,
                         const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  auto open = [&](const char* name) {
    std::ofstream os(out_dir / name);
    if (!os) throw std::runtime_error("cannot write " + (out_dir / name).string());
    return os;
  };

  const ComparisonReport* distributed = nullptr;
  for (const auto& r : reports)
    if (r.docs && !distributed) distributed = &r;
  const ComparisonReport* profile_source = distributed ? distributed : (reports.empty() ? nullptr : &reports.front());

  {
    auto os = open("comparison.csv");
    write_comparison_csv(os, reports);
  }
  {
    auto os = open("trace.csv");
    if (distributed)
      write_trace_csv(os, distributed->docs->traces);
    else
      write_trace_csv(os, {});
  }
  {
    auto os = open("profile.csv");
    if (profile_source)
      write_profile_csv(os, g, profile_source->theta);
    else
      write_profile_csv(os, g, {});
  }

  const auto env = potential_envelope(g);
  nlohmann::json summary{
      {"scenario", cfg.name},
      {"config", to_json(cfg)},
      {"constants",
       {{"mu_km3_s2", cfg.constants.mu},
        {"j2", cfg.constants.j2},
        {"earth_radius_km", cfg.constants.re},
        {"earth_rotation_rad_s", cfg.constants.omega_e}}},
      {"grid_cells", g.grid().n_steps()},
      {"active_agents", g.active_count()},
      {"potential_envelope_s", {{"phi_min", env.phi_min}, {"phi_max", env.phi_max}}},
      {"iteration_bound", iteration_bound(env.phi_min, env.phi_max, cfg.docs.epsilon)},
      {"configured_max_iterations", cfg.docs.max_iterations},
  };
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& r : reports) methods.push_back(report_json(r));
  summary["methods"] = methods;
  if (distributed) {
    const auto& d = *distributed->docs;
    summary["rounds_run"] = d.traces.size();
    summary["converged_at"] = d.converged_at ? nlohmann::json(*d.converged_at) : nlohmann::json(nullptr);
    summary["initial_value_s"] = d.initial_phi;
  } else {
    summary["rounds_run"] = 0;
    summary["converged_at"] = nullptr;
  }
  if (profile_source) {
    const auto spec = cfg.constellation.spec(g.size());
    const auto fit = fit_phase_line(g, spec.mean_anomaly0, profile_source->theta);
    summary["phase_fit"] = {{"method", profile_source->method},
                            {"slope_deg", fit.slope_deg},
                            {"intercept_deg", fit.intercept_deg},
                            {"rms_residual_deg", fit.rms_residual_deg},
                            {"points", fit.points}};
  }
  auto os = open("summary.json");
  os << summary.dump(2) << '\n';
}

}  // namespace covgame::harness
