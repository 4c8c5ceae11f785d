// covgame: run the coverage game experiments from a scenario file.
//
//   covgame run --scenario scenarios/damaged_10_23.json --out results/
//   covgame sweep-n --scenario ... --out ...
//   covgame sweep-energy --scenario ... --out ...
//   covgame certify --scenario ... --profile results/profile.csv
//   covgame bound --scenario ...
//
// Exit status: 0 when the reported profile is certified, 2 when it ran but
// certification failed, 1 on any error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "covgame/harness/experiments.hpp"
#include "covgame/harness/results.hpp"
#include "covgame/harness/scenario.hpp"

namespace hs = covgame::harness;

namespace {

struct Common {
  std::string scenario;
  std::string out = "results";
  std::optional<double> epsilon;
  std::optional<std::size_t> max_iter;
  bool quiet = false;
};

void add_common(CLI::App* app, Common& c, bool with_out) {
  app->add_option("--scenario", c.scenario, "scenario JSON file")->required()->check(CLI::ExistingFile);
  if (with_out) app->add_option("--out", c.out, "output directory");
  app->add_option("--epsilon", c.epsilon, "convergence accuracy in seconds")->check(CLI::PositiveNumber);
  app->add_option("--max-iter", c.max_iter, "total number of rounds P")->check(CLI::PositiveNumber);
  app->add_flag("--quiet", c.quiet, "print nothing on success");
}

hs::ScenarioConfig load(const Common& c) {
  auto cfg = hs::load_scenario(c.scenario);
  if (c.epsilon) cfg.docs.epsilon = *c.epsilon;
  if (c.max_iter) cfg.docs.max_iterations = *c.max_iter;
  cfg.validate();
  return cfg;
}

void print_report(const hs::ComparisonReport& r) {
  std::printf("%-12s value %.3f s  time %.3f s  iters %zu  evals %zu  certified %s (worst gain %.3f s)\n",
              r.method.c_str(), r.value, r.wall_time, r.iterations, r.evaluations, r.certified ? "yes" : "no",
              r.worst_gain);
}

int cmd_run(const Common& c, const std::string& method) {
  const auto cfg = load(c);
  const auto game = hs::build_game(cfg);
  std::vector<hs::ComparisonReport> reports;
  if (method == "both" || method == "distributed") reports.push_back(hs::run_distributed(game, cfg.docs));
  if (method == "both" || method == "centralized")
    reports.push_back(hs::run_centralized(game, cfg.centralized, cfg.docs));
  hs::emit_results(cfg, game, reports, c.out);
  if (!c.quiet) {
    for (const auto& r : reports) print_report(r);
    if (reports.front().docs) {
      const auto& d = *reports.front().docs;
      std::printf("converged at round %s of %zu (bound %zu)\n",
                  d.converged_at ? std::to_string(*d.converged_at).c_str() : "none", cfg.docs.max_iterations,
                  hs::round_bound(game, cfg.docs.epsilon));
    }
    std::printf("results in %s\n", c.out.c_str());
  }
  return reports.front().certified ? 0 : 2;
}

int cmd_sweep_n(const Common& c, std::vector<std::size_t> counts) {
  const auto cfg = load(c);
  if (counts.empty()) counts = cfg.sweep.counts;
  std::vector<hs::ComparisonReport> reports;
  const auto rows = hs::sweep_satellite_count(cfg, counts, &reports);
  std::filesystem::create_directories(c.out);
  std::ofstream os(std::filesystem::path(c.out) / "sweep_n.csv");
  hs::SweepCsv::counts(os, rows);
  bool certified = true;
  for (const auto& r : reports)
    if (r.docs) certified = certified && r.certified;
  if (!c.quiet)
    for (const auto& r : rows) std::printf("N=%-3zu %-12s value %.3f s  time %.3f s\n", r.n, r.method.c_str(), r.value, r.time);
  return certified ? 0 : 2;
}

int cmd_sweep_energy(const Common& c) {
  const auto cfg = load(c);
  if (cfg.sweep.energy_theta_max.empty()) throw std::runtime_error("scenario has no sweep.energy_theta_max values");
  const auto rows =
      hs::sweep_energy_coefficient(cfg, cfg.sweep.energy_agent, cfg.sweep.energy_neighbor, cfg.sweep.energy_theta_max);
  std::filesystem::create_directories(c.out);
  std::ofstream os(std::filesystem::path(c.out) / "sweep_energy.csv");
  hs::SweepCsv::energy(os, rows);
  bool certified = true;
  for (const auto& r : rows) certified = certified && r.certified;
  if (!c.quiet)
    for (const auto& r : rows)
      std::printf("theta_max %.6g rad  |theta_%zu| %.4f deg  |theta_%zu| %.4f deg\n", r.theta_max,
                  cfg.sweep.energy_agent + 1, hs::to_deg(r.abs_theta_agent), cfg.sweep.energy_neighbor + 1,
                  hs::to_deg(r.abs_theta_neighbor));
  return certified ? 0 : 2;
}

int cmd_certify(const Common& c, const std::string& profile_path) {
  const auto cfg = load(c);
  const auto game = hs::build_game(cfg);
  std::ifstream in(profile_path);
  if (!in) throw std::runtime_error("cannot open " + profile_path);
  const auto profile = hs::read_profile_csv(in, game.size());
  const auto rep = covgame::certify_epsilon_equilibrium(game, profile, cfg.docs.epsilon, cfg.docs.certify_resolution,
                                                        cfg.docs.scalar, cfg.docs.workers);
  if (!c.quiet) {
    std::printf("value %.3f s\n", covgame::global_value(game, profile));
    std::printf("worst unilateral gain %.6f s (agent %zu), epsilon %.6g s: %s\n", rep.worst_gain,
                rep.worst_agent ? *rep.worst_agent + 1 : 0, cfg.docs.epsilon, rep.certified ? "certified" : "not certified");
  }
  return rep.certified ? 0 : 2;
}

int cmd_bound(const Common& c) {
  const auto cfg = load(c);
  const auto game = hs::build_game(cfg);
  const auto env = hs::potential_envelope(game);
  const auto p = covgame::iteration_bound(env.phi_min, env.phi_max, cfg.docs.epsilon);
  if (c.quiet)
    std::printf("%zu\n", p);
  else
    std::printf("phi_min %.6f s  phi_max %.6f s  epsilon %.6g s  bound %zu rounds (configured %zu)\n", env.phi_min,
                env.phi_max, cfg.docs.epsilon, p, cfg.docs.max_iterations);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed coverage game for satellite constellations"};
  app.require_subcommand(1);

  Common run_opts, sweep_n_opts, sweep_e_opts, cert_opts, bound_opts;
  std::string method = "both";
  std::vector<std::size_t> counts;
  std::string profile_path;

  auto* run = app.add_subcommand("run", "run one scenario with one or both methods");
  add_common(run, run_opts, true);
  run->add_option("--method", method, "distributed, centralized or both")
      ->check(CLI::IsMember({"both", "distributed", "centralized"}));

  auto* sweep_n = app.add_subcommand("sweep-n", "both methods over several satellite counts");
  add_common(sweep_n, sweep_n_opts, true);
  sweep_n->add_option("--counts", counts, "satellite counts (default: from the scenario)");

  auto* sweep_e = app.add_subcommand("sweep-energy", "distributed runs over one agent's theta_max");
  add_common(sweep_e, sweep_e_opts, true);

  auto* certify = app.add_subcommand("certify", "re-certify a stored profile.csv");
  add_common(certify, cert_opts, false);
  certify->add_option("--profile", profile_path, "profile.csv to check")->required()->check(CLI::ExistingFile);

  auto* bound = app.add_subcommand("bound", "print the worst-case round bound");
  add_common(bound, bound_opts, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*run) return cmd_run(run_opts, method);
    if (*sweep_n) return cmd_sweep_n(sweep_n_opts, counts);
    if (*sweep_e) return cmd_sweep_energy(sweep_e_opts);
    if (*certify) return cmd_certify(cert_opts, profile_path);
    if (*bound) return cmd_bound(bound_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
