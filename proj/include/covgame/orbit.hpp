#pragma once

// Circular LEO constellation under secular J2 drift, observing one ground
// target.
//
// All satellites share a, i, RAAN and differ only in mean anomaly.  A phase
// adjustment theta_k shifts the mean anomaly:
//
//   M_k(theta_k, t) = M_k(t0) + theta_k + b_M (t - t0)
//   Omega(t)        = Omega(t0) + b_Omega (t - t0)
//
// Position chain (R_* are counterclockwise rotations):
//
//   X_o   = a [cos M, sin M, 0]
//   X_ECI = R_z(Omega) R_x(i) R_z(omega) X_o
//   X_ECF = R_z(-(G0 + omega_e (t - t0))) X_ECI
//
// The target is visible when the geocentric angle between X_ECF and the
// target's position is at most rho_bar.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "covgame/game.hpp"
#include "covgame/measure.hpp"

namespace covgame::orbit {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

inline Mat3 rot_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{{1.0, 0.0, 0.0}, {0.0, c, -s}, {0.0, s, c}}};
}
inline Mat3 rot_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{{c, 0.0, s}, {0.0, 1.0, 0.0}, {-s, 0.0, c}}};
}
inline Mat3 rot_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  return {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
}

inline Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) r[i][j] += a[i][k] * b[k][j];
  return r;
}
inline Vec3 operator*(const Mat3& a, const Vec3& v) {
  return {a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2], a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
          a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2]};
}
inline Mat3 transpose(const Mat3& a) {
  Mat3 r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[j][i];
  return r;
}
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

/// Standard WGS-84 / EGM values.
struct OrbitConstants {
  double mu = 398600.4418;         // km^3/s^2
  double j2 = 1.08262668e-3;       // dimensionless
  double re = 6378.137;            // km
  double omega_e = 7.2921159e-5;   // rad/s

  void validate() const {
    if (!(mu > 0.0 && j2 >= 0.0 && re > 0.0 && omega_e >= 0.0))
      throw std::invalid_argument("OrbitConstants: mu and Re must be positive, J2 and omega_e non-negative");
  }
};

struct ConstellationSpec {
  double a = 0.0;              // km
  double e = 0.0;
  double inc = 0.0;            // rad
  double raan0 = 0.0;          // rad
  double arg_perigee = 0.0;    // rad
  std::vector<double> mean_anomaly0;  // rad, one per satellite
  double gmst0 = 0.0;          // rad

  std::size_t size() const { return mean_anomaly0.size(); }

  /// n satellites with M_k(t0) = k * phase_step, k = 0..n-1.
  static ConstellationSpec evenly_phased(std::size_t n, double a, double inc, double raan0, double gmst0,
                                         double phase_step) {
    ConstellationSpec s;
    s.a = a;
    s.inc = inc;
    s.raan0 = raan0;
    s.gmst0 = gmst0;
    s.mean_anomaly0.resize(n);
    for (std::size_t k = 0; k < n; ++k) s.mean_anomaly0[k] = static_cast<double>(k) * phase_step;
    return s;
  }

  void validate(const OrbitConstants& c) const {
    if (e != 0.0 || arg_perigee != 0.0)
      throw std::invalid_argument("ConstellationSpec: only circular orbits (e = 0, omega = 0) are modeled");
    if (!(a > c.re)) throw std::invalid_argument("ConstellationSpec: semi-major axis must exceed Earth radius");
    if (mean_anomaly0.empty()) throw std::invalid_argument("ConstellationSpec: no satellites");
  }
};

struct TargetSpec {
  double longitude = 0.0;  // rad east
  double latitude = 0.0;   // rad north
  double rho_bar = 0.0;    // rad

  void validate() const {
    if (std::abs(latitude) > kPi / 2) throw std::invalid_argument("TargetSpec: |latitude| must not exceed 90 deg");
    if (!(rho_bar > 0.0 && rho_bar < kPi / 2))
      throw std::invalid_argument("TargetSpec: rho_bar must lie in (0, 90 deg)");
  }
};

struct DriftRates {
  double raan_rate = 0.0;          // rad/s
  double mean_anomaly_rate = 0.0;  // rad/s
};

/// Mean motion sqrt(mu / a^3).
inline double mean_motion(const OrbitConstants& c, double a) { return std::sqrt(c.mu / (a * a * a)); }

inline double orbital_period(const OrbitConstants& c, double a) { return 2.0 * kPi / mean_motion(c, a); }

inline DriftRates drift_rates(const OrbitConstants& c, const ConstellationSpec& s) {
  const double n = mean_motion(c, s.a);
  const double one_e2 = 1.0 - s.e * s.e;
  const double ratio = c.re / s.a;
  const double cj2 = 3.0 * n * c.j2 / (2.0 * one_e2 * one_e2) * ratio * ratio;
  const double sin_i = std::sin(s.inc);
  return {-cj2 * std::cos(s.inc), n - cj2 * std::sqrt(one_e2) * (1.5 * sin_i * sin_i - 1.0)};
}

/// Perifocal -> Earth-fixed rotation at time t (seconds since t0).
inline Mat3 orbit_to_ecf(const OrbitConstants& c, const ConstellationSpec& s, const DriftRates& r, double t) {
  const double raan = s.raan0 + r.raan_rate * t;
  const Mat3 to_eci = rot_z(raan) * rot_x(s.inc) * rot_z(s.arg_perigee);
  return rot_z(-(s.gmst0 + c.omega_e * t)) * to_eci;
}

/// Earth-fixed position (km) of satellite k after phase adjustment theta at
/// time t (seconds since t0).
inline Vec3 satellite_position_ecf(const OrbitConstants& c, const ConstellationSpec& s, const DriftRates& r,
                                   std::size_t k, double theta, double t) {
  const double m = (s.mean_anomaly0.at(k) + theta) + r.mean_anomaly_rate * t;
  const Vec3 xo{s.a * std::cos(m), s.a * std::sin(m), 0.0};
  return orbit_to_ecf(c, s, r, t) * xo;
}

/// Spherical-Earth target position (km).
inline Vec3 target_position_ecf(const OrbitConstants& c, const TargetSpec& tgt) {
  const double cl = std::cos(tgt.latitude);
  return {c.re * cl * std::cos(tgt.longitude), c.re * cl * std::sin(tgt.longitude), c.re * std::sin(tgt.latitude)};
}

inline double geocentric_angle(const Vec3& a, const Vec3& b) {
  const double na = norm(a), nb = norm(b);
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("geocentric_angle: zero vector");
  return std::acos(std::clamp(dot(a, b) / (na * nb), -1.0, 1.0));
}

/// Coverage by evaluating the full position chain at every cell's left edge.
inline CoverageSet coverage_set(const OrbitConstants& c, const ConstellationSpec& s, const DriftRates& r,
                                const TargetSpec& tgt, const TimeGrid& grid, std::size_t k, double theta) {
  const Vec3 xt = target_position_ecf(c, tgt);
  CoverageSet out(grid);
  for (std::size_t j = 0; j < grid.n_steps(); ++j) {
    const double t = grid.cell_start(j) - grid.t0();
    if (geocentric_angle(satellite_position_ecf(c, s, r, k, theta, t), xt) <= tgt.rho_bar) out.insert(j);
  }
  return out;
}

/// Precomputed visibility tables for one orbit plane and one target.
///
/// With u_j the unit target vector expressed in the perifocal frame at cell j,
/// cos(rho) = u_x cos M + u_y sin M.  Splitting M = alpha + b_M t gives
/// cos(rho) = cos(alpha) p_j + sin(alpha) q_j, so a coverage set costs two
/// multiply-adds per cell.
class VisibilityModel {
 public:
  VisibilityModel(const OrbitConstants& c, const ConstellationSpec& s, const TargetSpec& tgt, const TimeGrid& grid)
      : constants_(c), spec_(s), target_(tgt), grid_(grid), rates_(drift_rates(c, s)),
        cos_rho_bar_(std::cos(tgt.rho_bar)), p_(grid.n_steps()), q_(grid.n_steps()) {
    const Vec3 xt = target_position_ecf(c, tgt);
    const double nt = norm(xt);
    const Vec3 ut{xt[0] / nt, xt[1] / nt, xt[2] / nt};
    for (std::size_t j = 0; j < grid.n_steps(); ++j) {
      const double t = grid.cell_start(j) - grid.t0();
      const Vec3 u = transpose(orbit_to_ecf(c, s, rates_, t)) * ut;
      const double bt = rates_.mean_anomaly_rate * t;
      const double cb = std::cos(bt), sb = std::sin(bt);
      p_[j] = u[0] * cb + u[1] * sb;
      q_[j] = u[1] * cb - u[0] * sb;
    }
    // cos(rho) = |(p, q)| cos(alpha - phase).  Cells whose amplitude is below
    // the threshold are never visible; the rest are visible only for alpha
    // within rho_bar of their phase.  Keep the latter sorted by phase.
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < grid.n_steps(); ++j)
      if (std::hypot(p_[j], q_[j]) >= cos_rho_bar_ - 1e-12) order.push_back(j);
    auto phase = [&](std::size_t j) { return std::atan2(q_[j], p_[j]); };
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return phase(a) < phase(b); });
    for (std::size_t j : order) {
      cand_.push_back(j);
      cand_phase_.push_back(phase(j));
      cand_p_.push_back(p_[j]);
      cand_q_.push_back(q_[j]);
    }
    // Past a right angle the window bound no longer holds; scan everything.
    window_ = tgt.rho_bar < 0.5 * std::numbers::pi ? tgt.rho_bar + 1e-6 : 4.0;
  }

  /// Calls visit(j) for every cell visible to a satellite whose mean anomaly
  /// at t0 is `alpha`.  Only candidates whose phase lies within the window of
  /// alpha are tested.
  template <typename Visit>
  void for_each_visible(double alpha, Visit&& visit) const {
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    auto scan = [&](double lo, double hi) {
      const auto first = std::lower_bound(cand_phase_.begin(), cand_phase_.end(), lo) - cand_phase_.begin();
      const auto last = std::upper_bound(cand_phase_.begin(), cand_phase_.end(), hi) - cand_phase_.begin();
      for (auto i = first; i < last; ++i)
        if (ca * cand_p_[i] + sa * cand_q_[i] >= cos_rho_bar_) visit(cand_[i]);
    };
    constexpr double pi = std::numbers::pi;
    const double a = std::remainder(alpha, 2.0 * pi);  // in [-pi, pi]
    const double lo = a - window_, hi = a + window_;
    if (window_ >= pi) {  // whole circle
      scan(-pi - 1.0, pi + 1.0);
    } else if (lo < -pi) {
      scan(lo + 2.0 * pi, pi + 1.0);
      scan(-pi - 1.0, hi);
    } else if (hi > pi) {
      scan(lo, pi + 1.0);
      scan(-pi - 1.0, hi - 2.0 * pi);
    } else {
      scan(lo, hi);
    }
  }

  /// Coverage of a satellite whose mean anomaly at t0 is `alpha`.
  CoverageSet coverage_at_phase(double alpha) const {
    std::vector<CoverageSet::Word> words((p_.size() + CoverageSet::kWordBits - 1) / CoverageSet::kWordBits, 0);
    for_each_visible(alpha, [&](std::size_t j) {
      words[j / CoverageSet::kWordBits] |= CoverageSet::Word{1} << (j % CoverageSet::kWordBits);
    });
    return CoverageSet::from_words(grid_, std::move(words));
  }

  void covered_cells(std::size_t k, double theta, std::vector<std::uint32_t>& out) const {
    out.clear();
    for_each_visible(spec_.mean_anomaly0.at(k) + theta, [&](std::size_t j) { out.push_back(static_cast<std::uint32_t>(j)); });
  }

  /// Cells that satellite k can see for some theta in `space`: a superset of
  /// every coverage(k, theta) over the interval.
  CoverageSet support(std::size_t k, const StrategyInterval& space) const {
    const double mid = spec_.mean_anomaly0.at(k) + 0.5 * (space.lo + space.hi);
    const double half = 0.5 * space.width();
    CoverageSet out(grid_);
    for (std::size_t i = 0; i < cand_.size(); ++i) {
      const double amp = std::hypot(cand_p_[i], cand_q_[i]);
      const double off = std::abs(std::remainder(cand_phase_[i] - mid, 2.0 * std::numbers::pi));
      const double best = off <= half ? amp : amp * std::cos(off - half);
      if (best >= cos_rho_bar_ - 1e-9) out.insert(cand_[i]);
    }
    return out;
  }

  CoverageSet coverage(std::size_t k, double theta) const { return coverage_at_phase(spec_.mean_anomaly0.at(k) + theta); }

  const OrbitConstants& constants() const { return constants_; }
  const ConstellationSpec& spec() const { return spec_; }
  const TargetSpec& target() const { return target_; }
  const TimeGrid& grid() const { return grid_; }
  const DriftRates& rates() const { return rates_; }

 private:
  OrbitConstants constants_;
  ConstellationSpec spec_;
  TargetSpec target_;
  TimeGrid grid_;
  DriftRates rates_;
  double cos_rho_bar_;
  std::vector<double> p_;
  std::vector<double> q_;
  double window_ = 0.0;
  std::vector<std::size_t> cand_;
  std::vector<double> cand_phase_;
  std::vector<double> cand_p_;
  std::vector<double> cand_q_;
};

/// Integral of g(sum_k tau_k) with g(x) = min(x, 1): counts, per cell, how
/// many sets contain it and clips at one.
inline double peak_shaved_measure(std::span<const CoverageSet> sets, const TimeGrid& grid) {
  std::size_t cells = 0;
  for (std::size_t j = 0; j < grid.n_steps(); ++j) {
    std::size_t multiplicity = 0;
    for (const auto& s : sets) multiplicity += s.contains(j) ? 1 : 0;
    cells += std::min<std::size_t>(multiplicity, 1);
  }
  return grid.dt() * static_cast<double>(cells);
}

/// Coverage game of a constellation.  `damaged` holds 0-based indices.
inline GameInstance build_constellation_game(const OrbitConstants& c, const ConstellationSpec& s,
                                             const TargetSpec& tgt, const TimeGrid& grid, double gamma,
                                             std::span<const StrategyInterval> theta_bounds,
                                             std::span<const double> theta_max, const std::set<std::size_t>& damaged,
                                             std::size_t reach_samples = kDefaultReachSamples) {
  c.validate();
  s.validate(c);
  tgt.validate();
  const std::size_t n = s.size();
  if (theta_bounds.size() != n || theta_max.size() != n)
    throw std::invalid_argument("build_constellation_game: per-agent vectors must match the satellite count");
  for (std::size_t k : damaged)
    if (k >= n) throw std::invalid_argument("build_constellation_game: damaged index out of range");
  std::vector<AgentSpec> agents(n);
  for (std::size_t k = 0; k < n; ++k) agents[k] = {theta_bounds[k], theta_max[k], !damaged.contains(k)};
  auto model = std::make_shared<const VisibilityModel>(c, s, tgt, grid);
  CoverageFn fn = [model](std::size_t k, double theta) { return model->coverage(k, theta); };
  auto game = GameInstance::with_reach_graph(grid, std::move(agents), std::move(fn), gamma, reach_samples);
  game.set_covered_cells_fn(
      [model](std::size_t k, double theta, std::vector<std::uint32_t>& cells) { model->covered_cells(k, theta, cells); });
  std::vector<CoverageSet> support;
  support.reserve(n);
  for (std::size_t k = 0; k < n; ++k) support.push_back(model->support(k, theta_bounds[k]));
  game.set_support(std::move(support));
  return game;
}

}  // namespace covgame::orbit
