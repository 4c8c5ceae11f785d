#pragma once

// Derivative-free maximizers.
//
// maximize_scalar: uniform coarse scan of the interval, then golden-section
// refinement inside the bracket around the best coarse sample.  The coarse
// scan resolves plateaus of window-indicator objectives; the refinement
// resolves the quadratic energy tilt.
//
// pattern_search: compass search over a box.  Probes +step then -step on each
// coordinate in order, accepts the first strict improvement, and halves (or
// shrinks by step_shrink) the step after a full failed poll.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace covgame {

struct StrategyInterval {
  double lo = 0.0;
  double hi = 0.0;

  StrategyInterval() = default;
  StrategyInterval(double lo_, double hi_) : lo(lo_), hi(hi_) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
      throw std::invalid_argument("StrategyInterval: need finite lo <= hi");
  }

  double width() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x <= hi; }
  double clamp(double x) const { return std::clamp(x, lo, hi); }

  /// i-th of n uniformly spaced points, endpoints included and exact.
  double sample(std::size_t i, std::size_t n) const {
    if (n <= 1) return 0.5 * (lo + hi);
    if (i == 0) return lo;
    if (i + 1 == n) return hi;
    return lo + width() * static_cast<double>(i) / static_cast<double>(n - 1);
  }

  friend bool operator==(const StrategyInterval&, const StrategyInterval&) = default;
};

class NonFiniteObjective : public std::runtime_error {
 public:
  NonFiniteObjective(const std::string& what, double probe) : std::runtime_error(what), probe_(probe) {}
  double probe() const { return probe_; }

 private:
  double probe_;
};

struct ScalarMaximizerConfig {
  std::size_t coarse_points = 181;
  double refine_tolerance = 1e-5;  // radians
  std::size_t max_refine_iters = 60;

  void validate() const {
    if (coarse_points < 3) throw std::invalid_argument("ScalarMaximizerConfig: coarse_points must be >= 3");
    if (!(refine_tolerance > 0.0)) throw std::invalid_argument("ScalarMaximizerConfig: refine_tolerance must be > 0");
  }
};

struct ScalarMaximum {
  double theta = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
};

namespace detail {

template <typename F>
double checked_eval(F& f, double x) {
  const double v = f(x);
  if (!std::isfinite(v)) {
    std::ostringstream os;
    os.precision(17);
    os << "objective is not finite at probe " << x;
    throw NonFiniteObjective(os.str(), x);
  }
  return v;
}

}  // namespace detail

/// Maximizes f over `interval`.  Deterministic for a fixed config; the value
/// returned is never below the best coarse sample.
template <typename F>
ScalarMaximum maximize_scalar(F&& f, const StrategyInterval& interval, const ScalarMaximizerConfig& cfg) {
  cfg.validate();
  ScalarMaximum best;
  const std::size_t n = interval.width() > 0.0 ? cfg.coarse_points : 1;
  std::size_t best_i = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = interval.sample(i, n);
    const double v = detail::checked_eval(f, x);
    ++best.evaluations;
    if (v > best.value) {
      best.value = v;
      best.theta = x;
      best_i = i;
    }
  }
  if (n == 1 || cfg.max_refine_iters == 0) return best;

  // Golden-section on the bracket [x_{i-1}, x_{i+1}].
  double a = interval.sample(best_i == 0 ? 0 : best_i - 1, n);
  double b = interval.sample(std::min(best_i + 1, n - 1), n);
  constexpr double kInvPhi = 0.61803398874989484820;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = detail::checked_eval(f, c);
  double fd = detail::checked_eval(f, d);
  best.evaluations += 2;
  auto consider = [&](double x, double v) {
    if (v > best.value) {
      best.value = v;
      best.theta = x;
    }
  };
  consider(c, fc);
  consider(d, fd);
  for (std::size_t it = 0; it < cfg.max_refine_iters && (b - a) > cfg.refine_tolerance; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = detail::checked_eval(f, c);
      consider(c, fc);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = detail::checked_eval(f, d);
      consider(d, fd);
    }
    ++best.evaluations;
  }
  return best;
}

struct PatternSearchConfig {
  double initial_step = 0.13;  // radians
  double step_shrink = 0.5;
  double min_step = 1e-4;  // radians
  std::size_t max_evals = 44000;
  double step_expand = 1.0;  // applied after each accepted move; 1 is plain compass search

  void validate() const {
    if (!(step_shrink > 0.0 && step_shrink < 1.0))
      throw std::invalid_argument("PatternSearchConfig: step_shrink must lie in (0, 1)");
    if (!(step_expand >= 1.0) || !std::isfinite(step_expand))
      throw std::invalid_argument("PatternSearchConfig: step_expand must be >= 1");
    if (!(min_step > 0.0)) throw std::invalid_argument("PatternSearchConfig: min_step must be > 0");
    if (!(initial_step > 0.0)) throw std::invalid_argument("PatternSearchConfig: initial_step must be > 0");
  }
};

struct PatternSearchResult {
  std::vector<double> theta;
  double value = 0.0;
  std::size_t evaluations = 0;
  std::size_t accepted_moves = 0;
  double final_step = 0.0;
  /// Objective value after each accepted move (first entry is the start).
  std::vector<double> accepted_values;
};

template <typename F>
PatternSearchResult pattern_search(F&& f, std::span<const StrategyInterval> box, std::span<const double> start,
                                   const PatternSearchConfig& cfg) {
  cfg.validate();
  if (box.size() != start.size()) throw std::invalid_argument("pattern_search: box and start differ in dimension");
  for (std::size_t i = 0; i < box.size(); ++i)
    if (!box[i].contains(start[i])) throw std::invalid_argument("pattern_search: start lies outside the box");

  PatternSearchResult r;
  r.theta.assign(start.begin(), start.end());
  auto eval = [&](std::span<const double> x) {
    const double v = f(x);
    ++r.evaluations;
    if (!std::isfinite(v)) throw NonFiniteObjective("pattern_search: objective is not finite", 0.0);
    return v;
  };
  r.value = eval(r.theta);
  r.accepted_values.push_back(r.value);

  double step = cfg.initial_step;
  std::vector<double> probe = r.theta;
  while (step >= cfg.min_step && r.evaluations < cfg.max_evals) {
    bool improved = false;
    for (std::size_t i = 0; i < r.theta.size() && !improved && r.evaluations < cfg.max_evals; ++i) {
      for (double dir : {+1.0, -1.0}) {
        const double x = box[i].clamp(r.theta[i] + dir * step);
        if (x == r.theta[i]) continue;
        probe[i] = x;
        const double v = eval(probe);
        if (v > r.value) {
          r.theta[i] = x;
          r.value = v;
          ++r.accepted_moves;
          r.accepted_values.push_back(v);
          improved = true;
          break;
        }
        probe[i] = r.theta[i];
        if (r.evaluations >= cfg.max_evals) break;
      }
    }
    step *= improved ? cfg.step_expand : cfg.step_shrink;
  }
  r.final_step = step;
  return r;
}

}  // namespace covgame
