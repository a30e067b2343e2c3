#include "lipsafe/environments.hpp"

#include <random>
#include <stdexcept>

#include "lipsafe/safety.hpp"

namespace lipsafe {

double EnvironmentSpec::dampening(double s) const {
  double as = std::abs(s);
  if (as < A) return 0.0;
  if (as < B) return (as - A) / (B - A);
  return 1.0;
}

double EnvironmentSpec::elevation(double s) const {
  if (name != "hilly") return 0.0;
  double x = s < -A ? s + A : (s < A ? 0.0 : s - A);
  if (x == 0.0) return 0.0;
  double b2 = B * B, b4 = b2 * b2;
  return -std::pow(x, 4) / (4 * b4) + x * x / (2 * b2);
}

double EnvironmentSpec::elevation_slope(double s) const {
  double x = s < -A ? s + A : (s < A ? 0.0 : s - A);
  if (x == 0.0) return 0.0;
  double b2 = B * B, b4 = b2 * b2;
  return -x * x * x / b4 + x / b2;
}

double EnvironmentSpec::step(double s, double a) const {
  if (name == "muddy") return s + a * (1.0 - dampening(s));
  if (name == "hilly") return s + a - elevation_slope(s);
  throw std::invalid_argument("unknown environment: " + name);
}

void EnvironmentSpec::validate() const {
  if (name != "muddy" && name != "hilly")
    throw std::invalid_argument("unknown environment: " + name);
  if (!(s0 >= s0_lo && s0 <= s0_hi))
    throw std::invalid_argument("s0 must lie inside the S_0 interval");
  if (s0_lo < state_grid.min - kGeomEps || s0_hi > state_grid.max + kGeomEps)
    throw std::invalid_argument("S_0 interval must lie inside the state grid range");
  if (state_grid.step <= 0 || action_grid.step <= 0)
    throw std::invalid_argument("grid steps must be positive");
}

EnvironmentSpec muddy_spec() {
  return EnvironmentSpec{
      .name = "muddy",
      .A = 3.0,
      .B = 9.0,
      .C = 12.0,
      .state_grid = {-10.0, 10.0, 0.2},
      .action_grid = {-12.0, 12.0, 0.2},
      .s0 = 0.0,
      .s0_lo = -3.0,
      .s0_hi = 3.0,
      .lipschitz = {(12.0 + 9.0 - 3.0) / (9.0 - 3.0), 1.0},  // L_s = 3
  };
}

EnvironmentSpec hilly_spec() {
  return EnvironmentSpec{
      .name = "hilly",
      .A = 1.2,
      .B = 4.0,
      .C = 0.3,
      .state_grid = {-6.9, 6.9, 0.1},
      .action_grid = {-0.3, 0.3, 0.1},
      .s0 = 0.0,
      .s0_lo = -1.2,
      .s0_hi = 1.2,
      .lipschitz = {1.4, 1.0},
  };
}

LipschitzReport verify_lipschitz(const EnvironmentSpec& env, std::size_t n_samples,
                                 std::uint64_t seed, const GroundTruthSafety* safe_region) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> state_dist(env.state_grid.min, env.state_grid.max);
  std::uniform_real_distribution<double> action_dist(env.action_grid.min,
                                                     env.action_grid.max);
  auto draw_state = [&] {
    for (int tries = 0; tries < 10000; ++tries) {
      double s = state_dist(rng);
      if (!safe_region || safe_region->marked(s)) return s;
    }
    throw std::runtime_error("could not sample a state inside the safe region");
  };

  LipschitzReport report;
  for (std::size_t i = 0; i < n_samples; ++i) {
    // state inequality: d(f(s,a), f(s',a)) <= L_s d(s,s')
    double s = draw_state(), s2 = draw_state(), a = action_dist(rng);
    double ds = std::abs(s - s2);
    if (ds > 1e-9) {
      double ratio = std::abs(env.step(s, a) - env.step(s2, a)) / ds;
      report.max_state_ratio = std::max(report.max_state_ratio, ratio);
      if (ratio > env.lipschitz.l_s + 1e-9) ++report.state_violations;
    }
    // action inequality: d(f(s,a), f(s,a')) <= L_a d(a,a')
    double sa = draw_state(), a1 = action_dist(rng), a2 = action_dist(rng);
    double da = std::abs(a1 - a2);
    if (da > 1e-9) {
      double ratio = std::abs(env.step(sa, a1) - env.step(sa, a2)) / da;
      report.max_action_ratio = std::max(report.max_action_ratio, ratio);
      if (ratio > env.lipschitz.l_a + 1e-9) ++report.action_violations;
    }
  }
  return report;
}

}  // namespace lipsafe
