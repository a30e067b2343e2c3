#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "lipsafe/core.hpp"

namespace lipsafe {

struct GridSpec {
  double min;
  double max;
  double step;

  int count() const { return static_cast<int>(std::llround((max - min) / step)) + 1; }
  // single rounding per point; no cumulative drift across the grid
  double coord(int k) const { return min + static_cast<double>(k) * step; }

  std::vector<Vec> sample() const {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(count()));
    for (int k = 0; k < count(); ++k) {
      Vec v(1);
      v[0] = coord(k);
      out.push_back(v);
    }
    return out;
  }
};

/// Parameters of the two 1-D jumper benchmarks. All values overridable from
/// the CLI config; the defaults reproduce the published experiments.
struct EnvironmentSpec {
  std::string name;  // "muddy" or "hilly"
  double A, B, C;
  GridSpec state_grid;
  GridSpec action_grid;
  double s0;
  double s0_lo, s0_hi;  // initial safe interval S_0
  LipschitzConstants lipschitz;

  /// Exact transition dynamics.
  double step(double s, double a) const;

  /// Elevation profile (hilly only; zero for muddy).
  double elevation(double s) const;

  double dampening(double s) const;       // muddy psi
  double elevation_slope(double s) const; // hilly h'

  void validate() const;
};

EnvironmentSpec muddy_spec();
EnvironmentSpec hilly_spec();

struct LipschitzReport {
  double max_state_ratio = 0;
  double max_action_ratio = 0;
  std::size_t state_violations = 0;
  std::size_t action_violations = 0;
  bool ok() const { return state_violations == 0 && action_violations == 0; }
};

class GroundTruthSafety;  // safety.hpp

/// Randomized check of the two Lipschitz inequalities against the spec's
/// constants. When safe_region is given the state check is restricted to it
/// (the hilly constants are only locally valid).
LipschitzReport verify_lipschitz(const EnvironmentSpec& env, std::size_t n_samples,
                                 std::uint64_t seed,
                                 const GroundTruthSafety* safe_region = nullptr);

}  // namespace lipsafe
