#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "diracwell/errors.hpp"
#include "diracwell/fft.hpp"
#include "diracwell/grid.hpp"

namespace diracwell {

/// How the wells are switched on during [0, t0).
enum class RampConvention {
  /// Cosine ramp rising from zero at t = 0 to full depth at t = t0.
  turn_on,
  /// cos(pi t / 2 t0) as written in the original three-branch formula
  /// (full depth at t = 0, zero at t = t0). Kept for comparison runs.
  literal,
};

/// Combined static + chirped oscillating Sauter well. All fields in atomic units.
struct PotentialConfig {
  double static_depth = 0.0;       ///< V1
  double oscillating_depth = 0.0;  ///< V2
  double edge_width = 0.0;         ///< W
  double well_width = 0.0;         ///< D
  double omega0 = 0.0;             ///< fundamental angular frequency
  double chirp = 0.0;              ///< b, coefficient of (t - t0)^2 in the phase
  double phase = 0.0;              ///< phi
  double ramp_time = 0.0;          ///< t0
  double interaction_time = 0.0;   ///< t1
  double center = 0.0;             ///< well centre (0 for the symmetric setup)
  RampConvention ramp = RampConvention::turn_on;

  /// V1 = V2 = 1.5c^2, W = 0.3/c, D = 10/c, t0 = 5/c^2, t1 = 20 pi/c^2,
  /// omega0 = 0.5c^2, b = 0.42 c^2/t1, phi = 0.
  static PotentialConfig reference() {
    PotentialConfig cfg;
    cfg.static_depth = 1.5 * kRestEnergy;
    cfg.oscillating_depth = 1.5 * kRestEnergy;
    cfg.edge_width = 0.3 * kComptonLength;
    cfg.well_width = 10.0 * kComptonLength;
    cfg.ramp_time = 5.0 / kRestEnergy;
    cfg.interaction_time = 20.0 * kPi / kRestEnergy;
    cfg.omega0 = 0.5 * kRestEnergy;
    cfg.chirp = 0.42 * kRestEnergy / cfg.interaction_time;
    return cfg;
  }

  /// Sets omega0 in units of c^2.
  PotentialConfig& with_omega0_c2(double w) {
    omega0 = w * kRestEnergy;
    return *this;
  }
  /// Sets b in units of c^2/t1 (uses the current interaction_time).
  PotentialConfig& with_chirp_c2_per_t1(double b) {
    chirp = b * kRestEnergy / interaction_time;
    return *this;
  }

  double duration() const { return interaction_time + 2.0 * ramp_time; }

  /// Instantaneous angular frequency d(phase)/dt during the interaction window.
  double instantaneous_frequency(double t) const { return omega0 + 2.0 * chirp * (t - ramp_time); }
  /// omega0 + b t1, the midpoint of the linear frequency sweep.
  double effective_frequency() const { return omega0 + chirp * interaction_time; }
  /// omega0 + 2 b t1, the instantaneous frequency when the window closes.
  double final_frequency() const { return omega0 + 2.0 * chirp * interaction_time; }

  void validate() const {
    auto require = [](bool ok, const char* key, const std::string& what) {
      if (!ok) throw ConfigError(std::string(key) + ": " + what);
    };
    const double fields[] = {static_depth, oscillating_depth, edge_width, well_width,
                             omega0,       chirp,             phase,      ramp_time,
                             interaction_time, center};
    for (double f : fields) {
      require(std::isfinite(f), "potential", "all parameters must be finite");
    }
    require(ramp_time > 0.0, "t0", "ramp duration must be positive");
    require(interaction_time > 0.0, "t1", "interaction duration must be positive");
    require(edge_width > 0.0, "W", "edge width must be positive");
    require(well_width > 0.0, "D", "well width must be positive");
    require(omega0 >= 0.0, "omega0", "fundamental frequency must be non-negative");
    require(chirp >= 0.0, "b", "chirp parameter must be non-negative");
  }
};

/// Sauter well profile S(z) = {tanh[(z - D/2)/W] - tanh[(z + D/2)/W]} / 2, in [-1, 0].
inline double shape(double z, const PotentialConfig& cfg) {
  const double x = z - cfg.center;
  const double half = 0.5 * cfg.well_width;
  return 0.5 * (std::tanh((x - half) / cfg.edge_width) - std::tanh((x + half) / cfg.edge_width));
}

/// Multiplicative time factors: V(z, t) = S(z) [V1 f_static(t) + V2 f_osc(t)].
struct TimeFactors {
  double f_static;
  double f_osc;
};

inline TimeFactors time_factor(double t, const PotentialConfig& cfg) {
  const double t0 = cfg.ramp_time;
  const double t1 = cfg.interaction_time;
  const double total = cfg.duration();
  const double slack = 1e-12 * total;
  if (!(t >= -slack && t <= total + slack)) {
    throw ConfigError("time_factor: t = " + std::to_string(t) + " outside [0, " +
                      std::to_string(total) + "]");
  }
  t = std::clamp(t, 0.0, total);

  if (t < t0) {
    const double ramp = cfg.ramp == RampConvention::turn_on
                            ? std::cos(kPi * (t - t0) / (2.0 * t0))
                            : std::cos(kPi * t / (2.0 * t0));
    return {ramp, ramp};
  }
  if (t < t0 + t1) {
    const double tau = t - t0;
    return {1.0, std::cos(cfg.chirp * tau * tau + cfg.omega0 * tau + cfg.phase)};
  }
  const double ramp = std::cos(kPi * (t - t1 - t0) / (2.0 * t0));
  const double frozen = std::cos(cfg.chirp * t1 * t1 + cfg.omega0 * t1 + cfg.phase);
  return {ramp, frozen * ramp};
}

/// Combined depth V1 f_static + V2 f_osc at time t (multiplies S(z)).
inline double depth_at(double t, const PotentialConfig& cfg) {
  const auto f = time_factor(t, cfg);
  return cfg.static_depth * f.f_static + cfg.oscillating_depth * f.f_osc;
}

/// S(z_j) for every grid point.
inline std::vector<double> shape_on_grid(const Grid& grid, const PotentialConfig& cfg) {
  std::vector<double> s(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    s[j] = shape(grid.position(j), cfg);
  }
  return s;
}

inline std::vector<double> potential_on_grid(const Grid& grid, const PotentialConfig& cfg,
                                             double t) {
  const double depth = depth_at(t, cfg);
  std::vector<double> v = shape_on_grid(grid, cfg);
  for (auto& x : v) x *= depth;
  return v;
}

enum class SpectrumWindow { rectangular, hann };

struct PulseSpectrum {
  std::vector<double> frequencies_c2;  ///< angular frequency / c^2, ascending
  std::vector<double> magnitudes;      ///< |DFT|, peak normalized to 1
};

/// Magnitude spectrum of the oscillating factor cos(b tau^2 + omega0 tau + phi)
/// sampled uniformly over the interaction window. Bin spacing is 2 pi / t1.
inline PulseSpectrum pulse_spectrum(const PotentialConfig& cfg, std::size_t n_samples,
                                    SpectrumWindow window = SpectrumWindow::rectangular) {
  if (n_samples < 1024 || (n_samples & (n_samples - 1)) != 0) {
    throw ConfigError("pulse_samples: must be a power of two >= 1024 (got " +
                      std::to_string(n_samples) + ")");
  }
  cfg.validate();
  const double t1 = cfg.interaction_time;
  const double h = t1 / static_cast<double>(n_samples);
  AlignedBuffer samples(n_samples);
  for (std::size_t k = 0; k < n_samples; ++k) {
    const double tau = static_cast<double>(k) * h;
    double w = 1.0;
    if (window == SpectrumWindow::hann) {
      w = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n_samples));
    }
    samples[k] = w * std::cos(cfg.chirp * tau * tau + cfg.omega0 * tau + cfg.phase);
  }
  const FftPlan plan(n_samples, 1);
  plan.forward(samples.data());

  PulseSpectrum out;
  const std::size_t half = n_samples / 2;
  out.frequencies_c2.resize(half + 1);
  out.magnitudes.resize(half + 1);
  double peak = 0.0;
  for (std::size_t k = 0; k <= half; ++k) {
    out.frequencies_c2[k] = 2.0 * kPi * static_cast<double>(k) / t1 / kRestEnergy;
    out.magnitudes[k] = std::abs(samples[k]);
    peak = std::max(peak, out.magnitudes[k]);
  }
  if (peak > 0.0) {
    for (auto& m : out.magnitudes) m /= peak;
  }
  return out;
}

}  // namespace diracwell
