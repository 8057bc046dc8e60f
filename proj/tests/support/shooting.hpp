#pragma once

// Bound levels of the static Dirac well by direct ODE shooting.
//
// With psi = (f, i h) the eigenvalue problem for c sigma_1 p + sigma_3 c^2 + V
// becomes the real system
//   f' = -(E - V + c^2) h / c,   h' = (E - V - c^2) f / c,
// integrated inwards from both sides with the decaying free solutions and
// matched at the well centre through the normalized Wronskian.

#include <cmath>
#include <functional>
#include <vector>

#include "diracwell/potential.hpp"

namespace shooting {

using diracwell::kRestEnergy;
using diracwell::kSpeedOfLight;

struct Pair {
  double f;
  double h;
};

inline Pair integrate(const std::function<double(double)>& v, double e, double z_from, double z_to,
                      Pair y, std::size_t steps) {
  constexpr double c = kSpeedOfLight;
  constexpr double c2 = kRestEnergy;
  auto rhs = [&](double z, Pair s) -> Pair {
    const double pot = v(z);
    return {-(e - pot + c2) * s.h / c, (e - pot - c2) * s.f / c};
  };
  const double h = (z_to - z_from) / static_cast<double>(steps);
  double z = z_from;
  for (std::size_t i = 0; i < steps; ++i) {
    const Pair k1 = rhs(z, y);
    const Pair k2 = rhs(z + 0.5 * h, {y.f + 0.5 * h * k1.f, y.h + 0.5 * h * k1.h});
    const Pair k3 = rhs(z + 0.5 * h, {y.f + 0.5 * h * k2.f, y.h + 0.5 * h * k2.h});
    const Pair k4 = rhs(z + h, {y.f + h * k3.f, y.h + h * k3.h});
    y.f += h / 6.0 * (k1.f + 2.0 * k2.f + 2.0 * k3.f + k4.f);
    y.h += h / 6.0 * (k1.h + 2.0 * k2.h + 2.0 * k3.h + k4.h);
    z += h;
  }
  return y;
}

/// Normalized Wronskian of the left- and right-decaying solutions at z = centre.
inline double mismatch(const diracwell::PotentialConfig& cfg, double depth, double e, double z_max,
                       std::size_t steps) {
  constexpr double c = kSpeedOfLight;
  constexpr double c2 = kRestEnergy;
  const auto v = [&](double z) { return depth * diracwell::shape(z, cfg); };
  const double kappa = std::sqrt(c2 * c2 - e * e) / c;
  const Pair left = integrate(v, e, cfg.center - z_max, cfg.center, {1.0, -c * kappa / (e + c2)}, steps);
  const Pair right = integrate(v, e, cfg.center + z_max, cfg.center, {1.0, c * kappa / (e + c2)}, steps);
  return (left.f * right.h - left.h * right.f) / std::hypot(left.f, left.h) /
         std::hypot(right.f, right.h);
}

/// Levels in units of c^2, ascending.
inline std::vector<double> levels(const diracwell::PotentialConfig& cfg, double depth,
                                  double z_max = 0.3, std::size_t scan_points = 800,
                                  std::size_t steps = 6000) {
  constexpr double c2 = kRestEnergy;
  auto m = [&](double e) { return mismatch(cfg, depth, e, z_max, steps); };
  std::vector<double> energies;
  double e_prev = -0.999 * c2;
  double m_prev = m(e_prev);
  for (std::size_t i = 1; i < scan_points; ++i) {
    const double e = (-0.999 + 1.998 * static_cast<double>(i) / (scan_points - 1)) * c2;
    const double m_cur = m(e);
    if (std::signbit(m_cur) != std::signbit(m_prev)) {
      double lo = e_prev;
      double hi = e;
      double m_lo = m_prev;
      for (int it = 0; it < 60 && hi - lo > 1e-10 * c2; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double m_mid = m(mid);
        if (std::signbit(m_mid) == std::signbit(m_lo)) {
          lo = mid;
          m_lo = m_mid;
        } else {
          hi = mid;
        }
      }
      energies.push_back(0.5 * (lo + hi) / c2);
    }
    e_prev = e;
    m_prev = m_cur;
  }
  return energies;
}

}  // namespace shooting
