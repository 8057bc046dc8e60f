#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "diracwell/errors.hpp"
#include "diracwell/fft.hpp"

namespace diracwell {

/// Speed of light in atomic units (hbar = e = m_e = 1).
inline constexpr double kSpeedOfLight = 137.036;
inline constexpr double kRestEnergy = kSpeedOfLight * kSpeedOfLight;
/// Reduced Compton wavelength, 1/c.
inline constexpr double kComptonLength = 1.0 / kSpeedOfLight;
inline constexpr double kPi = std::numbers::pi;

using Spinor = std::array<cplx, 2>;

enum class EnergySign { positive, negative };

/// Uniform periodic lattice z_j = -L/2 + j*dz and its FFT-ordered momentum dual
/// p_k = 2*pi*m/L, where m = k for k < Nz/2 and m = k - Nz otherwise. The single
/// unpaired value is the Nyquist momentum -pi*Nz/L at k = Nz/2.
class Grid {
 public:
  static Grid build(double length, std::size_t points) {
    if (!(length > 0.0) || !std::isfinite(length)) {
      throw ConfigError("grid: length L must be positive and finite (got " +
                        std::to_string(length) + ")");
    }
    if (points % 2 != 0) {
      throw ConfigError("grid: Nz must be even (got " + std::to_string(points) + ")");
    }
    if (points < 16) {
      throw ConfigError("grid: Nz must be at least 16 (got " + std::to_string(points) + ")");
    }
    return Grid(length, points);
  }

  double length() const { return length_; }
  std::size_t size() const { return z_.size(); }
  double dz() const { return length_ / static_cast<double>(z_.size()); }

  double position(std::size_t j) const { return z_[j]; }
  double momentum(std::size_t k) const { return p_[k]; }
  std::span<const double> positions() const { return z_; }
  std::span<const double> momenta() const { return p_; }

  /// Signed mode number m of FFT slot k.
  long mode(std::size_t k) const {
    const auto n = static_cast<long>(z_.size());
    const auto kk = static_cast<long>(k);
    return kk < n / 2 ? kk : kk - n;
  }

  double max_abs_momentum() const { return kPi * static_cast<double>(z_.size()) / length_; }

  /// Whether the momentum cutoff covers |p| up to `cutoff`.
  bool resolves(double cutoff) const { return max_abs_momentum() >= cutoff; }

 private:
  Grid(double length, std::size_t points) : length_(length), z_(points), p_(points) {
    const double h = length / static_cast<double>(points);
    for (std::size_t j = 0; j < points; ++j) {
      z_[j] = -0.5 * length + static_cast<double>(j) * h;
    }
    for (std::size_t k = 0; k < points; ++k) {
      p_[k] = 2.0 * kPi * static_cast<double>(mode(k)) / length;
    }
  }

  double length_;
  std::vector<double> z_;
  std::vector<double> p_;
};

/// Eigenpair of the free 1+1D Dirac Hamiltonian H(p) = [[c^2, cp], [cp, -c^2]].
struct FreeEigenpair {
  double energy;
  Spinor spinor;
};

/// Free eigenpair with the phase fixed so the first nonzero component is real
/// and positive.
inline FreeEigenpair free_eigenpair(double p, EnergySign sign) {
  constexpr double c = kSpeedOfLight;
  constexpr double c2 = kRestEnergy;
  const double e = std::sqrt(c2 * c2 + c2 * p * p);
  double a = 0.0;
  double b = 0.0;
  if (sign == EnergySign::positive) {
    a = e + c2;
    b = c * p;
  } else {
    a = -c * p;
    b = e + c2;
    if (a < 0.0) {
      a = -a;
      b = -b;
    }
  }
  const double norm = std::hypot(a, b);
  return {sign == EnergySign::positive ? e : -e, {cplx(a / norm), cplx(b / norm)}};
}

/// Free eigenbasis tabulated over the momentum lattice of a Grid.
class FreeBasis {
 public:
  explicit FreeBasis(const Grid& grid) {
    const std::size_t n = grid.size();
    energy_.resize(n);
    plus_.resize(n);
    minus_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto up = free_eigenpair(grid.momentum(k), EnergySign::positive);
      const auto dn = free_eigenpair(grid.momentum(k), EnergySign::negative);
      energy_[k] = up.energy;
      plus_[k] = up.spinor;
      minus_[k] = dn.spinor;
    }
  }

  std::size_t size() const { return energy_.size(); }
  /// Positive branch energy E(p_k) > 0; the negative branch is -E(p_k).
  double energy(std::size_t k) const { return energy_[k]; }
  std::span<const double> energies() const { return energy_; }
  const Spinor& plus(std::size_t k) const { return plus_[k]; }
  const Spinor& minus(std::size_t k) const { return minus_[k]; }
  const Spinor& spinor(std::size_t k, EnergySign sign) const {
    return sign == EnergySign::positive ? plus_[k] : minus_[k];
  }

 private:
  std::vector<double> energy_;
  std::vector<Spinor> plus_;
  std::vector<Spinor> minus_;
};

/// Two-component spinor field sampled on a grid. Storage is component-major:
/// all Nz amplitudes of component 0, then all of component 1.
class SpinorState {
 public:
  SpinorState() = default;
  explicit SpinorState(std::size_t points) : points_(points), data_(2 * points) {}

  std::size_t points() const { return points_; }

  cplx& operator()(std::size_t j, std::size_t s) { return data_[s * points_ + j]; }
  const cplx& operator()(std::size_t j, std::size_t s) const { return data_[s * points_ + j]; }

  std::span<cplx> component(std::size_t s) { return {data_.data() + s * points_, points_}; }
  std::span<const cplx> component(std::size_t s) const {
    return {data_.data() + s * points_, points_};
  }

  cplx* data() { return data_.data(); }
  const cplx* data() const { return data_.data(); }
  std::span<const cplx> values() const { return data_; }

  double norm_squared() const {
    double sum = 0.0;
    for (const auto& v : data_) sum += std::norm(v);
    return sum;
  }

 private:
  std::size_t points_ = 0;
  AlignedBuffer data_;
};

/// Plane wave u * exp(i p_k z) / sqrt(Nz) sampled on the grid.
inline SpinorState plane_wave(const Grid& grid, std::size_t k, const Spinor& u) {
  SpinorState state(grid.size());
  const double scale = 1.0 / std::sqrt(static_cast<double>(grid.size()));
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const cplx phase = std::polar(scale, grid.momentum(k) * grid.position(j));
    state(j, 0) = u[0] * phase;
    state(j, 1) = u[1] * phase;
  }
  return state;
}

namespace detail {
inline void check_dimensions(const Grid& grid, const SpinorState& state) {
  if (state.points() != grid.size()) {
    throw ConfigError("spinor state has " + std::to_string(state.points()) +
                      " points but the grid has " + std::to_string(grid.size()));
  }
}
}  // namespace detail

/// Unitary transform to the momentum representation,
/// X_k = Nz^{-1/2} sum_j x_j exp(-i p_k z_j), applied per spinor component.
/// A plane wave exp(i p_k z)/sqrt(Nz) maps to a unit delta at slot k.
inline SpinorState to_momentum(const SpinorState& state, const Grid& grid) {
  detail::check_dimensions(grid, state);
  const std::size_t n = grid.size();
  SpinorState out = state;
  const FftPlan plan(n, 2);
  plan.forward(out.data());
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      const double sign = (grid.mode(k) % 2 == 0) ? 1.0 : -1.0;
      out(k, s) *= sign * scale;
    }
  }
  return out;
}

/// Inverse of to_momentum.
inline SpinorState to_position(const SpinorState& state, const Grid& grid) {
  detail::check_dimensions(grid, state);
  const std::size_t n = grid.size();
  SpinorState out = state;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t s = 0; s < 2; ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      const double sign = (grid.mode(k) % 2 == 0) ? 1.0 : -1.0;
      out(k, s) *= sign * scale;
    }
  }
  const FftPlan plan(n, 2);
  plan.backward(out.data());
  return out;
}

}  // namespace diracwell
