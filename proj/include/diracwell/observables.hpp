#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "diracwell/errors.hpp"
#include "diracwell/fft.hpp"
#include "diracwell/grid.hpp"
#include "diracwell/potential.hpp"
#include "diracwell/propagator.hpp"

namespace diracwell {

/// N = sum_p sum_n |U_pn|^2, columns outer and rows inner, both ascending.
inline double number_of_electrons(const BogoliubovMatrix& u) {
  double total = 0.0;
  for (std::size_t n = 0; n < u.dim(); ++n) {
    double column = 0.0;
    for (const auto& v : u.positive_column(n)) column += std::norm(v);
    total += column;
  }
  return total;
}

/// Electron density rho(z_j) = sum_n |sum_p U_pn W_p(z_j)|^2 / dz, so that the
/// Riemann sum over the grid equals N.
inline std::vector<double> density(const BogoliubovMatrix& u, const Grid& grid,
                                   const FreeBasis& basis) {
  const std::size_t n = grid.size();
  if (u.dim() != n || basis.size() != n) {
    throw ConfigError("density: matrix, grid and basis sizes differ");
  }
  const FftPlan plan(n, 2);
  AlignedBuffer work(2 * n);
  std::vector<double> rho(n, 0.0);
  const double scale = 1.0 / (static_cast<double>(n) * grid.dz());
  for (std::size_t col = 0; col < n; ++col) {
    const auto column = u.positive_column(col);
    for (std::size_t k = 0; k < n; ++k) {
      const double parity = grid.mode(k) % 2 == 0 ? 1.0 : -1.0;
      const Spinor& w = basis.plus(k);
      work[k] = parity * column[k] * w[0];
      work[n + k] = parity * column[k] * w[1];
    }
    plan.backward(work.data());
    for (std::size_t j = 0; j < n; ++j) {
      rho[j] += (std::norm(work[j]) + std::norm(work[n + j])) * scale;
    }
  }
  return rho;
}

struct EnergySpectrum {
  std::vector<double> bin_edges;  ///< energies / c^2, starting at 1
  std::vector<double> counts;     ///< dN/dE per bin [1/c^2]
  double bin_width = 0.0;         ///< [c^2]

  std::size_t size() const { return counts.size(); }
  double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
  /// sum counts * bin_width, equal to N up to rounding.
  double integral() const {
    double sum = 0.0;
    for (double c : counts) sum += c * bin_width;
    return sum;
  }
};

/// Histogram of n_p = sum_n |U_pn|^2 over E(p)/c^2; +p and -p share a bin.
inline EnergySpectrum energy_spectrum(const BogoliubovMatrix& u, const FreeBasis& basis,
                                      double bin_width_c2 = 0.02) {
  if (!(bin_width_c2 > 0.0) || !std::isfinite(bin_width_c2)) {
    throw ConfigError("bin_width_c2: must be positive");
  }
  if (u.dim() != basis.size()) {
    throw ConfigError("energy_spectrum: matrix and basis sizes differ");
  }
  const std::size_t n = basis.size();
  double e_max = 1.0;
  for (std::size_t k = 0; k < n; ++k) e_max = std::max(e_max, basis.energy(k) / kRestEnergy);
  const auto bins = static_cast<std::size_t>(std::floor((e_max - 1.0) / bin_width_c2)) + 1;

  EnergySpectrum spec;
  spec.bin_width = bin_width_c2;
  spec.bin_edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    spec.bin_edges[i] = 1.0 + static_cast<double>(i) * bin_width_c2;
  }
  std::vector<double> occupation(n, 0.0);
  for (std::size_t col = 0; col < n; ++col) {
    const auto column = u.positive_column(col);
    for (std::size_t p = 0; p < n; ++p) occupation[p] += std::norm(column[p]);
  }
  std::vector<double> weight(bins, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const double e = basis.energy(p) / kRestEnergy;
    auto idx = static_cast<std::size_t>(std::max(0.0, std::floor((e - 1.0) / bin_width_c2)));
    idx = std::min(idx, bins - 1);
    weight[idx] += occupation[p];
  }
  spec.counts.resize(bins);
  for (std::size_t i = 0; i < bins; ++i) spec.counts[i] = weight[i] / bin_width_c2;
  return spec;
}

/// Which depth enters the time-independent well used for the bound levels.
enum class BoundWellDepth {
  static_only,  ///< V1
  combined,     ///< V1 + V2
};

struct BoundStateOptions {
  BoundWellDepth depth = BoundWellDepth::static_only;
  /// Minimum fraction of the norm inside |z - center| <= D.
  double localization_threshold = 0.5;
};

struct BoundStateSet {
  std::vector<double> energies_c2;   ///< ascending, inside (-1, 1)
  std::vector<double> localization;  ///< norm fraction within |z - center| <= D
};

inline constexpr std::size_t kBoundStateMaxPoints = 2048;

/// Real symmetric form of the static Dirac Hamiltonian. With psi = (f, i h) and
/// the periodic spectral derivative D (Nyquist mode dropped),
///   H' = [[c^2 + V, c D], [-c D, V - c^2]],
/// which has the same spectrum as c sigma_1 p + sigma_3 c^2 + V.
inline std::vector<double> static_hamiltonian(const Grid& grid, std::span<const double> potential) {
  const std::size_t n = grid.size();
  const std::size_t dim = 2 * n;
  std::vector<double> h(dim * dim, 0.0);  // column-major
  auto at = [&](std::size_t r, std::size_t c) -> double& { return h[c * dim + r]; };
  const double scale = kSpeedOfLight * kPi / grid.length();
  for (std::size_t j = 0; j < n; ++j) {
    at(j, j) = kRestEnergy + potential[j];
    at(n + j, n + j) = potential[j] - kRestEnergy;
    for (std::size_t l = 0; l < n; ++l) {
      if (j == l) continue;
      const auto d = static_cast<long>(j) - static_cast<long>(l);
      const double sign = (d % 2 == 0) ? 1.0 : -1.0;
      const double cd = scale * sign / std::tan(kPi * static_cast<double>(d) / static_cast<double>(n));
      at(j, n + l) = cd;
      at(n + l, j) = cd;
    }
  }
  // Lower-left block is -cD = (cD)^T; filled above through symmetry.
  return h;
}

/// Discrete levels of the static well inside the mass gap.
inline BoundStateSet bound_states(const Grid& grid, const PotentialConfig& cfg,
                                  const BoundStateOptions& options = {}) {
  cfg.validate();
  const std::size_t n = grid.size();
  if (n > kBoundStateMaxPoints) {
    throw ConfigError("bound_Nz: dense eigensolve limited to Nz <= " +
                      std::to_string(kBoundStateMaxPoints));
  }
  const double depth = options.depth == BoundWellDepth::static_only
                           ? cfg.static_depth
                           : cfg.static_depth + cfg.oscillating_depth;
  std::vector<double> v = shape_on_grid(grid, cfg);
  for (auto& x : v) x *= depth;

  const auto dim = static_cast<Eigen::Index>(2 * n);
  std::vector<double> a = static_hamiltonian(grid, v);
  const Eigen::Map<const Eigen::MatrixXd> h(a.data(), dim, dim);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("bound_states: eigensolver failed to converge");
  }

  BoundStateSet out;
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double e = solver.eigenvalues()(i);
    if (!(e > -kRestEnergy && e < kRestEnergy)) continue;
    const auto vec = solver.eigenvectors().col(i);
    double inside = 0.0;
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const auto jn = static_cast<Eigen::Index>(n + j);
      const double weight = vec(jj) * vec(jj) + vec(jn) * vec(jn);
      total += weight;
      if (std::abs(grid.position(j) - cfg.center) <= cfg.well_width) inside += weight;
    }
    const double frac = inside / total;
    if (frac > options.localization_threshold) {
      out.energies_c2.push_back(e / kRestEnergy);
      out.localization.push_back(frac);
    }
  }
  return out;
}

}  // namespace diracwell
