#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "diracwell/errors.hpp"
#include "diracwell/fft.hpp"
#include "diracwell/grid.hpp"
#include "diracwell/potential.hpp"

namespace diracwell {

/// Largest phase (E_max * dt, with E_max = c^2 + |V1| + |V2|) a single step may
/// accumulate.
inline constexpr double kMaxStepPhase = 0.4;

inline double max_time_step(const PotentialConfig& cfg) {
  return kMaxStepPhase /
         (kRestEnergy + std::abs(cfg.static_depth) + std::abs(cfg.oscillating_depth));
}

/// Uniform time stepping over the whole pulse [0, t1 + 2 t0].
struct EvolutionSchedule {
  double dt = 0.0;
  std::size_t steps = 0;
  std::size_t checkpoint_stride = 1;

  double total() const { return dt * static_cast<double>(steps); }

  /// Picks the step count closest to duration/dt_target and shrinks or stretches
  /// dt so the last step lands exactly on the end of the pulse.
  static EvolutionSchedule covering(const PotentialConfig& cfg, double dt_target,
                                    std::size_t stride) {
    if (!(dt_target > 0.0) || !std::isfinite(dt_target)) {
      throw ConfigError("dt_au: time step must be positive");
    }
    if (stride == 0) {
      throw ConfigError("checkpoint_stride: must be at least 1");
    }
    const double total = cfg.duration();
    const auto steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(total / dt_target)));
    EvolutionSchedule s{total / static_cast<double>(steps), steps, stride};
    s.validate(cfg);
    return s;
  }

  void validate(const PotentialConfig& cfg) const {
    if (steps == 0 || !(dt > 0.0)) {
      throw ConfigError("schedule: need a positive step and at least one step");
    }
    if (checkpoint_stride == 0) {
      throw ConfigError("checkpoint_stride: must be at least 1");
    }
    if (std::abs(total() - cfg.duration()) > dt) {
      throw ConfigError("schedule: dt * steps does not cover the pulse duration");
    }
    if (dt > max_time_step(cfg) * (1.0 + 1e-12)) {
      throw ConfigError("dt_au: " + std::to_string(dt) + " exceeds the accuracy limit " +
                        std::to_string(max_time_step(cfg)));
    }
  }
};

/// exp(-i H(p) tau) = cos(E tau) I - i sin(E tau) H(p)/E, stored as
/// {m00, m01, m10, m11}. The matrix is symmetric.
struct KineticFactor {
  cplx m00, m01, m11;
};

inline KineticFactor kinetic_factor(double p, double tau) {
  constexpr double c = kSpeedOfLight;
  constexpr double c2 = kRestEnergy;
  const double e = std::sqrt(c2 * c2 + c2 * p * p);
  const double cs = std::cos(e * tau);
  const double sn = std::sin(e * tau) / e;
  return {cplx(cs, -sn * c2), cplx(0.0, -sn * c * p), cplx(cs, sn * c2)};
}

namespace detail {

inline std::vector<KineticFactor> kinetic_table(const Grid& grid, double tau) {
  std::vector<KineticFactor> table(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    table[k] = kinetic_factor(grid.momentum(k), tau);
  }
  return table;
}

inline void apply_kinetic(std::span<const KineticFactor> table, cplx* upper, cplx* lower) {
  const std::size_t n = table.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& m = table[k];
    const cplx a = upper[k];
    const cplx b = lower[k];
    upper[k] = m.m00 * a + m.m01 * b;
    lower[k] = m.m01 * a + m.m11 * b;
  }
}

inline void fill_phase_table(std::span<const double> profile, double depth, double dt,
                             double scale, std::span<cplx> table) {
  for (std::size_t j = 0; j < profile.size(); ++j) {
    table[j] = std::polar(scale, -profile[j] * depth * dt);
  }
}

}  // namespace detail

/// One Strang step with a frozen potential sampled on the grid:
/// exp(-iK dt/2) exp(-iV dt) exp(-iK dt/2). Negative dt runs backwards.
inline SpinorState split_step_frozen(const SpinorState& state, std::span<const double> potential,
                                     double dt, const Grid& grid) {
  detail::check_dimensions(grid, state);
  if (potential.size() != grid.size()) {
    throw ConfigError("split_step: potential length does not match the grid");
  }
  const std::size_t n = grid.size();
  const auto half = detail::kinetic_table(grid, 0.5 * dt);
  SpinorState psi = to_momentum(state, grid);
  detail::apply_kinetic(half, psi.data(), psi.data() + n);
  psi = to_position(psi, grid);
  for (std::size_t j = 0; j < n; ++j) {
    const cplx ph = std::polar(1.0, -potential[j] * dt);
    psi(j, 0) *= ph;
    psi(j, 1) *= ph;
  }
  psi = to_momentum(psi, grid);
  detail::apply_kinetic(half, psi.data(), psi.data() + n);
  return to_position(psi, grid);
}

/// Strang step from t to t + dt with V evaluated at the midpoint t + dt/2.
inline SpinorState split_step(const SpinorState& state, double t, double dt, const Grid& grid,
                              const PotentialConfig& cfg) {
  if (std::abs(dt) > max_time_step(cfg) * (1.0 + 1e-12)) {
    throw ConfigError("split_step: |dt| = " + std::to_string(std::abs(dt)) +
                      " exceeds the accuracy limit " + std::to_string(max_time_step(cfg)));
  }
  const auto v = potential_on_grid(grid, cfg, t + 0.5 * dt);
  return split_step_frozen(state, v, dt, grid);
}

/// Dense Hamiltonian on the grid, index s*Nz + j. The kinetic part uses the same
/// momentum multipliers (Nyquist included) as the split-step propagator.
inline Eigen::MatrixXcd dense_hamiltonian(const Grid& grid, std::span<const double> potential) {
  const std::size_t n = grid.size();
  if (potential.size() != n) {
    throw ConfigError("dense_hamiltonian: potential length does not match the grid");
  }
  const auto ni = static_cast<Eigen::Index>(n);
  // g(d) = (c/Nz) sum_k p_k exp(i p_k d dz), d = j - l in [-(Nz-1), Nz-1].
  std::vector<cplx> kernel(2 * n - 1);
  for (std::size_t idx = 0; idx < kernel.size(); ++idx) {
    const double d = static_cast<double>(idx) - static_cast<double>(n - 1);
    cplx sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      sum += grid.momentum(k) * std::polar(1.0, grid.momentum(k) * d * grid.dz());
    }
    kernel[idx] = sum * (kSpeedOfLight / static_cast<double>(n));
  }
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * ni, 2 * ni);
  for (Eigen::Index j = 0; j < ni; ++j) {
    h(j, j) = kRestEnergy + potential[static_cast<std::size_t>(j)];
    h(ni + j, ni + j) = -kRestEnergy + potential[static_cast<std::size_t>(j)];
    for (Eigen::Index l = 0; l < ni; ++l) {
      const cplx g = kernel[static_cast<std::size_t>(j - l + ni - 1)];
      h(j, ni + l) = g;
      h(ni + j, l) = g;
    }
  }
  return h;
}

inline constexpr std::size_t kOracleMaxPoints = 256;

/// Crank-Nicolson step (I + iH dt/2) psi' = (I - iH dt/2) psi with H dense and
/// evaluated at t + dt/2. Independent of the FFT path; for verification only.
inline SpinorState oracle_step(const SpinorState& state, double t, double dt, const Grid& grid,
                               const PotentialConfig& cfg) {
  detail::check_dimensions(grid, state);
  if (grid.size() > kOracleMaxPoints) {
    throw ConfigError("oracle_step: Nz must be <= " + std::to_string(kOracleMaxPoints));
  }
  const auto v = potential_on_grid(grid, cfg, t + 0.5 * dt);
  const Eigen::MatrixXcd h = dense_hamiltonian(grid, v);
  const auto dim = h.rows();
  const cplx half_step(0.0, 0.5 * dt);
  const Eigen::MatrixXcd lhs = Eigen::MatrixXcd::Identity(dim, dim) + half_step * h;
  const Eigen::MatrixXcd rhs = Eigen::MatrixXcd::Identity(dim, dim) - half_step * h;
  Eigen::VectorXcd psi(dim);
  for (Eigen::Index i = 0; i < dim; ++i) psi(i) = state.data()[i];
  const Eigen::VectorXcd next = lhs.partialPivLu().solve(rhs * psi);
  SpinorState out(grid.size());
  for (Eigen::Index i = 0; i < dim; ++i) out.data()[i] = next(i);
  return out;
}

/// Projections of evolved free states onto the free basis at the end of the pulse.
/// Column n is the state that started as the free plane wave of sign `initial`
/// at momentum slot n. `to_positive(p, n)` is U_pn, `to_negative(n', n)` is U_n'n
/// (for positive initial states these read U_p'p and U_np).
class BogoliubovMatrix {
 public:
  BogoliubovMatrix() = default;
  BogoliubovMatrix(std::size_t dim, EnergySign initial, double time)
      : dim_(dim), initial_(initial), time_(time), pos_(dim * dim), neg_(dim * dim) {}

  std::size_t dim() const { return dim_; }
  EnergySign initial() const { return initial_; }
  double time() const { return time_; }

  cplx to_positive(std::size_t row, std::size_t col) const { return pos_[col * dim_ + row]; }
  cplx to_negative(std::size_t row, std::size_t col) const { return neg_[col * dim_ + row]; }
  cplx& to_positive(std::size_t row, std::size_t col) { return pos_[col * dim_ + row]; }
  cplx& to_negative(std::size_t row, std::size_t col) { return neg_[col * dim_ + row]; }

  /// Contiguous column of positive-energy projections.
  std::span<const cplx> positive_column(std::size_t col) const {
    return {pos_.data() + col * dim_, dim_};
  }
  std::span<const cplx> negative_column(std::size_t col) const {
    return {neg_.data() + col * dim_, dim_};
  }

  /// sum_p |U_pn|^2 + sum_n' |U_n'n|^2 for column n (1 for a unitary evolution).
  double column_norm(std::size_t col) const {
    double sum = 0.0;
    for (const auto& v : positive_column(col)) sum += std::norm(v);
    for (const auto& v : negative_column(col)) sum += std::norm(v);
    return sum;
  }

 private:
  std::size_t dim_ = 0;
  EnergySign initial_ = EnergySign::negative;
  double time_ = 0.0;
  std::vector<cplx> pos_;
  std::vector<cplx> neg_;
};

struct EvolveOptions {
  unsigned threads = 1;
  EnergySign initial = EnergySign::negative;
  /// Columns sharing one per-step potential phase table. Fixed independently of
  /// `threads` so results do not depend on the worker count.
  std::size_t block = 32;
};

struct EvolutionResult {
  BogoliubovMatrix matrix;
  std::vector<double> times;
  /// sum over columns of the weight transferred to the opposite energy sign,
  /// i.e. N(t) = sum_pn |U_pn(t)|^2 for negative initial states.
  std::vector<double> number;
};

inline constexpr std::size_t kMaxBasisPoints = 4096;

/// Evolves every free plane-wave state of the chosen sign through the whole pulse.
/// Columns are independent; each block of columns steps through time with its own
/// copy of the shared phase tables. Checkpoint sums are reduced in ascending
/// column order.
inline EvolutionResult evolve_basis(const Grid& grid, const FreeBasis& basis,
                                    const PotentialConfig& cfg,
                                    const EvolutionSchedule& schedule,
                                    const EvolveOptions& options = {}) {
  cfg.validate();
  schedule.validate(cfg);
  const std::size_t n = grid.size();
  if (basis.size() != n) {
    throw ConfigError("evolve_basis: basis and grid sizes differ");
  }
  if (n > kMaxBasisPoints) {
    const double gib = 2.0 * static_cast<double>(n) * static_cast<double>(n) * 16.0 / (1 << 30);
    throw ConfigError("Nz: " + std::to_string(n) + " exceeds " +
                      std::to_string(kMaxBasisPoints) + "; the projection matrices alone need " +
                      std::to_string(gib) + " GiB");
  }

  const std::size_t steps = schedule.steps;
  const double dt = schedule.dt;
  const std::size_t stride = schedule.checkpoint_stride;

  std::vector<std::size_t> marks{0};
  for (std::size_t s = 1; s <= steps; ++s) {
    if (s % stride == 0 || s == steps) marks.push_back(s);
  }
  const std::size_t n_marks = marks.size();

  const auto profile = shape_on_grid(grid, cfg);
  std::vector<double> depth(steps);
  for (std::size_t s = 0; s < steps; ++s) {
    depth[s] = depth_at((static_cast<double>(s) + 0.5) * dt, cfg);
  }
  const auto kin_full = detail::kinetic_table(grid, dt);
  const auto kin_half = detail::kinetic_table(grid, 0.5 * dt);
  std::vector<double> parity(n);
  for (std::size_t k = 0; k < n; ++k) parity[k] = grid.mode(k) % 2 == 0 ? 1.0 : -1.0;

  const EnergySign target =
      options.initial == EnergySign::negative ? EnergySign::positive : EnergySign::negative;

  EvolutionResult result;
  result.matrix = BogoliubovMatrix(n, options.initial, schedule.total());
  // transfer[m * n + col]: weight of column col in the target sign at mark m.
  std::vector<double> transfer(n_marks * n, 0.0);

  const std::size_t block = std::max<std::size_t>(1, options.block);
  const std::size_t n_blocks = (n + block - 1) / block;
  const FftPlan plan(n, 2);
  const double inv_n = 1.0 / static_cast<double>(n);

  auto transferred_weight = [&](const cplx* upper, const cplx* lower) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const Spinor& u = basis.spinor(k, target);
      sum += std::norm(std::conj(u[0]) * upper[k] + std::conj(u[1]) * lower[k]);
    }
    return sum;
  };

  auto run_block = [&](std::size_t b) {
    const std::size_t first = b * block;
    const std::size_t last = std::min(n, first + block);
    const std::size_t width = last - first;
    AlignedBuffer work(width * 2 * n, cplx(0.0));
    std::vector<cplx> phases(n);

    // Momentum slots carry X_k = (-1)^m Y_k, so a unit delta in X starts as
    // (-1)^m_n in the working representation Y.
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t col = first + c;
      const Spinor& u = basis.spinor(col, options.initial);
      cplx* upper = work.data() + c * 2 * n;
      upper[col] = parity[col] * u[0];
      upper[n + col] = parity[col] * u[1];
      detail::apply_kinetic(kin_half, upper, upper + n);
    }

    std::size_t mark = 1;
    for (std::size_t s = 0; s < steps; ++s) {
      detail::fill_phase_table(profile, depth[s], dt, inv_n, phases);
      const bool boundary = marks[mark] == s + 1;
      for (std::size_t c = 0; c < width; ++c) {
        cplx* upper = work.data() + c * 2 * n;
        cplx* lower = upper + n;
        plan.backward(upper);
        for (std::size_t j = 0; j < n; ++j) {
          upper[j] *= phases[j];
          lower[j] *= phases[j];
        }
        plan.forward(upper);
        if (boundary) {
          detail::apply_kinetic(kin_half, upper, lower);
          transfer[mark * n + first + c] = transferred_weight(upper, lower);
          if (s + 1 < steps) detail::apply_kinetic(kin_half, upper, lower);
        } else {
          detail::apply_kinetic(kin_full, upper, lower);
        }
      }
      if (boundary) ++mark;
    }

    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t col = first + c;
      const cplx* upper = work.data() + c * 2 * n;
      const cplx* lower = upper + n;
      for (std::size_t k = 0; k < n; ++k) {
        const Spinor& up = basis.plus(k);
        const Spinor& dn = basis.minus(k);
        const cplx y0 = parity[k] * upper[k];
        const cplx y1 = parity[k] * lower[k];
        result.matrix.to_positive(k, col) = std::conj(up[0]) * y0 + std::conj(up[1]) * y1;
        result.matrix.to_negative(k, col) = std::conj(dn[0]) * y0 + std::conj(dn[1]) * y1;
      }
    }
  };

  const unsigned workers =
      std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(n_blocks)));
  if (workers == 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t b = next++; b < n_blocks; b = next++) {
          try {
            run_block(b);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  result.times.resize(n_marks);
  result.number.resize(n_marks);
  for (std::size_t m = 0; m < n_marks; ++m) {
    result.times[m] = static_cast<double>(marks[m]) * dt;
    double sum = 0.0;
    for (std::size_t col = 0; col < n; ++col) sum += transfer[m * n + col];
    result.number[m] = sum;
  }
  for (double v : result.number) {
    if (!std::isfinite(v)) {
      throw NumericalError("evolve_basis: non-finite particle number");
    }
  }
  return result;
}

}  // namespace diracwell
