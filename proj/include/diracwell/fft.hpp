#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <limits>
#include <mutex>
#include <new>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace diracwell {

using cplx = std::complex<double>;

/// Allocator backed by fftw_malloc so buffers satisfy FFTW's SIMD alignment.
template <typename T>
struct FftwAllocator {
  using value_type = T;

  FftwAllocator() noexcept = default;
  template <typename U>
  FftwAllocator(const FftwAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    if (n > std::numeric_limits<std::size_t>::max() / sizeof(T)) {
      throw std::bad_array_new_length();
    }
    void* p = fftw_malloc(n * sizeof(T));
    if (p == nullptr) {
      throw std::bad_alloc();
    }
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { fftw_free(p); }

  template <typename U>
  bool operator==(const FftwAllocator<U>&) const noexcept {
    return true;
  }
};

using AlignedBuffer = std::vector<cplx, FftwAllocator<cplx>>;

namespace detail {
// The FFTW planner is not re-entrant; execution through fftw_execute_dft is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

inline fftw_complex* as_fftw(cplx* p) {
  return reinterpret_cast<fftw_complex*>(p);
}
}  // namespace detail

/// In-place batched complex DFT of `count` contiguous transforms of length `n`.
/// Unnormalized in both directions (FFTW convention). Plans are created with
/// FFTW_ESTIMATE so the chosen algorithm, and therefore every rounding, is
/// reproducible across runs and threads.
class FftPlan {
 public:
  FftPlan(std::size_t n, std::size_t count) : n_(n), count_(count) {
    if (n == 0 || count == 0) {
      throw std::invalid_argument("FftPlan: empty transform");
    }
    AlignedBuffer scratch(n * count);
    const int len = static_cast<int>(n);
    {
      std::lock_guard lock(detail::planner_mutex());
      fwd_ = fftw_plan_many_dft(1, &len, static_cast<int>(count),
                                detail::as_fftw(scratch.data()), nullptr, 1, len,
                                detail::as_fftw(scratch.data()), nullptr, 1, len,
                                FFTW_FORWARD, FFTW_ESTIMATE);
      bwd_ = fftw_plan_many_dft(1, &len, static_cast<int>(count),
                                detail::as_fftw(scratch.data()), nullptr, 1, len,
                                detail::as_fftw(scratch.data()), nullptr, 1, len,
                                FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (fwd_ == nullptr || bwd_ == nullptr) {
      release();
      throw std::runtime_error("FftPlan: FFTW planner failed");
    }
  }

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  FftPlan(FftPlan&& other) noexcept
      : n_(other.n_), count_(other.count_), fwd_(other.fwd_), bwd_(other.bwd_) {
    other.fwd_ = nullptr;
    other.bwd_ = nullptr;
  }
  FftPlan& operator=(FftPlan&& other) noexcept {
    if (this != &other) {
      release();
      n_ = other.n_;
      count_ = other.count_;
      fwd_ = other.fwd_;
      bwd_ = other.bwd_;
      other.fwd_ = nullptr;
      other.bwd_ = nullptr;
    }
    return *this;
  }
  ~FftPlan() { release(); }

  std::size_t length() const { return n_; }
  std::size_t count() const { return count_; }

  /// data must hold length()*count() values.
  void forward(cplx* data) const { execute(fwd_, data); }
  void backward(cplx* data) const { execute(bwd_, data); }

 private:
  void execute(fftw_plan plan, cplx* data) const {
    if (fftw_alignment_of(reinterpret_cast<double*>(data)) == 0) {
      fftw_execute_dft(plan, detail::as_fftw(data), detail::as_fftw(data));
      return;
    }
    AlignedBuffer tmp(data, data + n_ * count_);
    fftw_execute_dft(plan, detail::as_fftw(tmp.data()), detail::as_fftw(tmp.data()));
    std::copy(tmp.begin(), tmp.end(), data);
  }

  void release() noexcept {
    if (fwd_ == nullptr && bwd_ == nullptr) {
      return;
    }
    std::lock_guard lock(detail::planner_mutex());
    if (fwd_ != nullptr) fftw_destroy_plan(fwd_);
    if (bwd_ != nullptr) fftw_destroy_plan(bwd_);
    fwd_ = nullptr;
    bwd_ = nullptr;
  }

  std::size_t n_;
  std::size_t count_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

}  // namespace diracwell
