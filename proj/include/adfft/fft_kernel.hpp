#pragma once

// Self-contained 1-D complex-to-complex FFT.
//
// Sign convention: Forward computes X[k] = sum_j x[j] * exp(-2*pi*i*j*k/n),
// Backward uses exp(+2*pi*i*j*k/n). Neither direction normalizes, so
// Backward(Forward(x)) == n * x.
//
// Lengths whose prime factors are all <= 13 use a recursive mixed-radix
// decimation in time (specialized radix-2/3/4 butterflies, generic for the
// rest). Lengths with a larger prime factor go through Bluestein's chirp-z
// identity on a power-of-two convolution.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "adfft/grid.hpp"

namespace adfft {

enum class Direction { Forward, Backward };

class FftPlan1D {
 public:
  FftPlan1D(std::size_t n, Direction direction);
  ~FftPlan1D();
  FftPlan1D(FftPlan1D&&) noexcept;
  FftPlan1D& operator=(FftPlan1D&&) noexcept;

  std::size_t size() const noexcept { return n_; }
  Direction direction() const noexcept { return direction_; }
  bool uses_bluestein() const noexcept { return static_cast<bool>(bluestein_); }

  /// Scratch elements execute() needs.
  std::size_t work_size() const noexcept;

  /// Out-of-place transform of one length-n sequence. `in` and `out` must not
  /// overlap; `work` must hold at least work_size() elements.
  void execute(std::span<const Complex> in, std::span<Complex> out, std::span<Complex> work) const;

 private:
  struct Stage {
    std::size_t radix;
    std::size_t remaining;  // transform length below this stage
  };
  struct Bluestein;

  void recurse(Complex* out, const Complex* in, std::size_t fstride, const Stage* stage, Complex* scratch) const;
  void butterfly2(Complex* out, std::size_t fstride, std::size_t m) const;
  void butterfly3(Complex* out, std::size_t fstride, std::size_t m) const;
  void butterfly4(Complex* out, std::size_t fstride, std::size_t m) const;
  void butterfly_generic(Complex* out, std::size_t fstride, std::size_t p, std::size_t m, Complex* scratch) const;

  std::size_t n_ = 0;
  Direction direction_ = Direction::Forward;
  std::vector<Stage> stages_;
  std::vector<Complex> twiddles_;
  std::size_t generic_scratch_ = 0;
  std::unique_ptr<Bluestein> bluestein_;
};

/// Transform of a single row. Throws ContractError on a length mismatch.
ComplexBuf fft1d(const FftPlan1D& plan, std::span<const Complex> row);

/// Transforms row_count contiguous rows of plan.size() points from `in` into
/// `out`. Throws ContractError on size mismatch.
void fft_rows(const FftPlan1D& plan, std::span<const Complex> in, std::span<Complex> out, std::size_t row_count,
              std::span<Complex> work);

ComplexBuf fft_rows(const FftPlan1D& plan, std::span<const Complex> in, std::size_t row_count);

}  // namespace adfft
