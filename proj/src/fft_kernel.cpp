#include "adfft/fft_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "adfft/error.hpp"

namespace adfft {

namespace {

constexpr std::size_t kLargestDirectRadix = 13;

// exp(sign * 2*pi*i * num / den), with num reduced so large indices keep precision.
Complex unit_root(double sign, std::size_t num, std::size_t den) {
  const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(num % den) / static_cast<double>(den);
  return {std::cos(angle), std::sin(angle)};
}

std::vector<std::size_t> factorize(std::size_t n) {
  std::vector<std::size_t> factors;
  while (n % 4 == 0) {
    factors.push_back(4);
    n /= 4;
  }
  for (std::size_t p = 2; n > 1; p = (p == 2 ? 3 : p + 2)) {
    if (p * p > n) {
      factors.push_back(n);
      break;
    }
    while (n % p == 0) {
      factors.push_back(p);
      n /= p;
    }
  }
  return factors;
}

std::size_t next_pow2(std::size_t n) {
  std::size_t m = 1;
  while (m < n) m <<= 1;
  return m;
}

}  // namespace

struct FftPlan1D::Bluestein {
  std::size_t padded = 0;
  std::vector<Complex> chirp;          // exp(sign*pi*i*j^2/n), j < n
  std::vector<Complex> kernel_freq;    // forward FFT of the conjugate chirp, padded
  std::unique_ptr<FftPlan1D> forward;  // length `padded`
  std::unique_ptr<FftPlan1D> backward;
};

FftPlan1D::FftPlan1D(std::size_t n, Direction direction) : n_(n), direction_(direction) {
  if (n == 0) throw ContractError("FFT length must be positive");
  const double sign = direction == Direction::Forward ? -1.0 : 1.0;

  const auto factors = factorize(n);
  const std::size_t largest = factors.empty() ? 1 : *std::max_element(factors.begin(), factors.end());
  if (largest > kLargestDirectRadix) {
    auto b = std::make_unique<Bluestein>();
    b->padded = next_pow2(2 * n - 1);
    b->chirp.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      // j^2 mod 2n keeps the angle argument small.
      const std::size_t sq = (j * j) % (2 * n);
      const double angle = sign * std::numbers::pi * static_cast<double>(sq) / static_cast<double>(n);
      b->chirp[j] = {std::cos(angle), std::sin(angle)};
    }
    b->forward = std::make_unique<FftPlan1D>(b->padded, Direction::Forward);
    b->backward = std::make_unique<FftPlan1D>(b->padded, Direction::Backward);
    std::vector<Complex> kernel(b->padded, Complex{});
    kernel[0] = std::conj(b->chirp[0]);
    for (std::size_t j = 1; j < n; ++j) {
      kernel[j] = std::conj(b->chirp[j]);
      kernel[b->padded - j] = std::conj(b->chirp[j]);
    }
    b->kernel_freq.resize(b->padded);
    std::vector<Complex> scratch(b->forward->work_size());
    b->forward->execute(kernel, b->kernel_freq, scratch);
    bluestein_ = std::move(b);
    return;
  }

  std::size_t remaining = n;
  for (auto p : factors) {
    remaining /= p;
    stages_.push_back({p, remaining});
    if (p != 2 && p != 3 && p != 4) generic_scratch_ = std::max(generic_scratch_, p);
  }
  twiddles_.resize(n);
  for (std::size_t k = 0; k < n; ++k) twiddles_[k] = unit_root(sign, k, n);
}

FftPlan1D::~FftPlan1D() = default;
FftPlan1D::FftPlan1D(FftPlan1D&&) noexcept = default;
FftPlan1D& FftPlan1D::operator=(FftPlan1D&&) noexcept = default;

std::size_t FftPlan1D::work_size() const noexcept {
  if (bluestein_) return 2 * bluestein_->padded + bluestein_->forward->work_size();
  return generic_scratch_;
}

void FftPlan1D::execute(std::span<const Complex> in, std::span<Complex> out, std::span<Complex> work) const {
  if (in.size() != n_ || out.size() != n_) {
    throw ContractError("FFT of length " + std::to_string(n_) + " given input " + std::to_string(in.size()) +
                        " / output " + std::to_string(out.size()));
  }
  if (work.size() < work_size()) throw ContractError("FFT scratch too small");

  if (!bluestein_) {
    if (n_ == 1) {
      out[0] = in[0];
      return;
    }
    recurse(out.data(), in.data(), 1, stages_.data(), work.data());
    return;
  }

  const auto& b = *bluestein_;
  auto padded_in = work.subspan(0, b.padded);
  auto freq = work.subspan(b.padded, b.padded);
  auto inner_work = work.subspan(2 * b.padded);
  for (std::size_t j = 0; j < n_; ++j) padded_in[j] = in[j] * b.chirp[j];
  std::fill(padded_in.begin() + static_cast<std::ptrdiff_t>(n_), padded_in.end(), Complex{});
  b.forward->execute(padded_in, freq, inner_work);
  for (std::size_t k = 0; k < b.padded; ++k) freq[k] *= b.kernel_freq[k];
  b.backward->execute(freq, padded_in, inner_work);
  const double scale = 1.0 / static_cast<double>(b.padded);
  for (std::size_t k = 0; k < n_; ++k) out[k] = padded_in[k] * b.chirp[k] * scale;
}

void FftPlan1D::recurse(Complex* out, const Complex* in, std::size_t fstride, const Stage* stage,
                        Complex* scratch) const {
  const std::size_t p = stage->radix;
  const std::size_t m = stage->remaining;
  if (m == 1) {
    for (std::size_t j = 0; j < p; ++j) out[j] = in[j * fstride];
  } else {
    for (std::size_t j = 0; j < p; ++j) recurse(out + j * m, in + j * fstride, fstride * p, stage + 1, scratch);
  }
  switch (p) {
    case 2: butterfly2(out, fstride, m); break;
    case 3: butterfly3(out, fstride, m); break;
    case 4: butterfly4(out, fstride, m); break;
    default: butterfly_generic(out, fstride, p, m, scratch); break;
  }
}

void FftPlan1D::butterfly2(Complex* out, std::size_t fstride, std::size_t m) const {
  for (std::size_t k = 0; k < m; ++k) {
    const Complex t = out[k + m] * twiddles_[k * fstride];
    out[k + m] = out[k] - t;
    out[k] += t;
  }
}

void FftPlan1D::butterfly3(Complex* out, std::size_t fstride, std::size_t m) const {
  // Imaginary part of exp(sign * 2*pi*i / 3).
  const double epi3 = twiddles_[fstride * m].imag();
  for (std::size_t k = 0; k < m; ++k) {
    const Complex s1 = out[k + m] * twiddles_[k * fstride];
    const Complex s2 = out[k + 2 * m] * twiddles_[2 * k * fstride];
    const Complex s3 = s1 + s2;
    const Complex s0 = (s1 - s2) * epi3;
    const Complex half = out[k] - 0.5 * s3;
    out[k] += s3;
    out[k + 2 * m] = {half.real() + s0.imag(), half.imag() - s0.real()};
    out[k + m] = {half.real() - s0.imag(), half.imag() + s0.real()};
  }
}

void FftPlan1D::butterfly4(Complex* out, std::size_t fstride, std::size_t m) const {
  const bool backward = direction_ == Direction::Backward;
  for (std::size_t k = 0; k < m; ++k) {
    const Complex s0 = out[k + m] * twiddles_[k * fstride];
    const Complex s1 = out[k + 2 * m] * twiddles_[2 * k * fstride];
    const Complex s2 = out[k + 3 * m] * twiddles_[3 * k * fstride];
    const Complex s5 = out[k] - s1;
    const Complex base = out[k] + s1;
    const Complex s3 = s0 + s2;
    const Complex s4 = s0 - s2;
    out[k + 2 * m] = base - s3;
    out[k] = base + s3;
    if (backward) {
      out[k + m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
      out[k + 3 * m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
    } else {
      out[k + m] = {s5.real() + s4.imag(), s5.imag() - s4.real()};
      out[k + 3 * m] = {s5.real() - s4.imag(), s5.imag() + s4.real()};
    }
  }
}

void FftPlan1D::butterfly_generic(Complex* out, std::size_t fstride, std::size_t p, std::size_t m,
                                  Complex* scratch) const {
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t q = 0; q < p; ++q) scratch[q] = out[u + q * m];
    for (std::size_t q1 = 0; q1 < p; ++q1) {
      const std::size_t k = u + q1 * m;
      Complex acc = scratch[0];
      std::size_t tw = 0;
      for (std::size_t q = 1; q < p; ++q) {
        tw += fstride * k;
        if (tw >= n_) tw %= n_;
        acc += scratch[q] * twiddles_[tw];
      }
      out[k] = acc;
    }
  }
}

ComplexBuf fft1d(const FftPlan1D& plan, std::span<const Complex> row) {
  if (row.size() != plan.size()) {
    throw ContractError("fft1d: row has " + std::to_string(row.size()) + " points, plan expects " +
                        std::to_string(plan.size()));
  }
  ComplexBuf out(plan.size());
  std::vector<Complex> work(plan.work_size());
  plan.execute(row, out, work);
  return out;
}

void fft_rows(const FftPlan1D& plan, std::span<const Complex> in, std::span<Complex> out, std::size_t row_count,
              std::span<Complex> work) {
  const std::size_t n = plan.size();
  if (in.size() != row_count * n || out.size() != row_count * n) {
    throw ContractError("fft_rows: expected " + std::to_string(row_count) + " rows of " + std::to_string(n) +
                        " points, got input " + std::to_string(in.size()) + " / output " +
                        std::to_string(out.size()));
  }
  for (std::size_t r = 0; r < row_count; ++r) plan.execute(in.subspan(r * n, n), out.subspan(r * n, n), work);
}

ComplexBuf fft_rows(const FftPlan1D& plan, std::span<const Complex> in, std::size_t row_count) {
  ComplexBuf out(in.size());
  std::vector<Complex> work(plan.work_size());
  fft_rows(plan, in, out, row_count, work);
  return out;
}

}  // namespace adfft
