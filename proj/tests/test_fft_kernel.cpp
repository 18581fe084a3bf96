#include <doctest.h>

#include "adfft/error.hpp"
#include "adfft/fft_kernel.hpp"
#include "support.hpp"

using namespace adfft;

TEST_CASE("impulse and constant inputs") {
  const FftPlan1D plan(8, Direction::Forward);
  ComplexBuf delta(8);
  delta[0] = 1;
  for (const Complex& z : fft1d(plan, delta)) CHECK(std::abs(z - Complex(1, 0)) < 1e-15);
  const ComplexBuf ones(8, Complex(1, 0));
  const auto dc = fft1d(plan, ones);
  CHECK(std::abs(dc[0] - Complex(8, 0)) < 1e-14);
  for (std::size_t k = 1; k < 8; ++k) CHECK(std::abs(dc[k]) < 1e-14);
}

TEST_CASE("matches the naive DFT for every length 1..64 in both directions") {
  for (std::size_t n = 1; n <= 64; ++n) {
    const auto x = oracle::random_vec(n, static_cast<unsigned>(n));
    const auto fwd = fft1d(FftPlan1D(n, Direction::Forward), x);
    const auto bwd = fft1d(FftPlan1D(n, Direction::Backward), x);
    CAPTURE(n);
    CHECK(oracle::max_abs_diff(fwd, oracle::dft(x, -1)) < 1e-12);
    CHECK(oracle::max_abs_diff(bwd, oracle::dft(x, +1)) < 1e-12);
  }
}

TEST_CASE("large prime factors go through the chirp-z path") {
  for (std::size_t n : {17u, 97u, 127u, 2u * 101u, 3u * 3u * 37u, 1009u}) {
    const FftPlan1D plan(n, Direction::Forward);
    CHECK(plan.uses_bluestein());
    const auto x = oracle::random_vec(n, 7);
    CAPTURE(n);
    CHECK(oracle::max_abs_diff(fft1d(plan, x), oracle::dft(x)) < 1e-10);
  }
  CHECK_FALSE(FftPlan1D(13 * 11 * 8, Direction::Forward).uses_bluestein());
  CHECK_FALSE(FftPlan1D(12, Direction::Forward).uses_bluestein());
}

TEST_CASE("linearity, Parseval and round trip") {
  for (std::size_t n : {12u, 16u, 30u, 49u, 53u}) {
    const FftPlan1D f(n, Direction::Forward), b(n, Direction::Backward);
    const auto x = oracle::random_vec(n, 1), y = oracle::random_vec(n, 2);
    const Complex alpha(0.3, -1.2), beta(-2.0, 0.5);
    ComplexBuf mix(n);
    for (std::size_t i = 0; i < n; ++i) mix[i] = alpha * x[i] + beta * y[i];
    const auto fx = fft1d(f, x), fy = fft1d(f, y), fm = fft1d(f, mix);
    double err = 0, scale = 0;
    for (std::size_t i = 0; i < n; ++i) {
      err = std::max(err, std::abs(fm[i] - (alpha * fx[i] + beta * fy[i])));
      scale = std::max(scale, std::abs(fm[i]));
    }
    CHECK(err / scale < 1e-12);

    double ex = 0, eX = 0;
    for (std::size_t i = 0; i < n; ++i) {
      ex += std::norm(x[i]);
      eX += std::norm(fx[i]);
    }
    CHECK(std::abs(eX - double(n) * ex) / (double(n) * ex) < 1e-10);

    const auto back = fft1d(b, fx);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(back[i] / double(n) - x[i]) < 1e-12);
  }
}

TEST_CASE("fft_rows transforms rows independently") {
  const FftPlan1D plan(4, Direction::Forward);
  CHECK(fft_rows(plan, ComplexBuf{}, 0).empty());

  ComplexBuf deltas(16);
  for (std::size_t r = 0; r < 4; ++r) deltas[r * 4] = 1;
  for (const Complex& z : fft_rows(plan, deltas, 4)) CHECK(std::abs(z - Complex(1, 0)) < 1e-15);

  const auto data = oracle::random_vec(64, 3);
  const auto out = fft_rows(plan, data, 16);
  for (std::size_t r = 0; r < 16; ++r) {
    const auto expect = oracle::dft(std::span<const Complex>(data).subspan(r * 4, 4));
    CHECK(oracle::max_abs_diff(std::span<const Complex>(out).subspan(r * 4, 4), expect) < 1e-13);
  }
}

TEST_CASE("size mismatches are contract errors") {
  const FftPlan1D plan(8, Direction::Forward);
  CHECK_THROWS_AS(fft1d(plan, ComplexBuf(7)), ContractError);
  CHECK_THROWS_AS(fft_rows(plan, ComplexBuf(20), 3), ContractError);
  CHECK_THROWS_AS(FftPlan1D(0, Direction::Forward), ContractError);
}

TEST_CASE("plans are reusable and unchanged by execution") {
  const FftPlan1D plan(45, Direction::Forward);
  const auto x = oracle::random_vec(45, 9);
  const auto first = fft1d(plan, x);
  const auto second = fft1d(plan, x);
  CHECK(first == second);
}
