#pragma once

// Grid dimensions, the three dimension orderings used by the transform
// pipeline, and conversion between 3-D coordinates and row-major linear
// indices.
//
// Axis names follow the usual convention: a is the first axis (length n1),
// b the second (n2), c the third (n3). An ordering lists the axes from
// slowest to fastest varying, so ABC is plain row-major storage of A(a,b,c),
// CAB stores A with c slowest and b fastest, and CBA with a fastest.

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace adfft {

using Complex = std::complex<double>;
using ComplexBuf = std::vector<Complex>;

/// Bytes occupied by one double-precision complex sample, on the wire and in memory.
inline constexpr std::size_t kBytesPerPoint = 2 * sizeof(double);
static_assert(sizeof(Complex) == kBytesPerPoint);

struct GridDims {
  std::size_t n1 = 1;
  std::size_t n2 = 1;
  std::size_t n3 = 1;

  /// Throws ContractError if any length is zero or the total overflows.
  GridDims(std::size_t n1_, std::size_t n2_, std::size_t n3_);
  GridDims() = default;

  std::size_t total() const noexcept { return n1 * n2 * n3; }
  std::size_t operator[](int axis) const noexcept { return axis == 0 ? n1 : axis == 1 ? n2 : n3; }

  friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Parses "N1xN2xN3".
GridDims parse_dims(std::string_view text);
std::string to_string(const GridDims& dims);

enum class DimOrder : std::uint8_t { ABC, CAB, CBA };

inline constexpr std::array<DimOrder, 3> kAllOrders = {DimOrder::ABC, DimOrder::CAB, DimOrder::CBA};

std::string_view to_string(DimOrder order) noexcept;

/// Axis index (0 = a, 1 = b, 2 = c) placed at each position of the ordering,
/// slowest first. ABC -> {0,1,2}, CAB -> {2,0,1}, CBA -> {2,1,0}.
std::array<int, 3> axes_of(DimOrder order) noexcept;

/// Grid lengths listed in the ordering's axis sequence.
std::array<std::size_t, 3> permuted_lengths(DimOrder order, const GridDims& dims) noexcept;

/// Coordinates in the permuted axis sequence of some ordering: i runs along
/// the slowest axis, k along the fastest.
struct Coord3 {
  std::size_t i = 0;
  std::size_t j = 0;
  std::size_t k = 0;

  friend bool operator==(const Coord3&, const Coord3&) = default;
};

/// Row-major linear index of `c` under the permuted lengths of `order`.
/// Throws BoundsError for an out-of-range coordinate.
std::size_t linearize(DimOrder order, const GridDims& dims, const Coord3& c);

/// Inverse of linearize. Throws BoundsError when x >= dims.total().
Coord3 delinearize(DimOrder order, const GridDims& dims, std::size_t x);

/// Permuted coordinate -> (a, b, c).
std::array<std::size_t, 3> to_axes(DimOrder order, const Coord3& c) noexcept;

/// (a, b, c) -> permuted coordinate.
Coord3 from_axes(DimOrder order, const std::array<std::size_t, 3>& abc) noexcept;

/// Linear index of the same physical point under another ordering.
std::size_t relinearize(const GridDims& dims, DimOrder from, DimOrder to, std::size_t x);

/// Rewrites a full global array stored under `from` into `to` layout.
ComplexBuf reorder(std::span<const Complex> global, const GridDims& dims, DimOrder from, DimOrder to);

}  // namespace adfft
