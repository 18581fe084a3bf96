#include "adfft/grid.hpp"

#include <charconv>
#include <limits>
#include <string>

#include "adfft/error.hpp"

namespace adfft {

GridDims::GridDims(std::size_t n1_, std::size_t n2_, std::size_t n3_) : n1(n1_), n2(n2_), n3(n3_) {
  if (n1 == 0 || n2 == 0 || n3 == 0) {
    throw ContractError("grid lengths must be positive, got " + to_string(*this));
  }
  constexpr auto kMax = std::numeric_limits<std::size_t>::max();
  if (n1 > kMax / n2 || n1 * n2 > kMax / n3) {
    throw ContractError("grid " + to_string(*this) + " overflows the index type");
  }
}

GridDims parse_dims(std::string_view text) {
  std::array<std::size_t, 3> n{};
  std::size_t pos = 0;
  for (int axis = 0; axis < 3; ++axis) {
    if (axis > 0) {
      if (pos >= text.size() || (text[pos] != 'x' && text[pos] != 'X')) {
        throw ContractError("expected dims as N1xN2xN3, got '" + std::string(text) + "'");
      }
      ++pos;
    }
    const char* first = text.data() + pos;
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, n[axis]);
    if (ec != std::errc{} || ptr == first) {
      throw ContractError("expected dims as N1xN2xN3, got '" + std::string(text) + "'");
    }
    pos = static_cast<std::size_t>(ptr - text.data());
  }
  if (pos != text.size()) {
    throw ContractError("trailing characters in dims '" + std::string(text) + "'");
  }
  return GridDims(n[0], n[1], n[2]);
}

std::string to_string(const GridDims& dims) {
  return std::to_string(dims.n1) + "x" + std::to_string(dims.n2) + "x" + std::to_string(dims.n3);
}

std::string_view to_string(DimOrder order) noexcept {
  switch (order) {
    case DimOrder::ABC: return "abc";
    case DimOrder::CAB: return "cab";
    case DimOrder::CBA: return "cba";
  }
  return "?";
}

std::array<int, 3> axes_of(DimOrder order) noexcept {
  switch (order) {
    case DimOrder::ABC: return {0, 1, 2};
    case DimOrder::CAB: return {2, 0, 1};
    case DimOrder::CBA: return {2, 1, 0};
  }
  return {0, 1, 2};
}

std::array<std::size_t, 3> permuted_lengths(DimOrder order, const GridDims& dims) noexcept {
  const auto ax = axes_of(order);
  return {dims[ax[0]], dims[ax[1]], dims[ax[2]]};
}

std::size_t linearize(DimOrder order, const GridDims& dims, const Coord3& c) {
  const auto p = permuted_lengths(order, dims);
  if (c.i >= p[0] || c.j >= p[1] || c.k >= p[2]) {
    throw BoundsError("coordinate (" + std::to_string(c.i) + "," + std::to_string(c.j) + "," +
                      std::to_string(c.k) + ") outside " + to_string(dims) + " under " +
                      std::string(to_string(order)));
  }
  return c.i * p[1] * p[2] + c.j * p[2] + c.k;
}

Coord3 delinearize(DimOrder order, const GridDims& dims, std::size_t x) {
  if (x >= dims.total()) {
    throw BoundsError("linear index " + std::to_string(x) + " outside grid " + to_string(dims));
  }
  const auto p = permuted_lengths(order, dims);
  const std::size_t plane = p[1] * p[2];
  Coord3 c;
  c.i = x / plane;
  c.j = (x - c.i * plane) / p[2];
  c.k = x - c.i * plane - c.j * p[2];
  return c;
}

std::array<std::size_t, 3> to_axes(DimOrder order, const Coord3& c) noexcept {
  const auto ax = axes_of(order);
  std::array<std::size_t, 3> abc{};
  abc[ax[0]] = c.i;
  abc[ax[1]] = c.j;
  abc[ax[2]] = c.k;
  return abc;
}

Coord3 from_axes(DimOrder order, const std::array<std::size_t, 3>& abc) noexcept {
  const auto ax = axes_of(order);
  return {abc[ax[0]], abc[ax[1]], abc[ax[2]]};
}

std::size_t relinearize(const GridDims& dims, DimOrder from, DimOrder to, std::size_t x) {
  if (from == to) {
    if (x >= dims.total()) throw BoundsError("linear index " + std::to_string(x) + " outside grid");
    return x;
  }
  return linearize(to, dims, from_axes(to, to_axes(from, delinearize(from, dims, x))));
}

ComplexBuf reorder(std::span<const Complex> global, const GridDims& dims, DimOrder from, DimOrder to) {
  if (global.size() != dims.total()) {
    throw ContractError("reorder: array has " + std::to_string(global.size()) + " points, grid has " +
                        std::to_string(dims.total()));
  }
  ComplexBuf out(global.size());
  for (std::size_t x = 0; x < global.size(); ++x) {
    out[relinearize(dims, from, to, x)] = global[x];
  }
  return out;
}

}  // namespace adfft
