#pragma once

// Adaptive slab decomposition.
//
// The grid is flattened to a 1-D index under some ordering and cut into
// contiguous blocks, one per rank. When the rank count does not exceed the
// slowest permuted length P1 the cuts fall on whole (P2 x P3) planes (a 1-D
// decomposition); up to P1*P2 ranks the cuts fall on whole P3 rows (2-D).
// Either way every block holds complete rows of the fastest axis.

#include <cstddef>
#include <utility>
#include <vector>

#include "adfft/grid.hpp"

namespace adfft {

struct RankInfo {
  int myid = 0;
  int np = 1;

  /// Throws ContractError unless 0 <= myid < np.
  RankInfo(int myid_, int np_);
  RankInfo() = default;
};

enum class DecompForm { OneD, TwoD };

std::string_view to_string(DecompForm form) noexcept;

struct Slab {
  DimOrder order = DimOrder::ABC;
  std::size_t x_start = 0;
  /// Inclusive. Equal to x_start - 1 (wrapping) for an empty slab.
  std::size_t x_end = 0;
  std::size_t count = 0;
  DecompForm form = DecompForm::OneD;

  bool empty() const noexcept { return count == 0; }
  /// Number of complete rows of the fastest axis.
  std::size_t rows(const GridDims& dims) const noexcept { return count / permuted_lengths(order, dims)[2]; }
  bool contains(std::size_t x) const noexcept { return x >= x_start && x < x_start + count; }
};

/// Largest rank count the ordering can be split over (P1 * P2).
std::size_t max_ranks(const GridDims& dims, DimOrder order) noexcept;

/// Largest rank count valid for all three pipeline orderings.
std::size_t max_pipeline_ranks(const GridDims& dims) noexcept;

/// Form the decomposition takes for np ranks. Throws UnsupportedScaleError
/// when np < 1 or np > P1 * P2.
DecompForm form_of(const GridDims& dims, DimOrder order, int np);

/// First linear index owned by `myid`; myid == np yields dims.total().
/// Throws UnsupportedScaleError as form_of, BoundsError if myid is outside [0, np].
std::size_t boundary(const GridDims& dims, DimOrder order, int np, int myid);

Slab slab_of(const GridDims& dims, DimOrder order, const RankInfo& rank);

/// All boundaries for np ranks: np + 1 entries, first 0, last dims.total().
std::vector<std::size_t> boundaries(const GridDims& dims, DimOrder order, int np);

/// Rank owning linear index x, given the output of boundaries().
int owner_of(const std::vector<std::size_t>& bounds, std::size_t x);

/// Start and end corners of a non-empty slab in its own ordering.
std::pair<Coord3, Coord3> slab_corners(const Slab& slab, const GridDims& dims);

}  // namespace adfft
