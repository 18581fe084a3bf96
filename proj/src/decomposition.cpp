#include "adfft/decomposition.hpp"

#include <algorithm>
#include <string>

#include "adfft/error.hpp"

namespace adfft {

RankInfo::RankInfo(int myid_, int np_) : myid(myid_), np(np_) {
  if (np < 1 || myid < 0 || myid >= np) {
    throw ContractError("invalid rank " + std::to_string(myid) + " of " + std::to_string(np));
  }
}

std::string_view to_string(DecompForm form) noexcept {
  return form == DecompForm::OneD ? "1d" : "2d";
}

std::size_t max_ranks(const GridDims& dims, DimOrder order) noexcept {
  const auto p = permuted_lengths(order, dims);
  return p[0] * p[1];
}

std::size_t max_pipeline_ranks(const GridDims& dims) noexcept {
  std::size_t limit = max_ranks(dims, DimOrder::ABC);
  for (auto order : kAllOrders) limit = std::min(limit, max_ranks(dims, order));
  return limit;
}

DecompForm form_of(const GridDims& dims, DimOrder order, int np) {
  const auto p = permuted_lengths(order, dims);
  if (np < 1 || static_cast<std::size_t>(np) > p[0] * p[1]) {
    throw UnsupportedScaleError("cannot split " + to_string(dims) + " under " + std::string(to_string(order)) +
                                " over " + std::to_string(np) + " ranks (supported: 1.." +
                                std::to_string(p[0] * p[1]) + ")");
  }
  return static_cast<std::size_t>(np) <= p[0] ? DecompForm::OneD : DecompForm::TwoD;
}

std::size_t boundary(const GridDims& dims, DimOrder order, int np, int myid) {
  const DecompForm form = form_of(dims, order, np);
  if (myid < 0 || myid > np) {
    throw BoundsError("rank " + std::to_string(myid) + " outside [0, " + std::to_string(np) + "]");
  }
  const auto p = permuted_lengths(order, dims);
  const auto id = static_cast<std::size_t>(myid);
  const auto n = static_cast<std::size_t>(np);
  if (form == DecompForm::OneD) return (p[0] * id / n) * p[1] * p[2];
  return (p[0] * p[1] * id / n) * p[2];
}

Slab slab_of(const GridDims& dims, DimOrder order, const RankInfo& rank) {
  Slab s;
  s.order = order;
  s.form = form_of(dims, order, rank.np);
  s.x_start = boundary(dims, order, rank.np, rank.myid);
  const std::size_t next = boundary(dims, order, rank.np, rank.myid + 1);
  s.count = next - s.x_start;
  s.x_end = next - 1;
  return s;
}

std::vector<std::size_t> boundaries(const GridDims& dims, DimOrder order, int np) {
  std::vector<std::size_t> b(static_cast<std::size_t>(np) + 1);
  for (int r = 0; r <= np; ++r) b[static_cast<std::size_t>(r)] = boundary(dims, order, np, r);
  return b;
}

int owner_of(const std::vector<std::size_t>& bounds, std::size_t x) {
  if (bounds.size() < 2 || x >= bounds.back()) {
    throw BoundsError("linear index " + std::to_string(x) + " has no owner");
  }
  // Last boundary <= x; skips over empty slabs sharing the same start.
  auto it = std::upper_bound(bounds.begin(), bounds.end(), x);
  return static_cast<int>(it - bounds.begin()) - 1;
}

std::pair<Coord3, Coord3> slab_corners(const Slab& slab, const GridDims& dims) {
  if (slab.empty()) throw ContractError("slab_corners: empty slab has no corners");
  return {delinearize(slab.order, dims, slab.x_start), delinearize(slab.order, dims, slab.x_end)};
}

}  // namespace adfft
