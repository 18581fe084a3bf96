#pragma once

// Redistribution plans between two decompositions of the same grid.
//
// For one rank a plan lists which of its source-slab points stay local (and
// where they land in the target slab), which go to each peer, and where each
// peer's incoming points land. Both sides order a (sender, receiver) batch by
// ascending linear index under the target ordering, so payloads carry no
// per-point indices.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "adfft/decomposition.hpp"
#include "adfft/grid.hpp"

namespace adfft {

struct RankPlan {
  int myid = 0;
  int np = 1;
  Slab src;
  Slab dst;

  /// Retained points: local_src[i] (offset in src slab) -> local_dst[i] (offset in dst slab).
  std::vector<std::size_t> local_src;
  std::vector<std::size_t> local_dst;

  /// Source-slab offsets to pack, grouped by peer; peer q's run is
  /// send_index[send_displs[q] .. send_displs[q+1]).
  std::vector<std::size_t> send_index;
  std::vector<std::size_t> send_displs;
  /// Target-slab offsets to unpack into, grouped by peer the same way.
  std::vector<std::size_t> recv_index;
  std::vector<std::size_t> recv_displs;

  std::span<const std::size_t> send_map(int peer) const {
    return span_of(send_index, send_displs, peer);
  }
  std::span<const std::size_t> recv_map(int peer) const {
    return span_of(recv_index, recv_displs, peer);
  }
  std::size_t send_count(int peer) const { return send_map(peer).size(); }
  std::size_t recv_count(int peer) const { return recv_map(peer).size(); }
  std::uint64_t send_bytes(int peer) const { return send_count(peer) * kBytesPerPoint; }
  std::uint64_t recv_bytes(int peer) const { return recv_count(peer) * kBytesPerPoint; }
  std::size_t total_send() const noexcept { return send_index.size(); }
  std::size_t total_recv() const noexcept { return recv_index.size(); }
  std::uint64_t total_send_bytes() const noexcept { return total_send() * kBytesPerPoint; }
  /// Peers with a nonempty incoming batch.
  int recv_peer_count() const;

 private:
  static std::span<const std::size_t> span_of(const std::vector<std::size_t>& index,
                                              const std::vector<std::size_t>& displs, int peer) {
    const auto q = static_cast<std::size_t>(peer);
    return std::span<const std::size_t>(index).subspan(displs[q], displs[q + 1] - displs[q]);
  }
};

struct TransposePlan {
  GridDims dims;
  int np = 1;
  DimOrder src_order = DimOrder::ABC;
  DimOrder dst_order = DimOrder::ABC;
  std::vector<RankPlan> ranks;
};

/// Plan for a single rank. Throws UnsupportedScaleError if np is invalid for either ordering.
RankPlan build_rank_plan(const GridDims& dims, int np, DimOrder src, DimOrder dst, int myid);

/// Plans for every rank.
TransposePlan build_plan(const GridDims& dims, int np, DimOrder src, DimOrder dst);

/// The two redistributions of the transform pipeline: abc -> cab, then cab -> cba.
std::pair<TransposePlan, TransposePlan> pipeline_plans(const GridDims& dims, int np);

struct VolumeReport {
  std::uint64_t total_bytes = 0;
  std::vector<std::uint64_t> per_rank_bytes;
  /// TwoD if either side of the redistribution is split in two dimensions.
  DecompForm form = DecompForm::OneD;
};

VolumeReport volume_of(const TransposePlan& plan);

/// Sum of both pipeline redistributions; form is the widest form seen.
VolumeReport pipeline_volume(const GridDims& dims, int np);

}  // namespace adfft
