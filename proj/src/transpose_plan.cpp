#include "adfft/transpose_plan.hpp"

#include <algorithm>

namespace adfft {

int RankPlan::recv_peer_count() const {
  int n = 0;
  for (int q = 0; q < np; ++q) n += recv_count(q) > 0 ? 1 : 0;
  return n;
}

namespace {

// Offsets within a row-major block of the source ordering map to target
// linear indices with a fixed stride per source axis. Precomputing those
// strides avoids a delinearize/linearize round trip per point.
struct IndexMapper {
  std::array<std::size_t, 3> src_len{};
  std::array<std::size_t, 3> dst_stride_of_src_axis{};

  IndexMapper(const GridDims& dims, DimOrder src, DimOrder dst) {
    src_len = permuted_lengths(src, dims);
    const auto dst_len = permuted_lengths(dst, dims);
    const auto src_axes = axes_of(src);
    const auto dst_axes = axes_of(dst);
    std::array<std::size_t, 3> stride_of_axis{};
    stride_of_axis[dst_axes[2]] = 1;
    stride_of_axis[dst_axes[1]] = dst_len[2];
    stride_of_axis[dst_axes[0]] = dst_len[1] * dst_len[2];
    for (int pos = 0; pos < 3; ++pos) dst_stride_of_src_axis[pos] = stride_of_axis[src_axes[pos]];
  }

  std::size_t operator()(std::size_t src_linear) const noexcept {
    const std::size_t plane = src_len[1] * src_len[2];
    const std::size_t i = src_linear / plane;
    const std::size_t rem = src_linear - i * plane;
    const std::size_t j = rem / src_len[2];
    const std::size_t k = rem - j * src_len[2];
    return i * dst_stride_of_src_axis[0] + j * dst_stride_of_src_axis[1] + k * dst_stride_of_src_axis[2];
  }
};

}  // namespace

RankPlan build_rank_plan(const GridDims& dims, int np, DimOrder src, DimOrder dst, int myid) {
  const RankInfo rank(myid, np);
  RankPlan plan;
  plan.myid = myid;
  plan.np = np;
  plan.src = slab_of(dims, src, rank);
  plan.dst = slab_of(dims, dst, rank);

  const auto src_bounds = boundaries(dims, src, np);
  const auto dst_bounds = boundaries(dims, dst, np);
  const IndexMapper src_to_dst(dims, src, dst);
  const IndexMapper dst_to_src(dims, dst, src);
  const auto peers = static_cast<std::size_t>(np);

  // Send side: bucket outgoing points by receiver, then order each bucket by
  // target linear index.
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> outgoing(peers);
  for (std::size_t off = 0; off < plan.src.count; ++off) {
    const std::size_t target = src_to_dst(plan.src.x_start + off);
    const int q = owner_of(dst_bounds, target);
    if (q != myid) outgoing[static_cast<std::size_t>(q)].emplace_back(target, off);
  }
  plan.send_displs.assign(peers + 1, 0);
  for (std::size_t q = 0; q < peers; ++q) {
    std::sort(outgoing[q].begin(), outgoing[q].end());
    plan.send_displs[q + 1] = plan.send_displs[q] + outgoing[q].size();
  }
  plan.send_index.reserve(plan.send_displs.back());
  for (const auto& bucket : outgoing) {
    for (const auto& entry : bucket) plan.send_index.push_back(entry.second);
  }

  // Receive side: walking the target slab in order yields each peer's batch
  // already sorted by target linear index.
  std::vector<std::vector<std::size_t>> incoming(peers);
  for (std::size_t off = 0; off < plan.dst.count; ++off) {
    const std::size_t origin = dst_to_src(plan.dst.x_start + off);
    const int p = owner_of(src_bounds, origin);
    if (p == myid) {
      plan.local_src.push_back(origin - plan.src.x_start);
      plan.local_dst.push_back(off);
    } else {
      incoming[static_cast<std::size_t>(p)].push_back(off);
    }
  }
  plan.recv_displs.assign(peers + 1, 0);
  for (std::size_t p = 0; p < peers; ++p) plan.recv_displs[p + 1] = plan.recv_displs[p] + incoming[p].size();
  plan.recv_index.reserve(plan.recv_displs.back());
  for (const auto& bucket : incoming) plan.recv_index.insert(plan.recv_index.end(), bucket.begin(), bucket.end());

  return plan;
}

TransposePlan build_plan(const GridDims& dims, int np, DimOrder src, DimOrder dst) {
  // Validate both orderings before building anything.
  form_of(dims, src, np);
  form_of(dims, dst, np);
  TransposePlan plan;
  plan.dims = dims;
  plan.np = np;
  plan.src_order = src;
  plan.dst_order = dst;
  plan.ranks.reserve(static_cast<std::size_t>(np));
  for (int r = 0; r < np; ++r) plan.ranks.push_back(build_rank_plan(dims, np, src, dst, r));
  return plan;
}

std::pair<TransposePlan, TransposePlan> pipeline_plans(const GridDims& dims, int np) {
  for (auto order : kAllOrders) form_of(dims, order, np);
  return {build_plan(dims, np, DimOrder::ABC, DimOrder::CAB), build_plan(dims, np, DimOrder::CAB, DimOrder::CBA)};
}

VolumeReport volume_of(const TransposePlan& plan) {
  VolumeReport report;
  report.per_rank_bytes.reserve(plan.ranks.size());
  for (const auto& rank : plan.ranks) {
    report.per_rank_bytes.push_back(rank.total_send_bytes());
    report.total_bytes += rank.total_send_bytes();
  }
  const bool two_d = form_of(plan.dims, plan.src_order, plan.np) == DecompForm::TwoD ||
                     form_of(plan.dims, plan.dst_order, plan.np) == DecompForm::TwoD;
  report.form = two_d ? DecompForm::TwoD : DecompForm::OneD;
  return report;
}

VolumeReport pipeline_volume(const GridDims& dims, int np) {
  const auto [first, second] = pipeline_plans(dims, np);
  VolumeReport a = volume_of(first);
  const VolumeReport b = volume_of(second);
  a.total_bytes += b.total_bytes;
  for (std::size_t r = 0; r < a.per_rank_bytes.size(); ++r) a.per_rank_bytes[r] += b.per_rank_bytes[r];
  bool two_d = a.form == DecompForm::TwoD || b.form == DecompForm::TwoD ||
               form_of(dims, DimOrder::ABC, np) == DecompForm::TwoD;
  a.form = two_d ? DecompForm::TwoD : DecompForm::OneD;
  return a;
}

}  // namespace adfft
