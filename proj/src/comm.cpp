#include "adfft/comm.hpp"

#include <algorithm>
#include <string>

#include "adfft/error.hpp"

namespace adfft {

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::WaitAll: return "waitall";
    case Strategy::AllToAllVar: return "alltoallv";
    case Strategy::WaitAllBlock: return "waitall-block";
    case Strategy::WaitSome: return "waitsome";
    case Strategy::WaitSomeBlock: return "waitsome-block";
    case Strategy::PairwiseRing: return "pairwise";
  }
  return "?";
}

std::optional<Strategy> strategy_from_string(std::string_view name) noexcept {
  for (auto s : kAllStrategies) {
    if (name == to_string(s)) return s;
  }
  if (name == "sendrecv") return Strategy::PairwiseRing;
  return std::nullopt;
}

CommMethod CommMethod::parse(std::string_view text) {
  if (text == "auto") return automatic();
  if (text == "default") return default_method();
  constexpr std::string_view kUserPrefix = "user:";
  if (text.starts_with(kUserPrefix)) {
    if (auto s = strategy_from_string(text.substr(kUserPrefix.size()))) return user_select(*s);
  } else if (auto s = strategy_from_string(text)) {
    return named(*s);
  }
  throw ContractError("unknown communication method '" + std::string(text) +
                      "' (expected auto, default, waitall, alltoallv, waitall-block, waitsome, "
                      "waitsome-block, pairwise, or user:<method>)");
}

std::string CommMethod::to_string() const {
  switch (kind_) {
    case Kind::Auto: return "auto";
    case Kind::Default: return "default";
    case Kind::UserSelect: return "user:" + std::string(adfft::to_string(strategy_));
    case Kind::Named: break;
  }
  return std::string(adfft::to_string(strategy_));
}

void CommScratch::reserve(int np) {
  const auto n = 2 * static_cast<std::size_t>(np);
  requests.reserve(n);
  peers.reserve(n);
  completed.reserve(n);
}

std::size_t block_rounds(int np, std::size_t b_size) {
  if (b_size == 0) throw ContractError("block size must be at least 1");
  return (static_cast<std::size_t>(np) + b_size - 1) / b_size;
}

std::size_t block_send_target(int rank, std::size_t round, int np, std::size_t b_size) {
  const std::size_t blocks = block_rounds(np, b_size);
  return (static_cast<std::size_t>(rank) / b_size + round) % blocks;
}

namespace {

std::span<const Complex> send_block(const Exchange& ex, int peer) {
  const auto q = static_cast<std::size_t>(peer);
  const auto& d = ex.plan->send_displs;
  return ex.send.subspan(d[q], d[q + 1] - d[q]);
}

std::span<Complex> recv_block(const Exchange& ex, int peer) {
  const auto q = static_cast<std::size_t>(peer);
  const auto& d = ex.plan->recv_displs;
  return ex.recv.subspan(d[q], d[q + 1] - d[q]);
}

void check_buffers(const Exchange& ex, Transport& t) {
  if (ex.plan == nullptr) throw ContractError("exchange without a plan");
  if (ex.plan->np != t.size() || ex.plan->myid != t.rank()) {
    throw ContractError("plan for rank " + std::to_string(ex.plan->myid) + "/" + std::to_string(ex.plan->np) +
                        " used on transport rank " + std::to_string(t.rank()) + "/" + std::to_string(t.size()));
  }
  if (ex.send.size() < ex.plan->total_send() || ex.recv.size() < ex.plan->total_recv()) {
    throw ContractError("exchange buffers smaller than the plan requires");
  }
}

// Holds either the caller's scratch or a local one.
class ScratchRef {
 public:
  ScratchRef(const Exchange& ex, int np) : ptr_(ex.scratch) {
    if (ptr_ == nullptr) {
      local_.reserve(np);
      ptr_ = &local_;
    }
  }
  CommScratch& get() { return *ptr_; }

 private:
  CommScratch local_;
  CommScratch* ptr_;
};

// Posts receives from the ranks in [recv_lo, recv_hi) and sends to the ranks
// in [send_lo, send_hi), skipping self and empty batches. Receive requests
// come first in scratch.requests and their peers are recorded in scratch.peers.
// Returns the number of receives posted.
std::size_t post_range(const Exchange& ex, Transport& t, CommScratch& s, int recv_lo, int recv_hi, int send_lo,
                       int send_hi, ExchangeStats& stats) {
  const int me = t.rank();
  s.requests.clear();
  s.peers.clear();
  for (int q = recv_lo; q < recv_hi; ++q) {
    if (q == me || ex.plan->recv_count(q) == 0) continue;
    s.requests.push_back(t.irecv(ex.phase, q, recv_block(ex, q)));
    s.peers.push_back(q);
  }
  const std::size_t recvs = s.requests.size();
  for (int q = send_lo; q < send_hi; ++q) {
    if (q == me || ex.plan->send_count(q) == 0) continue;
    s.requests.push_back(t.isend(ex.phase, q, send_block(ex, q)));
    ++stats.messages_posted;
  }
  return recvs;
}

// Drains the first `recvs` requests of scratch.requests with wait_some,
// handing each completed block to on_arrival, then waits for the sends.
void drain_with_arrivals(const Exchange& ex, Transport& t, CommScratch& s, std::size_t recvs,
                         const ArrivalFn& on_arrival, ExchangeStats& stats) {
  if (s.requests.empty()) return;
  // Sends sit behind the receives; keep them aside while receives are compacted.
  const std::size_t sends = s.requests.size() - recvs;
  std::rotate(s.requests.begin(), s.requests.begin() + static_cast<std::ptrdiff_t>(recvs), s.requests.end());
  // Now sends occupy [0, sends) and receives [sends, end).
  std::size_t pending_begin = sends;
  while (s.requests.size() > pending_begin) {
    std::span<const Request> pending(s.requests.data() + pending_begin, s.requests.size() - pending_begin);
    s.completed.resize(pending.size());
    const std::size_t done = t.wait_some(pending, s.completed);
    s.completed.resize(done);
    std::sort(s.completed.begin(), s.completed.end(), std::greater<>());
    for (std::size_t idx : s.completed) {
      const int peer = s.peers[idx];
      if (on_arrival) on_arrival(peer, recv_block(ex, peer));
      ++stats.arrivals;
      s.requests[pending_begin + idx] = s.requests.back();
      s.requests.pop_back();
      s.peers[idx] = s.peers.back();
      s.peers.pop_back();
    }
  }
  t.wait_all(std::span<const Request>(s.requests.data(), sends));
  t.reset_requests();
}

void wait_everything(Transport& t, CommScratch& s) {
  if (s.requests.empty()) return;
  t.wait_all(s.requests);
  t.reset_requests();
}

int block_begin(std::size_t block, std::size_t b_size) { return static_cast<int>(block * b_size); }
int block_end(std::size_t block, std::size_t b_size, int np) {
  return static_cast<int>(std::min<std::size_t>((block + 1) * b_size, static_cast<std::size_t>(np)));
}

ExchangeStats run_blocks(const Exchange& ex, Transport& t, std::size_t b_size, const ArrivalFn* on_arrival) {
  check_buffers(ex, t);
  ExchangeStats stats;
  const int np = t.size();
  const std::size_t rounds = block_rounds(np, b_size);
  ScratchRef s(ex, np);
  const int me = t.rank();
  const std::size_t own = static_cast<std::size_t>(me) / b_size;
  for (std::size_t r = 0; r < rounds; ++r) {
    const std::size_t to = (own + r) % rounds;
    const std::size_t from = (own + rounds - r) % rounds;
    const std::size_t recvs = post_range(ex, t, s.get(), block_begin(from, b_size),
                                         block_end(from, b_size, np), block_begin(to, b_size),
                                         block_end(to, b_size, np), stats);
    if (on_arrival != nullptr) {
      drain_with_arrivals(ex, t, s.get(), recvs, *on_arrival, stats);
    } else {
      stats.arrivals += recvs;
      wait_everything(t, s.get());
    }
    ++stats.rounds;
  }
  return stats;
}

}  // namespace

ExchangeStats run_waitall(const Exchange& ex, Transport& t) {
  check_buffers(ex, t);
  ExchangeStats stats;
  const int np = t.size();
  if (np == 1) return stats;
  ScratchRef s(ex, np);
  stats.arrivals = post_range(ex, t, s.get(), 0, np, 0, np, stats);
  wait_everything(t, s.get());
  stats.rounds = 1;
  return stats;
}

ExchangeStats run_alltoallv(const Exchange& ex, Transport& t) {
  check_buffers(ex, t);
  ExchangeStats stats;
  const int np = t.size();
  if (np == 1) return stats;
  t.all_to_all_variable(ex.phase, ex.send, ex.plan->send_displs, ex.recv, ex.plan->recv_displs);
  t.reset_requests();
  for (int q = 0; q < np; ++q) {
    if (q == t.rank()) continue;
    stats.messages_posted += ex.plan->send_count(q) > 0 ? 1 : 0;
    stats.arrivals += ex.plan->recv_count(q) > 0 ? 1 : 0;
  }
  stats.rounds = 1;
  return stats;
}

ExchangeStats run_waitall_block(const Exchange& ex, Transport& t, std::size_t b_size) {
  return run_blocks(ex, t, b_size, nullptr);
}

ExchangeStats run_waitsome(const Exchange& ex, Transport& t, const ArrivalFn& on_arrival) {
  check_buffers(ex, t);
  ExchangeStats stats;
  const int np = t.size();
  if (np == 1) return stats;
  ScratchRef s(ex, np);
  const std::size_t recvs = post_range(ex, t, s.get(), 0, np, 0, np, stats);
  drain_with_arrivals(ex, t, s.get(), recvs, on_arrival, stats);
  stats.rounds = 1;
  return stats;
}

ExchangeStats run_waitsome_block(const Exchange& ex, Transport& t, std::size_t b_size, const ArrivalFn& on_arrival) {
  return run_blocks(ex, t, b_size, &on_arrival);
}

ExchangeStats run_pairwise_ring(const Exchange& ex, Transport& t) {
  check_buffers(ex, t);
  ExchangeStats stats;
  const int np = t.size();
  const int me = t.rank();
  for (int step = 1; step < np; ++step) {
    const int dst = (me + step) % np;
    const int src = (me - step + np) % np;
    t.exchange_pairwise(ex.phase, dst, send_block(ex, dst), src, recv_block(ex, src));
    t.reset_requests();
    stats.messages_posted += ex.plan->send_count(dst) > 0 ? 1 : 0;
    stats.arrivals += ex.plan->recv_count(src) > 0 ? 1 : 0;
    ++stats.rounds;
  }
  return stats;
}

ExchangeStats run_strategy(Strategy s, const Exchange& ex, Transport& t, std::size_t b_size,
                           const ArrivalFn& on_arrival) {
  switch (s) {
    case Strategy::WaitAll: return run_waitall(ex, t);
    case Strategy::AllToAllVar: return run_alltoallv(ex, t);
    case Strategy::WaitAllBlock: return run_waitall_block(ex, t, b_size);
    case Strategy::WaitSome: return run_waitsome(ex, t, on_arrival);
    case Strategy::WaitSomeBlock: return run_waitsome_block(ex, t, b_size, on_arrival);
    case Strategy::PairwiseRing: return run_pairwise_ring(ex, t);
  }
  throw ContractError("unknown strategy");
}

bool unpacks_on_arrival(Strategy s) noexcept {
  return s == Strategy::WaitSome || s == Strategy::WaitSomeBlock;
}

void pack(const RankPlan& plan, std::span<const Complex> src_slab, std::span<Complex> send) {
  const auto& idx = plan.send_index;
  for (std::size_t i = 0; i < idx.size(); ++i) send[i] = src_slab[idx[i]];
}

void unpack_peer(const RankPlan& plan, int peer, std::span<const Complex> block, std::span<Complex> dst_slab) {
  const auto map = plan.recv_map(peer);
  for (std::size_t i = 0; i < map.size(); ++i) dst_slab[map[i]] = block[i];
}

void unpack_all(const RankPlan& plan, std::span<const Complex> recv, std::span<Complex> dst_slab) {
  const auto& idx = plan.recv_index;
  for (std::size_t i = 0; i < idx.size(); ++i) dst_slab[idx[i]] = recv[i];
}

void copy_local(const RankPlan& plan, std::span<const Complex> src_slab, std::span<Complex> dst_slab) {
  for (std::size_t i = 0; i < plan.local_src.size(); ++i) dst_slab[plan.local_dst[i]] = src_slab[plan.local_src[i]];
}

}  // namespace adfft
