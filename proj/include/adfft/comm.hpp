#pragma once

// Scheduling strategies for the data exchange of one redistribution.
//
// Every strategy moves the same bytes: for each peer with a nonempty batch in
// the plan, the packed run of that peer's points. They differ only in how
// the sends and receives are posted and awaited:
//
//   WaitAll        post everything, wait for everything
//   AllToAllVar    a single variable-count collective
//   WaitAllBlock   rounds over blocks of b_size ranks, wait-all per round
//   WaitSome       post everything, unpack each receive as it completes
//   WaitSomeBlock  block rounds with per-arrival unpacking
//   PairwiseRing   np - 1 lockstep send/receive steps with rank +/- i

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adfft/grid.hpp"
#include "adfft/transport.hpp"
#include "adfft/transpose_plan.hpp"

namespace adfft {

enum class Strategy : std::uint8_t { WaitAll, AllToAllVar, WaitAllBlock, WaitSome, WaitSomeBlock, PairwiseRing };

inline constexpr std::array<Strategy, 6> kAllStrategies = {Strategy::WaitAll,      Strategy::AllToAllVar,
                                                           Strategy::WaitAllBlock, Strategy::WaitSome,
                                                           Strategy::WaitSomeBlock, Strategy::PairwiseRing};

inline constexpr Strategy kDefaultStrategy = Strategy::WaitSome;
inline constexpr std::size_t kDefaultBlockSize = 32;

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> strategy_from_string(std::string_view name) noexcept;

/// A requested communication method: a named strategy, automatic selection
/// by timing all six, a user-forced strategy (which also bypasses tuning), or
/// the library default.
class CommMethod {
 public:
  enum class Kind : std::uint8_t { Named, Auto, UserSelect, Default };

  static CommMethod named(Strategy s) noexcept { return {Kind::Named, s}; }
  static CommMethod automatic() noexcept { return {Kind::Auto, kDefaultStrategy}; }
  static CommMethod user_select(Strategy s) noexcept { return {Kind::UserSelect, s}; }
  static CommMethod default_method() noexcept { return {Kind::Default, kDefaultStrategy}; }

  Kind kind() const noexcept { return kind_; }
  /// The concrete strategy; meaningless for Auto.
  Strategy strategy() const noexcept { return strategy_; }
  bool needs_tuning() const noexcept { return kind_ == Kind::Auto; }

  /// Accepts a strategy name, "auto", "default", or "user:<strategy>".
  static CommMethod parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const CommMethod&, const CommMethod&) = default;

 private:
  CommMethod(Kind kind, Strategy s) noexcept : kind_(kind), strategy_(s) {}
  Kind kind_;
  Strategy strategy_;
};

/// Request bookkeeping reused across exchanges; reserve() once and the
/// strategies never grow it.
struct CommScratch {
  std::vector<Request> requests;
  std::vector<int> peers;
  std::vector<std::size_t> completed;

  void reserve(int np);
};

/// Buffers for one rank's side of a redistribution. `send` holds the packed
/// outgoing points laid out by plan.send_displs, `recv` receives incoming
/// points laid out by plan.recv_displs.
struct Exchange {
  std::uint32_t phase = 0;
  const RankPlan* plan = nullptr;
  std::span<const Complex> send;
  std::span<Complex> recv;
  /// Optional; a temporary is used when null.
  CommScratch* scratch = nullptr;
};

/// Called once per completed nonempty receive with the peer and its block of `recv`.
using ArrivalFn = std::function<void(int peer, std::span<const Complex> block)>;

struct ExchangeStats {
  /// Communication rounds (blocks) or ring steps executed.
  std::size_t rounds = 0;
  std::size_t arrivals = 0;
  std::size_t messages_posted = 0;
};

/// Number of rounds the block strategies use: ceil(np / b_size).
std::size_t block_rounds(int np, std::size_t b_size);

/// Block of ranks `rank` sends to in round r; it receives from block (own - r).
std::size_t block_send_target(int rank, std::size_t round, int np, std::size_t b_size);

ExchangeStats run_waitall(const Exchange& ex, Transport& t);
ExchangeStats run_alltoallv(const Exchange& ex, Transport& t);
ExchangeStats run_waitall_block(const Exchange& ex, Transport& t, std::size_t b_size = kDefaultBlockSize);
ExchangeStats run_waitsome(const Exchange& ex, Transport& t, const ArrivalFn& on_arrival);
ExchangeStats run_waitsome_block(const Exchange& ex, Transport& t, std::size_t b_size, const ArrivalFn& on_arrival);
ExchangeStats run_pairwise_ring(const Exchange& ex, Transport& t);

/// Runs `s`. Strategies without per-arrival unpacking ignore `on_arrival`;
/// the caller unpacks after return (see unpacks_on_arrival()).
ExchangeStats run_strategy(Strategy s, const Exchange& ex, Transport& t, std::size_t b_size,
                           const ArrivalFn& on_arrival);

bool unpacks_on_arrival(Strategy s) noexcept;

/// Gathers the plan's outgoing points from the source slab into `send`.
void pack(const RankPlan& plan, std::span<const Complex> src_slab, std::span<Complex> send);

/// Scatters one peer's received block into the target slab.
void unpack_peer(const RankPlan& plan, int peer, std::span<const Complex> block, std::span<Complex> dst_slab);

/// Scatters every peer's received block.
void unpack_all(const RankPlan& plan, std::span<const Complex> recv, std::span<Complex> dst_slab);

/// Copies retained points from source to target slab.
void copy_local(const RankPlan& plan, std::span<const Complex> src_slab, std::span<Complex> dst_slab);

}  // namespace adfft
