#pragma once

// Message-passing contract the communication strategies are written against.
//
// Messages are addressed by (source, destination, phase). Messages with the
// same triple are matched in send order; nothing is guaranteed across
// different peers, so callers must not depend on arrival order.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

#include "adfft/grid.hpp"

namespace adfft {

/// Phase ids used by the library. User traffic should pick ids >= kFirstUserPhase.
enum Phase : std::uint32_t {
  kPhaseFirstTranspose = 0,
  kPhaseSecondTranspose = 1,
  kPhaseGather = 2,
  kPhaseReduce = 3,
  kPhaseBroadcast = 4,
  kPhaseAllToAll = 5,
  kFirstUserPhase = 16,
};

/// Fixed-size message header. On the socket wire it is encoded as 20
/// little-endian bytes in field order.
struct MessageHeader {
  std::uint32_t phase = 0;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint64_t payload_bytes = 0;

  friend bool operator==(const MessageHeader&, const MessageHeader&) = default;
};

inline constexpr std::size_t kHeaderBytes = 20;

/// Opaque request handle, valid until the transport's next reset_requests().
using Request = std::size_t;

/// Per-rank traffic counters. Only non-empty payloads are counted as messages.
struct TrafficCounters {
  static constexpr std::size_t kTrackedPhases = 8;
  std::array<std::uint64_t, kTrackedPhases> bytes_by_phase{};
  std::uint64_t bytes_sent = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t empty_messages_sent = 0;

  std::uint64_t phase_bytes(std::uint32_t phase) const noexcept {
    return phase < kTrackedPhases ? bytes_by_phase[phase] : 0;
  }
};

class Transport {
 public:
  virtual ~Transport() = default;

  virtual int rank() const noexcept = 0;
  virtual int size() const noexcept = 0;

  /// Starts sending `payload` to `dst`. The payload may be reused once the
  /// returned request has completed.
  virtual Request isend(std::uint32_t phase, int dst, std::span<const Complex> payload) = 0;

  /// Posts a receive of exactly dest.size() points from `src`. A message of
  /// any other length is a CommError.
  virtual Request irecv(std::uint32_t phase, int src, std::span<Complex> dest) = 0;

  /// Blocks until every listed request has completed.
  virtual void wait_all(std::span<const Request> requests) = 0;

  /// Blocks until at least one of `pending` completes, writes the positions
  /// (indices into `pending`) of the requests found complete to `completed`
  /// and returns how many were written. Each request is reported at most once
  /// over its lifetime; already-reported requests must not be passed again.
  virtual std::size_t wait_some(std::span<const Request> pending, std::span<std::size_t> completed) = 0;

  /// Forgets all completed requests so handle storage can be reused.
  virtual void reset_requests() = 0;

  /// Blocking combined send to `dst` and receive from `src`.
  virtual void exchange_pairwise(std::uint32_t phase, int dst, std::span<const Complex> send, int src,
                                 std::span<Complex> recv);

  /// Variable-count exchange with every peer. Peer q's outgoing points are
  /// send[send_displs[q] .. send_displs[q+1]) and its incoming points land in
  /// recv[recv_displs[q] .. recv_displs[q+1]). The self block is ignored;
  /// empty blocks move no bytes.
  virtual void all_to_all_variable(std::uint32_t phase, std::span<const Complex> send,
                                   std::span<const std::size_t> send_displs, std::span<Complex> recv,
                                   std::span<const std::size_t> recv_displs);

  const TrafficCounters& counters() const noexcept { return counters_; }
  void reset_counters() noexcept { counters_ = {}; }

 protected:
  void count_send(std::uint32_t phase, std::size_t points) noexcept;

 private:
  TrafficCounters counters_;
};

/// Element-wise maximum of `values` across all ranks, result on every rank.
void allreduce_max(Transport& transport, std::span<double> values);

/// Element-wise sum across all ranks, result on every rank.
void allreduce_sum(Transport& transport, std::span<double> values);

/// Waits until every rank has entered.
void barrier(Transport& transport);

}  // namespace adfft
