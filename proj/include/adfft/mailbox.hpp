#pragma once

// Receive-side matching shared by the in-process and socket transports.
//
// A Mailbox belongs to one receiving rank. Incoming messages either complete
// the oldest posted receive with the same (source, phase) or wait in an
// unbounded queue until such a receive is posted.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adfft/transport.hpp"

namespace adfft {

/// How wait_some reports completions. Natural reports whatever has
/// completed; Reversed only ever reports the most recently posted pending
/// receive (waiting for it if needed); Shuffled picks a pseudo-random one.
enum class CompletionOrder { Natural, Reversed, Shuffled };

class Mailbox {
 public:
  struct RecvState {
    std::uint32_t phase = 0;
    int src = 0;
    std::span<Complex> dest;
    bool done = false;
    std::string error;
  };

  /// Copies `payload` into a matching posted receive or queues it.
  void deliver(std::uint32_t phase, int src, std::span<const Complex> payload);
  void deliver(std::uint32_t phase, int src, std::vector<Complex>&& payload);

  /// Matches `state` against queued messages or registers it as posted.
  /// `state` must outlive its completion.
  void post(RecvState& state);

  /// Blocks until `state` is done or the mailbox fails; throws on failure.
  void wait(RecvState& state);

  /// Blocks until `ready()` (evaluated under the mailbox lock) holds; throws on failure.
  template <class Pred>
  void wait_until(Pred&& ready) {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return failed_ || ready(); });
    if (failed_) throw_failure();
  }

  /// Fails every current and future wait with `reason`.
  void fail(const std::string& reason, bool framing = false, int peer = -1);

  /// No more messages will arrive from `src`; receives it cannot satisfy fail.
  void close_source(int src);

  /// Forgets every posted receive (the owning endpoint is going away).
  void cancel_posted();

  std::mutex& mutex() noexcept { return mutex_; }

 private:
  using Key = std::pair<std::uint32_t, int>;

  void complete(RecvState& state, std::span<const Complex> payload);
  [[noreturn]] void throw_failure() const;
  void fail_unmatched_locked(int src);

  std::mutex mutex_;
  std::condition_variable cv_;
  std::map<Key, std::deque<std::vector<Complex>>> unexpected_;
  std::map<Key, std::deque<RecvState*>> posted_;
  std::set<int> closed_;
  bool failed_ = false;
  bool framing_failure_ = false;
  int failure_peer_ = -1;
  std::string failure_;
};

/// Transport base that receives through a Mailbox. Subclasses implement
/// isend() and deliver to the destination's mailbox by whatever route they use.
class MailboxTransport : public Transport {
 public:
  MailboxTransport(int rank, int size, Mailbox& inbox, CompletionOrder order = CompletionOrder::Natural,
                   std::uint64_t seed = 0);
  ~MailboxTransport() override;
  MailboxTransport(const MailboxTransport&) = delete;
  MailboxTransport& operator=(const MailboxTransport&) = delete;

  int rank() const noexcept override { return rank_; }
  int size() const noexcept override { return size_; }

  Request irecv(std::uint32_t phase, int src, std::span<Complex> dest) override;
  void wait_all(std::span<const Request> requests) override;
  std::size_t wait_some(std::span<const Request> pending, std::span<std::size_t> completed) override;
  void reset_requests() override;

  /// When enabled, records the source rank of every receive wait_some reports, in order.
  void set_completion_logging(bool on) { log_completions_ = on; }
  const std::vector<int>& completion_log() const noexcept { return completion_log_; }
  CompletionOrder completion_order() const noexcept { return order_; }

 protected:
  /// Registers an already-complete send request.
  Request completed_send();
  void check_peer(int peer) const;

 private:
  struct Slot {
    bool is_recv = false;
    Mailbox::RecvState recv;
  };
  Slot& slot(Request r);

  int rank_;
  int size_;
  Mailbox& inbox_;
  CompletionOrder order_;
  std::mt19937_64 rng_;
  std::deque<Slot> slots_;
  Request base_ = 0;
  bool log_completions_ = false;
  std::vector<int> completion_log_;
};

}  // namespace adfft
