#include "adfft/mailbox.hpp"

#include <algorithm>

#include "adfft/error.hpp"

namespace adfft {

void Mailbox::complete(RecvState& state, std::span<const Complex> payload) {
  if (payload.size() != state.dest.size()) {
    state.error = "message of " + std::to_string(payload.size()) + " points from rank " + std::to_string(state.src) +
                  " (phase " + std::to_string(state.phase) + ") does not fit a receive of " +
                  std::to_string(state.dest.size()) + " points";
  } else {
    std::copy(payload.begin(), payload.end(), state.dest.begin());
  }
  state.done = true;
}

void Mailbox::deliver(std::uint32_t phase, int src, std::span<const Complex> payload) {
  {
    std::lock_guard lock(mutex_);
    auto it = posted_.find({phase, src});
    if (it != posted_.end() && !it->second.empty()) {
      RecvState* state = it->second.front();
      it->second.pop_front();
      complete(*state, payload);
    } else {
      unexpected_[{phase, src}].emplace_back(payload.begin(), payload.end());
      return;
    }
  }
  cv_.notify_all();
}

void Mailbox::deliver(std::uint32_t phase, int src, std::vector<Complex>&& payload) {
  {
    std::lock_guard lock(mutex_);
    auto it = posted_.find({phase, src});
    if (it != posted_.end() && !it->second.empty()) {
      RecvState* state = it->second.front();
      it->second.pop_front();
      complete(*state, payload);
    } else {
      unexpected_[{phase, src}].push_back(std::move(payload));
      return;
    }
  }
  cv_.notify_all();
}

void Mailbox::post(RecvState& state) {
  std::lock_guard lock(mutex_);
  auto it = unexpected_.find({state.phase, state.src});
  if (it != unexpected_.end() && !it->second.empty()) {
    complete(state, it->second.front());
    it->second.pop_front();
    return;
  }
  if (closed_.contains(state.src)) {
    state.error = "rank " + std::to_string(state.src) + " closed its connection";
    state.done = true;
    return;
  }
  posted_[{state.phase, state.src}].push_back(&state);
}

void Mailbox::wait(RecvState& state) {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return failed_ || state.done; });
  if (!state.done && failed_) throw_failure();
  if (!state.error.empty()) throw CommError(state.error, state.src);
}

void Mailbox::fail(const std::string& reason, bool framing, int peer) {
  {
    std::lock_guard lock(mutex_);
    if (failed_) return;
    failed_ = true;
    framing_failure_ = framing;
    failure_peer_ = peer;
    failure_ = reason;
  }
  cv_.notify_all();
}

void Mailbox::close_source(int src) {
  {
    std::lock_guard lock(mutex_);
    closed_.insert(src);
    fail_unmatched_locked(src);
  }
  cv_.notify_all();
}

void Mailbox::fail_unmatched_locked(int src) {
  for (auto& [key, queue] : posted_) {
    if (key.second != src) continue;
    for (RecvState* state : queue) {
      state->error = "rank " + std::to_string(src) + " closed its connection";
      state->done = true;
    }
    queue.clear();
  }
}

void Mailbox::cancel_posted() {
  std::lock_guard lock(mutex_);
  posted_.clear();
}

void Mailbox::throw_failure() const {
  if (framing_failure_) throw FramingError(failure_, failure_peer_);
  throw CommError(failure_, failure_peer_);
}

MailboxTransport::MailboxTransport(int rank, int size, Mailbox& inbox, CompletionOrder order, std::uint64_t seed)
    : rank_(rank), size_(size), inbox_(inbox), order_(order), rng_(seed) {
  if (size < 1 || rank < 0 || rank >= size) {
    throw ContractError("invalid transport rank " + std::to_string(rank) + " of " + std::to_string(size));
  }
}

MailboxTransport::~MailboxTransport() { inbox_.cancel_posted(); }

void MailboxTransport::check_peer(int peer) const {
  if (peer < 0 || peer >= size_) throw CommError("no such rank", peer);
}

MailboxTransport::Slot& MailboxTransport::slot(Request r) {
  if (r < base_ || r - base_ >= slots_.size()) throw ContractError("stale or unknown request handle");
  return slots_[r - base_];
}

Request MailboxTransport::completed_send() {
  slots_.emplace_back();
  return base_ + slots_.size() - 1;
}

Request MailboxTransport::irecv(std::uint32_t phase, int src, std::span<Complex> dest) {
  check_peer(src);
  Slot& s = slots_.emplace_back();
  s.is_recv = true;
  s.recv.phase = phase;
  s.recv.src = src;
  s.recv.dest = dest;
  inbox_.post(s.recv);
  return base_ + slots_.size() - 1;
}

void MailboxTransport::wait_all(std::span<const Request> requests) {
  for (Request r : requests) {
    Slot& s = slot(r);
    if (s.is_recv) inbox_.wait(s.recv);
  }
}

std::size_t MailboxTransport::wait_some(std::span<const Request> pending, std::span<std::size_t> completed) {
  if (pending.empty()) return 0;
  auto is_done = [&](std::size_t i) {
    Slot& s = slot(pending[i]);
    return !s.is_recv || s.recv.done;
  };

  std::size_t written = 0;
  if (order_ == CompletionOrder::Natural) {
    inbox_.wait_until([&] {
      for (std::size_t i = 0; i < pending.size(); ++i) {
        if (is_done(i)) return true;
      }
      return false;
    });
    std::lock_guard lock(inbox_.mutex());
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (is_done(i)) completed[written++] = i;
    }
  } else {
    std::size_t target = pending.size() - 1;
    if (order_ == CompletionOrder::Shuffled) {
      target = std::uniform_int_distribution<std::size_t>(0, pending.size() - 1)(rng_);
    }
    inbox_.wait_until([&] { return is_done(target); });
    completed[written++] = target;
  }

  for (std::size_t w = 0; w < written; ++w) {
    Slot& s = slot(pending[completed[w]]);
    if (!s.is_recv) continue;
    if (!s.recv.error.empty()) throw CommError(s.recv.error, s.recv.src);
    if (log_completions_) completion_log_.push_back(s.recv.src);
  }
  return written;
}

void MailboxTransport::reset_requests() {
  std::lock_guard lock(inbox_.mutex());
  while (!slots_.empty() && (!slots_.front().is_recv || slots_.front().recv.done)) {
    slots_.pop_front();
    ++base_;
  }
}

}  // namespace adfft
