#pragma once

// In-process rank simulator: every rank is a std::thread and messages move
// between per-rank mailboxes without serialization.

#include <cstdint>
#include <exception>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <type_traits>
#include <utility>
#include <vector>

#include "adfft/error.hpp"
#include "adfft/mailbox.hpp"

namespace adfft {

struct ThreadedOptions {
  CompletionOrder completion_order = CompletionOrder::Natural;
  std::uint64_t seed = 0;
  bool log_completions = false;
};

/// Shared state of one simulated run: a mailbox per rank.
class ThreadedWorld {
 public:
  explicit ThreadedWorld(int np, ThreadedOptions options = {});

  int size() const noexcept { return static_cast<int>(mailboxes_.size()); }
  Mailbox& mailbox(int rank) { return *mailboxes_[static_cast<std::size_t>(rank)]; }
  const ThreadedOptions& options() const noexcept { return options_; }

  /// Fails all pending and future receives on every rank.
  void abort(const std::string& reason);

 private:
  std::vector<std::unique_ptr<Mailbox>> mailboxes_;
  ThreadedOptions options_;
};

class ThreadedTransport final : public MailboxTransport {
 public:
  ThreadedTransport(ThreadedWorld& world, int rank);

  Request isend(std::uint32_t phase, int dst, std::span<const Complex> payload) override;

 private:
  ThreadedWorld& world_;
};

/// One or more ranks failed inside threaded_spawn.
class SpawnError : public Error {
 public:
  struct Failure {
    int rank;
    std::string what;
  };
  explicit SpawnError(std::vector<Failure> failures);
  const std::vector<Failure>& failures() const noexcept { return failures_; }

 private:
  std::vector<Failure> failures_;
};

namespace detail {
/// Throws SpawnError if any entry is set.
void raise_spawn_failures(const std::vector<std::exception_ptr>& errors);
}

/// Runs rank_main(Transport&) on np threads sharing one ThreadedWorld and
/// returns the per-rank results in rank order (nothing when rank_main returns
/// void). If any rank throws, the world is aborted so the others unblock, and
/// a SpawnError naming the failing ranks is thrown after all threads join.
template <class F>
auto threaded_spawn(int np, F&& rank_main, ThreadedOptions options = {}) {
  using Result = std::invoke_result_t<F&, Transport&>;
  if (np < 1) throw ContractError("threaded_spawn needs at least one rank");
  ThreadedWorld world(np, options);
  const auto n = static_cast<std::size_t>(np);
  std::vector<std::exception_ptr> errors(n);
  auto run = [&](int r, auto&& store) {
    try {
      ThreadedTransport transport(world, r);
      store(transport);
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
      world.abort("rank " + std::to_string(r) + " failed");
    }
  };

  if constexpr (std::is_void_v<Result>) {
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (int r = 0; r < np; ++r) {
      threads.emplace_back([&, r] { run(r, [&](Transport& t) { rank_main(t); }); });
    }
    for (auto& th : threads) th.join();
    detail::raise_spawn_failures(errors);
  } else {
    std::vector<std::optional<Result>> slots(n);
    std::vector<std::thread> threads;
    threads.reserve(n);
    for (int r = 0; r < np; ++r) {
      threads.emplace_back(
          [&, r] { run(r, [&](Transport& t) { slots[static_cast<std::size_t>(r)].emplace(rank_main(t)); }); });
    }
    for (auto& th : threads) th.join();
    detail::raise_spawn_failures(errors);
    std::vector<Result> results;
    results.reserve(n);
    for (auto& s : slots) results.push_back(std::move(*s));
    return results;
  }
}

}  // namespace adfft
