#include "adfft/threaded_transport.hpp"

#include <algorithm>

namespace adfft {

ThreadedWorld::ThreadedWorld(int np, ThreadedOptions options) : options_(options) {
  if (np < 1) throw ContractError("a threaded world needs at least one rank");
  mailboxes_.reserve(static_cast<std::size_t>(np));
  for (int r = 0; r < np; ++r) mailboxes_.push_back(std::make_unique<Mailbox>());
}

void ThreadedWorld::abort(const std::string& reason) {
  for (auto& box : mailboxes_) box->fail("run aborted: " + reason);
}

ThreadedTransport::ThreadedTransport(ThreadedWorld& world, int rank)
    : MailboxTransport(rank, world.size(), world.mailbox(rank), world.options().completion_order,
                       world.options().seed + static_cast<std::uint64_t>(rank)),
      world_(world) {
  set_completion_logging(world.options().log_completions);
}

Request ThreadedTransport::isend(std::uint32_t phase, int dst, std::span<const Complex> payload) {
  check_peer(dst);
  world_.mailbox(dst).deliver(phase, rank(), payload);
  count_send(phase, payload.size());
  return completed_send();
}

SpawnError::SpawnError(std::vector<Failure> failures)
    : Error([&] {
        std::string msg = "rank failure:";
        for (const auto& f : failures) msg += " [rank " + std::to_string(f.rank) + "] " + f.what;
        return msg;
      }()),
      failures_(std::move(failures)) {}

namespace detail {

void raise_spawn_failures(const std::vector<std::exception_ptr>& errors) {
  std::vector<SpawnError::Failure> primary;
  std::vector<SpawnError::Failure> secondary;
  for (std::size_t r = 0; r < errors.size(); ++r) {
    if (!errors[r]) continue;
    try {
      std::rethrow_exception(errors[r]);
    } catch (const std::exception& e) {
      const std::string what = e.what();
      // Ranks unblocked by the abort are collateral; report them only if nothing else failed.
      auto& bucket = what.find("run aborted:") != std::string::npos ? secondary : primary;
      bucket.push_back({static_cast<int>(r), what});
    } catch (...) {
      primary.push_back({static_cast<int>(r), "unknown exception"});
    }
  }
  if (!primary.empty()) throw SpawnError(std::move(primary));
  if (!secondary.empty()) throw SpawnError(std::move(secondary));
}

}  // namespace detail

}  // namespace adfft
