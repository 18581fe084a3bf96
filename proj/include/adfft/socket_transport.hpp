#pragma once

// TCP transport for ranks in separate processes (or threads). Every pair of
// ranks shares one persistent connection; a background thread per rank
// drains all incoming connections into the rank's mailbox, so sends never
// block on the receiver posting a matching receive.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "adfft/mailbox.hpp"

namespace adfft {

struct RankAddress {
  std::string host;
  std::uint16_t port = 0;
};

/// Parses "rank host:port" lines. Blank lines and '#' comments are skipped;
/// ranks must be exactly 0..n-1. Throws ContractError on malformed input.
std::vector<RankAddress> parse_address_table(std::istream& in);
std::vector<RankAddress> read_address_table(const std::string& path);

/// A bound, listening TCP socket. Port 0 picks an ephemeral port.
class SocketListener {
 public:
  SocketListener(const std::string& host, std::uint16_t port);
  ~SocketListener();
  SocketListener(SocketListener&& other) noexcept;
  SocketListener& operator=(SocketListener&& other) noexcept;
  SocketListener(const SocketListener&) = delete;
  SocketListener& operator=(const SocketListener&) = delete;

  std::uint16_t port() const noexcept { return port_; }
  int fd() const noexcept { return fd_; }

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

namespace detail {
struct SocketInbox {
  Mailbox inbox;
};
}  // namespace detail

class SocketTransport final : private detail::SocketInbox, public MailboxTransport {
 public:
  using Clock = std::chrono::steady_clock;

  /// Binds this rank's address from `table` and connects the full mesh.
  /// Throws CommError if the mesh is not up within `timeout`.
  static std::unique_ptr<SocketTransport> connect(int rank, const std::vector<RankAddress>& table,
                                                  std::chrono::milliseconds timeout = std::chrono::seconds(30));

  /// As above with an already-bound listener (lets tests use ephemeral ports).
  static std::unique_ptr<SocketTransport> connect(int rank, const std::vector<RankAddress>& table,
                                                  SocketListener listener,
                                                  std::chrono::milliseconds timeout = std::chrono::seconds(30));

  /// Half-closes every connection and waits (bounded) for the peers to do the same.
  ~SocketTransport() override;

  Request isend(std::uint32_t phase, int dst, std::span<const Complex> payload) override;

  /// Ring schedule over exchange_pairwise, zero-length messages included.
  void all_to_all_variable(std::uint32_t phase, std::span<const Complex> send,
                           std::span<const std::size_t> send_displs, std::span<Complex> recv,
                           std::span<const std::size_t> recv_displs) override;

 private:
  struct Connection {
    int fd = -1;
    std::mutex write_mutex;
  };

  SocketTransport(int rank, int size);
  void establish(const std::vector<RankAddress>& table, SocketListener& listener, std::chrono::milliseconds timeout);
  void reader_loop();
  void write_all(int peer, const void* data, std::size_t bytes);

  std::vector<std::unique_ptr<Connection>> peers_;
  std::thread reader_;
  int wake_pipe_[2] = {-1, -1};
  std::atomic<bool> stopping_{false};
  std::atomic<bool> reader_done_{false};
};

}  // namespace adfft
