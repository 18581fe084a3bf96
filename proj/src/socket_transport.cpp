#include "adfft/socket_transport.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <bit>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <istream>
#include <sstream>

#include "adfft/error.hpp"
#include "adfft/wire.hpp"

namespace adfft {

namespace {

std::string errno_text() { return std::strerror(errno); }

sockaddr_in resolve(const std::string& host, std::uint16_t port) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* result = nullptr;
  if (int rc = ::getaddrinfo(host.c_str(), nullptr, &hints, &result); rc != 0 || result == nullptr) {
    throw CommError("cannot resolve host '" + host + "': " + ::gai_strerror(rc));
  }
  sockaddr_in addr{};
  std::memcpy(&addr, result->ai_addr, sizeof(addr));
  ::freeaddrinfo(result);
  addr.sin_port = htons(port);
  return addr;
}

void set_nodelay(int fd) {
  int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

// Reads exactly `bytes`; returns false on clean EOF before the first byte.
bool read_exact(int fd, void* data, std::size_t bytes) {
  auto* p = static_cast<std::uint8_t*>(data);
  std::size_t got = 0;
  while (got < bytes) {
    const ssize_t n = ::recv(fd, p + got, bytes - got, 0);
    if (n == 0) {
      if (got == 0) return false;
      throw CommError("connection closed mid-frame");
    }
    if (n < 0) {
      if (errno == EINTR) continue;
      throw CommError("recv failed: " + errno_text());
    }
    got += static_cast<std::size_t>(n);
  }
  return true;
}

void send_exact(int fd, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const std::uint8_t*>(data);
  std::size_t sent = 0;
  while (sent < bytes) {
    const ssize_t n = ::send(fd, p + sent, bytes - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw CommError("send failed: " + errno_text());
    }
    sent += static_cast<std::size_t>(n);
  }
}

// Handshake sent by the connecting side: its rank and the world size.
std::array<std::uint8_t, 8> encode_hello(int rank, int size) {
  MessageHeader h;
  h.phase = static_cast<std::uint32_t>(rank);
  h.src = static_cast<std::uint32_t>(size);
  const auto bytes = wire::encode_header(h);
  std::array<std::uint8_t, 8> out{};
  std::memcpy(out.data(), bytes.data(), out.size());
  return out;
}

}  // namespace

std::vector<RankAddress> parse_address_table(std::istream& in) {
  std::vector<RankAddress> table;
  std::vector<bool> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    int rank = -1;
    std::string endpoint;
    if (!(fields >> rank)) continue;
    std::string extra;
    if (!(fields >> endpoint) || (fields >> extra)) {
      throw ContractError("address table line " + std::to_string(line_no) + ": expected 'rank host:port'");
    }
    const auto colon = endpoint.rfind(':');
    if (rank < 0 || colon == std::string::npos || colon == 0) {
      throw ContractError("address table line " + std::to_string(line_no) + ": expected 'rank host:port'");
    }
    const int port = std::stoi(endpoint.substr(colon + 1));
    if (port < 0 || port > 65535) throw ContractError("address table line " + std::to_string(line_no) + ": bad port");
    const auto r = static_cast<std::size_t>(rank);
    if (r >= table.size()) {
      table.resize(r + 1);
      seen.resize(r + 1, false);
    }
    if (seen[r]) throw ContractError("address table lists rank " + std::to_string(rank) + " twice");
    seen[r] = true;
    table[r] = {endpoint.substr(0, colon), static_cast<std::uint16_t>(port)};
  }
  for (std::size_t r = 0; r < seen.size(); ++r) {
    if (!seen[r]) throw ContractError("address table is missing rank " + std::to_string(r));
  }
  if (table.empty()) throw ContractError("address table is empty");
  return table;
}

std::vector<RankAddress> read_address_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ContractError("cannot open address table '" + path + "'");
  return parse_address_table(in);
}

SocketListener::SocketListener(const std::string& host, std::uint16_t port) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) throw CommError("socket() failed: " + errno_text());
  int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(host, port);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string why = errno_text();
    ::close(fd_);
    throw CommError("cannot bind " + host + ":" + std::to_string(port) + ": " + why);
  }
  if (::listen(fd_, 128) != 0) {
    const std::string why = errno_text();
    ::close(fd_);
    throw CommError("listen failed: " + why);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

SocketListener::~SocketListener() {
  if (fd_ >= 0) ::close(fd_);
}

SocketListener::SocketListener(SocketListener&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), port_(other.port_) {}

SocketListener& SocketListener::operator=(SocketListener&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    port_ = other.port_;
  }
  return *this;
}

SocketTransport::SocketTransport(int rank, int size) : MailboxTransport(rank, size, inbox) {
  peers_.resize(static_cast<std::size_t>(size));
  for (auto& p : peers_) p = std::make_unique<Connection>();
  if (::pipe2(wake_pipe_, O_CLOEXEC) != 0) throw CommError("pipe2 failed: " + errno_text());
}

std::unique_ptr<SocketTransport> SocketTransport::connect(int rank, const std::vector<RankAddress>& table,
                                                          std::chrono::milliseconds timeout) {
  if (rank < 0 || static_cast<std::size_t>(rank) >= table.size()) {
    throw ContractError("rank " + std::to_string(rank) + " is not in the address table");
  }
  const auto& self = table[static_cast<std::size_t>(rank)];
  return connect(rank, table, SocketListener(self.host, self.port), timeout);
}

std::unique_ptr<SocketTransport> SocketTransport::connect(int rank, const std::vector<RankAddress>& table,
                                                          SocketListener listener,
                                                          std::chrono::milliseconds timeout) {
  if (rank < 0 || static_cast<std::size_t>(rank) >= table.size()) {
    throw ContractError("rank " + std::to_string(rank) + " is not in the address table");
  }
  std::unique_ptr<SocketTransport> t(new SocketTransport(rank, static_cast<int>(table.size())));
  t->establish(table, listener, timeout);
  t->reader_ = std::thread([raw = t.get()] { raw->reader_loop(); });
  return t;
}

void SocketTransport::establish(const std::vector<RankAddress>& table, SocketListener& listener,
                                std::chrono::milliseconds timeout) {
  const int me = rank();
  const int np = size();
  const auto deadline = Clock::now() + timeout;

  // Higher ranks dial lower ranks; each rank accepts from everyone above it.
  for (int q = 0; q < me; ++q) {
    const sockaddr_in addr = resolve(table[static_cast<std::size_t>(q)].host, table[static_cast<std::size_t>(q)].port);
    int fd = -1;
    while (true) {
      fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
      if (fd < 0) throw CommError("socket() failed: " + errno_text());
      if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) break;
      ::close(fd);
      if (Clock::now() >= deadline) throw CommError("startup: timed out connecting", q);
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    set_nodelay(fd);
    const auto hello = encode_hello(me, np);
    send_exact(fd, hello.data(), hello.size());
    peers_[static_cast<std::size_t>(q)]->fd = fd;
  }

  for (int accepted = 0; accepted < np - 1 - me; ++accepted) {
    pollfd pfd{listener.fd(), POLLIN, 0};
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0 || ::poll(&pfd, 1, static_cast<int>(left)) <= 0) {
      throw CommError("startup: timed out waiting for peers to connect");
    }
    const int fd = ::accept4(listener.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) throw CommError("accept failed: " + errno_text());
    set_nodelay(fd);
    std::array<std::uint8_t, 8> hello{};
    if (!read_exact(fd, hello.data(), hello.size())) {
      ::close(fd);
      throw CommError("startup: peer hung up during handshake");
    }
    std::array<std::uint8_t, kHeaderBytes> padded{};
    std::memcpy(padded.data(), hello.data(), hello.size());
    const MessageHeader h = wire::decode_header(padded);
    const auto peer = static_cast<int>(h.phase);
    if (static_cast<int>(h.src) != np || peer <= me || peer >= np || peers_[static_cast<std::size_t>(peer)]->fd >= 0) {
      ::close(fd);
      throw CommError("startup: unexpected handshake from rank " + std::to_string(peer));
    }
    peers_[static_cast<std::size_t>(peer)]->fd = fd;
  }
}

void SocketTransport::reader_loop() {
  const int me = rank();
  std::vector<int> peer_of_slot;
  std::vector<pollfd> fds;
  for (int q = 0; q < size(); ++q) {
    if (q == me) continue;
    fds.push_back({peers_[static_cast<std::size_t>(q)]->fd, POLLIN, 0});
    peer_of_slot.push_back(q);
  }
  fds.push_back({wake_pipe_[0], POLLIN, 0});

  std::size_t open = peer_of_slot.size();
  std::array<std::uint8_t, kHeaderBytes> header_bytes{};
  std::vector<std::uint8_t> payload_bytes;
  try {
    while (open > 0 && !stopping_.load()) {
      if (::poll(fds.data(), fds.size(), -1) < 0) {
        if (errno == EINTR) continue;
        throw CommError("poll failed: " + errno_text());
      }
      if (fds.back().revents != 0) break;
      for (std::size_t i = 0; i + 1 < fds.size(); ++i) {
        if (fds[i].fd < 0 || fds[i].revents == 0) continue;
        const int peer = peer_of_slot[i];
        if (!read_exact(fds[i].fd, header_bytes.data(), header_bytes.size())) {
          inbox.close_source(peer);
          fds[i].fd = -1;
          --open;
          continue;
        }
        const MessageHeader h = wire::decode_header(header_bytes);
        wire::validate_header(h, peer, me);
        const std::size_t points = h.payload_bytes / kBytesPerPoint;
        std::vector<Complex> payload(points);
        if constexpr (std::endian::native == std::endian::little) {
          if (points > 0 && !read_exact(fds[i].fd, payload.data(), h.payload_bytes)) {
            throw CommError("connection closed mid-frame", peer);
          }
        } else {
          payload_bytes.resize(h.payload_bytes);
          if (points > 0 && !read_exact(fds[i].fd, payload_bytes.data(), payload_bytes.size())) {
            throw CommError("connection closed mid-frame", peer);
          }
          wire::decode_payload(payload_bytes, payload);
        }
        inbox.deliver(h.phase, peer, std::move(payload));
      }
    }
  } catch (const FramingError& e) {
    inbox.fail(e.detail(), true, e.peer());
  } catch (const CommError& e) {
    inbox.fail(e.detail(), false, e.peer());
  } catch (const std::exception& e) {
    inbox.fail(e.what());
  }
  reader_done_.store(true);
}

void SocketTransport::write_all(int peer, const void* data, std::size_t bytes) {
  try {
    send_exact(peers_[static_cast<std::size_t>(peer)]->fd, data, bytes);
  } catch (const CommError& e) {
    throw CommError(e.detail(), peer);
  }
}

Request SocketTransport::isend(std::uint32_t phase, int dst, std::span<const Complex> payload) {
  check_peer(dst);
  if (dst == rank()) {
    inbox.deliver(phase, dst, payload);
  } else {
    MessageHeader h;
    h.phase = phase;
    h.src = static_cast<std::uint32_t>(rank());
    h.dst = static_cast<std::uint32_t>(dst);
    h.payload_bytes = payload.size() * kBytesPerPoint;
    const auto header = wire::encode_header(h);
    auto& conn = *peers_[static_cast<std::size_t>(dst)];
    std::lock_guard lock(conn.write_mutex);
    write_all(dst, header.data(), header.size());
    if constexpr (std::endian::native == std::endian::little) {
      write_all(dst, payload.data(), h.payload_bytes);
    } else {
      std::vector<std::uint8_t> bytes(h.payload_bytes);
      wire::encode_payload(payload, bytes);
      write_all(dst, bytes.data(), bytes.size());
    }
  }
  count_send(phase, payload.size());
  return completed_send();
}

void SocketTransport::all_to_all_variable(std::uint32_t phase, std::span<const Complex> send,
                                          std::span<const std::size_t> send_displs, std::span<Complex> recv,
                                          std::span<const std::size_t> recv_displs) {
  const int np = size();
  const int me = rank();
  for (int step = 1; step < np; ++step) {
    const auto dst = static_cast<std::size_t>((me + step) % np);
    const auto src = static_cast<std::size_t>((me - step + np) % np);
    exchange_pairwise(phase, static_cast<int>(dst), send.subspan(send_displs[dst], send_displs[dst + 1] - send_displs[dst]),
                      static_cast<int>(src), recv.subspan(recv_displs[src], recv_displs[src + 1] - recv_displs[src]));
    reset_requests();
  }
}

SocketTransport::~SocketTransport() {
  for (int q = 0; q < size(); ++q) {
    const int fd = peers_[static_cast<std::size_t>(q)]->fd;
    if (fd >= 0) ::shutdown(fd, SHUT_WR);
  }
  // Give peers time to finish and half-close their side, then force the reader out.
  const auto deadline = Clock::now() + std::chrono::seconds(30);
  while (reader_.joinable() && !reader_done_.load() && Clock::now() < deadline) {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  stopping_.store(true);
  const char wake = 1;
  [[maybe_unused]] auto ignored = ::write(wake_pipe_[1], &wake, 1);
  if (reader_.joinable()) reader_.join();
  for (auto& p : peers_) {
    if (p->fd >= 0) ::close(p->fd);
  }
  ::close(wake_pipe_[0]);
  ::close(wake_pipe_[1]);
}

}  // namespace adfft
