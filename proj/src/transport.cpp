#include "adfft/transport.hpp"

#include <algorithm>
#include <array>
#include <functional>
#include <vector>

namespace adfft {

void Transport::count_send(std::uint32_t phase, std::size_t points) noexcept {
  if (points == 0) {
    ++counters_.empty_messages_sent;
    return;
  }
  const std::uint64_t bytes = points * kBytesPerPoint;
  counters_.bytes_sent += bytes;
  ++counters_.messages_sent;
  if (phase < TrafficCounters::kTrackedPhases) counters_.bytes_by_phase[phase] += bytes;
}

void Transport::exchange_pairwise(std::uint32_t phase, int dst, std::span<const Complex> send, int src,
                                  std::span<Complex> recv) {
  const std::array<Request, 2> reqs = {irecv(phase, src, recv), isend(phase, dst, send)};
  wait_all(reqs);
}

void Transport::all_to_all_variable(std::uint32_t phase, std::span<const Complex> send,
                                    std::span<const std::size_t> send_displs, std::span<Complex> recv,
                                    std::span<const std::size_t> recv_displs) {
  const int np = size();
  const int me = rank();
  std::vector<Request> reqs;
  reqs.reserve(2 * static_cast<std::size_t>(np));
  for (int q = 0; q < np; ++q) {
    const auto i = static_cast<std::size_t>(q);
    if (q == me || recv_displs[i + 1] == recv_displs[i]) continue;
    reqs.push_back(irecv(phase, q, recv.subspan(recv_displs[i], recv_displs[i + 1] - recv_displs[i])));
  }
  for (int q = 0; q < np; ++q) {
    const auto i = static_cast<std::size_t>(q);
    if (q == me || send_displs[i + 1] == send_displs[i]) continue;
    reqs.push_back(isend(phase, q, send.subspan(send_displs[i], send_displs[i + 1] - send_displs[i])));
  }
  wait_all(reqs);
}

namespace {

void allreduce(Transport& t, std::span<double> values, const std::function<double(double, double)>& op) {
  const int np = t.size();
  if (np == 1) return;
  const std::size_t n = values.size();
  std::vector<Complex> mine(n);
  for (std::size_t i = 0; i < n; ++i) mine[i] = {values[i], 0.0};
  if (t.rank() == 0) {
    std::vector<Complex> incoming(n * static_cast<std::size_t>(np - 1));
    std::vector<Request> reqs;
    for (int q = 1; q < np; ++q) {
      reqs.push_back(t.irecv(kPhaseReduce, q, std::span<Complex>(incoming).subspan((q - 1) * n, n)));
    }
    t.wait_all(reqs);
    for (int q = 1; q < np; ++q) {
      for (std::size_t i = 0; i < n; ++i) values[i] = op(values[i], incoming[(q - 1) * n + i].real());
    }
    for (std::size_t i = 0; i < n; ++i) mine[i] = {values[i], 0.0};
    reqs.clear();
    for (int q = 1; q < np; ++q) reqs.push_back(t.isend(kPhaseBroadcast, q, mine));
    t.wait_all(reqs);
  } else {
    const std::array<Request, 1> send = {t.isend(kPhaseReduce, 0, mine)};
    t.wait_all(send);
    const std::array<Request, 1> recv = {t.irecv(kPhaseBroadcast, 0, mine)};
    t.wait_all(recv);
    for (std::size_t i = 0; i < n; ++i) values[i] = mine[i].real();
  }
  t.reset_requests();
}

}  // namespace

void allreduce_max(Transport& transport, std::span<double> values) {
  allreduce(transport, values, [](double a, double b) { return std::max(a, b); });
}

void allreduce_sum(Transport& transport, std::span<double> values) {
  allreduce(transport, values, [](double a, double b) { return a + b; });
}

void barrier(Transport& transport) {
  std::array<double, 1> token = {0.0};
  allreduce_sum(transport, token);
}

}  // namespace adfft
