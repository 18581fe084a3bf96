#pragma once

// Test-side oracles. None of these call into the library's index, plan or
// FFT code; they re-derive everything from first principles so library
// results can be checked against them.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "adfft/transport.hpp"

namespace oracle {

using C = std::complex<double>;

/// O(n^2) DFT with exactly reduced angles, sign -1 for forward.
inline std::vector<C> dft(std::span<const C> x, int sign = -1) {
  const std::size_t n = x.size();
  std::vector<C> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    C acc{};
    for (std::size_t j = 0; j < n; ++j) {
      const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      acc += x[j] * C(std::cos(angle), std::sin(angle));
    }
    out[k] = acc;
  }
  return out;
}

inline std::vector<C> random_vec(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<C> v(n);
  for (auto& z : v) z = {u(rng), u(rng)};
  return v;
}

inline double max_abs_diff(std::span<const C> a, std::span<const C> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Axis permutation, slowest first (0 = a, 1 = b, 2 = c).
using Perm = std::array<int, 3>;
inline constexpr Perm kABC = {0, 1, 2};
inline constexpr Perm kCAB = {2, 0, 1};
inline constexpr Perm kCBA = {2, 1, 0};
inline constexpr Perm kBCA = {1, 2, 0};

struct Grid {
  std::array<std::size_t, 3> n;
  std::size_t total() const { return n[0] * n[1] * n[2]; }
};

inline std::size_t lin(const Grid& g, const Perm& p, const std::array<std::size_t, 3>& abc) {
  return (abc[p[0]] * g.n[p[1]] + abc[p[1]]) * g.n[p[2]] + abc[p[2]];
}

/// Owner rank of linear index x when the permuted grid is cut over np ranks:
/// whole planes while np fits the slowest axis, whole rows otherwise.
inline int owner(const Grid& g, const Perm& p, int np, std::size_t x) {
  const std::size_t P1 = g.n[p[0]], P2 = g.n[p[1]], P3 = g.n[p[2]];
  auto start = [&](int id) -> std::size_t {
    const auto i = static_cast<std::size_t>(id), n = static_cast<std::size_t>(np);
    return np <= static_cast<int>(P1) ? (P1 * i / n) * P2 * P3 : (P1 * P2 * i / n) * P3;
  };
  int r = np - 1;
  while (start(r) > x) --r;
  return r;
}

inline std::size_t slab_start(const Grid& g, const Perm& p, int np, int id) {
  const std::size_t P1 = g.n[p[0]], P2 = g.n[p[1]], P3 = g.n[p[2]];
  const auto i = static_cast<std::size_t>(id), n = static_cast<std::size_t>(np);
  return np <= static_cast<int>(P1) ? (P1 * i / n) * P2 * P3 : (P1 * P2 * i / n) * P3;
}

/// One rank's view of a redistribution, derived by enumerating every point.
struct Relocation {
  // (src offset, dst offset) of retained points, ordered by dst linear index.
  std::vector<std::pair<std::size_t, std::size_t>> local;
  // peer -> src offsets sent to it, ordered by dst linear index.
  std::map<int, std::vector<std::size_t>> send;
  // peer -> dst offsets received from it, ordered by dst linear index.
  std::map<int, std::vector<std::size_t>> recv;
};

inline std::vector<Relocation> relocate(const Grid& g, int np, const Perm& src, const Perm& dst) {
  std::vector<Relocation> out(static_cast<std::size_t>(np));
  // Walk points in ascending dst linear index so every list comes out in that order.
  std::vector<std::array<std::size_t, 3>> by_dst(g.total());
  for (std::size_t a = 0; a < g.n[0]; ++a)
    for (std::size_t b = 0; b < g.n[1]; ++b)
      for (std::size_t c = 0; c < g.n[2]; ++c) by_dst[lin(g, dst, {a, b, c})] = {a, b, c};
  for (std::size_t xd = 0; xd < g.total(); ++xd) {
    const std::size_t xs = lin(g, src, by_dst[xd]);
    const int p = owner(g, src, np, xs);
    const int q = owner(g, dst, np, xd);
    const std::size_t so = xs - slab_start(g, src, np, p);
    const std::size_t dof = xd - slab_start(g, dst, np, q);
    if (p == q) {
      out[static_cast<std::size_t>(p)].local.emplace_back(so, dof);
    } else {
      out[static_cast<std::size_t>(p)].send[q].push_back(so);
      out[static_cast<std::size_t>(q)].recv[p].push_back(dof);
    }
  }
  return out;
}

/// Bytes moved by one redistribution (16 per relocated point).
inline std::uint64_t volume(const Grid& g, int np, const Perm& src, const Perm& dst) {
  std::uint64_t moved = 0;
  for (std::size_t a = 0; a < g.n[0]; ++a)
    for (std::size_t b = 0; b < g.n[1]; ++b)
      for (std::size_t c = 0; c < g.n[2]; ++c) {
        if (owner(g, src, np, lin(g, src, {a, b, c})) != owner(g, dst, np, lin(g, dst, {a, b, c}))) ++moved;
      }
  return moved * 16;
}

/// Direct 3-D DFT of an abc-ordered array; output abc-ordered.
inline std::vector<C> dft3(std::span<const C> x, const Grid& g) {
  std::vector<C> out(g.total());
  for (std::size_t k1 = 0; k1 < g.n[0]; ++k1)
    for (std::size_t k2 = 0; k2 < g.n[1]; ++k2)
      for (std::size_t k3 = 0; k3 < g.n[2]; ++k3) {
        C acc{};
        for (std::size_t a = 0; a < g.n[0]; ++a)
          for (std::size_t b = 0; b < g.n[1]; ++b)
            for (std::size_t c = 0; c < g.n[2]; ++c) {
              const double ph = static_cast<double>((k1 * a) % g.n[0]) / static_cast<double>(g.n[0]) +
                                static_cast<double>((k2 * b) % g.n[1]) / static_cast<double>(g.n[1]) +
                                static_cast<double>((k3 * c) % g.n[2]) / static_cast<double>(g.n[2]);
              acc += x[(a * g.n[1] + b) * g.n[2] + c] * std::polar(1.0, -2.0 * std::numbers::pi * ph);
            }
        out[(k1 * g.n[1] + k2) * g.n[2] + k3] = acc;
      }
  return out;
}

/// Value at (a, b, c) of a cba-ordered array.
inline C at_cba(std::span<const C> cba, const Grid& g, std::size_t a, std::size_t b, std::size_t c) {
  return cba[(c * g.n[1] + b) * g.n[0] + a];
}

}  // namespace oracle

namespace testing {

/// Forwards to another transport and records what was asked of it.
class RecordingTransport final : public adfft::Transport {
 public:
  struct Send {
    std::uint32_t phase;
    int dst;
    std::size_t points;
    std::size_t wait_epoch;  // number of wait_all calls made before this send
  };

  explicit RecordingTransport(adfft::Transport& inner) : inner_(inner) {}

  int rank() const noexcept override { return inner_.rank(); }
  int size() const noexcept override { return inner_.size(); }

  adfft::Request isend(std::uint32_t phase, int dst, std::span<const adfft::Complex> payload) override {
    ++calls;
    sends.push_back({phase, dst, payload.size(), wait_all_calls});
    count_send(phase, payload.size());
    return inner_.isend(phase, dst, payload);
  }
  adfft::Request irecv(std::uint32_t phase, int src, std::span<adfft::Complex> dest) override {
    ++calls;
    recvs.push_back(src);
    return inner_.irecv(phase, src, dest);
  }
  void wait_all(std::span<const adfft::Request> r) override {
    ++calls;
    ++wait_all_calls;
    inner_.wait_all(r);
  }
  std::size_t wait_some(std::span<const adfft::Request> p, std::span<std::size_t> c) override {
    ++calls;
    return inner_.wait_some(p, c);
  }
  void reset_requests() override {
    ++calls;
    inner_.reset_requests();
  }

  std::size_t calls = 0;
  std::size_t wait_all_calls = 0;
  std::vector<Send> sends;
  std::vector<int> recvs;

 private:
  adfft::Transport& inner_;
};

}  // namespace testing
