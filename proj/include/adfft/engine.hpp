#pragma once

// Forward 3-D FFT over a slab-decomposed grid.
//
// Each rank owns an ABC slab of the input and ends with a CBA slab of the
// output; nothing is transposed back. Lifecycle: construct (plans, buffers,
// optional strategy tuning), execute any number of times, finalize.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "adfft/comm.hpp"
#include "adfft/decomposition.hpp"
#include "adfft/fft_kernel.hpp"
#include "adfft/grid.hpp"
#include "adfft/transport.hpp"
#include "adfft/transpose_plan.hpp"

namespace adfft {

/// Seconds spent per category in one execution (or a sum of executions).
struct TimingBreakdown {
  double communication = 0;
  double fft = 0;
  double buffer_comm = 0;
  double buffer_fft = 0;
  double others = 0;
  double total = 0;

  double named_sum() const noexcept { return communication + fft + buffer_comm + buffer_fft + others; }
  TimingBreakdown& operator+=(const TimingBreakdown& o) noexcept;
  TimingBreakdown scaled(double factor) const noexcept;
  std::array<double, 6> as_array() const noexcept { return {communication, fft, buffer_comm, buffer_fft, others, total}; }
  static TimingBreakdown from_array(const std::array<double, 6>& v) noexcept;
};

/// Allocator that bumps a caller-owned counter on every allocation.
template <class T>
struct CountingAllocator {
  using value_type = T;
  std::uint64_t* counter = nullptr;

  CountingAllocator() noexcept = default;
  explicit CountingAllocator(std::uint64_t* c) noexcept : counter(c) {}
  template <class U>
  CountingAllocator(const CountingAllocator<U>& o) noexcept : counter(o.counter) {}

  T* allocate(std::size_t n) {
    if (counter != nullptr) ++*counter;
    return std::allocator<T>{}.allocate(n);
  }
  void deallocate(T* p, std::size_t n) noexcept { std::allocator<T>{}.deallocate(p, n); }

  template <class U>
  friend bool operator==(const CountingAllocator& a, const CountingAllocator<U>& b) noexcept {
    return a.counter == b.counter;
  }
};

using TrackedBuf = std::vector<Complex, CountingAllocator<Complex>>;

struct EngineOptions {
  /// Timed executions per strategy when the method is automatic.
  std::size_t tune_reps = 2;
  std::size_t b_size = kDefaultBlockSize;
};

struct TuneReport {
  bool tuned = false;
  Strategy winner = kDefaultStrategy;
  /// Median execution time per strategy (slowest rank per run), indexed like kAllStrategies.
  std::array<double, 6> median_s{};
};

/// Picks the strategy with the smallest median; exact ties prefer WaitSome,
/// then earlier strategies.
Strategy select_strategy(const std::array<double, 6>& medians) noexcept;

class FftContext {
 public:
  /// Collective over all ranks of `transport`. Throws UnsupportedScaleError if
  /// the rank count does not fit every pipeline ordering.
  FftContext(const GridDims& dims, Transport& transport, CommMethod method, EngineOptions options = {});

  FftContext(const FftContext&) = delete;
  FftContext& operator=(const FftContext&) = delete;

  /// Transforms this rank's ABC-slab input. The returned span views an
  /// internal buffer holding the CBA-slab output until the next call.
  std::span<const Complex> execute(std::span<const Complex> local_in);
  void execute_into(std::span<const Complex> local_in, std::span<Complex> local_out);

  /// Releases all buffers. Any later use throws ContractError.
  void finalize();
  bool finalized() const noexcept { return finalized_; }

  /// Collective. Rank 0 receives the full output in CBA layout; other ranks get an empty buffer.
  ComplexBuf gather(std::span<const Complex> local_out);

  const GridDims& dims() const noexcept { return dims_; }
  RankInfo rank() const noexcept { return rank_; }
  const CommMethod& requested_method() const noexcept { return method_; }
  Strategy strategy() const noexcept { return strategy_; }
  const TuneReport& tune_report() const noexcept { return tune_; }

  const Slab& in_slab() const noexcept { return slabs_[0]; }
  const Slab& mid_slab() const noexcept { return slabs_[1]; }
  const Slab& out_slab() const noexcept { return slabs_[2]; }
  std::size_t in_count() const noexcept { return slabs_[0].count; }
  std::size_t out_count() const noexcept { return slabs_[2].count; }
  /// First and last owned coordinates (ABC for input, CBA for output); empty for an empty slab.
  std::optional<std::pair<Coord3, Coord3>> in_range() const;
  std::optional<std::pair<Coord3, Coord3>> out_range() const;

  const RankPlan& first_plan() const noexcept { return plan_ab_; }
  const RankPlan& second_plan() const noexcept { return plan_bc_; }

  /// Executions requested by the caller, and those run internally by tuning.
  std::size_t executions() const noexcept { return executions_; }
  std::size_t tuning_executions() const noexcept { return tuning_executions_; }

  const TimingBreakdown& last_timing() const noexcept { return last_; }
  const TimingBreakdown& accumulated_timing() const noexcept { return accumulated_; }
  void reset_timing() noexcept { accumulated_ = {}; }

  /// Allocations made for the engine's working buffers since construction.
  std::uint64_t buffer_allocations() const noexcept { return allocations_; }

 private:
  void check_live(const char* what) const;
  void run(std::span<const Complex> in, std::span<Complex> out, Strategy s);
  void transpose(const RankPlan& plan, std::uint32_t phase, std::span<const Complex> src, std::span<Complex> dst,
                 Strategy s);
  void tune();

  GridDims dims_;
  Transport& transport_;
  RankInfo rank_;
  CommMethod method_;
  EngineOptions options_;
  Strategy strategy_ = kDefaultStrategy;
  TuneReport tune_;
  std::array<Slab, 3> slabs_;
  RankPlan plan_ab_;
  RankPlan plan_bc_;
  FftPlan1D fft_c_;
  FftPlan1D fft_b_;
  FftPlan1D fft_a_;

  std::uint64_t allocations_ = 0;
  TrackedBuf fft_in_;
  TrackedBuf fft_out_;
  TrackedBuf mid_;
  TrackedBuf last_slab_;
  TrackedBuf send_;
  TrackedBuf recv_;
  TrackedBuf out_;
  TrackedBuf work_;
  TrackedBuf zeros_;
  CommScratch scratch_;

  // Per-arrival unpack target, read by the arrival callback.
  const RankPlan* arrival_plan_ = nullptr;
  std::span<Complex> arrival_dst_;
  double arrival_seconds_ = 0;
  ArrivalFn on_arrival_;

  TimingBreakdown last_;
  TimingBreakdown accumulated_;
  std::size_t executions_ = 0;
  std::size_t tuning_executions_ = 0;
  bool finalized_ = false;
};

}  // namespace adfft
