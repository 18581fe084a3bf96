#include "adfft/engine.hpp"

#include <algorithm>
#include <chrono>
#include <string>

#include "adfft/error.hpp"

namespace adfft {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median_of(std::span<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::size_t strategy_index(Strategy s) { return static_cast<std::size_t>(s); }

}  // namespace

TimingBreakdown& TimingBreakdown::operator+=(const TimingBreakdown& o) noexcept {
  communication += o.communication;
  fft += o.fft;
  buffer_comm += o.buffer_comm;
  buffer_fft += o.buffer_fft;
  others += o.others;
  total += o.total;
  return *this;
}

TimingBreakdown TimingBreakdown::scaled(double factor) const noexcept {
  return {communication * factor, fft * factor,    buffer_comm * factor,
          buffer_fft * factor,    others * factor, total * factor};
}

TimingBreakdown TimingBreakdown::from_array(const std::array<double, 6>& v) noexcept {
  return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

Strategy select_strategy(const std::array<double, 6>& medians) noexcept {
  Strategy best = kDefaultStrategy;
  for (Strategy s : kAllStrategies) {
    if (medians[strategy_index(s)] < medians[strategy_index(best)]) best = s;
  }
  return best;
}

FftContext::FftContext(const GridDims& dims, Transport& transport, CommMethod method, EngineOptions options)
    : dims_(dims),
      transport_(transport),
      rank_(transport.rank(), transport.size()),
      method_(method),
      options_(options),
      plan_ab_(build_rank_plan(dims, transport.size(), DimOrder::ABC, DimOrder::CAB, transport.rank())),
      plan_bc_(build_rank_plan(dims, transport.size(), DimOrder::CAB, DimOrder::CBA, transport.rank())),
      fft_c_(dims.n3, Direction::Forward),
      fft_b_(dims.n2, Direction::Forward),
      fft_a_(dims.n1, Direction::Forward),
      fft_in_(CountingAllocator<Complex>(&allocations_)),
      fft_out_(CountingAllocator<Complex>(&allocations_)),
      mid_(CountingAllocator<Complex>(&allocations_)),
      last_slab_(CountingAllocator<Complex>(&allocations_)),
      send_(CountingAllocator<Complex>(&allocations_)),
      recv_(CountingAllocator<Complex>(&allocations_)),
      out_(CountingAllocator<Complex>(&allocations_)),
      work_(CountingAllocator<Complex>(&allocations_)),
      zeros_(CountingAllocator<Complex>(&allocations_)) {
  if (options_.b_size == 0) throw ContractError("block size must be at least 1");
  slabs_ = {plan_ab_.src, plan_ab_.dst, plan_bc_.dst};

  std::size_t largest = 0;
  for (const Slab& s : slabs_) largest = std::max(largest, s.count);
  fft_in_.resize(largest);
  fft_out_.resize(largest);
  mid_.resize(slabs_[1].count);
  last_slab_.resize(slabs_[2].count);
  send_.resize(std::max(plan_ab_.total_send(), plan_bc_.total_send()));
  recv_.resize(std::max(plan_ab_.total_recv(), plan_bc_.total_recv()));
  out_.resize(slabs_[2].count);
  work_.resize(std::max({fft_a_.work_size(), fft_b_.work_size(), fft_c_.work_size()}));
  scratch_.reserve(rank_.np);

  on_arrival_ = [this](int peer, std::span<const Complex> block) {
    const auto t0 = Clock::now();
    unpack_peer(*arrival_plan_, peer, block, arrival_dst_);
    arrival_seconds_ += seconds_since(t0);
  };

  switch (method_.kind()) {
    case CommMethod::Kind::Auto:
      tune();
      break;
    case CommMethod::Kind::Default:
      strategy_ = kDefaultStrategy;
      break;
    case CommMethod::Kind::Named:
    case CommMethod::Kind::UserSelect:
      strategy_ = method_.strategy();
      break;
  }
}

void FftContext::check_live(const char* what) const {
  if (finalized_) throw ContractError(std::string(what) + " called on a finalized context");
}

std::optional<std::pair<Coord3, Coord3>> FftContext::in_range() const {
  if (slabs_[0].empty()) return std::nullopt;
  return slab_corners(slabs_[0], dims_);
}

std::optional<std::pair<Coord3, Coord3>> FftContext::out_range() const {
  if (slabs_[2].empty()) return std::nullopt;
  return slab_corners(slabs_[2], dims_);
}

void FftContext::tune() {
  const std::size_t reps = std::max<std::size_t>(options_.tune_reps, 1);
  zeros_.assign(slabs_[0].count, Complex{});
  std::vector<double> times(kAllStrategies.size() * reps);
  for (std::size_t si = 0; si < kAllStrategies.size(); ++si) {
    for (std::size_t r = 0; r < reps; ++r) {
      barrier(transport_);
      run(zeros_, out_, kAllStrategies[si]);
      ++tuning_executions_;
      times[si * reps + r] = last_.total;
    }
  }
  // Every rank must install the same winner, so judge each run by its slowest rank.
  allreduce_max(transport_, times);
  for (std::size_t si = 0; si < kAllStrategies.size(); ++si) {
    tune_.median_s[si] = median_of(std::span<double>(times).subspan(si * reps, reps));
  }
  tune_.tuned = true;
  tune_.winner = select_strategy(tune_.median_s);
  strategy_ = tune_.winner;
  accumulated_ = {};
  last_ = {};
}

std::span<const Complex> FftContext::execute(std::span<const Complex> local_in) {
  check_live("execute");
  run(local_in, out_, strategy_);
  ++executions_;
  return out_;
}

void FftContext::execute_into(std::span<const Complex> local_in, std::span<Complex> local_out) {
  check_live("execute");
  if (local_out.size() != slabs_[2].count) {
    throw ContractError("output holds " + std::to_string(local_out.size()) + " points, slab has " +
                        std::to_string(slabs_[2].count));
  }
  run(local_in, local_out, strategy_);
  ++executions_;
}

void FftContext::transpose(const RankPlan& plan, std::uint32_t phase, std::span<const Complex> src,
                           std::span<Complex> dst, Strategy s) {
  auto t0 = Clock::now();
  pack(plan, src, send_);
  copy_local(plan, src, dst);
  last_.buffer_comm += seconds_since(t0);

  Exchange ex;
  ex.phase = phase;
  ex.plan = &plan;
  ex.send = std::span<const Complex>(send_).first(plan.total_send());
  ex.recv = std::span<Complex>(recv_).first(plan.total_recv());
  ex.scratch = &scratch_;

  arrival_plan_ = &plan;
  arrival_dst_ = dst;
  arrival_seconds_ = 0;
  t0 = Clock::now();
  run_strategy(s, ex, transport_, options_.b_size, on_arrival_);
  const double exchange = seconds_since(t0);
  last_.communication += std::max(0.0, exchange - arrival_seconds_);
  last_.buffer_comm += arrival_seconds_;

  if (!unpacks_on_arrival(s)) {
    t0 = Clock::now();
    unpack_all(plan, ex.recv, dst);
    last_.buffer_comm += seconds_since(t0);
  }
}

void FftContext::run(std::span<const Complex> in, std::span<Complex> out, Strategy s) {
  if (in.size() != slabs_[0].count) {
    throw ContractError("input holds " + std::to_string(in.size()) + " points, slab has " +
                        std::to_string(slabs_[0].count));
  }
  last_ = {};
  const auto start = Clock::now();
  const std::size_t n_in = slabs_[0].count;
  const std::size_t n_mid = slabs_[1].count;
  const std::size_t n_out = slabs_[2].count;
  std::span<Complex> fin(fft_in_);
  std::span<Complex> fout(fft_out_);

  // Along c, in ABC layout.
  auto t0 = Clock::now();
  std::copy(in.begin(), in.end(), fin.begin());
  last_.buffer_fft += seconds_since(t0);
  t0 = Clock::now();
  fft_rows(fft_c_, fin.first(n_in), fout.first(n_in), slabs_[0].rows(dims_), work_);
  last_.fft += seconds_since(t0);
  transpose(plan_ab_, kPhaseFirstTranspose, fout.first(n_in), mid_, s);

  // Along b, in CAB layout.
  t0 = Clock::now();
  std::copy(mid_.begin(), mid_.end(), fin.begin());
  last_.buffer_fft += seconds_since(t0);
  t0 = Clock::now();
  fft_rows(fft_b_, fin.first(n_mid), fout.first(n_mid), slabs_[1].rows(dims_), work_);
  last_.fft += seconds_since(t0);
  transpose(plan_bc_, kPhaseSecondTranspose, fout.first(n_mid), last_slab_, s);

  // Along a, in CBA layout.
  t0 = Clock::now();
  std::copy(last_slab_.begin(), last_slab_.end(), fin.begin());
  last_.buffer_fft += seconds_since(t0);
  t0 = Clock::now();
  fft_rows(fft_a_, fin.first(n_out), fout.first(n_out), slabs_[2].rows(dims_), work_);
  last_.fft += seconds_since(t0);
  t0 = Clock::now();
  std::copy(fout.begin(), fout.begin() + static_cast<std::ptrdiff_t>(n_out), out.begin());
  last_.buffer_fft += seconds_since(t0);

  last_.total = seconds_since(start);
  const double named = last_.communication + last_.fft + last_.buffer_comm + last_.buffer_fft;
  last_.others = std::max(0.0, last_.total - named);
  accumulated_ += last_;
}

void FftContext::finalize() {
  check_live("finalize");
  finalized_ = true;
  for (TrackedBuf* b : {&fft_in_, &fft_out_, &mid_, &last_slab_, &send_, &recv_, &out_, &work_, &zeros_}) {
    TrackedBuf(CountingAllocator<Complex>(&allocations_)).swap(*b);
  }
  scratch_ = {};
}

ComplexBuf FftContext::gather(std::span<const Complex> local_out) {
  check_live("gather");
  if (local_out.size() != slabs_[2].count) {
    throw ContractError("gather: local output holds " + std::to_string(local_out.size()) + " points, slab has " +
                        std::to_string(slabs_[2].count));
  }
  // CBA slabs are contiguous runs of the CBA-ordered global array.
  ComplexBuf global;
  std::vector<Request> requests;
  if (rank_.myid == 0) {
    global.resize(dims_.total());
    const auto bounds = boundaries(dims_, DimOrder::CBA, rank_.np);
    std::copy(local_out.begin(), local_out.end(), global.begin());
    for (int q = 1; q < rank_.np; ++q) {
      const std::size_t lo = bounds[static_cast<std::size_t>(q)];
      const std::size_t hi = bounds[static_cast<std::size_t>(q) + 1];
      if (hi > lo) {
        requests.push_back(transport_.irecv(kPhaseGather, q, std::span<Complex>(global).subspan(lo, hi - lo)));
      }
    }
  } else if (!local_out.empty()) {
    requests.push_back(transport_.isend(kPhaseGather, 0, local_out));
  }
  transport_.wait_all(requests);
  transport_.reset_requests();
  return global;
}

}  // namespace adfft
