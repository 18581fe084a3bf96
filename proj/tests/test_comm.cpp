#include <doctest.h>

#include <set>

#include "adfft/comm.hpp"
#include "adfft/error.hpp"
#include "adfft/threaded_transport.hpp"
#include "support.hpp"

using namespace adfft;

namespace {

struct RankResult {
  ComplexBuf dst;
  ExchangeStats stats;
  std::size_t callbacks = 0;
  std::uint64_t bytes = 0;
  std::vector<testing::RecordingTransport::Send> sends;
  std::size_t transport_calls = 0;
};

// Value carried by the point at (a, b, c): unique and exactly representable.
Complex tag(std::size_t a, std::size_t b, std::size_t c) { return {double(a * 10000 + b * 100 + c), -double(a + b + c)}; }

std::vector<RankResult> run_exchange(const GridDims& d, int np, DimOrder src, DimOrder dst, Strategy s,
                                     std::size_t b_size = kDefaultBlockSize, ThreadedOptions opts = {}) {
  return threaded_spawn(
      np,
      [&](Transport& inner) {
        testing::RecordingTransport t(inner);
        const RankPlan plan = build_rank_plan(d, np, src, dst, t.rank());
        ComplexBuf src_slab(plan.src.count);
        for (std::size_t o = 0; o < src_slab.size(); ++o) {
          const auto abc = to_axes(src, delinearize(src, d, plan.src.x_start + o));
          src_slab[o] = tag(abc[0], abc[1], abc[2]);
        }
        ComplexBuf send(plan.total_send()), recv(plan.total_recv());
        RankResult r;
        r.dst.assign(plan.dst.count, Complex(-1, -1));
        pack(plan, src_slab, send);
        copy_local(plan, src_slab, r.dst);
        CommScratch scratch;
        scratch.reserve(np);
        Exchange ex{kPhaseFirstTranspose, &plan, send, recv, &scratch};
        const ArrivalFn on_arrival = [&](int peer, std::span<const Complex> block) {
          ++r.callbacks;
          unpack_peer(plan, peer, block, r.dst);
        };
        r.stats = run_strategy(s, ex, t, b_size, on_arrival);
        if (!unpacks_on_arrival(s)) unpack_all(plan, recv, r.dst);
        r.bytes = t.counters().bytes_sent;
        r.sends = t.sends;
        r.transport_calls = t.calls;
        return r;
      },
      opts);
}

void check_contents(const GridDims& d, int np, DimOrder dst, const std::vector<RankResult>& res) {
  for (int q = 0; q < np; ++q) {
    const Slab slab = slab_of(d, dst, {q, np});
    const auto& v = res[static_cast<std::size_t>(q)].dst;
    REQUIRE(v.size() == slab.count);
    for (std::size_t o = 0; o < v.size(); ++o) {
      const auto abc = to_axes(dst, delinearize(dst, d, slab.x_start + o));
      REQUIRE(v[o] == tag(abc[0], abc[1], abc[2]));
    }
  }
}

}  // namespace

TEST_CASE("single rank exchanges touch no transport") {
  for (Strategy s : kAllStrategies) {
    const auto res = run_exchange({4, 4, 4}, 1, DimOrder::ABC, DimOrder::CAB, s);
    CHECK(res[0].transport_calls == 0);
    CHECK(res[0].callbacks == 0);
    check_contents({4, 4, 4}, 1, DimOrder::CAB, res);
  }
}

TEST_CASE("every strategy delivers the planned points and bytes") {
  const std::vector<std::pair<GridDims, int>> cases = {{{4, 4, 4}, 4}, {{4, 4, 4}, 8}, {{4, 6, 8}, 5}, {{5, 7, 3}, 15}};
  for (const auto& [d, np] : cases) {
    for (DimOrder from : {DimOrder::ABC, DimOrder::CAB}) {
      const DimOrder to = from == DimOrder::ABC ? DimOrder::CAB : DimOrder::CBA;
      const TransposePlan plan = build_plan(d, np, from, to);
      for (Strategy s : kAllStrategies) {
        CAPTURE(to_string(d));
        CAPTURE(np);
        CAPTURE(to_string(s));
        const auto res = run_exchange(d, np, from, to, s, 2);
        check_contents(d, np, to, res);
        for (int p = 0; p < np; ++p) {
          CHECK(res[static_cast<std::size_t>(p)].bytes == plan.ranks[static_cast<std::size_t>(p)].total_send_bytes());
        }
      }
    }
  }
}

TEST_CASE("waitsome variants are order independent under adversarial completion") {
  const GridDims d(4, 4, 4);
  for (CompletionOrder order : {CompletionOrder::Reversed, CompletionOrder::Shuffled}) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      ThreadedOptions opts{order, seed, true};
      const auto some = run_exchange(d, 4, DimOrder::ABC, DimOrder::CAB, Strategy::WaitSome, 32, opts);
      const auto block = run_exchange(d, 8, DimOrder::ABC, DimOrder::CAB, Strategy::WaitSomeBlock, 2, opts);
      check_contents(d, 4, DimOrder::CAB, some);
      check_contents(d, 8, DimOrder::CAB, block);
    }
  }
}

TEST_CASE("reversed completion hands arrivals to the callback newest first") {
  // Rank 0 of 4x4x4 over 4 ranks receives from ranks 1, 2, 3 in one round.
  std::vector<int> log;
  threaded_spawn(
      4,
      [&](Transport& t) {
        const RankPlan plan = build_rank_plan({4, 4, 4}, 4, DimOrder::ABC, DimOrder::CAB, t.rank());
        ComplexBuf send(plan.total_send()), recv(plan.total_recv());
        Exchange ex{kPhaseFirstTranspose, &plan, send, recv, nullptr};
        std::vector<int> seen;
        run_waitsome(ex, t, [&](int peer, std::span<const Complex>) { seen.push_back(peer); });
        if (t.rank() == 0) log = seen;
      },
      ThreadedOptions{CompletionOrder::Reversed, 0, false});
  CHECK(log == std::vector<int>{3, 2, 1});
}

TEST_CASE("callback count equals peers with incoming data") {
  const GridDims d(4, 6, 8);
  const int np = 12;
  const TransposePlan plan = build_plan(d, np, DimOrder::ABC, DimOrder::CAB);
  for (Strategy s : {Strategy::WaitSome, Strategy::WaitSomeBlock}) {
    const auto res = run_exchange(d, np, DimOrder::ABC, DimOrder::CAB, s, 5);
    for (int p = 0; p < np; ++p) {
      const auto& rp = plan.ranks[static_cast<std::size_t>(p)];
      CHECK(res[static_cast<std::size_t>(p)].callbacks == static_cast<std::size_t>(rp.recv_peer_count()));
    }
  }
}

TEST_CASE("block strategies: round count, block targets and pair coverage") {
  CHECK(block_rounds(64, 32) == 2);
  CHECK(block_rounds(32, 32) == 1);
  CHECK(block_rounds(8, 2) == 4);
  CHECK(block_rounds(7, 2) == 4);
  CHECK_THROWS_AS(block_rounds(4, 0), ContractError);

  const GridDims d(8, 8, 8);
  const int np = 64;
  const TransposePlan plan = build_plan(d, np, DimOrder::CAB, DimOrder::CBA);
  for (Strategy s : {Strategy::WaitAllBlock, Strategy::WaitSomeBlock}) {
    const auto res = run_exchange(d, np, DimOrder::CAB, DimOrder::CBA, s, 32);
    std::set<std::pair<int, int>> sent_pairs;
    for (int p = 0; p < np; ++p) {
      const auto& r = res[static_cast<std::size_t>(p)];
      CHECK(r.stats.rounds == 2);
      for (const auto& snd : r.sends) {
        CHECK(snd.points > 0);
        CHECK(sent_pairs.insert({p, snd.dst}).second);
      }
      if (s == Strategy::WaitAllBlock) {
        // One wait_all per round: sends before the first go to the own block, the rest to the other.
        for (const auto& snd : r.sends) {
          CHECK(static_cast<std::size_t>(snd.dst / 32) == block_send_target(p, snd.wait_epoch, np, 32));
        }
      }
    }
    std::set<std::pair<int, int>> planned;
    for (int p = 0; p < np; ++p)
      for (int q = 0; q < np; ++q)
        if (plan.ranks[static_cast<std::size_t>(p)].send_count(q) > 0) planned.insert({p, q});
    CHECK(sent_pairs == planned);
    check_contents(d, np, DimOrder::CBA, res);
  }

  for (Strategy s : {Strategy::WaitAllBlock, Strategy::WaitSomeBlock}) {
    const auto res = run_exchange({4, 4, 4}, 8, DimOrder::ABC, DimOrder::CAB, s, 32);
    for (const auto& r : res) CHECK(r.stats.rounds == 1);
    const auto small = run_exchange({4, 4, 4}, 8, DimOrder::ABC, DimOrder::CAB, s, 2);
    for (const auto& r : small) CHECK(r.stats.rounds == 4);
  }
}

TEST_CASE("pairwise ring walks rank plus and minus step, empty batches included") {
  const int np = 4;
  const auto res = run_exchange({4, 4, 4}, np, DimOrder::ABC, DimOrder::CAB, Strategy::PairwiseRing);
  for (int p = 0; p < np; ++p) {
    const auto& r = res[static_cast<std::size_t>(p)];
    CHECK(r.stats.rounds == static_cast<std::size_t>(np - 1));
    REQUIRE(r.sends.size() == static_cast<std::size_t>(np - 1));
    for (int step = 1; step < np; ++step) CHECK(r.sends[static_cast<std::size_t>(step - 1)].dst == (p + step) % np);
  }
  CHECK(res[0].sends[0].dst == 1);

  // 8x8x8 cab->cba over 2 ranks: no peer traffic at all, yet the ring still steps.
  const auto quiet = run_exchange({8, 8, 8}, 2, DimOrder::CAB, DimOrder::CBA, Strategy::PairwiseRing);
  const TransposePlan plan = build_plan({8, 8, 8}, 2, DimOrder::CAB, DimOrder::CBA);
  for (int p = 0; p < 2; ++p) {
    const auto& r = quiet[static_cast<std::size_t>(p)];
    CHECK(r.sends.size() == 1);
    CHECK(r.bytes == plan.ranks[static_cast<std::size_t>(p)].total_send_bytes());
  }
}

TEST_CASE("no strategy deadlocks for any rank count up to 64") {
  const GridDims d(8, 8, 4);
  for (int np = 1; np <= static_cast<int>(max_pipeline_ranks(d)); np += (np < 8 ? 1 : 7)) {
    for (Strategy s : kAllStrategies) {
      CAPTURE(np);
      const auto res = run_exchange(d, np, DimOrder::CAB, DimOrder::CBA, s, 3);
      check_contents(d, np, DimOrder::CBA, res);
    }
  }
}

TEST_CASE("method names and parsing") {
  CHECK(CommMethod::parse("auto").needs_tuning());
  CHECK(CommMethod::parse("default").strategy() == Strategy::WaitSome);
  CHECK(CommMethod::parse("user:pairwise") == CommMethod::user_select(Strategy::PairwiseRing));
  CHECK(CommMethod::parse("sendrecv") == CommMethod::named(Strategy::PairwiseRing));
  for (Strategy s : kAllStrategies) {
    CHECK(strategy_from_string(to_string(s)) == s);
    CHECK(CommMethod::parse(CommMethod::user_select(s).to_string()) == CommMethod::user_select(s));
  }
  CHECK_THROWS_AS(CommMethod::parse("fastest"), ContractError);
  CHECK_THROWS_AS(CommMethod::parse("user:auto"), ContractError);
}

TEST_CASE("mismatched plan and transport are rejected") {
  threaded_spawn(2, [](Transport& t) {
    const RankPlan wrong = build_rank_plan({4, 4, 4}, 4, DimOrder::ABC, DimOrder::CAB, t.rank());
    ComplexBuf send(wrong.total_send()), recv(wrong.total_recv());
    Exchange ex{0, &wrong, send, recv, nullptr};
    CHECK_THROWS_AS(run_waitall(ex, t), ContractError);
  });
}
