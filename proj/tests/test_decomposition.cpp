#include <doctest.h>

#include <algorithm>

#include "adfft/decomposition.hpp"
#include "adfft/error.hpp"

using namespace adfft;

namespace {
const std::vector<GridDims> kGrids = {{1, 1, 1}, {2, 2, 2}, {4, 4, 4}, {4, 6, 8}, {5, 7, 3}, {8, 8, 8}, {3, 1, 9}};
}

TEST_CASE("boundary examples") {
  CHECK(boundary({4, 4, 4}, DimOrder::ABC, 2, 1) == 32);
  CHECK(boundary({4, 4, 4}, DimOrder::ABC, 8, 3) == 24);
  for (DimOrder o : kAllOrders) CHECK(boundary({5, 7, 3}, o, 6, 0) == 0);
  CHECK(boundary({4, 4, 4}, DimOrder::ABC, 8, 8) == 64);
  CHECK_THROWS_AS(boundary({4, 4, 4}, DimOrder::ABC, 8, 9), BoundsError);
}

TEST_CASE("slab_of examples") {
  const Slab s = slab_of({4, 4, 4}, DimOrder::ABC, {3, 8});
  CHECK(s.x_start == 24);
  CHECK(s.x_end == 31);
  CHECK(s.count == 8);
  CHECK(s.form == DecompForm::TwoD);

  const Slab all = slab_of({4, 4, 4}, DimOrder::ABC, {0, 1});
  CHECK(all.x_start == 0);
  CHECK(all.x_end == 63);
  CHECK(all.form == DecompForm::OneD);

  const Slab third = slab_of({4, 4, 4}, DimOrder::ABC, {1, 3});
  CHECK(third.x_start == 16);
  CHECK(third.x_end == 31);
  CHECK(third.count == 16);
  CHECK(third.form == DecompForm::OneD);
}

TEST_CASE("slab_corners examples") {
  const GridDims d(4, 4, 4);
  auto [s1, e1] = slab_corners(slab_of(d, DimOrder::ABC, {3, 8}), d);
  CHECK(s1 == Coord3{1, 2, 0});
  CHECK(e1 == Coord3{1, 3, 3});
  auto [s2, e2] = slab_corners(slab_of(d, DimOrder::ABC, {0, 1}), d);
  CHECK(s2 == Coord3{0, 0, 0});
  CHECK(e2 == Coord3{3, 3, 3});
  auto [s3, e3] = slab_corners(slab_of(d, DimOrder::ABC, {1, 3}), d);
  CHECK(s3 == Coord3{1, 0, 0});
  CHECK(e3 == Coord3{1, 3, 3});
}

TEST_CASE("partition, balance, adaptivity and row completeness over every valid rank count") {
  for (const GridDims& d : kGrids) {
    for (DimOrder o : kAllOrders) {
      const auto p = permuted_lengths(o, d);
      const int limit = static_cast<int>(max_ranks(d, o));
      CHECK(static_cast<std::size_t>(limit) == p[0] * p[1]);
      for (int np = 1; np <= limit; ++np) {
        CAPTURE(to_string(d));
        CAPTURE(np);
        std::size_t next = 0, lo = d.total(), hi = 0;
        for (int id = 0; id < np; ++id) {
          const Slab s = slab_of(d, o, {id, np});
          REQUIRE(s.x_start == next);
          REQUIRE(s.count == s.x_end + 1 - s.x_start);
          REQUIRE(s.count % p[2] == 0);
          REQUIRE(s.form == (static_cast<std::size_t>(np) <= p[0] ? DecompForm::OneD : DecompForm::TwoD));
          if (s.form == DecompForm::OneD) REQUIRE(s.count % (p[1] * p[2]) == 0);
          next += s.count;
          lo = std::min(lo, s.count);
          hi = std::max(hi, s.count);
        }
        REQUIRE(next == d.total());
        REQUIRE(hi - lo <= (static_cast<std::size_t>(np) <= p[0] ? p[1] * p[2] : p[2]));
      }
      CHECK_THROWS_AS(slab_of(d, o, {0, limit + 1}), UnsupportedScaleError);
      CHECK_THROWS_AS(form_of(d, o, 0), UnsupportedScaleError);
    }
  }
}

TEST_CASE("empty slabs are representable and owner_of skips them") {
  // 2x2x2 over 4 ranks in abc: rows of 2, 4 rows, one row each; over 3 ranks some get one row.
  const GridDims d(1, 3, 2);
  const auto b = boundaries(d, DimOrder::CBA, 4);
  // cba: P1 = 2, P2 = 3, P3 = 1. np = 4 > 2, so cuts are floor(6*id/4) rows.
  CHECK(b == std::vector<std::size_t>{0, 1, 3, 4, 6});
  const GridDims tiny(1, 1, 2);
  // abc on 1x1x2: P1*P2 = 1, so only one rank fits.
  CHECK(max_ranks(tiny, DimOrder::ABC) == 1);
  CHECK(max_ranks(tiny, DimOrder::CAB) == 2);
  CHECK(max_pipeline_ranks(tiny) == 1);
  CHECK(max_pipeline_ranks({5, 7, 3}) == 15);

  const std::vector<std::size_t> with_empty = {0, 4, 4, 8};
  CHECK(owner_of(with_empty, 3) == 0);
  CHECK(owner_of(with_empty, 4) == 2);
  CHECK_THROWS_AS(owner_of(with_empty, 8), BoundsError);
  Slab e;
  e.count = 0;
  CHECK_THROWS_AS(slab_corners(e, d), ContractError);
}

TEST_CASE("rank info validation") {
  CHECK_THROWS_AS(RankInfo(2, 2), ContractError);
  CHECK_THROWS_AS(RankInfo(0, 0), ContractError);
  CHECK_NOTHROW(RankInfo(1, 2));
}
