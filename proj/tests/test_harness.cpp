#include <doctest.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "adfft/error.hpp"
#include "adfft/harness.hpp"
#include "support.hpp"

using namespace adfft;

TEST_CASE("oracle_dft3 basics and agreement with the test-side oracle") {
  const GridDims d2(2, 2, 2);
  ComplexBuf delta(8);
  delta[0] = 1;
  for (const Complex& z : oracle_dft3(delta, d2)) CHECK(std::abs(z - Complex(1, 0)) < 1e-15);
  const auto dc = oracle_dft3(ComplexBuf(8, Complex(1, 0)), d2);
  CHECK(std::abs(dc[0] - Complex(8, 0)) < 1e-14);
  for (std::size_t i = 1; i < 8; ++i) CHECK(std::abs(dc[i]) < 1e-14);

  const GridDims d(3, 4, 5);
  const auto x = oracle::random_vec(d.total(), 1), y = oracle::random_vec(d.total(), 2);
  ComplexBuf sum(d.total());
  for (std::size_t i = 0; i < sum.size(); ++i) sum[i] = 2.0 * x[i] - y[i];
  const auto fx = oracle_dft3(x, d), fy = oracle_dft3(y, d), fs = oracle_dft3(sum, d);
  for (std::size_t i = 0; i < sum.size(); ++i) CHECK(std::abs(fs[i] - (2.0 * fx[i] - fy[i])) < 1e-11);
  CHECK(oracle::max_abs_diff(fx, oracle::dft3(x, {{3, 4, 5}})) < 1e-11);

  CHECK_THROWS_AS(oracle_dft3(ComplexBuf(8), d2, 4), ContractError);
}

TEST_CASE("seeded inputs are reproducible and slab-consistent") {
  const GridDims d(4, 6, 8);
  const auto g = random_global(d, 42);
  CHECK(g == random_global(d, 42));
  CHECK(g != random_global(d, 43));
  for (int np : {1, 3, 5}) {
    for (int r = 0; r < np; ++r) {
      const Slab s = slab_of(d, DimOrder::ABC, {r, np});
      const auto part = random_slab(d, s, 42);
      CHECK(std::equal(part.begin(), part.end(), g.begin() + static_cast<std::ptrdiff_t>(s.x_start)));
    }
  }
  for (const Complex& z : g) {
    CHECK(z.real() >= -1.0);
    CHECK(z.real() < 1.0);
  }
}

TEST_CASE("verify passes on the reference grids") {
  BenchConfig cfg;
  cfg.methods = parse_methods("all");
  cfg.dims = {4, 4, 4};
  cfg.nps = {8};
  auto r = cmd_verify(cfg);
  CHECK(r.ok);
  CHECK(r.rows.size() == 6);
  for (const auto& row : r.rows) CHECK(row.max_abs_err <= 1e-10);

  cfg.dims = {1, 1, 1};
  cfg.nps = {1};
  CHECK(cmd_verify(cfg).ok);

  cfg.dims = {5, 7, 3};
  cfg.nps = {4};
  CHECK(cmd_verify(cfg).ok);

  cfg.nps = {16};
  CHECK_THROWS_AS(cmd_verify(cfg), UnsupportedScaleError);
}

TEST_CASE("verify reports failure when the tolerance cannot be met") {
  BenchConfig cfg;
  cfg.dims = {4, 4, 4};
  cfg.nps = {2};
  cfg.tolerance = 0.0;
  cfg.seed = 3;
  const auto r = cmd_verify(cfg);
  CHECK_FALSE(r.ok);
}

TEST_CASE("volume sweep: theory equals measurement and the form flips after 8") {
  BenchConfig cfg;
  cfg.dims = {8, 8, 8};
  cfg.nps = {1, 2, 4, 8, 16, 32};
  cfg.methods = parse_methods("all");
  const auto r = cmd_volume(cfg);
  CHECK(r.ok);
  for (const auto& row : r.rows) {
    CHECK(row.match);
    CHECK(row.bytes_theory == row.bytes_measured);
    CHECK(row.form == (row.np <= 8 ? DecompForm::OneD : DecompForm::TwoD));
    if (row.np == 1) CHECK(row.bytes_theory == 0);
  }
}

TEST_CASE("bench honors repeats and keeps categories within the total") {
  BenchConfig cfg;
  cfg.dims = {8, 8, 8};
  cfg.nps = {1, 4};
  cfg.repeats = 10;
  cfg.methods = parse_methods("all");
  const auto r = cmd_bench(cfg);
  CHECK(r.rows.size() == 12);
  for (const auto& row : r.rows) {
    CHECK(row.timed_executions == 10);
    CHECK(row.timing.named_sum() <= row.timing.total * (1 + 1e-9) + 1e-12);
    CHECK(row.timing.fft > 0);
    CHECK(row.bytes_measured == row.bytes_theory);
    if (row.np == 1) CHECK(row.timing.communication < row.timing.fft);
  }
}

TEST_CASE("tune report is consistent with its own medians") {
  BenchConfig cfg;
  cfg.dims = {8, 8, 8};
  cfg.nps = {4};
  cfg.methods = {CommMethod::automatic(), CommMethod::user_select(Strategy::WaitAllBlock)};
  const auto r = cmd_tune(cfg);
  REQUIRE(r.rows.size() == 2);
  CHECK(r.rows[0].tuned);
  CHECK(r.rows[0].tuning_executions == 12);
  CHECK(r.rows[0].winner == select_strategy(r.rows[0].median_s));
  CHECK_FALSE(r.rows[1].tuned);
  CHECK(r.rows[1].tuning_executions == 0);
  CHECK(r.rows[1].winner == Strategy::WaitAllBlock);
}

TEST_CASE("report schemas") {
  BenchConfig cfg;
  cfg.dims = {4, 4, 4};
  cfg.nps = {2};
  cfg.repeats = 2;
  cfg.methods = {CommMethod::named(Strategy::WaitAll)};
  const auto bench = cmd_bench(cfg);

  std::ostringstream csv;
  write_report(csv, cfg, bench);
  std::istringstream lines(csv.str());
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == "method,np,dims,comm_s,fft_s,buf_comm_s,buf_fft_s,others_s,total_s,bytes_theory,bytes_measured");
  CHECK(row.rfind("waitall,2,4x4x4,", 0) == 0);

  cfg.format = "json";
  std::ostringstream js;
  write_report(js, cfg, bench);
  const auto j = nlohmann::json::parse(js.str());
  CHECK(j["config"]["dims"] == "4x4x4");
  const auto& r0 = j["rows"][0];
  for (const char* key : {"method", "np", "dims", "comm_s", "fft_s", "buf_comm_s", "buf_fft_s", "others_s",
                          "total_s", "bytes_theory", "bytes_measured"}) {
    CHECK(r0.contains(key));
  }

  std::ostringstream vol;
  write_report(vol, cfg, cmd_volume(cfg));
  const auto v = nlohmann::json::parse(vol.str());
  CHECK(v["rows"][0]["form"] == "1d");
  CHECK(v["rows"][0]["match"] == true);
}

TEST_CASE("config validation") {
  BenchConfig cfg;
  cfg.repeats = 0;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg.repeats = 1;
  cfg.format = "xml";
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  cfg.format = "csv";
  cfg.transport = TransportKind::Sockets;
  CHECK_THROWS_AS(cfg.validate(), ContractError);
  CHECK(parse_methods("all").size() == 6);
  CHECK(parse_methods("waitall,user:pairwise").size() == 2);
  CHECK_THROWS_AS(parse_methods("waitall,bogus"), ContractError);
}

TEST_CASE("verify over sockets agrees with threads") {
  const std::string path = "adfft_test_ranks.txt";
  {
    std::ofstream f(path);
    for (int r = 0; r < 4; ++r) f << r << " 127.0.0.1:0\n";
  }
  BenchConfig cfg;
  cfg.dims = {4, 4, 4};
  cfg.nps = {4};
  cfg.methods = {CommMethod::named(Strategy::WaitSome)};
  const auto threads = cmd_verify(cfg);
  cfg.transport = TransportKind::Sockets;
  cfg.ranks_file = path;
  const auto sockets = cmd_verify(cfg);
  CHECK(sockets.ok);
  CHECK(sockets.rows[0].max_abs_err == threads.rows[0].max_abs_err);
  std::remove(path.c_str());
}
