#pragma once

// Measurement and verification drivers behind the command-line tool.
//
// Every cmd_* call runs one or more simulated worlds (threads, or sockets
// given an address table) and returns a report that is identical on every
// rank. Reports serialize to CSV or JSON; all times are seconds and all
// volumes bytes.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adfft/comm.hpp"
#include "adfft/decomposition.hpp"
#include "adfft/engine.hpp"
#include "adfft/grid.hpp"

namespace adfft {

enum class TransportKind { Threads, Sockets };

struct BenchConfig {
  GridDims dims{4, 4, 4};
  /// Rank counts to run; each produces its own rows.
  std::vector<int> nps{1};
  /// Methods to run; "all" expands to the six strategies.
  std::vector<CommMethod> methods{CommMethod::default_method()};
  TransportKind transport = TransportKind::Threads;
  std::string ranks_file;
  /// With sockets: run only this rank in the current process (-1 runs every rank as a thread).
  int socket_rank = -1;
  std::size_t repeats = 10;
  std::size_t tune_reps = 2;
  std::size_t b_size = kDefaultBlockSize;
  std::uint64_t seed = 1;
  std::string format = "csv";
  std::string out;
  std::size_t oracle_cap = 4096;
  double tolerance = 1e-10;

  /// Throws ContractError for repeats == 0, an unknown format, or a bad rank count.
  void validate() const;
};

/// Parses a method flag: "all", or a comma list of names accepted by CommMethod::parse.
std::vector<CommMethod> parse_methods(const std::string& text);

/// Seeded input. Stream: std::mt19937_64(seed); the point at ABC linear index x
/// takes draws 2x (real) and 2x+1 (imaginary), each mapped as
/// (draw >> 11) * 2^-53 * 2 - 1 into [-1, 1).
ComplexBuf random_global(const GridDims& dims, std::uint64_t seed);
ComplexBuf random_slab(const GridDims& dims, const Slab& abc_slab, std::uint64_t seed);

/// Direct triple-sum forward DFT of an ABC-ordered array, result ABC-ordered.
/// Throws ContractError when dims.total() > cap.
ComplexBuf oracle_dft3(std::span<const Complex> global, const GridDims& dims, std::size_t cap = 4096);

struct VerifyRow {
  std::string method;
  int np = 1;
  GridDims dims;
  double max_abs_err = 0;
  bool pass = false;
};

struct VolumeRow {
  std::string method;
  int np = 1;
  GridDims dims;
  DecompForm form = DecompForm::OneD;
  std::uint64_t bytes_theory = 0;
  std::uint64_t bytes_measured = 0;
  /// Every rank's own measured bytes equal its plan bytes.
  bool per_rank_match = false;
  bool match = false;
};

struct BenchRow {
  std::string method;
  int np = 1;
  GridDims dims;
  /// Breakdown of the slowest rank, averaged over the timed executions.
  TimingBreakdown timing;
  std::uint64_t bytes_theory = 0;
  /// Measured bytes per execution, summed over ranks.
  std::uint64_t bytes_measured = 0;
  std::size_t timed_executions = 0;
};

struct TuneRow {
  std::string requested;
  int np = 1;
  GridDims dims;
  bool tuned = false;
  Strategy winner = kDefaultStrategy;
  std::size_t tuning_executions = 0;
  std::array<double, 6> median_s{};
};

template <class Row>
struct Report {
  std::vector<Row> rows;
  bool ok = true;
};

Report<VerifyRow> cmd_verify(const BenchConfig& cfg);
Report<VolumeRow> cmd_volume(const BenchConfig& cfg);
Report<BenchRow> cmd_bench(const BenchConfig& cfg);
Report<TuneRow> cmd_tune(const BenchConfig& cfg);

void write_report(std::ostream& os, const BenchConfig& cfg, const Report<VerifyRow>& r);
void write_report(std::ostream& os, const BenchConfig& cfg, const Report<VolumeRow>& r);
void write_report(std::ostream& os, const BenchConfig& cfg, const Report<BenchRow>& r);
void write_report(std::ostream& os, const BenchConfig& cfg, const Report<TuneRow>& r);

/// Forward 3-D FFT of a whole ABC-ordered array on np threaded ranks;
/// returns the gathered CBA-ordered result.
ComplexBuf distributed_fft(const GridDims& dims, int np, std::span<const Complex> global_abc,
                           CommMethod method = CommMethod::default_method());

}  // namespace adfft
