#include "adfft/harness.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "adfft/error.hpp"
#include "adfft/socket_transport.hpp"
#include "adfft/threaded_transport.hpp"

namespace adfft {

namespace {

using json = nlohmann::json;

double unit_draw(std::uint64_t r) { return static_cast<double>(r >> 11) * 0x1.0p-53 * 2.0 - 1.0; }

std::uint64_t phase_bytes(const Transport& t) {
  return t.counters().phase_bytes(kPhaseFirstTranspose) + t.counters().phase_bytes(kPhaseSecondTranspose);
}

// Runs rank_main on every rank of an np-rank world and returns the report
// of the lowest rank hosted by this process (reports are rank-invariant).
template <class F>
auto run_world(const BenchConfig& cfg, int np, F&& rank_main) {
  using Result = std::invoke_result_t<F&, Transport&>;
  if (cfg.transport == TransportKind::Threads) {
    return std::move(threaded_spawn(np, rank_main).front());
  }

  const auto table = read_address_table(cfg.ranks_file);
  if (static_cast<int>(table.size()) != np) {
    throw ContractError("address table lists " + std::to_string(table.size()) + " ranks but np is " +
                        std::to_string(np));
  }
  if (cfg.socket_rank >= 0) {
    auto t = SocketTransport::connect(cfg.socket_rank, table);
    return rank_main(*t);
  }

  // Every rank in this process: bind all listeners first so nobody dials a closed port.
  std::vector<SocketListener> listeners;
  auto resolved = table;
  for (std::size_t r = 0; r < table.size(); ++r) {
    listeners.emplace_back(table[r].host, table[r].port);
    resolved[r].port = listeners.back().port();
  }
  std::vector<std::optional<Result>> results(table.size());
  std::vector<std::exception_ptr> errors(table.size());
  std::vector<std::thread> threads;
  for (int r = 0; r < np; ++r) {
    threads.emplace_back([&, r] {
      const auto i = static_cast<std::size_t>(r);
      try {
        auto t = SocketTransport::connect(r, resolved, std::move(listeners[i]));
        results[i].emplace(rank_main(*t));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  }
  for (auto& th : threads) th.join();
  detail::raise_spawn_failures(errors);
  return std::move(*results.front());
}

std::string method_label(const FftContext& ctx) {
  const CommMethod& m = ctx.requested_method();
  if (m.kind() == CommMethod::Kind::Auto || m.kind() == CommMethod::Kind::Default) {
    return m.to_string() + "(" + std::string(to_string(ctx.strategy())) + ")";
  }
  return m.to_string();
}

// Breakdown of the rank with the largest total (lowest such rank on ties).
TimingBreakdown slowest_rank(Transport& t, const TimingBreakdown& mine) {
  std::array<double, 1> total = {mine.total};
  allreduce_max(t, total);
  std::array<double, 1> owner = {mine.total == total[0] ? -static_cast<double>(t.rank()) : -1e18};
  allreduce_max(t, owner);
  auto v = mine.as_array();
  if (-owner[0] != static_cast<double>(t.rank())) v.fill(0.0);
  allreduce_sum(t, v);
  return TimingBreakdown::from_array(v);
}

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
  os << '\n';
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(9) << v;
  return s.str();
}

json config_json(const BenchConfig& cfg) {
  json methods = json::array();
  for (const auto& m : cfg.methods) methods.push_back(m.to_string());
  return {{"dims", to_string(cfg.dims)},
          {"np", cfg.nps},
          {"methods", methods},
          {"transport", cfg.transport == TransportKind::Threads ? "threads" : "sockets"},
          {"repeats", cfg.repeats},
          {"tune_reps", cfg.tune_reps},
          {"b_size", cfg.b_size},
          {"seed", cfg.seed}};
}

}  // namespace

void BenchConfig::validate() const {
  if (repeats == 0) throw ContractError("repeats must be at least 1");
  if (format != "csv" && format != "json") throw ContractError("format must be csv or json");
  if (nps.empty()) throw ContractError("no rank count given");
  if (methods.empty()) throw ContractError("no method given");
  if (b_size == 0) throw ContractError("block size must be at least 1");
  for (int np : nps) {
    if (np < 1 || static_cast<std::size_t>(np) > max_pipeline_ranks(dims)) {
      throw UnsupportedScaleError(std::to_string(np) + " ranks do not fit " + to_string(dims) + " (at most " +
                                  std::to_string(max_pipeline_ranks(dims)) + ")");
    }
  }
  if (transport == TransportKind::Sockets && ranks_file.empty()) {
    throw ContractError("the socket transport needs --ranks-file");
  }
}

std::vector<CommMethod> parse_methods(const std::string& text) {
  if (text == "all") {
    std::vector<CommMethod> all;
    for (Strategy s : kAllStrategies) all.push_back(CommMethod::named(s));
    return all;
  }
  std::vector<CommMethod> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(CommMethod::parse(item));
  if (out.empty()) throw ContractError("empty method list");
  return out;
}

ComplexBuf random_global(const GridDims& dims, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ComplexBuf out(dims.total());
  for (auto& z : out) {
    const double re = unit_draw(rng());
    z = {re, unit_draw(rng())};
  }
  return out;
}

ComplexBuf random_slab(const GridDims& dims, const Slab& abc_slab, std::uint64_t seed) {
  if (abc_slab.order != DimOrder::ABC) throw ContractError("random_slab expects an ABC slab");
  (void)dims;
  std::mt19937_64 rng(seed);
  rng.discard(2 * static_cast<unsigned long long>(abc_slab.x_start));
  ComplexBuf out(abc_slab.count);
  for (auto& z : out) {
    const double re = unit_draw(rng());
    z = {re, unit_draw(rng())};
  }
  return out;
}

ComplexBuf oracle_dft3(std::span<const Complex> global, const GridDims& dims, std::size_t cap) {
  if (dims.total() > cap) {
    throw ContractError("oracle limited to " + std::to_string(cap) + " points, grid has " +
                        std::to_string(dims.total()));
  }
  if (global.size() != dims.total()) throw ContractError("oracle input size does not match dims");
  auto roots = [](std::size_t n) {
    std::vector<Complex> w(n);
    for (std::size_t j = 0; j < n; ++j) w[j] = std::polar(1.0, -2.0 * std::numbers::pi * double(j) / double(n));
    return w;
  };
  const auto w1 = roots(dims.n1), w2 = roots(dims.n2), w3 = roots(dims.n3);
  ComplexBuf out(dims.total());
  for (std::size_t k1 = 0; k1 < dims.n1; ++k1)
    for (std::size_t k2 = 0; k2 < dims.n2; ++k2)
      for (std::size_t k3 = 0; k3 < dims.n3; ++k3) {
        Complex acc{};
        std::size_t x = 0;
        for (std::size_t a = 0; a < dims.n1; ++a) {
          const Complex fa = w1[(k1 * a) % dims.n1];
          for (std::size_t b = 0; b < dims.n2; ++b) {
            const Complex fab = fa * w2[(k2 * b) % dims.n2];
            for (std::size_t c = 0; c < dims.n3; ++c, ++x) acc += global[x] * fab * w3[(k3 * c) % dims.n3];
          }
        }
        out[(k1 * dims.n2 + k2) * dims.n3 + k3] = acc;
      }
  return out;
}

ComplexBuf distributed_fft(const GridDims& dims, int np, std::span<const Complex> global_abc, CommMethod method) {
  auto results = threaded_spawn(np, [&](Transport& t) {
    FftContext ctx(dims, t, method);
    const Slab& s = ctx.in_slab();
    const auto out = ctx.execute(global_abc.subspan(s.x_start, s.count));
    return ctx.gather(out);
  });
  return std::move(results.front());
}

Report<VerifyRow> cmd_verify(const BenchConfig& cfg) {
  cfg.validate();
  const ComplexBuf input = random_global(cfg.dims, cfg.seed);
  const ComplexBuf expected = reorder(oracle_dft3(input, cfg.dims, cfg.oracle_cap), cfg.dims, DimOrder::ABC,
                                      DimOrder::CBA);
  Report<VerifyRow> report;
  for (int np : cfg.nps) {
    for (const CommMethod& method : cfg.methods) {
      auto row = run_world(cfg, np, [&](Transport& t) {
        EngineOptions opts{cfg.tune_reps, cfg.b_size};
        FftContext ctx(cfg.dims, t, method, opts);
        const auto local = random_slab(cfg.dims, ctx.in_slab(), cfg.seed);
        const auto gathered = ctx.gather(ctx.execute(local));
        std::array<double, 1> err = {0.0};
        if (t.rank() == 0) {
          for (std::size_t i = 0; i < expected.size(); ++i) err[0] = std::max(err[0], std::abs(gathered[i] - expected[i]));
        }
        allreduce_max(t, err);
        ctx.finalize();
        return VerifyRow{method_label(ctx), np, cfg.dims, err[0], err[0] <= cfg.tolerance};
      });
      report.ok = report.ok && row.pass;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

Report<VolumeRow> cmd_volume(const BenchConfig& cfg) {
  cfg.validate();
  Report<VolumeRow> report;
  for (int np : cfg.nps) {
    const VolumeReport theory = pipeline_volume(cfg.dims, np);
    for (const CommMethod& method : cfg.methods) {
      auto row = run_world(cfg, np, [&](Transport& t) {
        EngineOptions opts{cfg.tune_reps, cfg.b_size};
        FftContext ctx(cfg.dims, t, method, opts);
        const auto local = random_slab(cfg.dims, ctx.in_slab(), cfg.seed);
        barrier(t);
        t.reset_counters();
        ctx.execute(local);
        const std::uint64_t mine = phase_bytes(t);
        const std::uint64_t planned = ctx.first_plan().total_send_bytes() + ctx.second_plan().total_send_bytes();
        std::array<double, 2> sums = {static_cast<double>(mine), mine == planned ? 0.0 : 1.0};
        allreduce_sum(t, sums);
        VolumeRow r;
        r.method = method_label(ctx);
        r.np = np;
        r.dims = cfg.dims;
        r.form = theory.form;
        r.bytes_theory = theory.total_bytes;
        r.bytes_measured = static_cast<std::uint64_t>(sums[0]);
        r.per_rank_match = sums[1] == 0.0;
        r.match = r.per_rank_match && r.bytes_measured == r.bytes_theory;
        return r;
      });
      report.ok = report.ok && row.match;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

Report<BenchRow> cmd_bench(const BenchConfig& cfg) {
  cfg.validate();
  Report<BenchRow> report;
  for (int np : cfg.nps) {
    const std::uint64_t theory = pipeline_volume(cfg.dims, np).total_bytes;
    for (const CommMethod& method : cfg.methods) {
      auto row = run_world(cfg, np, [&](Transport& t) {
        EngineOptions opts{cfg.tune_reps, cfg.b_size};
        FftContext ctx(cfg.dims, t, method, opts);
        const auto local = random_slab(cfg.dims, ctx.in_slab(), cfg.seed);
        t.reset_counters();
        TimingBreakdown sum;
        for (std::size_t rep = 0; rep < cfg.repeats; ++rep) {
          barrier(t);
          ctx.execute(local);
          const TimingBreakdown mine = ctx.last_timing();
          sum += slowest_rank(t, mine);
        }
        std::array<double, 1> bytes = {static_cast<double>(phase_bytes(t))};
        allreduce_sum(t, bytes);
        BenchRow r;
        r.method = method_label(ctx);
        r.np = np;
        r.dims = cfg.dims;
        r.timing = sum.scaled(1.0 / static_cast<double>(cfg.repeats));
        r.bytes_theory = theory;
        r.bytes_measured = static_cast<std::uint64_t>(bytes[0]) / cfg.repeats;
        r.timed_executions = ctx.executions();
        return r;
      });
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

Report<TuneRow> cmd_tune(const BenchConfig& cfg) {
  cfg.validate();
  Report<TuneRow> report;
  for (int np : cfg.nps) {
    for (const CommMethod& method : cfg.methods) {
      auto row = run_world(cfg, np, [&](Transport& t) {
        EngineOptions opts{cfg.tune_reps, cfg.b_size};
        FftContext ctx(cfg.dims, t, method, opts);
        TuneRow r;
        r.requested = method.to_string();
        r.np = np;
        r.dims = cfg.dims;
        r.tuned = ctx.tune_report().tuned;
        r.winner = ctx.strategy();
        r.tuning_executions = ctx.tuning_executions();
        r.median_s = ctx.tune_report().median_s;
        return r;
      });
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

void write_report(std::ostream& os, const BenchConfig& cfg, const Report<VerifyRow>& r) {
  if (cfg.format == "json") {
    json rows = json::array();
    for (const auto& v : r.rows) {
      rows.push_back({{"method", v.method}, {"np", v.np}, {"dims", to_string(v.dims)},
                      {"max_abs_err", v.max_abs_err}, {"pass", v.pass}});
    }
    os << json{{"config", config_json(cfg)}, {"rows", rows}, {"ok", r.ok}}.dump(2) << '\n';
    return;
  }
  write_csv_row(os, {"method", "np", "dims", "max_abs_err", "pass"});
  for (const auto& v : r.rows) {
    write_csv_row(os, {v.method, std::to_string(v.np), to_string(v.dims), num(v.max_abs_err), v.pass ? "true" : "false"});
  }
}

void write_report(std::ostream& os, const BenchConfig& cfg, const Report<VolumeRow>& r) {
  if (cfg.format == "json") {
    json rows = json::array();
    for (const auto& v : r.rows) {
      rows.push_back({{"method", v.method}, {"np", v.np}, {"dims", to_string(v.dims)},
                      {"form", std::string(to_string(v.form))}, {"bytes_theory", v.bytes_theory},
                      {"bytes_measured", v.bytes_measured}, {"match", v.match}});
    }
    os << json{{"config", config_json(cfg)}, {"rows", rows}, {"ok", r.ok}}.dump(2) << '\n';
    return;
  }
  write_csv_row(os, {"method", "np", "dims", "form", "bytes_theory", "bytes_measured", "match"});
  for (const auto& v : r.rows) {
    write_csv_row(os, {v.method, std::to_string(v.np), to_string(v.dims), std::string(to_string(v.form)),
                       std::to_string(v.bytes_theory), std::to_string(v.bytes_measured), v.match ? "true" : "false"});
  }
}

void write_report(std::ostream& os, const BenchConfig& cfg, const Report<BenchRow>& r) {
  if (cfg.format == "json") {
    json rows = json::array();
    for (const auto& v : r.rows) {
      rows.push_back({{"method", v.method},
                      {"np", v.np},
                      {"dims", to_string(v.dims)},
                      {"comm_s", v.timing.communication},
                      {"fft_s", v.timing.fft},
                      {"buf_comm_s", v.timing.buffer_comm},
                      {"buf_fft_s", v.timing.buffer_fft},
                      {"others_s", v.timing.others},
                      {"total_s", v.timing.total},
                      {"bytes_theory", v.bytes_theory},
                      {"bytes_measured", v.bytes_measured}});
    }
    os << json{{"config", config_json(cfg)}, {"rows", rows}}.dump(2) << '\n';
    return;
  }
  write_csv_row(os, {"method", "np", "dims", "comm_s", "fft_s", "buf_comm_s", "buf_fft_s", "others_s", "total_s",
                     "bytes_theory", "bytes_measured"});
  for (const auto& v : r.rows) {
    const auto& t = v.timing;
    write_csv_row(os, {v.method, std::to_string(v.np), to_string(v.dims), num(t.communication), num(t.fft),
                       num(t.buffer_comm), num(t.buffer_fft), num(t.others), num(t.total),
                       std::to_string(v.bytes_theory), std::to_string(v.bytes_measured)});
  }
}

void write_report(std::ostream& os, const BenchConfig& cfg, const Report<TuneRow>& r) {
  if (cfg.format == "json") {
    json rows = json::array();
    for (const auto& v : r.rows) {
      json medians = json::object();
      if (v.tuned) {
        for (Strategy s : kAllStrategies) medians[std::string(to_string(s))] = v.median_s[static_cast<std::size_t>(s)];
      }
      rows.push_back({{"requested", v.requested}, {"np", v.np}, {"dims", to_string(v.dims)},
                      {"winner", std::string(to_string(v.winner))}, {"tuning_executions", v.tuning_executions},
                      {"median_s", medians}});
    }
    os << json{{"config", config_json(cfg)}, {"rows", rows}}.dump(2) << '\n';
    return;
  }
  write_csv_row(os, {"requested", "np", "dims", "method", "median_s", "winner", "tuning_executions"});
  for (const auto& v : r.rows) {
    const std::string winner(to_string(v.winner));
    if (!v.tuned) {
      write_csv_row(os, {v.requested, std::to_string(v.np), to_string(v.dims), winner, "", winner,
                         std::to_string(v.tuning_executions)});
      continue;
    }
    for (Strategy s : kAllStrategies) {
      write_csv_row(os, {v.requested, std::to_string(v.np), to_string(v.dims), std::string(to_string(s)),
                         num(v.median_s[static_cast<std::size_t>(s)]), winner, std::to_string(v.tuning_executions)});
    }
  }
}

}  // namespace adfft
