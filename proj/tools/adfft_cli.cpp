// adfft: verification, volume, benchmark and tuning driver.

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "adfft/error.hpp"
#include "adfft/harness.hpp"
#include "adfft/socket_transport.hpp"

namespace {

std::vector<int> parse_np_list(const std::string& text) {
  std::vector<int> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw adfft::ContractError("bad rank count '" + item + "'");
    out.push_back(v);
  }
  return out;
}

template <class Row>
int emit(const adfft::BenchConfig& cfg, const adfft::Report<Row>& report, bool strict) {
  if (cfg.out.empty()) {
    adfft::write_report(std::cout, cfg, report);
  } else {
    std::ofstream f(cfg.out);
    if (!f) throw adfft::ContractError("cannot write '" + cfg.out + "'");
    adfft::write_report(f, cfg, report);
  }
  return strict && !report.ok ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed 3-D FFT: verification, communication volume, benchmarks and strategy tuning"};
  app.require_subcommand(1);

  std::string dims = "4x4x4";
  std::string np = "1";
  std::string method;
  std::string transport = "threads";
  adfft::BenchConfig cfg;
  std::size_t cap = cfg.oracle_cap;

  auto add_common = [&](CLI::App* sub, const std::string& default_method, const std::string& default_np) {
    sub->add_option("--dims", dims, "grid lengths N1xN2xN3")->capture_default_str();
    sub->add_option("--np", np, "rank count, or a comma list for a sweep")->default_str(default_np);
    sub->add_option("--method", method,
                    "all, auto, default, waitall, alltoallv, waitall-block, waitsome, waitsome-block, pairwise, "
                    "user:<method>, or a comma list")
        ->default_str(default_method);
    sub->add_option("--transport", transport, "threads or sockets")
        ->check(CLI::IsMember({"threads", "sockets"}))
        ->capture_default_str();
    sub->add_option("--ranks-file", cfg.ranks_file, "address table of 'rank host:port' lines (sockets)");
    sub->add_option("--rank", cfg.socket_rank, "with sockets: run only this rank in this process");
    sub->add_option("--repeats", cfg.repeats, "timed executions per method")->capture_default_str();
    sub->add_option("--tune-reps", cfg.tune_reps, "tuning executions per strategy")->capture_default_str();
    sub->add_option("--block-size", cfg.b_size, "ranks per block for the block strategies")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "input PRNG seed")->capture_default_str();
    sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    sub->add_option("--out", cfg.out, "output file (default stdout)");
  };

  auto* verify = app.add_subcommand("verify", "compare against a direct 3-D DFT; exit 1 on mismatch");
  add_common(verify, "all", "1");
  verify->add_option("--oracle-cap", cap, "largest grid the direct DFT accepts")->capture_default_str();
  verify->add_option("--tolerance", cfg.tolerance, "max abs error allowed")->capture_default_str();
  auto* volume = app.add_subcommand("volume", "plan-derived vs measured bytes; exit 1 on mismatch");
  add_common(volume, "all", "1,2,4,8");
  auto* bench = app.add_subcommand("bench", "timing breakdown per method");
  add_common(bench, "all", "1");
  auto* tune = app.add_subcommand("tune", "run strategy selection and report per-strategy medians");
  add_common(tune, "auto", "1");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (method.empty()) method = sub == tune ? "auto" : "all";
    if (np.empty() || sub->count("--np") == 0) np = sub == volume ? "1,2,4,8" : "1";
    cfg.dims = adfft::parse_dims(dims);
    cfg.nps = parse_np_list(np);
    cfg.methods = adfft::parse_methods(method);
    cfg.transport = transport == "sockets" ? adfft::TransportKind::Sockets : adfft::TransportKind::Threads;
    cfg.oracle_cap = cap;
    if (cfg.transport == adfft::TransportKind::Sockets && sub->count("--np") == 0 && !cfg.ranks_file.empty()) {
      cfg.nps = {static_cast<int>(adfft::read_address_table(cfg.ranks_file).size())};
    }
    // In multi-process mode only rank 0 writes the report.
    const bool writer = cfg.socket_rank <= 0;

    if (sub == verify) {
      auto r = adfft::cmd_verify(cfg);
      return writer ? emit(cfg, r, true) : (r.ok ? 0 : 1);
    }
    if (sub == volume) {
      auto r = adfft::cmd_volume(cfg);
      return writer ? emit(cfg, r, true) : (r.ok ? 0 : 1);
    }
    if (sub == bench) {
      auto r = adfft::cmd_bench(cfg);
      return writer ? emit(cfg, r, false) : 0;
    }
    auto r = adfft::cmd_tune(cfg);
    return writer ? emit(cfg, r, false) : 0;
  } catch (const std::exception& e) {
    std::cerr << "adfft: " << e.what() << '\n';
    return 2;
  }
}
