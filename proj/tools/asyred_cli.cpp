// Command-line front end: `run` executes one scenario, `sweep` repeats it across parameter values.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "asyred/asyred.hpp"
#include "asyred/config_file.hpp"
#include "asyred/report_io.hpp"

namespace fs = std::filesystem;
using namespace asyred;

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--config", a.config, "Scenario file")->required();
  cmd->add_option("--out", a.out, "Output directory")->required();
  cmd->add_option("--seed", a.seed, "Override the RNG seed");
  cmd->add_option("--duration", a.duration, "Override the simulated duration in seconds");
}

ExperimentConfig load(const CommonArgs& a) {
  ExperimentConfig cfg = load_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.duration) cfg.duration_s = *a.duration;
  cfg.validate();
  return cfg;
}

void print_summary(const RunReport& r, const std::string& label) {
  std::printf("%-18s passes=%-4zu writes=%-9llu checksums=%-9llu syscalls=%-8llu improvement=%-10s "
              "recovered=%llu unrecoverable=%llu silent=%llu exit=%d\n",
              label.c_str(), r.passes.size(), static_cast<unsigned long long>(r.workload.writes),
              static_cast<unsigned long long>(r.total_checksums),
              static_cast<unsigned long long>(r.dirty_ops.syscalls()), csv_number(r.mttdl.improvement).c_str(),
              static_cast<unsigned long long>(r.recovered_count()),
              static_cast<unsigned long long>(r.unrecoverable_count()),
              static_cast<unsigned long long>(r.silent_corruptions), r.exit_code());
}

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> out;
  std::stringstream ss(list);
  for (std::string v; std::getline(ss, v, ',');) {
    v = detail::trim(v);
    if (!v.empty()) out.push_back(v);
  }
  if (out.empty()) throw config_error("--values needs at least one value");
  return out;
}

int do_run(const CommonArgs& a) {
  const ExperimentConfig cfg = load(a);
  const RunReport r = run_experiment(cfg);
  write_report_files(a.out, r);
  print_summary(r, "run");
  return r.exit_code();
}

int do_sweep(const CommonArgs& a, const std::string& param, const std::string& values) {
  const ExperimentConfig base = load(a);
  const auto vals = split_values(values);
  std::vector<ExperimentConfig> cfgs;
  for (const auto& v : vals) {
    ExperimentConfig c = base;
    apply_sweep_param(c, param, v);
    c.validate();
    cfgs.push_back(c);
  }
  fs::create_directories(a.out);
  const fs::path combined = fs::path(a.out) / "summary.csv";
  fs::remove(combined);
  int code = 0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    const RunReport r = run_experiment(cfgs[i]);
    write_report_files(fs::path(a.out) / (param + "=" + vals[i]), r, param, vals[i]);
    append_summary_csv(combined, r, param, vals[i]);
    print_summary(r, param + "=" + vals[i]);
    code = std::max(code, r.exit_code());
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asynchronous checksum and parity maintenance simulator"};
  app.require_subcommand(1);

  CommonArgs run_args;
  auto* run = app.add_subcommand("run", "Run one scenario");
  add_common(run, run_args);

  CommonArgs sweep_args;
  std::string param, values;
  auto* sweep = app.add_subcommand("sweep", "Run a scenario once per parameter value");
  add_common(sweep, sweep_args);
  sweep->add_option("--param", param, "period, batch_size, threads or stripe_size")->required();
  sweep->add_option("--values", values, "Comma-separated values")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return do_run(run_args);
    return do_sweep(sweep_args, param, values);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
