// diracrt <verify|sweep|compare|transport|field> [--config f] [--seed s] [--out d] [--threads t]
//
// Exit status: 0 when every gated check passes, 1 when any fails,
// 2 on configuration or usage errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "diracrt/harness.hpp"

namespace {

void print_table(const diracrt::ResultSet& r) {
  std::printf("%-10s %-34s %-40s %14s %12s %s\n", "experiment", "metric", "params", "value", "error", "status");
  for (const auto& x : r.records) {
    if (x.metric == "wave_alpha_plus_mean" || x.metric == "transport_alpha_plus") continue;
    std::printf("%-10s %-34s %-40s %14.6e %12.3e %s\n", x.experiment.c_str(), x.metric.c_str(), x.params.c_str(),
                x.value, x.error, x.pass < 0 ? "info" : x.pass ? "PASS" : "FAIL");
  }
  for (const auto& t : r.timings) std::printf("time %-30s %10.3f s\n", t.label.c_str(), t.seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirac wave packets in random fields and their transport limit"};
  app.require_subcommand(1, 1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 0;
  for (const char* name : {"verify", "sweep", "compare", "transport", "field"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON experiment config");
    sub->add_option("--seed", seed, "Master seed (overrides config)");
    sub->add_option("--out", out_dir, "Output directory (overrides config)");
    sub->add_option("--threads", threads, "Worker threads (overrides config)");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string experiment = app.get_subcommands().front()->get_name();

  diracrt::ExperimentConfig cfg = diracrt::default_config();
  std::vector<std::string> problems;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot open config file '" << config_path << "'\n";
      return 2;
    }
    nlohmann::json j;
    try {
      in >> j;
    } catch (const std::exception& e) {
      std::cerr << "error: " << config_path << " is not valid JSON: " << e.what() << '\n';
      return 2;
    }
    cfg = diracrt::config_from_json(j, problems);
  }
  cfg.experiment = experiment;
  if (seed) cfg.seed = seed;
  if (threads) cfg.threads = threads;
  if (!out_dir.empty()) cfg.output = out_dir;
  for (const auto& p : cfg.validate()) problems.push_back(p);
  if (!problems.empty()) {
    for (const auto& p : problems) std::cerr << "config error: " << p << '\n';
    return 2;
  }

  try {
    const diracrt::ResultSet r = diracrt::run_experiment(cfg, cfg.output);
    diracrt::write_outputs(r, cfg, cfg.output);
    print_table(r);
    std::printf("%zu records, %zu failed; results in %s\n", r.records.size(), r.failures(), cfg.output.c_str());
    return r.all_pass() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
