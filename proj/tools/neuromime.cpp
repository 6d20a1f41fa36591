#include <algorithm>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "neuromime/harness.hpp"

namespace h = neuromime::harness;

int main(int argc, char** argv) {
  CLI::App app{"neuromime: in-materio computing experiments"};
  app.require_subcommand(1);
  app.add_subcommand("list", "list registered experiments");

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  for (const auto& e : h::registry()) {
    auto* sub = app.add_subcommand(e.id, e.summary);
    sub->add_option("--config,-c", config_path, "TOML config file (defaults apply when omitted)")->check(CLI::ExistingFile);
    sub->add_option("--seed,-s", seed, "override the config seed");
    sub->add_option("--out,-o", out_dir, "override the output directory");
  }

  if (argc > 1 && argv[1][0] != '-' && std::string(argv[1]) != "list" &&
      !std::any_of(h::registry().begin(), h::registry().end(), [&](const auto& e) { return e.id == argv[1]; })) {
    std::cerr << "config error: unknown experiment '" << argv[1] << "'; valid ids: " << h::experiment_ids() << "\n";
    return 2;
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  const auto* chosen = app.get_subcommands().front();
  if (chosen->get_name() == "list") {
    for (const auto& e : h::registry()) std::printf("%-22s %s\n", e.id.c_str(), e.summary.c_str());
    return 0;
  }

  try {
    const std::string id = chosen->get_name();
    auto cfg = config_path.empty() ? h::parse_config("", id, "<defaults>") : h::load_config(config_path, id);
    if (seed) cfg.seed = *seed;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const auto report = h::run_experiment(cfg);
    for (const auto& [k, v] : report.metrics) std::printf("%-36s %.10g\n", k.c_str(), v);
    for (const auto& [k, v] : report.notes) std::printf("%-36s %s\n", k.c_str(), v.c_str());
    std::printf("wrote %zu files to %s in %.2f s\n", report.artifacts.size(), cfg.out_dir.string().c_str(),
                report.wall_time);
    return 0;
  } catch (const neuromime::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
