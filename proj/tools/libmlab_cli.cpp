#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "libmlab/config.hpp"
#include "libmlab/errors.hpp"
#include "libmlab/harness.hpp"

// Exit codes: 0 ok, 1 unexpected failure, 2 bad config or arguments,
// 3 simulation abort or solver failure.
int main(int argc, char** argv) {
  using namespace libmlab;
  CLI::App app{"Two-species locally interacting Brownian motions: particles vs PDE"};
  app.set_version_flag("--version", version_string);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool plot = false;
  bool timings = false;

  for (const char* name : {"simulate", "solve", "compare", "diagnose", "sweep"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "experiment JSON")->check(CLI::ExistingFile);
    sub->add_option("--out-dir", out_dir, "output directory (overrides outputs.directory)");
    sub->add_option("--seed", seed, "master seed (overrides particles.seed)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--plot", plot, "also write SVG plots");
    sub->add_flag("--timings", timings, "record wall-clock timings in the manifest");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    ExperimentConfig cfg =
        config_path.empty() ? parse_config(nlohmann::json::object()) : load_config(config_path);
    RunOptions opt;
    opt.out_dir = out_dir;
    opt.seed = seed;
    opt.threads = threads;
    opt.plot = plot;
    opt.timings = timings;
    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "simulate") cmd_simulate(std::move(cfg), opt);
    else if (cmd == "solve") cmd_solve(std::move(cfg), opt);
    else if (cmd == "compare") cmd_compare(std::move(cfg), opt);
    else if (cmd == "diagnose") cmd_diagnose(std::move(cfg), opt);
    else cmd_sweep(std::move(cfg), opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 2;
  } catch (const SimulationAbort& e) {
    std::cerr << "simulation aborted: " << e.what() << "\n";
    return 3;
  } catch (const BlowUpError& e) {
    std::cerr << "solver blow-up: " << e.what() << "\n";
    return 3;
  } catch (const StabilityError& e) {
    std::cerr << "stability: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
