// Command-line front end: generate / run / sweep / report over a config file.

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>

#include "multiswitch/cli.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool assert_bounds = false;
};

void add_common(CLI::App* cmd, Flags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config_path, "experiment config file");
  if (config_required) c->required();
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&f](const std::uint64_t& v) { f.seed = v; }, "override the config seed");
  cmd->add_option_function<std::string>(
      "--out", [&f](const std::string& v) { f.out_dir = v; }, "override the output directory");
  cmd->add_flag("--assert-bounds", f.assert_bounds,
                "exit with status 3 if measured regret exceeds the bound");
}

int dispatch(const std::string& cmd, const Flags& f) {
  using namespace multiswitch;
  try {
    if (cmd == "report") {
      std::string out = f.out_dir.value_or("");
      if (out.empty() && !f.config_path.empty()) out = load_config(f.config_path).out_dir;
      if (out.empty()) out = "out";
      return cmd_report(out, f.assert_bounds);
    }
    ExperimentConfig cfg = load_config(f.config_path);
    if (f.seed) cfg.seed = *f.seed;
    if (f.out_dir) cfg.out_dir = *f.out_dir;
    if (f.assert_bounds) cfg.assert_bounds = true;
    if (cmd == "generate") return cmd_generate(cfg);
    if (cmd == "run") return cmd_run(cfg);
    return cmd_sweep(cfg);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online multitask prediction with switching and long-term memory"};
  app.require_subcommand(1);

  Flags fgen, frun, fsweep, freport;
  CLI::App* gen = app.add_subcommand("generate", "write a seeded problem file");
  add_common(gen, fgen, true);
  CLI::App* run = app.add_subcommand("run", "run one experiment; write trace.csv and summary.txt");
  add_common(run, frun, true);
  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter grid; write sweep.csv");
  add_common(sweep, fsweep, true);
  CLI::App* report = app.add_subcommand("report", "restate a finished run directory");
  add_common(report, freport, false);

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) return dispatch("generate", fgen);
  if (run->parsed()) return dispatch("run", frun);
  if (sweep->parsed()) return dispatch("sweep", fsweep);
  return dispatch("report", freport);
}
