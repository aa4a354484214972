// Command-line front end. Talks to the library through the C API only.
#include "kdpc/kdpc.h"

#include "CLI11.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

namespace {

enum Exit { ok = 0, other = 1, usage = 2, pe = 3, fit = 4, diverged = 5, io = 6 };

int exit_code(kdpc_status s) {
  switch (s) {
    case KDPC_OK: return ok;
    case KDPC_ERR_INVALID_ARGUMENT:
    case KDPC_ERR_DIMENSION:
    case KDPC_ERR_CONFIG: return usage;
    case KDPC_ERR_PE: return pe;
    case KDPC_ERR_FIT: return fit;
    case KDPC_ERR_DIVERGED: return diverged;
    case KDPC_ERR_IO: return io;
    default: return other;
  }
}

int report(kdpc_status s) {
  if (s != KDPC_OK) {
    std::fprintf(stderr, "error (%s): %s\n", kdpc_status_string(s), kdpc_last_error());
  }
  return exit_code(s);
}

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool parallel = false;
  std::string dataset;
  std::string predictors;
};

struct ConfigHandle {
  kdpc_config* p = nullptr;
  ~ConfigHandle() { kdpc_config_free(p); }
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "YAML configuration (defaults when omitted)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "output root directory (config 'output' when omitted)");
  cmd->add_option("--seed", o.seed, "overrides the configured seed");
  cmd->add_flag("--parallel", o.parallel, "run scenarios on separate threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kernel-based predictive control of a Van der Pol oscillator"};
  app.set_version_flag("--version", std::string(kdpc_version()));
  app.require_subcommand(1, 1);

  Options o;
  auto* collect = app.add_subcommand("collect", "simulate excitation data into OUT/dataset");
  auto* fit = app.add_subcommand("fit", "fit predictors from OUT/dataset into OUT/predictors");
  auto* run = app.add_subcommand("run", "closed-loop scenarios into OUT/results");
  auto* all = app.add_subcommand("all", "collect, fit and run");
  for (auto* c : {collect, fit, run, all}) add_common(c, o);
  fit->add_option("--dataset", o.dataset, "dataset directory (default OUT/dataset)");
  run->add_option("--predictors", o.predictors, "predictor directory (default OUT/predictors)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : usage;
  }

  ConfigHandle cfg;
  kdpc_status s = o.config.empty() ? kdpc_config_default(&cfg.p)
                                   : kdpc_config_load(o.config.c_str(), &cfg.p);
  if (s != KDPC_OK) return report(s);
  if (o.seed) kdpc_config_set_seed(cfg.p, *o.seed);
  if (!o.out.empty()) kdpc_config_set_output(cfg.p, o.out.c_str());

  const std::filesystem::path root = kdpc_config_output(cfg.p);
  const std::string dataset = o.dataset.empty() ? (root / "dataset").string() : o.dataset;
  const std::string predictors =
      o.predictors.empty() ? (root / "predictors").string() : o.predictors;
  const int par = o.parallel ? 1 : 0;

  if (*collect) {
    s = kdpc_collect(cfg.p, (root / "dataset").c_str());
  } else if (*fit) {
    s = kdpc_fit(cfg.p, dataset.c_str(), (root / "predictors").c_str());
  } else if (*run) {
    s = kdpc_run(cfg.p, predictors.c_str(), (root / "results").c_str(), par);
  } else {
    s = kdpc_run_all(cfg.p, root.c_str(), par);
  }
  return report(s);
}
