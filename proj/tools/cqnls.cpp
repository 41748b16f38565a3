#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cqnls/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Cubic-quintic NLS laboratory"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "INI config file")->check(CLI::ExistingFile);
  auto* out_opt = app.add_option("--out", out, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "random seed");
  auto* threads_opt = app.add_option("--threads", threads, "FFT threads (falls back to CQNLS_THREADS)");
  app.add_option("--set", overrides, "override, e.g. --set soliton.omega=0.1");

  for (const auto& name : cqnls::experiment_names()) app.add_subcommand(name, "run the " + name + " experiment");

  CLI11_PARSE(app, argc, argv);

  cqnls::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = cqnls::parse_config_file(config_path);
    for (const auto& o : overrides) cqnls::apply_override(cfg, o);
    const std::string sub = app.get_subcommands().front()->get_name();
    if (!cfg.experiment.empty() && cfg.experiment != sub)
      throw cqnls::ConfigValidationError("config file is for '" + cfg.experiment + "' but the subcommand is '" + sub + "'");
    cfg.experiment = sub;
    if (*out_opt) cfg.output_dir = out;
    if (*seed_opt) cfg.seed = seed;
    if (*threads_opt) {
      cfg.threads = threads;
    } else if (cfg.threads == 0) {
      if (const char* env = std::getenv("CQNLS_THREADS")) cfg.threads = std::atoi(env);
    }
  } catch (const cqnls::Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << "\n";
    return cqnls::cli::Failure;
  }
  return cqnls::cli::dispatch(cfg);
}
