#include <CLI11.hpp>

#include "pacoh/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"pacoh_lab: PAC-optimal hyper-posterior experiments"};
  app.require_subcommand(1);
  pacoh::CliOptions opts;
  std::uint64_t seed = 0;
  const char* names[] = {"bounds", "meta-train", "meta-test", "bo"};
  const char* help[] = {"bound curves for the linear environments", "meta-train a hyper-posterior",
                        "evaluate meta-learned priors on test tasks", "Bayesian optimization on the candidate pool"};
  for (int i = 0; i < 4; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", opts.config_path, "JSON config file")->required();
    sub->add_option("--seed", seed, "global seed (overrides the config)");
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option("--threads", opts.threads, "worker cap");
    sub->add_flag("--mll-only", opts.mll_only, "drop the hyper-prior term from the meta-training score");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pacoh::kExitConfig;
  }
  for (auto* sub : app.get_subcommands()) {
    opts.command = sub->get_name();
    if (sub->count("--seed")) opts.seed = seed;
  }
  pacoh::configure_logging();
  return pacoh::run_command(opts);
}
