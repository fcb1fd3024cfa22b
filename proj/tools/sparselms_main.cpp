#include "sparselms/cli_io.hpp"

#include <CLI11.hpp>

#include <cstdint>

int main(int argc, char** argv) {
  CLI::App app{"Sparse system identification benchmark: LMS, leaky LMS and p-norm penalized variants"};
  app.require_subcommand(1);

  sparselms::RunOptions run_opt;
  std::uint64_t run_seed = 0;
  auto* run = app.add_subcommand("run", "Run the configured Monte-Carlo experiment");
  run->add_option("--config", run_opt.config_path,
                  "Config file (flat 'key = value' text); built-in defaults when omitted");
  auto* run_seed_opt = run->add_option("--seed", run_seed, "Override the config seed");
  run->add_option("--out", run_opt.out_dir, "Output directory (default: current directory)");
  run->add_option("--threads", run_opt.n_threads, "Worker threads; 0 = all cores");

  sparselms::PlotOptions plot_opt;
  auto* plot = app.add_subcommand("plot", "Generate a gnuplot script for an msd.csv");
  plot->add_option("--csv", plot_opt.csv_path, "Curve CSV written by 'run'")->required();
  plot->add_option("--out", plot_opt.out_path, "Script file to write")->required();

  sparselms::DemoOptions demo_opt;
  std::uint64_t demo_seed = 0;
  auto* demo = app.add_subcommand("demo", "Reduced 20-trial run; prints the per-phase ranking");
  auto* demo_seed_opt = demo->add_option("--seed", demo_seed, "Override the default seed");
  demo->add_option("--threads", demo_opt.n_threads, "Worker threads; 0 = all cores");

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    if (run_seed_opt->count() > 0) run_opt.seed = run_seed;
    return sparselms::cmd_run(run_opt);
  }
  if (plot->parsed()) return sparselms::cmd_plot(plot_opt);
  if (demo_seed_opt->count() > 0) demo_opt.seed = demo_seed;
  return sparselms::cmd_demo(demo_opt);
}
