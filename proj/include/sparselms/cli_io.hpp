#pragma once

#include "sparselms/experiment.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparselms {

/// Bad key, bad value, or violated constraint in a config file. The message
/// names the offending key and line.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed curve CSV. The message names the offending row.
struct csv_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Failed read or write of an input/output file.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 1;
inline constexpr int io = 2;
inline constexpr int divergence = 3;
}  // namespace exit_code

/// Parses the flat `key = value` config format. Missing keys keep the
/// benchmark defaults, so an empty document yields default_config().
/// Throws config_error naming key and line.
ExperimentConfig parse_config(const std::string& text);

/// Renders a config as parseable `key = value` text in canonical key order.
/// parse_config(render_config(cfg)) == cfg for every valid config.
std::string render_config(const ExperimentConfig& cfg);

/// Serializes an MSD curve: header `iteration,msd_<name>,...`, then one row
/// per iteration with round-trip decimal values.
std::string curve_csv(const MsdCurve& curve);

struct CsvData {
  std::vector<std::string> algorithm_names;
  Eigen::MatrixXd values;  // iterations x algorithms
};

/// Reads curve_csv output back. Throws csv_error naming the bad row.
CsvData parse_curve_csv(const std::string& text);

/// Aligned text table: phase, algorithm, steady-state MSD in dB and linear.
std::string steady_state_table(const SteadyStateReport& report);

/// Resolved config plus run diagnostics (step-size bound, divergence counts).
std::string run_meta_text(const ExperimentConfig& cfg, const ExperimentResult& result,
                          const LambdaMaxReport& lambda);

/// Gnuplot script plotting each msd_* column of the CSV in dB, with vertical
/// markers at the given phase boundaries.
std::string plot_script(const std::string& csv_path,
                        const std::vector<std::string>& algorithm_names,
                        const std::vector<long>& phase_marks);

struct RunOptions {
  std::string config_path;  // empty = built-in defaults
  std::optional<std::uint64_t> seed;
  std::string out_dir{"."};
  int n_threads{0};  // 0 = hardware concurrency
};

struct PlotOptions {
  std::string csv_path;
  std::string out_path;
};

struct DemoOptions {
  std::optional<std::uint64_t> seed;
  int n_threads{0};
};

/// Runs the configured experiment and writes msd.csv, steady_state.txt and
/// run_meta.txt into the output directory.
int cmd_run(const RunOptions& opt);

/// Writes a gnuplot script for an existing msd.csv.
int cmd_plot(const PlotOptions& opt);

/// Reduced 20-trial run of the benchmark; prints the per-phase ranking.
int cmd_demo(const DemoOptions& opt);

}  // namespace sparselms
