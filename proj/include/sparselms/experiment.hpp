#pragma once

#include "sparselms/filter_core.hpp"
#include "sparselms/signal_gen.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace sparselms {

enum class AlgorithmKind { lms, llms, lp_lms, lp_llms };

std::string to_string(AlgorithmKind kind);

struct AlgorithmSpec {
  std::string name;
  AlgorithmKind kind{AlgorithmKind::lms};
  FilterParams<double> params{};

  friend bool operator==(const AlgorithmSpec&, const AlgorithmSpec&) = default;
};

/// Full declarative description of a Monte-Carlo run.
struct ExperimentConfig {
  Ar1Config ar1{};
  NoiseConfig noise{};
  int n_taps{16};
  std::vector<PhaseSpec> schedule{};
  std::vector<AlgorithmSpec> algorithms{};
  int n_trials{200};
  std::uint64_t seed{1};
  int steady_state_window{1000};

  long total_iterations() const;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// The benchmark configuration: 16 taps, three 8000-iteration phases with
/// 1/4/8 nonzero taps, AR(1) a = 0.8 input at unit variance, noise variance
/// 1e-2, 200 trials, and all four algorithms at mu = 0.015.
ExperimentConfig default_config();

/// Throws std::invalid_argument describing the first violated constraint.
void validate_config(const ExperimentConfig& cfg);

/// Squared-deviation traces of one trial. Columns follow cfg.algorithms.
struct TrialOutcome {
  Eigen::MatrixXd traces;  // iterations x algorithms, ||w_true - w_est||^2
  struct Divergence {
    bool diverged{false};
    long iteration{-1};
  };
  std::vector<Divergence> divergence;  // per algorithm
};

/// Per-iteration MSD averaged over the non-diverged trials.
struct MsdCurve {
  std::vector<std::string> algorithm_names;
  Eigen::MatrixXd values;        // iterations x algorithms; NaN column when invalid
  std::vector<int> trials_used;  // per algorithm
  std::vector<bool> valid;       // false when every trial diverged
  int n_trials{0};
};

/// Mean MSD over the trailing window of each phase.
struct SteadyStateReport {
  std::vector<std::string> algorithm_names;
  Eigen::MatrixXd linear;  // phases x algorithms
  Eigen::MatrixXd db;      // 10*log10(linear)
  int window{0};
};

struct ExperimentResult {
  MsdCurve curve;
  SteadyStateReport steady_state;
  std::vector<std::vector<int>> diverged_trials;  // per algorithm, trial indices
};

struct LambdaMaxReport {
  double lambda_max{};
  double mu_bound{};  // 1 / lambda_max
};

/// Squared Euclidean deviation between the true and estimated weights.
double msd(const Eigen::VectorXd& true_w, const Eigen::VectorXd& est_w);

/// Runs every configured algorithm over the same input/noise/system streams,
/// starting from all-zero weights and carrying state across phase boundaries.
TrialOutcome run_trial(const ExperimentConfig& cfg, int trial_index);

/// Averages run_trial over ascending trial indices; diverged trials are
/// excluded from the average. n_threads <= 0 picks the hardware concurrency.
/// The reduction order is fixed, so results do not depend on n_threads.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int n_threads = 0);

/// Largest eigenvalue of the N x N Toeplitz covariance a^|i-j| of the
/// unit-variance AR(1) input, plus the implied step-size bound.
LambdaMaxReport estimate_lambda_max(const Ar1Config& ar1, int n_taps);

SteadyStateReport steady_state(const MsdCurve& curve, const std::vector<PhaseSpec>& schedule,
                               int window);
SteadyStateReport steady_state(const MsdCurve& curve, const PhaseSchedule& schedule, int window);

}  // namespace sparselms
