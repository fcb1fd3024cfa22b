#include "sparselms/experiment.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <thread>

namespace sparselms {

std::string to_string(AlgorithmKind kind) {
  switch (kind) {
    case AlgorithmKind::lms: return "lms";
    case AlgorithmKind::llms: return "llms";
    case AlgorithmKind::lp_lms: return "lp_lms";
    case AlgorithmKind::lp_llms: return "lp_llms";
  }
  return "unknown";
}

long ExperimentConfig::total_iterations() const {
  long total = 0;
  for (const auto& ph : schedule) total += ph.span;
  return total;
}

ExperimentConfig default_config() {
  ExperimentConfig cfg;
  cfg.ar1 = {0.8, 1e-3, NormalizeMode::theoretical};
  cfg.noise = {1e-2};
  cfg.n_taps = 16;
  cfg.schedule = paper_phase_specs();
  cfg.n_trials = 200;
  cfg.seed = 1;
  cfg.steady_state_window = 1000;

  const double mu = 0.015;
  const double gamma = 0.005;
  const double rho = 0.0005;  // first-phase value; later phases override
  const double epsilon = 10.0;
  const double p = 0.5;

  FilterParams<double> lms{};
  lms.mu = mu;

  FilterParams<double> llms = lms;
  llms.gamma = gamma;

  FilterParams<double> lp_lms = lms;
  lp_lms.rho_p = rho;
  lp_lms.epsilon_p = epsilon;
  lp_lms.p = p;

  FilterParams<double> lp_llms = lp_lms;
  lp_llms.gamma = gamma;
  lp_llms.leak_sign = LeakSign::plus;

  cfg.algorithms = {{"lms", AlgorithmKind::lms, lms},
                    {"llms", AlgorithmKind::llms, llms},
                    {"lp_lms", AlgorithmKind::lp_lms, lp_lms},
                    {"lp_llms", AlgorithmKind::lp_llms, lp_llms}};
  return cfg;
}

namespace {

void validate_params(const AlgorithmSpec& alg) {
  const FilterParams<double>& prm = alg.params;
  const std::string where = "algorithm '" + alg.name + "': ";
  if (!(prm.mu > 0)) throw std::invalid_argument(where + "mu must be positive");
  switch (alg.kind) {
    case AlgorithmKind::lms:
      break;
    case AlgorithmKind::llms:
      if (!(prm.gamma >= 0 && prm.gamma < 1)) {
        throw std::invalid_argument(where + "gamma must lie in [0,1)");
      }
      break;
    case AlgorithmKind::lp_llms:
      if (!(prm.gamma >= 0)) throw std::invalid_argument(where + "gamma must be non-negative");
      [[fallthrough]];
    case AlgorithmKind::lp_lms:
      if (prm.rho_p < 0) throw std::invalid_argument(where + "rho_p must be non-negative");
      if (prm.rho_p > 0) {
        if (!(prm.p > 0 && prm.p < 1)) throw std::invalid_argument(where + "p must lie in (0,1)");
        if (prm.epsilon_p < 0) throw std::invalid_argument(where + "epsilon_p must be non-negative");
      }
      if (prm.gamma_p) {
        const double expected = prm.mu * *prm.gamma_p;
        if (std::abs(prm.rho_p - expected) > 1e-9 * std::max(1.0, std::abs(expected))) {
          throw std::invalid_argument(where + "rho_p must equal mu * gamma_p");
        }
      }
      break;
  }
}

bool uses_penalty(AlgorithmKind kind) {
  return kind == AlgorithmKind::lp_lms || kind == AlgorithmKind::lp_llms;
}

UpdateResult<double> dispatch_update(AlgorithmKind kind, const Eigen::VectorXd& w,
                                     const Eigen::VectorXd& x, double desired,
                                     const FilterParams<double>& prm) {
  switch (kind) {
    case AlgorithmKind::lms: return lms_update(w, x, desired, prm);
    case AlgorithmKind::llms: return llms_update(w, x, desired, prm);
    case AlgorithmKind::lp_lms: return lp_lms_update(w, x, desired, prm);
    case AlgorithmKind::lp_llms: return lp_llms_update(w, x, desired, prm);
  }
  throw std::logic_error("unhandled algorithm kind");
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n_trials < 1) throw std::invalid_argument("n_trials must be >= 1");
  if (cfg.n_taps < 1) throw std::invalid_argument("taps must be >= 1");
  if (cfg.algorithms.empty()) throw std::invalid_argument("at least one algorithm is required");
  std::set<std::string> names;
  for (const auto& alg : cfg.algorithms) {
    if (alg.name.empty()) throw std::invalid_argument("algorithm names must be non-empty");
    if (!names.insert(alg.name).second) {
      throw std::invalid_argument("duplicate algorithm name '" + alg.name + "'");
    }
    validate_params(alg);
  }
  if (cfg.schedule.empty()) throw std::invalid_argument("schedule needs at least one phase");
  for (std::size_t k = 0; k < cfg.schedule.size(); ++k) {
    const PhaseSpec& ph = cfg.schedule[k];
    const std::string where = "phase " + std::to_string(k + 1) + ": ";
    if (ph.span < 1) throw std::invalid_argument(where + "span must be >= 1");
    if (ph.n_nonzero < 1 || ph.n_nonzero > cfg.n_taps) {
      throw std::invalid_argument(where + "sparsity must lie in [1, taps]");
    }
    if (ph.rho_p_override && *ph.rho_p_override < 0) {
      throw std::invalid_argument(where + "rho_p override must be non-negative");
    }
    if (cfg.steady_state_window > ph.span) {
      throw std::invalid_argument("steady_state_window (" +
                                  std::to_string(cfg.steady_state_window) +
                                  ") exceeds the span of phase " + std::to_string(k + 1));
    }
  }
  if (cfg.steady_state_window < 1) throw std::invalid_argument("steady_state_window must be >= 1");
  if (!(std::abs(cfg.ar1.a) < 1)) throw std::invalid_argument("ar1.a must satisfy |a| < 1");
  if (!(cfg.ar1.innovation_variance > 0)) {
    throw std::invalid_argument("ar1.innovation_variance must be positive");
  }
  if (cfg.noise.variance < 0 || !std::isfinite(cfg.noise.variance)) {
    throw std::invalid_argument("noise.variance must be finite and non-negative");
  }
}

double msd(const Eigen::VectorXd& true_w, const Eigen::VectorXd& est_w) {
  if (true_w.size() != est_w.size()) {
    throw dimension_error("length mismatch: " + std::to_string(true_w.size()) + " vs " +
                          std::to_string(est_w.size()));
  }
  return (true_w - est_w).squaredNorm();
}

TrialOutcome run_trial(const ExperimentConfig& cfg, int trial_index) {
  validate_config(cfg);
  if (trial_index < 0 || trial_index >= cfg.n_trials) {
    throw std::invalid_argument("trial_index out of range");
  }

  const long total = cfg.total_iterations();
  const auto n_alg = cfg.algorithms.size();
  const auto trial = static_cast<std::uint32_t>(trial_index);

  const Eigen::VectorXd input =
      gen_ar1_input(cfg.ar1, total, {cfg.seed, trial, StreamPurpose::input, 0});
  const Eigen::VectorXd noise =
      gen_noise(cfg.noise, total, {cfg.seed, trial, StreamPurpose::noise, 0});
  const PhaseSchedule schedule =
      build_schedule(cfg.schedule, cfg.n_taps, {cfg.seed, trial, StreamPurpose::system, 0});

  TrialOutcome outcome;
  outcome.traces.resize(total, static_cast<Eigen::Index>(n_alg));
  outcome.divergence.assign(n_alg, {});

  std::vector<Eigen::VectorXd> weights(n_alg, Eigen::VectorXd::Zero(cfg.n_taps));
  Eigen::VectorXd x(cfg.n_taps);

  long k = 0;
  for (std::size_t phase = 0; phase < schedule.phases.size(); ++phase) {
    const auto& ph = schedule.phases[phase];

    // Per-phase parameters: the penalty step of the p-norm algorithms follows
    // the phase override; gamma_p is dropped since it no longer matches.
    std::vector<FilterParams<double>> params;
    params.reserve(n_alg);
    for (const auto& alg : cfg.algorithms) {
      FilterParams<double> prm = alg.params;
      if (ph.rho_p_override && uses_penalty(alg.kind)) {
        prm.rho_p = *ph.rho_p_override;
        prm.gamma_p.reset();
      }
      params.push_back(prm);
    }

    for (long i = 0; i < ph.span; ++i, ++k) {
      fill_regressor(input, k, x);
      const double desired = synthesize_desired(ph.system, x, noise[k]);
      for (std::size_t a = 0; a < n_alg; ++a) {
        if (outcome.divergence[a].diverged) continue;
        try {
          UpdateResult<double> res =
              dispatch_update(cfg.algorithms[a].kind, weights[a], x, desired, params[a]);
          weights[a] = std::move(res.weights);
          outcome.traces(k, static_cast<Eigen::Index>(a)) = msd(ph.system, weights[a]);
        } catch (const divergence_error&) {
          outcome.divergence[a] = {true, k};
          outcome.traces.col(static_cast<Eigen::Index>(a))
              .segment(k, total - k)
              .setConstant(std::numeric_limits<double>::quiet_NaN());
        }
      }
    }
  }
  return outcome;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int n_threads) {
  validate_config(cfg);

  const long total = cfg.total_iterations();
  const auto n_alg = static_cast<Eigen::Index>(cfg.algorithms.size());

  int workers = n_threads > 0 ? n_threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, cfg.n_trials);

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(total, n_alg);
  std::vector<int> used(cfg.algorithms.size(), 0);
  std::vector<std::vector<int>> diverged(cfg.algorithms.size());

  // Trials are computed in parallel batches but always accumulated in
  // ascending trial order, so the reduction is independent of the thread
  // count and of completion order.
  std::vector<std::optional<TrialOutcome>> batch(workers);
  for (int start = 0; start < cfg.n_trials; start += workers) {
    const int m = std::min(workers, cfg.n_trials - start);
    if (m == 1) {
      batch[0] = run_trial(cfg, start);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(m);
      pool.reserve(m);
      for (int i = 0; i < m; ++i) {
        pool.emplace_back([&, i] {
          try {
            batch[i] = run_trial(cfg, start + i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    for (int i = 0; i < m; ++i) {
      const TrialOutcome& outcome = *batch[i];
      for (Eigen::Index a = 0; a < n_alg; ++a) {
        const auto ai = static_cast<std::size_t>(a);
        if (outcome.divergence[ai].diverged) {
          diverged[ai].push_back(start + i);
        } else {
          acc.col(a) += outcome.traces.col(a);
          ++used[ai];
        }
      }
      batch[i].reset();
    }
  }

  ExperimentResult result;
  MsdCurve& curve = result.curve;
  curve.values.resize(total, n_alg);
  curve.n_trials = cfg.n_trials;
  curve.trials_used = used;
  for (Eigen::Index a = 0; a < n_alg; ++a) {
    const auto ai = static_cast<std::size_t>(a);
    curve.algorithm_names.push_back(cfg.algorithms[ai].name);
    curve.valid.push_back(used[ai] > 0);
    if (used[ai] > 0) {
      curve.values.col(a) = acc.col(a) / static_cast<double>(used[ai]);
    } else {
      curve.values.col(a).setConstant(std::numeric_limits<double>::quiet_NaN());
    }
  }
  result.diverged_trials = std::move(diverged);
  result.steady_state = steady_state(curve, cfg.schedule, cfg.steady_state_window);
  return result;
}

LambdaMaxReport estimate_lambda_max(const Ar1Config& ar1, int n_taps) {
  if (!(std::abs(ar1.a) < 1)) throw std::invalid_argument("ar1.a must satisfy |a| < 1");
  if (n_taps < 1) throw std::invalid_argument("n_taps must be >= 1");

  // Covariance of the unit-variance AR(1) process: R(i,j) = a^|i-j|.
  Eigen::MatrixXd r(n_taps, n_taps);
  for (int i = 0; i < n_taps; ++i) {
    for (int j = 0; j < n_taps; ++j) {
      r(i, j) = std::pow(ar1.a, std::abs(i - j));
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(r, Eigen::EigenvaluesOnly);
  const double lambda_max = solver.eigenvalues().maxCoeff();
  return {lambda_max, 1.0 / lambda_max};
}

namespace {

SteadyStateReport steady_state_over_spans(const MsdCurve& curve, const std::vector<long>& spans,
                                          int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  long total = 0;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    if (window > spans[k]) {
      throw std::invalid_argument("window (" + std::to_string(window) +
                                  ") exceeds the span of phase " + std::to_string(k + 1));
    }
    total += spans[k];
  }
  if (total != curve.values.rows()) {
    throw std::invalid_argument("schedule length does not match the curve");
  }

  SteadyStateReport report;
  report.algorithm_names = curve.algorithm_names;
  report.window = window;
  const auto n_phases = static_cast<Eigen::Index>(spans.size());
  report.linear.resize(n_phases, curve.values.cols());
  report.db.resize(n_phases, curve.values.cols());

  long offset = 0;
  for (Eigen::Index ph = 0; ph < n_phases; ++ph) {
    const long span = spans[static_cast<std::size_t>(ph)];
    const long start = offset + span - window;
    for (Eigen::Index a = 0; a < curve.values.cols(); ++a) {
      const double mean = curve.values.col(a).segment(start, window).mean();
      report.linear(ph, a) = mean;
      report.db(ph, a) = 10.0 * std::log10(mean);
    }
    offset += span;
  }
  return report;
}

}  // namespace

SteadyStateReport steady_state(const MsdCurve& curve, const std::vector<PhaseSpec>& schedule,
                               int window) {
  std::vector<long> spans;
  spans.reserve(schedule.size());
  for (const auto& ph : schedule) spans.push_back(ph.span);
  return steady_state_over_spans(curve, spans, window);
}

SteadyStateReport steady_state(const MsdCurve& curve, const PhaseSchedule& schedule, int window) {
  std::vector<long> spans;
  spans.reserve(schedule.phases.size());
  for (const auto& ph : schedule.phases) spans.push_back(ph.span);
  return steady_state_over_spans(curve, spans, window);
}

}  // namespace sparselms
