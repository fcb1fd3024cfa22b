#include "sparselms/experiment.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace sparselms;

namespace {

bool bits_equal(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(),
                     sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

/// Small but non-trivial configuration that runs in milliseconds.
ExperimentConfig small_config() {
  ExperimentConfig cfg = default_config();
  cfg.n_taps = 8;
  cfg.n_trials = 4;
  cfg.schedule = {{300, 1, 0.0005}, {300, 2, 0.0002}};
  cfg.steady_state_window = 100;
  return cfg;
}

}  // namespace

TEST_CASE("msd is the squared deviation between weight vectors") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, -1.0;
  b << 0.5, -0.5;
  CHECK(msd(a, b) == 0.5);
  CHECK(msd(a, a) == 0.0);

  Eigen::VectorXd c(3);
  c << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(msd(a, c), dimension_error);
}

TEST_CASE("default config matches the benchmark in every field") {
  const ExperimentConfig cfg = default_config();
  CHECK(cfg.n_taps == 16);
  CHECK(cfg.n_trials == 200);
  CHECK(cfg.steady_state_window == 1000);
  CHECK(cfg.ar1.a == 0.8);
  CHECK(cfg.ar1.innovation_variance == 1e-3);
  CHECK(cfg.ar1.normalize == NormalizeMode::theoretical);
  CHECK(cfg.noise.variance == 1e-2);
  CHECK(cfg.total_iterations() == 24000);

  REQUIRE(cfg.schedule.size() == 3);
  const int nz[] = {1, 4, 8};
  const double rho[] = {0.0005, 0.0002, 0.0001};
  for (int k = 0; k < 3; ++k) {
    CHECK(cfg.schedule[static_cast<std::size_t>(k)].span == 8000);
    CHECK(cfg.schedule[static_cast<std::size_t>(k)].n_nonzero == nz[k]);
    REQUIRE(cfg.schedule[static_cast<std::size_t>(k)].rho_p_override.has_value());
    CHECK(*cfg.schedule[static_cast<std::size_t>(k)].rho_p_override == rho[k]);
  }

  REQUIRE(cfg.algorithms.size() == 4);
  CHECK(cfg.algorithms[0].name == "lms");
  CHECK(cfg.algorithms[1].name == "llms");
  CHECK(cfg.algorithms[2].name == "lp_lms");
  CHECK(cfg.algorithms[3].name == "lp_llms");
  for (const auto& alg : cfg.algorithms) CHECK(alg.params.mu == 0.015);
  CHECK(cfg.algorithms[1].params.gamma == 0.005);
  CHECK(cfg.algorithms[3].params.gamma == 0.005);
  for (const int a : {2, 3}) {
    const auto& prm = cfg.algorithms[static_cast<std::size_t>(a)].params;
    CHECK(prm.rho_p == 0.0005);
    CHECK(prm.epsilon_p == 10.0);
    CHECK(prm.p == 0.5);
  }
  CHECK(cfg.algorithms[3].params.leak_sign == LeakSign::plus);

  CHECK_NOTHROW(validate_config(cfg));
}

TEST_CASE("validate_config rejects inconsistent configurations") {
  ExperimentConfig cfg = default_config();
  SUBCASE("no algorithms") {
    cfg.algorithms.clear();
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  }
  SUBCASE("duplicate algorithm names") {
    cfg.algorithms.push_back(cfg.algorithms[0]);
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  }
  SUBCASE("sparsity larger than taps") {
    cfg.schedule[0].n_nonzero = 17;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  }
  SUBCASE("window longer than a phase") {
    cfg.steady_state_window = 8001;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  }
  SUBCASE("no trials") {
    cfg.n_trials = 0;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  }
  SUBCASE("non-stationary input model") {
    cfg.ar1.a = 1.0;
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  }
  SUBCASE("empty schedule") {
    cfg.schedule.clear();
    CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  }
}

TEST_CASE("run_trial is deterministic and independent of n_trials") {
  const ExperimentConfig cfg = small_config();
  const TrialOutcome a = run_trial(cfg, 2);
  const TrialOutcome b = run_trial(cfg, 2);
  CHECK(bits_equal(a.traces, b.traces));

  ExperimentConfig more = cfg;
  more.n_trials = 40;
  const TrialOutcome c = run_trial(more, 2);
  CHECK(bits_equal(a.traces, c.traces));

  CHECK(a.traces.rows() == 600);
  CHECK(a.traces.cols() == 4);
  CHECK(a.traces.allFinite());
  CHECK((a.traces.array() >= 0.0).all());
  for (const auto& d : a.divergence) CHECK(!d.diverged);

  CHECK_THROWS_AS(run_trial(cfg, -1), std::invalid_argument);
  CHECK_THROWS_AS(run_trial(cfg, cfg.n_trials), std::invalid_argument);
}

TEST_CASE("run_trial starts at the initial deviation of the zero estimate") {
  const ExperimentConfig cfg = small_config();
  const TrialOutcome t = run_trial(cfg, 0);
  // phase 1 has a single +-1 tap, so ||w - 0||^2 = 1; the first update moves
  // the estimate only slightly at mu = 0.015
  CHECK(t.traces(0, 0) == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("learning curves decay toward steady state") {
  ExperimentConfig cfg = small_config();
  cfg.schedule = {{2000, 1, 0.0005}};
  cfg.n_trials = 10;
  cfg.steady_state_window = 200;
  const ExperimentResult result = run_experiment(cfg, 2);
  for (Eigen::Index a = 0; a < 4; ++a) {
    const double early = result.curve.values.col(a).head(100).mean();
    const double late = result.curve.values.col(a).tail(100).mean();
    CHECK(late < early / 10);
  }
}

TEST_CASE("run_experiment with one trial reproduces that trial") {
  ExperimentConfig cfg = small_config();
  cfg.n_trials = 1;
  const ExperimentResult result = run_experiment(cfg);
  const TrialOutcome t = run_trial(cfg, 0);
  CHECK(bits_equal(result.curve.values, t.traces));
  CHECK(result.curve.n_trials == 1);
  for (const int used : result.curve.trials_used) CHECK(used == 1);
  for (const bool v : result.curve.valid) CHECK(v);
}

TEST_CASE("run_experiment is bitwise identical for any thread count") {
  const ExperimentConfig cfg = small_config();
  const ExperimentResult serial = run_experiment(cfg, 1);
  const ExperimentResult threaded = run_experiment(cfg, 3);
  const ExperimentResult oversubscribed = run_experiment(cfg, 64);
  CHECK(bits_equal(serial.curve.values, threaded.curve.values));
  CHECK(bits_equal(serial.curve.values, oversubscribed.curve.values));
}

TEST_CASE("diverging algorithms are excluded from the average but do not stop others") {
  ExperimentConfig cfg = small_config();
  cfg.schedule = {{2000, 1, {}}};
  cfg.steady_state_window = 100;
  cfg.algorithms = {{"lms", AlgorithmKind::lms, {}}, {"hot", AlgorithmKind::lms, {}}};
  cfg.algorithms[0].params.mu = 0.015;
  cfg.algorithms[1].params.mu = 50.0;  // far beyond 1/lambda_max, guaranteed blowup

  const ExperimentResult result = run_experiment(cfg, 2);
  CHECK(result.curve.valid[0]);
  CHECK(!result.curve.valid[1]);
  CHECK(result.curve.trials_used[0] == cfg.n_trials);
  CHECK(result.curve.trials_used[1] == 0);
  CHECK(result.diverged_trials[0].empty());
  CHECK(result.diverged_trials[1].size() == static_cast<std::size_t>(cfg.n_trials));
  CHECK(result.curve.values.col(0).allFinite());
  CHECK(std::isnan(result.curve.values(cfg.total_iterations() - 1, 1)));
  CHECK(std::isnan(result.steady_state.linear(0, 1)));
  CHECK(result.steady_state.linear(0, 0) > 0.0);
}

TEST_CASE("lambda_max of the benchmark input covariance") {
  const LambdaMaxReport report = estimate_lambda_max({0.8, 1e-3, NormalizeMode::theoretical}, 16);
  CHECK(report.lambda_max > 5.0);
  CHECK(report.lambda_max < 9.0);  // supremum (1+a)/(1-a) = 9
  CHECK(report.mu_bound == 1.0 / report.lambda_max);
  CHECK(report.mu_bound > 0.015);

  // white input: covariance is the identity for any tap count
  const LambdaMaxReport white = estimate_lambda_max({0.0, 1.0, NormalizeMode::theoretical}, 4);
  CHECK(white.lambda_max == doctest::Approx(1.0).epsilon(1e-12));

  const LambdaMaxReport single = estimate_lambda_max({0.8, 1e-3, NormalizeMode::theoretical}, 1);
  CHECK(single.lambda_max == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("steady_state averages the trailing window of each phase") {
  MsdCurve curve;
  curve.algorithm_names = {"a"};
  curve.values.resize(4, 1);
  curve.values << 1.0, 2.0, 8.0, 9.0;
  curve.trials_used = {1};
  curve.valid = {true};
  curve.n_trials = 1;

  const std::vector<PhaseSpec> one_phase = {{4, 1, {}}};
  const SteadyStateReport r = steady_state(curve, one_phase, 2);
  CHECK(r.linear(0, 0) == 8.5);
  CHECK(r.db(0, 0) == doctest::Approx(10.0 * std::log10(8.5)).epsilon(1e-14));
  CHECK(r.window == 2);

  const std::vector<PhaseSpec> two_phases = {{2, 1, {}}, {2, 1, {}}};
  const SteadyStateReport r2 = steady_state(curve, two_phases, 1);
  CHECK(r2.linear(0, 0) == 2.0);
  CHECK(r2.linear(1, 0) == 9.0);

  CHECK_THROWS_AS(steady_state(curve, one_phase, 5), std::invalid_argument);
  CHECK_THROWS_AS(steady_state(curve, one_phase, 0), std::invalid_argument);
  const std::vector<PhaseSpec> wrong_length = {{3, 1, {}}};
  CHECK_THROWS_AS(steady_state(curve, wrong_length, 1), std::invalid_argument);
}

TEST_CASE("per-phase penalty overrides only touch the p-norm algorithms") {
  // with identical parameters, an override of rho_p changes lp_lms but not lms
  ExperimentConfig base = small_config();
  base.schedule = {{100, 1, {}}};
  base.steady_state_window = 10;
  ExperimentConfig overridden = base;
  overridden.schedule = {{100, 1, 0.01}};

  const TrialOutcome a = run_trial(base, 0);
  const TrialOutcome b = run_trial(overridden, 0);
  CHECK(bits_equal(a.traces.col(0), b.traces.col(0)));      // lms untouched
  CHECK(bits_equal(a.traces.col(1), b.traces.col(1)));      // llms untouched
  CHECK(!bits_equal(a.traces.col(2), b.traces.col(2)));     // lp_lms follows the override
  CHECK(!bits_equal(a.traces.col(3), b.traces.col(3)));     // lp_llms follows the override
}
