#include "sparselms/signal_gen.hpp"

#include "sparselms/filter_core.hpp"

#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sparselms {

long PhaseSchedule::total_length() const {
  long total = 0;
  for (const auto& ph : phases) total += ph.span;
  return total;
}

Eigen::Index PhaseSchedule::n_taps() const {
  return phases.empty() ? 0 : phases.front().system.size();
}

namespace {

// splitmix64 finalizer; used to spread (seed, trial, purpose, phase) into a
// single well-mixed engine seed.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

std::mt19937_64 make_engine(const RngStream& stream) {
  std::uint64_t h = stream.seed;
  h = mix64(h + kGolden * 1 + stream.trial);
  h = mix64(h + kGolden * 2 + static_cast<std::uint64_t>(stream.purpose));
  h = mix64(h + kGolden * 3 + stream.phase);
  return std::mt19937_64(h);
}

double uniform_unit(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

std::uint64_t uniform_below(std::mt19937_64& eng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below: bound must be positive");
  const std::uint64_t mask = std::bit_ceil(n) - 1;
  std::uint64_t r;
  do {
    r = eng() & mask;
  } while (r >= n);
  return r;
}

double GaussianSampler::next() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double v1, v2, s;
  do {
    v1 = 2.0 * uniform_unit(eng_) - 1.0;
    v2 = 2.0 * uniform_unit(eng_) - 1.0;
    s = v1 * v1 + v2 * v2;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v2 * f;
  have_spare_ = true;
  return v1 * f;
}

double ar1_stationary_std(const Ar1Config& cfg) {
  if (!(std::abs(cfg.a) < 1.0)) {
    throw std::invalid_argument("AR(1) coefficient must satisfy |a| < 1");
  }
  if (!(cfg.innovation_variance > 0.0)) {
    throw std::invalid_argument("AR(1) innovation variance must be positive");
  }
  return std::sqrt(cfg.innovation_variance / (1.0 - cfg.a * cfg.a));
}

Eigen::VectorXd gen_ar1_input(const Ar1Config& cfg, Eigen::Index length,
                              const RngStream& stream) {
  const double stationary_std = ar1_stationary_std(cfg);
  if (length < 1) throw std::invalid_argument("gen_ar1_input: length must be >= 1");
  if (cfg.normalize == NormalizeMode::empirical && length < 2) {
    throw std::invalid_argument("empirical normalization needs at least 2 samples");
  }

  GaussianSampler gauss{stream};
  const double innovation_std = std::sqrt(cfg.innovation_variance);

  Eigen::VectorXd x(length);
  x[0] = gauss.next() * stationary_std;  // stationary warm start
  for (Eigen::Index k = 1; k < length; ++k) {
    x[k] = cfg.a * x[k - 1] + gauss.next() * innovation_std;
  }

  if (cfg.normalize == NormalizeMode::theoretical) {
    x /= stationary_std;
  } else {
    const double mean = x.mean();
    const double ssq = (x.array() - mean).square().sum();
    const double sample_std = std::sqrt(ssq / static_cast<double>(length - 1));
    if (sample_std == 0.0) throw std::runtime_error("degenerate AR(1) realization");
    x /= sample_std;
  }
  return x;
}

Eigen::VectorXd gen_noise(const NoiseConfig& cfg, Eigen::Index length,
                          const RngStream& stream) {
  if (cfg.variance < 0.0 || !std::isfinite(cfg.variance)) {
    throw std::invalid_argument("noise variance must be finite and non-negative");
  }
  if (length < 1) throw std::invalid_argument("gen_noise: length must be >= 1");

  GaussianSampler gauss{stream};
  const double sigma = std::sqrt(cfg.variance);
  Eigen::VectorXd n(length);
  for (Eigen::Index k = 0; k < length; ++k) n[k] = sigma * gauss.next();
  return n;
}

Eigen::VectorXd gen_sparse_system(const SparseSystemSpec& spec, const RngStream& stream) {
  if (spec.n_taps < 1) throw std::invalid_argument("n_taps must be >= 1");
  if (spec.n_nonzero < 1 || spec.n_nonzero > spec.n_taps) {
    throw std::invalid_argument("n_nonzero must lie in [1, n_taps]");
  }

  std::mt19937_64 eng = make_engine(stream);

  // Partial Fisher-Yates: the first n_nonzero slots end up a uniform draw
  // without replacement.
  std::vector<int> idx(static_cast<std::size_t>(spec.n_taps));
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = 0; i < spec.n_nonzero; ++i) {
    const auto j = i + static_cast<int>(uniform_below(eng, static_cast<std::uint64_t>(spec.n_taps - i)));
    std::swap(idx[i], idx[j]);
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(spec.n_taps);
  for (int i = 0; i < spec.n_nonzero; ++i) {
    w[idx[i]] = uniform_below(eng, 2) == 0 ? 1.0 : -1.0;
  }
  return w;
}

PhaseSchedule build_schedule(const std::vector<PhaseSpec>& specs, int n_taps,
                             const RngStream& base) {
  if (specs.empty()) throw std::invalid_argument("schedule needs at least one phase");
  PhaseSchedule schedule;
  schedule.phases.reserve(specs.size());
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const PhaseSpec& spec = specs[k];
    if (spec.span < 1) throw std::invalid_argument("phase span must be >= 1");
    RngStream s = base;
    s.purpose = StreamPurpose::system;
    s.phase = static_cast<std::uint32_t>(k);
    schedule.phases.push_back({gen_sparse_system({n_taps, spec.n_nonzero}, s), spec.span,
                               spec.rho_p_override});
  }
  return schedule;
}

std::vector<PhaseSpec> paper_phase_specs() {
  return {{8000, 1, 0.0005}, {8000, 4, 0.0002}, {8000, 8, 0.0001}};
}

PhaseSchedule build_paper_schedule(const RngStream& base) {
  return build_schedule(paper_phase_specs(), 16, base);
}

double synthesize_desired(const Eigen::VectorXd& system, const Eigen::VectorXd& x,
                          double noise_sample) {
  if (system.size() != x.size()) {
    throw dimension_error("length mismatch: system has " + std::to_string(system.size()) +
                          " taps, regressor has " + std::to_string(x.size()));
  }
  return system.dot(x) + noise_sample;
}

void fill_regressor(const Eigen::VectorXd& samples, Eigen::Index k,
                    Eigen::Ref<Eigen::VectorXd> x) {
  const Eigen::Index n = x.size();
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index t = k - j;
    x[j] = t >= 0 ? samples[t] : 0.0;
  }
}

}  // namespace sparselms
