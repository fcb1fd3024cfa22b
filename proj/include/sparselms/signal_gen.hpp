#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace sparselms {

enum class NormalizeMode { theoretical, empirical };

/// First-order autoregressive input model x_{k+1} = a*x_k + u_k, scaled to
/// unit variance before use.
struct Ar1Config {
  double a{0.8};
  double innovation_variance{1e-3};
  NormalizeMode normalize{NormalizeMode::theoretical};

  friend bool operator==(const Ar1Config&, const Ar1Config&) = default;
};

struct NoiseConfig {
  double variance{1e-2};

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

struct SparseSystemSpec {
  int n_taps{16};
  int n_nonzero{1};
};

/// Declarative phase of the time-varying plant: how long, how sparse, and an
/// optional per-phase penalty step for the p-norm algorithms.
struct PhaseSpec {
  long span{};
  int n_nonzero{};
  std::optional<double> rho_p_override{};

  friend bool operator==(const PhaseSpec&, const PhaseSpec&) = default;
};

/// A concrete realization of the plant: one random sparse system per phase.
struct PhaseSchedule {
  struct Phase {
    Eigen::VectorXd system;
    long span{};
    std::optional<double> rho_p_override{};
  };
  std::vector<Phase> phases;

  long total_length() const;
  Eigen::Index n_taps() const;
};

enum class StreamPurpose : std::uint32_t { input = 0, noise = 1, system = 2 };

/// Identifies one reproducible random stream. Identical fields give an
/// identical sample sequence regardless of when or where it is drawn.
struct RngStream {
  std::uint64_t seed{};
  std::uint32_t trial{};
  StreamPurpose purpose{StreamPurpose::input};
  std::uint32_t phase{};
};

std::mt19937_64 make_engine(const RngStream& stream);

/// Uniform double in [0,1) from the raw engine output.
double uniform_unit(std::mt19937_64& eng);

/// Unbiased uniform integer in [0,n) via masked rejection.
std::uint64_t uniform_below(std::mt19937_64& eng, std::uint64_t n);

/// Standard-normal sampler (Marsaglia polar method). Implemented here rather
/// than with std::normal_distribution so that sequences do not depend on the
/// standard library implementation.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::mt19937_64 eng) : eng_(std::move(eng)) {}
  explicit GaussianSampler(const RngStream& stream) : eng_(make_engine(stream)) {}

  double next();

 private:
  std::mt19937_64 eng_;
  bool have_spare_{false};
  double spare_{0};
};

/// Stationary standard deviation sqrt(innovation_variance / (1 - a^2)).
double ar1_stationary_std(const Ar1Config& cfg);

/// Unit-variance AR(1) samples. The initial state is drawn from the
/// stationary distribution; theoretical mode divides by the closed-form
/// stationary deviation, empirical mode by the realization's sample deviation.
Eigen::VectorXd gen_ar1_input(const Ar1Config& cfg, Eigen::Index length, const RngStream& stream);

/// I.i.d. zero-mean Gaussian samples of the configured variance.
Eigen::VectorXd gen_noise(const NoiseConfig& cfg, Eigen::Index length, const RngStream& stream);

/// Sparse system with exactly n_nonzero taps in {-1,+1} at positions chosen
/// uniformly without replacement; all other taps exactly zero.
Eigen::VectorXd gen_sparse_system(const SparseSystemSpec& spec, const RngStream& stream);

/// Schedule with one freshly drawn sparse system per phase. The stream's
/// purpose must be StreamPurpose::system; its phase field is set per phase.
PhaseSchedule build_schedule(const std::vector<PhaseSpec>& specs, int n_taps,
                             const RngStream& base);

/// Three 8000-iteration phases over 16 taps with 1, 4, 8 nonzero taps and
/// per-phase penalty steps 0.0005, 0.0002, 0.0001.
PhaseSchedule build_paper_schedule(const RngStream& base);

std::vector<PhaseSpec> paper_phase_specs();

/// Noisy plant output: system . x + noise_sample.
double synthesize_desired(const Eigen::VectorXd& system, const Eigen::VectorXd& x,
                          double noise_sample);

/// Tapped-delay-line regressor x = [s_k, s_{k-1}, ..., s_{k-N+1}], zero-padded
/// for lags before the first sample. N is taken from x.size().
void fill_regressor(const Eigen::VectorXd& samples, Eigen::Index k,
                    Eigen::Ref<Eigen::VectorXd> x);

}  // namespace sparselms
