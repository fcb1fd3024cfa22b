#include "sparselms/filter_core.hpp"
#include "sparselms/signal_gen.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <random>

using namespace sparselms;

namespace {

bool bits_equal(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

Eigen::VectorXd random_vector(std::mt19937_64& eng, int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * uniform_unit(eng);
  return v;
}

template <typename E, typename F>
std::string message_of(F&& f) {
  try {
    f();
  } catch (const E& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("sgn returns the sign with sgn(0) = 0") {
  CHECK(sgn(3.5) == 1.0);
  CHECK(sgn(-0.25) == -1.0);
  CHECK(sgn(0.0) == 0.0);
  CHECK(sgn(-0.0) == 0.0);

  Eigen::VectorXd w(4);
  w << -2.0, 0.0, 5.0, -0.0;
  const Eigen::VectorXd s = sgn(w);
  CHECK(s[0] == -1.0);
  CHECK(s[1] == 0.0);
  CHECK(s[2] == 1.0);
  CHECK(s[3] == 0.0);
}

TEST_CASE("predict is the inner product of weights and regressor") {
  Eigen::VectorXd w(3), x(3);
  w << 0.5, -1.0, 2.0;
  x << 2.0, 3.0, 1.0;
  CHECK(predict(w, x) == 0.0);

  Eigen::VectorXd short_x(2);
  short_x << 1.0, 1.0;
  CHECK_THROWS_AS(predict(w, short_x), dimension_error);
}

TEST_CASE("lp_norm matches the closed form") {
  Eigen::VectorXd w(2);
  w << 0.25, 0.25;
  CHECK(lp_norm(w, 0.5) == doctest::Approx(1.0).epsilon(1e-14));

  Eigen::VectorXd z = Eigen::VectorXd::Zero(5);
  CHECK(lp_norm(z, 0.5) == 0.0);

  Eigen::VectorXd one(1);
  one << -8.0;
  CHECK(lp_norm(one, 0.5) == doctest::Approx(8.0).epsilon(1e-14));
}

TEST_CASE("lp_norm rejects exponents outside (0,1)") {
  Eigen::VectorXd w(2);
  w << 1.0, 2.0;
  CHECK_THROWS_AS(lp_norm(w, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(lp_norm(w, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(lp_norm(w, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(lp_norm(w, -0.5), std::invalid_argument);
}

TEST_CASE("lp_norm is absolutely homogeneous") {
  std::mt19937_64 eng = make_engine({11, 0, StreamPurpose::input, 0});
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd w = random_vector(eng, 8, -3.0, 3.0);
    const double c = -4.0 + 8.0 * uniform_unit(eng);
    const double p = 0.1 + 0.8 * uniform_unit(eng);
    const double lhs = lp_norm((c * w).eval(), p);
    const double rhs = std::abs(c) * lp_norm(w, p);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("lp_penalty_gradient on a unit tap with epsilon 10") {
  Eigen::VectorXd w(2);
  w << 1.0, 0.0;
  const Eigen::VectorXd g = lp_penalty_gradient(w, 0.5, 10.0);
  CHECK(g[0] == 1.0 / 11.0);
  CHECK(g[1] == 0.0);
}

TEST_CASE("lp_penalty_gradient is exactly zero on zero taps even with epsilon 0") {
  Eigen::VectorXd w(3);
  w << 0.5, 0.0, -0.5;
  const Eigen::VectorXd g = lp_penalty_gradient(w, 0.5, 0.0);
  CHECK(g[1] == 0.0);
  CHECK(g[0] > 0.0);
  CHECK(g[2] < 0.0);
  CHECK(g[0] == -g[2]);
}

TEST_CASE("lp_penalty_gradient rejects non-finite weights") {
  Eigen::VectorXd w(2);
  w << 1.0, std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(lp_penalty_gradient(w, 0.5, 1.0), divergence_error);
}

TEST_CASE("lp_penalty_gradient matches central finite differences of lp_norm") {
  std::mt19937_64 eng = make_engine({12, 0, StreamPurpose::input, 0});
  const double ps[] = {0.3, 0.5, 0.7};
  for (int rep = 0; rep < 10; ++rep) {
    const double p = ps[rep % 3];
    Eigen::VectorXd w(16);
    for (int i = 0; i < 16; ++i) {
      const double mag = 0.05 + 1.5 * uniform_unit(eng);
      w[i] = uniform_unit(eng) < 0.5 ? -mag : mag;
    }
    const Eigen::VectorXd g = lp_penalty_gradient(w, p, 0.0);
    for (int i = 0; i < 16; ++i) {
      const double h = 1e-5 * std::abs(w[i]);
      Eigen::VectorXd hi = w, lo = w;
      hi[i] += h;
      lo[i] -= h;
      const double fd = (lp_norm(hi, p) - lp_norm(lo, p)) / (2 * h);
      CHECK(g[i] == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("lms_update from zero weights") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd x(2);
  x << 1.0, 2.0;
  FilterParams<double> prm;
  prm.mu = 0.1;
  const auto res = lms_update(w, x, 1.0, prm);
  CHECK(res.prediction == 0.0);
  CHECK(res.error == 1.0);
  CHECK(res.weights[0] == 0.1);
  CHECK(res.weights[1] == 0.2);
}

TEST_CASE("llms_update decays weights by 1 - mu*gamma") {
  Eigen::VectorXd w(2), x(2);
  w << 1.0, 0.0;
  x << 0.0, 0.0;
  FilterParams<double> prm;
  prm.mu = 0.1;
  prm.gamma = 0.005;
  const auto res = llms_update(w, x, 0.0, prm);
  CHECK(res.weights[0] == doctest::Approx(0.9995).epsilon(1e-15));
  CHECK(res.weights[1] == 0.0);
}

TEST_CASE("lp_lms_update shrinks a lone unit tap by rho/11") {
  Eigen::VectorXd w(2), x(2);
  w << 1.0, 0.0;
  x << 0.0, 0.0;
  FilterParams<double> prm;
  prm.mu = 0.1;
  prm.rho_p = 0.0005;
  prm.epsilon_p = 10.0;
  prm.p = 0.5;
  const auto res = lp_lms_update(w, x, 0.0, prm);
  CHECK(res.weights[0] == doctest::Approx(1.0 - 0.0005 / 11.0).epsilon(1e-15));
  CHECK(res.weights[0] == doctest::Approx(0.99995454545454541).epsilon(1e-15));
  CHECK(res.weights[1] == 0.0);
}

TEST_CASE("lp_llms_update applies the leak sign") {
  Eigen::VectorXd w(2), x(2);
  w << 1.0, 0.0;
  x << 0.0, 0.0;
  FilterParams<double> prm;
  prm.mu = 0.1;
  prm.gamma = 0.005;
  prm.rho_p = 0.0005;
  prm.epsilon_p = 10.0;
  prm.p = 0.5;

  const auto plus = lp_llms_update(w, x, 0.0, prm);
  CHECK(plus.weights[0] == doctest::Approx(1.0005 - 0.0005 / 11.0).epsilon(1e-15));
  CHECK(plus.weights[0] == doctest::Approx(1.0004545454545455).epsilon(1e-15));

  prm.leak_sign = LeakSign::minus;
  const auto minus = lp_llms_update(w, x, 0.0, prm);
  CHECK(minus.weights[0] == doctest::Approx(0.9995 - 0.0005 / 11.0).epsilon(1e-15));
}

TEST_CASE("all variants reduce to lms_update when their extra terms vanish") {
  std::mt19937_64 eng = make_engine({13, 0, StreamPurpose::input, 0});
  for (int rep = 0; rep < 100; ++rep) {
    const Eigen::VectorXd w = random_vector(eng, 16, -2.0, 2.0);
    const Eigen::VectorXd x = random_vector(eng, 16, -2.0, 2.0);
    const double d = -3.0 + 6.0 * uniform_unit(eng);

    FilterParams<double> prm;
    prm.mu = 0.001 + 0.2 * uniform_unit(eng);
    prm.gamma = 0.0;
    prm.rho_p = 0.0;
    prm.epsilon_p = 10.0 * uniform_unit(eng);
    prm.p = 0.1 + 0.8 * uniform_unit(eng);

    const auto base = lms_update(w, x, d, prm);
    CHECK(bits_equal(llms_update(w, x, d, prm).weights, base.weights));
    CHECK(bits_equal(lp_lms_update(w, x, d, prm).weights, base.weights));
    CHECK(bits_equal(lp_llms_update(w, x, d, prm).weights, base.weights));
  }
}

TEST_CASE("update error equals desired minus prediction exactly") {
  std::mt19937_64 eng = make_engine({14, 0, StreamPurpose::input, 0});
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::VectorXd w = random_vector(eng, 8, -1.0, 1.0);
    const Eigen::VectorXd x = random_vector(eng, 8, -1.0, 1.0);
    const double d = -2.0 + 4.0 * uniform_unit(eng);
    FilterParams<double> prm;
    prm.mu = 0.05;
    const auto res = lms_update(w, x, d, prm);
    CHECK(res.error == d - predict(w, x));
    CHECK(res.prediction == predict(w, x));
  }
}

TEST_CASE("the penalty term only ever pulls taps toward zero") {
  std::mt19937_64 eng = make_engine({15, 0, StreamPurpose::input, 0});
  for (int rep = 0; rep < 200; ++rep) {
    Eigen::VectorXd w(8);
    for (int i = 0; i < 8; ++i) {
      if (uniform_unit(eng) < 0.3) {
        w[i] = 0.0;
      } else {
        const double mag = 0.01 + 2.0 * uniform_unit(eng);
        w[i] = uniform_unit(eng) < 0.5 ? -mag : mag;
      }
    }
    const Eigen::VectorXd x = random_vector(eng, 8, -1.0, 1.0);
    const double d = -1.0 + 2.0 * uniform_unit(eng);
    FilterParams<double> prm;
    prm.mu = 0.01 + 0.05 * uniform_unit(eng);
    prm.rho_p = 1e-4 + 1e-2 * uniform_unit(eng);
    prm.epsilon_p = 10.0 * uniform_unit(eng);
    prm.p = 0.1 + 0.8 * uniform_unit(eng);

    const Eigen::VectorXd delta =
        lp_lms_update(w, x, d, prm).weights - lms_update(w, x, d, prm).weights;
    for (int i = 0; i < 8; ++i) {
      if (w[i] > 0) CHECK(delta[i] < 0);
      if (w[i] < 0) CHECK(delta[i] > 0);
      if (w[i] == 0) CHECK(delta[i] == 0.0);
    }
  }
}

TEST_CASE("parameter validation") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(2);
  FilterParams<double> prm;

  SUBCASE("mu must be positive") {
    prm.mu = 0.0;
    CHECK_THROWS_AS(lms_update(w, x, 1.0, prm), std::invalid_argument);
    prm.mu = -0.1;
    CHECK_THROWS_AS(lms_update(w, x, 1.0, prm), std::invalid_argument);
  }
  SUBCASE("llms gamma must stay below 1") {
    prm.mu = 0.1;
    prm.gamma = 1.0;
    CHECK_THROWS_AS(llms_update(w, x, 1.0, prm), std::invalid_argument);
  }
  SUBCASE("active penalty needs p in (0,1)") {
    prm.mu = 0.1;
    prm.rho_p = 0.01;
    prm.p = 1.5;
    CHECK_THROWS_AS(lp_lms_update(w, x, 1.0, prm), std::invalid_argument);
  }
  SUBCASE("epsilon_p must be non-negative") {
    prm.mu = 0.1;
    prm.rho_p = 0.01;
    prm.epsilon_p = -1.0;
    CHECK_THROWS_AS(lp_lms_update(w, x, 1.0, prm), std::invalid_argument);
  }
  SUBCASE("gamma_p must be consistent with rho_p = mu * gamma_p") {
    prm.mu = 0.1;
    prm.rho_p = 0.0005;
    prm.gamma_p = 0.005;  // 0.1 * 0.005 = 0.0005, consistent
    CHECK_NOTHROW(lp_lms_update(w, x, 1.0, prm));
    prm.gamma_p = 0.5;
    const std::string msg = message_of<std::invalid_argument>(
        [&] { lp_lms_update(w, x, 1.0, prm); });
    CHECK(msg.find("gamma_p") != std::string::npos);
  }
  SUBCASE("mismatched lengths are rejected") {
    prm.mu = 0.1;
    Eigen::VectorXd x3 = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(lms_update(w, x3, 1.0, prm), dimension_error);
  }
}

TEST_CASE("a blown-up update reports divergence") {
  Eigen::VectorXd w(1), x(1);
  w << 1e308;
  x << 1e308;
  FilterParams<double> prm;
  prm.mu = 1.0;
  CHECK_THROWS_AS(lms_update(w, x, 0.0, prm), divergence_error);
}
