#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "catbbm/randkit.hpp"
#include "catbbm/stats.hpp"

using namespace catbbm;
namespace st = catbbm::stats;

namespace {

constexpr std::size_t kN = 100000;

double ks_limit() { return st::ks_critical_value(kN, 0.01); }

// Reflection-principle CDF of the hitting time of 0 from x: 2 Phi(-|x| / sqrt u).
double hitting_cdf(double x, double u) { return u <= 0 ? 0.0 : 2.0 * std_normal_cdf(-std::abs(x) / std::sqrt(u)); }

}  // namespace

TEST_CASE("normal CDF against high-precision values") {
  CHECK(std_normal_cdf(1.0) == doctest::Approx(0.84134474606854295).epsilon(1e-14));
  CHECK(std_normal_cdf(0.0) == 0.5);
  CHECK(std_normal_cdf(-8.0) == doctest::Approx(6.2209605742717841e-16).epsilon(1e-12));
  CHECK(log_std_normal_cdf(-10.0) == doctest::Approx(-53.231285150512471).epsilon(1e-13));
  CHECK(log_std_normal_cdf(-40.0) == doctest::Approx(-804.60844201375379).epsilon(1e-13));
  CHECK(exp_times_normal_cdf(400.0, -30.0) == doctest::Approx(2.5620258046947849e-24).epsilon(1e-11));
  CHECK(std::isfinite(log_std_normal_cdf(-1e4)));
}

TEST_CASE("normal CDF symmetry and monotonicity") {
  double prev = 0.0;
  for (double z = -12.0; z <= 12.0; z += 0.01) {
    CHECK(std_normal_cdf(z) + std_normal_cdf(-z) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(std_normal_cdf(z) >= prev);
    prev = std_normal_cdf(z);
  }
  CHECK(log_std_normal_cdf(-7.99) == doctest::Approx(log_std_normal_cdf(-8.01)).epsilon(1e-2));
}

TEST_CASE("tail ratio values and bracket") {
  CHECK(normal_tail_ratio(1.0) == doctest::Approx(0.65567954241879847).epsilon(1e-12));
  CHECK(normal_tail_ratio(4.0) == doctest::Approx(0.94660953165424268).epsilon(1e-12));
  CHECK(normal_tail_ratio(20.0) == doctest::Approx(0.99751851963673567).epsilon(1e-12));
  CHECK(normal_tail_ratio(4.0) > 0.9);
  CHECK(normal_tail_ratio(4.0) < 1.0);
  CHECK(std::abs(normal_tail_ratio(20.0) - 1.0) < 1e-2);
  for (double x = 0.05; x < 60.0; x *= 1.3) {
    const double r = normal_tail_ratio(x);
    CHECK(r <= 1.0);
    CHECK(r >= x * x / (1.0 + x * x) - 1e-14);
  }
  CHECK_THROWS_AS(normal_tail_ratio(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_tail_ratio(-1.0), std::invalid_argument);
}

TEST_CASE("hitting time follows the Levy law") {
  RngStream s(11, 0);
  for (double x : {1.0, -2.5}) {
    std::vector<double> tau(kN);
    for (auto& v : tau) v = sample_hitting_time(s, x);
    CHECK(st::ks_one_sample(tau, [x](double u) { return hitting_cdf(x, u); }) < ks_limit());
  }
  RngStream a(11, 1);
  std::size_t within = 0;
  for (std::size_t i = 0; i < kN; ++i) within += sample_hitting_time(a, 1.0) <= 1.0;
  const double p = 0.3173105078629141;
  CHECK(std::abs(within / double(kN) - p) < 4.0 * std::sqrt(p * (1 - p) / kN));
}

TEST_CASE("inverse local time is additive in ell") {
  RngStream s(12, 0);
  std::vector<double> sum(kN), whole(kN);
  for (std::size_t i = 0; i < kN; ++i) {
    sum[i] = sample_inverse_local_time(s, 0.3) + sample_inverse_local_time(s, 0.7);
    whole[i] = sample_inverse_local_time(s, 1.0);
  }
  // Two-sample KS critical value at alpha = 0.01 with equal sizes.
  CHECK(st::ks_two_sample(sum, whole) < 1.628 * std::sqrt(2.0 / kN));
  CHECK(st::ks_one_sample(whole, [](double u) { return hitting_cdf(1.0, u); }) < ks_limit());
}

TEST_CASE("bridge maximum matches its reflection law") {
  RngStream s(13, 0);
  for (auto [b, d] : {std::pair{0.0, 1.0}, std::pair{0.5, 1.0}, std::pair{-1.0, 2.0}}) {
    std::vector<double> m(kN);
    for (auto& v : m) v = sample_bridge_max(s, b, d);
    const double lo = std::max(0.0, b);
    for (double v : m) REQUIRE(v >= lo);
    auto cdf = [b, d, lo](double y) { return y <= lo ? 0.0 : 1.0 - std::exp(-2.0 * y * (y - b) / d); };
    CHECK(st::ks_one_sample(m, cdf) < ks_limit());
    if (b == 0.0) CHECK(st::quantile(m, 0.5) == doctest::Approx(0.58870501125773735).epsilon(0.01));
  }
}

TEST_CASE("bridge maximum agrees with a dense random-walk bridge") {
  // Discrete bridges miss part of the excursion above the grid; the
  // Broadie-Glasserman correction beta1 * sqrt(dt) removes most of it.
  constexpr int kSteps = 2000;
  constexpr std::size_t kPaths = 20000;
  constexpr double kCorrection = 0.5825971579390106;  // -zeta(1/2) / sqrt(2 pi)
  const double b = 0.5, d = 1.0, dt = d / kSteps;
  RngStream walk(14, 0), exact(14, 1);
  std::vector<double> dense(kPaths), sampled(kPaths);
  std::vector<double> w(kSteps + 1);
  for (std::size_t p = 0; p < kPaths; ++p) {
    w[0] = 0.0;
    for (int i = 1; i <= kSteps; ++i) w[i] = w[i - 1] + std::sqrt(dt) * walk.normal();
    double max = 0.0;
    for (int i = 0; i <= kSteps; ++i) max = std::max(max, w[i] + (b - w[kSteps]) * i / kSteps);
    dense[p] = max + kCorrection * std::sqrt(dt);
    sampled[p] = sample_bridge_max(exact, b, d);
  }
  CHECK(st::ks_two_sample(dense, sampled) < 1.628 * std::sqrt(2.0 / kPaths));
}

TEST_CASE("joint position and local time") {
  RngStream s(15, 0);
  const double t = 1.0;
  std::vector<double> pos(kN), loc(kN), sum(kN), weight(kN), nobranch(kN);
  for (std::size_t i = 0; i < kN; ++i) {
    const auto d = sample_joint_position_localtime(s, t);
    pos[i] = d.position;
    loc[i] = d.local_time;
    sum[i] = std::abs(d.position) + d.local_time;
    weight[i] = std::exp(d.local_time);
    nobranch[i] = std::exp(-d.local_time);
  }
  SUBCASE("position is N(0, t)") {
    CHECK(st::ks_one_sample(pos, [](double y) { return std_normal_cdf(y); }) < ks_limit());
  }
  SUBCASE("local time is folded normal") {
    CHECK(st::ks_one_sample(loc, [](double l) { return l <= 0 ? 0.0 : 2.0 * std_normal_cdf(l) - 1.0; }) <
          ks_limit());
  }
  SUBCASE("|B| + L has the chi law with three degrees of freedom") {
    auto chi3 = [](double r) {
      return r <= 0 ? 0.0 : 2.0 * std_normal_cdf(r) - 1.0 - std::sqrt(2.0 / std::numbers::pi) * r * std::exp(-0.5 * r * r);
    };
    CHECK(st::ks_one_sample(sum, chi3) < ks_limit());
  }
  SUBCASE("tilted and killed expectations") {
    const auto w = st::moments(weight);
    CHECK(std::abs(w.mean - 2.7742859576700096) < 4.0 * w.std_error);
    const auto k = st::moments(nobranch);
    CHECK(std::abs(k.mean - 0.52315658373024674) < 4.0 * k.std_error);
  }
}

TEST_CASE("zero-avoiding position") {
  RngStream s(16, 0);
  for (auto [x, d] : {std::pair{1.0, 1.0}, std::pair{-0.3, 2.0}, std::pair{4.0, 0.5}}) {
    std::vector<double> y(kN);
    for (auto& v : y) {
      v = sample_position_avoiding_zero(s, x, d);
      REQUIRE(v * x > 0.0);
    }
    // Killed-at-zero transition density phi_d(y - a) - phi_d(y + a), normalised.
    const double a = std::abs(x), rd = std::sqrt(d);
    const double mass = 1.0 - 2.0 * std_normal_cdf(-a / rd);
    auto cdf = [a, rd, mass](double v) {
      if (v <= 0) return 0.0;
      return (std_normal_cdf((v - a) / rd) - std_normal_cdf(-a / rd) - std_normal_cdf((v + a) / rd) +
              std_normal_cdf(a / rd)) /
             mass;
    };
    for (auto& v : y) v = std::abs(v);
    CHECK(st::ks_one_sample(y, cdf) < ks_limit());
  }
}

TEST_CASE("far from zero the avoiding law is plain Gaussian") {
  RngStream s(17, 0);
  std::vector<double> y(kN);
  for (auto& v : y) v = sample_position_avoiding_zero(s, 20.0, 1.0);
  CHECK(st::ks_one_sample(y, [](double v) { return std_normal_cdf(v - 20.0); }) < 0.01);
}

TEST_CASE("rejection cap surfaces as an error") {
  RngStream s(18, 0);
  CHECK_THROWS_AS(sample_position_avoiding_zero(s, 1e-9, 1e6), RejectionLimitExceeded);
}

TEST_CASE("samplers reject invalid arguments") {
  RngStream s(19, 0);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sample_hitting_time(s, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_hitting_time(s, nan), std::invalid_argument);
  CHECK_THROWS_AS(sample_inverse_local_time(s, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_inverse_local_time(s, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_bridge_max(s, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_joint_position_localtime(s, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_position_avoiding_zero(s, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(sample_position_avoiding_zero(s, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("samplers are pure functions of the stream") {
  RngStream a(20, 3), b(20, 3);
  for (int i = 0; i < 100; ++i) {
    const auto da = sample_joint_position_localtime(a, 0.7);
    const auto db = sample_joint_position_localtime(b, 0.7);
    REQUIRE(da.position == db.position);
    REQUIRE(da.local_time == db.local_time);
  }
}
