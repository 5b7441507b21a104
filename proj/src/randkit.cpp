#include "catbbm/randkit.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace catbbm {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Below this argument Phi is evaluated through the Mills ratio.
constexpr double kTailSwitch = -8.0;

// Mills ratio (1 - Phi(x)) / phi(x) for x >= 8 via Laplace's continued
// fraction 1 / (x + 1 / (x + 2 / (x + 3 / ...))). 80 terms is far past
// convergence at x >= 8.
double mills_ratio_cf(double x) {
  double tail = 0.0;
  for (int k = 80; k >= 1; --k) tail = k / (x + tail);
  return 1.0 / (x + tail);
}

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

double std_normal_pdf(double z) noexcept {
  return std::exp(-0.5 * z * z - kLogSqrt2Pi);
}

double std_normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z * kInvSqrt2); }

double log_std_normal_cdf(double z) noexcept {
  if (z >= kTailSwitch) return std::log(std_normal_cdf(z));
  const double x = -z;
  return -0.5 * x * x - kLogSqrt2Pi + std::log(mills_ratio_cf(x));
}

double exp_times_normal_cdf(double log_factor, double z) noexcept {
  if (z >= kTailSwitch) return std::exp(log_factor) * std_normal_cdf(z);
  return std::exp(log_factor + log_std_normal_cdf(z));
}

double normal_tail_ratio(double x) {
  require(x > 0.0, "normal_tail_ratio: x must be positive");
  if (x < -kTailSwitch) return std_normal_cdf(-x) * x / std_normal_pdf(x);
  return x * mills_ratio_cf(x);
}

double sample_hitting_time(RngStream& stream, double x) {
  require(x != 0.0 && std::isfinite(x), "sample_hitting_time: x must be finite and nonzero");
  const double z = stream.normal();
  return (x * x) / (z * z);
}

double sample_inverse_local_time(RngStream& stream, double ell) {
  require(ell > 0.0 && std::isfinite(ell), "sample_inverse_local_time: ell must be positive");
  const double z = stream.normal();
  return (ell * ell) / (z * z);
}

double sample_bridge_max(RngStream& stream, double endpoint, double duration) {
  require(duration > 0.0, "sample_bridge_max: duration must be positive");
  const double e = stream.exponential();
  return 0.5 * (endpoint + std::sqrt(endpoint * endpoint + 2.0 * duration * e));
}

JointPositionLocalTime sample_joint_position_localtime(RngStream& stream, double duration) {
  require(duration > 0.0, "sample_joint_position_localtime: duration must be positive");
  const double terminal = std::sqrt(duration) * stream.normal();
  const double max = sample_bridge_max(stream, terminal, duration);
  const double sign = stream.uniform() < 0.5 ? -1.0 : 1.0;
  return {sign * (max - terminal), max};
}

double sample_position_avoiding_zero(RngStream& stream, double x, double duration) {
  require(x != 0.0 && std::isfinite(x), "sample_position_avoiding_zero: x must be finite and nonzero");
  require(duration > 0.0, "sample_position_avoiding_zero: duration must be positive");
  const double sd = std::sqrt(duration);
  for (std::size_t attempt = 0; attempt < kRejectionCap; ++attempt) {
    const double y = x + sd * stream.normal();
    if ((y > 0.0) != (x > 0.0) || y == 0.0) continue;
    // -expm1(-a) = 1 - exp(-a), accurate when x y / duration is tiny.
    if (stream.uniform() < -std::expm1(-2.0 * x * y / duration)) return y;
  }
  throw RejectionLimitExceeded("sample_position_avoiding_zero: " + std::to_string(kRejectionCap) +
                               " attempts exhausted");
}

}  // namespace catbbm
