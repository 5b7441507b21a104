#pragma once

#include <cstddef>
#include <stdexcept>

#include "catbbm/rng.hpp"

namespace catbbm {

/// Thrown when a rejection sampler exhausts its attempt budget.
class RejectionLimitExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kRejectionCap = 1'000'000;

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

double std_normal_pdf(double z) noexcept;

/// Phi(z), the standard normal CDF, via erfc (absolute error well below 1e-12).
double std_normal_cdf(double z) noexcept;

/// log Phi(z), accurate deep into the lower tail where Phi underflows.
double log_std_normal_cdf(double z) noexcept;

/// exp(log_factor) * Phi(z) without overflow of the exponential or
/// underflow of the tail when one compensates the other.
double exp_times_normal_cdf(double log_factor, double z) noexcept;

/*
 * (1 - Phi(x)) / (phi(x) / x) for x > 0.
 *
 * Tends to 1 as x grows; bracketed by x^2 / (1 + x^2) from below and 1 from
 * above. Throws std::invalid_argument for x <= 0.
 */
double normal_tail_ratio(double x);

// ---------------------------------------------------------------------------
// Exact samplers. All are pure functions of the stream they are given.
// ---------------------------------------------------------------------------

/// Terminal position and local time at 0 of a Brownian path started at 0.
struct JointPositionLocalTime {
  double position = 0.0;
  double local_time = 0.0;
};

/// First time a standard Brownian motion started at x hits 0: (x / Z)^2.
double sample_hitting_time(RngStream& stream, double x);

/// Time for the local time at 0 of a Brownian motion from 0 to reach ell.
double sample_inverse_local_time(RngStream& stream, double ell);

/// Maximum of a Brownian bridge from 0 to `endpoint` over [0, duration].
double sample_bridge_max(RngStream& stream, double endpoint, double duration);

/// (B_t, L_t) for Brownian motion from 0, built from Levy's identity
/// (L, |B|) = (M, M - W) with M the running maximum of W.
JointPositionLocalTime sample_joint_position_localtime(RngStream& stream, double duration);

/// Position at `duration` of a Brownian motion from x conditioned not to hit 0.
/// Rejection from N(x, duration) with acceptance 1 - exp(-2 x y / duration);
/// throws RejectionLimitExceeded after kRejectionCap attempts.
double sample_position_avoiding_zero(RngStream& stream, double x, double duration);

}  // namespace catbbm
