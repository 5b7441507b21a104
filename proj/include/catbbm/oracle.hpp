#pragma once

#include <span>

namespace catbbm::oracle {

/// Start point, time, threshold and branching rate for the one-time moments.
struct MomentQuery {
  double x0 = 0.0;
  double t = 1.0;
  double x = 0.0;
  double beta = 1.0;

  /// Throws std::invalid_argument unless t >= 0, x >= 0, beta > 0.
  void validate() const;
};

/// Two observation times s < t with thresholds x < y.
struct TwoTimeQuery {
  double x0 = 0.0;
  double s = 1.0;
  double t = 2.0;
  double x = 0.0;
  double y = 1.0;
  double beta = 1.0;

  /// Throws std::invalid_argument unless 0 < s < t, 0 <= x < y, beta > 0.
  void validate() const;
};

/*
 * E^{x0} |N_t^x|, the mean number of particles at or above x at time t:
 *
 *   e^{-b|x0| - b x + b^2 t/2} Phi((b t - |x0| - x) / sqrt t)
 *     + [Phi((x + x0)/sqrt t) - Phi((x - x0)/sqrt t)] 1{x0 >= 0}
 *
 * At t == 0 this is the indicator 1{x0 >= x}.
 */
double expected_count_above(const MomentQuery& q);

/// Upper bound e^{-b|x0| - b x + b^2 t/2} + Phi(-(x - x0)/sqrt t).
double expected_count_upper(const MomentQuery& q);

struct OriginCount {
  double value;  // e^{-b x + b^2 t/2} Phi((b t - x)/sqrt t)
  double bound;  // e^{-b x + b^2 t/2}
};
/// Start at the catalyst. Throws for t <= 0 or x < 0.
OriginCount expected_count_origin(double t, double x, double beta);

struct PopulationMoment {
  double value;        // E^{x0} |N_t|
  double bound;        // 1 + 2 e^{-b|x0| + b^2 t/2}
  double origin_form;  // 2 e^{b^2 t/2} Phi(b sqrt t), the x0 = 0 value
};
/// Mean population. Throws for t <= 0.
PopulationMoment expected_population(double x0, double t, double beta);

/// 4 e^{-b|x0|}, bounding the spine integral of e^{-b^2 tau} d(e^{b L_tau}).
double local_time_integral_bound(double x0, double beta);

/// Bound on E^{x0}[|N_t^x|^2].
double second_moment_bound(const MomentQuery& q);

/// Bound on E^{x0}[|N_t^x| |N_t|].
double cross_moment_bound(const MomentQuery& q);

struct TwoTimeBound {
  double total;
  double leading;
  double e1, e2, e3, e4;
};
/// Bound on E^{x0}[|N_s^x| |N_t^y|] with its error terms.
TwoTimeBound two_time_bound(const TwoTimeQuery& q);

/// Plug-in E[exp(-e^{-b x} M)] over the given samples of M.
double w_limit_cdf(double x, double beta, std::span<const double> m_samples);

struct Envelopes {
  double center;  // b t / 2
  double upper;   // center + log(t) / b
  double lower;   // center - log(log(t)) / b
};
/// Requires t > e so that log log t > 0.
Envelopes fluctuation_envelopes(double t, double beta);

}  // namespace catbbm::oracle
