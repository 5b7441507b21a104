#include "catbbm/oracle.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "catbbm/randkit.hpp"

namespace catbbm::oracle {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

void MomentQuery::validate() const {
  require(std::isfinite(x0), "MomentQuery: x0 must be finite");
  require(t >= 0.0 && std::isfinite(t), "MomentQuery: t must be non-negative");
  require(x >= 0.0 && std::isfinite(x), "MomentQuery: x must be non-negative");
  require(beta > 0.0 && std::isfinite(beta), "MomentQuery: beta must be positive");
}

void TwoTimeQuery::validate() const {
  require(std::isfinite(x0), "TwoTimeQuery: x0 must be finite");
  require(s > 0.0 && s < t && std::isfinite(t), "TwoTimeQuery: requires 0 < s < t");
  require(x >= 0.0 && x < y && std::isfinite(y), "TwoTimeQuery: requires 0 <= x < y");
  require(beta > 0.0 && std::isfinite(beta), "TwoTimeQuery: beta must be positive");
}

double expected_count_above(const MomentQuery& q) {
  q.validate();
  if (q.t == 0.0) return q.x0 >= q.x ? 1.0 : 0.0;
  const double b = q.beta;
  const double a = std::abs(q.x0);
  const double rt = std::sqrt(q.t);
  double value = exp_times_normal_cdf(-b * a - b * q.x + 0.5 * b * b * q.t, (b * q.t - a - q.x) / rt);
  if (q.x0 >= 0.0) value += std_normal_cdf((q.x + q.x0) / rt) - std_normal_cdf((q.x - q.x0) / rt);
  return value;
}

double expected_count_upper(const MomentQuery& q) {
  q.validate();
  const double b = q.beta;
  const double tail = q.t == 0.0 ? (q.x0 >= q.x ? 1.0 : 0.0) : std_normal_cdf(-(q.x - q.x0) / std::sqrt(q.t));
  return std::exp(-b * std::abs(q.x0) - b * q.x + 0.5 * b * b * q.t) + tail;
}

OriginCount expected_count_origin(double t, double x, double beta) {
  require(t > 0.0, "expected_count_origin: t must be positive");
  const MomentQuery q{0.0, t, x, beta};
  q.validate();
  const double log_bound = -beta * x + 0.5 * beta * beta * t;
  return {exp_times_normal_cdf(log_bound, (beta * t - x) / std::sqrt(t)), std::exp(log_bound)};
}

PopulationMoment expected_population(double x0, double t, double beta) {
  require(t > 0.0 && std::isfinite(t), "expected_population: t must be positive");
  require(beta > 0.0, "expected_population: beta must be positive");
  const double a = std::abs(x0);
  const double rt = std::sqrt(t);
  const double growth = -beta * a + 0.5 * beta * beta * t;
  // Phi(a/rt) - Phi(-a/rt) = erf(a / sqrt(2 t)), exact even for tiny a / rt.
  const double value = 2.0 * exp_times_normal_cdf(growth, beta * rt - a / rt) +
                       std::erf(a / (std::numbers::sqrt2 * rt));
  const double origin = 2.0 * exp_times_normal_cdf(0.5 * beta * beta * t, beta * rt);
  return {value, 1.0 + 2.0 * std::exp(growth), origin};
}

double local_time_integral_bound(double x0, double beta) { return 4.0 * std::exp(-beta * std::abs(x0)); }

double second_moment_bound(const MomentQuery& q) {
  const double b = q.beta;
  return expected_count_above(q) + 8.0 * std::exp(-b * std::abs(q.x0) - 2.0 * b * q.x + b * b * q.t);
}

double cross_moment_bound(const MomentQuery& q) {
  const double b = q.beta;
  return expected_count_above(q) + 16.0 * std::exp(-b * std::abs(q.x0) - b * q.x + b * b * q.t);
}

TwoTimeBound two_time_bound(const TwoTimeQuery& q) {
  q.validate();
  const double b = q.beta;
  const double a = std::abs(q.x0);
  const double gap = q.t - q.s;
  const double rgap = std::sqrt(gap);

  TwoTimeBound r{};
  r.leading = 24.0 * std::exp(-b * a - b * q.x - b * q.y + 0.5 * b * b * q.s + 0.5 * b * b * q.t);
  const double first_moment_s = expected_count_above({q.x0, q.s, q.x, b});
  r.e1 = (std::exp(-b * q.y + 0.5 * b * b * gap) + std_normal_cdf(-(q.y - q.x) / rgap)) * first_moment_s;
  r.e2 = 16.0 * exp_times_normal_cdf(-b * a - b * q.x + b * b * q.s, -q.y / rgap);
  r.e3 = exp_times_normal_cdf(-b * a - b * q.y + 0.5 * b * b * q.t, (q.y - q.x) / rgap - b * rgap);
  r.e4 = std_normal_cdf(-(q.x - q.x0) / std::sqrt(q.s));
  r.total = r.leading + r.e1 + r.e2 + r.e3 + r.e4;
  return r;
}

double w_limit_cdf(double x, double beta, std::span<const double> m_samples) {
  require(!m_samples.empty(), "w_limit_cdf: empty sample set");
  const double scale = std::exp(-beta * x);
  double sum = 0.0;
  for (double m : m_samples) {
    require(m > 0.0, "w_limit_cdf: samples must be positive");
    sum += std::exp(-scale * m);
  }
  return sum / static_cast<double>(m_samples.size());
}

Envelopes fluctuation_envelopes(double t, double beta) {
  require(t > std::numbers::e, "fluctuation_envelopes: requires t > e");
  require(beta > 0.0, "fluctuation_envelopes: beta must be positive");
  const double center = 0.5 * beta * t;
  return {center, center + std::log(t) / beta, center - std::log(std::log(t)) / beta};
}

}  // namespace catbbm::oracle
