#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "catbbm/engine.hpp"
#include "catbbm/oracle.hpp"
#include "catbbm/stats.hpp"

namespace catbbm::lab {

// Acceptance thresholds shared by every verification routine.
inline constexpr double kZMax = 4.0;                // two-sided equality tests
inline constexpr double kBoundSlack = 3.0;          // one-sided bound tests, in SE
inline constexpr double kDeepTailOracle = 1e-6;     // below this, compare absolutely
inline constexpr double kDeepTailAbsTol = 1e-3;
inline constexpr double kMaxFailureFraction = 0.01; // replicate failures tolerated
inline constexpr double kMinProxyExponent = 4.0;    // beta^2 t_proxy / 2 for the M_inf proxy
inline constexpr double kMedianWindow = 2.0;        // |median(R_t - beta t / 2)| bound
inline constexpr std::size_t kBootstrapResamples = 200;
inline constexpr double kBootstrapBand = 2.0;       // KS monotonicity slack, in bootstrap SDs

/// Worker threads: $CATBBM_THREADS if set, else hardware concurrency.
unsigned default_thread_count();

/// A query asked for a time or threshold the ensemble does not carry.
class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ReplicateFailureOverflow : public std::runtime_error {
 public:
  ReplicateFailureOverflow(std::size_t failures, std::size_t n);
  std::size_t failures() const noexcept { return failures_; }
  std::size_t replicates() const noexcept { return n_; }

 private:
  std::size_t failures_, n_;
};

struct HorizonRecord {
  double time = 0.0;
  std::uint64_t population = 0;
  double r_t = 0.0;
  double m_t = 0.0;
  std::vector<std::uint64_t> counts;  // parallel to Ensemble::thresholds
};

struct ReplicateRecord {
  std::uint64_t replicate = 0;
  bool failed = false;
  double failure_time = 0.0;
  std::string failure;
  std::vector<HorizonRecord> horizons;
};

struct Ensemble {
  SimConfig config;
  std::vector<double> thresholds;
  std::vector<ReplicateRecord> replicates;

  std::size_t failures() const;
  std::size_t successes() const { return replicates.size() - failures(); }
  /// Index of horizon t / threshold x; throws GridMismatch if absent.
  std::size_t horizon_index(double t) const;
  std::size_t threshold_index(double x) const;

  /// One value per successful replicate, in replicate order.
  template <typename F>
  std::vector<double> series(F&& f) const {
    std::vector<double> out;
    out.reserve(replicates.size());
    for (const auto& r : replicates)
      if (!r.failed) out.push_back(static_cast<double>(f(r)));
    return out;
  }
};

/// n replicates, each a pure function of (config.seed, replicate index).
/// Throws ReplicateFailureOverflow if more than 1% hit the population cap.
Ensemble run_replicates(const SimConfig& config, std::size_t n, std::vector<double> thresholds,
                        unsigned threads = 0);

enum class TestKind { equality, upper_bound, absolute, qualitative };
enum class Verdict { pass, fail, warn };
std::string to_string(TestKind kind);
std::string to_string(Verdict verdict);

struct VerificationReport {
  std::string name;
  TestKind kind = TestKind::equality;
  double oracle_value = 0.0;
  double mc_estimate = 0.0;
  double std_error = 0.0;
  double z_score = 0.0;  // (mc_estimate - oracle_value) / std_error
  std::size_t n = 0;
  Verdict verdict = Verdict::fail;
  nlohmann::json metadata = nlohmann::json::object();

  bool hard_failure() const { return verdict == Verdict::fail; }
};

/// |z| <= kZMax, or the absolute deep-tail rule when oracle < kDeepTailOracle.
VerificationReport equality_test(std::string name, double oracle_value, const stats::Moments& mc);
/// mc - kBoundSlack * se <= bound.
VerificationReport bound_test(std::string name, double bound, const stats::Moments& mc);

std::vector<VerificationReport> verify_first_moment(const Ensemble& ensemble,
                                                    std::span<const oracle::MomentQuery> queries);

/// Mean population against the closed form at every horizon of the ensemble.
std::vector<VerificationReport> verify_population(const Ensemble& ensemble);

/*
 * Both sides of the many-to-one identity for f = 1{position >= x}:
 * the particle-system mean of |N_t^x| and the weighted single-path mean
 * of e^{beta L} 1{position >= x}, each compared with the closed form and
 * with each other. t is the last horizon of `config`; requires x0 == 0.
 */
std::vector<VerificationReport> verify_many_to_one(const SimConfig& config, double x, std::size_t n,
                                                   unsigned threads = 0);

std::vector<VerificationReport> verify_martingale(const Ensemble& ensemble);

std::vector<VerificationReport> verify_moment_bounds(const Ensemble& ensemble,
                                                     std::span<const oracle::MomentQuery> queries,
                                                     std::span<const oracle::TwoTimeQuery> two_time);

/// n samples of M_{t_proxy} standing in for M_inf. Requires
/// beta^2 t_proxy / 2 >= kMinProxyExponent.
std::vector<double> estimate_m_infinity(const SimConfig& config, double t_proxy, std::size_t n,
                                        unsigned threads = 0);

/// Two-sample KS distance between M_t and M_{t+1} for each t in t_proxies.
std::vector<double> m_proxy_stability(const SimConfig& config, std::span<const double> t_proxies, std::size_t n,
                                      unsigned threads = 0);

struct LimitLawHorizon {
  double time;
  double ks;          // sup |F_emp(R_t - beta t/2) - reference|
  double ks_boot_sd;  // bootstrap standard deviation of ks
  double median;      // of R_t - beta t / 2
};

struct LimitLawReport {
  std::vector<LimitLawHorizon> horizons;
  std::size_t n = 0;
  std::size_t n_reference = 0;
  bool ks_nonincreasing = false;
  bool median_bounded = false;
  std::vector<VerificationReport> checks;  // qualitative; warn rather than fail
};

LimitLawReport limit_law_study(const Ensemble& ensemble, std::span<const double> m_samples);
LimitLawReport limit_law_study(const SimConfig& config, std::span<const double> horizons, std::size_t n,
                               std::span<const double> m_samples, unsigned threads = 0);

struct FluctuationHorizon {
  double time;
  double q001, q01, q50, q99, q999;  // quantiles of R_t - beta t / 2
  std::optional<oracle::Envelopes> envelopes;  // only for t > e
};

struct FluctuationReport {
  std::vector<FluctuationHorizon> horizons;
  std::size_t n = 0;
  double spearman_upper_logt = 0.0;
  bool upper_increasing = false;
  bool lower_moves_less = false;
  bool median_bounded = false;
  std::vector<VerificationReport> checks;
};

FluctuationReport fluctuation_study(const Ensemble& ensemble);
FluctuationReport fluctuation_study(const SimConfig& config, std::span<const double> horizons, std::size_t n,
                                    unsigned threads = 0);

}  // namespace catbbm::lab
