#include "catbbm/lab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>
#include <thread>

#include "catbbm/io.hpp"
#include "catbbm/randkit.hpp"

namespace catbbm::lab {

namespace {

// Stream-seed tags so auxiliary draws never share keys with replicate streams.
constexpr std::uint64_t kSpineTag = 0x5350494e45ULL;
constexpr std::uint64_t kBootstrapTag = 0x424f4f54ULL;

std::string label(const std::string& base, std::initializer_list<std::pair<const char*, double>> fields) {
  std::ostringstream os;
  os << base << '[';
  bool first = true;
  for (const auto& [k, v] : fields) {
    if (!first) os << ',';
    os << k << '=' << io::format_number(v);
    first = false;
  }
  os << ']';
  return os.str();
}

template <typename Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(b)); }

void check_query_config(const Ensemble& e, double x0, double beta) {
  if (!close(e.config.x0, x0) || !close(e.config.beta, beta))
    throw GridMismatch("query (x0, beta) does not match the ensemble configuration");
}

}  // namespace

unsigned default_thread_count() {
  if (const char* env = std::getenv("CATBBM_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ReplicateFailureOverflow::ReplicateFailureOverflow(std::size_t failures, std::size_t n)
    : std::runtime_error(std::to_string(failures) + " of " + std::to_string(n) +
                         " replicates failed (limit 1%)"),
      failures_(failures),
      n_(n) {}

std::size_t Ensemble::failures() const {
  return static_cast<std::size_t>(
      std::count_if(replicates.begin(), replicates.end(), [](const auto& r) { return r.failed; }));
}

std::size_t Ensemble::horizon_index(double t) const {
  for (std::size_t k = 0; k < config.horizons.size(); ++k)
    if (close(config.horizons[k], t)) return k;
  throw GridMismatch("ensemble has no horizon t = " + io::format_number(t));
}

std::size_t Ensemble::threshold_index(double x) const {
  for (std::size_t k = 0; k < thresholds.size(); ++k)
    if (close(thresholds[k], x)) return k;
  throw GridMismatch("ensemble has no threshold x = " + io::format_number(x));
}

Ensemble run_replicates(const SimConfig& config, std::size_t n, std::vector<double> thresholds,
                        unsigned threads) {
  config.validate();
  if (n < 2) throw ConfigError("run_replicates: need at least 2 replicates");
  Ensemble e{config, std::move(thresholds), std::vector<ReplicateRecord>(n)};

  parallel_for(n, threads, [&](std::size_t i) {
    ReplicateRecord& rec = e.replicates[i];
    rec.replicate = i;
    try {
      const auto result = simulate(config, e.thresholds, i);
      rec.horizons.reserve(result.observations.size());
      for (const auto& obs : result.observations) {
        HorizonRecord h{obs.snapshot.time, obs.snapshot.population(), obs.stats.r_t, obs.stats.martingale, {}};
        h.counts.reserve(obs.stats.count_above.size());
        for (const auto& [x, c] : obs.stats.count_above) h.counts.push_back(c);
        rec.horizons.push_back(std::move(h));
      }
    } catch (const PopulationCapExceeded& ex) {
      rec.failed = true;
      rec.failure_time = ex.time_reached();
      rec.failure = ex.what();
    } catch (const RejectionLimitExceeded& ex) {
      rec.failed = true;
      rec.failure = ex.what();
    }
  });

  const std::size_t failed = e.failures();
  if (static_cast<double>(failed) > kMaxFailureFraction * static_cast<double>(n))
    throw ReplicateFailureOverflow(failed, n);
  return e;
}

std::string to_string(TestKind kind) {
  switch (kind) {
    case TestKind::equality: return "equality";
    case TestKind::upper_bound: return "upper_bound";
    case TestKind::absolute: return "absolute";
    case TestKind::qualitative: return "qualitative";
  }
  return "unknown";
}

std::string to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::warn: return "warn";
  }
  return "unknown";
}

VerificationReport equality_test(std::string name, double oracle_value, const stats::Moments& mc) {
  VerificationReport r;
  r.name = std::move(name);
  r.oracle_value = oracle_value;
  r.mc_estimate = mc.mean;
  r.std_error = mc.std_error;
  r.n = mc.n;
  r.z_score = mc.std_error > 0.0 ? (mc.mean - oracle_value) / mc.std_error
                                 : (mc.mean == oracle_value ? 0.0 : std::copysign(INFINITY, mc.mean - oracle_value));
  if (std::abs(oracle_value) < kDeepTailOracle) {
    r.kind = TestKind::absolute;
    r.verdict = std::abs(mc.mean - oracle_value) <= kDeepTailAbsTol ? Verdict::pass : Verdict::fail;
  } else {
    r.kind = TestKind::equality;
    r.verdict = std::abs(r.z_score) <= kZMax ? Verdict::pass : Verdict::fail;
  }
  return r;
}

VerificationReport bound_test(std::string name, double bound, const stats::Moments& mc) {
  VerificationReport r;
  r.name = std::move(name);
  r.kind = TestKind::upper_bound;
  r.oracle_value = bound;
  r.mc_estimate = mc.mean;
  r.std_error = mc.std_error;
  r.n = mc.n;
  r.z_score = mc.std_error > 0.0 ? (mc.mean - bound) / mc.std_error : (mc.mean <= bound ? -INFINITY : INFINITY);
  r.verdict = mc.mean - kBoundSlack * mc.std_error <= bound ? Verdict::pass : Verdict::fail;
  r.metadata["slack_se"] = kBoundSlack;
  return r;
}

std::vector<VerificationReport> verify_first_moment(const Ensemble& ensemble,
                                                    std::span<const oracle::MomentQuery> queries) {
  std::vector<VerificationReport> out;
  for (const auto& q : queries) {
    check_query_config(ensemble, q.x0, q.beta);
    const std::size_t k = ensemble.horizon_index(q.t);
    const std::size_t j = ensemble.threshold_index(q.x);
    const auto counts = ensemble.series([&](const ReplicateRecord& r) { return r.horizons[k].counts[j]; });
    auto rep = equality_test(label("first_moment", {{"x0", q.x0}, {"t", q.t}, {"x", q.x}, {"beta", q.beta}}),
                             oracle::expected_count_above(q), stats::moments(counts));
    rep.metadata["config"] = io::to_json(ensemble.config);
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<VerificationReport> verify_population(const Ensemble& ensemble) {
  const auto& c = ensemble.config;
  std::vector<VerificationReport> out;
  for (std::size_t k = 0; k < c.horizons.size(); ++k) {
    const auto pop = ensemble.series([&](const ReplicateRecord& r) { return r.horizons[k].population; });
    auto rep = equality_test(label("population", {{"x0", c.x0}, {"t", c.horizons[k]}, {"beta", c.beta}}),
                             oracle::expected_population(c.x0, c.horizons[k], c.beta).value, stats::moments(pop));
    rep.metadata["config"] = io::to_json(c);
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<VerificationReport> verify_many_to_one(const SimConfig& config, double x, std::size_t n,
                                                   unsigned threads) {
  if (config.x0 != 0.0) throw ConfigError("verify_many_to_one: the weighted path starts at 0; x0 must be 0");
  if (!(x >= 0.0)) throw ConfigError("verify_many_to_one: x must be non-negative");
  const double t = config.horizons.back();
  const double beta = config.beta;

  const Ensemble ensemble = run_replicates(config, n, {x}, threads);
  const std::size_t k = ensemble.horizon_index(t);
  const auto particle =
      stats::moments(ensemble.series([&](const ReplicateRecord& r) { return r.horizons[k].counts[0]; }));

  std::vector<double> weighted(n);
  const std::uint64_t spine_seed = derive_seed(config.seed, kSpineTag);
  parallel_for(n, threads, [&](std::size_t i) {
    RngStream stream(spine_seed, i);
    const auto draw = sample_joint_position_localtime(stream, t);
    weighted[i] = draw.position >= x ? std::exp(beta * draw.local_time) : 0.0;
  });
  const auto spine = stats::moments(weighted);
  const double closed = oracle::expected_count_origin(t, x, beta).value;

  std::vector<VerificationReport> out;
  out.push_back(equality_test(label("many_to_one.particles_vs_closed_form", {{"t", t}, {"x", x}, {"beta", beta}}),
                              closed, particle));
  out.push_back(equality_test(label("many_to_one.spine_vs_closed_form", {{"t", t}, {"x", x}, {"beta", beta}}),
                              closed, spine));
  // Independent samples: combined standard error.
  stats::Moments diff{particle.n + spine.n, particle.mean,
                      0.0, std::sqrt(particle.std_error * particle.std_error + spine.std_error * spine.std_error)};
  auto pair = equality_test(label("many_to_one.particles_vs_spine", {{"t", t}, {"x", x}, {"beta", beta}}),
                            spine.mean, diff);
  pair.metadata["spine_std_error"] = spine.std_error;
  out.push_back(std::move(pair));
  for (auto& r : out) r.metadata["config"] = io::to_json(config);
  return out;
}

std::vector<VerificationReport> verify_martingale(const Ensemble& ensemble) {
  const auto& c = ensemble.config;
  const double target = std::exp(-c.beta * std::abs(c.x0));
  std::vector<VerificationReport> out;
  std::vector<std::vector<double>> per_horizon;
  for (std::size_t k = 0; k < c.horizons.size(); ++k) {
    per_horizon.push_back(ensemble.series([&](const ReplicateRecord& r) { return r.horizons[k].m_t; }));
    out.push_back(equality_test(label("martingale.mean", {{"x0", c.x0}, {"t", c.horizons[k]}, {"beta", c.beta}}),
                                target, stats::moments(per_horizon.back())));
  }
  // Cross-horizon: paired differences over the same replicates.
  for (std::size_t k = 1; k < per_horizon.size(); ++k) {
    std::vector<double> d(per_horizon[k].size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = per_horizon[k][i] - per_horizon[k - 1][i];
    out.push_back(equality_test(
        label("martingale.cross_horizon", {{"s", c.horizons[k - 1]}, {"t", c.horizons[k]}, {"beta", c.beta}}), 0.0,
        stats::moments(d)));
    // Deep-tail rule must not kick in for a zero target.
    auto& rep = out.back();
    rep.kind = TestKind::equality;
    rep.verdict = std::abs(rep.z_score) <= kZMax ? Verdict::pass : Verdict::fail;
  }
  // Second moments of a martingale are nondecreasing; flag (never fail).
  for (std::size_t k = 1; k < per_horizon.size(); ++k) {
    const auto a = stats::moments(per_horizon[k - 1]);
    const auto b = stats::moments(per_horizon[k]);
    VerificationReport rep;
    rep.name = label("martingale.variance_nondecreasing", {{"s", c.horizons[k - 1]}, {"t", c.horizons[k]}});
    rep.kind = TestKind::qualitative;
    rep.oracle_value = a.variance;
    rep.mc_estimate = b.variance;
    rep.n = b.n;
    rep.verdict = b.variance >= a.variance ? Verdict::pass : Verdict::warn;
    out.push_back(std::move(rep));
  }
  for (auto& r : out) r.metadata["config"] = io::to_json(c);
  return out;
}

std::vector<VerificationReport> verify_moment_bounds(const Ensemble& ensemble,
                                                     std::span<const oracle::MomentQuery> queries,
                                                     std::span<const oracle::TwoTimeQuery> two_time) {
  std::vector<VerificationReport> out;
  for (const auto& q : queries) {
    check_query_config(ensemble, q.x0, q.beta);
    const std::size_t k = ensemble.horizon_index(q.t);
    const std::size_t j = ensemble.threshold_index(q.x);
    const auto sq = ensemble.series([&](const ReplicateRecord& r) {
      const double c = static_cast<double>(r.horizons[k].counts[j]);
      return c * c;
    });
    const auto cross = ensemble.series([&](const ReplicateRecord& r) {
      return static_cast<double>(r.horizons[k].counts[j]) * static_cast<double>(r.horizons[k].population);
    });
    const auto fields = {std::pair{"x0", q.x0}, {"t", q.t}, {"x", q.x}, {"beta", q.beta}};
    out.push_back(bound_test(label("second_moment_bound", fields), oracle::second_moment_bound(q), stats::moments(sq)));
    out.push_back(bound_test(label("cross_moment_bound", fields), oracle::cross_moment_bound(q), stats::moments(cross)));
  }
  for (const auto& q : two_time) {
    q.validate();
    check_query_config(ensemble, q.x0, q.beta);
    const std::size_t ks = ensemble.horizon_index(q.s);
    const std::size_t kt = ensemble.horizon_index(q.t);
    const std::size_t jx = ensemble.threshold_index(q.x);
    const std::size_t jy = ensemble.threshold_index(q.y);
    const auto prod = ensemble.series([&](const ReplicateRecord& r) {
      return static_cast<double>(r.horizons[ks].counts[jx]) * static_cast<double>(r.horizons[kt].counts[jy]);
    });
    const auto bound = oracle::two_time_bound(q);
    auto rep = bound_test(
        label("two_time_bound", {{"x0", q.x0}, {"s", q.s}, {"t", q.t}, {"x", q.x}, {"y", q.y}, {"beta", q.beta}}),
        bound.total, stats::moments(prod));
    rep.metadata["terms"] = {{"leading", bound.leading}, {"e1", bound.e1}, {"e2", bound.e2},
                             {"e3", bound.e3},           {"e4", bound.e4}};
    out.push_back(std::move(rep));
  }
  for (auto& r : out) r.metadata["config"] = io::to_json(ensemble.config);
  return out;
}

std::vector<double> estimate_m_infinity(const SimConfig& config, double t_proxy, std::size_t n, unsigned threads) {
  if (!(0.5 * config.beta * config.beta * t_proxy >= kMinProxyExponent))
    throw ConfigError("estimate_m_infinity: t_proxy too small (need beta^2 t_proxy / 2 >= 4)");
  SimConfig c = config;
  c.horizons = {t_proxy};
  const Ensemble e = run_replicates(c, n, {}, threads);
  return e.series([](const ReplicateRecord& r) { return r.horizons[0].m_t; });
}

std::vector<double> m_proxy_stability(const SimConfig& config, std::span<const double> t_proxies, std::size_t n,
                                      unsigned threads) {
  std::vector<double> out;
  for (double t : t_proxies) {
    SimConfig c = config;
    c.horizons = {t, t + 1.0};
    const Ensemble e = run_replicates(c, n, {}, threads);
    out.push_back(stats::ks_two_sample(e.series([](const ReplicateRecord& r) { return r.horizons[0].m_t; }),
                                       e.series([](const ReplicateRecord& r) { return r.horizons[1].m_t; })));
  }
  return out;
}

namespace {

std::vector<double> recentred_maxima(const Ensemble& e, std::size_t k) {
  const double shift = 0.5 * e.config.beta * e.config.horizons[k];
  return e.series([&](const ReplicateRecord& r) { return r.horizons[k].r_t - shift; });
}

void require_ladder(const SimConfig& c) {
  if (c.horizons.size() < 2) throw ConfigError("study: trend assertions need at least 2 horizons");
}

VerificationReport qualitative(std::string name, bool ok, nlohmann::json detail) {
  VerificationReport r;
  r.name = std::move(name);
  r.kind = TestKind::qualitative;
  r.verdict = ok ? Verdict::pass : Verdict::warn;
  r.metadata = std::move(detail);
  return r;
}

}  // namespace

LimitLawReport limit_law_study(const Ensemble& ensemble, std::span<const double> m_samples) {
  const auto& c = ensemble.config;
  require_ladder(c);
  if (m_samples.empty()) throw ConfigError("limit_law_study: empty M reference sample");
  LimitLawReport rep;
  rep.n = ensemble.successes();
  rep.n_reference = m_samples.size();

  RngStream boot(derive_seed(c.seed, kBootstrapTag), 0);
  for (std::size_t k = 0; k < c.horizons.size(); ++k) {
    auto w = recentred_maxima(ensemble, k);
    std::sort(w.begin(), w.end());
    std::vector<double> f(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) f[i] = oracle::w_limit_cdf(w[i], c.beta, m_samples);
    const double ks = stats::ks_statistic_sorted(f);

    // Reference CDF values are monotone in the sample, so a resample only
    // needs its F values sorted.
    std::vector<double> ks_boot(kBootstrapResamples);
    std::vector<double> resample(f.size());
    for (auto& b : ks_boot) {
      for (auto& v : resample) v = f[boot.index(f.size())];
      std::sort(resample.begin(), resample.end());
      b = stats::ks_statistic_sorted(resample);
    }
    rep.horizons.push_back({c.horizons[k], ks, std::sqrt(stats::moments(ks_boot).variance),
                            stats::quantile_sorted(w, 0.5)});
  }

  rep.ks_nonincreasing = true;
  for (std::size_t k = 1; k < rep.horizons.size(); ++k) {
    const auto& a = rep.horizons[k - 1];
    const auto& b = rep.horizons[k];
    const double band = kBootstrapBand * std::hypot(a.ks_boot_sd, b.ks_boot_sd);
    rep.ks_nonincreasing = rep.ks_nonincreasing && b.ks <= a.ks + band;
  }
  rep.median_bounded = std::all_of(rep.horizons.begin(), rep.horizons.end(),
                                   [](const auto& h) { return std::abs(h.median) <= kMedianWindow; });

  nlohmann::json ks = nlohmann::json::array();
  for (const auto& h : rep.horizons) ks.push_back({{"t", h.time}, {"ks", h.ks}, {"boot_sd", h.ks_boot_sd}, {"median", h.median}});
  rep.checks.push_back(qualitative("limit_law.ks_nonincreasing", rep.ks_nonincreasing,
                                   {{"horizons", ks}, {"band_sd", kBootstrapBand}}));
  rep.checks.push_back(qualitative("limit_law.median_bounded", rep.median_bounded,
                                   {{"horizons", ks}, {"window", kMedianWindow}}));
  for (auto& r : rep.checks) {
    r.n = rep.n;
    r.metadata["config"] = io::to_json(c);
  }
  return rep;
}

LimitLawReport limit_law_study(const SimConfig& config, std::span<const double> horizons, std::size_t n,
                               std::span<const double> m_samples, unsigned threads) {
  SimConfig c = config;
  c.horizons.assign(horizons.begin(), horizons.end());
  require_ladder(c);
  if (n < 1000) throw ConfigError("limit_law_study: need at least 1000 replicates");
  return limit_law_study(run_replicates(c, n, {}, threads), m_samples);
}

FluctuationReport fluctuation_study(const Ensemble& ensemble) {
  const auto& c = ensemble.config;
  require_ladder(c);
  FluctuationReport rep;
  rep.n = ensemble.successes();
  std::vector<double> upper, logt;
  for (std::size_t k = 0; k < c.horizons.size(); ++k) {
    auto w = recentred_maxima(ensemble, k);
    std::sort(w.begin(), w.end());
    FluctuationHorizon h{c.horizons[k],
                         stats::quantile_sorted(w, 0.001),
                         stats::quantile_sorted(w, 0.01),
                         stats::quantile_sorted(w, 0.5),
                         stats::quantile_sorted(w, 0.99),
                         stats::quantile_sorted(w, 0.999),
                         std::nullopt};
    if (h.time > std::numbers::e) h.envelopes = oracle::fluctuation_envelopes(h.time, c.beta);
    upper.push_back(h.q999);
    logt.push_back(std::log(h.time));
    rep.horizons.push_back(h);
  }
  rep.spearman_upper_logt = stats::spearman(upper, logt);
  rep.upper_increasing = rep.spearman_upper_logt > 0.0;
  for (std::size_t k = 1; k < upper.size(); ++k) rep.upper_increasing = rep.upper_increasing && upper[k] > upper[k - 1];
  const auto& first = rep.horizons.front();
  const auto& last = rep.horizons.back();
  const double upper_change = std::abs(last.q999 - first.q999);
  const double lower_change = std::abs(last.q001 - first.q001);
  rep.lower_moves_less = lower_change < upper_change;
  rep.median_bounded = std::all_of(rep.horizons.begin(), rep.horizons.end(),
                                   [](const auto& h) { return std::abs(h.q50) <= kMedianWindow; });

  rep.checks.push_back(qualitative("fluctuations.upper_quantile_increasing", rep.upper_increasing,
                                   {{"spearman_q999_logt", rep.spearman_upper_logt}}));
  rep.checks.push_back(qualitative("fluctuations.lower_quantile_moves_less", rep.lower_moves_less,
                                   {{"q001_change", lower_change}, {"q999_change", upper_change}}));
  rep.checks.push_back(qualitative("fluctuations.median_bounded", rep.median_bounded, {{"window", kMedianWindow}}));
  for (auto& r : rep.checks) {
    r.n = rep.n;
    r.metadata["config"] = io::to_json(c);
  }
  return rep;
}

FluctuationReport fluctuation_study(const SimConfig& config, std::span<const double> horizons, std::size_t n,
                                    unsigned threads) {
  SimConfig c = config;
  c.horizons.assign(horizons.begin(), horizons.end());
  require_ladder(c);
  if (n < 1000) throw ConfigError("fluctuation_study: need at least 1000 replicates");
  return fluctuation_study(run_replicates(c, n, {}, threads));
}

}  // namespace catbbm::lab
