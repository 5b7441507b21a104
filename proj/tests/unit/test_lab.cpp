#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "catbbm/lab.hpp"

using namespace catbbm;
using namespace catbbm::lab;

namespace {

SimConfig config(double x0, std::vector<double> horizons, std::uint64_t seed) {
  SimConfig c;
  c.x0 = x0;
  c.horizons = std::move(horizons);
  c.seed = seed;
  return c;
}

bool same(const Ensemble& a, const Ensemble& b) {
  if (a.replicates.size() != b.replicates.size()) return false;
  for (std::size_t i = 0; i < a.replicates.size(); ++i) {
    const auto& ra = a.replicates[i];
    const auto& rb = b.replicates[i];
    if (ra.failed != rb.failed || ra.horizons.size() != rb.horizons.size()) return false;
    for (std::size_t k = 0; k < ra.horizons.size(); ++k) {
      const auto& ha = ra.horizons[k];
      const auto& hb = rb.horizons[k];
      if (ha.population != hb.population || ha.r_t != hb.r_t || ha.m_t != hb.m_t || ha.counts != hb.counts)
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("ensembles do not depend on the thread count") {
  const auto c = config(0.0, {0.5, 1.0}, 11);
  const auto one = run_replicates(c, 500, {0.0, 0.5}, 1);
  const auto many = run_replicates(c, 500, {0.0, 0.5}, 4);
  CHECK(same(one, many));
  CHECK(one.successes() == 500);
  CHECK_THROWS_AS(run_replicates(c, 1, {}, 1), ConfigError);
}

TEST_CASE("grid lookups") {
  const auto e = run_replicates(config(0.0, {0.5, 1.0}, 1), 10, {0.0, 0.5}, 1);
  CHECK(e.horizon_index(1.0) == 1);
  CHECK(e.threshold_index(0.5) == 1);
  CHECK_THROWS_AS(e.horizon_index(2.0), GridMismatch);
  CHECK_THROWS_AS(e.threshold_index(0.25), GridMismatch);
  const oracle::MomentQuery wrong_start{0.7, 1.0, 0.0, 1.0};
  CHECK_THROWS_AS(verify_first_moment(e, std::span(&wrong_start, 1)), GridMismatch);
  const oracle::MomentQuery wrong_t{0.0, 2.0, 0.0, 1.0};
  CHECK_THROWS_AS(verify_first_moment(e, std::span(&wrong_t, 1)), GridMismatch);
}

TEST_CASE("verdict rules") {
  stats::Moments m{1000, 1.05, 1.0, 0.02};
  CHECK(equality_test("a", 1.0, m).verdict == Verdict::pass);  // z = 2.5
  m.mean = 1.1;
  CHECK(equality_test("a", 1.0, m).verdict == Verdict::fail);  // z = 5
  const auto deep = equality_test("tail", 1e-8, stats::Moments{1000, 5e-4, 0.0, 0.0});
  CHECK(deep.kind == TestKind::absolute);
  CHECK(deep.verdict == Verdict::pass);
  CHECK(equality_test("tail", 1e-8, stats::Moments{1000, 2e-3, 0.0, 1e-4}).verdict == Verdict::fail);
  CHECK(bound_test("b", 1.0, stats::Moments{1000, 1.05, 0.0, 0.02}).verdict == Verdict::pass);
  CHECK(bound_test("b", 1.0, stats::Moments{1000, 1.07, 0.0, 0.02}).verdict == Verdict::fail);
  CHECK(bound_test("b", 1.0, stats::Moments{1000, 0.2, 0.0, 0.02}).verdict == Verdict::pass);
}

TEST_CASE("small verification runs pass") {
  const auto c = config(0.0, {0.5, 1.0}, 21);
  const auto e = run_replicates(c, 20000, {0.0, 0.5, 1.0});
  std::vector<oracle::MomentQuery> qs;
  for (double t : c.horizons)
    for (double x : e.thresholds) qs.push_back({0.0, t, x, 1.0});
  for (const auto& r : verify_first_moment(e, qs)) CHECK_MESSAGE(!r.hard_failure(), r.name);
  for (const auto& r : verify_population(e)) CHECK_MESSAGE(!r.hard_failure(), r.name);
  const auto mart = verify_martingale(e);
  CHECK(mart.size() == 2 + 1 + 1);
  for (const auto& r : mart) CHECK_MESSAGE(!r.hard_failure(), r.name);
  const oracle::TwoTimeQuery tt{0.0, 0.5, 1.0, 0.0, 0.5, 1.0};
  const auto bounds = verify_moment_bounds(e, qs, std::span(&tt, 1));
  CHECK(bounds.size() == 2 * qs.size() + 1);
  for (const auto& r : bounds) CHECK_MESSAGE(!r.hard_failure(), r.name);
  CHECK(bounds.back().metadata.contains("terms"));
}

TEST_CASE("many-to-one needs a catalyst start") {
  CHECK_THROWS_AS(verify_many_to_one(config(0.5, {1.0}, 1), 0.5, 100), ConfigError);
  const auto reps = verify_many_to_one(config(0.0, {1.0}, 31), 0.5, 20000);
  REQUIRE(reps.size() == 3);
  for (const auto& r : reps) CHECK_MESSAGE(!r.hard_failure(), r.name);
  // Weak branching: the weighted estimator has small variance.
  auto weak = config(0.0, {0.5}, 32);
  weak.beta = 0.25;
  for (const auto& r : verify_many_to_one(weak, 0.0, 100000)) CHECK_MESSAGE(!r.hard_failure(), r.name);
}

TEST_CASE("failure accounting") {
  auto c = config(0.0, {4.0}, 41);
  c.max_population = 3;
  CHECK_THROWS_AS(run_replicates(c, 200, {}), ReplicateFailureOverflow);
  try {
    run_replicates(c, 200, {});
  } catch (const ReplicateFailureOverflow& e) {
    CHECK(e.replicates() == 200);
    CHECK(e.failures() > 2);
  }
}

TEST_CASE("proxy and study preconditions") {
  const auto c = config(0.0, {1.0}, 51);
  CHECK_THROWS_AS(estimate_m_infinity(c, 7.9, 100), ConfigError);
  const std::vector<double> single{1.0};
  const std::vector<double> m{1.0};
  CHECK_THROWS_AS(fluctuation_study(c, single, 1000), ConfigError);
  CHECK_THROWS_AS(limit_law_study(c, single, 1000, m), ConfigError);
  const std::vector<double> ladder{1.0, 2.0};
  CHECK_THROWS_AS(fluctuation_study(c, ladder, 999), ConfigError);
}

TEST_CASE("recentred median stays bounded up to t = 8") {
  const std::vector<double> ladder{2.0, 4.0, 8.0};
  const auto fr = fluctuation_study(config(0.0, {1.0}, 71), ladder, 2000);
  CHECK(fr.median_bounded);
  for (const auto& h : fr.horizons) CHECK(std::abs(h.q50) <= kMedianWindow);
}

TEST_CASE("studies on a small ladder") {
  const auto c = config(0.0, {1.0}, 61);
  const std::vector<double> ladder{1.0, 2.0, 3.0};
  const auto fr = fluctuation_study(c, ladder, 2000);
  REQUIRE(fr.horizons.size() == 3);
  for (const auto& h : fr.horizons) {
    CHECK(h.q001 <= h.q01);
    CHECK(h.q01 <= h.q50);
    CHECK(h.q50 <= h.q99);
    CHECK(h.q99 <= h.q999);
    CHECK(h.envelopes.has_value() == (h.time > std::exp(1.0)));
  }
  const auto m = estimate_m_infinity(c, 8.0, 300);
  CHECK(m.size() == 300);
  for (double v : m) CHECK(v > 0.0);
  const auto lr = limit_law_study(c, ladder, 1000, m);
  REQUIRE(lr.horizons.size() == 3);
  for (const auto& h : lr.horizons) {
    CHECK(h.ks >= 0.0);
    CHECK(h.ks <= 1.0);
    CHECK(h.ks_boot_sd > 0.0);
  }
  const std::vector<double> proxies{8.0};
  const auto stab = m_proxy_stability(c, proxies, 200);
  REQUIRE(stab.size() == 1);
  CHECK(stab[0] < 0.2);
}
