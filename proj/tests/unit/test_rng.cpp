#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "catbbm/rng.hpp"
#include "catbbm/stats.hpp"

using catbbm::RngStream;

TEST_CASE("a stream is a pure function of (seed, stream id)") {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("different stream ids and seeds give different sequences") {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto va = a.next_u64();
    same_ab += va == b.next_u64();
    same_ac += va == c.next_u64();
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("derive_seed separates replicates") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t r = 0; r < 10000; ++r) seen.insert(catbbm::derive_seed(5, r));
  CHECK(seen.size() == 10000);
  CHECK(catbbm::derive_seed(5, 0) != catbbm::derive_seed(6, 0));
}

TEST_CASE("uniform draws stay inside the open unit interval") {
  RngStream s(1, 0);
  std::vector<double> u(100000);
  for (auto& v : u) {
    v = s.uniform();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
  }
  CHECK(catbbm::stats::ks_one_sample(u, [](double x) { return x; }) <
        catbbm::stats::ks_critical_value(u.size(), 0.01));
}

TEST_CASE("normal and exponential draws have the right first two moments") {
  RngStream s(2, 3);
  std::vector<double> z(200000), e(200000);
  for (auto& v : z) v = s.normal();
  for (auto& v : e) v = s.exponential();
  const auto mz = catbbm::stats::moments(z);
  const auto me = catbbm::stats::moments(e);
  CHECK(std::abs(mz.mean) < 4 * mz.std_error);
  CHECK(mz.variance == doctest::Approx(1.0).epsilon(0.02));
  CHECK(std::abs(me.mean - 1.0) < 4 * me.std_error);
  CHECK(me.variance == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("streams with neighbouring ids are uncorrelated") {
  RngStream a(9, 100), b(9, 101);
  std::vector<double> x(50000), y(50000);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = a.normal();
    y[i] = b.normal();
  }
  // Spearman under independence has SD about 1/sqrt(n).
  CHECK(std::abs(catbbm::stats::spearman(x, y)) < 4.0 / std::sqrt(50000.0));
}

TEST_CASE("index stays in range and covers it") {
  RngStream s(3, 0);
  std::vector<int> hits(10, 0);
  for (int i = 0; i < 10000; ++i) {
    const auto k = s.index(10);
    REQUIRE(k < 10);
    ++hits[k];
  }
  for (int h : hits) CHECK(h > 800);
}
