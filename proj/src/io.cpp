#include "catbbm/io.hpp"

#include <charconv>
#include <cmath>

#include "catbbm/lab.hpp"

namespace catbbm::io {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

// JSON has no inf/nan; encode them as strings so documents stay valid.
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

}  // namespace

nlohmann::json to_json(const SimConfig& c) {
  nlohmann::json j{{"beta", c.beta},
                   {"x0", c.x0},
                   {"horizons", c.horizons},
                   {"seed", c.seed},
                   {"max_population", c.max_population},
                   {"mode", to_string(c.mode)}};
  if (c.mode == SimMode::discretized) {
    j["dt"] = c.dt;
    j["epsilon"] = c.epsilon;
  }
  return j;
}

nlohmann::json to_json(const lab::VerificationReport& r) {
  return {{"name", r.name},
          {"oracle_value", number(r.oracle_value)},
          {"mc_estimate", number(r.mc_estimate)},
          {"std_error", number(r.std_error)},
          {"z_score", number(r.z_score)},
          {"n", r.n},
          {"verdict", lab::to_string(r.verdict)},
          {"kind", lab::to_string(r.kind)},
          {"metadata", r.metadata}};
}

nlohmann::json report_document(std::span<const lab::VerificationReport> reports) {
  nlohmann::json list = nlohmann::json::array();
  std::size_t passed = 0, failed = 0, warned = 0;
  for (const auto& r : reports) {
    list.push_back(to_json(r));
    switch (r.verdict) {
      case lab::Verdict::pass: ++passed; break;
      case lab::Verdict::fail: ++failed; break;
      case lab::Verdict::warn: ++warned; break;
    }
  }
  return {{"reports", list},
          {"summary", {{"total", reports.size()}, {"pass", passed}, {"fail", failed}, {"warn", warned}}}};
}

nlohmann::json to_json(const lab::LimitLawReport& r) {
  nlohmann::json horizons = nlohmann::json::array();
  for (const auto& h : r.horizons)
    horizons.push_back({{"t", h.time}, {"ks", h.ks}, {"ks_boot_sd", h.ks_boot_sd}, {"median", h.median}});
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"study", "limit-law"},
          {"n", r.n},
          {"n_reference", r.n_reference},
          {"horizons", horizons},
          {"ks_nonincreasing", r.ks_nonincreasing},
          {"median_bounded", r.median_bounded},
          {"checks", checks}};
}

nlohmann::json to_json(const lab::FluctuationReport& r) {
  nlohmann::json horizons = nlohmann::json::array();
  for (const auto& h : r.horizons) {
    nlohmann::json row{{"t", h.time}, {"q001", h.q001}, {"q01", h.q01}, {"q50", h.q50},
                       {"q99", h.q99}, {"q999", h.q999}};
    if (h.envelopes)
      row["envelopes"] = {{"center", h.envelopes->center}, {"upper", h.envelopes->upper}, {"lower", h.envelopes->lower}};
    horizons.push_back(std::move(row));
  }
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back(to_json(c));
  return {{"study", "fluctuations"},
          {"n", r.n},
          {"horizons", horizons},
          {"spearman_q999_logt", r.spearman_upper_logt},
          {"upper_increasing", r.upper_increasing},
          {"lower_moves_less", r.lower_moves_less},
          {"median_bounded", r.median_bounded},
          {"checks", checks}};
}

void write_ensemble_csv(std::ostream& os, const lab::Ensemble& e) {
  os << "replicate,time,population,r_t,m_t";
  for (double x : e.thresholds) os << ",count_above@" << format_number(x);
  os << '\n';
  for (const auto& r : e.replicates) {
    if (r.failed) continue;
    for (const auto& h : r.horizons) {
      os << r.replicate << ',' << format_number(h.time) << ',' << h.population << ',' << format_number(h.r_t) << ','
         << format_number(h.m_t);
      for (auto c : h.counts) os << ',' << c;
      os << '\n';
    }
  }
}

void write_limit_law_csv(std::ostream& os, const lab::LimitLawReport& r) {
  os << "time,ks,ks_boot_sd,median\n";
  for (const auto& h : r.horizons)
    os << format_number(h.time) << ',' << format_number(h.ks) << ',' << format_number(h.ks_boot_sd) << ','
       << format_number(h.median) << '\n';
}

void write_fluctuation_csv(std::ostream& os, const lab::FluctuationReport& r) {
  os << "time,q001,q01,q50,q99,q999,envelope_center,envelope_upper,envelope_lower\n";
  for (const auto& h : r.horizons) {
    os << format_number(h.time) << ',' << format_number(h.q001) << ',' << format_number(h.q01) << ','
       << format_number(h.q50) << ',' << format_number(h.q99) << ',' << format_number(h.q999);
    if (h.envelopes)
      os << ',' << format_number(h.envelopes->center) << ',' << format_number(h.envelopes->upper) << ','
         << format_number(h.envelopes->lower);
    else
      os << ",,,";
    os << '\n';
  }
}

}  // namespace catbbm::io
