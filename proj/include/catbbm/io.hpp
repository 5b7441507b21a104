#pragma once

#include <ostream>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "catbbm/engine.hpp"

namespace catbbm::lab {
struct Ensemble;
struct VerificationReport;
struct LimitLawReport;
struct FluctuationReport;
}  // namespace catbbm::lab

namespace catbbm::io {

/// Shortest decimal that round-trips; identical across runs and platforms.
std::string format_number(double v);

nlohmann::json to_json(const SimConfig& config);

/// {name, oracle_value, mc_estimate, std_error, z_score, n, verdict, kind, metadata}.
nlohmann::json to_json(const lab::VerificationReport& report);

/// Top-level report document: {"reports": [...], "summary": {...}}.
nlohmann::json report_document(std::span<const lab::VerificationReport> reports);

nlohmann::json to_json(const lab::LimitLawReport& report);
nlohmann::json to_json(const lab::FluctuationReport& report);

/*
 * One row per replicate per horizon:
 *   replicate,time,population,r_t,m_t,count_above@<x>...
 * Failed replicates produce no rows.
 */
void write_ensemble_csv(std::ostream& os, const lab::Ensemble& ensemble);

/// Per-horizon rows of the limit-law study.
void write_limit_law_csv(std::ostream& os, const lab::LimitLawReport& report);

/// Per-horizon quantiles with envelope columns (empty where t <= e).
void write_fluctuation_csv(std::ostream& os, const lab::FluctuationReport& report);

}  // namespace catbbm::io
