#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "catbbm/rng.hpp"

namespace catbbm {

enum class SimMode { exact, discretized };

std::string to_string(SimMode mode);
SimMode sim_mode_from_string(const std::string& name);

/// Thrown by SimConfig::validate and other precondition checks.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The exponential-growth guard tripped before the last horizon was reached.
class PopulationCapExceeded : public std::runtime_error {
 public:
  PopulationCapExceeded(double time_reached, std::size_t cap);
  double time_reached() const noexcept { return time_reached_; }

 private:
  double time_reached_;
};

inline constexpr std::size_t kDefaultMaxPopulation = 10'000'000;

struct SimConfig {
  double beta = 1.0;
  double x0 = 0.0;
  std::vector<double> horizons;
  std::uint64_t seed = 0;
  std::size_t max_population = kDefaultMaxPopulation;
  SimMode mode = SimMode::exact;
  // Discretized mode only.
  double dt = 0.0;
  double epsilon = 0.0;

  /// Throws ConfigError. beta == 0 is accepted and gives a single
  /// Brownian particle.
  void validate() const;
};

struct Particle {
  std::uint64_t id = 0;
  std::optional<std::uint64_t> parent_id;
  double birth_time = 0.0;
  double position = 0.0;
  double residual_budget = 0.0;  // local time left until this particle branches
};

struct Snapshot {
  double time = 0.0;
  std::vector<double> positions;

  std::size_t population() const noexcept { return positions.size(); }
};

struct GenealogyEdge {
  std::uint64_t parent_id;
  std::uint64_t child_id;
  double branch_time;
};

struct Genealogy {
  std::vector<GenealogyEdge> edges;
  std::vector<double> branch_positions;  // one per branch event

  std::size_t branch_events() const noexcept { return branch_positions.size(); }
};

struct ExtremeStats {
  double r_t = 0.0;
  std::vector<std::pair<double, std::size_t>> count_above;  // threshold -> |N_t^x|
  double martingale = 0.0;
};

struct Observation {
  Snapshot snapshot;
  ExtremeStats stats;
};

struct SimResult {
  std::vector<Observation> observations;  // one per horizon, in order
  Genealogy genealogy;
};

struct Survived {
  double position;
  double consumed_local_time;
};
struct Branched {
  double at;
};
using AdvanceOutcome = std::variant<Survived, Branched>;

/*
 * Moves one particle from time `from` to time `to` under the exact dynamics.
 *
 * Away from the catalyst the particle either stays off 0 for the whole
 * interval (position drawn from the zero-avoiding law) or first hits 0.
 * At 0 it branches once its local time reaches `residual_budget`; otherwise
 * the surviving (position, local time) pair is drawn conditioned on
 * local time < residual_budget.
 */
AdvanceOutcome advance_particle(const Particle& p, double from, double to, RngStream& stream);

/// Runs one replicate. Dispatches on config.mode. Replicate `replicate` of a
/// given seed is reproducible bit for bit.
SimResult simulate(const SimConfig& config, std::span<const double> thresholds = {},
                   std::uint64_t replicate = 0);

/// Euler scheme with a smeared catalyst: branching at rate beta / (2 epsilon)
/// while |position| <= epsilon. Independent check on the exact engine.
SimResult simulate_discretized(const SimConfig& config, std::span<const double> thresholds = {},
                               std::uint64_t replicate = 0);

double rightmost(const Snapshot& s);
std::size_t count_above(const Snapshot& s, double x);
double additive_martingale(const Snapshot& s, double beta);
ExtremeStats extreme_stats(const Snapshot& s, double beta, std::span<const double> thresholds);

}  // namespace catbbm
