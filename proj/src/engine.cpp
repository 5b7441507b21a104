#include "catbbm/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

#include "catbbm/randkit.hpp"

namespace catbbm {

std::string to_string(SimMode mode) {
  return mode == SimMode::exact ? "exact" : "discretized";
}

SimMode sim_mode_from_string(const std::string& name) {
  if (name == "exact") return SimMode::exact;
  if (name == "discretized") return SimMode::discretized;
  throw ConfigError("unknown simulation mode '" + name + "'");
}

PopulationCapExceeded::PopulationCapExceeded(double time_reached, std::size_t cap)
    : std::runtime_error([&] {
        std::ostringstream os;
        os << "population cap " << cap << " exceeded at t = " << time_reached;
        return os.str();
      }()),
      time_reached_(time_reached) {}

void SimConfig::validate() const {
  if (!std::isfinite(beta) || beta < 0.0) throw ConfigError("beta must be non-negative");
  if (!std::isfinite(x0)) throw ConfigError("x0 must be finite");
  if (horizons.empty()) throw ConfigError("at least one horizon is required");
  double prev = 0.0;
  for (double h : horizons) {
    if (!std::isfinite(h) || h <= prev) throw ConfigError("horizons must be positive and strictly increasing");
    prev = h;
  }
  if (max_population == 0) throw ConfigError("max_population must be positive");
  if (mode == SimMode::discretized) {
    if (!(epsilon > 0.0)) throw ConfigError("discretized mode requires epsilon > 0");
    if (!(dt > 0.0)) throw ConfigError("discretized mode requires dt > 0");
    if (dt > epsilon * epsilon / 10.0) throw ConfigError("discretized mode requires dt <= epsilon^2 / 10");
  }
}

AdvanceOutcome advance_particle(const Particle& p, double from, double to, RngStream& stream) {
  if (!(from < to)) throw ConfigError("advance_particle: requires from < to");
  double position = p.position;
  // Infinite budget (beta == 0): the catalyst is inert.
  if (std::isinf(p.residual_budget)) return Survived{position + std::sqrt(to - from) * stream.normal(), 0.0};
  if (position != 0.0) {
    const double tau = sample_hitting_time(stream, position);
    if (from + tau >= to) return Survived{sample_position_avoiding_zero(stream, position, to - from), 0.0};
    from += tau;
  }
  const double budget = p.residual_budget;
  const double sigma = sample_inverse_local_time(stream, budget);
  if (from + sigma <= to) return Branched{from + sigma};
  // Not branched: equivalent to L_{to - from} < budget. Redraw (B, L) under that condition.
  const double duration = to - from;
  for (std::size_t attempt = 0; attempt < kRejectionCap; ++attempt) {
    const auto draw = sample_joint_position_localtime(stream, duration);
    if (draw.local_time < budget) return Survived{draw.position, draw.local_time};
  }
  throw RejectionLimitExceeded("advance_particle: conditioned local-time draw exhausted its attempts");
}

namespace {

struct Pending {
  Particle particle;
  std::size_t first_horizon;  // exact: horizon index; discretized: birth step
};

struct LaterBirth {
  bool operator()(const Pending& a, const Pending& b) const {
    if (a.particle.birth_time != b.particle.birth_time) return a.particle.birth_time > b.particle.birth_time;
    return a.particle.id > b.particle.id;
  }
};

using EventQueue = std::priority_queue<Pending, std::vector<Pending>, LaterBirth>;

SimResult finish(const SimConfig& config, std::vector<Snapshot> snapshots, Genealogy genealogy,
                 std::span<const double> thresholds) {
  SimResult result;
  result.observations.reserve(snapshots.size());
  for (auto& s : snapshots) {
    auto stats = extreme_stats(s, config.beta, thresholds);
    result.observations.push_back({std::move(s), std::move(stats)});
  }
  result.genealogy = std::move(genealogy);
  return result;
}

std::vector<Snapshot> empty_snapshots(const SimConfig& config) {
  std::vector<Snapshot> snaps(config.horizons.size());
  for (std::size_t k = 0; k < snaps.size(); ++k) snaps[k].time = config.horizons[k];
  return snaps;
}

void record_branch(Genealogy& g, std::uint64_t parent, std::uint64_t a, std::uint64_t b, double time,
                   double position) {
  g.edges.push_back({parent, a, time});
  g.edges.push_back({parent, b, time});
  g.branch_positions.push_back(position);
}

SimResult simulate_exact(const SimConfig& config, std::span<const double> thresholds,
                         std::uint64_t replicate) {
  const std::uint64_t seed = derive_seed(config.seed, replicate);
  const auto& horizons = config.horizons;
  auto snapshots = empty_snapshots(config);
  Genealogy genealogy;

  EventQueue queue;
  std::uint64_t next_id = 0;
  queue.push({Particle{next_id++, std::nullopt, 0.0, config.x0, 0.0}, 0});

  while (!queue.empty()) {
    Pending item = queue.top();
    queue.pop();
    Particle& p = item.particle;
    RngStream stream(seed, p.id);
    p.residual_budget = config.beta > 0.0 ? stream.exponential() / config.beta
                                          : std::numeric_limits<double>::infinity();

    double now = p.birth_time;
    for (std::size_t k = item.first_horizon; k < horizons.size(); ++k) {
      if (horizons[k] > now) {
        const auto outcome = advance_particle(p, now, horizons[k], stream);
        if (const auto* b = std::get_if<Branched>(&outcome)) {
          if (genealogy.branch_events() + 2 > config.max_population)
            throw PopulationCapExceeded(b->at, config.max_population);
          const std::uint64_t left = next_id++;
          const std::uint64_t right = next_id++;
          record_branch(genealogy, p.id, left, right, b->at, 0.0);
          // A child born before horizon k first contributes to snapshot k.
          queue.push({Particle{left, p.id, b->at, 0.0, 0.0}, k});
          queue.push({Particle{right, p.id, b->at, 0.0, 0.0}, k});
          break;
        }
        const auto& s = std::get<Survived>(outcome);
        p.position = s.position;
        p.residual_budget -= s.consumed_local_time;
        now = horizons[k];
      }
      snapshots[k].positions.push_back(p.position);
    }
  }
  return finish(config, std::move(snapshots), std::move(genealogy), thresholds);
}

}  // namespace

SimResult simulate_discretized(const SimConfig& config, std::span<const double> thresholds,
                               std::uint64_t replicate) {
  config.validate();
  if (config.mode != SimMode::discretized) throw ConfigError("simulate_discretized requires discretized mode");
  const std::uint64_t seed = derive_seed(config.seed, replicate);
  const double dt = config.dt;
  const double sd = std::sqrt(dt);
  const double eps = config.epsilon;
  const double branch_prob = config.beta / (2.0 * eps) * dt;

  // Observation k is taken at step round(h_k / dt).
  std::vector<std::size_t> obs_steps;
  for (double h : config.horizons) obs_steps.push_back(static_cast<std::size_t>(std::llround(h / dt)));
  const std::size_t last_step = obs_steps.back();

  auto snapshots = empty_snapshots(config);
  Genealogy genealogy;
  EventQueue queue;
  std::uint64_t next_id = 0;
  queue.push({Particle{next_id++, std::nullopt, 0.0, config.x0, 0.0}, 0});

  while (!queue.empty()) {
    Pending item = queue.top();
    queue.pop();
    Particle& p = item.particle;
    RngStream stream(seed, p.id);
    std::size_t next_obs = std::lower_bound(obs_steps.begin(), obs_steps.end(), item.first_horizon) -
                           obs_steps.begin();
    for (std::size_t step = item.first_horizon;; ++step) {
      while (next_obs < obs_steps.size() && obs_steps[next_obs] == step)
        snapshots[next_obs++].positions.push_back(p.position);
      if (step >= last_step) break;
      if (std::abs(p.position) <= eps && stream.uniform() < branch_prob) {
        const double at = static_cast<double>(step + 1) * dt;
        if (genealogy.branch_events() + 2 > config.max_population)
          throw PopulationCapExceeded(at, config.max_population);
        const std::uint64_t left = next_id++;
        const std::uint64_t right = next_id++;
        record_branch(genealogy, p.id, left, right, at, p.position);
        // Children restart at the catalyst, as in the exact model.
        queue.push({Particle{left, p.id, at, 0.0, 0.0}, step + 1});
        queue.push({Particle{right, p.id, at, 0.0, 0.0}, step + 1});
        break;
      }
      p.position += sd * stream.normal();
    }
  }
  return finish(config, std::move(snapshots), std::move(genealogy), thresholds);
}

SimResult simulate(const SimConfig& config, std::span<const double> thresholds, std::uint64_t replicate) {
  config.validate();
  if (config.mode == SimMode::discretized) return simulate_discretized(config, thresholds, replicate);
  return simulate_exact(config, thresholds, replicate);
}

double rightmost(const Snapshot& s) {
  if (s.positions.empty()) throw std::invalid_argument("rightmost: empty snapshot");
  return *std::max_element(s.positions.begin(), s.positions.end());
}

std::size_t count_above(const Snapshot& s, double x) {
  return static_cast<std::size_t>(
      std::count_if(s.positions.begin(), s.positions.end(), [x](double v) { return v >= x; }));
}

double additive_martingale(const Snapshot& s, double beta) {
  double sum = 0.0;
  for (double v : s.positions) sum += std::exp(-beta * std::abs(v));
  return std::exp(-0.5 * beta * beta * s.time) * sum;
}

ExtremeStats extreme_stats(const Snapshot& s, double beta, std::span<const double> thresholds) {
  ExtremeStats stats;
  stats.r_t = rightmost(s);
  stats.martingale = additive_martingale(s, beta);
  stats.count_above.reserve(thresholds.size());
  for (double x : thresholds) stats.count_above.emplace_back(x, count_above(s, x));
  return stats;
}

}  // namespace catbbm
