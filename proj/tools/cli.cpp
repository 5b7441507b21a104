#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "catbbm/engine.hpp"
#include "catbbm/io.hpp"
#include "catbbm/lab.hpp"
#include "catbbm/oracle.hpp"

namespace catbbm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Per-ensemble seed tags for `verify`, so each grid draws its own streams.
enum : std::uint64_t { kOriginTag = 1, kPlusOneTag, kMinusOneTag, kOffsetTag, kManyToOneTag };

struct Common {
  double beta = 1.0;
  double x0 = 0.0;
  std::vector<double> horizons;
  std::uint64_t seed = 1;
  std::size_t replicates = 0;
  std::string mode = "exact";
  double dt = 0.0;
  double epsilon = 0.0;
  std::size_t cap = kDefaultMaxPopulation;
  std::string out;
  std::vector<double> thresholds;
  std::string config_path;
};

void add_model_flags(CLI::App& app, Common& c) {
  app.add_option("--beta", c.beta, "Branching intensity per unit local time")->capture_default_str();
  app.add_option("--seed", c.seed, "Master seed")->capture_default_str();
  app.add_option("--cap", c.cap, "Population cap per replicate")->capture_default_str();
  app.add_option("--out", c.out, "Output directory");
  app.add_option("--config", c.config_path, "key=value file; command-line flags take precedence");
}

SimConfig make_config(const Common& c) {
  SimConfig cfg;
  cfg.beta = c.beta;
  cfg.x0 = c.x0;
  cfg.horizons = c.horizons;
  cfg.seed = c.seed;
  cfg.max_population = c.cap;
  cfg.mode = sim_mode_from_string(c.mode);
  cfg.dt = c.dt;
  cfg.epsilon = c.epsilon;
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void write_manifest(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                    json resolved, std::vector<std::string> outputs) {
  json m{{"command", command},
         {"args", args},
         {"resolved", std::move(resolved)},
         {"outputs", std::move(outputs)},
         {"version", "0.1.0"}};
  write_text(dir / "manifest.json", dump(m));
}

// "s:t:x:y" entries.
std::vector<oracle::TwoTimeQuery> parse_two_time(const std::vector<std::string>& specs, double beta, double x0) {
  std::vector<oracle::TwoTimeQuery> out;
  for (const auto& spec : specs) {
    std::vector<double> v;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) {
      try {
        v.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("--two-time: cannot parse '" + spec + "' (expected s:t:x:y)");
      }
    }
    if (v.size() != 4) throw ConfigError("--two-time: '" + spec + "' must have four fields s:t:x:y");
    oracle::TwoTimeQuery q{x0, v[0], v[1], v[2], v[3], beta};
    try {
      q.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("--two-time: ") + e.what());
    }
    out.push_back(q);
  }
  return out;
}

void sorted_union(std::vector<double>& into, const std::vector<double>& extra) {
  into.insert(into.end(), extra.begin(), extra.end());
  std::sort(into.begin(), into.end());
  into.erase(std::unique(into.begin(), into.end()), into.end());
}

int cmd_simulate(const Common& c, bool dt_given, bool eps_given, const std::vector<std::string>& args,
                 std::ostream& out) {
  if (c.mode == "discretized" && (!dt_given || !eps_given))
    throw ConfigError("--mode discretized requires both --dt and --epsilon");
  if (c.out.empty()) throw ConfigError("--out is required");
  const SimConfig cfg = make_config(c);
  cfg.validate();
  fs::create_directories(c.out);
  json resolved = io::to_json(cfg);
  resolved["replicates"] = c.replicates;
  resolved["thresholds"] = c.thresholds;
  try {
    const auto ensemble = lab::run_replicates(cfg, c.replicates, c.thresholds);
    std::ostringstream csv;
    io::write_ensemble_csv(csv, ensemble);
    write_text(fs::path(c.out) / "replicates.csv", csv.str());
    resolved["failed_replicates"] = ensemble.failures();
    write_manifest(c.out, "simulate", args, resolved, {"replicates.csv", "manifest.json"});
    out << "wrote " << (fs::path(c.out) / "replicates.csv").string() << " (" << ensemble.successes()
        << " replicates)\n";
    return kSuccess;
  } catch (const lab::ReplicateFailureOverflow& e) {
    resolved["error"] = e.what();
    write_manifest(c.out, "simulate", args, resolved, {"manifest.json"});
    throw;
  }
}

struct VerifyOptions {
  std::string target = "all";
  std::vector<std::string> two_time;
};

int cmd_verify(const Common& c, const VerifyOptions& v, const std::vector<std::string>& args, std::ostream& out) {
  const bool all = v.target == "all";
  const bool moments = all || v.target == "moments";
  const bool martingale = all || v.target == "martingale";
  const bool bounds = all || v.target == "bounds";
  const bool many_to_one = all || v.target == "many-to-one";
  const std::size_t n = c.replicates;
  const double beta = c.beta;

  std::vector<oracle::TwoTimeQuery> two_time = parse_two_time(
      v.two_time.empty() ? std::vector<std::string>{"1:2:0.5:1", "0.5:1:0:0.5", "0.5:2:0:1"} : v.two_time, beta, 0.0);

  // Origin grid: first moments, population, martingale, bounds.
  std::vector<double> origin_horizons{0.5, 1.0, 2.0};
  std::vector<double> origin_thresholds{0.0, 0.5, 1.0};
  for (const auto& q : two_time) {
    sorted_union(origin_horizons, {q.s, q.t});
    sorted_union(origin_thresholds, {q.x, q.y});
  }

  SimConfig base = make_config(c);
  base.mode = SimMode::exact;
  auto config_for = [&](double x0, std::vector<double> horizons, std::uint64_t tag) {
    SimConfig cfg = base;
    cfg.x0 = x0;
    cfg.horizons = std::move(horizons);
    cfg.seed = derive_seed(c.seed, tag);
    cfg.validate();
    return cfg;
  };
  const SimConfig origin_cfg = config_for(0.0, origin_horizons, kOriginTag);
  const SimConfig offset_cfg = config_for(0.7, {0.5, 1.0, 2.0}, kOffsetTag);

  std::vector<lab::VerificationReport> reports;
  auto append = [&](std::vector<lab::VerificationReport> r) {
    reports.insert(reports.end(), std::make_move_iterator(r.begin()), std::make_move_iterator(r.end()));
  };

  std::optional<lab::Ensemble> origin;
  if (moments || martingale || bounds) origin = lab::run_replicates(origin_cfg, n, origin_thresholds);
  std::optional<lab::Ensemble> offset;
  if (moments || martingale) offset = lab::run_replicates(offset_cfg, n, {});

  if (moments) {
    std::vector<oracle::MomentQuery> grid;
    for (double t : {0.5, 1.0, 2.0})
      for (double x : {0.0, 0.5, 1.0}) grid.push_back({0.0, t, x, beta});
    append(lab::verify_first_moment(*origin, grid));
    append(lab::verify_population(*origin));
    append(lab::verify_population(*offset));
    for (auto [x0, tag] : {std::pair{1.0, std::uint64_t{kPlusOneTag}}, {-1.0, std::uint64_t{kMinusOneTag}}}) {
      const auto e = lab::run_replicates(config_for(x0, {1.0}, tag), n, {0.0, 1.0});
      const std::vector<oracle::MomentQuery> q{{x0, 1.0, 0.0, beta}, {x0, 1.0, 1.0, beta}};
      append(lab::verify_first_moment(e, q));
    }
  }
  if (martingale) {
    append(lab::verify_martingale(*origin));
    append(lab::verify_martingale(*offset));
  }
  if (bounds) {
    std::vector<oracle::MomentQuery> grid;
    for (double t : {0.5, 1.0, 2.0})
      for (double x : {0.0, 0.5, 1.0}) grid.push_back({0.0, t, x, beta});
    append(lab::verify_moment_bounds(*origin, grid, two_time));
  }
  if (many_to_one) append(lab::verify_many_to_one(config_for(0.0, {1.0}, kManyToOneTag), 0.5, n));

  json doc = io::report_document(reports);
  doc["target"] = v.target;
  const std::string text = dump(doc);
  if (c.out.empty()) {
    out << text;
  } else {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / "report.json", text);
    json resolved{{"target", v.target}, {"beta", beta},  {"seed", c.seed},
                  {"replicates", n},    {"cap", c.cap}, {"two_time", v.two_time}};
    write_manifest(c.out, "verify", args, resolved, {"report.json", "manifest.json"});
    const auto& s = doc["summary"];
    out << "verify " << v.target << ": " << s["pass"] << " pass, " << s["fail"] << " fail, " << s["warn"]
        << " warn\n";
  }
  const bool failed = std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.hard_failure(); });
  return failed ? kAssertionFailure : kSuccess;
}

struct StudyOptions {
  std::string target;
  double t_proxy = 0.0;
  std::size_t reference_replicates = 0;
};

int cmd_study(const Common& c, const StudyOptions& s, const std::vector<std::string>& args, std::ostream& out) {
  if (c.horizons.size() < 2) throw ConfigError("--horizons: trend assertions need at least 2 horizons");
  SimConfig cfg = make_config(c);
  cfg.mode = SimMode::exact;
  cfg.validate();
  json summary;
  std::string csv_name;
  std::ostringstream csv;
  json resolved = io::to_json(cfg);
  resolved["replicates"] = c.replicates;
  resolved["target"] = s.target;

  if (s.target == "limit-law") {
    const double t_proxy = s.t_proxy > 0.0 ? s.t_proxy : 2.0 * lab::kMinProxyExponent / (cfg.beta * cfg.beta);
    const std::size_t n_ref = s.reference_replicates > 0 ? s.reference_replicates : c.replicates;
    SimConfig ref_cfg = cfg;
    ref_cfg.seed = derive_seed(cfg.seed, 0x4d494e46ULL);
    const auto m = lab::estimate_m_infinity(ref_cfg, t_proxy, n_ref);
    const auto rep = lab::limit_law_study(cfg, cfg.horizons, c.replicates, m);
    io::write_limit_law_csv(csv, rep);
    summary = io::to_json(rep);
    summary["t_proxy"] = t_proxy;
    resolved["t_proxy"] = t_proxy;
    resolved["reference_replicates"] = n_ref;
    csv_name = "limit_law.csv";
  } else {
    const auto rep = lab::fluctuation_study(cfg, cfg.horizons, c.replicates);
    io::write_fluctuation_csv(csv, rep);
    summary = io::to_json(rep);
    csv_name = "fluctuations.csv";
  }

  if (c.out.empty()) {
    out << csv.str() << dump(summary);
  } else {
    fs::create_directories(c.out);
    write_text(fs::path(c.out) / csv_name, csv.str());
    write_text(fs::path(c.out) / "summary.json", dump(summary));
    write_manifest(c.out, "study", args, resolved, {csv_name, "summary.json", "manifest.json"});
    out << "wrote " << (fs::path(c.out) / csv_name).string() << '\n';
  }
  // Study verdicts are qualitative and never change the exit code.
  return kSuccess;
}

}  // namespace

std::vector<std::string> merge_config_file(std::vector<std::string> args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream f(path);
  if (!f) throw ConfigError("--config: cannot open '" + path + "'");
  auto given = [&](const std::string& key) {
    return std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == "--" + key || a.rfind("--" + key + "=", 0) == 0;
    });
  };
  std::vector<std::string> extra;
  std::string line;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ConfigError("--config: malformed line '" + line + "'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key == "config") throw ConfigError("--config: bad key in '" + line + "'");
    if (!given(key)) {
      extra.push_back("--" + key);
      extra.push_back(value);
    }
  }
  args.insert(args.end(), extra.begin(), extra.end());
  return args;
}

int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  const std::vector<std::string> original = args;
  CLI::App app{"Catalytic branching Brownian motion: simulate, verify, study"};
  app.require_subcommand(1);

  Common c;
  bool dt_given = false, eps_given = false;

  auto* sim = app.add_subcommand("simulate", "Run replicates and write per-horizon statistics");
  add_model_flags(*sim, c);
  sim->add_option("--x0", c.x0, "Start position")->capture_default_str();
  sim->add_option("--horizons", c.horizons, "Observation times, comma separated")->delimiter(',')->required();
  sim->add_option("--replicates", c.replicates, "Number of replicates")->default_val(1000);
  sim->add_option("--mode", c.mode, "exact | discretized")
      ->check(CLI::IsMember({"exact", "discretized"}))
      ->capture_default_str();
  auto* dt_opt = sim->add_option("--dt", c.dt, "Euler step (discretized mode)");
  auto* eps_opt = sim->add_option("--epsilon", c.epsilon, "Catalyst half-width (discretized mode)");
  sim->add_option("--thresholds", c.thresholds, "Levels x for |N_t^x|, comma separated")->delimiter(',');

  VerifyOptions vopt;
  auto* ver = app.add_subcommand("verify", "Compare Monte Carlo estimates with closed forms and bounds");
  add_model_flags(*ver, c);
  ver->add_option("target", vopt.target, "moments | martingale | bounds | many-to-one | all")
      ->check(CLI::IsMember({"moments", "martingale", "bounds", "many-to-one", "all"}))
      ->capture_default_str();
  ver->add_option("--replicates", c.replicates, "Replicates per ensemble")->default_val(100000);
  ver->add_option("--two-time", vopt.two_time, "Two-time bound entries s:t:x:y, comma separated")->delimiter(',');

  StudyOptions sopt;
  auto* study = app.add_subcommand("study", "Limit-law and fluctuation studies of the rightmost particle");
  add_model_flags(*study, c);
  study->add_option("target", sopt.target, "limit-law | fluctuations")
      ->check(CLI::IsMember({"limit-law", "fluctuations"}))
      ->required();
  study->add_option("--x0", c.x0, "Start position")->capture_default_str();
  study->add_option("--horizons", c.horizons, "Horizon ladder, comma separated")->delimiter(',')->required();
  study->add_option("--replicates", c.replicates, "Replicates")->default_val(10000);
  study->add_option("--t-proxy", sopt.t_proxy, "Horizon whose M_t stands in for M_inf (default 8 / beta^2)");
  study->add_option("--reference-replicates", sopt.reference_replicates, "Samples of the M_inf proxy");

  try {
    args = merge_config_file(std::move(args));
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    dt_given = dt_opt->count() > 0;
    eps_given = eps_opt->count() > 0;
    if (*sim) return cmd_simulate(c, dt_given, eps_given, original, out);
    if (*ver) return cmd_verify(c, vopt, original, out);
    return cmd_study(c, sopt, original, out);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "catbbm: " << e.what() << '\n';
    return kConfigError;
  } catch (const lab::ReplicateFailureOverflow& e) {
    err << "catbbm: " << e.what() << '\n';
    return kAssertionFailure;
  } catch (const PopulationCapExceeded& e) {
    err << "catbbm: " << e.what() << '\n';
    return kAssertionFailure;
  } catch (const std::invalid_argument& e) {  // ConfigError, GridMismatch, oracle preconditions
    err << "catbbm: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    err << "catbbm: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace catbbm::cli
