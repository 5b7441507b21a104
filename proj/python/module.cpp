#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <vector>

#include "catbbm/io.hpp"
#include "catbbm/lab.hpp"
#include "catbbm/randkit.hpp"

namespace py = pybind11;
using namespace catbbm;

namespace {

// Reports cross the boundary as plain dicts; JSON is already their schema.
py::object from_json(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

py::list reports(const std::vector<lab::VerificationReport>& rs) {
  py::list out;
  for (const auto& r : rs) out.append(from_json(io::to_json(r)));
  return out;
}

SimConfig make_config(double beta, double x0, std::vector<double> horizons, std::uint64_t seed,
                      std::size_t max_population, const std::string& mode, double dt, double epsilon) {
  SimConfig c;
  c.beta = beta;
  c.x0 = x0;
  c.horizons = std::move(horizons);
  c.seed = seed;
  c.max_population = max_population;
  c.mode = sim_mode_from_string(mode);
  c.dt = dt;
  c.epsilon = epsilon;
  c.validate();
  return c;
}

template <typename F>
std::vector<double> draws(std::uint64_t seed, std::size_t n, F&& f) {
  RngStream s(seed, 0);
  std::vector<double> out(n);
  for (auto& v : out) v = f(s);
  return out;
}

#define CONFIG_ARGS                                                                                   \
  py::arg("beta") = 1.0, py::arg("x0") = 0.0, py::arg("horizons"), py::arg("seed") = 0,               \
      py::arg("max_population") = kDefaultMaxPopulation, py::arg("mode") = "exact", py::arg("dt") = 0.0, \
      py::arg("epsilon") = 0.0

}  // namespace

PYBIND11_MODULE(catbbm, m) {
  m.doc() = "Exact simulation of catalytic branching Brownian motion, closed-form moments and checks.";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PopulationCapExceeded>(m, "PopulationCapExceeded", PyExc_RuntimeError);
  py::register_exception<lab::ReplicateFailureOverflow>(m, "ReplicateFailureOverflow", PyExc_RuntimeError);
  py::register_exception<RejectionLimitExceeded>(m, "RejectionLimitExceeded", PyExc_RuntimeError);

  m.def("normal_cdf", &std_normal_cdf);
  m.def("log_normal_cdf", &log_std_normal_cdf);
  m.def("normal_tail_ratio", &normal_tail_ratio);

  m.def("sample_hitting_time",
        [](double x, std::size_t n, std::uint64_t seed) {
          return draws(seed, n, [x](RngStream& s) { return sample_hitting_time(s, x); });
        },
        py::arg("x"), py::arg("n"), py::arg("seed") = 0);
  m.def("sample_inverse_local_time",
        [](double ell, std::size_t n, std::uint64_t seed) {
          return draws(seed, n, [ell](RngStream& s) { return sample_inverse_local_time(s, ell); });
        },
        py::arg("ell"), py::arg("n"), py::arg("seed") = 0);
  m.def("sample_bridge_max",
        [](double endpoint, double duration, std::size_t n, std::uint64_t seed) {
          return draws(seed, n, [=](RngStream& s) { return sample_bridge_max(s, endpoint, duration); });
        },
        py::arg("endpoint"), py::arg("duration"), py::arg("n"), py::arg("seed") = 0);
  m.def("sample_joint_position_localtime",
        [](double duration, std::size_t n, std::uint64_t seed) {
          RngStream s(seed, 0);
          std::vector<double> pos(n), loc(n);
          for (std::size_t i = 0; i < n; ++i) {
            const auto d = sample_joint_position_localtime(s, duration);
            pos[i] = d.position;
            loc[i] = d.local_time;
          }
          return py::make_tuple(pos, loc);
        },
        py::arg("duration"), py::arg("n"), py::arg("seed") = 0, "Returns (positions, local_times).");

  m.def("simulate",
        [](double beta, double x0, std::vector<double> horizons, std::uint64_t seed, std::size_t cap,
           const std::string& mode, double dt, double eps, std::vector<double> thresholds, std::uint64_t replicate) {
          const auto c = make_config(beta, x0, std::move(horizons), seed, cap, mode, dt, eps);
          const auto r = simulate(c, thresholds, replicate);
          py::list obs;
          for (const auto& o : r.observations) {
            py::dict counts;
            for (const auto& [x, k] : o.stats.count_above) counts[py::float_(x)] = k;
            obs.append(py::dict(py::arg("time") = o.snapshot.time, py::arg("positions") = o.snapshot.positions,
                                py::arg("r_t") = o.stats.r_t, py::arg("m_t") = o.stats.martingale,
                                py::arg("count_above") = counts));
          }
          return py::dict(py::arg("observations") = obs,
                          py::arg("branch_events") = r.genealogy.branch_events());
        },
        CONFIG_ARGS, py::arg("thresholds") = std::vector<double>{}, py::arg("replicate") = 0);

  m.def("run_replicates",
        [](double beta, double x0, std::vector<double> horizons, std::uint64_t seed, std::size_t cap,
           const std::string& mode, double dt, double eps, std::size_t n, std::vector<double> thresholds,
           unsigned threads) {
          const auto c = make_config(beta, x0, std::move(horizons), seed, cap, mode, dt, eps);
          lab::Ensemble e;
          {
            py::gil_scoped_release release;
            e = lab::run_replicates(c, n, thresholds, threads);
          }
          py::list rows;
          for (const auto& r : e.replicates) {
            if (r.failed) continue;
            for (const auto& h : r.horizons)
              rows.append(py::dict(py::arg("replicate") = r.replicate, py::arg("time") = h.time,
                                   py::arg("population") = h.population, py::arg("r_t") = h.r_t,
                                   py::arg("m_t") = h.m_t, py::arg("counts") = h.counts));
          }
          return py::dict(py::arg("rows") = rows, py::arg("failures") = e.failures(),
                          py::arg("thresholds") = e.thresholds);
        },
        CONFIG_ARGS, py::arg("n"), py::arg("thresholds") = std::vector<double>{}, py::arg("threads") = 0);

  m.def("verify",
        [](double beta, double x0, std::vector<double> horizons, std::uint64_t seed, std::size_t cap,
           const std::string& mode, double dt, double eps, std::size_t n, std::vector<double> thresholds,
           unsigned threads) {
          const auto c = make_config(beta, x0, std::move(horizons), seed, cap, mode, dt, eps);
          std::vector<lab::VerificationReport> out;
          {
            py::gil_scoped_release release;
            const auto e = lab::run_replicates(c, n, thresholds, threads);
            std::vector<oracle::MomentQuery> qs;
            for (double t : c.horizons)
              for (double x : thresholds) qs.push_back({c.x0, t, x, c.beta});
            for (auto&& part : {lab::verify_first_moment(e, qs), lab::verify_population(e), lab::verify_martingale(e),
                                lab::verify_moment_bounds(e, qs, {})})
              out.insert(out.end(), part.begin(), part.end());
          }
          return reports(out);
        },
        CONFIG_ARGS, py::arg("n"), py::arg("thresholds") = std::vector<double>{0.0}, py::arg("threads") = 0,
        "First-moment, population, martingale and moment-bound reports as dicts.");

  m.def("verify_many_to_one",
        [](double beta, double t, double x, std::uint64_t seed, std::size_t n, unsigned threads) {
          SimConfig c;
          c.beta = beta;
          c.horizons = {t};
          c.seed = seed;
          std::vector<lab::VerificationReport> out;
          {
            py::gil_scoped_release release;
            out = lab::verify_many_to_one(c, x, n, threads);
          }
          return reports(out);
        },
        py::arg("beta") = 1.0, py::arg("t") = 1.0, py::arg("x") = 0.5, py::arg("seed") = 0, py::arg("n"),
        py::arg("threads") = 0);

  auto o = m.def_submodule("oracle", "Closed-form moments and bounds.");
  o.def("expected_count_above",
        [](double x0, double t, double x, double beta) { return oracle::expected_count_above({x0, t, x, beta}); },
        py::arg("x0"), py::arg("t"), py::arg("x"), py::arg("beta") = 1.0);
  o.def("expected_count_upper",
        [](double x0, double t, double x, double beta) { return oracle::expected_count_upper({x0, t, x, beta}); },
        py::arg("x0"), py::arg("t"), py::arg("x"), py::arg("beta") = 1.0);
  o.def("expected_population",
        [](double x0, double t, double beta) {
          const auto p = oracle::expected_population(x0, t, beta);
          return py::dict(py::arg("value") = p.value, py::arg("bound") = p.bound,
                          py::arg("origin_form") = p.origin_form);
        },
        py::arg("x0"), py::arg("t"), py::arg("beta") = 1.0);
  o.def("second_moment_bound",
        [](double x0, double t, double x, double beta) { return oracle::second_moment_bound({x0, t, x, beta}); },
        py::arg("x0"), py::arg("t"), py::arg("x"), py::arg("beta") = 1.0);
  o.def("cross_moment_bound",
        [](double x0, double t, double x, double beta) { return oracle::cross_moment_bound({x0, t, x, beta}); },
        py::arg("x0"), py::arg("t"), py::arg("x"), py::arg("beta") = 1.0);
  o.def("two_time_bound",
        [](double x0, double s, double t, double x, double y, double beta) {
          const auto b = oracle::two_time_bound({x0, s, t, x, y, beta});
          return py::dict(py::arg("total") = b.total, py::arg("leading") = b.leading, py::arg("e1") = b.e1,
                          py::arg("e2") = b.e2, py::arg("e3") = b.e3, py::arg("e4") = b.e4);
        },
        py::arg("x0"), py::arg("s"), py::arg("t"), py::arg("x"), py::arg("y"), py::arg("beta") = 1.0);
  o.def("w_limit_cdf", [](double x, double beta, std::vector<double> m) { return oracle::w_limit_cdf(x, beta, m); },
        py::arg("x"), py::arg("beta"), py::arg("m_samples"));
}
