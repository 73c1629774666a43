#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dslt/chaos_variance.hpp"
#include "dslt/cov_geometry.hpp"
#include "dslt/fbm.hpp"
#include "dslt/mc_dslt.hpp"
#include "dslt/quadrature.hpp"
#include "dslt/special_functions.hpp"

namespace py = pybind11;
using namespace dslt;

namespace {

QuadConfig quad(double rel_tol, long max_subdivisions, int workers) {
  QuadConfig q;
  q.rel_tol = rel_tol;
  q.max_subdivisions = max_subdivisions;
  q.workers = workers;
  return q;
}

py::dict series_dict(const SeriesResult& r) {
  py::dict d;
  std::vector<int> ns;
  std::vector<double> vals, errs;
  for (const auto& t : r.terms) {
    ns.push_back(t.n);
    vals.push_back(t.value);
    errs.push_back(t.quad_error);
  }
  d["kind"] = r.kind;
  d["n"] = ns;
  d["terms"] = vals;
  d["quad_errors"] = errs;
  d["partial_sums"] = r.partial_sums;
  d["sum"] = r.sum();
  d["tail_estimate"] = r.tail_estimate;
  d["converged"] = r.converged;
  d["divergent"] = r.divergent;
  d["decay_exponent"] = r.decay_exponent;
  return d;
}

py::dict triple_dict(const CovTriple& t) {
  py::dict d;
  d["lambda"] = t.lambda;
  d["rho"] = t.rho;
  d["mu"] = t.mu;
  d["gamma"] = t.gamma ? py::cast(*t.gamma) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.attr("__version__") = "0.1.0";

  py::register_exception<Divergence>(m, "Divergence", PyExc_ArithmeticError);
  py::register_exception<NonConvergence>(m, "NonConvergence", PyExc_RuntimeError);

  m.def(
      "threshold",
      [](int k, const std::string& kind) {
        const Rational r = threshold(DerivOrder(k), threshold_kind_from_string(kind));
        return py::make_tuple(r.num, r.den);
      },
      py::arg("k"), py::arg("kind") = "raw", "Upper end of the existence interval in H, as (num, den).");

  m.def(
      "gauss_2f1", [](double a, double b, double c, double z) { return gauss_2f1(a, b, c, z); }, py::arg("a"),
      py::arg("b"), py::arg("c"), py::arg("z"));

  m.def(
      "gaussian_density_deriv", [](int k, double eps, double x) { return gaussian_density_deriv(k, eps, x); },
      py::arg("k"), py::arg("eps"), py::arg("x"));

  m.def(
      "covariance_rh", [](double h, double t, double s) { return covariance_rh(HurstParam(h), t, s); }, py::arg("h"),
      py::arg("t"), py::arg("s"));

  m.def(
      "simulate_paths",
      [](double h, double t, int n_steps, std::size_t n_paths, std::uint64_t seed, int workers) {
        const PathBatch b = simulate_paths(HurstParam(h), TimeGrid::uniform(t, n_steps), n_paths, seed, workers);
        py::array_t<double> out({b.n_paths, b.grid.size()});
        std::copy(b.values.begin(), b.values.end(), out.mutable_data());
        return out;
      },
      py::arg("h"), py::arg("t"), py::arg("n_steps"), py::arg("n_paths"), py::arg("seed") = 1, py::arg("workers") = 0,
      "Paths at t j/n_steps, j = 1..n_steps, shape (n_paths, n_steps).");

  m.def(
      "kernel_inner_product",
      [](double h, double r, double s, double r2, double s2) {
        const auto k = kernel_inner_product(HurstParam(h), {r, s}, {r2, s2});
        return py::make_tuple(k.value, k.error_estimate);
      },
      py::arg("h"), py::arg("r"), py::arg("s"), py::arg("r2"), py::arg("s2"));

  m.def(
      "cov_triple",
      [](double h, double r, double s, double r2, double s2) {
        return triple_dict(cov_triple(HurstParam(h), IntervalPair(r, s, r2, s2)));
      },
      py::arg("h"), py::arg("r"), py::arg("s"), py::arg("r2"), py::arg("s2"));

  m.def(
      "classify_region",
      [](double r, double s, double r2, double s2) {
        const RegionTag t = classify_region(IntervalPair(r, s, r2, s2));
        py::dict d;
        d["region"] = to_string(t.region);
        d["a"] = t.a;
        d["b"] = t.b;
        d["c"] = t.c;
        d["swapped"] = t.swapped;
        return d;
      },
      py::arg("r"), py::arg("s"), py::arg("r2"), py::arg("s2"));

  m.def(
      "chaos_coeff_norm_sq",
      [](int n, int k, double eps, double h, double t, double rel_tol) {
        QuadConfig q;
        q.rel_tol = rel_tol;
        const TermValue v = chaos_coeff_norm_sq({n, DerivOrder(k), eps, t, HurstParam(h)}, q);
        return py::make_tuple(v.value, v.error);
      },
      py::arg("n"), py::arg("k"), py::arg("eps"), py::arg("h"), py::arg("t") = 1.0, py::arg("rel_tol") = 1e-6);

  m.def(
      "mean_alpha", [](int k, double h, double eps, double t) { return mean_alpha(HurstParam(h), t, eps, DerivOrder(k)); },
      py::arg("k"), py::arg("h"), py::arg("eps"), py::arg("t") = 1.0);

  m.def(
      "mean_slt", [](double h, double eps, double t) { return mean_slt(HurstParam(h), t, eps); }, py::arg("h"),
      py::arg("eps"), py::arg("t") = 1.0);

  m.def(
      "variance_series",
      [](int k, double h, double eps, int n_max, bool renormalized, double t, double rel_tol, long max_subdivisions,
         int workers) {
        return series_dict(variance_series(HurstParam(h), t, eps, DerivOrder(k), n_max, renormalized,
                                           quad(rel_tol, max_subdivisions, workers)));
      },
      py::arg("k"), py::arg("h"), py::arg("eps"), py::arg("n_max") = 400, py::arg("renormalized") = false,
      py::arg("t") = 1.0, py::arg("rel_tol") = 1e-7, py::arg("max_subdivisions") = 60000, py::arg("workers") = 0);

  m.def(
      "d12_series",
      [](int k, double h, int n_max, double t, double rel_tol, int workers) {
        return series_dict(d12_series(HurstParam(h), t, DerivOrder(k), n_max, quad(rel_tol, 60000, workers)));
      },
      py::arg("k"), py::arg("h"), py::arg("n_max") = 200, py::arg("t") = 1.0, py::arg("rel_tol") = 1e-6,
      py::arg("workers") = 0);

  m.def(
      "finiteness_probe",
      [](const std::string& integral, std::vector<double> hs, int k_param, double t, int workers) {
        QuadConfig q = QuadConfig::probe_default();
        q.workers = workers;
        std::vector<HurstParam> hp;
        for (double h : hs) hp.emplace_back(h);
        py::list out;
        for (const auto& r : finiteness_probe(key_integral_from_string(integral), hp, k_param, t, q)) {
          py::dict d;
          d["H"] = r.h.h;
          d["verdict"] = to_string(r.verdict);
          d["fitted_exponent"] = r.fitted_exponent;
          d["extrapolated_value"] = r.extrapolated_value;
          d["cutoff_history"] = r.cutoff_history;
          out.append(d);
        }
        return out;
      },
      py::arg("integral"), py::arg("hs"), py::arg("k_param") = 1, py::arg("t") = 1.0, py::arg("workers") = 0);

  m.def(
      "run_mc",
      [](int k, double h, std::vector<double> eps, std::size_t n_paths, int grid_points, std::uint64_t seed,
         bool renormalize, double t, int workers) {
        McConfig c;
        c.k = k;
        c.h = HurstParam(h);
        c.eps_list = std::move(eps);
        c.n_paths = n_paths;
        c.grid_points = grid_points;
        c.seed = seed;
        c.renormalize = renormalize;
        c.t = t;
        c.workers = workers;
        const McRun run = run_mc(c);
        py::list est;
        for (const auto& e : run.estimates) {
          py::dict d;
          d["eps"] = e.eps;
          d["mean"] = e.corrected_mean;
          d["variance"] = e.corrected_variance;
          d["std_error"] = e.corrected_std_error;
          d["raw_mean"] = e.mean;
          d["raw_variance"] = e.variance;
          d["subtracted_mean"] = e.subtracted_mean;
          d["bias_ok"] = e.bias_ok;
          d["resolution_warning"] = e.resolution_warning;
          est.append(d);
        }
        py::dict out;
        out["estimates"] = est;
        out["samples"] = run.samples;
        out["warnings"] = run.warnings;
        return out;
      },
      py::arg("k"), py::arg("h"), py::arg("eps"), py::arg("n_paths") = 1000, py::arg("grid_points") = 256,
      py::arg("seed") = 1, py::arg("renormalize") = false, py::arg("t") = 1.0, py::arg("workers") = 0);
}
