#include "cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>

#include "dslt/chaos_variance.hpp"
#include "dslt/cov_geometry.hpp"
#include "dslt/fbm.hpp"
#include "dslt/mc_dslt.hpp"
#include "dslt/parallel.hpp"
#include "dslt/quadrature.hpp"
#include "dslt/special_functions.hpp"
#include "json.hpp"

#ifndef DSLT_VERSION
#define DSLT_VERSION "0.0.0"
#endif

namespace dslt::cli {

namespace {

using nlohmann::json;

std::string fmt(double x) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

template <class T>
std::string fmt_value(const T& v) {
  if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
  else if constexpr (std::is_floating_point_v<T>) return fmt(v);
  else if constexpr (std::is_same_v<T, std::string>) return v;
  else if constexpr (std::is_integral_v<T>) return std::to_string(v);
  else {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_value(v[i]);
    return s;
  }
}

class NonConvergenceExit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One subcommand: its options plus a way to print their effective values.
struct Command {
  CLI::App* app = nullptr;
  std::vector<std::pair<std::string, std::function<std::string()>>> values;

  template <class T>
  CLI::Option* opt(const std::string& name, T& var, const std::string& desc) {
    // "k-param,k-hat" registers aliases; the first name is the manifest key
    std::string flags, key = name.substr(0, name.find(','));
    for (std::size_t a = 0; a != std::string::npos;) {
      const auto b = name.find(',', a);
      flags += (flags.empty() ? "--" : ",--") + name.substr(a, b == std::string::npos ? b : b - a);
      a = b == std::string::npos ? b : b + 1;
    }
    auto* o = app->add_option(flags, var, desc)->capture_default_str();
    if constexpr (!std::is_arithmetic_v<T> && !std::is_same_v<T, std::string>) o->delimiter(',');
    values.emplace_back(key, [&var] { return fmt_value(var); });
    return o;
  }
  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    auto* o = app->add_flag("--" + name, var, desc);
    values.emplace_back(name, [&var] { return fmt_value(var); });
    return o;
  }
};

struct Common {
  std::string output;
  std::string format;
  std::string manifest;
  int threads = 0;
};

struct Params {
  Common common;
  int k = 1;
  double hurst = 0.3;
  std::vector<double> hurst_list;
  double eps = 0.1;
  std::vector<double> eps_list;
  double t = 1.0;
  int n_max = 400;
  bool renormalized = false;
  bool d12 = false;
  double rel_tol = 1e-7;
  long max_subdivisions = 60000;
  // mc
  std::size_t paths = 10000;
  int grid = 256;
  std::uint64_t seed = 1;
  std::string paths_in, save_paths;
  int richardson_levels = 3;
  bool compare = false;
  bool cauchy = false;
  int bootstrap = 1000;
  // probe
  std::string integral = "odd";
  int k_param = 1;
  std::vector<double> cutoffs;
  double sigma = 0.1;
  int fit_points = 4;
  double quad_rel_tol = 1e-4;
  // kernel / cov
  double r = 0.0, s = 1.0, r2 = 0.0, s2 = 1.0;
  double tol = 1e-10;
  // sweep
  std::string quantity = "threshold";
  std::vector<int> k_list;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void emit(const Common& c, const std::string& text, std::ostream& out) {
  if (c.output.empty() || c.output == "-") {
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    return;
  }
  std::ofstream f(c.output);
  if (!f) throw std::invalid_argument("cannot open output file '" + c.output + "'");
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

std::string pick_format(const Common& c, const std::string& dflt) {
  const std::string f = c.format.empty() ? dflt : c.format;
  if (f != "csv" && f != "json") throw std::invalid_argument("--format must be csv or json");
  return f;
}

QuadConfig quad_config(const Params& p) {
  QuadConfig q;
  q.rel_tol = p.rel_tol;
  q.max_subdivisions = p.max_subdivisions;
  q.workers = p.common.threads;
  return q;
}

void check_parity(int k, bool renormalized) {
  if (renormalized && k % 2 == 1)
    throw std::invalid_argument("--renormalized needs even k: odd k has mean zero, there is nothing to subtract");
}

std::string series_csv(const SeriesResult& r) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "n,value,quad_error,partial_sum\n";
  for (std::size_t i = 0; i < r.terms.size(); ++i)
    os << r.terms[i].n << ',' << r.terms[i].value << ',' << r.terms[i].quad_error << ',' << r.partial_sums[i] << '\n';
  return os.str();
}

int cmd_variance(const Params& p, std::ostream& out, std::string& summary) {
  const HurstParam h(p.hurst);
  const DerivOrder k(p.k);
  check_parity(p.k, p.renormalized);
  SeriesResult r;
  if (p.d12) {
    if (p.eps != 0.0) throw std::invalid_argument("--d12 is the eps = 0 series; pass --eps 0");
    QuadConfig q = quad_config(p);
    q.sigma = p.sigma;
    r = d12_series(h, p.t, k, p.n_max, q);
  } else {
    r = variance_series(h, p.t, p.eps, k, p.n_max, p.renormalized, quad_config(p));
  }
  emit(p.common, pick_format(p.common, "json") == "json" ? r.to_json() : series_csv(r), out);
  summary = std::string(p.d12 ? "d12" : "variance") + " sum = " + fmt(r.sum()) + ", tail = " + fmt(r.tail_estimate) +
            (r.converged ? ", converged" : ", NOT converged");
  if (!r.converged) throw NonConvergenceExit(summary);
  return kExitOk;
}

int cmd_mean(const Params& p, std::ostream& out, std::string& summary) {
  const HurstParam h(p.hurst);
  if (p.k < 0) throw std::invalid_argument("--k must be >= 0");
  const double m = p.k == 0 ? mean_slt(h, p.t, p.eps) : mean_alpha(h, p.t, p.eps, DerivOrder(p.k));
  if (pick_format(p.common, "json") == "json") {
    emit(p.common, json(m).dump(), out);
  } else {
    emit(p.common, "k,H,t,eps,mean\n" + std::to_string(p.k) + "," + fmt(p.hurst) + "," + fmt(p.t) + "," + fmt(p.eps) +
                       "," + fmt(m) + "\n",
         out);
  }
  summary = "mean = " + fmt(m);
  return kExitOk;
}

int cmd_mc(const Params& p, std::ostream& out, std::ostream& err, std::string& summary) {
  McConfig c;
  c.k = p.k;
  c.h = HurstParam(p.hurst);
  c.t = p.t;
  c.n_paths = p.paths;
  c.grid_points = p.grid;
  c.seed = p.seed;
  c.eps_list = p.eps_list.empty() ? std::vector<double>{p.eps} : p.eps_list;
  c.renormalize = p.renormalized;
  c.workers = p.common.threads;
  c.richardson_levels = p.richardson_levels;
  check_parity(p.k, p.renormalized);
  McRun run;
  if (!p.paths_in.empty()) {
    const PathBatch b = read_paths_binary(p.paths_in);
    run = run_mc(c, b);
  } else {
    c.validate();
    const PathBatch b = simulate_paths(c.h, TimeGrid::uniform(c.t, c.grid_points), c.n_paths, c.seed, c.workers);
    if (!p.save_paths.empty()) write_paths_binary(b, p.save_paths);
    run = run_mc(c, b);
  }
  for (const auto& w : run.warnings) err << "warning: " << w << '\n';

  std::vector<VarianceComparison> comps;
  bool refused = false;
  std::string refusal;
  if (p.compare) {
    if (p.k < 1) throw std::invalid_argument("--compare needs k >= 1");
    for (std::size_t e = 0; e < run.cfg.eps_list.size(); ++e) {
      const SeriesResult s = variance_series(run.cfg.h, run.cfg.t, run.cfg.eps_list[e], DerivOrder(p.k), p.n_max,
                                             p.renormalized, quad_config(p));
      if (!s.converged) {
        refused = true;
        refusal = "series at eps = " + fmt(run.cfg.eps_list[e]) + " did not converge; comparison refused";
        continue;
      }
      comps.push_back(compare_variance(run, e, s, p.bootstrap));
    }
  }
  const bool want_cauchy = p.cauchy && run.cfg.eps_list.size() >= 3;
  if (pick_format(p.common, "csv") == "csv") {
    std::ostringstream os;
    write_mc_csv(run, os);
    os << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& cp : comps) {
      os << cp.eps << ",series_variance," << cp.series_value << '\n';
      os << cp.eps << ",compared_variance," << cp.mc_variance << '\n';
      os << cp.eps << ",compared_variance_se," << cp.mc_variance_se << '\n';
      os << cp.eps << ",compare_z," << cp.z << '\n';
      os << cp.eps << ",compare_pass," << (cp.pass ? 1 : 0) << '\n';
    }
    emit(p.common, os.str(), out);
  } else {
    json j = json::parse(mc_json(run));
    if (want_cauchy) j["cauchy"] = json::parse(cauchy_json(cauchy_diagnostic(run)));
    if (p.compare) {
      json a = json::array();
      for (const auto& cp : comps) a.push_back(json::parse(comparison_json(cp)));
      j["comparisons"] = a;
    }
    emit(p.common, j.dump(2), out);
  }
  const McEstimate& last = run.estimates.back();
  summary = "mc: " + std::to_string(run.cfg.n_paths) + " paths, eps = " + fmt(last.eps) + ": mean " +
            fmt(last.corrected_mean) + " +- " + fmt(last.corrected_std_error) + ", variance " +
            fmt(last.corrected_variance);
  if (!comps.empty()) {
    const bool all = std::all_of(comps.begin(), comps.end(), [](const auto& x) { return x.pass; });
    summary += all ? "; variance matches the series" : "; variance comparison FAILED";
  }
  if (refused) throw NonConvergenceExit(refusal);
  return kExitOk;
}

QuadConfig probe_config(const Params& p) {
  QuadConfig q = QuadConfig::probe_default();
  if (!p.cutoffs.empty()) q.diagonal_cutoff_sequence = p.cutoffs;
  q.sigma = p.sigma;
  q.fit_points = p.fit_points;
  q.probe_quad_rel_tol = p.quad_rel_tol;
  q.workers = p.common.threads;
  return q;
}

int cmd_probe(const Params& p, std::ostream& out, std::string& summary) {
  const KeyIntegral id = key_integral_from_string(p.integral);
  std::vector<HurstParam> hs;
  for (double h : (p.hurst_list.empty() ? std::vector<double>{p.hurst} : p.hurst_list)) hs.emplace_back(h);
  const auto reps = finiteness_probe(id, hs, p.k_param, p.t, probe_config(p));
  if (pick_format(p.common, "csv") == "csv") {
    std::ostringstream os;
    write_probe_csv(reps, os);
    emit(p.common, os.str(), out);
  } else {
    emit(p.common, probe_json(reps), out);
  }
  summary = "probe " + p.integral + " (threshold " + fmt(key_integral_threshold(id, p.k_param)) + "):";
  for (const auto& r : reps) summary += " H=" + fmt(r.h.h) + " " + to_string(r.verdict);
  return kExitOk;
}

int cmd_kernel(const Params& p, std::ostream& out, std::string& summary) {
  const HurstParam h(p.hurst);
  const IntervalPair ip(p.r, p.s, p.r2, p.s2);
  const KernelInnerProduct k = kernel_inner_product(h, {p.r, p.s}, {p.r2, p.s2}, p.tol);
  const double mu = cov_triple(h, ip).mu;
  json j = {{"H", p.hurst}, {"r", p.r},         {"s", p.s},   {"r2", p.r2},
            {"s2", p.s2},   {"value", k.value}, {"error_estimate", k.error_estimate},
            {"mu", mu},     {"abs_diff", std::abs(k.value - mu)}};
  if (pick_format(p.common, "json") == "json") {
    emit(p.common, j.dump(2), out);
  } else {
    emit(p.common, "H,r,s,r2,s2,value,error_estimate,mu\n" + fmt(p.hurst) + "," + fmt(p.r) + "," + fmt(p.s) + "," +
                       fmt(p.r2) + "," + fmt(p.s2) + "," + fmt(k.value) + "," + fmt(k.error_estimate) + "," + fmt(mu) +
                       "\n",
         out);
  }
  summary = "kernel inner product = " + fmt(k.value) + " (mu = " + fmt(mu) + ")";
  return kExitOk;
}

int cmd_cov(const Params& p, std::ostream& out, std::string& summary) {
  const HurstParam h(p.hurst);
  const IntervalPair ip(p.r, p.s, p.r2, p.s2);
  const CovTriple tr = cov_triple(h, ip);
  const RegionTag tag = classify_region(ip);
  json j = {{"H", p.hurst},
            {"lambda", tr.lambda},
            {"rho", tr.rho},
            {"mu", tr.mu},
            {"gamma", tr.gamma ? json(*tr.gamma) : json(nullptr)},
            {"defect", tr.lambda * tr.rho - tr.mu * tr.mu},
            {"region", to_string(tag.region)},
            {"a", tag.a},
            {"b", tag.b},
            {"c", tag.c},
            {"swapped", tag.swapped}};
  j["lnd_bound"] = tag.region == Region::boundary ? json(nullptr) : json(lnd_bound_expression(h, tag));
  if (pick_format(p.common, "json") == "json") {
    emit(p.common, j.dump(2), out);
  } else {
    std::ostringstream os;
    os << "field,value\n";
    for (auto it = j.begin(); it != j.end(); ++it) os << it.key() << ',' << it.value().dump() << '\n';
    emit(p.common, os.str(), out);
  }
  summary = "region " + to_string(tag.region) + ", lambda " + fmt(tr.lambda) + ", rho " + fmt(tr.rho) + ", mu " +
            fmt(tr.mu);
  return kExitOk;
}

int cmd_sweep(const Params& p, std::ostream& out, std::string& summary) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "quantity,series,x_name,x,y_name,y,label\n";
  std::size_t rows = 0;
  auto row = [&](const std::string& series, const std::string& xn, double x, const std::string& yn, double y,
                 const std::string& label) {
    os << p.quantity << ',' << series << ',' << xn << ',' << x << ',' << yn << ',' << y << ',' << label << '\n';
    ++rows;
  };
  const std::vector<double> hs = p.hurst_list.empty() ? std::vector<double>{p.hurst} : p.hurst_list;
  const std::vector<double> es = p.eps_list.empty() ? std::vector<double>{p.eps} : p.eps_list;
  if (p.quantity == "threshold") {
    std::vector<int> ks = p.k_list;
    if (ks.empty())
      for (int k = 1; k <= 8; ++k) ks.push_back(k);
    for (int k : ks)
      for (ThresholdKind kind :
           {ThresholdKind::existence_raw, ThresholdKind::existence_renormalized, ThresholdKind::d12}) {
        if (kind == ThresholdKind::existence_renormalized && k % 2 == 1) continue;
        const Rational r = threshold(DerivOrder(k), kind);
        row(to_string(kind), "k", k, "H", r.value(), r.str());
      }
  } else if (p.quantity == "mean") {
    for (double h : hs)
      for (double e : es) {
        const double m = p.k == 0 ? mean_slt(HurstParam(h), p.t, e) : mean_alpha(HurstParam(h), p.t, e, DerivOrder(p.k));
        row("H=" + fmt(h), "eps", e, "mean", m, "");
      }
  } else if (p.quantity == "variance") {
    check_parity(p.k, p.renormalized);
    for (double h : hs)
      for (double e : es) {
        const SeriesResult r = variance_series(HurstParam(h), p.t, e, DerivOrder(p.k), p.n_max, p.renormalized,
                                               quad_config(p));
        row("H=" + fmt(h), "eps", e, "variance", r.sum(), r.converged ? "converged" : "not_converged");
      }
  } else if (p.quantity == "probe") {
    const KeyIntegral id = key_integral_from_string(p.integral);
    std::vector<HurstParam> hp;
    for (double h : hs) hp.emplace_back(h);
    for (const auto& r : finiteness_probe(id, hp, p.k_param, p.t, probe_config(p)))
      row(p.integral, "H", r.h.h, "fitted_exponent", r.fitted_exponent, to_string(r.verdict));
  } else {
    throw std::invalid_argument("--quantity must be threshold, mean, variance or probe");
  }
  emit(p.common, os.str(), out);
  summary = "sweep " + p.quantity + ": " + std::to_string(rows) + " rows";
  return kExitOk;
}

// The TRIVIAL examples: closed-form facts every build must reproduce.
int cmd_selftest(const Params& p, std::ostream& out, std::string& summary) {
  struct Check {
    std::string name;
    std::function<bool()> ok;
  };
  const double pi = std::numbers::pi;
  auto close = [](double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); };
  const HurstParam h3(0.3), half(0.5);
  std::vector<Check> checks = {
      {"double_factorial(-1) = 1", [] { return double_factorial(-1) == 1; }},
      {"double_factorial(5) = 15", [] { return double_factorial(5) == 15; }},
      {"double_factorial(7) = 105", [] { return double_factorial(7) == 105; }},
      {"rising_factorial(3, 2) = 12", [] { return rising_factorial(3.0, 2) == 12.0; }},
      {"rising_factorial(x, 0) = 1", [] { return rising_factorial(0.37, 0) == 1.0; }},
      {"2F1(a, b; c; 0) = 1", [] { return gauss_2f1(1.3, -0.7, 2.1, 0.0) == 1.0; }},
      {"coeff_C(0, k) = 1", [] { return coeff_C(0, 1) == 1.0 && coeff_C(0, 3) == 1.0; }},
      {"coeff_C(1, 1) = 0", [] { return coeff_C(1, 1) == 0.0; }},
      {"coeff_D(1, 1) = 2", [] { return coeff_D(1, 1) == 2.0; }},
      {"He_0(x) = 1", [] { return hermite_prob(0, 1.7) == 1.0; }},
      {"He_2(3) = 8", [] { return hermite_prob(2, 3.0) == 8.0; }},
      {"f_1(0) = 1/sqrt(2 pi)",
       [&] { return close(gaussian_density_deriv(0, 1.0, 0.0), 1.0 / std::sqrt(2.0 * pi), 1e-15); }},
      {"f'_eps(x) = -(x/eps) f_eps(x)",
       [&] {
         const double e = 0.3, x = 0.8;
         return close(gaussian_density_deriv(1, e, x), -(x / e) * GaussianDensity{e}(x), 1e-14);
       }},
      {"f''_eps(0) = -1/(eps sqrt(2 pi eps))",
       [&] {
         const double e = 0.2;
         return close(gaussian_density_deriv(2, e, 0.0), -1.0 / (e * std::sqrt(2.0 * pi * e)), 1e-14);
       }},
      {"fourier f_1(0) = 1/sqrt(2 pi)",
       [&] { return close(gaussian_density_deriv_fourier(0, 1.0, 0.0), 1.0 / std::sqrt(2.0 * pi), 1e-12); }},
      {"fourier f'''_0.5(0) = 0", [] { return std::abs(gaussian_density_deriv_fourier(3, 0.5, 0.0)) < 1e-12; }},
      {"R_H(t, t) = t^2H", [&] { return close(covariance_rh(h3, 2.0, 2.0), std::pow(2.0, 0.6), 1e-15); }},
      {"R_1/2(t, s) = min(t, s)", [&] { return close(covariance_rh(half, 0.7, 0.4), 0.4, 1e-15); }},
      {"R_0.3(1, 1) = 1", [&] { return close(covariance_rh(h3, 1.0, 1.0), 1.0, 1e-15); }},
      {"same seed gives identical paths",
       [&] {
         const auto g = TimeGrid::uniform(1.0, 64);
         return simulate_paths(h3, g, 8, 7, 1).values == simulate_paths(h3, g, 8, 7, 1).values;
       }},
      {"K_1/2(t, u) = 1", [&] { return close(kernel_k0t(half, 0.8, 0.3), 1.0, 1e-12); }},
      {"K(r, s; u > s) = 0", [&] { return kernel_krs(h3, 0.2, 0.5, 0.7) == 0.0; }},
      {"K(0, s; u) = K(s, u)", [&] { return close(kernel_krs(h3, 0.0, 0.5, 0.2), kernel_k0t(h3, 0.5, 0.2), 1e-12); }},
      {"K(s, s; u) = 0", [&] { return std::abs(kernel_krs(h3, 0.5, 0.5, 0.2)) < 1e-15; }},
      {"<K_0t, K_0t> = t^2H", [&] { return close(kernel_inner_product(h3, {0, 1}, {0, 1}).value, 1.0, 1e-6); }},
      {"<.,.> at H = 1/2 is the overlap length",
       [&] { return close(kernel_inner_product(half, {0, 1}, {0.5, 1.5}).value, 0.5, 1e-8); }},
      {"identical intervals: mu = lambda = rho, gamma = 1",
       [&] {
         const CovTriple c = cov_triple(h3, IntervalPair(0.2, 0.6, 0.2, 0.6));
         return c.mu == c.lambda && c.rho == c.lambda && c.gamma && close(*c.gamma, 1.0, 1e-15);
       }},
      {"H = 1/2 overlap ([0,1],[0.5,1.5]): mu = 0.5",
       [&] { return close(cov_triple(half, IntervalPair(0, 1, 0.5, 1.5)).mu, 0.5, 1e-15); }},
      {"H = 1/2 disjoint intervals: mu = 0",
       [&] { return std::abs(cov_triple(half, IntervalPair(0, 0.3, 0.5, 0.9)).mu) < 1e-15; }},
      {"(0, 0.5, 0.2, 0.7) is R1 (0.2, 0.3, 0.2)",
       [&] {
         const RegionTag g = classify_region(IntervalPair(0, 0.5, 0.2, 0.7));
         return g.region == Region::R1 && close(g.a, 0.2, 1e-15) && close(g.b, 0.3, 1e-15) && close(g.c, 0.2, 1e-15);
       }},
      {"(0, 1, 0.2, 0.7) is R2 (0.2, 0.5, 0.3)",
       [&] {
         const RegionTag g = classify_region(IntervalPair(0, 1, 0.2, 0.7));
         return g.region == Region::R2 && close(g.a, 0.2, 1e-15) && close(g.b, 0.5, 1e-15) && close(g.c, 0.3, 1e-15);
       }},
      {"(0, 0.3, 0.5, 0.9) is R3 (0.3, 0.2, 0.4)",
       [&] {
         const RegionTag g = classify_region(IntervalPair(0, 0.3, 0.5, 0.9));
         return g.region == Region::R3 && close(g.a, 0.3, 1e-15) && close(g.b, 0.2, 1e-15) && close(g.c, 0.4, 1e-15);
       }},
      {"LND bound on R3 with a = c = 0 is 0",
       [&] { return lnd_bound_expression(h3, RegionTag{Region::R3, 0.0, 0.5, 0.0, false}) == 0.0; }},
      {"LND bound on R2 (1, 1, 1), H = 1/2 is 2",
       [&] { return close(lnd_bound_expression(half, RegionTag{Region::R2, 1, 1, 1, false}), 2.0, 1e-15); }},
      {"mu integral on R2 with b = 0 is 0", [&] { return mu_integral_rep_r2(h3, 0.3, 0.0, 0.2) == 0.0; }},
      {"mu integral on R3 at H = 1/2 is 0", [&] { return mu_integral_rep_r3(half, 0.3, 0.2, 0.4) == 0.0; }},
      {"sign of mu on R3 is sign(2H - 1)",
       [&] {
         return mu_integral_rep_r3(h3, 0.3, 0.2, 0.4) < 0.0 && mu_integral_rep_r3(HurstParam(0.7), 0.3, 0.2, 0.4) > 0.0;
       }},
      {"threshold(1, existence_raw) = 2/3",
       [] { return threshold(DerivOrder(1), ThresholdKind::existence_raw) == Rational{2, 3}; }},
      {"threshold(2, existence_raw) = 1/3",
       [] { return threshold(DerivOrder(2), ThresholdKind::existence_raw) == Rational{1, 3}; }},
      {"threshold(2, existence_renormalized) = 2/5",
       [] { return threshold(DerivOrder(2), ThresholdKind::existence_renormalized) == Rational{2, 5}; }},
      {"threshold(2, d12) = 2/7", [] { return threshold(DerivOrder(2), ThresholdKind::d12) == Rational{2, 7}; }},
      {"chaos term with n + k odd = 0",
       [&] { return chaos_coeff_norm_sq({2, DerivOrder(1), 0.1, 1.0, h3}, QuadConfig{}).value == 0.0; }},
      {"zeroth chaos term of k = 2 is the mean squared",
       [&] {
         const double m = mean_alpha(h3, 1.0, 0.1, DerivOrder(2));
         return close(chaos_coeff_norm_sq({0, DerivOrder(2), 0.1, 1.0, h3}, QuadConfig{}).value, m * m, 1e-5);
       }},
      {"mean of odd k = 0", [&] { return mean_alpha(h3, 1.0, 0.1, DerivOrder(3)) == 0.0; }},
      {"series terms >= 0, partial sums monotone",
       [&] {
         QuadConfig q;
         q.rel_tol = 1e-5;
         const SeriesResult r = variance_series(h3, 1.0, 0.1, DerivOrder(1), 15, false, q);
         for (std::size_t i = 0; i < r.terms.size(); ++i)
           if (r.terms[i].value < 0 || (i && r.partial_sums[i] < r.partial_sums[i - 1])) return false;
         return !r.terms.empty();
       }},
      {"closed form at gamma = 0 is 0",
       [] {
         const CovTriple tr{0.5, 0.7, 0.0, 0.0};
         return variance_integrand_closed_form(DerivOrder(1), tr) == 0.0 &&
                variance_integrand_closed_form(DerivOrder(2), tr) == 0.0;
       }},
      {"k = 1 reduction is gamma (1 - gamma^2)^(-3/2)",
       [&] { return close(0.4 * odd_reduction(1, 0.4), 0.4 * std::pow(1 - 0.16, -1.5), 1e-12); }},
      {"integral of 1 over the simplex pair is t^4/4",
       [&] {
         QuadConfig q;
         const auto r = integrate_simplex_pair([](const IntervalPair&) { return 1.0; }, 1.5, q);
         return close(r.value, std::pow(1.5, 4) / 4, q.rel_tol);
       }},
      {"odd key integral >= 0",
       [&] {
         QuadConfig q;
         q.rel_tol = 1e-3;
         q.diagonal_cutoff_sequence = {1e-2};
         return key_integral_odd(h3, 1, 1.0, q).value >= 0.0;
       }},
      {"mean-square difference of a sample with itself = 0",
       [] {
         const std::vector<double> a{0.1, -0.4, 2.0};
         return mean_square_difference(0.1, 0.1, a, a).mean_square_diff == 0.0;
       }},
  };
  std::ostringstream os;
  int failed = 0;
  for (const auto& c : checks) {
    bool ok = false;
    try {
      ok = c.ok();
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) ++failed;
    os << (ok ? "PASS " : "FAIL ") << c.name << '\n';
  }
  emit(p.common, os.str(), out);
  summary = "selftest: " + std::to_string(checks.size() - failed) + "/" + std::to_string(checks.size()) + " passed";
  return failed == 0 ? kExitOk : 1;
}

std::string config_key(std::string k) {
  k = trim(k);
  while (!k.empty() && k.front() == '-') k.erase(k.begin());
  std::replace(k.begin(), k.end(), '_', '-');
  return k;
}

bool has_flag(const std::vector<std::string>& args, const std::string& name) {
  const std::string f = "--" + name;
  for (const auto& a : args)
    if (a == f || a.rfind(f + "=", 0) == 0) return true;
  return false;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> kv;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = config_key(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    kv.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return kv;
}

int run(const std::vector<std::string>& args_in, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args = args_in;
  Params p;

  CLI::App app{"Derivatives of self-intersection local time of fractional Brownian motion: chaos series, Monte Carlo "
               "and singular quadrature",
               "dslt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", DSLT_VERSION);

  std::map<std::string, Command> cmds;
  auto add = [&](const std::string& name, const std::string& desc) -> Command& {
    Command& c = cmds[name];
    c.app = app.add_subcommand(name, desc);
    c.opt("output", p.common.output, "Write the artifact here instead of stdout");
    c.opt("format", p.common.format, "csv or json (default depends on the command)");
    c.opt("manifest", p.common.manifest, "Manifest path (default <output>.manifest or dslt-<command>.manifest)");
    c.opt("threads", p.common.threads, "Worker cap (default: DSLT_THREADS or all cores)");
    return c;
  };

  {
    Command& c = add("variance", "Chaos-series variance of alpha^(k)_{t,eps}");
    c.opt("k", p.k, "Derivative order k >= 1")->required();
    c.opt("hurst", p.hurst, "Hurst parameter H in (0,1)")->required();
    c.opt("eps", p.eps, "Mollifier variance eps >= 0")->required();
    c.opt("t", p.t, "Horizon t > 0");
    c.opt("n-max", p.n_max, "Largest chaos order");
    c.flag("renormalized", p.renormalized, "Drop the n = 0 term (even k): the variance proper");
    c.flag("d12", p.d12, "Weighted (n+1) series at eps = 0 instead");
    c.opt("rel-tol", p.rel_tol, "Quadrature relative tolerance (shared across terms)");
    c.opt("max-subdivisions", p.max_subdivisions, "Quadrature box budget");
    c.opt("sigma", p.sigma, "Decay-exponent margin for the d12 verdict");
  }
  {
    Command& c = add("mean", "Analytic mean of alpha^(k)_{t,eps} (k = 0: plain self-intersection local time)");
    c.opt("k", p.k, "Derivative order k >= 0")->required();
    c.opt("hurst", p.hurst, "Hurst parameter")->required();
    c.opt("eps", p.eps, "Mollifier variance eps >= 0")->required();
    c.opt("t", p.t, "Horizon");
  }
  {
    Command& c = add("mc", "Monte Carlo estimate of alpha^(k)_{t,eps} on coupled eps values");
    c.opt("k", p.k, "Derivative order k >= 0")->required();
    c.opt("hurst", p.hurst, "Hurst parameter (ignored with --paths-in)");
    c.opt("eps", p.eps_list, "Strictly decreasing eps values, comma separated")->required();
    c.opt("t", p.t, "Horizon");
    c.opt("paths", p.paths, "Number of paths");
    c.opt("grid", p.grid, "Grid steps N (path sampled at t j/N)");
    c.opt("seed", p.seed, "Seed; path i uses its own stream derived from (seed, i)");
    c.flag("renormalized", p.renormalized, "Subtract the analytic mean (even k)");
    c.opt("richardson-levels", p.richardson_levels, "Grids N, N/2, N/4 used for the bias extrapolation (1-3)");
    c.opt("paths-in", p.paths_in, "Read a binary path batch instead of simulating");
    c.opt("save-paths", p.save_paths, "Write the simulated path batch (binary)");
    c.flag("compare", p.compare, "Compare the variance with the chaos series at each eps");
    c.flag("cauchy", p.cauchy, "Add the pairwise mean-square differences (json)");
    c.opt("n-max", p.n_max, "Largest chaos order for --compare");
    c.opt("rel-tol", p.rel_tol, "Series quadrature tolerance for --compare");
    c.opt("bootstrap", p.bootstrap, "Bootstrap resamples for --compare");
  }
  {
    Command& c = add("probe", "Finiteness probe of a key integral across H");
    c.opt("integral", p.integral, "odd, even, d12_odd or d12_even");
    c.opt("k-param,k-hat,k-prime", p.k_param, "k_hat or k' (>= 1)");
    c.opt("hurst", p.hurst_list, "Hurst values, comma separated")->required();
    c.opt("t", p.t, "Horizon");
    c.opt("cutoffs", p.cutoffs, "Strictly decreasing diagonal cutoffs (default 1e-2 .. 1e-12)");
    c.opt("sigma", p.sigma, "Slope margin for a divergent verdict");
    c.opt("fit-points", p.fit_points, "Trailing cutoffs used in the slope fit");
    c.opt("quad-rel-tol", p.quad_rel_tol, "Quadrature relative tolerance per cutoff");
  }
  {
    Command& c = add("kernel", "Volterra kernel inner product of two increments");
    c.opt("hurst", p.hurst, "Hurst parameter")->required();
    c.opt("r", p.r, "Start of the first interval");
    c.opt("s", p.s, "End of the first interval");
    c.opt("r2", p.r2, "Start of the second interval");
    c.opt("s2", p.s2, "End of the second interval");
    c.opt("tol", p.tol, "Quadrature tolerance");
  }
  {
    Command& c = add("cov", "Covariance triple, region and gap variables of an interval pair");
    c.opt("hurst", p.hurst, "Hurst parameter")->required();
    c.opt("r", p.r, "Start of the first interval");
    c.opt("s", p.s, "End of the first interval");
    c.opt("r2", p.r2, "Start of the second interval");
    c.opt("s2", p.s2, "End of the second interval");
  }
  {
    Command& c = add("sweep", "Plot-ready long-format CSV over H or eps");
    c.opt("quantity", p.quantity, "threshold, mean, variance or probe");
    c.opt("k", p.k, "Derivative order (mean, variance)");
    c.opt("k-list", p.k_list, "Orders for the threshold table (default 1..8)");
    c.opt("hurst", p.hurst_list, "Hurst values");
    c.opt("eps", p.eps_list, "eps values");
    c.opt("t", p.t, "Horizon");
    c.flag("renormalized", p.renormalized, "Renormalized variance (even k)");
    c.opt("n-max", p.n_max, "Largest chaos order");
    c.opt("rel-tol", p.rel_tol, "Series quadrature tolerance");
    c.opt("integral", p.integral, "Key integral for the probe");
    c.opt("k-param", p.k_param, "k_hat or k' for the probe");
    c.opt("sigma", p.sigma, "Probe slope margin");
  }
  add("selftest", "Run the closed-form example checks");

  try {
    // --config: splice key = value pairs in as flags; the command line wins
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      } else if (args[i].rfind("--config=", 0) == 0) {
        path = args[i].substr(9);
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
      } else {
        continue;
      }
      std::ifstream f(path);
      if (!f) throw std::invalid_argument("cannot read config file '" + path + "'");
      std::stringstream ss;
      ss << f.rdbuf();
      std::string command;
      std::vector<std::string> extra;
      for (const auto& [k, v] : parse_config_text(ss.str())) {
        if (k == "command") {
          command = v;
          continue;
        }
        if (k == "version" || k == "exit-code" || v.empty()) continue;
        if (!has_flag(args, k)) extra.push_back("--" + k + "=" + v);
      }
      if (!command.empty()) {
        const bool given = !args.empty() && cmds.count(args.front());
        if (!given) args.insert(args.begin(), command);
        else if (args.front() != command)
          throw std::invalid_argument("config is for command '" + command + "' but '" + args.front() + "' was given");
      }
      args.insert(args.end(), extra.begin(), extra.end());
      break;
    }
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  std::string name;
  for (auto& [n, c] : cmds)
    if (c.app->parsed()) name = n;
  if (p.common.threads < 0) {
    err << "error: --threads must be >= 0\n";
    return kExitValidation;
  }
  if (p.common.threads > 0) set_worker_cap(p.common.threads);

  int code = kExitOk;
  std::string summary;
  try {
    if (name == "variance") code = cmd_variance(p, out, summary);
    else if (name == "mean") code = cmd_mean(p, out, summary);
    else if (name == "mc") code = cmd_mc(p, out, err, summary);
    else if (name == "probe") code = cmd_probe(p, out, summary);
    else if (name == "kernel") code = cmd_kernel(p, out, summary);
    else if (name == "cov") code = cmd_cov(p, out, summary);
    else if (name == "sweep") code = cmd_sweep(p, out, summary);
    else code = cmd_selftest(p, out, summary);
  } catch (const NonConvergenceExit& e) {
    err << "non-convergence: " << e.what() << '\n';
    code = kExitNonConvergence;
  } catch (const NonConvergence& e) {
    err << "non-convergence: " << e.what() << " (partial value " << fmt(e.partial_value) << ", error estimate "
        << fmt(e.error_estimate) << ")\n";
    code = kExitNonConvergence;
  } catch (const Divergence& e) {
    err << "divergence: " << e.what() << '\n';
    code = kExitNonConvergence;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::domain_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  }

  // manifest: every effective option, in the --config format
  std::string mpath = p.common.manifest;
  if (mpath.empty())
    mpath = (p.common.output.empty() || p.common.output == "-") ? "dslt-" + name + ".manifest"
                                                                 : p.common.output + ".manifest";
  if (mpath != "none") {
    std::ofstream m(mpath);
    if (!m) {
      err << "warning: cannot write manifest '" << mpath << "'\n";
    } else {
      m << "# dslt run manifest; rerun with: dslt --config " << mpath << "\n";
      m << "version = " << DSLT_VERSION << "\n";
      m << "command = " << name << "\n";
      for (const auto& [key, val] : cmds[name].values) {
        if (key == "manifest" || key == "output") continue;
        m << key << " = " << val() << "\n";
      }
      m << "exit_code = " << code << "\n";
    }
  }
  if (!summary.empty()) err << summary << '\n';
  return code;
}

}  // namespace dslt::cli
