#include "dslt/mc_dslt.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "dslt/parallel.hpp"
#include "json.hpp"

namespace dslt {

void McConfig::validate() const {
  if (n_paths < 2) throw std::invalid_argument("n_paths must be >= 2");
  if (grid_points < 16) throw std::invalid_argument("grid_points must be >= 16");
  if (eps_list.empty()) throw std::invalid_argument("eps_list must not be empty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("eps values must be > 0");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw std::invalid_argument("eps_list must be strictly decreasing");
  }
  if (k < 0) throw std::invalid_argument("k must be >= 0");
  if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
  if (renormalize && k % 2 == 1)
    throw std::invalid_argument("renormalize applies to even k only (odd k has mean zero)");
  if (!(resolution_safety > 0.0) || !(bias_tol_se > 0.0))
    throw std::invalid_argument("resolution_safety and bias_tol_se must be > 0");
  if (richardson_levels < 1 || richardson_levels > 3) throw std::invalid_argument("richardson_levels must be 1, 2 or 3");
}

std::vector<double> alpha_path_sums(const double* path, int n_steps, double t, int k, const std::vector<double>& eps,
                                    int stride) {
  if (stride < 1 || n_steps % stride != 0) throw std::invalid_argument("alpha_path_sums: stride must divide n_steps");
  const int M = n_steps / stride;
  const double dt = t / M;
  // P_0 = 0, P_j = path[stride j - 1]
  auto P = [&](int j) { return j == 0 ? 0.0 : path[stride * j - 1]; };
  std::vector<double> out(eps.size());
  for (std::size_t e = 0; e < eps.size(); ++e) {
    const double c = 1.0 / std::sqrt(eps[e]);
    // (-1)^k f^(k)(x) = eps^(-k/2) He_k(x/sqrt eps) f_eps(x)
    const double norm = std::pow(eps[e], -0.5 * k) / std::sqrt(2.0 * std::numbers::pi * eps[e]);
    auto g = [&](double x) {
      const double y = x * c;
      double hm = 1.0, h = y;
      if (k == 0) h = 1.0;
      for (int j = 1; j < k; ++j) {
        const double hp = y * h - j * hm;
        hm = h;
        h = hp;
      }
      return h * std::exp(-0.5 * y * y);
    };
    const double g0 = g(0.0);
    double acc = 0.0;
    for (int j = 1; j < M; ++j) {
      const double pj = P(j);
      double row = 0.5 * g(pj);
      for (int i = 1; i < j; ++i) row += g(pj - P(i));
      acc += row;
    }
    acc += g0 * (0.5 * (M - 1) + 0.5 * M);
    out[e] = norm * dt * dt * acc;
  }
  return out;
}

namespace {

struct Moments {
  double mean, variance;
};

Moments moments(const std::vector<double>& x) {
  const double n = static_cast<double>(x.size());
  const double m = pairwise_sum(x) / n;
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = (x[i] - m) * (x[i] - m);
  return {m, pairwise_sum(d) / (n - 1.0)};
}

double covariance(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = pairwise_sum(x) / n, my = pairwise_sum(y) / n;
  std::vector<double> d(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) d[i] = (x[i] - mx) * (y[i] - my);
  return pairwise_sum(d) / (n - 1.0);
}

double analytic_mean(const McConfig& cfg, double eps) {
  if (cfg.k == 0) return mean_slt(cfg.h, cfg.t, eps);
  return mean_alpha(cfg.h, cfg.t, eps, DerivOrder(cfg.k));
}

McRun run_on(const McConfig& cfg, const PathBatch& paths) {
  cfg.validate();
  const int N = cfg.grid_points;
  if (static_cast<int>(paths.grid.size()) != N) throw std::invalid_argument("path grid size does not match grid_points");
  for (int j = 0; j < N; ++j)
    if (std::abs(paths.grid.points[static_cast<std::size_t>(j)] - cfg.t * (j + 1) / N) > 1e-12 * cfg.t)
      throw std::invalid_argument("path grid must be uniform on (0, t]");
  if (std::abs(paths.h.h - cfg.h.h) > 0.0) throw std::invalid_argument("path batch Hurst parameter does not match");

  McRun run;
  run.cfg = cfg;
  const std::size_t E = cfg.eps_list.size(), np = paths.n_paths;
  int levels = cfg.richardson_levels;
  while (levels > 1 && N % (1 << (levels - 1)) != 0) --levels;
  if (levels < cfg.richardson_levels)
    run.warnings.push_back("grid_points not divisible by " + std::to_string(1 << (cfg.richardson_levels - 1)) +
                           ": Richardson levels reduced to " + std::to_string(levels));
  run.richardson_weights = richardson_weights(cfg.h, levels);
  const auto L = static_cast<std::size_t>(levels);

  // vals[(p * L + l) * E + e]
  std::vector<double> vals(np * L * E);
  parallel_for(
      np,
      [&](std::size_t p) {
        for (std::size_t l = 0; l < L; ++l) {
          const auto a = alpha_path_sums(paths.row(p), N, cfg.t, cfg.k, cfg.eps_list, 1 << l);
          std::copy(a.begin(), a.end(), vals.begin() + static_cast<std::ptrdiff_t>((p * L + l) * E));
        }
      },
      cfg.workers);

  const double dt = cfg.t / N;
  const auto& w = run.richardson_weights;
  for (std::size_t e = 0; e < E; ++e) {
    const double eps = cfg.eps_list[e];
    McEstimate est;
    est.eps = eps;
    est.n = np;
    est.discretization = N;
    est.seed = paths.seed;
    est.renormalized = cfg.renormalize;
    if (cfg.renormalize) est.subtracted_mean = analytic_mean(cfg, eps);
    std::vector<std::vector<double>> lv(L, std::vector<double>(np));
    std::vector<double> corr(np);
    for (std::size_t p = 0; p < np; ++p) {
      double x = 0.0;
      for (std::size_t l = 0; l < L; ++l) {
        lv[l][p] = vals[(p * L + l) * E + e] - est.subtracted_mean;
        x += w[l] * lv[l][p];
      }
      corr[p] = x - lv[0][p];
    }
    const Moments m = moments(lv[0]), md = moments(corr);
    est.mean = m.mean;
    est.variance = m.variance;
    est.std_error = std::sqrt(m.variance / static_cast<double>(np));
    // extrapolate the statistics, not the samples: the per-path grid error
    // is mostly noise at the path's roughness scale, not bias
    double cv = 0.0;
    for (std::size_t l = 0; l < L; ++l) cv += w[l] * (l == 0 ? m.variance : moments(lv[l]).variance);
    est.corrected_mean = m.mean + md.mean;
    est.corrected_variance = cv;
    est.corrected_std_error =
        std::sqrt((m.variance + md.variance + 2.0 * covariance(lv[0], corr)) / static_cast<double>(np));
    est.richardson_bias = md.mean;
    est.richardson_bias_se = std::sqrt(md.variance / static_cast<double>(np));
    est.bias_ok = std::abs(est.richardson_bias) <= cfg.bias_tol_se * est.std_error;
    est.resolution_warning = std::pow(dt, 2.0 * cfg.h.h) > eps / cfg.resolution_safety;
    if (est.resolution_warning) {
      std::ostringstream os;
      os << std::setprecision(17) << "eps = " << eps << " is not resolved by the grid: (t/N)^2H = "
         << std::pow(dt, 2.0 * cfg.h.h) << " > eps/" << cfg.resolution_safety << "; expect discretization bias";
      run.warnings.push_back(os.str());
    }
    if (!est.bias_ok) {
      std::ostringstream os;
      os << std::setprecision(17) << "eps = " << eps << ": grid bias estimate " << est.richardson_bias << " exceeds "
         << cfg.bias_tol_se << " standard errors";
      run.warnings.push_back(os.str());
    }
    run.estimates.push_back(est);
    run.samples.push_back(std::move(lv[0]));
    lv.erase(lv.begin());
    run.coarse_samples.push_back(std::move(lv));
  }
  return run;
}

}  // namespace

std::vector<double> richardson_weights(HurstParam h, int levels) {
  if (levels < 1 || levels > 3) throw std::invalid_argument("richardson_weights: levels must be 1, 2 or 3");
  const double orders[2] = {1.0, 1.0 + 2.0 * h.h};
  const int L = levels;
  // sum_l w_l = 1 and sum_l w_l 2^(l p_i) = 0 for each order p_i
  Eigen::MatrixXd A(L, L);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(L);
  b(0) = 1.0;
  for (int l = 0; l < L; ++l) {
    A(0, l) = 1.0;
    for (int i = 1; i < L; ++i) A(i, l) = std::pow(2.0, l * orders[i - 1]);
  }
  const Eigen::VectorXd w = A.fullPivLu().solve(b);
  return std::vector<double>(w.data(), w.data() + L);
}

McRun run_mc(const McConfig& cfg) {
  cfg.validate();
  const PathBatch paths =
      simulate_paths(cfg.h, TimeGrid::uniform(cfg.t, cfg.grid_points), cfg.n_paths, cfg.seed, cfg.workers);
  return run_on(cfg, paths);
}

McRun run_mc(const McConfig& cfg, const PathBatch& paths) {
  McConfig c = cfg;
  c.h = paths.h;
  c.t = paths.grid.t_max;
  c.grid_points = static_cast<int>(paths.grid.size());
  c.n_paths = paths.n_paths;
  c.seed = paths.seed;
  return run_on(c, paths);
}

std::vector<McEstimate> estimate_alpha(const McConfig& cfg) { return run_mc(cfg).estimates; }

CauchyRow mean_square_difference(double eps_i, double eps_j, const std::vector<double>& a,
                                 const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("mean_square_difference: need matching samples");
  std::vector<double> d(a.size());
  for (std::size_t p = 0; p < a.size(); ++p) d[p] = (a[p] - b[p]) * (a[p] - b[p]);
  const Moments m = moments(d);
  const double se = std::sqrt(m.variance / static_cast<double>(d.size()));
  return {eps_i, eps_j, m.mean, se, m.mean, se};
}

namespace {
std::vector<double> extrapolated_sq_diff(const McRun& run, std::size_t i, std::size_t j) {
  const auto& w = run.richardson_weights;
  auto level = [&](std::size_t e, std::size_t l) -> const std::vector<double>& {
    return l == 0 ? run.samples[e] : run.coarse_samples[e][l - 1];
  };
  std::vector<double> x(run.samples[i].size(), 0.0);
  for (std::size_t l = 0; l < w.size(); ++l) {
    const auto &a = level(i, l), &b = level(j, l);
    for (std::size_t p = 0; p < x.size(); ++p) x[p] += w[l] * (a[p] - b[p]) * (a[p] - b[p]);
  }
  return x;
}
}  // namespace

std::vector<CauchyRow> cauchy_diagnostic(const McRun& run) {
  const auto& eps = run.cfg.eps_list;
  if (eps.size() < 3) throw std::invalid_argument("cauchy_diagnostic: eps_list needs at least 3 values");
  std::vector<CauchyRow> rows;
  for (std::size_t i = 0; i < eps.size(); ++i)
    for (std::size_t j = i + 1; j < eps.size(); ++j) {
      const CauchyRow raw = mean_square_difference(eps[i], eps[j], run.samples[i], run.samples[j]);
      // per-path sum_l w_l d_l^2, so the extrapolated mean keeps a plain standard error
      const std::vector<double> x = extrapolated_sq_diff(run, i, j);
      const Moments m = moments(x);
      rows.push_back({eps[i], eps[j], m.mean, std::sqrt(m.variance / static_cast<double>(x.size())),
                      raw.mean_square_diff, raw.std_error});
    }
  return rows;
}

CauchyTrend cauchy_trend(const McRun& run, double n_se) {
  const auto& eps = run.cfg.eps_list;
  if (eps.size() < 3) throw std::invalid_argument("cauchy_trend: eps_list needs at least 3 values");
  CauchyTrend tr;
  tr.non_increasing = true;
  std::vector<std::vector<double>> d;
  for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
    d.push_back(extrapolated_sq_diff(run, i, i + 1));
    const Moments m = moments(d.back());
    tr.consecutive.push_back(m.mean);
    tr.consecutive_se.push_back(std::sqrt(m.variance / static_cast<double>(d.back().size())));
  }
  for (std::size_t i = 0; i + 1 < d.size(); ++i) {
    std::vector<double> y(d[i].size());
    for (std::size_t p = 0; p < y.size(); ++p) y[p] = d[i + 1][p] - d[i][p];
    const Moments m = moments(y);
    tr.step_change.push_back(m.mean);
    tr.step_change_se.push_back(std::sqrt(m.variance / static_cast<double>(y.size())));
    if (m.mean > n_se * tr.step_change_se.back()) tr.non_increasing = false;
  }
  return tr;
}

std::vector<CauchyRow> cauchy_diagnostic(const McConfig& cfg) {
  if (cfg.eps_list.size() < 3) throw std::invalid_argument("cauchy_diagnostic: eps_list needs at least 3 values");
  return cauchy_diagnostic(run_mc(cfg));
}

VarianceComparison compare_variance(const McRun& run, std::size_t e, const SeriesResult& series, int resamples) {
  const McConfig& cfg = run.cfg;
  if (e >= cfg.eps_list.size()) throw std::invalid_argument("compare_variance: eps index out of range");
  if (cfg.k < 1) throw std::invalid_argument("compare_variance: the chaos series needs k >= 1");
  if (series.kind != "variance") throw std::invalid_argument("compare_variance: series is not a variance series");
  const double eps = cfg.eps_list[e];
  const bool even = cfg.k % 2 == 0;
  if (series.k != cfg.k || series.h.h != cfg.h.h || series.t != cfg.t || series.eps != eps ||
      (even && series.renormalized != cfg.renormalize))
    throw std::invalid_argument("compare_variance: series parameters (H, t, eps, k, renormalized) do not match the run");
  if (!series.converged) throw std::invalid_argument("compare_variance: series did not converge, comparison refused");
  if (resamples < 10) throw std::invalid_argument("compare_variance: need at least 10 bootstrap resamples");

  // The even series without renormalization sums to E[alpha^2], not the variance.
  const bool second_moment = even && !cfg.renormalize;
  auto stat = [&](const std::vector<double>& x) {
    if (!second_moment) return moments(x).variance;
    std::vector<double> sq(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) sq[i] = x[i] * x[i];
    return pairwise_sum(sq) / static_cast<double>(x.size());
  };
  const auto& xs = run.samples[e];
  const auto& wts = run.richardson_weights;
  auto extrapolated = [&](const std::vector<const std::vector<double>*>& lv) {
    double v = 0.0;
    for (std::size_t l = 0; l < lv.size(); ++l) v += wts[l] * stat(*lv[l]);
    return v;
  };
  std::vector<const std::vector<double>*> levels{&xs};
  for (const auto& c : run.coarse_samples[e]) levels.push_back(&c);
  VarianceComparison c;
  c.eps = eps;
  c.mc_variance = extrapolated(levels);
  c.raw_variance = stat(xs);
  c.series_value = series.sum();
  c.series_tail = series.tail_estimate;

  std::mt19937_64 gen(stream_seed(cfg.seed ^ 0x626f6f7473747270ULL, e));
  std::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  std::vector<double> bs(static_cast<std::size_t>(resamples));
  std::vector<std::vector<double>> ys(levels.size(), std::vector<double>(xs.size()));
  std::vector<const std::vector<double>*> yp;
  for (const auto& y : ys) yp.push_back(&y);
  for (auto& b : bs) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const std::size_t j = pick(gen);
      for (std::size_t l = 0; l < levels.size(); ++l) ys[l][i] = (*levels[l])[j];
    }
    b = extrapolated(yp);
  }
  const Moments mb = moments(bs);
  c.mc_variance_se = std::sqrt(mb.variance);
  std::vector<double> sorted = bs;
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double p) {
    const double pos = p * (sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - lo) * (sorted[hi] - sorted[lo]);
  };
  c.ci_low = q(0.025);
  c.ci_high = q(0.975);
  c.z = (c.mc_variance - c.series_value) / c.mc_variance_se;
  c.pass = std::abs(c.z) <= 3.0;
  return c;
}

void write_mc_csv(const McRun& run, std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "eps,statistic,value\n";
  for (const auto& e : run.estimates) {
    auto row = [&](const char* name, double v) { os << e.eps << ',' << name << ',' << v << '\n'; };
    row("mean", e.mean);
    row("variance", e.variance);
    row("std_error", e.std_error);
    row("n", static_cast<double>(e.n));
    row("subtracted_mean", e.subtracted_mean);
    row("richardson_bias", e.richardson_bias);
    row("richardson_bias_se", e.richardson_bias_se);
    row("corrected_mean", e.corrected_mean);
    row("corrected_variance", e.corrected_variance);
    row("corrected_std_error", e.corrected_std_error);
    row("bias_ok", e.bias_ok ? 1.0 : 0.0);
    row("resolution_warning", e.resolution_warning ? 1.0 : 0.0);
  }
}

std::string mc_json(const McRun& run) {
  const McConfig& c = run.cfg;
  nlohmann::json j;
  j["config"] = {{"n_paths", c.n_paths}, {"grid_points", c.grid_points}, {"seed", c.seed}, {"eps_list", c.eps_list},
                 {"k", c.k}, {"H", c.h.h}, {"t", c.t}, {"renormalize", c.renormalize},
                 {"richardson_levels", c.richardson_levels}};
  j["richardson_weights"] = run.richardson_weights;
  nlohmann::json ests = nlohmann::json::array();
  for (const auto& e : run.estimates)
    ests.push_back({{"eps", e.eps},
                    {"mean", e.mean},
                    {"variance", e.variance},
                    {"std_error", e.std_error},
                    {"n", e.n},
                    {"discretization", e.discretization},
                    {"seed", e.seed},
                    {"renormalized", e.renormalized},
                    {"subtracted_mean", e.subtracted_mean},
                    {"richardson_bias", e.richardson_bias},
                    {"richardson_bias_se", e.richardson_bias_se},
                    {"bias_ok", e.bias_ok},
                    {"corrected_mean", e.corrected_mean},
                    {"corrected_variance", e.corrected_variance},
                    {"corrected_std_error", e.corrected_std_error},
                    {"resolution_warning", e.resolution_warning}});
  j["estimates"] = ests;
  j["warnings"] = run.warnings;
  return j.dump(2);
}

std::string cauchy_json(const std::vector<CauchyRow>& rows) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& r : rows)
    a.push_back({{"eps_i", r.eps_i}, {"eps_j", r.eps_j}, {"mean_square_diff", r.mean_square_diff},
                 {"std_error", r.std_error}, {"raw_mean_square_diff", r.raw_mean_square_diff},
                 {"raw_std_error", r.raw_std_error}});
  return a.dump(2);
}

std::string comparison_json(const VarianceComparison& c) {
  nlohmann::json j = {{"eps", c.eps},         {"mc_variance", c.mc_variance}, {"mc_variance_se", c.mc_variance_se},
                      {"ci_low", c.ci_low},   {"ci_high", c.ci_high},         {"raw_variance", c.raw_variance},
                      {"series_value", c.series_value}, {"series_tail", c.series_tail}, {"z", c.z},
                      {"pass", c.pass}};
  return j.dump(2);
}

}  // namespace dslt
