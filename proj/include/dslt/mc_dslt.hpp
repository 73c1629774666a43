#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dslt/chaos_variance.hpp"
#include "dslt/fbm.hpp"

namespace dslt {

struct McConfig {
  std::size_t n_paths = 1000;
  int grid_points = 256;  // uniform steps t/N; the path is sampled at t j/N, j = 1..N
  std::uint64_t seed = 1;
  std::vector<double> eps_list{0.1};
  int k = 1;  // 0 runs the plain self-intersection local time
  HurstParam h{0.3};
  double t = 1.0;
  bool renormalize = false;
  int workers = 0;

  double resolution_safety = 4.0;  // warn when (t/N)^2H > eps / safety
  // grids N, N/2, N/4 on the same paths; levels 2 removes a dt term,
  // levels 3 also the dt^(1+2H) term of the diagonal cells
  int richardson_levels = 3;
  double bias_tol_se = 1.0;        // bias check passes when |bias| <= tol * std_error

  void validate() const;
};

struct McEstimate {
  double eps = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  int discretization = 0;
  std::uint64_t seed = 0;
  bool renormalized = false;
  double subtracted_mean = 0.0;  // analytic mean removed from every sample

  // Richardson estimate of the grid bias of the mean (corrected - raw);
  // corrected_* are the extrapolated statistics.
  double richardson_bias = 0.0;
  double richardson_bias_se = 0.0;
  bool bias_ok = true;
  double corrected_mean = 0.0;
  double corrected_variance = 0.0;
  double corrected_std_error = 0.0;

  bool resolution_warning = false;
};

struct McRun {
  McConfig cfg;
  std::vector<McEstimate> estimates;  // one per eps, in eps_list order
  // samples[e][p]: alpha for eps index e on path p (mean removed when renormalized)
  std::vector<std::vector<double>> samples;
  // coarse_samples[e][l-1]: the same paths read on every 2^l-th grid point
  std::vector<std::vector<std::vector<double>>> coarse_samples;
  std::vector<double> richardson_weights;  // statistic = sum_l w_l stat(level l)
  std::vector<std::string> warnings;
};

// Per-path double Riemann sum over {0 <= r <= s <= t}: s at the left end of
// each step, r averaged over the two ends of its step, and the diagonal
// triangle (area dt^2/2) at f(0). All eps values share the same paths.
McRun run_mc(const McConfig& cfg);
// Same, on a supplied batch (uniform grid, h and t taken from the batch).
McRun run_mc(const McConfig& cfg, const PathBatch& paths);

std::vector<McEstimate> estimate_alpha(const McConfig& cfg);

// Weights w_l on grids dt 2^l that cancel bias terms dt and dt^(1+2H).
std::vector<double> richardson_weights(HurstParam h, int levels);

// alpha^(k) sample for one path (values at t j/N, j = 1..N) on every eps.
std::vector<double> alpha_path_sums(const double* path, int n_steps, double t, int k, const std::vector<double>& eps,
                                    int stride = 1);

struct CauchyRow {
  double eps_i, eps_j;
  double mean_square_diff;  // Richardson-extrapolated in the grid
  double std_error;
  double raw_mean_square_diff;  // finest grid only
  double raw_std_error;
};

// E[(alpha_eps_i - alpha_eps_j)^2] on common paths, for every pair i < j.
std::vector<CauchyRow> cauchy_diagnostic(const McRun& run);
std::vector<CauchyRow> cauchy_diagnostic(const McConfig& cfg);
// Consecutive pairs (eps_i, eps_i+1) only, with the standard error of each
// step change d_{i+1} - d_i taken path by path (the pairs share paths).
struct CauchyTrend {
  std::vector<double> consecutive, consecutive_se;
  std::vector<double> step_change, step_change_se;
  bool non_increasing = true;  // no step change above n_se standard errors
};
CauchyTrend cauchy_trend(const McRun& run, double n_se = 2.0);

CauchyRow mean_square_difference(double eps_i, double eps_j, const std::vector<double>& a, const std::vector<double>& b);

struct VarianceComparison {
  double eps = 0.0;
  double mc_variance = 0.0;      // Richardson-extrapolated in the grid
  double mc_variance_se = 0.0;   // bootstrap standard deviation
  double ci_low = 0.0, ci_high = 0.0;  // bootstrap 95% percentile interval
  double raw_variance = 0.0;
  double series_value = 0.0;
  double series_tail = 0.0;
  double z = 0.0;
  bool pass = false;
};

// Refuses (std::invalid_argument) when the series parameters do not match
// the run or the series did not converge.
VarianceComparison compare_variance(const McRun& run, std::size_t eps_index, const SeriesResult& series,
                                    int bootstrap_resamples = 1000);

// CSV: eps,statistic,value ; one row per (eps, statistic)
void write_mc_csv(const McRun& run, std::ostream& os);
std::string mc_json(const McRun& run);
std::string cauchy_json(const std::vector<CauchyRow>& rows);
std::string comparison_json(const VarianceComparison& c);

}  // namespace dslt
