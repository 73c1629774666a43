#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dslt {

struct HurstParam {
  double h;
  bool is_half;
  explicit HurstParam(double h_);
};

struct TimeGrid {
  double t_max;
  std::vector<double> points;  // strictly increasing, in (0, t_max]

  TimeGrid(double t_max_, std::vector<double> points_);
  // n equispaced points t_max * j / n, j = 1..n
  static TimeGrid uniform(double t_max, int n);
  std::size_t size() const { return points.size(); }
};

struct PathBatch {
  TimeGrid grid;
  std::vector<double> values;  // row-major, n_paths x grid.size()
  std::uint64_t seed;
  HurstParam h;
  std::size_t n_paths;

  double at(std::size_t path, std::size_t j) const { return values[path * grid.size() + j]; }
  const double* row(std::size_t path) const { return values.data() + path * grid.size(); }
};

double covariance_rh(HurstParam h, double t, double s);

inline constexpr int kDenseGridCap = 2048;

// Exact Gaussian sampling via a dense Cholesky factor of the covariance on
// the grid. Path i draws from stream_seed(seed, i), so the batch does not
// depend on the worker count.
PathBatch simulate_paths(HurstParam h, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                         int workers = 0, int grid_cap = kDenseGridCap);

// Normalising constant of the Volterra kernel (undefined at H = 1/2).
double kernel_constant(HurstParam h);
// K_{0,t}(u); 1 at H = 1/2, 0 outside (0, t).
double kernel_k0t(HurstParam h, double t, double u);
// K_{r,s}(u) = K_{0,s}(u) 1[u<=s] - K_{0,r}(u) 1[u<=r], 0 <= r <= s
double kernel_krs(HurstParam h, double r, double s, double u);

struct Interval {
  double r, s;
};

struct KernelInnerProduct {
  double value;
  double error_estimate;
};

// int K_{r,s}(u) K_{r',s'}(u) du, split at the kernel breakpoints and
// integrated piecewise with tanh-sinh (endpoint power singularities).
KernelInnerProduct kernel_inner_product(HurstParam h, Interval p1, Interval p2, double tol = 1e-10);

struct VolterraSynthesis {
  PathBatch batch;
  // max |empirical-free covariance of the discretised kernel - R_H| on the grid
  double covariance_defect;
  bool coarse_warning;
};

// B_t = sum_m w_m(t) dW_m with w_m(t) the cell average of K_{0,t} over a
// sub-grid graded toward u = 0. `sub_cells` cells cover [0, t_max].
VolterraSynthesis synthesize_via_volterra(HurstParam h, const TimeGrid& grid, std::size_t n_paths,
                                          std::uint64_t seed, int sub_cells = 2048, double defect_tol = 1e-2,
                                          int workers = 0);

// CSV: header t_1..t_n holding the grid times, one row per path.
void write_paths_csv(const PathBatch& b, std::ostream& os);

// Binary layout, all little-endian:
//   0  char[8]  magic "DSLTPB01"
//   8  u64      n_paths
//   16 u64      n_points
//   24 u64      seed
//   32 f64      hurst
//   40 f64      t_max
//   48 f64[n_points]          grid times
//   .. f64[n_paths*n_points]  values, row-major
void write_paths_binary(const PathBatch& b, const std::string& path);
PathBatch read_paths_binary(const std::string& path);

}  // namespace dslt
