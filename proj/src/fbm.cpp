#include "dslt/fbm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

#include "dslt/parallel.hpp"

namespace dslt {

HurstParam::HurstParam(double h_) : h(h_), is_half(h_ == 0.5) {
  if (!(h_ > 0.0 && h_ < 1.0)) throw std::invalid_argument("Hurst parameter must lie in (0,1), got " + std::to_string(h_));
}

TimeGrid::TimeGrid(double t_max_, std::vector<double> points_) : t_max(t_max_), points(std::move(points_)) {
  if (!(t_max > 0.0)) throw std::invalid_argument("TimeGrid: t_max must be > 0");
  if (points.empty()) throw std::invalid_argument("TimeGrid: no points");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!(points[i] > 0.0) || points[i] > t_max * (1.0 + 1e-15))
      throw std::invalid_argument("TimeGrid: points must lie in (0, t_max]");
    if (i > 0 && !(points[i] > points[i - 1])) throw std::invalid_argument("TimeGrid: points must be strictly increasing");
  }
}

TimeGrid TimeGrid::uniform(double t_max, int n) {
  if (n < 1) throw std::invalid_argument("TimeGrid::uniform: n must be >= 1");
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) p[static_cast<std::size_t>(j - 1)] = t_max * j / n;
  p.back() = t_max;
  return TimeGrid(t_max, std::move(p));
}

double covariance_rh(HurstParam h, double t, double s) {
  if (t < 0.0 || s < 0.0) throw std::invalid_argument("covariance_rh: times must be >= 0");
  const double e = 2.0 * h.h;
  return 0.5 * (std::pow(s, e) + std::pow(t, e) - std::pow(std::abs(s - t), e));
}

PathBatch simulate_paths(HurstParam h, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed, int workers,
                         int grid_cap) {
  const std::size_t n = grid.size();
  if (n_paths == 0) throw std::invalid_argument("simulate_paths: n_paths must be positive");
  if (static_cast<long>(n) > grid_cap)
    throw std::invalid_argument("simulate_paths: grid of " + std::to_string(n) + " points exceeds the dense cap " +
                                std::to_string(grid_cap));
  Eigen::MatrixXd cov(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double c = covariance_rh(h, grid.points[i], grid.points[j]);
      cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c;
      cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = c;
    }
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("simulate_paths: covariance factorisation failed (grid too close to degenerate)");
  const Eigen::MatrixXd L = llt.matrixL();

  PathBatch out{grid, std::vector<double>(n_paths * n), seed, h, n_paths};
  parallel_for(
      n_paths,
      [&](std::size_t p) {
        std::mt19937_64 gen(stream_seed(seed, p));
        std::normal_distribution<double> nd(0.0, 1.0);
        Eigen::VectorXd z(static_cast<Eigen::Index>(n));
        for (std::size_t j = 0; j < n; ++j) z(static_cast<Eigen::Index>(j)) = nd(gen);
        Eigen::VectorXd x = L.triangularView<Eigen::Lower>() * z;
        std::copy(x.data(), x.data() + n, out.values.begin() + static_cast<std::ptrdiff_t>(p * n));
      },
      workers);
  return out;
}

double kernel_constant(HurstParam h) {
  const double H = h.h;
  if (h.is_half) throw std::invalid_argument("kernel_constant: undefined at H = 1/2 (kernel is the indicator)");
  if (H > 0.5) return std::sqrt(H * (2.0 * H - 1.0) / boost::math::beta(2.0 - 2.0 * H, H - 0.5));
  return std::sqrt(2.0 * H / ((1.0 - 2.0 * H) * boost::math::beta(1.0 - 2.0 * H, H + 0.5)));
}

namespace {

// int_u^t (r-u)^(H-3/2) r^(H-1/2) dr with r - u = (t-u) w^(1/(H-1/2)),
// which absorbs the endpoint power exactly.
double inner_rough_free(double H, double t, double u) {
  const double a = H - 0.5;
  const double p = 1.0 / a;
  const double tu = t - u;
  auto g = [&](double w) { return std::pow(u + tu * std::pow(w, p), a); };
  double err = 0.0;
  const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, 15, 1e-13, &err);
  return std::pow(tu, a) / a * I;
}

}  // namespace

double kernel_k0t(HurstParam h, double t, double u) {
  if (!(u > 0.0 && u < t)) return 0.0;
  if (h.is_half) return 1.0;
  const double H = h.h;
  const double c = kernel_constant(h);
  if (H > 0.5) return c * std::pow(u, 0.5 - H) * inner_rough_free(H, t, u);
  // H < 1/2: the inner integral is an incomplete beta function,
  // int_u^t r^(H-3/2)(r-u)^(H-1/2) dr = u^(2H-1) B(1-2H, H+1/2) I_{1-u/t}(H+1/2, 1-2H).
  const double a = H - 0.5;
  const double first = std::pow(t / u, a) * std::pow(t - u, a);
  const double inner = boost::math::beta(1.0 - 2.0 * H, H + 0.5) * boost::math::ibetac(1.0 - 2.0 * H, H + 0.5, u / t);
  return c * (first - a * std::pow(u, a) * inner);
}

double kernel_krs(HurstParam h, double r, double s, double u) {
  if (r < 0.0 || s < r) throw std::invalid_argument("kernel_krs: need 0 <= r <= s");
  if (r == s) return 0.0;
  double v = (u <= s) ? kernel_k0t(h, s, u) : 0.0;
  if (u <= r) v -= kernel_k0t(h, r, u);
  return v;
}

KernelInnerProduct kernel_inner_product(HurstParam h, Interval p1, Interval p2, double tol) {
  for (const auto& p : {p1, p2})
    if (p.r < 0.0 || p.s < p.r) throw std::invalid_argument("kernel_inner_product: intervals need 0 <= r <= s");
  const double top = std::min(p1.s, p2.s);
  if (top <= 0.0 || p1.r == p1.s || p2.r == p2.s) return {0.0, 0.0};
  if (h.is_half) {
    const double lo = std::max(p1.r, p2.r), hi = std::min(p1.s, p2.s);
    return {std::max(0.0, hi - lo), 0.0};
  }
  std::vector<double> br{0.0, top};
  for (double b : {p1.r, p2.r})
    if (b > 0.0 && b < top) br.push_back(b);
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());

  boost::math::quadrature::tanh_sinh<double> ts(12);
  auto f = [&](double u) { return kernel_krs(h, p1.r, p1.s, u) * kernel_krs(h, p2.r, p2.s, u); };
  double total = 0.0, err_total = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    double err = 0.0, l1 = 0.0;
    total += ts.integrate(f, br[i], br[i + 1], tol, &err, &l1);
    err_total += err * std::max(1.0, l1);
  }
  return {total, err_total};
}

namespace {

double kernel_cell_integral(HurstParam h, double t, double ua, double ub) {
  if (ub <= ua || ua >= t) return 0.0;
  ub = std::min(ub, t);
  if (h.is_half) return ub - ua;
  boost::math::quadrature::tanh_sinh<double> ts(10);
  auto f = [&](double u) { return kernel_k0t(h, t, u); };
  return ts.integrate(f, ua, ub, 1e-10);
}

}  // namespace

VolterraSynthesis synthesize_via_volterra(HurstParam h, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                          int sub_cells, double defect_tol, int workers) {
  if (sub_cells < 4) throw std::invalid_argument("synthesize_via_volterra: sub_cells must be >= 4");
  if (n_paths == 0) throw std::invalid_argument("synthesize_via_volterra: n_paths must be positive");
  const double T = grid.t_max;
  // Graded toward u = 0 where K_{0,t} carries the u^(1/2-H) factor; every
  // grid time is a node so no cell straddles a kernel endpoint.
  const double q = h.is_half ? 1.0 : 1.0 / std::min(h.h + 0.5, 1.5 - h.h);
  std::vector<double> nodes;
  nodes.reserve(static_cast<std::size_t>(sub_cells) + grid.size() + 1);
  for (int m = 0; m <= sub_cells; ++m) nodes.push_back(T * std::pow(static_cast<double>(m) / sub_cells, q));
  for (double t : grid.points) nodes.push_back(t);
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end(),
                          [T](double a, double b) { return std::abs(a - b) <= 1e-14 * T; }),
              nodes.end());
  const std::size_t M = nodes.size() - 1;
  const std::size_t n = grid.size();

  // w(i, m) = (1/du_m) int_cell K_{0,t_i}; covariance of the sum is
  // sum_m w(i,m) w(j,m) du_m.
  std::vector<double> w(n * M, 0.0);
  parallel_for(
      n,
      [&](std::size_t i) {
        const double t = grid.points[i];
        for (std::size_t m = 0; m < M; ++m) {
          if (nodes[m] >= t) break;
          const double du = nodes[m + 1] - nodes[m];
          w[i * M + m] = kernel_cell_integral(h, t, nodes[m], nodes[m + 1]) / du;
        }
      },
      workers);

  double defect = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double c = 0.0;
      for (std::size_t m = 0; m < M; ++m) c += w[i * M + m] * w[j * M + m] * (nodes[m + 1] - nodes[m]);
      defect = std::max(defect, std::abs(c - covariance_rh(h, grid.points[i], grid.points[j])));
    }

  PathBatch out{grid, std::vector<double>(n_paths * n, 0.0), seed, h, n_paths};
  parallel_for(
      n_paths,
      [&](std::size_t p) {
        std::mt19937_64 gen(stream_seed(seed, p));
        std::normal_distribution<double> nd(0.0, 1.0);
        std::vector<double> dW(M);
        for (std::size_t m = 0; m < M; ++m) dW[m] = std::sqrt(nodes[m + 1] - nodes[m]) * nd(gen);
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0.0;
          for (std::size_t m = 0; m < M; ++m) s += w[i * M + m] * dW[m];
          out.values[p * n + i] = s;
        }
      },
      workers);
  return {std::move(out), defect, defect > defect_tol};
}

void write_paths_csv(const PathBatch& b, std::ostream& os) {
  const std::size_t n = b.grid.size();
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t j = 0; j < n; ++j) os << (j ? "," : "") << b.grid.points[j];
  os << '\n';
  for (std::size_t p = 0; p < b.n_paths; ++p) {
    for (std::size_t j = 0; j < n; ++j) os << (j ? "," : "") << b.at(p, j);
    os << '\n';
  }
}

namespace {

constexpr char kMagic[8] = {'D', 'S', 'L', 'T', 'P', 'B', '0', '1'};

template <class T>
void put_le(std::ostream& os, T v) {
  static_assert(sizeof(T) == 8);
  std::uint64_t u;
  std::memcpy(&u, &v, 8);
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  os.write(reinterpret_cast<const char*>(&u), 8);
}

template <class T>
T get_le(std::istream& is) {
  std::uint64_t u = 0;
  is.read(reinterpret_cast<char*>(&u), 8);
  if (!is) throw std::runtime_error("read_paths_binary: truncated file");
  if constexpr (std::endian::native == std::endian::big) u = __builtin_bswap64(u);
  T v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_paths_binary(const PathBatch& b, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_paths_binary: cannot open " + path);
  os.write(kMagic, 8);
  put_le<std::uint64_t>(os, b.n_paths);
  put_le<std::uint64_t>(os, b.grid.size());
  put_le<std::uint64_t>(os, b.seed);
  put_le<double>(os, b.h.h);
  put_le<double>(os, b.grid.t_max);
  for (double t : b.grid.points) put_le<double>(os, t);
  for (double v : b.values) put_le<double>(os, v);
  if (!os) throw std::runtime_error("write_paths_binary: write failed for " + path);
}

PathBatch read_paths_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_paths_binary: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("read_paths_binary: bad magic in " + path);
  const auto n_paths = get_le<std::uint64_t>(is);
  const auto n_points = get_le<std::uint64_t>(is);
  const auto seed = get_le<std::uint64_t>(is);
  const double hurst = get_le<double>(is);
  const double t_max = get_le<double>(is);
  if (n_points == 0 || n_points > (1u << 24) || n_paths > (1ull << 32))
    throw std::runtime_error("read_paths_binary: implausible header in " + path);
  std::vector<double> pts(n_points);
  for (auto& t : pts) t = get_le<double>(is);
  std::vector<double> vals(n_paths * n_points);
  for (auto& v : vals) v = get_le<double>(is);
  return PathBatch{TimeGrid(t_max, std::move(pts)), std::move(vals), seed, HurstParam(hurst), n_paths};
}

}  // namespace dslt
