#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dslt/cov_geometry.hpp"
#include "dslt/cubature.hpp"
#include "dslt/fbm.hpp"

namespace dslt {

struct QuadConfig {
  double rel_tol = 1e-6;
  double abs_tol = 1e-14;
  long max_subdivisions = 60000;  // boxes; evaluations = boxes x rule points
  double grading_exponent = 2.0;
  std::vector<double> diagonal_cutoff_sequence;  // strictly decreasing, > 0
  int workers = 0;

  // probe settings
  double sigma = 0.1;       // significance margin on the fitted log-log slope
  int fit_points = 4;       // trailing cutoffs used in the slope fit
  double probe_quad_rel_tol = 1e-4;

  void validate() const;
  static QuadConfig probe_default();
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  long n_evals = 0;
  std::vector<std::pair<double, double>> cutoff_history;  // (cutoff, value)
  bool converged = false;
};

using PairIntegrand = std::function<double(const IntervalPair&)>;

// int_{D_t^2} f. The pair is split into the three orderings of each of the
// two interval orders, each mapped to the cube through its gap variables
// (a, b, c) and the offset r, with power grading toward the singular faces.
// With a cutoff sequence the integrand is excised on
// {lambda rho - mu^2 < cutoff or lambda < cutoff or rho < cutoff}
// (needs cfg-supplied Hurst parameter, see the overload below).
QuadratureResult integrate_simplex_pair(const PairIntegrand& f, double t, const QuadConfig& cfg);
QuadratureResult integrate_simplex_pair(const PairIntegrand& f, double t, const QuadConfig& cfg, HurstParam h);

// Integrands that depend on the pair only through its gaps (every chaos
// integrand does): f(region, a, b, c, triple, out) writes fdim values.
// The offset is integrated exactly and the swap symmetry in (lambda, rho)
// is used, so f must be symmetric under that swap.
struct GapPoint {
  Region region;
  double a, b, c;
  CovTriple triple;
};
using StationaryIntegrand = std::function<void(const GapPoint&, double* out)>;

struct VectorQuadrature {
  std::vector<double> value;
  std::vector<double> error;
  long n_evals = 0;
  bool converged = false;
};

VectorQuadrature integrate_stationary_pair(const StationaryIntegrand& f, int fdim, double t, HurstParam h,
                                           const QuadConfig& cfg, ErrorNorm norm);

enum class KeyIntegral { odd, even, d12_odd, d12_even };
std::string to_string(KeyIntegral id);
KeyIntegral key_integral_from_string(const std::string& s);
// Open upper end of the H range where the integral is finite.
double key_integral_threshold(KeyIntegral id, int k_param);

// Pointwise integrands at epsilon = 0, written through (lambda, rho, mu):
//   odd      mu (lambda rho)^(k-1) / D^((4k-1)/2)
//   even     mu^2 (lambda rho)^(k-1) / D^((4k+1)/2)
//   d12_odd  mu^3 (lambda rho)^(k-1) / D^((4k+1)/2)
//   d12_even mu^4 (lambda rho)^(k-1) / D^((4k+3)/2)
// with D = lambda rho - mu^2.
double key_integrand(KeyIntegral id, int k_param, double lambda, double rho, double mu);

QuadratureResult key_integral(KeyIntegral id, HurstParam h, int k_param, double t, const QuadConfig& cfg);
QuadratureResult key_integral_odd(HurstParam h, int k_hat, double t, const QuadConfig& cfg);
QuadratureResult key_integral_even(HurstParam h, int k_prime, double t, const QuadConfig& cfg);
QuadratureResult key_integral_d12_odd(HurstParam h, int k_hat, double t, const QuadConfig& cfg);
QuadratureResult key_integral_d12_even(HurstParam h, int k_prime, double t, const QuadConfig& cfg);

enum class Verdict { convergent, divergent, inconclusive };
std::string to_string(Verdict v);

struct ProbeReport {
  KeyIntegral integral_id;
  HurstParam h;
  int k_param;
  double t;
  double fitted_exponent;     // -(slope of log|value| against log cutoff)
  double extrapolated_value;  // limit estimate when convergent, else NaN
  Verdict verdict;
  std::vector<std::pair<double, double>> cutoff_history;
};

// Verdict from a cutoff history alone.
ProbeReport classify_history(KeyIntegral id, HurstParam h, int k_param, double t,
                             const std::vector<std::pair<double, double>>& history, const QuadConfig& cfg);

std::vector<ProbeReport> finiteness_probe(KeyIntegral id, const std::vector<HurstParam>& h_sweep, int k_param,
                                          double t, const QuadConfig& cfg);

// CSV columns: integral_id,H,cutoff,value,fitted_exponent,verdict (one row per cutoff)
void write_probe_csv(const std::vector<ProbeReport>& reports, std::ostream& os);
std::string probe_json(const std::vector<ProbeReport>& reports);

}  // namespace dslt
