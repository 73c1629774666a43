#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dslt/cov_geometry.hpp"
#include "dslt/fbm.hpp"
#include "dslt/quadrature.hpp"
#include "dslt/special_functions.hpp"

namespace dslt {

// An integral or series that is infinite for the requested parameters.
class Divergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Rational {
  std::int64_t num;
  std::int64_t den;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  bool operator==(const Rational& o) const { return num * o.den == o.num * den; }
  std::string str() const { return std::to_string(num) + "/" + std::to_string(den); }
};

enum class ThresholdKind { existence_raw, existence_renormalized, d12 };
std::string to_string(ThresholdKind k);
ThresholdKind threshold_kind_from_string(const std::string& s);

// Upper end of the H interval in which the object exists, in lowest terms.
Rational threshold(DerivOrder k, ThresholdKind kind);

struct ChaosTermSpec {
  int n;
  DerivOrder k;
  double eps;
  double t;
  HurstParam h;
  bool parity_ok() const { return (n + k.k) % 2 == 0; }
};

struct TermValue {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
};

// [(n+k-1)!!]^2 / (n! 2 pi), the constant in front of the n-th chaos norm.
double chaos_prefactor(int n, int k);

// E[I_n(g)^2] = prefactor * int_{D_t^2} mu^n / ((lambda+eps)(rho+eps))^((k+n+1)/2)
TermValue chaos_coeff_norm_sq(const ChaosTermSpec& spec, const QuadConfig& cfg);

// E[alpha^(k)_{t,eps}]; zero for odd k. Throws Divergence for eps = 0 and
// H >= 1/(k+1).
double mean_alpha(HurstParam h, double t, double eps, DerivOrder k);
// E[int_{D_t} f_eps(B_s - B_r)], the k = 0 case (plain self-intersection local time).
double mean_slt(HurstParam h, double t, double eps);

struct SeriesTerm {
  int n;
  double value;
  double quad_error;
};

struct SeriesResult {
  std::string kind;  // "variance" or "d12"
  HurstParam h{0.5};
  double t = 1.0;
  double eps = 0.0;
  int k = 1;
  bool renormalized = false;
  int n_max = 0;

  std::vector<SeriesTerm> terms;
  std::vector<double> partial_sums;
  double tail_estimate = 0.0;  // +inf when the terms stop decreasing
  bool converged = false;
  bool quad_converged = true;
  // d12 only: fitted algebraic decay exponent of the trailing terms
  // (terms ~ n^-decay); a series with decay <= 1 is reported divergent.
  double decay_exponent = std::numeric_limits<double>::quiet_NaN();
  bool divergent = false;

  double sum() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
  std::string to_json() const;
};

inline constexpr double kSeriesTailTol = 1e-6;

// Sum of chaos norms over n in the parity class of k, n <= n_max. With
// renormalized the n = 0 term (mean squared) is left out, so for even k the
// sum is the variance. For eps > 0 every term is a proper integral; at
// eps = 0 terms can be infinite and the key-integral probe is the tool.
SeriesResult variance_series(HurstParam h, double t, double eps, DerivOrder k, int n_max, bool renormalized,
                             const QuadConfig& cfg, double tail_tol = kSeriesTailTol);

// Sum over n of the eps = 0 variance integrand in closed form, for |gamma| < 1 - margin.
// Odd k: the 2F1(.;3/2;.) form; even k: the renormalized 2F1(.;1/2;.) form.
double variance_integrand_closed_form(DerivOrder k, const CovTriple& trip, double diag_margin = 1e-9);

// sum (n+1) E[I_n(g_{t,0})^2] over the parity class (n >= 2 for even k).
// The eps = 0 terms decay algebraically, so no reachable n_max gets the tail
// below kSeriesTailTol; the verdict comes from the fitted decay exponent:
// converged when it exceeds 1 + cfg.sigma, divergent below 1 - cfg.sigma.
// tail_estimate is the integral of the fitted power law past n_max.
SeriesResult d12_series(HurstParam h, double t, DerivOrder k, int n_max, const QuadConfig& cfg);

}  // namespace dslt
