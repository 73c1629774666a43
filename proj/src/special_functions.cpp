#include "dslt/special_functions.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace dslt {

double GaussianDensity::operator()(double x) const {
  return std::exp(-x * x / (2.0 * eps)) / std::sqrt(2.0 * std::numbers::pi * eps);
}

std::uint64_t double_factorial(int m) {
  if (m < -1) throw std::invalid_argument("double_factorial: m must be >= -1");
  if (m > 0 && m % 2 == 0)
    throw std::invalid_argument("double_factorial: only odd arguments arise here, got " + std::to_string(m));
  std::uint64_t r = 1;
  for (int j = m; j > 1; j -= 2) {
    const auto u = static_cast<std::uint64_t>(j);
    if (r > std::numeric_limits<std::uint64_t>::max() / u)
      throw std::overflow_error("double_factorial: " + std::to_string(m) + "!! exceeds 64 bits; use log_double_factorial");
    r *= u;
  }
  return r;
}

double log_double_factorial(int m) {
  if (m < -1) throw std::invalid_argument("log_double_factorial: m must be >= -1");
  if (m > 0 && m % 2 == 0) throw std::invalid_argument("log_double_factorial: odd m expected");
  if (m <= 1) return 0.0;
  // m!! = 2^((m+1)/2) Gamma(m/2 + 1) / sqrt(pi)
  const double x = 0.5 * (m + 1);
  return x * std::log(2.0) + std::lgamma(0.5 * m + 1.0) - 0.5 * std::log(std::numbers::pi);
}

double rising_factorial(double a, int d) {
  if (d < 0) throw std::invalid_argument("rising_factorial: d must be >= 0");
  double r = 1.0;
  for (int j = 0; j < d; ++j) r *= a + j;
  return r;
}

namespace {

bool nonpositive_integer(double c) { return c <= 0.0 && c == std::floor(c); }

double hyp_series(double a, double b, double c, double z) {
  double term = 1.0, sum = 1.0;
  int small_run = 0;
  for (int d = 0; d < kHyp2f1TermCap; ++d) {
    term *= (a + d) * (b + d) / ((c + d) * (d + 1.0)) * z;
    sum += term;
    if (term == 0.0) return sum;  // terminating series
    if (std::abs(term) <= kHyp2f1RelTol * std::abs(sum)) {
      if (++small_run >= 2) return sum;
    } else {
      small_run = 0;
    }
  }
  std::ostringstream os;
  os << "gauss_2f1(" << a << ", " << b << "; " << c << "; " << z << ") did not converge in " << kHyp2f1TermCap
     << " terms";
  throw NonConvergence(os.str(), sum, std::abs(term));
}

}  // namespace

double gauss_2f1(double a, double b, double c, double z, EulerMode mode) {
  if (!(std::abs(z) < 1.0)) throw std::invalid_argument("gauss_2f1: |z| < 1 required");
  if (nonpositive_integer(c)) throw std::invalid_argument("gauss_2f1: c must not be a non-positive integer");
  const bool euler = mode == EulerMode::always || (mode == EulerMode::automatic && std::abs(z) > 0.9);
  if (!euler) return hyp_series(a, b, c, z);
  return std::pow(1.0 - z, c - a - b) * hyp_series(c - a, c - b, c, z);
}

double coeff_C(int d, int k_hat) {
  if (k_hat < 1) throw std::invalid_argument("coeff_C: k_hat must be >= 1");
  if (d < 0 || d > k_hat - 1) return 0.0;
  const double r = rising_factorial(1.0 - k_hat, d);
  return r * r / (rising_factorial(1.5, d) * std::tgamma(d + 1.0));
}

double coeff_D(int d, int k_prime) {
  if (k_prime < 1) throw std::invalid_argument("coeff_D: k_prime must be >= 1");
  if (d < 1 || d > k_prime) return 0.0;
  const double r = rising_factorial(static_cast<double>(k_prime), d);
  return r * r / (rising_factorial(0.5, d) * std::tgamma(d + 1.0));
}

double coeff_D_euler(int d, int k_prime) {
  if (k_prime < 1) throw std::invalid_argument("coeff_D_euler: k_prime must be >= 1");
  if (d < 0 || d > k_prime) return 0.0;
  const double r = rising_factorial(-static_cast<double>(k_prime), d);
  return r * r / (rising_factorial(0.5, d) * std::tgamma(d + 1.0));
}

double odd_reduction(int k_hat, double gamma) {
  const double g2 = gamma * gamma;
  double s = 0.0, p = 1.0;
  for (int d = 0; d <= k_hat - 1; ++d) {
    s += coeff_C(d, k_hat) * p;
    p *= g2;
  }
  return s * std::pow(1.0 - g2, -(4.0 * k_hat - 1.0) / 2.0);
}

double even_reduction_printed(int k_prime, double gamma) {
  const double g2 = gamma * gamma;
  double s = 0.0, p = g2;
  for (int d = 1; d <= k_prime; ++d) {
    s += coeff_D(d, k_prime) * p;
    p *= g2;
  }
  return s * std::pow(1.0 - g2, -(4.0 * k_prime + 1.0) / 2.0);
}

double even_reduction(int k_prime, double gamma) {
  const double g2 = gamma * gamma;
  const double q = -(4.0 * k_prime + 1.0) / 2.0;
  // -1 + (1-z)^q P(z) = [P(z) - 1 - ((1-z)^(-q) - 1)] (1-z)^q, written so the
  // cancellation near z = 0 happens in expm1/log1p instead of in 1 - 1.
  double tail = 0.0, p = g2;
  for (int d = 1; d <= k_prime; ++d) {
    tail += coeff_D_euler(d, k_prime) * p;
    p *= g2;
  }
  const double one_minus = std::expm1(-q * std::log1p(-g2));  // (1-z)^(-q) - 1
  return (tail - one_minus) * std::pow(1.0 - g2, q);
}

}  // namespace dslt
