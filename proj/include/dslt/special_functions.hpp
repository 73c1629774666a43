#pragma once

#include <cmath>
#include <algorithm>
#include <boost/math/constants/constants.hpp>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace dslt {

// Order k >= 1 of the DSLT derivative.
struct DerivOrder {
  int k;
  explicit DerivOrder(int k_) : k(k_) {
    if (k_ < 1) throw std::invalid_argument("derivative order k must be >= 1, got " + std::to_string(k_));
  }
  bool odd() const { return k % 2 != 0; }
  bool even() const { return k % 2 == 0; }
};

struct GaussianDensity {
  double eps;
  explicit GaussianDensity(double e) : eps(e) {
    if (!(e > 0.0)) throw std::invalid_argument("mollifier variance eps must be > 0");
  }
  double operator()(double x) const;
};

// Raised when a series or quadrature stops before reaching its tolerance.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double partial, double err)
      : std::runtime_error(what), partial_value(partial), error_estimate(err) {}
  double partial_value;
  double error_estimate;
};

// m!! for odd m >= -1, with (-1)!! = 1. Throws std::overflow_error past 2^64.
std::uint64_t double_factorial(int m);
// log(m!!) for odd m >= -1; used where the exact value overflows.
double log_double_factorial(int m);

double rising_factorial(double a, int d);

enum class EulerMode { automatic, never, always };

// Gauss 2F1 by direct summation; |z| > 0.9 switches to
// (1-z)^(c-a-b) 2F1(c-a, c-b; c; z) in automatic mode.
double gauss_2f1(double a, double b, double c, double z, EulerMode mode = EulerMode::automatic);

inline constexpr int kHyp2f1TermCap = 10000;
inline constexpr double kHyp2f1RelTol = 1e-14;

// [(1-k_hat)^(d)]^2 / ((3/2)^(d) d!), zero outside 0 <= d <= k_hat-1.
double coeff_C(int d, int k_hat);
// [(k')^(d)]^2 / ((1/2)^(d) d!), zero outside 1 <= d <= k'.
double coeff_D(int d, int k_prime);
// [(-k')^(d)]^2 / ((1/2)^(d) d!) for 0 <= d <= k': the coefficients the Euler
// identity actually produces for 2F1(k'+1/2, k'+1/2; 1/2; z).
double coeff_D_euler(int d, int k_prime);

// (1-g^2)^(-(4k-1)/2) sum_{d<k} C_d g^(2d)
double odd_reduction(int k_hat, double gamma);
// The even form with coeff_D: (1-g^2)^(-(4k'+1)/2) sum_{d=1}^{k'} D_d g^(2d)
double even_reduction_printed(int k_prime, double gamma);
// -1 + (1-g^2)^(-(4k'+1)/2) sum_{d=0}^{k'} coeff_D_euler(d) g^(2d)
double even_reduction(int k_prime, double gamma);

template <class T>
T hermite_prob(int n, T x) {
  if (n < 0) throw std::invalid_argument("hermite order must be >= 0");
  if (n == 0) return T(1);
  T hm = T(1), h = x;
  for (int j = 1; j < n; ++j) {
    T hp = x * h - T(j) * hm;
    hm = h;
    h = hp;
  }
  return h;
}

// f_eps^(k)(x) = (-1)^k eps^(-k/2) He_k(x/sqrt(eps)) f_eps(x)
template <class T>
T gaussian_density_deriv(int k, T eps, T x) {
  using std::exp;
  using std::pow;
  using std::sqrt;
  if (k < 0) throw std::invalid_argument("derivative order must be >= 0");
  if (!(eps > T(0))) throw std::invalid_argument("eps must be > 0");
  const T se = sqrt(eps);
  const T pi = boost::math::constants::pi<T>();
  const T dens = exp(-x * x / (T(2) * eps)) / sqrt(T(2) * pi * eps);
  T v = hermite_prob<T>(k, x / se) * dens / pow(se, T(k));
  return (k % 2 != 0) ? -v : v;
}

struct FourierEval {
  double value;
  double imag_residual;
  double error_estimate;
};

inline constexpr int kFourierDerivCap = 12;

// (i^k / 2pi) int p^k e^(ipx) e^(-eps p^2/2) dp by the trapezoid rule on the
// real line (spectrally accurate for this Gaussian-damped entire integrand).
// Step halving until two passes agree. Test oracle only.
template <class T>
T gaussian_density_deriv_fourier(int k, T eps, T x, FourierEval* info = nullptr) {
  using std::abs;
  using std::cos;
  using std::exp;
  using std::log;
  using std::sin;
  using std::sqrt;
  if (k < 0 || k > kFourierDerivCap)
    throw std::invalid_argument("fourier route supports 0 <= k <= " + std::to_string(kFourierDerivCap));
  if (!(eps > T(0))) throw std::invalid_argument("eps must be > 0");
  const T pi = boost::math::constants::pi<T>();
  // e^(-eps P^2/2) P^k below 1e-40 of the peak
  const T p_max = sqrt(T(2) * (T(92) + T(k) * log(T(2) + T(k) / eps)) / eps) + T(1);

  T l1 = 0;
  auto pass = [&](T h, T& im) {
    const long n = static_cast<long>(p_max / h) + 1;
    T re = 0;
    im = 0;
    l1 = 0;
    for (long j = -n; j <= n; ++j) {
      const T p = T(j) * h;
      const T w = pow(p, T(k)) * exp(-eps * p * p / T(2));
      re += w * cos(p * x);
      im += w * sin(p * x);
      l1 += abs(w);
    }
    re *= h / (T(2) * pi);
    im *= h / (T(2) * pi);
    l1 *= h / (T(2) * pi);
    return re;
  };
  // i^k (re + i im): pick the real part
  auto combine = [&](T re, T im, T& imag_out) {
    switch (k % 4) {
      case 0: imag_out = im; return re;
      case 1: imag_out = re; return -im;
      case 2: imag_out = -im; return -re;
      default: imag_out = -re; return im;
    }
  };

  // Poisson summation: aliases sit at x + 2 pi m / h, so 2 pi / h must clear
  // |x| by many standard deviations sqrt(eps) of the Gaussian factor.
  T h = T(2) * pi / (abs(x) + T(14) * sqrt(eps) + T(1));
  T im_a = 0, im_b = 0, imag_a = 0, imag_b = 0;
  const T re_a = pass(h, im_a);
  T va = combine(re_a, im_a, imag_a);
  for (int it = 0; it < 8; ++it) {
    h /= T(2);
    const T re_b = pass(h, im_b);
    T vb = combine(re_b, im_b, imag_b);
    T diff = abs(vb - va);
    const T noise = T(16) * std::numeric_limits<T>::epsilon() * l1 * sqrt(p_max / h);
    if (diff <= noise) {
      if (info) *info = {static_cast<double>(vb), static_cast<double>(imag_b), static_cast<double>(std::max(diff, noise))};
      return vb;
    }
    va = vb;
    imag_a = imag_b;
  }
  if (info) *info = {static_cast<double>(va), static_cast<double>(imag_a), -1.0};
  throw NonConvergence("fourier evaluation of the density derivative did not settle", static_cast<double>(va), -1.0);
}

}  // namespace dslt
