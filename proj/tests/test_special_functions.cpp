#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "dslt/special_functions.hpp"

using namespace dslt;

namespace {
const double kPi = std::numbers::pi;

// Plain long double summation, no Euler switch; fine for |z| <= 0.9.
long double series_2f1(long double a, long double b, long double c, long double z) {
  long double s = 1, term = 1;
  for (int d = 0; d < 200000; ++d) {
    term *= (a + d) * (b + d) / ((c + d) * (d + 1)) * z;
    s += term;
    if (std::fabs(term) < 1e-21L * std::fabs(s)) break;
  }
  return s;
}

double monomial_he5(double x) { return std::pow(x, 5) - 10 * std::pow(x, 3) + 15 * x; }
}  // namespace

TEST_SUITE("special_functions") {
  TEST_CASE("double factorial small values") {
    CHECK(double_factorial(-1) == 1);
    CHECK(double_factorial(1) == 1);
    CHECK(double_factorial(5) == 15);
    CHECK(double_factorial(7) == 105);
    CHECK(double_factorial(11) == 10395);
    CHECK_THROWS_AS(double_factorial(4), std::invalid_argument);
    CHECK_THROWS_AS(double_factorial(-3), std::invalid_argument);
  }

  TEST_CASE("double factorial overflow and its log") {
    CHECK_THROWS_AS(double_factorial(101), std::overflow_error);
    double acc = 0;
    for (int m = 1; m <= 101; m += 2) acc += std::log(static_cast<double>(m));
    CHECK(log_double_factorial(101) == doctest::Approx(acc).epsilon(1e-13));
    CHECK(log_double_factorial(-1) == 0.0);
  }

  TEST_CASE("rising factorial") {
    CHECK(rising_factorial(3.0, 2) == 12.0);
    CHECK(rising_factorial(-2.0, 3) == 0.0);
    CHECK(rising_factorial(0.37, 0) == 1.0);
    CHECK(rising_factorial(0.5, 3) == doctest::Approx(0.5 * 1.5 * 2.5));
    // a^(d) = Gamma(a+d)/Gamma(a)
    CHECK(rising_factorial(1.7, 5) == doctest::Approx(std::tgamma(6.7) / std::tgamma(1.7)).epsilon(1e-13));
  }

  TEST_CASE("2F1 against closed forms") {
    CHECK(gauss_2f1(1.3, -0.7, 2.1, 0.0) == 1.0);
    CHECK(gauss_2f1(1, 1, 2, 0.5) == doctest::Approx(2 * std::log(2.0)).epsilon(1e-12));
    CHECK(gauss_2f1(1.5, 1.5, 1.5, 0.25) == doctest::Approx(std::pow(0.75, -1.5)).epsilon(1e-12));
    // 2F1(1/2, 1/2; 3/2; x^2) = asin(x) / x
    for (double x : {0.1, 0.5, 0.9, 0.97, 0.995})
      CHECK(gauss_2f1(0.5, 0.5, 1.5, x * x) == doctest::Approx(std::asin(x) / x).epsilon(1e-12));
    // 2F1(1, 1; 2; z) = -log(1-z)/z, including the Euler branch
    for (double z : {0.3, 0.91, 0.99})
      CHECK(gauss_2f1(1, 1, 2, z) == doctest::Approx(-std::log1p(-z) / z).epsilon(1e-12));
    CHECK_THROWS_AS(gauss_2f1(1, 1, 2, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gauss_2f1(1, 1, -2.0, 0.3), std::invalid_argument);
  }

  TEST_CASE("2F1 matches long double summation") {
    for (double z : {0.05, 0.3, 0.6, 0.85})
      for (auto [a, b, c] : std::vector<std::array<double, 3>>{{1.5, 1.5, 1.5}, {2.5, 2.5, 0.5}, {3.5, 3.5, 1.5}})
        CHECK(gauss_2f1(a, b, c, z) ==
              doctest::Approx(static_cast<double>(series_2f1(a, b, c, z))).epsilon(1e-12));
  }

  TEST_CASE("Euler transform consistency on [0.3, 0.9]") {
    for (int i = 0; i <= 12; ++i) {
      const double z = 0.3 + 0.05 * i;
      for (auto [a, b, c] : std::vector<std::array<double, 3>>{{1.5, 1.5, 1.5}, {2.5, 2.5, 1.5}, {1.5, 1.5, 0.5}}) {
        const double raw = gauss_2f1(a, b, c, z, EulerMode::never);
        const double eul = gauss_2f1(a, b, c, z, EulerMode::always);
        CHECK(eul == doctest::Approx(raw).epsilon(1e-10));
      }
    }
  }

  TEST_CASE("C and D coefficients") {
    CHECK(coeff_C(0, 1) == 1.0);
    CHECK(coeff_C(0, 3) == 1.0);
    CHECK(coeff_C(1, 1) == 0.0);
    CHECK(coeff_C(1, 2) == doctest::Approx(2.0 / 3.0));
    CHECK(coeff_C(2, 2) == 0.0);
    CHECK(coeff_D(1, 1) == 2.0);
    CHECK(coeff_D(1, 2) == 8.0);
    CHECK(coeff_D(2, 1) == 0.0);
    CHECK(coeff_D(0, 1) == 0.0);
    // (-k')^(d) squared: k'=2, d=2 -> ((-2)(-1))^2 / ((1/2)(3/2) 2) = 4 / 1.5
    CHECK(coeff_D_euler(2, 2) == doctest::Approx(4.0 / 1.5));
    CHECK(coeff_D_euler(0, 3) == 1.0);
  }

  TEST_CASE("odd Euler reduction holds to 1e-8") {
    for (int kh = 1; kh <= 3; ++kh)
      for (int i = 0; i < 50; ++i) {
        const double g2 = 0.9 * i / 49.0;
        const double lhs = gauss_2f1(kh + 0.5, kh + 0.5, 1.5, g2);
        CHECK(odd_reduction(kh, std::sqrt(g2)) == doctest::Approx(lhs).epsilon(1e-8));
      }
  }

  TEST_CASE("even reduction with the (-k')-coefficients holds to 1e-8") {
    for (int kp = 1; kp <= 3; ++kp)
      for (int i = 0; i < 50; ++i) {
        const double g2 = 0.9 * i / 49.0;
        const double lhs = gauss_2f1(kp + 0.5, kp + 0.5, 0.5, g2) - 1.0;
        const double rhs = even_reduction(kp, std::sqrt(g2));
        CHECK(std::abs(rhs - lhs) <= 1e-8 * std::max(1e-300, std::abs(lhs)) + 1e-15);
      }
  }

  TEST_CASE("even reduction with coeff_D does not reproduce 2F1") {
    // k' = 1, gamma^2 = 0.5: 2F1(3/2,3/2;1/2;1/2) - 1 = 10.3137..., the coeff_D form gives 4 sqrt 2
    const double g = std::sqrt(0.5);
    CHECK(gauss_2f1(1.5, 1.5, 0.5, 0.5) - 1.0 == doctest::Approx(10.313708498984761).epsilon(1e-10));
    CHECK(even_reduction_printed(1, g) == doctest::Approx(4 * std::sqrt(2.0)).epsilon(1e-12));
  }

  TEST_CASE("Hermite polynomials") {
    CHECK(hermite_prob(0, 1.7) == 1.0);
    CHECK(hermite_prob(2, 3.0) == 8.0);
    CHECK(hermite_prob(5, 1.5) == doctest::Approx(monomial_he5(1.5)).epsilon(1e-14));
    for (double x : {-2.3, -0.4, 0.0, 1.1}) CHECK(hermite_prob(5, x) == doctest::Approx(monomial_he5(x)));
  }

  TEST_CASE("density derivatives, Hermite form") {
    CHECK(gaussian_density_deriv(0, 1.0, 0.0) == doctest::Approx(1 / std::sqrt(2 * kPi)).epsilon(1e-15));
    const double e = 0.3, x = 0.8;
    const double f = std::exp(-x * x / (2 * e)) / std::sqrt(2 * kPi * e);
    CHECK(GaussianDensity{e}(x) == doctest::Approx(f).epsilon(1e-15));
    CHECK(gaussian_density_deriv(1, e, x) == doctest::Approx(-(x / e) * f).epsilon(1e-14));
    CHECK(gaussian_density_deriv(2, e, x) == doctest::Approx((x * x - e) / (e * e) * f).epsilon(1e-14));
    CHECK(gaussian_density_deriv(2, 0.2, 0.0) == doctest::Approx(-1 / (0.2 * std::sqrt(2 * kPi * 0.2))).epsilon(1e-14));
    // third derivative: (3 x eps - x^3)/eps^3 f
    CHECK(gaussian_density_deriv(3, e, x) == doctest::Approx((3 * x * e - x * x * x) / (e * e * e) * f).epsilon(1e-13));
    CHECK_THROWS_AS(gaussian_density_deriv(1, 0.0, 0.1), std::invalid_argument);
  }

  TEST_CASE("density derivative parity") {
    for (int k = 0; k <= 6; ++k)
      for (double x : {0.13, 0.9, 2.7}) {
        const double a = gaussian_density_deriv(k, 0.1, x), b = gaussian_density_deriv(k, 0.1, -x);
        CHECK(b == doctest::Approx(k % 2 ? -a : a).epsilon(1e-15));
      }
  }

  TEST_CASE("density derivative: finite differences") {
    for (int k = 0; k <= 5; ++k) {
      const double e = 0.4, x = 0.37, h = 1e-5;
      const double fd = (gaussian_density_deriv(k, e, x + h) - gaussian_density_deriv(k, e, x - h)) / (2 * h);
      CHECK(gaussian_density_deriv(k + 1, e, x) == doctest::Approx(fd).epsilon(1e-6));
    }
  }

  TEST_CASE("Fourier evaluation examples") {
    CHECK(gaussian_density_deriv_fourier(0, 1.0, 0.0) == doctest::Approx(1 / std::sqrt(2 * kPi)).epsilon(1e-12));
    CHECK(std::abs(gaussian_density_deriv_fourier(3, 0.5, 0.0)) < 1e-12);
    CHECK(std::abs(gaussian_density_deriv_fourier(2, 0.1, 0.3) - gaussian_density_deriv(2, 0.1, 0.3)) < 1e-9);
  }
}
