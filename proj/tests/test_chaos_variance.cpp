#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dslt/chaos_variance.hpp"
#include "grid_oracle.hpp"

using namespace dslt;
using dslt::testing::extrapolated_grid_term;

namespace {
const double kPi = std::numbers::pi;

// sum over the parity class of [(n+k-1)!!]^2 / (n! 2 pi) gamma^n, divided by (lambda rho)^((k+1)/2)
double direct_series(int k, double lambda, double rho, double mu) {
  const double g = mu / std::sqrt(lambda * rho);
  long double s = 0;
  for (int n = (k % 2 ? 1 : 2); n < 4000; n += 2) {
    long double lt = 0;
    for (int m = n + k - 1; m > 1; m -= 2) lt += 2 * std::log(static_cast<long double>(m));
    lt -= std::lgamma(static_cast<long double>(n) + 1);
    const long double term = std::exp(lt + n * std::log(std::abs(static_cast<long double>(g))));
    s += (g < 0 && n % 2 ? -term : term);
    if (term < 1e-22L * std::abs(s)) break;
  }
  return static_cast<double>(s / (2 * kPi) / std::pow(lambda * rho, (k + 1) / 2.0));
}
}  // namespace

TEST_SUITE("chaos_variance") {
  TEST_CASE("threshold table for k <= 8") {
    for (int k = 1; k <= 8; ++k) {
      const DerivOrder d(k);
      if (k % 2) {
        CHECK(threshold(d, ThresholdKind::existence_raw) == Rational{2, 2 * k + 1});
        CHECK_THROWS_AS(threshold(d, ThresholdKind::existence_renormalized), std::invalid_argument);
      } else {
        CHECK(threshold(d, ThresholdKind::existence_raw) == Rational{1, k + 1});
        CHECK(threshold(d, ThresholdKind::existence_renormalized) == Rational{2, 2 * k + 1});
      }
      CHECK(threshold(d, ThresholdKind::d12) == Rational{2, 2 * k + 3});
    }
    CHECK(threshold(DerivOrder(1), ThresholdKind::existence_raw).str() == "2/3");
    CHECK(threshold(DerivOrder(2), ThresholdKind::existence_raw).str() == "1/3");
    CHECK(threshold(DerivOrder(2), ThresholdKind::existence_renormalized).str() == "2/5");
    CHECK(threshold(DerivOrder(2), ThresholdKind::d12).str() == "2/7");
    CHECK(threshold_kind_from_string("renormalized") == ThresholdKind::existence_renormalized);
    CHECK_THROWS_AS(DerivOrder(0), std::invalid_argument);
  }

  TEST_CASE("prefactor") {
    CHECK(chaos_prefactor(1, 1) == doctest::Approx(1.0 / (2 * kPi)));
    CHECK(chaos_prefactor(2, 2) == doctest::Approx(9.0 / (2 * 2 * kPi)));
    CHECK(chaos_prefactor(4, 2) == doctest::Approx(225.0 / (24 * 2 * kPi)));
    CHECK(chaos_prefactor(2, 1) == 0.0);
  }

  TEST_CASE("parity annihilation") {
    const QuadConfig q;
    for (int n = 0; n <= 5; ++n)
      for (int k = 1; k <= 3; ++k) {
        const auto v = chaos_coeff_norm_sq({n, DerivOrder(k), 0.1, 1.0, HurstParam(0.3)}, q);
        if ((n + k) % 2) CHECK(v.value == 0.0);
        else CHECK(v.value > 0.0);
      }
  }

  TEST_CASE("chaos term n = 1, k = 1 against an extrapolated dense grid to 1e-4") {
    QuadConfig q;
    q.rel_tol = 1e-9;
    const double got = chaos_coeff_norm_sq({1, DerivOrder(1), 0.1, 1.0, HurstParam(0.3)}, q).value;
    CHECK(got == doctest::Approx(extrapolated_grid_term(1, 1, 0.3, 0.1, 1.0, 24)).epsilon(1e-4));
  }

  TEST_CASE("chaos terms are non-increasing in eps") {
    const QuadConfig q;
    for (auto [n, k] : {std::pair{1, 1}, {2, 2}, {0, 2}, {3, 1}}) {
      double prev = std::numeric_limits<double>::infinity();
      for (double e : {0.01, 0.1, 1.0}) {
        const double v = chaos_coeff_norm_sq({n, DerivOrder(k), e, 1.0, HurstParam(0.3)}, q).value;
        CHECK(v <= prev);
        prev = v;
      }
    }
  }

  TEST_CASE("divergence is reported, not guessed") {
    const QuadConfig q;
    CHECK_THROWS_AS(chaos_coeff_norm_sq({1, DerivOrder(1), 0.0, 1.0, HurstParam(0.6)}, q), Divergence);
    CHECK_THROWS_AS(mean_alpha(HurstParam(0.4), 1.0, 0.0, DerivOrder(2)), Divergence);
    CHECK_THROWS_AS(variance_series(HurstParam(0.6), 1.0, 0.0, DerivOrder(1), 10, false, q), Divergence);
  }

  TEST_CASE("mean against E f^(k)_eps(X) = f^(k)_(eps+var X)(0)") {
    for (int k : {2, 4})
      for (double H : {0.2, 0.3, 0.6})
        for (double eps : {0.05, 0.1, 1.0}) {
          auto f = [&](double tau) {
            return (1.0 - tau) * gaussian_density_deriv(k, eps + std::pow(tau, 2 * H), 0.0);
          };
          // tau^2H has an endpoint singularity in its derivative; tanh-sinh copes
          const double want = boost::math::quadrature::tanh_sinh<double>().integrate(f, 0.0, 1.0, 1e-14);
          CHECK(mean_alpha(HurstParam(H), 1.0, eps, DerivOrder(k)) == doctest::Approx(want).epsilon(1e-9));
        }
    CHECK(mean_alpha(HurstParam(0.3), 1.0, 0.1, DerivOrder(3)) == 0.0);
    CHECK(mean_alpha(HurstParam(0.3), 1.0, 0.05, DerivOrder(2)) < 0.0);
  }

  TEST_CASE("mean for large eps") {
    const double eps = 1e3;
    const double want = -1 / std::sqrt(2 * kPi) * 0.5 * std::pow(eps, -1.5);
    CHECK(mean_alpha(HurstParam(0.3), 1.0, eps, DerivOrder(2)) == doctest::Approx(want).epsilon(1e-2));
  }

  TEST_CASE("plain self-intersection local time mean at H = 1/2") {
    // int_0^t (t - tau) (2 pi (tau + eps))^-1/2, u = tau + eps
    const double t = 1.0, eps = 0.1, T = t + eps;
    auto F = [&](double u) { return T * 2 * std::sqrt(u) - 2.0 / 3.0 * std::pow(u, 1.5); };
    CHECK(mean_slt(HurstParam(0.5), t, eps) == doctest::Approx((F(T) - F(eps)) / std::sqrt(2 * kPi)).epsilon(1e-10));
  }

  TEST_CASE("zeroth chaos of k = 2 is the mean squared") {
    QuadConfig q;
    q.rel_tol = 1e-9;
    for (double eps : {0.05, 0.1}) {
      const double m = mean_alpha(HurstParam(0.3), 1.0, eps, DerivOrder(2));
      CHECK(chaos_coeff_norm_sq({0, DerivOrder(2), eps, 1.0, HurstParam(0.3)}, q).value ==
            doctest::Approx(m * m).epsilon(1e-7));
    }
  }

  TEST_CASE("variance series at eps > 0") {
    QuadConfig q;
    q.rel_tol = 1e-7;
    const SeriesResult r = variance_series(HurstParam(0.3), 1.0, 0.1, DerivOrder(1), 200, false, q);
    CHECK(r.converged);
    CHECK(r.tail_estimate >= 0.0);
    for (std::size_t i = 0; i < r.terms.size(); ++i) {
      CHECK(r.terms[i].value >= 0.0);
      CHECK(r.terms[i].n % 2 == 1);
      if (i) CHECK(r.partial_sums[i] >= r.partial_sums[i - 1]);
    }
    // shared cubature equals the terms computed one by one
    for (std::size_t i = 0; i < 3; ++i) {
      const auto one = chaos_coeff_norm_sq({r.terms[i].n, DerivOrder(1), 0.1, 1.0, HurstParam(0.3)}, q);
      CHECK(r.terms[i].value == doctest::Approx(one.value).epsilon(1e-6));
    }
    const SeriesResult ren = variance_series(HurstParam(0.3), 1.0, 0.1, DerivOrder(2), 200, true, q);
    const SeriesResult raw = variance_series(HurstParam(0.3), 1.0, 0.1, DerivOrder(2), 200, false, q);
    CHECK(ren.terms.front().n == 2);
    CHECK(raw.terms.front().n == 0);
    const double m = mean_alpha(HurstParam(0.3), 1.0, 0.1, DerivOrder(2));
    CHECK(raw.sum() - ren.sum() == doctest::Approx(m * m).epsilon(1e-6));
  }

  TEST_CASE("series JSON schema") {
    QuadConfig q;
    const SeriesResult r = variance_series(HurstParam(0.3), 1.0, 0.1, DerivOrder(1), 9, false, q);
    const std::string j = r.to_json();
    for (const char* key : {"\"params\"", "\"terms\"", "\"n\"", "\"value\"", "\"quad_error\"", "\"partial_sums\"",
                            "\"tail_estimate\"", "\"converged\"", "\"sum\""})
      CHECK(j.find(key) != std::string::npos);
  }

  TEST_CASE("closed form equals the direct series at 20 points for k <= 4") {
    std::mt19937_64 g(9);
    std::uniform_real_distribution<double> ug(-0.9, 0.9), ul(0.05, 1.0);
    for (int k = 1; k <= 4; ++k)
      for (int i = 0; i < 20; ++i) {
        const double lambda = ul(g), rho = ul(g), gam = ug(g);
        const CovTriple tr{lambda, rho, gam * std::sqrt(lambda * rho), gam};
        CHECK(variance_integrand_closed_form(DerivOrder(k), tr) ==
              doctest::Approx(direct_series(k, lambda, rho, tr.mu)).epsilon(1e-8));
      }
    for (int k : {1, 2}) {
      const CovTriple tr{0.7, 0.4, 0.5 * std::sqrt(0.28), 0.5};
      CHECK(variance_integrand_closed_form(DerivOrder(k), tr) ==
            doctest::Approx(direct_series(k, 0.7, 0.4, tr.mu)).epsilon(1e-10));
    }
    const CovTriple diag{0.5, 0.5, 0.5, 1.0};
    CHECK_THROWS_AS(variance_integrand_closed_form(DerivOrder(1), diag), std::domain_error);
  }

  TEST_CASE("d12 series verdicts") {
    QuadConfig q;
    q.rel_tol = 1e-6;
    const SeriesResult a = d12_series(HurstParam(0.25), 1.0, DerivOrder(1), 200, q);
    CHECK(a.converged);
    CHECK(a.terms.front().n == 1);
    const SeriesResult b = d12_series(HurstParam(0.25), 1.0, DerivOrder(2), 200, q);
    CHECK(b.converged);
    CHECK(b.terms.front().n == 2);
    const SeriesResult c = d12_series(HurstParam(0.32), 1.0, DerivOrder(2), 200, q);
    CHECK_FALSE(c.converged);
    CHECK(c.divergent);
    // weights (n+1) on the eps = 0 chaos norms
    const auto n1 = chaos_coeff_norm_sq({1, DerivOrder(1), 0.0, 1.0, HurstParam(0.25)}, q);
    CHECK(a.terms.front().value == doctest::Approx(2 * n1.value).epsilon(1e-3));
  }
}
