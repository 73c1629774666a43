#include <cmath>
#include <sstream>

#include "doctest.h"
#include "dslt/mc_dslt.hpp"

using namespace dslt;

namespace {
McConfig small_config(int k, double H = 0.3) {
  McConfig c;
  c.n_paths = 2000;
  c.grid_points = 128;
  c.seed = 42;
  c.eps_list = {0.2, 0.1};
  c.k = k;
  c.h = HurstParam(H);
  c.workers = 1;
  return c;
}
}  // namespace

TEST_SUITE("mc_dslt") {
  TEST_CASE("config validation") {
    McConfig c;
    CHECK_NOTHROW(c.validate());
    auto bad = [](auto mutate) {
      McConfig c;
      mutate(c);
      CHECK_THROWS_AS(c.validate(), std::invalid_argument);
    };
    bad([](McConfig& c) { c.n_paths = 1; });
    bad([](McConfig& c) { c.grid_points = 8; });
    bad([](McConfig& c) { c.eps_list = {}; });
    bad([](McConfig& c) { c.eps_list = {0.1, 0.1}; });
    bad([](McConfig& c) { c.eps_list = {0.05, 0.1}; });
    bad([](McConfig& c) { c.eps_list = {0.0}; });
    bad([](McConfig& c) { c.k = -1; });
    bad([](McConfig& c) { c.renormalize = true; });  // k = 1
    bad([](McConfig& c) { c.richardson_levels = 4; });
  }

  TEST_CASE("zero path gives the area of the triangle times f(0)") {
    const int N = 64;
    const std::vector<double> zero(N, 0.0), eps{0.3, 0.05};
    for (int k = 0; k <= 4; ++k) {
      const auto v = alpha_path_sums(zero.data(), N, 2.0, k, eps);
      for (std::size_t e = 0; e < eps.size(); ++e)
        CHECK(v[e] == doctest::Approx(2.0 * gaussian_density_deriv(k, eps[e], 0.0)).epsilon(1e-12));
    }
  }

  TEST_CASE("negating the path flips odd k and keeps even k") {
    const auto b = simulate_paths(HurstParam(0.4), TimeGrid::uniform(1.0, 64), 5, 3);
    const std::vector<double> eps{0.1, 0.02};
    for (std::size_t p = 0; p < b.n_paths; ++p) {
      std::vector<double> neg(b.row(p), b.row(p) + 64);
      for (double& x : neg) x = -x;
      for (int k = 0; k <= 3; ++k) {
        const auto a = alpha_path_sums(b.row(p), 64, 1.0, k, eps);
        const auto m = alpha_path_sums(neg.data(), 64, 1.0, k, eps);
        for (std::size_t e = 0; e < eps.size(); ++e)
          CHECK(m[e] == doctest::Approx(k % 2 ? -a[e] : a[e]).epsilon(1e-12));
      }
    }
    // stride 2 is the path read on every other point
    const auto full = alpha_path_sums(b.row(0), 64, 1.0, 2, eps, 2);
    std::vector<double> half(32);
    for (int j = 0; j < 32; ++j) half[j] = b.row(0)[2 * j + 1];
    const auto direct = alpha_path_sums(half.data(), 32, 1.0, 2, eps);
    CHECK(full[0] == doctest::Approx(direct[0]).epsilon(1e-13));
    CHECK_THROWS_AS(alpha_path_sums(b.row(0), 64, 1.0, 2, eps, 3), std::invalid_argument);
  }

  TEST_CASE("richardson weights sum to one") {
    for (int levels = 1; levels <= 3; ++levels) {
      const auto w = richardson_weights(HurstParam(0.3), levels);
      CHECK(w.size() == static_cast<std::size_t>(levels));
      double s = 0;
      for (double x : w) s += x;
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("odd k has mean zero") {
    const McRun r = run_mc(small_config(1));
    for (const auto& e : r.estimates) CHECK(std::abs(e.corrected_mean) < 4 * e.corrected_std_error);
  }

  TEST_CASE("even k mean against the analytic mean") {
    const McRun r = run_mc(small_config(2));
    for (const auto& e : r.estimates) {
      const double m = mean_alpha(HurstParam(0.3), 1.0, e.eps, DerivOrder(2));
      CHECK(std::abs(e.corrected_mean - m) < 4 * e.corrected_std_error);
    }
    McConfig c = small_config(2);
    c.renormalize = true;
    const McRun ren = run_mc(c);
    for (std::size_t i = 0; i < ren.estimates.size(); ++i) {
      const auto& e = ren.estimates[i];
      CHECK(e.renormalized);
      CHECK(e.subtracted_mean == doctest::Approx(mean_alpha(HurstParam(0.3), 1.0, e.eps, DerivOrder(2))));
      CHECK(e.mean == doctest::Approx(r.estimates[i].mean - e.subtracted_mean).epsilon(1e-10));
      CHECK(e.variance == doctest::Approx(r.estimates[i].variance).epsilon(1e-8));
    }
  }

  TEST_CASE("plain self-intersection local time at H = 1/2") {
    McConfig c = small_config(0, 0.5);
    c.eps_list = {0.1};
    const McRun r = run_mc(c);
    const auto& e = r.estimates[0];
    CHECK(std::abs(e.corrected_mean - mean_slt(HurstParam(0.5), 1.0, 0.1)) < 4 * e.corrected_std_error);
  }

  TEST_CASE("worker count does not change the samples") {
    McConfig c = small_config(2);
    c.n_paths = 300;
    const McRun a = run_mc(c);
    c.workers = 3;
    const McRun b = run_mc(c);
    CHECK(a.samples == b.samples);
    CHECK(a.coarse_samples == b.coarse_samples);
    CHECK(a.estimates[1].corrected_variance == b.estimates[1].corrected_variance);
  }

  TEST_CASE("cauchy diagnostic") {
    const std::vector<double> a{1.0, 2.0, -0.5, 4.0};
    const CauchyRow same = mean_square_difference(0.1, 0.1, a, a);
    CHECK(same.mean_square_diff == 0.0);
    CHECK(same.raw_mean_square_diff == 0.0);
    const std::vector<double> b{0.0, 2.0, 0.5, 2.0};
    CHECK(mean_square_difference(0.1, 0.05, a, b).raw_mean_square_diff == doctest::Approx((1.0 + 0 + 1 + 4) / 4));

    McConfig c = small_config(1);
    c.n_paths = 200;
    c.eps_list = {0.4, 0.2, 0.1};
    const McRun r = run_mc(c);
    const auto rows = cauchy_diagnostic(r);
    CHECK(rows.size() == 3);
    for (const auto& row : rows) CHECK(row.eps_i > row.eps_j);
    const auto tr = cauchy_trend(r);
    CHECK(tr.consecutive.size() == 2);
    CHECK(tr.step_change.size() == 1);
  }

  TEST_CASE("comparison refuses a mismatched series") {
    McConfig c = small_config(1);
    c.n_paths = 200;
    const McRun r = run_mc(c);
    const QuadConfig q;
    const SeriesResult other_h = variance_series(HurstParam(0.35), 1.0, 0.2, DerivOrder(1), 40, false, q);
    CHECK_THROWS_AS(compare_variance(r, 0, other_h), std::invalid_argument);
    const SeriesResult other_eps = variance_series(HurstParam(0.3), 1.0, 0.1, DerivOrder(1), 200, false, q);
    CHECK_THROWS_AS(compare_variance(r, 0, other_eps), std::invalid_argument);
    CHECK_NOTHROW(compare_variance(r, 1, other_eps, 50));
    CHECK_THROWS_AS(compare_variance(r, 5, other_eps), std::invalid_argument);
    SeriesResult unconverged = other_eps;
    unconverged.converged = false;
    CHECK_THROWS_AS(compare_variance(r, 1, unconverged), std::invalid_argument);
  }

  TEST_CASE("csv and json output") {
    McConfig c = small_config(2);
    c.n_paths = 50;
    const McRun r = run_mc(c);
    std::ostringstream os;
    write_mc_csv(r, os);
    const std::string s = os.str();
    CHECK(s.rfind("eps,statistic,value\n", 0) == 0);
    for (const char* stat : {",mean,", ",variance,", ",std_error,", ",n,"}) CHECK(s.find(stat) != std::string::npos);
    const std::string j = mc_json(r);
    CHECK(j.find("\"estimates\"") != std::string::npos);
    CHECK(j.find("\"seed\"") != std::string::npos);
  }
}
