#include "dslt/chaos_variance.hpp"

#include <algorithm>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <numbers>
#include <numeric>

#include "json.hpp"

namespace dslt {

std::string to_string(ThresholdKind k) {
  switch (k) {
    case ThresholdKind::existence_raw: return "existence_raw";
    case ThresholdKind::existence_renormalized: return "existence_renormalized";
    default: return "d12";
  }
}

ThresholdKind threshold_kind_from_string(const std::string& s) {
  if (s == "existence_raw" || s == "raw") return ThresholdKind::existence_raw;
  if (s == "existence_renormalized" || s == "renormalized") return ThresholdKind::existence_renormalized;
  if (s == "d12") return ThresholdKind::d12;
  throw std::invalid_argument("unknown threshold kind '" + s + "' (expected existence_raw, existence_renormalized, d12)");
}

Rational threshold(DerivOrder k, ThresholdKind kind) {
  const std::int64_t kk = k.k;
  Rational r{0, 1};
  switch (kind) {
    case ThresholdKind::existence_raw: r = k.odd() ? Rational{2, 2 * kk + 1} : Rational{1, kk + 1}; break;
    case ThresholdKind::existence_renormalized:
      if (k.odd()) throw std::invalid_argument("renormalized threshold is defined for even k only");
      r = {2, 2 * kk + 1};
      break;
    case ThresholdKind::d12: r = {2, 2 * kk + 3}; break;
  }
  const std::int64_t g = std::gcd(r.num, r.den);
  return {r.num / g, r.den / g};
}

double chaos_prefactor(int n, int k) {
  if (n < 0 || k < 1) throw std::invalid_argument("chaos_prefactor: need n >= 0, k >= 1");
  if ((n + k) % 2 != 0) return 0.0;
  const double l = 2.0 * log_double_factorial(n + k - 1) - std::lgamma(n + 1.0) - std::log(2.0 * std::numbers::pi);
  return std::exp(l);
}

namespace {

std::vector<int> parity_class(int k, int n_min, int n_max) {
  std::vector<int> ns;
  for (int n = n_min; n <= n_max; ++n)
    if ((n + k) % 2 == 0) ns.push_back(n);
  return ns;
}

// All terms in one vector integral; term j = pref_j x^n_j base.
VectorQuadrature chaos_terms(HurstParam h, double t, double eps, int k, const std::vector<int>& ns,
                             const std::vector<double>& pref, const QuadConfig& cfg) {
  const int F = static_cast<int>(ns.size());
  auto f = [&](const GapPoint& gp, double* out) {
    const double L = gp.triple.lambda + eps, P = gp.triple.rho + eps;
    const double lp = L * P;
    if (!(lp > 0.0)) {
      std::fill(out, out + F, 0.0);
      return;
    }
    // |gamma| <= 1; deep corner boxes can round past it and x^n then explodes
    const double x = std::clamp(gp.triple.mu / std::sqrt(lp), -1.0, 1.0);
    const double base = std::pow(lp, -(k + 1) / 2.0);
    double xp = std::pow(x, ns[0]);
    int prev = ns[0];
    for (int j = 0; j < F; ++j) {
      for (; prev < ns[static_cast<std::size_t>(j)]; ++prev) xp *= x;
      out[j] = pref[static_cast<std::size_t>(j)] * xp * base;
    }
  };
  return integrate_stationary_pair(f, F, t, h, cfg, ErrorNorm::shared);
}

double geometric_tail(const std::vector<SeriesTerm>& terms) {
  const std::size_t m = terms.size();
  if (m == 0) return 0.0;
  if (terms.back().value == 0.0) return 0.0;
  if (m < 4) return std::numeric_limits<double>::infinity();
  double q = 0.0;
  for (std::size_t i = m - 3; i < m; ++i) {
    if (!(terms[i - 1].value > 0.0)) return std::numeric_limits<double>::infinity();
    q = std::max(q, terms[i].value / terms[i - 1].value);
  }
  if (!(q < 1.0)) return std::numeric_limits<double>::infinity();
  return terms.back().value * q / (1.0 - q);
}

void fill_sums(SeriesResult& r, double tail_tol) {
  r.partial_sums.clear();
  double s = 0.0;
  for (const auto& tm : r.terms) {
    s += tm.value;
    r.partial_sums.push_back(s);
  }
  r.tail_estimate = geometric_tail(r.terms);
  r.converged = r.quad_converged && std::isfinite(r.tail_estimate) && r.tail_estimate < tail_tol * s;
}

}  // namespace

TermValue chaos_coeff_norm_sq(const ChaosTermSpec& s, const QuadConfig& cfg) {
  if (s.n < 0) throw std::invalid_argument("chaos order n must be >= 0");
  if (!(s.eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  if (!(s.t > 0.0)) throw std::invalid_argument("t must be > 0");
  if (!s.parity_ok()) return {0.0, 0.0, true};
  if (s.eps == 0.0 && s.h.h * (s.k.k + 1) >= 1.0)
    throw Divergence("chaos term at eps = 0 is infinite for H(k+1) >= 1");
  const std::vector<int> ns{s.n};
  const std::vector<double> pref{chaos_prefactor(s.n, s.k.k)};
  const VectorQuadrature vq = chaos_terms(s.h, s.t, s.eps, s.k.k, ns, pref, cfg);
  return {vq.value[0], vq.error[0], vq.converged};
}

namespace {
// int_0^t (t - tau) (tau^2H + eps)^-p dtau
double mean_kernel_integral(HurstParam h, double t, double eps, double p) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  if (eps == 0.0 && 2.0 * h.h * p >= 1.0) throw Divergence("mean at eps = 0 is infinite for H >= 1/(k+1)");
  auto f = [&](double tau) { return (t - tau) * std::pow(std::pow(tau, 2.0 * h.h) + eps, -p); };
  boost::math::quadrature::tanh_sinh<double> ts;
  double err = 0.0, l1 = 0.0;
  const double I = ts.integrate(f, 0.0, t, 1e-13, &err, &l1);
  if (!(err <= 1e-9 * l1)) throw NonConvergence("mean: quadrature did not converge", I, err);
  return I;
}
}  // namespace

double mean_slt(HurstParam h, double t, double eps) {
  return mean_kernel_integral(h, t, eps, 0.5) / std::sqrt(2.0 * std::numbers::pi);
}

double mean_alpha(HurstParam h, double t, double eps, DerivOrder k) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  if (k.odd()) return 0.0;
  const double I = mean_kernel_integral(h, t, eps, (k.k + 1) / 2.0);
  const double sign = (k.k / 2) % 2 == 1 ? -1.0 : 1.0;
  return sign * std::exp(log_double_factorial(k.k - 1)) / std::sqrt(2.0 * std::numbers::pi) * I;
}

SeriesResult variance_series(HurstParam h, double t, double eps, DerivOrder k, int n_max, bool renormalized,
                             const QuadConfig& cfg, double tail_tol) {
  if (!(eps >= 0.0)) throw std::invalid_argument("eps must be >= 0");
  if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
  if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
  if (eps == 0.0 && h.h * (k.k + 1) >= 1.0)
    throw Divergence("chaos terms at eps = 0 are infinite for H(k+1) >= 1; use the finiteness probe");
  SeriesResult r;
  r.kind = "variance";
  r.h = h;
  r.t = t;
  r.eps = eps;
  r.k = k.k;
  r.renormalized = renormalized;
  r.n_max = n_max;
  const int n_min = (k.even() && renormalized) ? 2 : 0;
  const std::vector<int> ns = parity_class(k.k, n_min, n_max);
  if (ns.empty()) {
    fill_sums(r, tail_tol);
    return r;
  }
  std::vector<double> pref;
  for (int n : ns) pref.push_back(chaos_prefactor(n, k.k));
  const VectorQuadrature vq = chaos_terms(h, t, eps, k.k, ns, pref, cfg);
  r.quad_converged = vq.converged;
  for (std::size_t j = 0; j < ns.size(); ++j)
    r.terms.push_back({ns[j], std::max(0.0, vq.value[j]), vq.error[j]});
  fill_sums(r, tail_tol);
  return r;
}

double variance_integrand_closed_form(DerivOrder k, const CovTriple& tr, double margin) {
  if (!(tr.lambda > 0.0 && tr.rho > 0.0)) throw std::invalid_argument("closed form needs lambda, rho > 0");
  const double lr = tr.lambda * tr.rho;
  const double g = tr.mu / std::sqrt(lr);
  if (!(std::abs(g) < 1.0 - margin))
    throw std::domain_error("closed form needs |gamma| < 1 - margin; use singular quadrature near the diagonal");
  const double pi = std::numbers::pi;
  if (k.odd()) {
    const int kh = (k.k + 1) / 2;
    const double c = std::exp(std::lgamma(2.0 * kh) - std::lgamma(static_cast<double>(kh))) / std::sqrt(2.0);
    const double F = gauss_2f1(kh + 0.5, kh + 0.5, 1.5, g * g);
    return c * c * g * F / (std::ldexp(1.0, k.k - 1) * pi * std::pow(lr, (k.k + 1) / 2.0));
  }
  const int kp = k.k / 2;
  const double c = std::exp(std::lgamma(2.0 * kp) - std::lgamma(static_cast<double>(kp)));
  const double z = g * g;
  // -1 + F cancels for small z; sum the d >= 1 terms directly there
  double Fm1 = 0.0;
  if (z < 0.5) {
    const double a = kp + 0.5;
    double term = 1.0;
    for (int d = 1; d < kHyp2f1TermCap; ++d) {
      term *= (a + d - 1) * (a + d - 1) / ((0.5 + d - 1) * d) * z;
      Fm1 += term;
      if (std::abs(term) <= kHyp2f1RelTol * std::abs(Fm1)) break;
    }
  } else {
    Fm1 = gauss_2f1(kp + 0.5, kp + 0.5, 0.5, z) - 1.0;
  }
  return c * c * Fm1 / (std::ldexp(1.0, 2 * kp - 1) * pi * std::pow(lr, kp + 0.5));
}

SeriesResult d12_series(HurstParam h, double t, DerivOrder k, int n_max, const QuadConfig& cfg) {
  if (!(t > 0.0)) throw std::invalid_argument("t must be > 0");
  if (n_max < 2) throw std::invalid_argument("n_max must be >= 2");
  if (h.h * (k.k + 1) >= 1.0) throw Divergence("chaos terms at eps = 0 are infinite for H(k+1) >= 1");
  SeriesResult r;
  r.kind = "d12";
  r.h = h;
  r.t = t;
  r.eps = 0.0;
  r.k = k.k;
  r.renormalized = k.even();
  r.n_max = n_max;
  const std::vector<int> ns = parity_class(k.k, k.even() ? 2 : 1, n_max);
  std::vector<double> pref;
  for (int n : ns) pref.push_back((n + 1.0) * chaos_prefactor(n, k.k));
  const VectorQuadrature vq = chaos_terms(h, t, 0.0, k.k, ns, pref, cfg);
  r.quad_converged = vq.converged;
  for (std::size_t j = 0; j < ns.size(); ++j)
    r.terms.push_back({ns[j], std::max(0.0, vq.value[j]), vq.error[j]});
  fill_sums(r, kSeriesTailTol);

  // log-log slope over the trailing half of the terms
  const std::size_t m = r.terms.size();
  const std::size_t from = m / 2;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, cnt = 0;
  for (std::size_t i = from; i < m; ++i) {
    if (!(r.terms[i].value > 0.0)) continue;
    const double x = std::log(static_cast<double>(r.terms[i].n)), y = std::log(r.terms[i].value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    cnt += 1;
  }
  r.converged = false;
  if (cnt >= 3) {
    const double beta = -(cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    const double logc = (sy + beta * sx) / cnt;
    r.decay_exponent = beta;
    // terms ~ C n^-beta on a parity class of spacing 2: finite iff beta > 1
    if (beta < 1.0 - cfg.sigma) {
      r.divergent = true;
      r.tail_estimate = std::numeric_limits<double>::infinity();
    } else if (beta > 1.0 + cfg.sigma) {
      const double N = r.terms.back().n + 1.0;
      r.tail_estimate = std::exp(logc) * std::pow(N, 1.0 - beta) / (2.0 * (beta - 1.0));
      r.converged = r.quad_converged;
    } else {
      r.tail_estimate = std::numeric_limits<double>::infinity();
    }
  }
  return r;
}

std::string SeriesResult::to_json() const {
  nlohmann::json j;
  j["params"] = {{"kind", kind}, {"H", h.h}, {"t", t}, {"eps", eps}, {"k", k}, {"renormalized", renormalized},
                 {"n_max", n_max}};
  nlohmann::json ts = nlohmann::json::array();
  for (const auto& tm : terms) ts.push_back({{"n", tm.n}, {"value", tm.value}, {"quad_error", tm.quad_error}});
  j["terms"] = ts;
  j["partial_sums"] = partial_sums;
  j["tail_estimate"] = std::isfinite(tail_estimate) ? nlohmann::json(tail_estimate) : nlohmann::json("inf");
  j["converged"] = converged;
  j["quad_converged"] = quad_converged;
  j["sum"] = sum();
  if (kind == "d12") {
    j["decay_exponent"] = std::isnan(decay_exponent) ? nlohmann::json(nullptr) : nlohmann::json(decay_exponent);
    j["divergent"] = divergent;
  }
  return j.dump(2);
}

}  // namespace dslt
