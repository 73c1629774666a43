#include "dslt/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include "json.hpp"
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dslt {

void QuadConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw std::invalid_argument("QuadConfig: tolerances must be > 0");
  if (max_subdivisions < 16) throw std::invalid_argument("QuadConfig: max_subdivisions must be >= 16");
  if (!(grading_exponent >= 1.0)) throw std::invalid_argument("QuadConfig: grading_exponent must be >= 1");
  for (std::size_t i = 0; i < diagonal_cutoff_sequence.size(); ++i) {
    if (!(diagonal_cutoff_sequence[i] > 0.0)) throw std::invalid_argument("QuadConfig: cutoffs must be > 0");
    if (i > 0 && !(diagonal_cutoff_sequence[i] < diagonal_cutoff_sequence[i - 1]))
      throw std::invalid_argument("QuadConfig: cutoff sequence must be strictly decreasing");
  }
  if (!(sigma > 0.0)) throw std::invalid_argument("QuadConfig: sigma must be > 0");
  if (fit_points < 2) throw std::invalid_argument("QuadConfig: fit_points must be >= 2");
}

QuadConfig QuadConfig::probe_default() {
  QuadConfig c;
  c.rel_tol = 1e-2;
  c.probe_quad_rel_tol = 1e-4;
  c.max_subdivisions = 160000;
  c.grading_exponent = 2.0;
  for (int e = 2; e <= 12; ++e) c.diagonal_cutoff_sequence.push_back(std::pow(10.0, -e));
  return c;
}

namespace {

struct Graded {
  double x, xc, jac;
};

// x = s^p / (s^p + (1-s)^p): clusters nodes at both ends of [0,1].
inline Graded grade(double s, double p) {
  if (p == 1.0) return {s, 1.0 - s, 1.0};
  const double u = std::pow(s, p), v = std::pow(1.0 - s, p);
  const double den = u + v;
  const double jac = p * std::pow(s, p - 1.0) * std::pow(1.0 - s, p - 1.0) / (den * den);
  return {u / den, v / den, jac};
}

struct GapMap {
  double a, b, c, slack, jac;
};

// a = t x0, c = t (1-x0) x2, b = t (1-x0)(1-x2) x1, so a, b, c -> 0 sit on
// the faces x0 = 0, x1 = 0, x2 = 0.
inline GapMap gap_map(const double* s, double t, double p) {
  const Graded g0 = grade(s[0], p), g1 = grade(s[1], p), g2 = grade(s[2], p);
  GapMap m;
  m.a = t * g0.x;
  m.c = t * g0.xc * g2.x;
  m.b = t * g0.xc * g2.xc * g1.x;
  m.slack = t * g0.xc * g2.xc * g1.xc;
  m.jac = t * t * t * g0.xc * g0.xc * g2.xc * g0.jac * g1.jac * g2.jac;
  return m;
}

constexpr Region kRegions[3] = {Region::R1, Region::R2, Region::R3};

inline bool kept(const CovTriple& tr, double cut) {
  return tr.lambda >= cut && tr.rho >= cut && tr.lambda * tr.rho - tr.mu * tr.mu >= cut;
}

CubatureOptions cubature_options(const QuadConfig& cfg, int dim, double rel_tol, ErrorNorm norm) {
  CubatureOptions o;
  o.rel_tol = rel_tol;
  o.abs_tol = cfg.abs_tol;
  const long pts = 1 + 4L * dim + 2L * dim * (dim - 1) + (1L << dim);
  o.max_evals = cfg.max_subdivisions * pts;
  o.workers = cfg.workers;
  o.norm = norm;
  return o;
}

}  // namespace

QuadratureResult integrate_simplex_pair(const PairIntegrand& f, double t, const QuadConfig& cfg) {
  if (!cfg.diagonal_cutoff_sequence.empty())
    throw std::invalid_argument("integrate_simplex_pair: excision needs the Hurst parameter overload");
  return integrate_simplex_pair(f, t, cfg, HurstParam(0.5));
}

QuadratureResult integrate_simplex_pair(const PairIntegrand& f, double t, const QuadConfig& cfg, HurstParam h) {
  cfg.validate();
  if (!(t > 0.0)) throw std::invalid_argument("integrate_simplex_pair: t must be > 0");
  const auto& cuts = cfg.diagonal_cutoff_sequence;
  const int fdim = cuts.empty() ? 1 : static_cast<int>(cuts.size());
  const double p = cfg.grading_exponent;

  auto g = [&](const double* s, double* out) {
    std::fill(out, out + fdim, 0.0);
    const GapMap m = gap_map(s, t, p);
    const double w = m.slack * s[3];
    const double jac = m.jac * m.slack;
    if (!(jac > 0.0)) return;
    const double a = m.a, b = m.b, c = m.c;
    auto cl = [t](double x) { return std::min(x, t); };
    for (Region reg : kRegions) {
      double r = w, s1, rp, sp;
      switch (reg) {
        case Region::R1: rp = r + a; s1 = cl(r + a + b); sp = cl(r + a + b + c); break;
        case Region::R2: rp = r + a; sp = cl(r + a + b); s1 = cl(r + a + b + c); break;
        default: s1 = r + a; rp = cl(r + a + b); sp = cl(r + a + b + c); break;
      }
      for (int swap = 0; swap < 2; ++swap) {
        const IntervalPair ip = swap ? IntervalPair(rp, sp, r, s1, t) : IntervalPair(r, s1, rp, sp, t);
        const double v = f(ip) * jac;
        if (cuts.empty()) {
          out[0] += v;
        } else {
          const CovTriple tr = cov_triple(h, ip);
          for (int j = 0; j < fdim; ++j)
            if (kept(tr, cuts[static_cast<std::size_t>(j)])) out[j] += v;
        }
      }
    }
  };
  const CubatureResult cr = adaptive_cubature(g, 4, fdim, cubature_options(cfg, 4, cfg.rel_tol, ErrorNorm::individual));
  QuadratureResult res;
  res.n_evals = cr.n_evals;
  res.converged = cr.converged;
  res.value = cr.value.back();
  res.error_estimate = cr.error.back();
  if (!cuts.empty())
    for (std::size_t j = 0; j < cuts.size(); ++j) res.cutoff_history.emplace_back(cuts[j], cr.value[j]);
  return res;
}

VectorQuadrature integrate_stationary_pair(const StationaryIntegrand& f, int fdim, double t, HurstParam h,
                                           const QuadConfig& cfg, ErrorNorm norm) {
  cfg.validate();
  if (!(t > 0.0)) throw std::invalid_argument("integrate_stationary_pair: t must be > 0");
  const double p = cfg.grading_exponent;
  auto g = [&](const double* s, double* out) {
    thread_local std::vector<double> buf;
    buf.resize(static_cast<std::size_t>(fdim));
    std::fill(out, out + fdim, 0.0);
    const GapMap m = gap_map(s, t, p);
    // factor 2: the orderings with r' < r mirror these three
    const double wgt = 2.0 * m.jac * m.slack;
    if (!(wgt > 0.0)) return;
    for (Region reg : kRegions) {
      GapPoint gp{reg, m.a, m.b, m.c, region_triple(h, reg, m.a, m.b, m.c)};
      f(gp, buf.data());
      for (int j = 0; j < fdim; ++j) out[j] += wgt * buf[static_cast<std::size_t>(j)];
    }
  };
  const CubatureResult cr = adaptive_cubature(g, 3, fdim, cubature_options(cfg, 3, cfg.rel_tol, norm));
  return {cr.value, cr.error, cr.n_evals, cr.converged};
}

std::string to_string(KeyIntegral id) {
  switch (id) {
    case KeyIntegral::odd: return "odd";
    case KeyIntegral::even: return "even";
    case KeyIntegral::d12_odd: return "d12_odd";
    default: return "d12_even";
  }
}

KeyIntegral key_integral_from_string(const std::string& s) {
  if (s == "odd") return KeyIntegral::odd;
  if (s == "even") return KeyIntegral::even;
  if (s == "d12_odd") return KeyIntegral::d12_odd;
  if (s == "d12_even") return KeyIntegral::d12_even;
  throw std::invalid_argument("unknown integral id '" + s + "' (expected odd, even, d12_odd, d12_even)");
}

double key_integral_threshold(KeyIntegral id, int k) {
  if (k < 1) throw std::invalid_argument("key integral parameter must be >= 1");
  switch (id) {
    case KeyIntegral::odd: return 2.0 / (4.0 * k - 1.0);
    case KeyIntegral::even: return 2.0 / (4.0 * k + 1.0);
    case KeyIntegral::d12_odd: return 2.0 / (4.0 * k + 1.0);
    default: return 2.0 / (4.0 * k + 3.0);
  }
}

double key_integrand(KeyIntegral id, int k, double lam, double rho, double mu) {
  const double D = lam * rho - mu * mu;
  const double lr = std::pow(lam * rho, k - 1.0);
  switch (id) {
    case KeyIntegral::odd: return mu * lr / std::pow(D, (4.0 * k - 1.0) / 2.0);
    case KeyIntegral::even: return mu * mu * lr / std::pow(D, (4.0 * k + 1.0) / 2.0);
    case KeyIntegral::d12_odd: return mu * mu * mu * lr / std::pow(D, (4.0 * k + 1.0) / 2.0);
    default: return mu * mu * mu * mu * lr / std::pow(D, (4.0 * k + 3.0) / 2.0);
  }
}

QuadratureResult key_integral(KeyIntegral id, HurstParam h, int k, double t, const QuadConfig& cfg) {
  cfg.validate();
  if (k < 1) throw std::invalid_argument("key_integral: parameter must be >= 1");
  const auto& cuts = cfg.diagonal_cutoff_sequence;
  if (cuts.empty()) throw std::invalid_argument("key_integral: a cutoff sequence is required (the integrand is singular)");
  const int fdim = static_cast<int>(cuts.size());
  auto f = [&](const GapPoint& gp, double* out) {
    const CovTriple& tr = gp.triple;
    const double D = tr.lambda * tr.rho - tr.mu * tr.mu;
    const double m = std::min({tr.lambda, tr.rho, D});
    if (!(m >= cuts.back())) {
      std::fill(out, out + fdim, 0.0);
      return;
    }
    const double v = key_integrand(id, k, tr.lambda, tr.rho, tr.mu);
    for (int j = 0; j < fdim; ++j) out[j] = m >= cuts[static_cast<std::size_t>(j)] ? v : 0.0;
  };
  QuadConfig qc = cfg;
  qc.rel_tol = cfg.probe_quad_rel_tol;
  const VectorQuadrature vq = integrate_stationary_pair(f, fdim, t, h, qc, ErrorNorm::individual);
  QuadratureResult res;
  res.n_evals = vq.n_evals;
  res.converged = vq.converged;
  res.value = vq.value.back();
  res.error_estimate = vq.error.back();
  for (std::size_t j = 0; j < cuts.size(); ++j) res.cutoff_history.emplace_back(cuts[j], vq.value[j]);
  return res;
}

QuadratureResult key_integral_odd(HurstParam h, int k_hat, double t, const QuadConfig& cfg) {
  return key_integral(KeyIntegral::odd, h, k_hat, t, cfg);
}
QuadratureResult key_integral_even(HurstParam h, int k_prime, double t, const QuadConfig& cfg) {
  return key_integral(KeyIntegral::even, h, k_prime, t, cfg);
}
QuadratureResult key_integral_d12_odd(HurstParam h, int k_hat, double t, const QuadConfig& cfg) {
  return key_integral(KeyIntegral::d12_odd, h, k_hat, t, cfg);
}
QuadratureResult key_integral_d12_even(HurstParam h, int k_prime, double t, const QuadConfig& cfg) {
  return key_integral(KeyIntegral::d12_even, h, k_prime, t, cfg);
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::convergent: return "convergent";
    case Verdict::divergent: return "divergent";
    default: return "inconclusive";
  }
}

ProbeReport classify_history(KeyIntegral id, HurstParam h, int k_param, double t,
                             const std::vector<std::pair<double, double>>& hist, const QuadConfig& cfg) {
  if (hist.size() < 4) throw std::invalid_argument("finiteness probe: at least 4 cutoffs are required");
  ProbeReport rep{id, h, k_param, t, 0.0, std::numeric_limits<double>::quiet_NaN(), Verdict::inconclusive, hist};
  const std::size_t n = hist.size();
  const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(cfg.fit_points), n);

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  bool zero = false;
  for (std::size_t i = n - m; i < n; ++i) {
    const double v = std::abs(hist[i].second);
    if (!(v > 0.0)) zero = true;
    const double x = std::log(hist[i].first), y = std::log(std::max(v, std::numeric_limits<double>::min()));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double md = static_cast<double>(m);
  const double slope = zero ? 0.0 : (md * sxy - sx * sy) / (md * sxx - sx * sx);
  rep.fitted_exponent = -slope;
  if (slope < -cfg.sigma) {
    rep.verdict = Verdict::divergent;
    return rep;
  }
  // Cauchy test on the Aitken-extrapolated limits of consecutive triples
  // (value = V + C cutoff^beta); raw values converge too slowly near the
  // threshold to be Cauchy at any reachable cutoff.
  auto aitken = [&](std::size_t i, double& out) {
    const double v0 = hist[i - 2].second, v1 = hist[i - 1].second, v2 = hist[i].second;
    const double d1 = v1 - v0, d2 = v2 - v1;
    if (d2 == 0.0) {
      out = v2;
      return true;
    }
    if (d1 == 0.0) return false;
    const double q = d2 / d1;
    if (!(q > 0.0 && q < 1.0)) return false;
    out = v2 + d2 * q / (1.0 - q);
    return true;
  };
  double a_last = 0.0, a_prev = 0.0;
  if (aitken(n - 1, a_last) && aitken(n - 2, a_prev)) {
    const double scale = std::max(std::abs(a_last), cfg.abs_tol);
    if (std::abs(a_last - a_prev) <= cfg.rel_tol * scale) {
      rep.verdict = Verdict::convergent;
      rep.extrapolated_value = a_last;
    }
  }
  if (rep.verdict == Verdict::convergent) return rep;
  // a settled plateau leaves Aitken only rounding noise; plain Cauchy test
  const double v_last = hist[n - 1].second;
  const double scale = std::max(std::abs(v_last), cfg.abs_tol);
  if (std::abs(v_last - hist[n - 2].second) <= cfg.rel_tol * scale &&
      std::abs(hist[n - 2].second - hist[n - 3].second) <= cfg.rel_tol * scale) {
    rep.verdict = Verdict::convergent;
    rep.extrapolated_value = v_last;
  }
  return rep;
}

std::vector<ProbeReport> finiteness_probe(KeyIntegral id, const std::vector<HurstParam>& h_sweep, int k_param,
                                          double t, const QuadConfig& cfg) {
  cfg.validate();
  if (cfg.diagonal_cutoff_sequence.size() < 4)
    throw std::invalid_argument("finiteness probe: cutoff sequence of length >= 4 required");
  std::vector<ProbeReport> out;
  out.reserve(h_sweep.size());
  for (const HurstParam& h : h_sweep) {
    const QuadratureResult qr = key_integral(id, h, k_param, t, cfg);
    out.push_back(classify_history(id, h, k_param, t, qr.cutoff_history, cfg));
  }
  return out;
}

void write_probe_csv(const std::vector<ProbeReport>& reports, std::ostream& os) {
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  os << "integral_id,H,cutoff,value,fitted_exponent,verdict\n";
  for (const auto& r : reports)
    for (const auto& [cut, val] : r.cutoff_history)
      os << to_string(r.integral_id) << ',' << r.h.h << ',' << cut << ',' << val << ',' << r.fitted_exponent << ','
         << to_string(r.verdict) << '\n';
}

std::string probe_json(const std::vector<ProbeReport>& reports) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["integral_id"] = to_string(r.integral_id);
    j["H"] = r.h.h;
    j["k_param"] = r.k_param;
    j["t"] = r.t;
    j["threshold"] = key_integral_threshold(r.integral_id, r.k_param);
    j["fitted_exponent"] = r.fitted_exponent;
    j["verdict"] = to_string(r.verdict);
    j["extrapolated_value"] = std::isnan(r.extrapolated_value) ? nlohmann::json(nullptr) : nlohmann::json(r.extrapolated_value);
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& [cut, val] : r.cutoff_history) hist.push_back({{"cutoff", cut}, {"value", val}});
    j["cutoff_history"] = hist;
    arr.push_back(j);
  }
  return arr.dump(2);
}

}  // namespace dslt
