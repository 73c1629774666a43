#include "dslt/cov_geometry.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <stdexcept>

namespace dslt {

IntervalPair::IntervalPair(double r_, double s_, double rp_, double sp_, double t_)
    : r(r_), s(s_), r_p(rp_), s_p(sp_), t(t_) {
  if (!(0.0 <= r && r <= s && s <= t && 0.0 <= r_p && r_p <= s_p && s_p <= t))
    throw std::invalid_argument("IntervalPair: need 0 <= r <= s <= t and 0 <= r' <= s' <= t");
}

IntervalPair::IntervalPair(double r_, double s_, double rp_, double sp_)
    : IntervalPair(r_, s_, rp_, sp_, std::max(s_, sp_)) {}

std::string to_string(Region r) {
  switch (r) {
    case Region::R1: return "R1";
    case Region::R2: return "R2";
    case Region::R3: return "R3";
    default: return "boundary";
  }
}

namespace {
inline double pw(double x, double e) { return x <= 0.0 ? 0.0 : std::pow(x, e); }
}  // namespace

CovTriple cov_triple(HurstParam h, const IntervalPair& p) {
  const double e = 2.0 * h.h;
  const double lam = pw(p.s - p.r, e);
  const double rho = pw(p.s_p - p.r_p, e);
  const double mu =
      0.5 * (pw(std::abs(p.s - p.r_p), e) + pw(std::abs(p.r - p.s_p), e) - pw(std::abs(p.s - p.s_p), e) -
             pw(std::abs(p.r - p.r_p), e));
  CovTriple out{lam, rho, mu, std::nullopt};
  if (lam * rho > 0.0) out.gamma = mu / std::sqrt(lam * rho);
  return out;
}

CovTriple region_triple(HurstParam h, Region region, double a, double b, double c) {
  const double e = 2.0 * h.h;
  double lam, rho, mu;
  switch (region) {
    case Region::R1:
      lam = pw(a + b, e);
      rho = pw(b + c, e);
      mu = 0.5 * (pw(a + b + c, e) + pw(b, e) - pw(a, e) - pw(c, e));
      break;
    case Region::R2:
      lam = pw(a + b + c, e);
      rho = pw(b, e);
      mu = 0.5 * (pw(a + b, e) + pw(b + c, e) - pw(a, e) - pw(c, e));
      break;
    case Region::R3:
      lam = pw(a, e);
      rho = pw(c, e);
      mu = 0.5 * (pw(a + b + c, e) + pw(b, e) - pw(a + b, e) - pw(b + c, e));
      break;
    default:
      throw std::invalid_argument("region_triple: strict region required");
  }
  CovTriple out{lam, rho, mu, std::nullopt};
  if (lam * rho > 0.0) out.gamma = mu / std::sqrt(lam * rho);
  return out;
}

double region_defect(HurstParam h, Region region, double a, double b, double c) {
  const CovTriple tr = region_triple(h, region, a, b, c);
  return tr.lambda * tr.rho - tr.mu * tr.mu;
}

RegionTag classify_region(const IntervalPair& p0) {
  double r = p0.r, s = p0.s, rp = p0.r_p, sp = p0.s_p;
  bool swapped = false;
  if (r > rp) {
    std::swap(r, rp);
    std::swap(s, sp);
    swapped = true;
  }
  RegionTag tag{Region::boundary, 0.0, 0.0, 0.0, swapped};
  if (r == rp || r == s || rp == sp || s == rp || s == sp) return tag;
  if (rp < s && s < sp) {
    tag.region = Region::R1;
    tag.a = rp - r;
    tag.b = s - rp;
    tag.c = sp - s;
  } else if (sp < s) {
    tag.region = Region::R2;
    tag.a = rp - r;
    tag.b = sp - rp;
    tag.c = s - sp;
  } else {
    tag.region = Region::R3;
    tag.a = s - r;
    tag.b = rp - s;
    tag.c = sp - rp;
  }
  return tag;
}

double lnd_bound_expression(HurstParam h, const RegionTag& tag) {
  const double e = 2.0 * h.h;
  const double a = tag.a, b = tag.b, c = tag.c;
  switch (tag.region) {
    case Region::R1: return pw(a + b, e) * pw(c, e) + pw(a, e) * pw(b + c, e);
    case Region::R2: return pw(b, e) * (pw(a, e) + pw(c, e));
    case Region::R3: return pw(a, e) * pw(c, e);
    default: throw std::invalid_argument("lnd_bound_expression: boundary configurations have no bound");
  }
}

double mu_integral_rep_r2(HurstParam h, double a, double b, double c) {
  if (a < 0.0 || b < 0.0 || c < 0.0) throw std::invalid_argument("mu_integral_rep_r2: gaps must be >= 0");
  if (b == 0.0) return 0.0;
  const double H = h.h, e = 2.0 * H - 1.0;
  auto f = [&](double u) { return pw(a + b * u, e) + pw(c + b * u, e); };
  boost::math::quadrature::tanh_sinh<double> ts(15);
  double err = 0.0;
  const double I = ts.integrate(f, 0.0, 1.0, 1e-14, &err);
  if (!(err <= 1e-9 * std::max(1.0, std::abs(I))))
    throw std::runtime_error("mu_integral_rep_r2: quadrature did not reach tolerance");
  return H * b * I;
}

double mu_integral_rep_r3(HurstParam h, double a, double b, double c) {
  if (a < 0.0 || b < 0.0 || c < 0.0) throw std::invalid_argument("mu_integral_rep_r3: gaps must be >= 0");
  if (a == 0.0 || c == 0.0 || h.is_half) return 0.0;
  const double H = h.h, e = 2.0 * H - 2.0;
  boost::math::quadrature::tanh_sinh<double> ts(12);
  double worst = 0.0;
  auto inner = [&](double u) {
    auto g = [&](double v) { return std::pow(b + a * u + c * v, e); };
    double err = 0.0;
    const double r = ts.integrate(g, 0.0, 1.0, 1e-13, &err);
    worst = std::max(worst, err / std::max(1e-300, std::abs(r)));
    return r;
  };
  double err = 0.0;
  const double I = ts.integrate(inner, 0.0, 1.0, 1e-12, &err);
  if (!(err <= 1e-8 * std::abs(I)) || worst > 1e-6)
    throw std::runtime_error("mu_integral_rep_r3: quadrature did not reach tolerance");
  return H * (2.0 * H - 1.0) * a * c * I;
}

}  // namespace dslt
