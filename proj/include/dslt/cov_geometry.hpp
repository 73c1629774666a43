#pragma once

#include <optional>
#include <string>

#include "dslt/fbm.hpp"

namespace dslt {

// Two sub-intervals [r,s], [r',s'] of [0,t]; a point of D_t^2.
struct IntervalPair {
  double r, s, r_p, s_p;
  double t;
  IntervalPair(double r_, double s_, double rp_, double sp_, double t_);
  // Horizon defaulted to max(s, s').
  IntervalPair(double r_, double s_, double rp_, double sp_);
};

struct CovTriple {
  double lambda;
  double rho;
  double mu;
  std::optional<double> gamma;  // empty when lambda * rho == 0
};

enum class Region { R1, R2, R3, boundary };
std::string to_string(Region r);

// R1: r < r' < s < s', (a,b,c) = (r'-r, s-r', s'-s)
// R2: r < r' < s' < s, (a,b,c) = (r'-r, s'-r', s-s')
// R3: r < s < r' < s', (a,b,c) = (s-r, r'-s, s'-r')
struct RegionTag {
  Region region;
  double a, b, c;
  bool swapped;  // the pair was reordered so that r <= r'
};

CovTriple cov_triple(HurstParam h, const IntervalPair& p);
// Triple from the gap variables of a strict region (translation invariant).
CovTriple region_triple(HurstParam h, Region region, double a, double b, double c);
// lambda * rho - mu^2 from gap variables.
double region_defect(HurstParam h, Region region, double a, double b, double c);

RegionTag classify_region(const IntervalPair& p);

// Bracketed term of the local nondeterminism lower bound (no constant).
double lnd_bound_expression(HurstParam h, const RegionTag& tag);

// mu on R2 from 2 mu = 2Hb int_0^1 ((a+bu)^(2H-1) + (c+bu)^(2H-1)) du
double mu_integral_rep_r2(HurstParam h, double a, double b, double c);
// mu on R3 from 2 mu = 2H(2H-1) ac int int (b+au+cv)^(2H-2) du dv
double mu_integral_rep_r3(HurstParam h, double a, double b, double c);

}  // namespace dslt
