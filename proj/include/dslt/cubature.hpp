#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace dslt {

// How per-component error estimates are weighed against the tolerance.
//   individual: component j needs err_j <= max(abs_tol, rel_tol |I_j|)
//   shared:     component j needs err_j <= max(abs_tol, rel_tol sum_i |I_i|)
enum class ErrorNorm { individual, shared };

struct CubatureOptions {
  double rel_tol = 1e-6;
  double abs_tol = 1e-14;
  long max_evals = 2'000'000;
  int initial_splits = 2;  // per dimension
  int batch = 32;          // boxes refined per round, fixed so results do not depend on workers
  int workers = 0;
  ErrorNorm norm = ErrorNorm::individual;
};

struct CubatureResult {
  std::vector<double> value;
  std::vector<double> error;
  long n_evals = 0;
  long n_boxes = 0;
  bool converged = false;
};

// f(x, out): x in [0,1]^dim, writes fdim values. Called concurrently.
using VecIntegrand = std::function<void(const double* x, double* out)>;

// Globally adaptive degree-7/5 Genz-Malik cubature on the unit cube
// (dim >= 2), bisecting the box with the largest weighted error along the
// axis with the largest fourth difference.
CubatureResult adaptive_cubature(const VecIntegrand& f, int dim, int fdim, const CubatureOptions& opt);

}  // namespace dslt
