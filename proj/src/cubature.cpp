#include "dslt/cubature.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

#include "dslt/parallel.hpp"

namespace dslt {

namespace {

struct Box {
  std::vector<double> c, h;
  std::vector<double> val, err;
  std::vector<double> diff;  // fourth differences per axis (weighted later)
  double key = 0.0;
  bool alive = true;
};

struct GenzMalik {
  int d;
  double l2, l4, l5;
  double w1, w2, w3, w4, w5, e1, e2, e3, e4;
  long points;
  explicit GenzMalik(int dim) : d(dim) {
    l2 = std::sqrt(9.0 / 70.0);
    l4 = std::sqrt(9.0 / 10.0);
    l5 = std::sqrt(9.0 / 19.0);
    const double n = dim;
    w1 = (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0;
    w2 = 980.0 / 6561.0;
    w3 = (1820.0 - 400.0 * n) / 19683.0;
    w4 = 200.0 / 19683.0;
    w5 = 6859.0 / 19683.0 / std::ldexp(1.0, dim);
    e1 = (729.0 - 950.0 * n + 50.0 * n * n) / 729.0;
    e2 = 245.0 / 486.0;
    e3 = (265.0 - 100.0 * n) / 1458.0;
    e4 = 25.0 / 729.0;
    points = 1 + 4L * dim + 2L * dim * (dim - 1) + (1L << dim);
  }

  void apply(const VecIntegrand& f, int fdim, Box& b) const {
    std::vector<double> x(b.c), out(static_cast<std::size_t>(fdim));
    std::vector<double> f0(static_cast<std::size_t>(fdim)), s2(f0.size(), 0.0), s3(f0.size(), 0.0),
        s4(f0.size(), 0.0), s5(f0.size(), 0.0);
    b.diff.assign(static_cast<std::size_t>(d) * fdim, 0.0);
    f(x.data(), f0.data());
    const double ratio = (l2 / l4) * (l2 / l4);
    std::vector<double> a2(f0.size()), a3(f0.size());
    for (int i = 0; i < d; ++i) {
      std::fill(a2.begin(), a2.end(), 0.0);
      std::fill(a3.begin(), a3.end(), 0.0);
      for (double sg : {-1.0, 1.0}) {
        x[i] = b.c[i] + sg * l2 * b.h[i];
        f(x.data(), out.data());
        for (int j = 0; j < fdim; ++j) a2[j] += out[j];
        x[i] = b.c[i] + sg * l4 * b.h[i];
        f(x.data(), out.data());
        for (int j = 0; j < fdim; ++j) a3[j] += out[j];
      }
      x[i] = b.c[i];
      for (int j = 0; j < fdim; ++j) {
        s2[j] += a2[j];
        s3[j] += a3[j];
        b.diff[static_cast<std::size_t>(i) * fdim + j] = std::abs(a2[j] - 2.0 * f0[j] - ratio * (a3[j] - 2.0 * f0[j]));
      }
    }
    for (int i = 0; i < d; ++i)
      for (int k = i + 1; k < d; ++k)
        for (double si : {-1.0, 1.0})
          for (double sk : {-1.0, 1.0}) {
            x[i] = b.c[i] + si * l4 * b.h[i];
            x[k] = b.c[k] + sk * l4 * b.h[k];
            f(x.data(), out.data());
            for (int j = 0; j < fdim; ++j) s4[j] += out[j];
            x[i] = b.c[i];
            x[k] = b.c[k];
          }
    for (long m = 0; m < (1L << d); ++m) {
      for (int i = 0; i < d; ++i) x[i] = b.c[i] + ((m >> i) & 1 ? l5 : -l5) * b.h[i];
      f(x.data(), out.data());
      for (int j = 0; j < fdim; ++j) s5[j] += out[j];
    }
    double vol = 1.0;
    for (int i = 0; i < d; ++i) vol *= 2.0 * b.h[i];
    b.val.assign(f0.size(), 0.0);
    b.err.assign(f0.size(), 0.0);
    for (int j = 0; j < fdim; ++j) {
      const double r7 = vol * (w1 * f0[j] + w2 * s2[j] + w3 * s3[j] + w4 * s4[j] + w5 * s5[j]);
      const double r5 = vol * (e1 * f0[j] + e2 * s2[j] + e3 * s3[j] + e4 * s4[j]);
      b.val[j] = r7;
      b.err[j] = std::abs(r7 - r5);
    }
  }
};

}  // namespace

CubatureResult adaptive_cubature(const VecIntegrand& f, int dim, int fdim, const CubatureOptions& opt) {
  if (dim < 2) throw std::invalid_argument("adaptive_cubature: dim >= 2 required");
  if (fdim < 1) throw std::invalid_argument("adaptive_cubature: fdim >= 1 required");
  if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0)) throw std::invalid_argument("adaptive_cubature: tolerances must be > 0");
  const GenzMalik rule(dim);
  const int m0 = std::max(1, opt.initial_splits);
  const auto F = static_cast<std::size_t>(fdim);

  std::vector<Box> boxes;
  {
    long n0 = 1;
    for (int i = 0; i < dim; ++i) n0 *= m0;
    boxes.resize(static_cast<std::size_t>(n0));
    for (long id = 0; id < n0; ++id) {
      Box& b = boxes[static_cast<std::size_t>(id)];
      b.c.resize(static_cast<std::size_t>(dim));
      b.h.assign(static_cast<std::size_t>(dim), 0.5 / m0);
      long r = id;
      for (int i = 0; i < dim; ++i) {
        b.c[i] = (static_cast<double>(r % m0) + 0.5) / m0;
        r /= m0;
      }
    }
    parallel_for(boxes.size(), [&](std::size_t i) { rule.apply(f, fdim, boxes[i]); }, opt.workers);
  }
  long evals = static_cast<long>(boxes.size()) * rule.points;

  std::vector<double> tot(F, 0.0), etot(F, 0.0);
  auto recompute = [&] {
    std::fill(tot.begin(), tot.end(), 0.0);
    std::fill(etot.begin(), etot.end(), 0.0);
    std::vector<double> col;
    col.reserve(boxes.size());
    for (std::size_t j = 0; j < F; ++j) {
      col.clear();
      for (const auto& b : boxes)
        if (b.alive) col.push_back(b.val[j]);
      tot[j] = pairwise_sum(col);
      col.clear();
      for (const auto& b : boxes)
        if (b.alive) col.push_back(b.err[j]);
      etot[j] = pairwise_sum(col);
    }
  };
  std::vector<double> tol(F, 1.0);
  auto update_tol = [&] {
    double shared = 0.0;
    for (double v : tot) shared += std::abs(v);
    for (std::size_t j = 0; j < F; ++j) {
      const double scale = opt.norm == ErrorNorm::shared ? shared : std::abs(tot[j]);
      tol[j] = std::max(opt.abs_tol, opt.rel_tol * scale);
    }
  };
  auto score = [&](Box& b) {
    double k = 0.0;
    for (std::size_t j = 0; j < F; ++j) k = std::max(k, b.err[j] / tol[j]);
    b.key = k;
  };
  auto split_axis = [&](const Box& b) {
    int best = 0;
    double bestv = -1.0;
    for (int i = 0; i < dim; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < F; ++j) v += b.diff[static_cast<std::size_t>(i) * F + j] / tol[j];
      // ties go to the widest side
      if (v > bestv * (1.0 + 1e-12) || (std::abs(v - bestv) <= 1e-12 * bestv && b.h[i] > b.h[best])) {
        bestv = v;
        best = i;
      }
    }
    return best;
  };
  auto converged = [&] {
    for (std::size_t j = 0; j < F; ++j)
      if (!(etot[j] <= tol[j])) return false;
    return true;
  };

  recompute();
  update_tol();
  using Entry = std::pair<double, std::size_t>;
  auto cmp = [](const Entry& x, const Entry& y) {
    if (x.first != y.first) return x.first < y.first;
    return x.second > y.second;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    score(boxes[i]);
    heap.push({boxes[i].key, i});
  }

  int round = 0;
  bool ok = converged();
  while (!ok && evals + 2L * opt.batch * rule.points <= opt.max_evals && !heap.empty()) {
    std::vector<std::size_t> parents;
    while (!heap.empty() && static_cast<int>(parents.size()) < opt.batch) {
      parents.push_back(heap.top().second);
      heap.pop();
    }
    std::vector<Box> kids(parents.size() * 2);
    for (std::size_t q = 0; q < parents.size(); ++q) {
      const Box& p = boxes[parents[q]];
      const int ax = split_axis(p);
      for (int side = 0; side < 2; ++side) {
        Box& k = kids[2 * q + static_cast<std::size_t>(side)];
        k.c = p.c;
        k.h = p.h;
        k.h[ax] *= 0.5;
        k.c[ax] += (side ? 0.5 : -0.5) * p.h[ax];
      }
    }
    parallel_for(kids.size(), [&](std::size_t i) { rule.apply(f, fdim, kids[i]); }, opt.workers);
    evals += static_cast<long>(kids.size()) * rule.points;
    for (std::size_t q = 0; q < parents.size(); ++q) {
      Box& p = boxes[parents[q]];
      for (std::size_t j = 0; j < F; ++j) {
        tot[j] += kids[2 * q].val[j] + kids[2 * q + 1].val[j] - p.val[j];
        etot[j] += kids[2 * q].err[j] + kids[2 * q + 1].err[j] - p.err[j];
      }
      p = std::move(kids[2 * q]);
      score(p);
      heap.push({p.key, parents[q]});
      // push_back may reallocate; p is not used past this point
      boxes.push_back(std::move(kids[2 * q + 1]));
      score(boxes.back());
      heap.push({boxes.back().key, boxes.size() - 1});
    }
    if (++round % 64 == 0) recompute();
    update_tol();
    ok = converged();
  }
  recompute();
  update_tol();

  CubatureResult res;
  res.value = tot;
  res.error = etot;
  res.n_evals = evals;
  res.n_boxes = static_cast<long>(boxes.size());
  res.converged = converged();
  return res;
}

}  // namespace dslt
