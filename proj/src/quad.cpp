#include "btx/quad.hpp"
#include "btx/errors.hpp"
#include <algorithm>
#include <queue>

namespace btx {

namespace {

// Gauss-Kronrod 7/15 on [-1,1]; odd-index Kronrod nodes are the Gauss-7 nodes.
const double kx[15] = {
    -0.991455371120812639206854697526329, -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926, -0.741531185599394439863864773280788,
    -0.586087235467691130294144838258730, -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245, 0.0,
    0.207784955007898467600689403773245,  0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,  0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,  0.949107912342758524526189684047851,
    0.991455371120812639206854697526329};
const double kw[15] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
    0.204432940075298892414161999234649, 0.190350578064785409913256402421014,
    0.169004726639267902826583426598550, 0.140653259715525918745189590510238,
    0.104790010322250183839876322541518, 0.063092092629978553290700663189204,
    0.022935322010529224963732008058970};
const double gw[7] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                      0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
                      0.381830050505118944950369775488975, 0.279705391489276667901467771423780,
                      0.129484966168869693270611432679082};

struct Interval {
  double a, b, err;
  std::vector<cplx> val;
  bool operator<(const Interval& o) const { return err < o.err; }
};

Interval eval_interval(const std::function<void(double, cplx*)>& f, int dim, double a,
                       double b, std::vector<cplx>& scratch) {
  Interval iv{a, b, 0.0, std::vector<cplx>(dim, cplx(0))};
  std::vector<cplx> g(dim, cplx(0));
  double h = 0.5 * (b - a), m = 0.5 * (a + b);
  for (int i = 0; i < 15; ++i) {
    f(m + h * kx[i], scratch.data());
    for (int d = 0; d < dim; ++d) iv.val[d] += kw[i] * h * scratch[d];
    if (i % 2 == 1)
      for (int d = 0; d < dim; ++d) g[d] += gw[i / 2] * h * scratch[d];
  }
  for (int d = 0; d < dim; ++d) iv.err += std::abs(iv.val[d] - g[d]);
  return iv;
}

} // namespace

QuadResult gk_integrate(const std::function<void(double, cplx*)>& f, int dim, double a,
                        double b, const QuadOpts& opts) {
  QuadResult res;
  res.value.assign(dim, cplx(0));
  if (a == b) return res;
  std::vector<cplx> scratch(dim);
  std::priority_queue<Interval> heap;
  std::vector<cplx> sum(dim, cplx(0));
  double tot_err = 0;
  auto push = [&](Interval iv) {
    tot_err += iv.err;
    for (int d = 0; d < dim; ++d) sum[d] += iv.val[d];
    heap.push(std::move(iv));
  };
  push(eval_interval(f, dim, a, b, scratch));
  res.evals = 15;
  int n_intervals = 1;
  while (true) {
    double tot_norm = 0;
    for (auto& z : sum) tot_norm += std::abs(z);
    if (tot_err <= std::max(opts.abs_tol, opts.rel_tol * tot_norm) ||
        n_intervals >= opts.max_intervals)
      break;
    Interval worst = heap.top();
    heap.pop();
    tot_err -= worst.err;
    for (int d = 0; d < dim; ++d) sum[d] -= worst.val[d];
    double m = 0.5 * (worst.a + worst.b);
    push(eval_interval(f, dim, worst.a, m, scratch));
    push(eval_interval(f, dim, m, worst.b, scratch));
    res.evals += 30;
    ++n_intervals;
  }
  res.value = sum;
  res.err = tot_err;
  return res;
}

cplx gk_integrate1(const std::function<cplx(double)>& f, double a, double b,
                   const QuadOpts& opts, double* err) {
  auto wrapped = [&](double t, cplx* out) { out[0] = f(t); };
  QuadResult r = gk_integrate(wrapped, 1, a, b, opts);
  if (err) *err = r.err;
  return r.value[0];
}

cplx residue_at_infinity_circle(const std::function<cplx(cplx)>& f, cplx c, double R,
                                int n) {
  // -(1/2pi i) * sum f(x_k) * i R e^{i t_k} * (2pi/n) = -(R/n) * sum f(x_k) e^{i t_k}
  cplx s = 0;
  for (int k = 0; k < n; ++k) {
    double t = 2.0 * pi * k / n;
    cplx e = std::exp(iu * t);
    s += f(c + R * e) * e;
  }
  return -(R / double(n)) * s;
}

} // namespace btx
