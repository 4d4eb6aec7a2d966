#include "btx/theta.hpp"
#include "btx/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace btx {
namespace {

constexpr double PI = 3.141592653589793238462643383279502884;
const cplx I(0.0, 1.0);

// bilinear (non-conjugating) dot product
cplx bdot(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return a.cwiseProduct(b).sum();
}

// odometer over the box [-R,R]^g; returns false when exhausted
bool next_index(Eigen::VectorXi& n, int R) {
  for (int j = 0; j < n.size(); ++j) {
    if (n[j] < R) {
      ++n[j];
      for (int k = 0; k < j; ++k) n[k] = -R;
      return true;
    }
  }
  return false;
}

Eigen::VectorXi mod2(const Eigen::VectorXi& v) {
  Eigen::VectorXi r = v;
  for (int i = 0; i < r.size(); ++i) r[i] = ((r[i] % 2) + 2) % 2;
  return r;
}

// all ascending index blocks of given size from {0..n-1}
void blocks_of_size(int n, int sz, std::vector<std::vector<int>>& out) {
  std::vector<int> cur(sz);
  std::function<void(int, int)> rec = [&](int start, int pos) {
    if (pos == sz) {
      out.push_back(cur);
      return;
    }
    for (int i = start; i <= n - (sz - pos); ++i) {
      cur[pos] = i;
      rec(i + 1, pos + 1);
    }
  };
  if (sz == 0) out.push_back({});
  else rec(0, 0);
}

} // namespace

ThetaContext::ThetaContext(const Eigen::MatrixXcd& tau) : tau_(tau) {
  require(tau.rows() == tau.cols(), "InternalError", "tau must be square");
  g_ = static_cast<int>(tau.rows());
  if (g_ == 0) return;
  require((tau - tau.transpose()).cwiseAbs().maxCoeff() < 1e-8, "InternalError",
          "tau must be symmetric");
  Eigen::MatrixXd imt = tau.imag();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(imt);
  lam_min_ = es.eigenvalues().minCoeff();
  require(lam_min_ > 0, "InternalError", "Im tau must be positive definite");
  // post-reduction arguments satisfy |Im z|_inf <= max_j sum_k |Im tau_jk| / 2
  // plus a safety margin for half-characteristic shifts
  budget_ = 0.75 * imt.cwiseAbs().rowwise().sum().maxCoeff() + 0.25;
  pick_radius();
}

void ThetaContext::pick_radius() {
  // smallest R with sum_{|n|_inf > R} exp(-pi lam_min s^2 + 2 pi budget g s)
  // below 1e-14, shells bounded by 2g(2s+1)^{g-1} points
  R_ = 6;
  for (; R_ <= 64; ++R_) {
    double tail = 0;
    for (int s = R_ + 1; s <= R_ + 80; ++s) {
      double e = -PI * lam_min_ * double(s) * s + 2 * PI * budget_ * g_ * s;
      double shell = 2.0 * g_ * std::pow(2.0 * s + 1.0, g_ - 1);
      double t = shell * std::exp(e);
      tail += t;
      if (t < 1e-300) break;
    }
    if (tail < 1e-14) return;
  }
  fail("BudgetExceeded", "theta truncation radius exceeds 64 for this tau");
}

Scaled ThetaContext::theta_s(const Eigen::VectorXcd& z) const {
  require(z.size() == g_, "InternalError", "theta argument has wrong length");
  if (g_ == 0) return Scaled::of(1.0);
  Eigen::VectorXi lam, mu;
  Eigen::VectorXcd z0;
  lattice_reduce(tau_, z, lam, mu, &z0);
  // lattice_reduce returns the remainder of z - lam - tau mu
  require(z0.imag().cwiseAbs().maxCoeff() <= budget_, "BudgetExceeded",
          "reduced theta argument exceeds the truncation guarantee");
  cplx s = 0;
  Eigen::VectorXi n = Eigen::VectorXi::Constant(g_, -R_);
  n[0] = -R_ - 1;
  while (next_index(n, R_)) {
    Eigen::VectorXcd nc = n.cast<double>().cast<cplx>();
    cplx e = I * PI * bdot(nc, tau_ * nc) - 2.0 * I * PI * bdot(z0, nc);
    s += std::exp(e);
  }
  Eigen::VectorXcd mc = mu.cast<double>().cast<cplx>();
  cplx E = -I * PI * bdot(mc, tau_ * mc) - 2.0 * I * PI * bdot(z0, mc);
  return Scaled{s * std::exp(I * E.imag()), E.real()}.norm();
}

Eigen::VectorXcd ThetaContext::theta_grad(const Eigen::VectorXcd& z) const {
  require(z.size() == g_, "InternalError", "theta argument has wrong length");
  Eigen::VectorXcd grad = Eigen::VectorXcd::Zero(g_);
  if (g_ == 0) return grad;
  Eigen::VectorXi lam, mu;
  Eigen::VectorXcd z0;
  lattice_reduce(tau_, z, lam, mu, &z0);
  require(z0.imag().cwiseAbs().maxCoeff() <= budget_, "BudgetExceeded",
          "reduced theta argument exceeds the truncation guarantee");
  cplx s = 0;
  Eigen::VectorXi n = Eigen::VectorXi::Constant(g_, -R_);
  n[0] = -R_ - 1;
  while (next_index(n, R_)) {
    Eigen::VectorXcd nc = n.cast<double>().cast<cplx>();
    cplx t = std::exp(I * PI * bdot(nc, tau_ * nc) - 2.0 * I * PI * bdot(z0, nc));
    s += t;
    grad += (-2.0 * I * PI) * t * nc;
  }
  Eigen::VectorXcd mc = mu.cast<double>().cast<cplx>();
  cplx E = -I * PI * bdot(mc, tau_ * mc) - 2.0 * I * PI * bdot(z0, mc);
  // d/dz [exp(E(z)) Theta(z0(z))] with dz0/dz = 1, dE/dz_j = -2 i pi mu_j
  return std::exp(E) * (grad + (-2.0 * I * PI) * s * mc);
}

Scaled ThetaContext::theta_char_s(const Eigen::VectorXcd& eps,
                                  const Eigen::VectorXcd& del,
                                  const Eigen::VectorXcd& z) const {
  require(eps.size() == g_ && del.size() == g_ && z.size() == g_,
          "InternalError", "characteristic has wrong length");
  if (g_ == 0) return Scaled::of(1.0);
  Eigen::VectorXcd shift = z + 0.5 * del + 0.5 * (tau_ * eps);
  cplx P = 2.0 * I * PI *
           (bdot(eps, tau_ * eps) / 8.0 + 0.5 * bdot(eps, z) + 0.25 * bdot(eps, del));
  return Scaled{std::exp(I * P.imag()), P.real()}.norm() * theta_s(shift);
}

Eigen::VectorXcd ThetaContext::theta_char_grad0(const HalfPeriod& hp) const {
  Eigen::VectorXcd eps = hp.eps.cast<double>().cast<cplx>();
  Eigen::VectorXcd del = hp.del.cast<double>().cast<cplx>();
  Eigen::VectorXcd c0 = 0.5 * del + 0.5 * (tau_ * eps);
  cplx P0 = 2.0 * I * PI * (bdot(eps, tau_ * eps) / 8.0 + 0.25 * bdot(eps, del));
  cplx pref = std::exp(P0);
  // product rule: the prefactor contributes i pi eps_j per coordinate
  cplx th = theta_s(c0).value();
  Eigen::VectorXcd grad = theta_grad(c0);
  return pref * (grad + I * PI * th * eps);
}

ThetaContext ThetaContext::for_curve(const Curve& c, const PeriodData& pd,
                                     const AbelData& ad) {
  ThetaContext ctx(pd.tau);
  int g = ctx.g_;
  if (g == 0) return ctx;
  int nb = static_cast<int>(c.alpha.size());
  // half-period classes of the branch Abel images (base alpha_1)
  ctx.branch_.resize(nb);
  for (int k = 0; k < nb; ++k) {
    Eigen::VectorXcd u = abel_map_branch(c, pd, ad, k);
    Eigen::VectorXi lam, mu;
    require(is_half_period(pd.tau, u, lam, mu, 1e-6), "InternalError",
            "branch Abel image is not a half-period");
    ctx.branch_[k] = HalfPeriod{mod2(mu), mod2(lam)};
  }

  // Riemann constant class: the unique half-period making every block of
  // size g-1 odd and every block of size g+1 even
  std::vector<std::vector<int>> odd_blocks, even_blocks;
  blocks_of_size(nb, g - 1, odd_blocks);
  blocks_of_size(nb, g + 1, even_blocks);
  int found = -1;
  for (int cand = 0; cand < (1 << (2 * g)); ++cand) {
    Eigen::VectorXi ke(g), kd(g);
    for (int j = 0; j < g; ++j) {
      ke[j] = (cand >> j) & 1;
      kd[j] = (cand >> (g + j)) & 1;
    }
    auto cls = [&](const std::vector<int>& blk) {
      Eigen::VectorXi e = ke, d = kd;
      for (int i : blk) {
        e += ctx.branch_[i].eps;
        d += ctx.branch_[i].del;
      }
      return HalfPeriod{mod2(e), mod2(d)};
    };
    bool ok = true;
    for (const auto& b : odd_blocks)
      if (!cls(b).odd()) { ok = false; break; }
    if (ok)
      for (const auto& b : even_blocks)
        if (cls(b).odd()) { ok = false; break; }
    if (ok) {
      require(found < 0, "InternalError", "Riemann constant class not unique");
      found = cand;
      ctx.kvec_ = HalfPeriod{ke, kd};
    }
  }
  require(found >= 0, "InternalError", "no parity-consistent Riemann constant");
  ctx.has_dict_ = true;

  // cache the first odd block whose characteristic is numerically nonsingular
  for (const auto& b : odd_blocks) {
    HalfPeriod hp = ctx.partition_to_halfperiod(b);
    if (ctx.theta_char_grad0(hp).norm() > 1e-6) {
      ctx.delta_ = hp;
      ctx.delta_block_ = b;
      return ctx;
    }
  }
  fail("SingularDelta", "every odd characteristic has vanishing gradient");
}

const HalfPeriod& ThetaContext::branch_class(int k) const {
  require(has_dict_, "InternalError", "context built without a curve");
  require(k >= 0 && k < static_cast<int>(branch_.size()), "InternalError",
          "branch index out of range");
  return branch_[k];
}

const HalfPeriod& ThetaContext::riemann_constant() const {
  require(has_dict_, "InternalError", "context built without a curve");
  return kvec_;
}

const HalfPeriod& ThetaContext::delta() const {
  require(has_dict_, "InternalError", "context built without a curve");
  return delta_;
}

const std::vector<int>& ThetaContext::delta_block() const {
  require(has_dict_, "InternalError", "context built without a curve");
  return delta_block_;
}

HalfPeriod ThetaContext::partition_to_halfperiod(const std::vector<int>& block) const {
  require(has_dict_, "InternalError", "context built without a curve");
  int nb = static_cast<int>(branch_.size());
  int sz = static_cast<int>(block.size());
  // block sizes run g+1, g-1, g-3, ... down to 0 or 1
  require(sz <= g_ + 1 && (g_ + 1 - sz) % 2 == 0, "BadPartition",
          "block size must be g+1-2m");
  std::vector<int> seen(nb, 0);
  for (int i : block) {
    require(i >= 0 && i < nb, "BadPartition", "branch index out of range");
    require(!seen[i]++, "BadPartition", "repeated branch index");
  }
  Eigen::VectorXi e = kvec_.eps, d = kvec_.del;
  for (int i : block) {
    e += branch_[i].eps;
    d += branch_[i].del;
  }
  return HalfPeriod{mod2(e), mod2(d)};
}

cplx c_delta(const ThetaContext& ctx, const PeriodData& pd) {
  require(ctx.has_dictionary(), "InternalError", "context built without a curve");
  int g = ctx.g();
  Eigen::VectorXcd grad = ctx.theta_char_grad0(ctx.delta());
  require(grad.norm() > 1e-10, "SingularDelta",
          "gradient of Theta_Delta vanishes at the origin");
  cplx s = 0;
  for (int j = 0; j < g; ++j) s += pd.sigma(j, g - 1) * grad[j];
  return -s;
}

} // namespace btx
