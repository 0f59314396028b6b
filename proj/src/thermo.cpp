#include "ifsldp/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "ifsldp/error.hpp"

namespace ifsldp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Below this a log mass is treated as numerically absent when checking the
// log-scale convergence of the Gibbs push.
constexpr double kLogMassFloor = -700.0;
constexpr double kLogChangeTol = 1e-9;

double log_sum_exp2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

double log_sum_exp(const std::vector<double>& v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double sup_norm_diff(const GridFunction& a, const GridFunction& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double max_of(const GridFunction& f) { return *std::max_element(f.begin(), f.end()); }

// Scatter-add in log space: out[t] = log sum exp(contributions to t).
class LogAccumulator {
 public:
  explicit LogAccumulator(std::size_t n) : max_(n, kNegInf), sum_(n, 0.0) {}

  void observe(std::size_t t, double c) { max_[t] = std::max(max_[t], c); }
  void add(std::size_t t, double c) {
    if (c != kNegInf) sum_[t] += std::exp(c - max_[t]);
  }
  GridFunction result() const {
    GridFunction out(max_.size(), kNegInf);
    for (std::size_t t = 0; t < out.size(); ++t)
      if (max_[t] != kNegInf) out[t] = max_[t] + std::log(sum_[t]);
    return out;
  }

 private:
  std::vector<double> max_;
  std::vector<double> sum_;
};

}  // namespace

// ---------------------------------------------------------------------------
// TransferKernel

TransferKernel::TransferKernel(const IfsSystem& sys, const Potential& A, double beta,
                               const Grid& grid)
    : n_(grid.size()), m_(sys.size()), log_space_(beta * A.max_abs() > kLogSpaceThreshold) {
  if (A.arity() != m_) fail(ErrorCode::argument, "potential arity does not match the system");
  log_p_.resize(m_);
  log_coeff_.resize(m_ * n_);
  stencil_.resize(m_ * n_);
  for (std::size_t j = 0; j < m_; ++j) {
    log_p_[j] = std::log(sys.weights[j]);
    for (std::size_t i = 0; i < n_; ++i) {
      const double x = grid.point(i);
      log_coeff_[j * n_ + i] = log_p_[j] + beta * A(j, x);
      stencil_[j * n_ + i] = grid.stencil(sys.maps[j](x));
    }
  }
  if (!log_space_) {
    coeff_.resize(log_coeff_.size());
    for (std::size_t k = 0; k < coeff_.size(); ++k) coeff_[k] = std::exp(log_coeff_[k]);
  }
}

TransferKernel::TransferKernel(const IfsSystem& sys, const Grid& grid)
    : TransferKernel(sys, Potential::constant(std::vector<double>(sys.size(), 0.0)), 0.0, grid) {}

double TransferKernel::at_image(const GridFunction& f, std::size_t j, std::size_t i) const {
  const auto& st = stencil_[j * n_ + i];
  return (1.0 - st.w) * f[st.lo] + st.w * f[st.lo + 1];
}

double TransferKernel::log_at_image(const GridFunction& log_f, std::size_t j,
                                    std::size_t i) const {
  const auto& st = stencil_[j * n_ + i];
  const double a = st.w < 1.0 ? std::log1p(-st.w) + log_f[st.lo] : kNegInf;
  const double b = st.w > 0.0 ? std::log(st.w) + log_f[st.lo + 1] : kNegInf;
  return log_sum_exp2(a, b);
}

GridFunction TransferKernel::apply(const GridFunction& f) const {
  GridFunction out(n_, 0.0);
  if (!log_space_) {
    for (std::size_t j = 0; j < m_; ++j)
      for (std::size_t i = 0; i < n_; ++i) out[i] += coeff_[j * n_ + i] * at_image(f, j, i);
    return out;
  }
  // Factor the largest exponent out of each node so e^{beta A} never overflows
  // on its own.
  for (std::size_t i = 0; i < n_; ++i) {
    double top = kNegInf;
    for (std::size_t j = 0; j < m_; ++j) top = std::max(top, log_coeff_[j * n_ + i]);
    double s = 0.0;
    for (std::size_t j = 0; j < m_; ++j)
      s += std::exp(log_coeff_[j * n_ + i] - top) * at_image(f, j, i);
    out[i] = s * std::exp(top);
  }
  return out;
}

GridFunction TransferKernel::apply_log(const GridFunction& log_f) const {
  GridFunction out(n_);
  std::vector<double> terms(m_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < m_; ++j)
      terms[j] = log_coeff_[j * n_ + i] + log_at_image(log_f, j, i);
    out[i] = log_sum_exp(terms);
  }
  return out;
}

GridFunction TransferKernel::push(const GridFunction& mass, const std::vector<double>& g) const {
  GridFunction out(n_, 0.0);
  for (std::size_t j = 0; j < m_; ++j) {
    const double p = std::exp(log_p_[j]);
    for (std::size_t i = 0; i < n_; ++i) {
      const auto& st = stencil_[j * n_ + i];
      const double v = mass[i] * p * g[j * n_ + i];
      out[st.lo] += (1.0 - st.w) * v;
      out[st.lo + 1] += st.w * v;
    }
  }
  return out;
}

GridFunction TransferKernel::push_log(const GridFunction& log_mass,
                                      const std::vector<double>& log_g) const {
  LogAccumulator acc(n_);
  auto visit = [&](auto&& sink) {
    for (std::size_t j = 0; j < m_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) {
        const auto& st = stencil_[j * n_ + i];
        const double base = log_mass[i] + log_p_[j] + log_g[j * n_ + i];
        if (base == kNegInf) continue;
        if (st.w < 1.0) sink(st.lo, base + std::log1p(-st.w));
        if (st.w > 0.0) sink(st.lo + 1, base + std::log(st.w));
      }
    }
  };
  visit([&](std::size_t t, double c) { acc.observe(t, c); });
  visit([&](std::size_t t, double c) { acc.add(t, c); });
  return acc.result();
}

GridFunction apply_transfer(const IfsSystem& sys, const Potential& A, double beta,
                            const Grid& grid, const GridFunction& f) {
  return TransferKernel(sys, A, beta, grid).apply(f);
}

// ---------------------------------------------------------------------------
// Eigenpairs

namespace {

void finish_eigenpair(const TransferKernel& L, EigenPair& ep) {
  const double top = max_of(ep.log_h);
  for (double& v : ep.log_h) v -= top;
  ep.h.resize(ep.log_h.size());
  for (std::size_t i = 0; i < ep.h.size(); ++i) ep.h[i] = std::exp(ep.log_h[i]);
  ep.lambda = std::exp(ep.log_lambda);
  const GridFunction lh = L.apply_log(ep.log_h);
  double r = 0.0;
  for (std::size_t i = 0; i < lh.size(); ++i)
    r = std::max(r, std::abs(std::exp(lh[i] - ep.log_lambda) - ep.h[i]));
  ep.residual = r;
  ep.log_space = L.log_space();
}

}  // namespace

EigenPair eigen_power(const IfsSystem& sys, const Potential& A, double beta, const Grid& grid,
                      double tol, std::size_t max_iter) {
  if (!(beta > 0.0)) fail(ErrorCode::argument, "beta must be positive");
  const TransferKernel L(sys, A, beta, grid);
  EigenPair ep;
  ep.beta = beta;

  double diff = std::numeric_limits<double>::infinity();
  if (!L.log_space()) {
    GridFunction h(grid.size(), 1.0);
    double scale = 1.0;
    std::size_t it = 0;
    while (it < max_iter) {
      GridFunction next = L.apply(h);
      scale = max_of(next);
      for (double& v : next) v /= scale;
      diff = sup_norm_diff(next, h);
      h.swap(next);
      ++it;
      if (diff < tol) break;
    }
    ep.iterations = it;
    ep.log_lambda = std::log(scale);
    ep.log_h.resize(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) ep.log_h[i] = std::log(h[i]);
  } else {
    GridFunction lh(grid.size(), 0.0);
    double top = 0.0;
    std::size_t it = 0;
    while (it < max_iter) {
      GridFunction next = L.apply_log(lh);
      top = max_of(next);
      diff = 0.0;
      for (std::size_t i = 0; i < next.size(); ++i) {
        next[i] -= top;
        diff = std::max(diff, std::abs(std::exp(next[i]) - std::exp(lh[i])));
      }
      lh.swap(next);
      ++it;
      if (diff < tol) break;
    }
    ep.iterations = it;
    ep.log_lambda = top;
    ep.log_h = std::move(lh);
  }
  if (!(diff < tol)) {
    std::ostringstream os;
    os << "power iteration did not converge in " << max_iter << " steps (beta = " << beta
       << ", last sup-norm change " << diff << ")";
    fail(ErrorCode::solver, os.str());
  }
  finish_eigenpair(L, ep);
  return ep;
}

std::vector<double> dyadic_schedule(int kmax) {
  std::vector<double> s;
  for (int k = 1; k <= kmax; ++k) s.push_back(1.0 - std::ldexp(1.0, -k));
  return s;
}

EigenPair eigen_discounted(const IfsSystem& sys, const Potential& A, double beta,
                           const Grid& grid, const std::vector<double>& schedule, double tol,
                           DiscountedTrace* trace) {
  if (!(beta > 0.0)) fail(ErrorCode::argument, "beta must be positive");
  if (schedule.empty()) fail(ErrorCode::argument, "empty discount schedule");
  for (std::size_t k = 0; k < schedule.size(); ++k) {
    if (!(schedule[k] > 0.0 && schedule[k] < 1.0) || (k > 0 && schedule[k] <= schedule[k - 1]))
      fail(ErrorCode::argument, "discount schedule must increase inside (0,1)");
  }
  const TransferKernel L(sys, A, beta, grid);
  constexpr double kInnerTol = 1e-14;
  constexpr std::size_t kInnerMax = 1000000;
  constexpr double kEigenfunctionTolFactor = 100.0;

  // T_s(c + w) = s c + T_s(w) for constants c, so the Banach iterates of T_s
  // are the iterates of w -> T_s(w) - max T_s(w) shifted by a scalar sequence.
  // The shape w converges geometrically independent of s; the fixed point is
  // u_s = w + m / (1 - s) with m = max T_s(w), hence (1 - s) max u_s = m.
  GridFunction w(grid.size(), 0.0);
  GridFunction scaled(grid.size());
  DiscountedTrace local;
  DiscountedTrace& tr = trace ? *trace : local;
  tr = {};

  GridFunction prev_w;
  GridFunction best_log_h;
  double best_log_lambda = 0.0;
  bool converged = false;
  std::size_t total_iter = 0;

  for (double s : schedule) {
    double m = 0.0;
    double diff = std::numeric_limits<double>::infinity();
    std::size_t it = 0;
    for (; it < kInnerMax && diff >= kInnerTol; ++it) {
      for (std::size_t i = 0; i < w.size(); ++i) scaled[i] = s * w[i];
      GridFunction next = L.apply_log(scaled);
      m = max_of(next);
      for (double& v : next) v -= m;
      diff = sup_norm_diff(next, w);
      w.swap(next);
    }
    total_iter += it;
    if (diff >= kInnerTol)
      fail(ErrorCode::solver, "discounted fixed point did not converge at s = " +
                                  std::to_string(s));

    tr.s.push_back(s);
    tr.raw_log_lambda.push_back(m);

    if (tr.s.size() == 1) {
      tr.extrapolated_log_lambda.push_back(m);
      best_log_lambda = m;
      best_log_h = w;
    } else {
      // Linear extrapolation of (log lambda, log h) in (1 - s) to s = 1.
      const std::size_t k = tr.s.size() - 1;
      const double d_now = 1.0 - tr.s[k];
      const double d_prev = 1.0 - tr.s[k - 1];
      const double ratio = d_now / (d_prev - d_now);
      const double ext = m + (m - tr.raw_log_lambda[k - 1]) * ratio;
      tr.extrapolated_log_lambda.push_back(ext);
      GridFunction lh(w.size());
      for (std::size_t i = 0; i < w.size(); ++i) lh[i] = w[i] + (w[i] - prev_w[i]) * ratio;
      // The eigenvalue can settle before the eigenfunction does, so both
      // extrapolants have to agree with the previous ones.
      double h_change = 0.0;
      if (k >= 2) {
        const double top = max_of(lh);
        const double prev_top = max_of(best_log_h);
        for (std::size_t i = 0; i < lh.size(); ++i)
          h_change = std::max(h_change, std::abs(std::exp(lh[i] - top) -
                                                 std::exp(best_log_h[i] - prev_top)));
      }
      const double lambda_change = std::abs(std::expm1(ext - best_log_lambda));
      best_log_lambda = ext;
      best_log_h = std::move(lh);
      if (k >= 2 && lambda_change < tol && h_change < kEigenfunctionTolFactor * tol) {
        converged = true;
        break;
      }
    }
    prev_w = w;
  }

  // A one-point schedule evaluates the discounted estimate at that s.
  if (schedule.size() == 1) converged = true;
  if (!converged) {
    std::ostringstream os;
    os << "discount schedule exhausted before successive eigenvalues agreed to " << tol
       << "; extrapolated log lambda trend:";
    for (double v : tr.extrapolated_log_lambda) os << " " << v;
    fail(ErrorCode::solver, os.str());
  }

  EigenPair ep;
  ep.beta = beta;
  ep.iterations = total_iter;
  ep.log_lambda = best_log_lambda;
  ep.log_h = std::move(best_log_h);
  finish_eigenpair(L, ep);
  return ep;
}

// ---------------------------------------------------------------------------
// Normalized weights and Gibbs measure

NormalizedWeights normalize(const IfsSystem& sys, const Potential& A, double beta,
                            const Grid& grid, const EigenPair& ep) {
  const TransferKernel L(sys, A, beta, grid);
  const std::size_t n = grid.size();
  const std::size_t m = sys.size();
  for (std::size_t i = 0; i < n; ++i) {
    // h itself may underflow at large beta; only log h has to stay finite.
    if (!std::isfinite(ep.log_h[i]))
      fail(ErrorCode::solver, "eigenfunction touches 0 at node " + std::to_string(i));
  }

  NormalizedWeights qw;
  qw.beta = beta;
  qw.n_maps = m;
  qw.n_points = n;
  qw.log_q.resize(m * n);
  qw.q.resize(m * n);
  std::vector<double> terms(m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double v = L.log_coeff(j, i) - L.log_weight(j) + L.log_at_image(ep.log_h, j, i) -
                       ep.log_lambda - ep.log_h[i];
      qw.log_q[j * n + i] = v;
      terms[j] = L.log_weight(j) + v;
    }
    const double log_z = log_sum_exp(terms);
    qw.raw_normalization_error = std::max(qw.raw_normalization_error, std::abs(std::expm1(log_z)));
    for (std::size_t j = 0; j < m; ++j) {
      qw.log_q[j * n + i] -= log_z;
      qw.q[j * n + i] = std::exp(qw.log_q[j * n + i]);
    }
  }
  return qw;
}

GibbsMeasure gibbs_measure(const IfsSystem& sys, const Grid& grid, const NormalizedWeights& qw,
                           double tol, std::size_t max_iter) {
  const TransferKernel K(sys, grid);
  const std::size_t n = grid.size();
  GridFunction lm(n, -std::log(static_cast<double>(n)));
  GridFunction mass(n, 1.0 / static_cast<double>(n));

  GibbsMeasure rho;
  rho.beta = qw.beta;
  double l1 = std::numeric_limits<double>::infinity();
  double log_change = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < max_iter) {
    GridFunction next = K.push_log(lm, qw.log_q);
    const double total = log_sum_exp(next);
    l1 = 0.0;
    log_change = 0.0;
    GridFunction next_mass(n);
    for (std::size_t i = 0; i < n; ++i) {
      next[i] -= total;
      next_mass[i] = std::exp(next[i]);
      l1 += std::abs(next_mass[i] - mass[i]);
      if (next[i] > kLogMassFloor || lm[i] > kLogMassFloor)
        log_change = std::max(log_change, std::abs(next[i] - lm[i]));
    }
    lm.swap(next);
    mass.swap(next_mass);
    ++it;
    if (l1 < tol && log_change < kLogChangeTol) break;
  }
  if (!(l1 < tol && log_change < kLogChangeTol)) {
    std::ostringstream os;
    os << "Gibbs push did not converge in " << max_iter << " steps (L1 change " << l1
       << ", log change " << log_change << ")";
    fail(ErrorCode::solver, os.str());
  }
  rho.iterations = it;
  rho.log_mass = std::move(lm);
  rho.mass = std::move(mass);
  rho.residual = gibbs_residual(sys, grid, qw, rho.mass);
  return rho;
}

double gibbs_residual(const IfsSystem& sys, const Grid& grid, const NormalizedWeights& qw,
                      const GridFunction& mass) {
  const TransferKernel K(sys, grid);
  const GridFunction pushed = K.push(mass, qw.q);
  return sup_norm_diff(pushed, mass);
}

// ---------------------------------------------------------------------------
// Holonomic lift, entropy, pressure

GridFunction HolonomicLift::x_marginal() const {
  GridFunction out(n_points, 0.0);
  for (std::size_t j = 0; j < n_maps; ++j)
    for (std::size_t i = 0; i < n_points; ++i) out[i] += joint[j * n_points + i];
  return out;
}

std::vector<double> HolonomicLift::j_marginal() const {
  std::vector<double> out(n_maps, 0.0);
  for (std::size_t j = 0; j < n_maps; ++j)
    for (std::size_t i = 0; i < n_points; ++i) out[j] += joint[j * n_points + i];
  return out;
}

HolonomicLift holonomic_lift(const IfsSystem& sys, const Grid& grid, const NormalizedWeights& qw,
                             const GibbsMeasure& rho) {
  HolonomicLift lift;
  lift.n_maps = qw.n_maps;
  lift.n_points = qw.n_points;
  lift.joint.resize(qw.n_maps * qw.n_points);
  for (std::size_t j = 0; j < qw.n_maps; ++j)
    for (std::size_t i = 0; i < qw.n_points; ++i)
      lift.joint[j * qw.n_points + i] = sys.weights[j] * qw(j, i) * rho.mass[i];

  // Hat function g_k: sum pi g_k(x) is the x-marginal at k, sum pi g_k(phi_j x)
  // is the interpolation push of pi.
  const TransferKernel K(sys, grid);
  const GridFunction pushed = K.push(rho.mass, qw.q);
  lift.holonomy_residual = sup_norm_diff(pushed, lift.x_marginal());
  return lift;
}

double entropy(const HolonomicLift& lift, const NormalizedWeights& qw) {
  double h = 0.0;
  for (std::size_t k = 0; k < lift.joint.size(); ++k)
    if (lift.joint[k] > 0.0) h -= lift.joint[k] * qw.log_q[k];
  return h;
}

PressureIdentity pressure_identity(const IfsSystem& sys, const Potential& A, double beta,
                                   const Grid& grid, const NormalizedWeights& qw,
                                   const HolonomicLift& lift, const EigenPair& ep) {
  (void)sys;
  PressureIdentity out;
  out.pressure = pressure(ep);
  for (std::size_t j = 0; j < lift.n_maps; ++j)
    for (std::size_t i = 0; i < lift.n_points; ++i)
      out.energy += lift(j, i) * beta * A(j, grid.point(i));
  out.entropy = entropy(lift, qw);
  out.residual = std::abs(out.pressure - (out.energy + out.entropy));
  return out;
}

double pressure_identity_residual(const IfsSystem& sys, const Potential& A, double beta,
                                  const Grid& grid) {
  const EigenPair ep = eigen_power(sys, A, beta, grid);
  const NormalizedWeights qw = normalize(sys, A, beta, grid, ep);
  const GibbsMeasure rho = gibbs_measure(sys, grid, qw);
  const HolonomicLift lift = holonomic_lift(sys, grid, qw, rho);
  return pressure_identity(sys, A, beta, grid, qw, lift, ep).residual;
}

// ---------------------------------------------------------------------------
// Measure helpers

double measure_ball(const GibbsMeasure& rho, const Grid& grid, double x, double r, bool closed) {
  double s = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = std::abs(grid.point(i) - x);
    if (closed ? d <= r : d < r) s += rho.mass[i];
  }
  return s;
}

double log_measure_ball(const GibbsMeasure& rho, const Grid& grid, double x, double r,
                        bool closed) {
  std::vector<double> terms;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double d = std::abs(grid.point(i) - x);
    if (closed ? d <= r : d < r) terms.push_back(rho.log_mass[i]);
  }
  return log_sum_exp(terms);
}

double measure_log_exp_integral(const GibbsMeasure& rho, const Grid& grid,
                                const std::function<double(double)>& f, double beta) {
  std::vector<double> terms(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    terms[i] = beta * f(grid.point(i)) + rho.log_mass[i];
  return log_sum_exp(terms);
}

}  // namespace ifsldp
