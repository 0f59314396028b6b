#include "ifsldp/ldp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "ifsldp/error.hpp"

namespace ifsldp {

namespace {

constexpr double kTrendSlack = 1.1;
constexpr double kTrendFloor = 1e-12;

double sup_gap(const std::vector<double>& a, const std::vector<double>& b, double scale_a) {
  double g = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::abs(a[i] * scale_a - b[i]));
  return g;
}

BetaRecord run_one(const IfsSystem& sys, const Potential& A, double beta, const Grid& grid,
                   const ZeroTempPack& zero, const SweepOptions& opt) {
  BetaRecord r;
  r.beta = beta;
  try {
    r.eigen = eigen_power(sys, A, beta, grid, opt.eigen_tol);
    r.weights = normalize(sys, A, beta, grid, r.eigen);
    r.rho = gibbs_measure(sys, grid, r.weights, opt.gibbs_tol);
    const HolonomicLift lift = holonomic_lift(sys, grid, r.weights, r.rho);
    const PressureIdentity pid = pressure_identity(sys, A, beta, grid, r.weights, lift, r.eigen);

    r.lambda = r.eigen.lambda;
    r.log_lambda = r.eigen.log_lambda;
    r.log_space = r.eigen.log_space;
    r.pressure_over_beta = pressure(r.eigen) / beta;
    r.gap_mA = std::abs(r.pressure_over_beta - zero.mA);
    r.gap_V = sup_gap(r.eigen.log_h, zero.V, 1.0 / beta);
    r.gap_q = sup_gap(r.weights.log_q, zero.q, 1.0 / beta);
    r.eigen_residual = r.eigen.residual;
    r.gibbs_residual = r.rho.residual;
    r.entropy = pid.entropy;
    r.identity_residual = pid.residual;
    r.ok = true;
  } catch (const Error& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

struct Series {
  std::vector<double> betas;
  std::vector<double> values;
};

// Values of a per-beta statistic over the successful records.
template <class F>
Series series(const BetaSweep& sweep, F&& value) {
  Series s;
  for (const auto& r : sweep.records) {
    if (!r.ok) continue;
    s.betas.push_back(r.beta);
    s.values.push_back(value(r));
  }
  return s;
}

CheckResult judge(std::string name, const Series& s, double target, const CheckOptions& opt) {
  CheckResult c;
  c.name = std::move(name);
  c.rhs = target;
  c.tol = opt.tol;
  for (double v : s.values) c.trend.push_back(std::abs(v - target));
  if (s.values.size() < 3) {
    c.verdict = Verdict::inconclusive;
    c.detail = "fewer than three converged betas";
    if (!s.values.empty()) {
      c.lhs = s.values.back();
      c.gap = c.trend.back();
    }
    return c;
  }
  c.lhs = s.values.back();
  c.gap = c.trend.back();
  const std::size_t k = c.trend.size();
  const bool gate = monotone_trend({c.trend[k - 3], c.trend[k - 2], c.trend[k - 1]}, 0);
  const bool close = c.gap <= opt.tol;
  std::ostringstream os;
  os << "limit estimate at beta=" << s.betas.back() << (gate ? "" : "; gap not non-increasing over the last three betas");
  c.detail = os.str();
  if (gate && close)
    c.verdict = Verdict::pass;
  else
    c.verdict = opt.place_dependent ? Verdict::inconclusive : Verdict::fail;
  return c;
}

std::string fmt_g(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

bool monotone_trend(const std::vector<double>& gaps, std::size_t burn_in) {
  for (std::size_t k = burn_in; k + 1 < gaps.size(); ++k)
    if (gaps[k + 1] > kTrendSlack * gaps[k] + kTrendFloor) return false;
  return true;
}

BetaSweep beta_sweep(const IfsSystem& sys, const Potential& A, const std::vector<double>& betas,
                     const Grid& grid, const ZeroTempPack& zero, const SweepOptions& opt) {
  for (std::size_t k = 0; k < betas.size(); ++k)
    if (!(betas[k] > 0.0) || (k > 0 && betas[k] <= betas[k - 1]))
      fail(ErrorCode::argument, "betas must be positive and strictly increasing");

  BetaSweep sw;
  sw.betas = betas;
  sw.mA = zero.mA;
  sw.records.resize(betas.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < betas.size();)
      sw.records[k] = run_one(sys, A, betas[k], grid, zero, opt);
  };
  const std::size_t n_threads = std::clamp<std::size_t>(opt.threads, 1, std::max<std::size_t>(1, betas.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<double> g_mA, g_V, g_q;
  for (const auto& r : sw.records) {
    if (!r.ok) {
      ++sw.failures;
      continue;
    }
    g_mA.push_back(r.gap_mA);
    g_V.push_back(r.gap_V);
    g_q.push_back(r.gap_q);
  }
  sw.trend_mA = monotone_trend(g_mA, opt.burn_in);
  sw.trend_V = monotone_trend(g_V, opt.burn_in);
  sw.trend_q = monotone_trend(g_q, opt.burn_in);
  return sw;
}

RateFunction rate_function(const Density& d) {
  RateFunction r;
  r.I.resize(d.lambda.size());
  for (std::size_t i = 0; i < d.lambda.size(); ++i) r.I[i] = -d.lambda[i];
  return r;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "PASS";
    case Verdict::fail:
      return "FAIL";
    case Verdict::inconclusive:
      return "INCONCLUSIVE";
  }
  return "?";
}

std::vector<TestFunction> default_battery() {
  return {
      {"affine", [](double x) { return x; }},
      {"bump", [](double x) { return 1.0 - 16.0 * (x - 0.5) * (x - 0.5); }},
      {"tent", [](double x) { return std::max(0.0, 1.0 - std::abs(x - 0.75) / 0.125); }},
  };
}

std::vector<CheckResult> ldp_ball_check(const BetaSweep& sweep, const Grid& grid,
                                        const RateFunction& I, const std::vector<double>& centers,
                                        double radius, const CheckOptions& opt) {
  std::vector<CheckResult> out;
  for (double x : centers) {
    double min_open = std::numeric_limits<double>::infinity();
    double min_closed = min_open;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double d = std::abs(grid.point(i) - x);
      if (d < radius) min_open = std::min(min_open, I.I[i]);
      if (d <= radius) min_closed = std::min(min_closed, I.I[i]);
    }
    const Series open = series(sweep, [&](const BetaRecord& r) {
      return log_measure_ball(r.rho, grid, x, radius) / r.beta;
    });
    const Series closed = series(sweep, [&](const BetaRecord& r) {
      return log_measure_ball(r.rho, grid, x, radius, true) / r.beta;
    });

    CheckResult c = judge("ball[x=" + fmt_g(x) + ",r=" + fmt_g(radius) + "]", open, -min_open, opt);
    std::ostringstream os;
    os << c.detail;
    if (!closed.values.empty()) {
      // Closed-ball upper bound, open-ball lower bound.
      const bool upper = closed.values.back() <= -min_closed + opt.tol;
      const bool lower = open.values.back() >= -min_open - opt.tol;
      os << "; closed-ball upper bound " << closed.values.back() << " <= " << -min_closed
         << (upper ? " holds" : " violated") << "; open-ball lower bound " << open.values.back()
         << " >= " << -min_open << (lower ? " holds" : " violated");
    }
    if (radius < 4.0 * grid.spacing()) {
      c.verdict = Verdict::inconclusive;
      os << "; radius below 4h cannot separate open from closed balls";
    }
    c.detail = os.str();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CheckResult> varadhan_check(const BetaSweep& sweep, const Grid& grid,
                                        const RateFunction& I,
                                        const std::vector<TestFunction>& battery,
                                        const CheckOptions& opt) {
  std::vector<CheckResult> out;
  for (const auto& tf : battery) {
    double target = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i)
      target = std::max(target, tf.f(grid.point(i)) - I.I[i]);
    const Series s = series(sweep, [&](const BetaRecord& r) {
      return measure_log_exp_integral(r.rho, grid, tf.f, r.beta) / r.beta;
    });
    out.push_back(judge("varadhan[" + tf.name + "]", s, target, opt));
  }
  return out;
}

std::vector<CheckResult> idempotent_limit_check(const BetaSweep& sweep, const Grid& grid,
                                                const Density& density,
                                                const std::vector<TestFunction>& battery,
                                                const CheckOptions& opt) {
  std::vector<CheckResult> out;
  for (const auto& tf : battery) {
    std::vector<double> f(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f[i] = tf.f(grid.point(i));
    const double target = density.functional(f);
    const Series s = series(sweep, [&](const BetaRecord& r) {
      return measure_log_exp_integral(r.rho, grid, tf.f, r.beta) / r.beta;
    });
    out.push_back(judge("idempotent[" + tf.name + "]", s, target, opt));
  }
  return out;
}

}  // namespace ifsldp
