#include <chrono>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "ifsldp/error.hpp"
#include "ifsldp/thermo.hpp"

using namespace ifsldp;

namespace {

// Closed forms for constant-per-map A on the binary system: h = 1 and the
// binary digits are i.i.d. with P(0) = 1 / (1 + e^{-beta}).
double closed_lambda(double beta) { return 0.5 * (1.0 + std::exp(-beta)); }
double digit_p0(double beta) { return 1.0 / (1.0 + std::exp(-beta)); }

double sum_nodes_below(const GibbsMeasure& rho, const Grid& g, double x) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (g.point(i) < x) s += rho.mass[i];
  return s;
}

}  // namespace

TEST_CASE("transfer operator on constants and f(x) = x") {
  const auto sys = fx::s1();
  const Grid g(257);
  const GridFunction one(g.size(), 1.0);
  for (double v : apply_transfer(sys, fx::zero(), 1.0, g, one)) CHECK(v == doctest::Approx(1.0));
  for (double v : apply_transfer(sys, fx::s1_const(), 1.0, g, one))
    CHECK(v == doctest::Approx(closed_lambda(1.0)).epsilon(1e-14));
  GridFunction id(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) id[i] = g.point(i);
  const auto lf = apply_transfer(sys, fx::s1_const(), 1.0, g, id);
  CHECK(lf[0] == doctest::Approx(0.5 * std::exp(-1.0) * 0.5).epsilon(1e-14));
}

TEST_CASE("log-space apply agrees with the linear form") {
  const auto sys = fx::s1();
  const Grid g(65);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  GridFunction f(g.size());
  for (double& v : f) v = unif(rng);
  const TransferKernel L(sys, fx::s1_place(), 3.0, g);
  const auto lin = L.apply(f);
  GridFunction lf(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) lf[i] = std::log(f[i]);
  const auto lg = L.apply_log(lf);
  for (std::size_t i = 0; i < f.size(); ++i) CHECK(std::exp(lg[i]) == doctest::Approx(lin[i]));
  CHECK(TransferKernel(sys, fx::s1_place(), 601.0, g).log_space());
  CHECK_FALSE(TransferKernel(sys, fx::s1_place(), 599.0, g).log_space());
}

TEST_CASE("push is the exact adjoint of interpolated evaluation") {
  const auto sys = fx::reducible4();
  const auto A = fx::reducible4_potential();
  const Grid g(101);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const TransferKernel L(sys, A, 2.0, g);
  for (int t = 0; t < 10; ++t) {
    GridFunction f(g.size()), mu(g.size());
    for (double& v : f) v = unif(rng);
    for (double& v : mu) v = unif(rng);
    // sum_x mu(x) (L f)(x) with the A-weights folded into g(j, x).
    std::vector<double> wts(sys.size() * g.size());
    for (std::size_t j = 0; j < sys.size(); ++j)
      for (std::size_t i = 0; i < g.size(); ++i)
        wts[j * g.size() + i] = std::exp(2.0 * A(j, g.point(i)));
    const auto lf = L.apply(f);
    const auto pushed = TransferKernel(sys, g).push(mu, wts);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      lhs += mu[i] * lf[i];
      rhs += pushed[i] * f[i];
    }
    CHECK(std::abs(lhs - rhs) < 1e-12);
  }
}

TEST_CASE("monotonicity and positivity") {
  const auto sys = fx::s1();
  const Grid g(129);
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  GridFunction f(g.size()), h(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    f[i] = unif(rng) + 1e-3;
    h[i] = f[i] + unif(rng);
  }
  const auto lf = apply_transfer(sys, fx::s1_place(), 2.0, g, f);
  const auto lh = apply_transfer(sys, fx::s1_place(), 2.0, g, h);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(lf[i] > 0.0);
    CHECK(lf[i] <= lh[i]);
  }
}

TEST_CASE("power iteration: closed forms") {
  const auto sys = fx::s1();
  const Grid g(257);
  const auto ep = eigen_power(sys, fx::s1_const(), 1.0, g);
  CHECK(std::abs(ep.lambda - closed_lambda(1.0)) < 1e-12);
  for (double v : ep.h) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
  const auto e0 = eigen_power(sys, fx::zero(), 7.0, g);
  CHECK(std::abs(e0.lambda - 1.0) < 1e-14);
  CHECK(std::abs(pressure(ep) - std::log(closed_lambda(1.0))) < 1e-12);
  CHECK(pressure(ep) == doctest::Approx(-0.379885).epsilon(1e-6));
}

TEST_CASE("power and discounted solvers agree") {
  const auto sys = fx::s1();
  const Grid g(257);
  for (double beta : {1.0, 2.0, 5.0, 10.0}) {
    for (const auto& A : {fx::s1_const(), fx::s1_place()}) {
      const auto p = eigen_power(sys, A, beta, g);
      const auto d = eigen_discounted(sys, A, beta, g, dyadic_schedule());
      CHECK(std::abs(p.lambda - d.lambda) <= 1e-6 * p.lambda);
      double hd = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) hd = std::max(hd, std::abs(p.h[i] - d.h[i]));
      CHECK(hd < 1e-5);
      CHECK(p.residual < 1e-10);
    }
  }
}

TEST_CASE("discounted solver: single s and zero potential") {
  const auto sys = fx::s1();
  const Grid g(257);
  const auto d = eigen_discounted(sys, fx::s1_const(), 1.0, g, {1.0 - std::ldexp(1.0, -10)});
  CHECK(std::abs(d.lambda - closed_lambda(1.0)) < 1e-3);
  const auto z = eigen_discounted(sys, fx::zero(), 3.0, g, dyadic_schedule());
  CHECK(z.lambda == doctest::Approx(1.0).epsilon(1e-14));
  for (double v : z.h) CHECK(v == 1.0);
  CHECK_THROWS_AS(eigen_discounted(sys, fx::s1_place(), 2.0, g, {0.5, 0.75}, 1e-12), Error);
}

TEST_CASE("eigenfunction obeys the log-Lipschitz bound up to O(h)") {
  // Interpolating e^u between nodes adds at most about L^2 h to the slope of
  // log h, so the excess over beta Lip(A) / (1 - gamma) must shrink with h.
  const auto sys = fx::s1();
  for (double beta : {1.0, 5.0, 20.0}) {
    const double bound = beta * 1.0 / (1.0 - sys.gamma);
    double prev_excess = 0.0;
    for (std::size_t n : {129u, 257u, 513u}) {
      const Grid g(n);
      const auto ep = eigen_discounted(sys, fx::s1_place(), beta, g, dyadic_schedule());
      double lip = 0.0;
      for (std::size_t i = 0; i + 1 < g.size(); ++i)
        lip = std::max(lip, std::abs(ep.log_h[i + 1] - ep.log_h[i]) / g.spacing());
      CHECK(lip <= bound * (1.0 + bound * g.spacing()));
      const double excess = std::max(0.0, lip - bound);
      if (prev_excess > 0.0) CHECK(excess < 0.6 * prev_excess);
      prev_excess = excess;
    }
  }
}

TEST_CASE("normalized weights, Gibbs measure and entropy") {
  const auto sys = fx::s1();
  const Grid g(257);
  const double beta = 1.0;
  const auto ep = eigen_power(sys, fx::s1_const(), beta, g);
  const auto qw = normalize(sys, fx::s1_const(), beta, g, ep);
  const double P0 = digit_p0(beta);
  for (std::size_t i = 0; i < g.size(); ++i) {
    CHECK(qw(0, i) == doctest::Approx(2.0 * P0).epsilon(1e-12));
    CHECK(qw(1, i) == doctest::Approx(2.0 * (1.0 - P0)).epsilon(1e-12));
  }
  CHECK(qw.raw_normalization_error < 1e-10);

  const auto rho = gibbs_measure(sys, g, qw);
  CHECK(rho.residual < 1e-12);
  double total = 0.0;
  for (double m : rho.mass) total += m;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(sum_nodes_below(rho, g, 0.5) - P0) < 2.0 * g.spacing());
  CHECK(std::abs(measure_ball(rho, g, 0.0, 0.25) - P0 * P0) < 2.0 * g.spacing());

  const auto lift = holonomic_lift(sys, g, qw, rho);
  CHECK(lift.holonomy_residual < 1e-12);
  const auto jm = lift.j_marginal();
  CHECK(jm[0] == doctest::Approx(P0).epsilon(1e-10));
  const auto xm = lift.x_marginal();
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::abs(xm[i] - rho.mass[i]) < 1e-15);

  const double H = entropy(lift, qw);
  const double expect = -(P0 * std::log(2.0 * P0) + (1.0 - P0) * std::log(2.0 * (1.0 - P0)));
  CHECK(H == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("zero potential gives the Hutchinson measure") {
  const auto sys = fx::s1();
  const Grid g(257);
  const auto ep = eigen_power(sys, fx::zero(), 1.0, g);
  const auto qw = normalize(sys, fx::zero(), 1.0, g, ep);
  for (double v : qw.q) CHECK(v == doctest::Approx(1.0));
  const auto rho = gibbs_measure(sys, g, qw);
  CHECK(std::abs(sum_nodes_below(rho, g, 0.5) - 0.5) < 2.0 * g.spacing());
  const auto lift = holonomic_lift(sys, g, qw, rho);
  CHECK(std::abs(entropy(lift, qw)) < 1e-12);
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(lift(0, i) == doctest::Approx(rho.mass[i] / 2.0));
}

TEST_CASE("pressure identity") {
  const auto sys = fx::s1();
  for (double beta : {1.0, 2.0, 5.0})
    CHECK(pressure_identity_residual(sys, fx::s1_const(), beta, Grid(257)) < 1e-9);
  CHECK(pressure_identity_residual(sys, fx::zero(), 1.0, Grid(65)) < 1e-12);

  // Place-dependent: the residual shrinks as the grid refines.
  double prev = 0.0;
  for (std::size_t n : {257u, 513u, 1025u}) {
    const Grid g(n);
    const double r = pressure_identity_residual(sys, fx::s1_place(), 2.0, g);
    MESSAGE("N = " << n << " residual " << r);
    CHECK(r < 10.0 * g.spacing() * 2.0 * 1.0);
    if (prev > 0.0) CHECK(r < prev / 1.8);
    prev = r;
  }
}

TEST_CASE("log-space sweep at large beta stays finite") {
  const auto sys = fx::s1();
  const Grid g(257);
  const auto ep = eigen_power(sys, fx::s1_const(), 800.0, g);
  CHECK(ep.log_space);
  CHECK(std::isfinite(ep.log_lambda));
  const auto qw = normalize(sys, fx::s1_const(), 800.0, g, ep);
  const auto rho = gibbs_measure(sys, g, qw);
  CHECK(std::isfinite(rho.log_mass[0]));
  CHECK(measure_log_exp_integral(rho, g, [](double) { return 0.7; }, 800.0) / 800.0 ==
        doctest::Approx(0.7));
}

TEST_CASE("place-dependent potential at large beta: h underflows, log h does not") {
  const auto sys = fx::s1();
  const Grid g(257);
  const auto ep = eigen_power(sys, fx::s1_place(), 1000.0, g);
  CHECK(ep.log_space);
  // Somewhere h is below the smallest double while log h stays finite.
  bool underflow = false;
  for (double v : ep.log_h) {
    REQUIRE(std::isfinite(v));
    underflow = underflow || std::exp(v) == 0.0;
  }
  CHECK(underflow);
  const auto qw = normalize(sys, fx::s1_place(), 1000.0, g, ep);
  const auto rho = gibbs_measure(sys, g, qw);
  const auto lift = holonomic_lift(sys, g, qw, rho);
  const auto pid = pressure_identity(sys, fx::s1_place(), 1000.0, g, qw, lift, ep);
  CHECK(pid.residual < 1e-9);
  // Only one map carries weight at each fixed point: lambda -> 1/2.
  CHECK(ep.log_lambda == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
}
