#pragma once

// Finite-temperature objects: the transfer operator on the grid, its leading
// eigenpair, the normalized Jacobian q^beta, the Gibbs measure and the
// pressure / entropy bookkeeping.

#include <cstddef>
#include <functional>
#include <vector>

#include "ifsldp/ifs_core.hpp"

namespace ifsldp {

using GridFunction = std::vector<double>;

/// beta * max|A| above this switches every exponential to log-sum-exp form.
inline constexpr double kLogSpaceThreshold = 600.0;

/// Discretized (L f)(x_i) = sum_j p_j e^{beta A(j, x_i)} f(phi_j(x_i)), with
/// f(phi_j(x_i)) read by linear interpolation. `push` is its exact adjoint.
class TransferKernel {
 public:
  TransferKernel(const IfsSystem& sys, const Potential& A, double beta, const Grid& grid);
  /// A = 0: the plain nu-average, used for pushes with externally supplied weights.
  TransferKernel(const IfsSystem& sys, const Grid& grid);

  std::size_t points() const { return n_; }
  std::size_t maps() const { return m_; }
  bool log_space() const { return log_space_; }

  GridFunction apply(const GridFunction& f) const;
  /// log L(e^{log_f}), always in log-sum-exp form.
  GridFunction apply_log(const GridFunction& log_f) const;

  /// Adjoint of f -> sum_j p_j g(j, x) f(phi_j(x)) for per-(j, node) weights g.
  /// Mass at x_i times p_j g(j, i) is split onto the stencil of phi_j(x_i).
  GridFunction push(const GridFunction& mass, const std::vector<double>& g) const;
  /// Same push with log masses and log weights.
  GridFunction push_log(const GridFunction& log_mass, const std::vector<double>& log_g) const;

  /// Interpolated value of f at phi_j(x_i).
  double at_image(const GridFunction& f, std::size_t j, std::size_t i) const;
  /// log of the interpolated value of e^{log_f} at phi_j(x_i).
  double log_at_image(const GridFunction& log_f, std::size_t j, std::size_t i) const;

  /// log p_j + beta A(j, x_i)
  double log_coeff(std::size_t j, std::size_t i) const { return log_coeff_[j * n_ + i]; }
  double log_weight(std::size_t j) const { return log_p_[j]; }

 private:
  std::size_t n_;
  std::size_t m_;
  bool log_space_;
  std::vector<double> log_p_;
  std::vector<double> log_coeff_;     // j-major
  std::vector<double> coeff_;         // exp(log_coeff_), linear mode only
  std::vector<Grid::Stencil> stencil_;  // j-major
};

GridFunction apply_transfer(const IfsSystem& sys, const Potential& A, double beta,
                            const Grid& grid, const GridFunction& f);

struct EigenPair {
  double beta = 0.0;
  double lambda = 0.0;
  double log_lambda = 0.0;
  GridFunction h;      // sup h = 1
  GridFunction log_h;
  double residual = 0.0;  // ||L h - lambda h||_inf / lambda
  std::size_t iterations = 0;
  bool log_space = false;
};

EigenPair eigen_power(const IfsSystem& sys, const Potential& A, double beta, const Grid& grid,
                      double tol = 1e-13, std::size_t max_iter = 100000);

/// 1 - 2^{-k}, k = 1..kmax
std::vector<double> dyadic_schedule(int kmax = 16);

struct DiscountedTrace {
  std::vector<double> s;
  std::vector<double> raw_log_lambda;           // (1 - s) max u_s
  std::vector<double> extrapolated_log_lambda;  // linear in (1 - s) through the last two s
};

/// Fixed points u_s of T_s(u) = log L(e^{s u}) along the schedule. Stops once
/// two successive extrapolated eigenvalues agree to `tol` (relative).
EigenPair eigen_discounted(const IfsSystem& sys, const Potential& A, double beta,
                           const Grid& grid, const std::vector<double>& schedule,
                           double tol = 1e-9, DiscountedTrace* trace = nullptr);

/// Normalized Jacobian q^beta(j, x_i), j-major, with its logarithm.
struct NormalizedWeights {
  double beta = 0.0;
  std::size_t n_maps = 0;
  std::size_t n_points = 0;
  std::vector<double> q;
  std::vector<double> log_q;
  double raw_normalization_error = 0.0;  // max_i |sum_j p_j q - 1| before renormalizing

  double operator()(std::size_t j, std::size_t i) const { return q[j * n_points + i]; }
  double log(std::size_t j, std::size_t i) const { return log_q[j * n_points + i]; }
};

NormalizedWeights normalize(const IfsSystem& sys, const Potential& A, double beta,
                            const Grid& grid, const EigenPair& ep);

struct GibbsMeasure {
  double beta = 0.0;
  GridFunction mass;      // sums to 1
  GridFunction log_mass;
  double residual = 0.0;  // max over hat functions of |rho(g) - rho(L_q g)|
  std::size_t iterations = 0;
};

/// Fixed point of the adjoint of the normalized operator, pushed in log space
/// from the uniform mass until the L1 change drops below `tol`.
GibbsMeasure gibbs_measure(const IfsSystem& sys, const Grid& grid, const NormalizedWeights& qw,
                           double tol = 1e-13, std::size_t max_iter = 200000);

/// Hat-basis residual of the invariance equation for an arbitrary mass vector.
double gibbs_residual(const IfsSystem& sys, const Grid& grid, const NormalizedWeights& qw,
                      const GridFunction& mass);

inline double pressure(const EigenPair& ep) { return ep.log_lambda; }

/// Joint masses p_j q^beta(j, x_i) rho(x_i), j-major.
struct HolonomicLift {
  std::size_t n_maps = 0;
  std::size_t n_points = 0;
  std::vector<double> joint;
  double holonomy_residual = 0.0;

  double operator()(std::size_t j, std::size_t i) const { return joint[j * n_points + i]; }
  GridFunction x_marginal() const;
  std::vector<double> j_marginal() const;
};

HolonomicLift holonomic_lift(const IfsSystem& sys, const Grid& grid, const NormalizedWeights& qw,
                             const GibbsMeasure& rho);

/// -sum pi log q^beta
double entropy(const HolonomicLift& lift, const NormalizedWeights& qw);

struct PressureIdentity {
  double pressure = 0.0;   // log lambda
  double energy = 0.0;     // sum beta A dpi
  double entropy = 0.0;
  double residual = 0.0;   // |pressure - (energy + entropy)|
};

PressureIdentity pressure_identity(const IfsSystem& sys, const Potential& A, double beta,
                                   const Grid& grid, const NormalizedWeights& qw,
                                   const HolonomicLift& lift, const EigenPair& ep);

/// Runs the whole chain (power eigenpair, weights, Gibbs measure, lift).
double pressure_identity_residual(const IfsSystem& sys, const Potential& A, double beta,
                                  const Grid& grid);

/// rho(B(x, r)) over nodes with |x_i - x| < r (closed: <= r).
double measure_ball(const GibbsMeasure& rho, const Grid& grid, double x, double r,
                    bool closed = false);
double log_measure_ball(const GibbsMeasure& rho, const Grid& grid, double x, double r,
                        bool closed = false);

/// log sum_i e^{beta f(x_i)} rho(x_i)
double measure_log_exp_integral(const GibbsMeasure& rho, const Grid& grid,
                                const std::function<double(double)>& f, double beta);

}  // namespace ifsldp
