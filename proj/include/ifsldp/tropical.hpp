#pragma once

// Zero-temperature layer: the max-plus graph on the grid, maximum cycle mean,
// calibrated subactions, the Mane closure, the Aubry set and densities of
// invariant idempotent probabilities.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "ifsldp/ifs_core.hpp"

namespace ifsldp {

inline constexpr double kBottom = -std::numeric_limits<double>::infinity();

/// Element of R_max = R u {-inf}: oplus = max, otimes = +, -inf absorbing.
struct MaxPlusValue {
  double value = kBottom;

  static MaxPlusValue bottom() { return {}; }
  static MaxPlusValue unit() { return {0.0}; }
  bool is_bottom() const { return value == kBottom; }

  friend MaxPlusValue oplus(MaxPlusValue a, MaxPlusValue b) {
    return {a.value > b.value ? a.value : b.value};
  }
  friend MaxPlusValue otimes(MaxPlusValue a, MaxPlusValue b) {
    if (a.is_bottom() || b.is_bottom()) return bottom();
    return {a.value + b.value};
  }
  friend bool operator==(MaxPlusValue, MaxPlusValue) = default;
};

/// Per-(j, node) weights, j-major: w[j * n + i].
using EdgeWeights = std::vector<double>;

EdgeWeights tabulate(const Potential& A, const Grid& grid, double shift = 0.0);

/// Sparse max-plus matrix over grid nodes. Node x has an edge to the node
/// nearest phi_j(x) for every letter j; parallel letters collapse by max.
class MaxPlusMatrix {
 public:
  struct Edge {
    std::size_t to;
    double weight;
    std::vector<std::size_t> letters;  // every letter achieving `weight`
  };

  MaxPlusMatrix() = default;
  explicit MaxPlusMatrix(std::size_t n) : out_(n) {}

  std::size_t size() const { return out_.size(); }
  const std::vector<Edge>& out(std::size_t x) const { return out_[x]; }
  std::vector<Edge>& out(std::size_t x) { return out_[x]; }

  /// Weight of the edge x -> y, or -inf.
  MaxPlusValue entry(std::size_t x, std::size_t y) const;
  std::size_t edge_count() const;

  /// Largest |phi_j(x_i) - nearest node| over all edges.
  double max_projection_error = 0.0;

 private:
  std::vector<std::vector<Edge>> out_;
};

MaxPlusMatrix build_maxplus_matrix(const IfsSystem& sys, const EdgeWeights& w, const Grid& grid);

/// Maximum over directed cycles of mean weight (Karp, O(N) memory).
double max_cycle_mean(const MaxPlusMatrix& M);

enum class CalibrationMethod { policy, discounted };

/// Subaction V with sup V = 0 solving max_j [A(j,x) + V(node(phi_j x)) - V(x) - mA] = 0
/// on the grid graph.
struct Subaction {
  std::vector<double> V;
  double residual = 0.0;  // max_x |max_j q(j, x)|
  CalibrationMethod method = CalibrationMethod::policy;
  std::size_t iterations = 0;
  std::size_t schedule_points = 0;  // discounted only
};

Subaction calibrated_subaction(const IfsSystem& sys, const Potential& A, const Grid& grid,
                               double mA, CalibrationMethod method, double tol = 1e-8);

/// mA, V and q(j, x) = A(j, x) + V(node(phi_j x)) - V(x) - mA together with the
/// graph they live on.
struct ZeroTempPack {
  double mA = 0.0;
  std::vector<double> V;
  EdgeWeights q;
  std::size_t n_maps = 0;
  std::size_t n_points = 0;
  double calibration_residual = 0.0;
  double lip_q = 0.0;  // grid difference-quotient estimate

  double operator()(std::size_t j, std::size_t i) const { return q[j * n_points + i]; }
};

ZeroTempPack zero_temperature(const IfsSystem& sys, const Potential& A, const Grid& grid,
                              CalibrationMethod method = CalibrationMethod::policy,
                              double tol = 1e-8);

/// S[x][y] = best total weight over paths y -> x of length >= 1.
struct TropicalClosure {
  std::size_t n = 0;
  std::vector<double> S;  // row-major

  double operator()(std::size_t x, std::size_t y) const { return S[x * n + y]; }
  double& at(std::size_t x, std::size_t y) { return S[x * n + y]; }
};

/// Floyd-Warshall closure of a normalized matrix. Weights in (0, tol] are
/// clamped to 0; larger ones are rejected.
TropicalClosure kleene_star(const MaxPlusMatrix& M, double tol = 1e-8);

/// Column y of the closure (best paths from y), by Dijkstra on -weights.
std::vector<double> mane_column(const MaxPlusMatrix& M, std::size_t y, double tol = 1e-8);

struct AubrySet {
  std::vector<std::size_t> nodes;
  double tol = 0.0;

  bool contains(std::size_t x) const;
};

/// Nodes with S[x][x] >= -tol; empty is a hard error.
AubrySet aubry_set(const TropicalClosure& S, double tol);
/// Same set without the dense closure.
AubrySet aubry_set_sparse(const MaxPlusMatrix& M, double tol);

bool irreducibility_check(const TropicalClosure& S, const AubrySet& aubry, double tol);

struct Density {
  std::vector<double> lambda;  // -inf allowed

  double sup() const;
  /// mu(f) = max_x lambda(x) + f(x)
  double functional(const std::vector<double>& f) const;
};

Density idempotent_density_irreducible(const TropicalClosure& S, const AubrySet& aubry,
                                       double tol);

/// Hull x -> max_z S[x][z] + restriction[z] over the Aubry nodes, in Aubry order.
Density idempotent_density_general(const TropicalClosure& S, const AubrySet& aubry,
                                   const std::vector<double>& restriction);

struct InvarianceReport {
  double residual = 0.0;       // ||L0 lambda - lambda|| over nodes where either side is finite
  double dual_residual = 0.0;  // |max lambda + Lf - max (L0 lambda) + f| over test f
  double functional_residual = 0.0;  // |mu(Lf) - mu(f)| over test f
  bool pass = false;
};

InvarianceReport verify_invariance(const Density& d, const MaxPlusMatrix& M, double tol,
                                   std::uint64_t seed = 1, std::size_t n_tests = 16);

/// max_x |V(x) - max_{z in aubry} [S_A(z, x) + V(z)]| with S_A recovered from S_q.
double subaction_representation_residual(const TropicalClosure& S, const AubrySet& aubry,
                                         const std::vector<double>& V);

enum class SymbolicBackend { interval, full_shift };

struct SymbolicDensity {
  SymbolicBackend backend = SymbolicBackend::interval;
  std::vector<double> values;  // per grid node, or per cylinder (lexicographic)
  double anchor = 0.0;
};

/// Per-node (interval) or per-cylinder (full shift) max of q_{j1} + ... + q_{jn}
/// over depth-n words. Refuses |J|^depth > 2^24.
SymbolicDensity nonplace_density_symbolic(const IfsSystem& sys, const std::vector<double>& q,
                                          const SymbolicSpace& space, const Grid* grid,
                                          SymbolicBackend backend);

/// max over words w, 1 <= |w| <= n_max, with |x - w(y)| < eps of the q-sum; -inf if none.
MaxPlusValue brute_force_mane(const IfsSystem& sys, const Potential& q, double x, double y,
                              std::size_t n_max, double eps);

/// brute_force_mane(., x_i, y, ...) for every grid node x_i in one enumeration.
std::vector<double> brute_force_mane_column(const IfsSystem& sys, const Potential& q,
                                            const Grid& grid, double y, std::size_t n_max,
                                            double eps);

}  // namespace ifsldp
