#pragma once

// Systems of affine contractions on [0,1], their potentials, the interval
// grid, and words over the map alphabet.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ifsldp {

/// x -> slope * x + offset on [0,1].
struct MapSpec {
  double slope = 0.0;
  double offset = 0.0;

  double operator()(double x) const { return slope * x + offset; }
  double fixed_point() const { return offset / (1.0 - slope); }
};

/// Finite uniformly contractive system with full-support reference weights.
struct IfsSystem {
  std::vector<MapSpec> maps;
  std::vector<double> weights;  // the reference probability on the alphabet
  double gamma = 0.5;

  std::size_t size() const { return maps.size(); }
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Checks weights (positive, summing to 1 within 1e-12), |slope_j| <= gamma,
/// phi_j([0,1]) inside [0,1] and max_{j1,j2} sup_x |phi_j1(x) - phi_j2(x)| <= gamma.
ValidationReport validate_system(const IfsSystem& sys);

/// Throws Error(validation) carrying the report when the system is invalid.
void require_valid(const IfsSystem& sys);

/// The potential A(j, x) on J x [0,1].
class Potential {
 public:
  enum class Kind { constant, affine, tabulated };

  static Potential constant(std::vector<double> values, double lip_bound = 0.0);
  /// A(j, x) = intercepts[j] + slopes[j] * x
  static Potential affine(std::vector<double> intercepts, std::vector<double> slopes,
                          double lip_bound);
  /// Row j holds A(j, .) at uniform nodes of [0,1]; linear in between.
  static Potential tabulated(std::vector<std::vector<double>> table, double lip_bound);

  double operator()(std::size_t j, double x) const;

  Kind kind() const { return kind_; }
  std::size_t arity() const { return a_.size(); }
  double lip_bound() const { return lip_bound_; }
  /// Constant values or affine intercepts, per map.
  const std::vector<double>& values() const { return a_; }
  const std::vector<double>& slopes() const { return b_; }
  const std::vector<std::vector<double>>& table() const { return table_; }
  double max_abs() const;
  /// True when A(j, x) does not depend on x for any j.
  bool constant_per_map() const;
  /// A + c, same kind and Lipschitz bound.
  Potential shifted(double c) const;

 private:
  Kind kind_ = Kind::constant;
  std::vector<double> a_;                    // constant value or intercept per map
  std::vector<double> b_;                    // affine slope per map
  std::vector<std::vector<double>> table_;   // tabulated rows
  double lip_bound_ = 0.0;
};

/// Arity must match the system; the declared Lipschitz bound is checked on a
/// deterministic sample of adjacent pairs.
ValidationReport validate_potential(const Potential& A, std::size_t n_maps);

/// Uniform grid x_i = i / (n - 1) on [0,1].
class Grid {
 public:
  explicit Grid(std::size_t n_points);

  /// Linear interpolation stencil: f(x) ~ (1 - w) f[lo] + w f[lo + 1].
  struct Stencil {
    std::size_t lo;
    double w;
  };

  std::size_t size() const { return n_; }
  double spacing() const { return 1.0 / static_cast<double>(n_ - 1); }
  double point(std::size_t i) const {
    return static_cast<double>(i) / static_cast<double>(n_ - 1);
  }

  Stencil stencil(double x) const;
  /// Nearest node to x; exact half-way ties go toward `tie_toward`.
  std::size_t nearest(double x, double tie_toward) const;
  /// Node of phi(x_i), ties resolved toward the fixed point of phi.
  std::size_t project(const MapSpec& phi, std::size_t i) const;

 private:
  std::size_t n_;
};

struct Word {
  std::vector<std::size_t> letters;

  std::size_t size() const { return letters.size(); }
  bool empty() const { return letters.empty(); }
  std::size_t operator[](std::size_t k) const { return letters[k]; }
  friend Word operator+(const Word& u, const Word& v);
  friend bool operator==(const Word&, const Word&) = default;
};

/// phi_{j1} o ... o phi_{jn}(x): the last letter acts first.
double eval_word(const IfsSystem& sys, const Word& w, double x);

/// A(j1, phi_{(j2..jn)}(x)) + ... + A(jn, x) - n * mA.
double word_sum(const IfsSystem& sys, const Potential& A, const Word& w, double x, double mA);

/// Eventually periodic address: prefix followed by period repeated forever.
struct Address {
  Word prefix;
  Word period;
};

/// The coding point pi(address), iterated until gamma^n < 1e-14.
double coding_point(const IfsSystem& sys, const Address& address);

/// Full shift truncated to cylinders of a fixed depth.
struct SymbolicSpace {
  std::size_t alphabet = 2;
  std::size_t depth = 1;

  /// alphabet^depth; throws Error(validation) when it exceeds `limit`.
  std::uint64_t cylinder_count(std::uint64_t limit = std::uint64_t{1} << 24) const;
  /// Cylinder word of the given lexicographic index (first letter most significant).
  Word cylinder(std::uint64_t index) const;
};

}  // namespace ifsldp
