#include "ifsldp/ifs_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "ifsldp/error.hpp"

namespace ifsldp {

namespace {

constexpr double kWeightSumTol = 1e-12;
constexpr double kGeomSlack = 1e-14;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string ValidationReport::to_string() const {
  if (ok()) return "valid\n";
  std::ostringstream os;
  os << "invalid (" << violations.size() << " violation" << (violations.size() == 1 ? "" : "s")
     << ")\n";
  for (const auto& v : violations) os << "  - " << v << "\n";
  return os.str();
}

ValidationReport validate_system(const IfsSystem& sys) {
  ValidationReport rep;
  auto& out = rep.violations;
  const std::size_t n = sys.maps.size();

  if (n == 0) out.push_back("system has no maps");
  if (!(sys.gamma > 0.0 && sys.gamma < 1.0))
    out.push_back("gamma = " + fmt(sys.gamma) + " is not in (0,1)");
  if (sys.weights.size() != n)
    out.push_back("weights has " + std::to_string(sys.weights.size()) + " entries for " +
                  std::to_string(n) + " maps");

  for (std::size_t j = 0; j < sys.weights.size(); ++j) {
    const double p = sys.weights[j];
    if (!(p > 0.0))
      out.push_back("weight " + std::to_string(j) + " = " + fmt(p) +
                    " is not positive (reference measure must have full support)");
  }
  if (!sys.weights.empty()) {
    const double total = std::accumulate(sys.weights.begin(), sys.weights.end(), 0.0);
    if (std::abs(total - 1.0) > kWeightSumTol)
      out.push_back("weights sum to " + fmt(total) + ", not 1 within 1e-12");
  }

  for (std::size_t j = 0; j < n; ++j) {
    const MapSpec& m = sys.maps[j];
    if (!std::isfinite(m.slope) || !std::isfinite(m.offset)) {
      out.push_back("map " + std::to_string(j) + " has non-finite coefficients");
      continue;
    }
    if (std::abs(m.slope) > sys.gamma + kGeomSlack)
      out.push_back("map " + std::to_string(j) + ": |slope| = " + fmt(std::abs(m.slope)) +
                    " > gamma = " + fmt(sys.gamma));
    const double lo = std::min(m(0.0), m(1.0));
    const double hi = std::max(m(0.0), m(1.0));
    if (lo < -kGeomSlack || hi > 1.0 + kGeomSlack)
      out.push_back("map " + std::to_string(j) + ": image [" + fmt(lo) + ", " + fmt(hi) +
                    "] leaves [0,1]");
  }

  // Cross-letter part of the contraction inequality. For affine maps the
  // supremum over x of |phi_a(x) - phi_b(x)| is attained at an endpoint.
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const double d0 = std::abs(sys.maps[a](0.0) - sys.maps[b](0.0));
      const double d1 = std::abs(sys.maps[a](1.0) - sys.maps[b](1.0));
      const double d = std::max(d0, d1);
      if (d > sys.gamma + kGeomSlack)
        out.push_back("maps " + std::to_string(a) + "," + std::to_string(b) +
                      ": sup_x |phi_a(x) - phi_b(x)| = " + fmt(d) + " > gamma = " +
                      fmt(sys.gamma) + " (at x = " + (d0 >= d1 ? "0" : "1") + ")");
    }
  }
  return rep;
}

void require_valid(const IfsSystem& sys) {
  const auto rep = validate_system(sys);
  if (!rep.ok()) fail(ErrorCode::validation, rep.to_string());
}

// ---------------------------------------------------------------------------
// Potential

Potential Potential::constant(std::vector<double> values, double lip_bound) {
  Potential p;
  p.kind_ = Kind::constant;
  p.a_ = std::move(values);
  p.b_.assign(p.a_.size(), 0.0);
  p.lip_bound_ = lip_bound;
  return p;
}

Potential Potential::affine(std::vector<double> intercepts, std::vector<double> slopes,
                            double lip_bound) {
  if (intercepts.size() != slopes.size())
    fail(ErrorCode::argument, "affine potential: intercepts and slopes differ in length");
  Potential p;
  p.kind_ = Kind::affine;
  p.a_ = std::move(intercepts);
  p.b_ = std::move(slopes);
  p.lip_bound_ = lip_bound;
  return p;
}

Potential Potential::tabulated(std::vector<std::vector<double>> table, double lip_bound) {
  for (const auto& row : table)
    if (row.size() < 2) fail(ErrorCode::argument, "tabulated potential rows need >= 2 values");
  Potential p;
  p.kind_ = Kind::tabulated;
  p.a_.assign(table.size(), 0.0);
  p.b_.assign(table.size(), 0.0);
  p.table_ = std::move(table);
  p.lip_bound_ = lip_bound;
  return p;
}

double Potential::operator()(std::size_t j, double x) const {
  switch (kind_) {
    case Kind::constant:
      return a_[j];
    case Kind::affine:
      return a_[j] + b_[j] * x;
    case Kind::tabulated: {
      const auto& row = table_[j];
      const double t = std::clamp(x, 0.0, 1.0) * static_cast<double>(row.size() - 1);
      const std::size_t lo = std::min<std::size_t>(static_cast<std::size_t>(t), row.size() - 2);
      const double w = t - static_cast<double>(lo);
      return row[lo] + w * (row[lo + 1] - row[lo]);
    }
  }
  return 0.0;
}

double Potential::max_abs() const {
  double m = 0.0;
  switch (kind_) {
    case Kind::constant:
      for (double v : a_) m = std::max(m, std::abs(v));
      break;
    case Kind::affine:
      for (std::size_t j = 0; j < a_.size(); ++j)
        m = std::max({m, std::abs(a_[j]), std::abs(a_[j] + b_[j])});
      break;
    case Kind::tabulated:
      for (const auto& row : table_)
        for (double v : row) m = std::max(m, std::abs(v));
      break;
  }
  return m;
}

bool Potential::constant_per_map() const {
  switch (kind_) {
    case Kind::constant:
      return true;
    case Kind::affine:
      return std::all_of(b_.begin(), b_.end(), [](double b) { return b == 0.0; });
    case Kind::tabulated:
      return std::all_of(table_.begin(), table_.end(), [](const std::vector<double>& row) {
        return std::all_of(row.begin(), row.end(), [&](double v) { return v == row.front(); });
      });
  }
  return false;
}

Potential Potential::shifted(double c) const {
  Potential p = *this;
  for (double& v : p.a_) v += c;
  for (auto& row : p.table_)
    for (double& v : row) v += c;
  return p;
}

ValidationReport validate_potential(const Potential& A, std::size_t n_maps) {
  ValidationReport rep;
  if (A.arity() != n_maps) {
    rep.violations.push_back("potential defines " + std::to_string(A.arity()) +
                             " maps, system has " + std::to_string(n_maps));
    return rep;
  }
  if (!(A.lip_bound() >= 0.0)) rep.violations.push_back("lip_bound must be >= 0");

  constexpr std::size_t kSamples = 1024;
  for (std::size_t j = 0; j < n_maps; ++j) {
    double worst = 0.0;
    double at = 0.0;
    for (std::size_t k = 0; k < kSamples; ++k) {
      const double x1 = static_cast<double>(k) / kSamples;
      const double x2 = static_cast<double>(k + 1) / kSamples;
      const double v1 = A(j, x1);
      const double v2 = A(j, x2);
      if (!std::isfinite(v1) || !std::isfinite(v2)) {
        rep.violations.push_back("A(" + std::to_string(j) + ", .) is not finite near x = " +
                                 fmt(x1));
        break;
      }
      const double q = std::abs(v2 - v1) / (x2 - x1);
      if (q > worst) {
        worst = q;
        at = x1;
      }
    }
    if (worst > A.lip_bound() * (1.0 + 1e-9) + 1e-12)
      rep.violations.push_back("A(" + std::to_string(j) + ", .) has difference quotient " +
                               fmt(worst) + " near x = " + fmt(at) + " > lip_bound = " +
                               fmt(A.lip_bound()));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(std::size_t n_points) : n_(n_points) {
  if (n_points < 2) fail(ErrorCode::argument, "grid needs at least 2 points");
}

Grid::Stencil Grid::stencil(double x) const {
  const double t = std::clamp(x, 0.0, 1.0) * static_cast<double>(n_ - 1);
  const std::size_t lo = std::min<std::size_t>(static_cast<std::size_t>(t), n_ - 2);
  return {lo, std::clamp(t - static_cast<double>(lo), 0.0, 1.0)};
}

std::size_t Grid::nearest(double x, double tie_toward) const {
  const double t = std::clamp(x, 0.0, 1.0) * static_cast<double>(n_ - 1);
  const double f = std::floor(t);
  const double frac = t - f;
  auto k = static_cast<std::size_t>(f);
  if (std::abs(frac - 0.5) <= 1e-9) {
    if (tie_toward > x) ++k;
  } else if (frac > 0.5) {
    ++k;
  }
  return std::min(k, n_ - 1);
}

std::size_t Grid::project(const MapSpec& phi, std::size_t i) const {
  return nearest(phi(point(i)), phi.fixed_point());
}

// ---------------------------------------------------------------------------
// Words

Word operator+(const Word& u, const Word& v) {
  Word w = u;
  w.letters.insert(w.letters.end(), v.letters.begin(), v.letters.end());
  return w;
}

double eval_word(const IfsSystem& sys, const Word& w, double x) {
  for (std::size_t k = w.size(); k-- > 0;) x = sys.maps.at(w[k])(x);
  return x;
}

double word_sum(const IfsSystem& sys, const Potential& A, const Word& w, double x, double mA) {
  double s = 0.0;
  for (std::size_t k = w.size(); k-- > 0;) {
    s += A(w[k], x);
    x = sys.maps.at(w[k])(x);
  }
  return s - static_cast<double>(w.size()) * mA;
}

double coding_point(const IfsSystem& sys, const Address& address) {
  if (address.period.empty()) fail(ErrorCode::argument, "coding_point: empty period");
  std::size_t n = 1;
  for (double g = sys.gamma; g >= 1e-14; g *= sys.gamma) ++n;
  n = std::max(n, address.prefix.size() + 1);

  Word letters = address.prefix;
  for (std::size_t k = 0; letters.size() < n; ++k)
    letters.letters.push_back(address.period[k % address.period.size()]);
  return eval_word(sys, letters, 0.0);
}

std::uint64_t SymbolicSpace::cylinder_count(std::uint64_t limit) const {
  std::uint64_t count = 1;
  for (std::size_t k = 0; k < depth; ++k) {
    if (alphabet != 0 && count > limit / alphabet) {
      fail(ErrorCode::validation, "refusing symbolic depth " + std::to_string(depth) +
                                      ": " + std::to_string(alphabet) + "^" +
                                      std::to_string(depth) + " words exceeds the limit of " +
                                      std::to_string(limit));
    }
    count *= alphabet;
  }
  if (count > limit)
    fail(ErrorCode::validation, "refusing symbolic depth " + std::to_string(depth) + ": " +
                                    std::to_string(count) + " words exceeds the limit of " +
                                    std::to_string(limit));
  return count;
}

Word SymbolicSpace::cylinder(std::uint64_t index) const {
  Word w;
  w.letters.assign(depth, 0);
  for (std::size_t k = depth; k-- > 0;) {
    w.letters[k] = static_cast<std::size_t>(index % alphabet);
    index /= alphabet;
  }
  return w;
}

}  // namespace ifsldp
