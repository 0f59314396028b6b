#include "ifsldp/tropical.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ifsldp/error.hpp"

namespace ifsldp {

namespace {

constexpr double kPolicyEps = 1e-12;
constexpr std::size_t kMaxPolicySweeps = 100000;
// Cycles of a stable discounted policy whose mean sits within this of 0 are
// treated as critical.
constexpr double kCriticalMeanTol = 1e-9;

// Policy = one chosen out-edge per node. The policy graph is functional, so
// every node leads into exactly one cycle.
struct PolicyGraph {
  std::vector<std::size_t> succ;
  std::vector<double> w;
};

PolicyGraph policy_graph(const MaxPlusMatrix& M, const std::vector<std::size_t>& choice,
                         double shift) {
  PolicyGraph g;
  g.succ.resize(M.size());
  g.w.resize(M.size());
  for (std::size_t x = 0; x < M.size(); ++x) {
    const auto& e = M.out(x)[choice[x]];
    g.succ[x] = e.to;
    g.w[x] = e.weight + shift;
  }
  return g;
}

// Cycles as node lists starting at their lowest-index node.
std::vector<std::vector<std::size_t>> find_cycles(const std::vector<std::size_t>& succ) {
  const std::size_t n = succ.size();
  std::vector<int> state(n, 0);
  std::vector<std::vector<std::size_t>> cycles;
  std::vector<std::size_t> path;
  for (std::size_t s = 0; s < n; ++s) {
    if (state[s] != 0) continue;
    path.clear();
    std::size_t x = s;
    while (state[x] == 0) {
      state[x] = 1;
      path.push_back(x);
      x = succ[x];
    }
    if (state[x] == 1) {
      auto it = std::find(path.begin(), path.end(), x);
      std::vector<std::size_t> cyc(it, path.end());
      std::rotate(cyc.begin(), std::min_element(cyc.begin(), cyc.end()), cyc.end());
      cycles.push_back(std::move(cyc));
    }
    for (std::size_t p : path) state[p] = 2;
  }
  return cycles;
}

// Fills value[x] for tree nodes from value[succ[x]] once cycle nodes are set.
template <class F>
void fill_trees(const std::vector<std::size_t>& succ, std::vector<char>& done, F&& from_succ) {
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < succ.size(); ++s) {
    std::size_t x = s;
    while (!done[x]) {
      stack.push_back(x);
      x = succ[x];
    }
    while (!stack.empty()) {
      from_succ(stack.back());
      done[stack.back()] = 1;
      stack.pop_back();
    }
  }
}

std::size_t best_edge(const MaxPlusMatrix& M, std::size_t x) {
  const auto& row = M.out(x);
  std::size_t b = 0;
  for (std::size_t k = 1; k < row.size(); ++k)
    if (row[k].weight > row[b].weight) b = k;
  return b;
}

// Multichain policy iteration for the max-plus eigenproblem
// v(x) + eta(x) = max_e [w_e + v(e.to)].
void howard(const MaxPlusMatrix& M, std::vector<double>& eta, std::vector<double>& v,
            std::size_t& sweeps) {
  const std::size_t n = M.size();
  std::vector<std::size_t> choice(n);
  for (std::size_t x = 0; x < n; ++x) choice[x] = best_edge(M, x);
  eta.assign(n, 0.0);
  v.assign(n, 0.0);
  std::vector<double> v_old(n, 0.0);
  std::vector<char> done(n);

  for (sweeps = 1; sweeps <= kMaxPolicySweeps; ++sweeps) {
    const PolicyGraph g = policy_graph(M, choice, 0.0);
    std::fill(done.begin(), done.end(), 0);
    for (const auto& cyc : find_cycles(g.succ)) {
      double total = 0.0;
      for (std::size_t c : cyc) total += g.w[c];
      const double mean = total / static_cast<double>(cyc.size());
      // The representative keeps its previous value, which is what makes the
      // iteration terminate.
      const std::size_t r = cyc.front();
      eta[r] = mean;
      v[r] = v_old[r];
      done[r] = 1;
      for (std::size_t k = cyc.size(); k-- > 1;) {
        const std::size_t c = cyc[k];
        eta[c] = mean;
        v[c] = g.w[c] - mean + v[cyc[(k + 1) % cyc.size()]];
        done[c] = 1;
      }
    }
    fill_trees(g.succ, done, [&](std::size_t x) {
      eta[x] = eta[g.succ[x]];
      v[x] = g.w[x] - eta[x] + v[g.succ[x]];
    });

    bool changed = false;
    for (std::size_t x = 0; x < n; ++x) {
      const auto& row = M.out(x);
      std::size_t b = choice[x];
      for (std::size_t k = 0; k < row.size(); ++k)
        if (eta[row[k].to] > eta[row[b].to] + kPolicyEps) b = k;
      if (eta[row[b].to] > eta[x] + kPolicyEps) {
        choice[x] = b;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t x = 0; x < n; ++x) {
        const auto& row = M.out(x);
        double best = v[x];
        for (std::size_t k = 0; k < row.size(); ++k) {
          if (std::abs(eta[row[k].to] - eta[x]) > kPolicyEps) continue;
          const double val = row[k].weight - eta[x] + v[row[k].to];
          if (val > best + kPolicyEps) {
            best = val;
            choice[x] = k;
            changed = true;
          }
        }
      }
    }
    if (!changed) return;
    v_old = v;
  }
  fail(ErrorCode::solver, "policy iteration did not terminate");
}

// Exact discounted values of a fixed policy: u = w + s u(succ).
std::vector<double> discounted_values(const PolicyGraph& g, double s) {
  const std::size_t n = g.succ.size();
  std::vector<double> u(n);
  std::vector<char> done(n, 0);
  const double log_s = std::log(s);
  for (const auto& cyc : find_cycles(g.succ)) {
    const std::size_t L = cyc.size();
    double num = 0.0;
    double sk = 1.0;
    for (std::size_t k = 0; k < L; ++k) {
      num += sk * g.w[cyc[k]];
      sk *= s;
    }
    u[cyc[0]] = num / -std::expm1(static_cast<double>(L) * log_s);
    done[cyc[0]] = 1;
    for (std::size_t k = L; k-- > 1;) {
      u[cyc[k]] = g.w[cyc[k]] + s * u[cyc[(k + 1) % L]];
      done[cyc[k]] = 1;
    }
  }
  fill_trees(g.succ, done, [&](std::size_t x) { u[x] = g.w[x] + s * u[g.succ[x]]; });
  return u;
}

// s -> 1 limit of u_s - eta / (1 - s) for a policy whose cycles all have mean 0.
// On a cycle c_0 .. c_{L-1} with zero-sum weights the limit at c_0 is
// -sum_k k w_k / L; trees follow h(x) = w(x) + h(succ x). Returns false when a
// cycle is not critical.
bool laurent_bias(const PolicyGraph& g, std::vector<double>& h) {
  const std::size_t n = g.succ.size();
  h.assign(n, 0.0);
  std::vector<char> done(n, 0);
  for (const auto& cyc : find_cycles(g.succ)) {
    const std::size_t L = cyc.size();
    double total = 0.0;
    for (std::size_t c : cyc) total += g.w[c];
    const double mean = total / static_cast<double>(L);
    if (std::abs(mean) > kCriticalMeanTol) return false;
    double acc = 0.0;
    for (std::size_t k = 0; k < L; ++k) acc += static_cast<double>(k) * (g.w[cyc[k]] - mean);
    h[cyc[0]] = -acc / static_cast<double>(L);
    done[cyc[0]] = 1;
    for (std::size_t k = L; k-- > 1;) {
      h[cyc[k]] = g.w[cyc[k]] - mean + h[cyc[(k + 1) % L]];
      done[cyc[k]] = 1;
    }
  }
  fill_trees(g.succ, done, [&](std::size_t x) { h[x] = g.w[x] + h[g.succ[x]]; });
  return true;
}

double calibration_residual(const IfsSystem& sys, const Potential& A, const Grid& grid,
                            double mA, const std::vector<double>& V) {
  double r = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double best = kBottom;
    for (std::size_t j = 0; j < sys.size(); ++j)
      best = std::max(best, A(j, grid.point(i)) + V[grid.project(sys.maps[j], i)] - V[i] - mA);
    r = std::max(r, std::abs(best));
  }
  return r;
}

void normalize_top(std::vector<double>& V) {
  const double top = *std::max_element(V.begin(), V.end());
  for (double& v : V) v -= top;
}

std::string residual_map(const IfsSystem& sys, const Potential& A, const Grid& grid, double mA,
                         const std::vector<double>& V, double tol) {
  std::ostringstream os;
  std::size_t shown = 0;
  for (std::size_t i = 0; i < grid.size() && shown < 8; ++i) {
    double best = kBottom;
    for (std::size_t j = 0; j < sys.size(); ++j)
      best = std::max(best, A(j, grid.point(i)) + V[grid.project(sys.maps[j], i)] - V[i] - mA);
    if (std::abs(best) > tol) {
      os << " x=" << grid.point(i) << ":" << best;
      ++shown;
    }
  }
  return os.str();
}

}  // namespace

Subaction calibrated_subaction(const IfsSystem& sys, const Potential& A, const Grid& grid,
                               double mA, CalibrationMethod method, double tol) {
  const MaxPlusMatrix M = build_maxplus_matrix(sys, tabulate(A, grid), grid);
  const std::size_t n = grid.size();
  Subaction out;
  out.method = method;

  if (method == CalibrationMethod::policy) {
    std::vector<double> eta;
    howard(M, eta, out.V, out.iterations);
    const auto [lo, hi] = std::minmax_element(eta.begin(), eta.end());
    if (*hi - *lo > tol || std::abs(*hi - mA) > tol) {
      std::ostringstream os;
      os << "calibration failed: reachable cycle means range over [" << *lo << ", " << *hi
         << "] while m(A) = " << mA;
      fail(ErrorCode::solver, os.str());
    }
    normalize_top(out.V);
    out.residual = calibration_residual(sys, A, grid, mA, out.V);
    if (out.residual > tol)
      fail(ErrorCode::solver, "calibration residual " + std::to_string(out.residual) +
                                  " > tol;" + residual_map(sys, A, grid, mA, out.V, tol));
    return out;
  }

  // Discounted: exact policy iteration for u = max_e [w_e - mA + s u(e.to)]
  // along s = 1 - 2^{-k}. Once the optimal policy repeats, its Laurent bias is
  // the s -> 1 limit of u_s - max u_s.
  std::vector<std::size_t> choice(n), prev_choice;
  for (std::size_t x = 0; x < n; ++x) choice[x] = best_edge(M, x);
  constexpr int kMaxK = 40;
  double last_residual = std::numeric_limits<double>::infinity();
  std::vector<double> candidate;
  for (int k = 1; k <= kMaxK; ++k) {
    const double s = 1.0 - std::ldexp(1.0, -k);
    std::vector<double> u;
    for (std::size_t sweep = 0;; ++sweep) {
      if (sweep >= kMaxPolicySweeps) fail(ErrorCode::solver, "discounted policy iteration stalled");
      u = discounted_values(policy_graph(M, choice, -mA), s);
      bool changed = false;
      for (std::size_t x = 0; x < n; ++x) {
        const auto& row = M.out(x);
        double best = u[x];
        for (std::size_t e = 0; e < row.size(); ++e) {
          const double val = row[e].weight - mA + s * u[row[e].to];
          if (val > best + kPolicyEps * std::max(1.0, std::abs(best))) {
            best = val;
            choice[x] = e;
            changed = true;
          }
        }
      }
      ++out.iterations;
      if (!changed) break;
    }
    ++out.schedule_points;

    if (choice == prev_choice) {
      std::vector<double> h;
      if (laurent_bias(policy_graph(M, choice, -mA), h)) {
        normalize_top(h);
        last_residual = calibration_residual(sys, A, grid, mA, h);
        candidate = h;
        if (last_residual <= tol) {
          out.V = std::move(h);
          out.residual = last_residual;
          return out;
        }
      }
    }
    prev_choice = choice;
  }
  std::ostringstream os;
  os << "discount schedule exhausted, calibration residual " << last_residual << " > tol";
  if (!candidate.empty()) os << ";" << residual_map(sys, A, grid, mA, candidate, tol);
  fail(ErrorCode::solver, os.str());
}

ZeroTempPack zero_temperature(const IfsSystem& sys, const Potential& A, const Grid& grid,
                              CalibrationMethod method, double tol) {
  ZeroTempPack z;
  z.n_maps = sys.size();
  z.n_points = grid.size();
  z.mA = max_cycle_mean(build_maxplus_matrix(sys, tabulate(A, grid), grid));
  const Subaction sub = calibrated_subaction(sys, A, grid, z.mA, method, tol);
  z.V = sub.V;
  z.calibration_residual = sub.residual;
  const std::size_t n = grid.size();
  z.q.resize(z.n_maps * n);
  for (std::size_t j = 0; j < z.n_maps; ++j)
    for (std::size_t i = 0; i < n; ++i)
      z.q[j * n + i] =
          A(j, grid.point(i)) + z.V[grid.project(sys.maps[j], i)] - z.V[i] - z.mA;
  for (std::size_t j = 0; j < z.n_maps; ++j)
    for (std::size_t i = 0; i + 1 < n; ++i)
      z.lip_q = std::max(z.lip_q, std::abs(z.q[j * n + i + 1] - z.q[j * n + i]) / grid.spacing());
  return z;
}

// ---------------------------------------------------------------------------
// Aubry set and densities

bool AubrySet::contains(std::size_t x) const {
  return std::binary_search(nodes.begin(), nodes.end(), x);
}

AubrySet aubry_set(const TropicalClosure& S, double tol) {
  AubrySet a;
  a.tol = tol;
  for (std::size_t x = 0; x < S.n; ++x)
    if (S(x, x) >= -tol) a.nodes.push_back(x);
  if (a.nodes.empty())
    fail(ErrorCode::contradiction, "Aubry set is empty (contradicts its non-emptiness)");
  return a;
}

bool irreducibility_check(const TropicalClosure& S, const AubrySet& aubry, double tol) {
  for (std::size_t x : aubry.nodes)
    for (std::size_t y : aubry.nodes)
      if (!(S(x, y) >= -tol)) return false;
  return true;
}

double Density::sup() const { return *std::max_element(lambda.begin(), lambda.end()); }

double Density::functional(const std::vector<double>& f) const {
  double best = kBottom;
  for (std::size_t i = 0; i < lambda.size(); ++i)
    if (lambda[i] != kBottom) best = std::max(best, lambda[i] + f[i]);
  return best;
}

Density idempotent_density_irreducible(const TropicalClosure& S, const AubrySet& aubry,
                                       double tol) {
  if (aubry.nodes.empty()) fail(ErrorCode::contradiction, "empty Aubry set");
  const std::size_t z0 = aubry.nodes.front();
  Density d;
  d.lambda.resize(S.n);
  for (std::size_t x = 0; x < S.n; ++x) d.lambda[x] = S(x, z0);
  for (std::size_t z : aubry.nodes) {
    for (std::size_t x = 0; x < S.n; ++x) {
      const double a = S(x, z);
      const double b = d.lambda[x];
      if (a != kBottom && b != kBottom && std::abs(a - b) > tol) {
        std::ostringstream os;
        os << "density depends on the Aubry point: S(" << x << ", " << z << ") = " << a
           << " vs S(" << x << ", " << z0 << ") = " << b;
        fail(ErrorCode::solver, os.str());
      }
    }
  }
  const double top = d.sup();
  for (double& v : d.lambda)
    if (v != kBottom) v -= top;
  return d;
}

Density idempotent_density_general(const TropicalClosure& S, const AubrySet& aubry,
                                   const std::vector<double>& restriction) {
  if (restriction.size() != aubry.nodes.size())
    fail(ErrorCode::argument, "restriction must give one value per Aubry node");
  if (std::all_of(restriction.begin(), restriction.end(), [](double v) { return v == kBottom; }))
    fail(ErrorCode::argument, "restriction is identically -inf");
  Density d;
  d.lambda.assign(S.n, kBottom);
  for (std::size_t x = 0; x < S.n; ++x)
    for (std::size_t k = 0; k < aubry.nodes.size(); ++k)
      d.lambda[x] = oplus(MaxPlusValue{d.lambda[x]},
                          otimes(MaxPlusValue{S(x, aubry.nodes[k])}, MaxPlusValue{restriction[k]}))
                        .value;
  return d;
}

InvarianceReport verify_invariance(const Density& d, const MaxPlusMatrix& M, double tol,
                                   std::uint64_t seed, std::size_t n_tests) {
  const std::size_t n = M.size();
  auto w_of = [](double w) { return w > 0.0 ? 0.0 : w; };

  std::vector<double> l0(n, kBottom);
  for (std::size_t y = 0; y < n; ++y) {
    if (d.lambda[y] == kBottom) continue;
    for (const auto& e : M.out(y)) l0[e.to] = std::max(l0[e.to], w_of(e.weight) + d.lambda[y]);
  }

  InvarianceReport rep;
  for (std::size_t x = 0; x < n; ++x) {
    const double a = l0[x];
    const double b = d.lambda[x];
    if (a == kBottom && b == kBottom) continue;
    if (a == kBottom || b == kBottom) {
      rep.residual = std::numeric_limits<double>::infinity();
      break;
    }
    rep.residual = std::max(rep.residual, std::abs(a - b));
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const Density pushed{l0};
  std::vector<double> f(n), lf(n);
  for (std::size_t t = 0; t < n_tests; ++t) {
    for (double& v : f) v = unif(rng);
    for (std::size_t x = 0; x < n; ++x) {
      lf[x] = kBottom;
      for (const auto& e : M.out(x)) lf[x] = std::max(lf[x], w_of(e.weight) + f[e.to]);
    }
    const double mu_lf = d.functional(lf);
    rep.dual_residual = std::max(rep.dual_residual, std::abs(mu_lf - pushed.functional(f)));
    rep.functional_residual = std::max(rep.functional_residual, std::abs(mu_lf - d.functional(f)));
  }
  rep.pass = rep.residual <= tol && rep.dual_residual <= tol && rep.functional_residual <= tol;
  return rep;
}

double subaction_representation_residual(const TropicalClosure& S, const AubrySet& aubry,
                                         const std::vector<double>& V) {
  double r = 0.0;
  for (std::size_t x = 0; x < S.n; ++x) {
    double best = kBottom;
    for (std::size_t z : aubry.nodes) {
      if (S(z, x) == kBottom) continue;
      // S_q(z, x) = S_A(z, x) + V(z) - V(x)
      const double sa = S(z, x) - V[z] + V[x];
      best = std::max(best, sa + V[z]);
    }
    r = std::max(r, best == kBottom ? std::numeric_limits<double>::infinity()
                                    : std::abs(V[x] - best));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Symbolic and brute-force oracles

SymbolicDensity nonplace_density_symbolic(const IfsSystem& sys, const std::vector<double>& q,
                                          const SymbolicSpace& space, const Grid* grid,
                                          SymbolicBackend backend) {
  if (q.size() != sys.size()) fail(ErrorCode::argument, "one weight per map expected");
  const std::size_t top = static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
  if (std::abs(q[top]) > 1e-12)
    fail(ErrorCode::argument, "symbolic density needs max_j q_j = 0");
  const std::uint64_t count = space.cylinder_count();

  SymbolicDensity out;
  out.backend = backend;
  out.anchor = sys.maps[top].fixed_point();

  if (backend == SymbolicBackend::full_shift) {
    out.values.resize(count);
    for (std::uint64_t c = 0; c < count; ++c) {
      const Word w = space.cylinder(c);
      double s = 0.0;
      for (std::size_t k = 0; k < w.size(); ++k) s += q[w[k]];
      out.values[c] = s;
    }
    return out;
  }

  if (grid == nullptr) fail(ErrorCode::argument, "interval backend needs a grid");
  out.values.assign(grid->size(), kBottom);
  // Words are built from the last letter outwards, so the map applied at the
  // leaf is the first letter; its fixed point resolves half-way ties.
  auto walk = [&](auto&& self, std::size_t level, double x, double sum, std::size_t first) -> void {
    if (level == space.depth) {
      const std::size_t node = grid->nearest(x, sys.maps[first].fixed_point());
      out.values[node] = std::max(out.values[node], sum);
      return;
    }
    for (std::size_t j = 0; j < sys.size(); ++j) self(self, level + 1, sys.maps[j](x), sum + q[j], j);
  };
  walk(walk, 0, out.anchor, 0.0, top);
  return out;
}

namespace {

template <class Visit>
void enumerate_words(const IfsSystem& sys, const Potential& q, double y, std::size_t n_max,
                     Visit&& visit) {
  auto walk = [&](auto&& self, std::size_t len, double p, double sum) -> void {
    if (len == n_max) return;
    for (std::size_t j = 0; j < sys.size(); ++j) {
      const double next = sys.maps[j](p);
      const double s = sum + q(j, p);
      visit(next, s);
      self(self, len + 1, next, s);
    }
  };
  walk(walk, 0, y, 0.0);
}

}  // namespace

MaxPlusValue brute_force_mane(const IfsSystem& sys, const Potential& q, double x, double y,
                              std::size_t n_max, double eps) {
  SymbolicSpace{sys.size(), n_max}.cylinder_count();
  double best = kBottom;
  enumerate_words(sys, q, y, n_max, [&](double p, double s) {
    if (std::abs(x - p) < eps) best = std::max(best, s);
  });
  return {best};
}

std::vector<double> brute_force_mane_column(const IfsSystem& sys, const Potential& q,
                                            const Grid& grid, double y, std::size_t n_max,
                                            double eps) {
  SymbolicSpace{sys.size(), n_max}.cylinder_count();
  std::vector<double> col(grid.size(), kBottom);
  const double inv_h = static_cast<double>(grid.size() - 1);
  enumerate_words(sys, q, y, n_max, [&](double p, double s) {
    const double lo = std::max(0.0, std::floor((p - eps) * inv_h));
    const double hi = std::min(static_cast<double>(grid.size() - 1), std::ceil((p + eps) * inv_h));
    for (auto i = static_cast<std::size_t>(lo); i <= static_cast<std::size_t>(hi); ++i)
      if (std::abs(grid.point(i) - p) < eps) col[i] = std::max(col[i], s);
  });
  return col;
}

}  // namespace ifsldp
