#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "ifsldp/error.hpp"
#include "ifsldp/tropical.hpp"

namespace ifsldp {

namespace {

constexpr double kTieTol = 1e-12;

bool same_weight(double a, double b) {
  return std::abs(a - b) <= kTieTol * std::max(1.0, std::abs(a));
}

double clamp_weight(double w, double tol, std::size_t x, std::size_t y) {
  if (w > tol) {
    std::ostringstream os;
    os << "weights not normalized: edge " << x << " -> " << y << " has weight " << w
       << " > tol = " << tol;
    fail(ErrorCode::solver, os.str());
  }
  return w > 0.0 ? 0.0 : w;
}

}  // namespace

EdgeWeights tabulate(const Potential& A, const Grid& grid, double shift) {
  const std::size_t n = grid.size();
  EdgeWeights w(A.arity() * n);
  for (std::size_t j = 0; j < A.arity(); ++j)
    for (std::size_t i = 0; i < n; ++i) w[j * n + i] = A(j, grid.point(i)) + shift;
  return w;
}

MaxPlusValue MaxPlusMatrix::entry(std::size_t x, std::size_t y) const {
  for (const auto& e : out_[x])
    if (e.to == y) return {e.weight};
  return MaxPlusValue::bottom();
}

std::size_t MaxPlusMatrix::edge_count() const {
  std::size_t c = 0;
  for (const auto& row : out_) c += row.size();
  return c;
}

MaxPlusMatrix build_maxplus_matrix(const IfsSystem& sys, const EdgeWeights& w, const Grid& grid) {
  const std::size_t n = grid.size();
  const std::size_t m = sys.size();
  if (w.size() != m * n) fail(ErrorCode::argument, "edge weights do not match system and grid");
  MaxPlusMatrix M(n);
  for (std::size_t x = 0; x < n; ++x) {
    auto& row = M.out(x);
    for (std::size_t j = 0; j < m; ++j) {
      const std::size_t y = grid.project(sys.maps[j], x);
      const double wt = w[j * n + x];
      M.max_projection_error =
          std::max(M.max_projection_error, std::abs(sys.maps[j](grid.point(x)) - grid.point(y)));
      auto it = std::find_if(row.begin(), row.end(), [&](const auto& e) { return e.to == y; });
      if (it == row.end()) {
        row.push_back({y, wt, {j}});
      } else if (same_weight(wt, it->weight)) {
        it->letters.push_back(j);
        it->weight = std::max(it->weight, wt);
      } else if (wt > it->weight) {
        it->weight = wt;
        it->letters = {j};
      }
    }
  }
  return M;
}

// Karp with a virtual source joined to every node by a zero edge: D_k(v) is
// the best weight of a walk of exactly k edges ending at v. The first pass
// only keeps D_n, the second recomputes D_k to take the inner minimum.
double max_cycle_mean(const MaxPlusMatrix& M) {
  const std::size_t n = M.size();
  if (n == 0) fail(ErrorCode::argument, "max_cycle_mean: empty matrix");

  auto step = [&](const std::vector<double>& prev, std::vector<double>& next) {
    std::fill(next.begin(), next.end(), kBottom);
    for (std::size_t u = 0; u < n; ++u) {
      if (prev[u] == kBottom) continue;
      for (const auto& e : M.out(u)) next[e.to] = std::max(next[e.to], prev[u] + e.weight);
    }
  };

  std::vector<double> a(n, 0.0), b(n);
  for (std::size_t k = 0; k < n; ++k) {
    step(a, b);
    a.swap(b);
  }
  const std::vector<double> dn = a;

  std::vector<double> worst(n, std::numeric_limits<double>::infinity());
  std::fill(a.begin(), a.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t v = 0; v < n; ++v) {
      if (dn[v] == kBottom || a[v] == kBottom) continue;
      worst[v] = std::min(worst[v], (dn[v] - a[v]) / static_cast<double>(n - k));
    }
    step(a, b);
    a.swap(b);
  }

  double best = kBottom;
  for (std::size_t v = 0; v < n; ++v)
    if (dn[v] != kBottom) best = std::max(best, worst[v]);
  if (best == kBottom) fail(ErrorCode::solver, "max_cycle_mean: graph has no cycle");
  return best;
}

TropicalClosure kleene_star(const MaxPlusMatrix& M, double tol) {
  const std::size_t n = M.size();
  TropicalClosure C;
  C.n = n;
  C.S.assign(n * n, kBottom);
  for (std::size_t y = 0; y < n; ++y)
    for (const auto& e : M.out(y)) {
      double& s = C.at(e.to, y);
      s = std::max(s, clamp_weight(e.weight, tol, y, e.to));
    }

  for (std::size_t k = 0; k < n; ++k) {
    const double* row_k = &C.S[k * n];
    for (std::size_t x = 0; x < n; ++x) {
      const double xk = C.S[x * n + k];
      if (xk == kBottom) continue;
      double* row_x = &C.S[x * n];
      for (std::size_t y = 0; y < n; ++y) {
        const double cand = xk + row_k[y];
        if (cand > row_x[y]) row_x[y] = cand;
      }
    }
  }
  return C;
}

std::vector<double> mane_column(const MaxPlusMatrix& M, std::size_t y, double tol) {
  const std::size_t n = M.size();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  for (const auto& e : M.out(y)) {
    const double c = -clamp_weight(e.weight, tol, y, e.to);
    if (c < dist[e.to]) {
      dist[e.to] = c;
      pq.push({c, e.to});
    }
  }
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    for (const auto& e : M.out(u)) {
      const double c = d - clamp_weight(e.weight, tol, u, e.to);
      if (c < dist[e.to]) {
        dist[e.to] = c;
        pq.push({c, e.to});
      }
    }
  }
  std::vector<double> col(n);
  for (std::size_t x = 0; x < n; ++x) col[x] = std::isinf(dist[x]) ? kBottom : -dist[x];
  return col;
}

AubrySet aubry_set_sparse(const MaxPlusMatrix& M, double tol) {
  const std::size_t n = M.size();
  AubrySet out;
  out.tol = tol;
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<std::size_t> touched;
  using Item = std::pair<double, std::size_t>;
  for (std::size_t x = 0; x < n; ++x) {
    // Only paths of cost <= tol can close a qualifying cycle, so the search
    // stops as soon as the frontier passes tol.
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    auto relax = [&](std::size_t to, double c) {
      if (c <= tol && c < dist[to]) {
        if (std::isinf(dist[to])) touched.push_back(to);
        dist[to] = c;
        pq.push({c, to});
      }
    };
    for (const auto& e : M.out(x)) relax(e.to, -clamp_weight(e.weight, tol, x, e.to));
    while (!pq.empty()) {
      const auto [d, u] = pq.top();
      pq.pop();
      if (d > dist[u] || u == x) continue;
      for (const auto& e : M.out(u)) relax(e.to, d - clamp_weight(e.weight, tol, u, e.to));
    }
    if (dist[x] <= tol) out.nodes.push_back(x);
    for (std::size_t t : touched) dist[t] = std::numeric_limits<double>::infinity();
    touched.clear();
  }
  if (out.nodes.empty())
    fail(ErrorCode::contradiction, "Aubry set is empty (contradicts its non-emptiness)");
  return out;
}

}  // namespace ifsldp
