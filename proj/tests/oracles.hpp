#pragma once

// Test-only reference computations, deliberately naive.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "ifsldp/tropical.hpp"

namespace oracle {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Dense adjacency w[x][y] (edge x -> y) from the sparse matrix.
inline std::vector<std::vector<double>> dense(const ifsldp::MaxPlusMatrix& M) {
  std::vector<std::vector<double>> w(M.size(), std::vector<double>(M.size(), kNegInf));
  for (std::size_t x = 0; x < M.size(); ++x)
    for (const auto& e : M.out(x)) w[x][e.to] = std::max(w[x][e.to], e.weight);
  return w;
}

// Best mean over simple cycles of length <= max_len by explicit enumeration.
inline double best_cycle_mean(const ifsldp::MaxPlusMatrix& M, std::size_t max_len) {
  const auto w = dense(M);
  const std::size_t n = M.size();
  double best = kNegInf;
  std::vector<std::size_t> path;
  std::function<void(std::size_t, double)> go = [&](std::size_t u, double sum) {
    for (std::size_t v = 0; v < n; ++v) {
      if (w[u][v] == kNegInf) continue;
      if (v == path.front()) {
        best = std::max(best, (sum + w[u][v]) / static_cast<double>(path.size()));
      } else if (v > path.front() && path.size() < max_len &&
                 std::find(path.begin(), path.end(), v) == path.end()) {
        path.push_back(v);
        go(v, sum + w[u][v]);
        path.pop_back();
      }
    }
  };
  for (std::size_t s = 0; s < n; ++s) {
    path = {s};
    go(s, 0.0);
  }
  return best;
}

// reach[y][x]: x reachable from y by a path of length >= 1 (BFS).
inline std::vector<std::vector<bool>> reachability(const ifsldp::MaxPlusMatrix& M) {
  const std::size_t n = M.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (std::size_t y = 0; y < n; ++y) {
    std::queue<std::size_t> q;
    for (const auto& e : M.out(y))
      if (!reach[y][e.to]) {
        reach[y][e.to] = true;
        q.push(e.to);
      }
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (const auto& e : M.out(u))
        if (!reach[y][e.to]) {
          reach[y][e.to] = true;
          q.push(e.to);
        }
    }
  }
  return reach;
}

// Best path weight y -> x over paths of at most max_len edges (Bellman-Ford
// layering on the dense matrix).
inline std::vector<std::vector<double>> bounded_paths(const ifsldp::MaxPlusMatrix& M,
                                                      std::size_t max_len) {
  const auto w = dense(M);
  const std::size_t n = M.size();
  std::vector<std::vector<double>> best(n, std::vector<double>(n, kNegInf));  // [x][y]
  for (std::size_t y = 0; y < n; ++y) {
    std::vector<double> cur(n, kNegInf);
    for (std::size_t v = 0; v < n; ++v) cur[v] = w[y][v];
    for (std::size_t len = 1; len <= max_len; ++len) {
      for (std::size_t v = 0; v < n; ++v) best[v][y] = std::max(best[v][y], cur[v]);
      std::vector<double> next(n, kNegInf);
      for (std::size_t u = 0; u < n; ++u) {
        if (cur[u] == kNegInf) continue;
        for (std::size_t v = 0; v < n; ++v)
          if (w[u][v] != kNegInf) next[v] = std::max(next[v], cur[u] + w[u][v]);
      }
      cur.swap(next);
    }
  }
  return best;
}

// Minimal number of 1-digits over binary expansions of x = k / 2^d: the
// expansion ending in 0s has popcount(k) ones, the one ending in 1s more.
inline int min_ones_dyadic(unsigned long k) { return __builtin_popcountl(k); }

}  // namespace oracle
