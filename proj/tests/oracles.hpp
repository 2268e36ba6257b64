#pragma once

// Independent test oracles. Everything here recomputes expected values by
// brute force, deliberately avoiding the library's own code paths: subset
// filtering instead of pruned enumeration, basis enumeration instead of the
// simplex, and a truncated Markov chain for single-queue delay.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lmrsp/channel.hpp"
#include "lmrsp/queueing.hpp"
#include "lmrsp/rates.hpp"
#include "lmrsp/topology.hpp"

namespace oracles {

// Hop distance between two links via Floyd-Warshall (the library uses BFS).
inline std::vector<std::vector<int>> link_distances_fw(
    const lmrsp::NetworkGraph& g) {
  const int n = g.node_count;
  const int inf = 1 << 20;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (auto [u, v] : g.edges) d[u][v] = d[v][u] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  const int m = g.link_count();
  std::vector<std::vector<int>> ld(m, std::vector<int>(m, 0));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      auto [a, b] = g.edges[i];
      auto [c, e] = g.edges[j];
      ld[i][j] = std::min({d[a][c], d[a][e], d[b][c], d[b][e]});
    }
  return ld;
}

inline bool subset_valid(const std::vector<std::vector<int>>& ld,
                         const std::vector<std::uint8_t>& active, int kappa) {
  const int m = static_cast<int>(active.size());
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (active[i] && active[j] && ld[i][j] < kappa) return false;
  return true;
}

// All valid schedules by filtering every one of the 2^N subsets, sorted
// lexicographically on the binary vector.
inline std::vector<std::vector<std::uint8_t>> brute_force_schedules(
    const lmrsp::NetworkGraph& g, const lmrsp::InterferenceModel& model) {
  const int m = g.link_count();
  const auto ld = link_distances_fw(g);
  std::vector<std::vector<std::uint8_t>> out;
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<std::uint8_t> active(m, 0);
    for (int l = 0; l < m; ++l)
      if (mask & (1u << l)) active[l] = 1;
    if (subset_valid(ld, active, model.kappa)) out.push_back(std::move(active));
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Maximum backlog-rate product over the brute-force subset list, tie broken
// to the first (lexicographically lowest) maximizer.
struct BruteGmwm {
  std::vector<std::uint8_t> schedule;
  double value = 0.0;
};

inline BruteGmwm brute_force_gmwm(const lmrsp::NetworkGraph& g,
                                  const lmrsp::InterferenceModel& model,
                                  const lmrsp::QueueVector& x,
                                  const lmrsp::ChannelState& s,
                                  const std::vector<double>& good_rates) {
  BruteGmwm best;
  for (const auto& active : brute_force_schedules(g, model)) {
    double value = 0.0;
    for (std::size_t l = 0; l < active.size(); ++l)
      if (active[l] && s[l])
        value += static_cast<double>(x[l]) * good_rates[l];
    if (best.schedule.empty() || value > best.value) {
      best.schedule = active;
      best.value = value;
    }
  }
  return best;
}

// Minimum of max_s sum_I beta over decompositions a = sum pi beta D by
// enumerating candidate bases: any vertex solution uses at most N columns
// with linearly independent rate vectors, so trying every subset of size
// <= N and solving the square system finds the optimum. Frozen channels
// only (a single state), which is where this oracle is used.
inline std::optional<double> min_sum_beta_bruteforce(
    const std::vector<double>& a,
    const std::vector<std::vector<double>>& rate_vectors, double tol = 1e-9) {
  const int n = static_cast<int>(a.size());
  const int k = static_cast<int>(rate_vectors.size());
  double best = std::numeric_limits<double>::infinity();

  bool a_zero = true;
  for (double v : a) a_zero = a_zero && std::fabs(v) <= tol;
  if (a_zero) return 0.0;

  std::vector<int> idx;
  auto try_subset = [&](const std::vector<int>& cols) {
    const int c = static_cast<int>(cols.size());
    // Solve min-norm least squares via normal equations on the c columns.
    // With c <= n the system is a D = sum beta_j D_j; use Gaussian
    // elimination on the augmented (n x c) system's normal form.
    std::vector<std::vector<double>> m(c, std::vector<double>(c + 1, 0.0));
    for (int i = 0; i < c; ++i) {
      for (int j = 0; j < c; ++j)
        for (int l = 0; l < n; ++l)
          m[i][j] += rate_vectors[cols[i]][l] * rate_vectors[cols[j]][l];
      for (int l = 0; l < n; ++l) m[i][c] += rate_vectors[cols[i]][l] * a[l];
    }
    // Gaussian elimination with partial pivoting.
    std::vector<int> perm(c);
    for (int i = 0; i < c; ++i) perm[i] = i;
    for (int col = 0; col < c; ++col) {
      int piv = col;
      for (int r = col + 1; r < c; ++r)
        if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
      if (std::fabs(m[piv][col]) < 1e-12) return;  // singular: skip subset
      std::swap(m[piv], m[col]);
      for (int r = 0; r < c; ++r) {
        if (r == col) continue;
        const double f = m[r][col] / m[col][col];
        for (int j = col; j <= c; ++j) m[r][j] -= f * m[col][j];
      }
    }
    std::vector<double> beta(c);
    for (int i = 0; i < c; ++i) beta[i] = m[i][c] / m[i][i];
    double sum = 0.0;
    for (double b : beta) {
      if (b < -tol) return;  // infeasible subset
      sum += std::max(b, 0.0);
    }
    // Verify the reconstruction (the normal equations may have produced a
    // least-squares fit that is not an exact solution).
    for (int l = 0; l < n; ++l) {
      double acc = 0.0;
      for (int i = 0; i < c; ++i) acc += beta[i] * rate_vectors[cols[i]][l];
      if (std::fabs(acc - a[l]) > 1e-7) return;
    }
    best = std::min(best, sum);
  };

  auto rec = [&](auto&& self, int start, int remaining) -> void {
    if (!idx.empty()) try_subset(idx);
    if (remaining == 0) return;
    for (int i = start; i < k; ++i) {
      idx.push_back(i);
      self(self, i + 1, remaining - 1);
      idx.pop_back();
    }
  };
  rec(rec, 0, n);

  if (std::isinf(best)) return std::nullopt;
  return best;
}

// Stationary mean queue of the single-link unit-service chain
// X' = X - min(X, 1) + A, A i.i.d. with the given pmf, by forward iteration
// of a truncated distribution vector.
inline double single_queue_stationary_mean(const std::vector<double>& arrival_pmf,
                                           int truncation = 4000,
                                           int iterations = 200000) {
  std::vector<double> dist(truncation, 0.0), next(truncation, 0.0);
  dist[0] = 1.0;
  for (int it = 0; it < iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int x = 0; x < truncation; ++x) {
      if (dist[x] == 0.0) continue;
      const int after_service = x - std::min(x, 1);
      for (std::size_t a = 0; a < arrival_pmf.size(); ++a) {
        const int y = std::min(after_service + static_cast<int>(a), truncation - 1);
        next[y] += dist[x] * arrival_pmf[a];
      }
    }
    dist.swap(next);
  }
  double mean = 0.0;
  for (int x = 0; x < truncation; ++x) mean += x * dist[x];
  return mean;
}

}  // namespace oracles
