#pragma once

// Network graph, kappa-hop interference model, and enumeration of the finite
// set of valid schedule vectors. A schedule is valid when every pair of
// active links is at hop distance >= kappa; kappa = 1 is the node-exclusive
// model, where valid schedules are exactly the matchings of the graph.

#include <algorithm>
#include <cstdint>
#include <queue>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace lmrsp {

struct NetworkGraph {
  int node_count = 0;
  std::vector<std::pair<int, int>> edges;  // link l = edges[l]

  int link_count() const { return static_cast<int>(edges.size()); }

  void validate() const {
    if (node_count <= 0) throw ConfigError("graph: node_count must be positive");
    if (edges.empty()) throw ConfigError("graph: at least one link required");
    std::vector<std::pair<int, int>> seen;
    for (auto [u, v] : edges) {
      if (u == v) throw ConfigError("graph: self-loop on node " + std::to_string(u));
      if (u < 0 || v < 0 || u >= node_count || v >= node_count)
        throw ConfigError("graph: edge endpoint out of range");
      auto [lo, hi] = std::minmax(u, v);
      if (std::find(seen.begin(), seen.end(), std::pair{lo, hi}) != seen.end())
        throw ConfigError("graph: duplicate edge");
      seen.emplace_back(lo, hi);
    }
  }
};

struct InterferenceModel {
  int kappa = 1;  // 1 = node-exclusive

  void validate() const {
    if (kappa < 1) throw ConfigError("interference: kappa must be >= 1");
  }
};

struct ScheduleVector {
  std::vector<std::uint8_t> active;  // active[l] = 1 iff link l scheduled

  std::uint32_t mask() const {
    std::uint32_t m = 0;
    for (std::size_t l = 0; l < active.size(); ++l)
      if (active[l]) m |= (1u << l);
    return m;
  }

  bool operator==(const ScheduleVector&) const = default;
};

namespace detail {

constexpr int kUnreachable = 1 << 20;

// All-pairs node distances by BFS from every node.
inline std::vector<std::vector<int>> node_distances(const NetworkGraph& g) {
  const int n = g.node_count;
  std::vector<std::vector<int>> adj(n);
  for (auto [u, v] : g.edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  std::vector<std::vector<int>> dist(n, std::vector<int>(n, kUnreachable));
  for (int src = 0; src < n; ++src) {
    dist[src][src] = 0;
    std::queue<int> q;
    q.push(src);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u]) {
        if (dist[src][v] > dist[src][u] + 1) {
          dist[src][v] = dist[src][u] + 1;
          q.push(v);
        }
      }
    }
  }
  return dist;
}

}  // namespace detail

// Pairwise link hop distances: minimum over endpoint-pair node distances.
// Links sharing a node are at distance 0.
inline std::vector<std::vector<int>> link_hop_distances(const NetworkGraph& g) {
  const auto nd = detail::node_distances(g);
  const int m = g.link_count();
  std::vector<std::vector<int>> dist(m, std::vector<int>(m, 0));
  for (int i = 0; i < m; ++i) {
    for (int j = i; j < m; ++j) {
      const auto [a, b] = g.edges[i];
      const auto [c, d] = g.edges[j];
      const int v = std::min(std::min(nd[a][c], nd[a][d]),
                             std::min(nd[b][c], nd[b][d]));
      dist[i][j] = v;
      dist[j][i] = v;
    }
  }
  return dist;
}

namespace detail {

inline bool valid_under(const std::vector<std::vector<int>>& link_dist,
                        const std::vector<std::uint8_t>& active, int kappa) {
  const int m = static_cast<int>(active.size());
  for (int i = 0; i < m; ++i) {
    if (!active[i]) continue;
    for (int j = i + 1; j < m; ++j) {
      if (active[j] && link_dist[i][j] < kappa) return false;
    }
  }
  return true;
}

}  // namespace detail

// True iff no two active links lie within kappa hops of each other.
inline bool is_valid_schedule(const NetworkGraph& graph,
                              const InterferenceModel& model,
                              const ScheduleVector& sched) {
  if (static_cast<int>(sched.active.size()) != graph.link_count())
    throw LengthMismatchError("schedule length does not match link count");
  return detail::valid_under(link_hop_distances(graph), sched.active,
                             model.kappa);
}

// The enumerated schedule set in canonical lexicographic order (on the binary
// activation vector), together with the graph context needed by the policy
// oracles. Immutable after construction; safe to share across replications.
struct ScheduleSet {
  NetworkGraph graph;
  InterferenceModel model;
  std::vector<ScheduleVector> schedules;        // canonical order; [0] is empty
  std::vector<std::vector<int>> active_links;   // per schedule, ascending
  std::vector<std::vector<int>> link_distance;  // cached pairwise hop distances
  std::unordered_map<std::uint32_t, std::size_t> index_by_mask;
  std::vector<std::uint8_t> link_schedulable;   // link appears in some schedule

  std::size_t size() const { return schedules.size(); }
  int link_count() const { return graph.link_count(); }

  std::size_t index_of(const ScheduleVector& s) const {
    auto it = index_by_mask.find(s.mask());
    if (it == index_by_mask.end())
      throw InvalidScheduleError("schedule is not in the enumerated set");
    return it->second;
  }

  bool is_valid(const ScheduleVector& s) const {
    if (static_cast<int>(s.active.size()) != link_count())
      throw LengthMismatchError("schedule length does not match link count");
    return detail::valid_under(link_distance, s.active, model.kappa);
  }
};

// Enumerates every valid schedule including the empty one, in lexicographic
// order. Guarded against search spaces too large for exhaustive enumeration.
inline ScheduleSet enumerate_schedules(const NetworkGraph& graph,
                                       const InterferenceModel& model,
                                       bool allow_large = false) {
  graph.validate();
  model.validate();
  const int n = graph.link_count();
  if (n > 24 && !allow_large)
    throw SizeLimitError("schedule enumeration over " + std::to_string(n) +
                         " links needs an explicit override");

  ScheduleSet set;
  set.graph = graph;
  set.model = model;
  set.link_distance = link_hop_distances(graph);
  set.link_schedulable.assign(n, 0);

  std::vector<std::uint8_t> current(n, 0);
  std::vector<int> chosen;
  // Exclude-first depth-first search emits vectors in lexicographic order.
  auto emit = [&set](const std::vector<std::uint8_t>& vec,
                     const std::vector<int>& links) {
    ScheduleVector sv{vec};
    set.index_by_mask.emplace(sv.mask(), set.schedules.size());
    set.schedules.push_back(std::move(sv));
    set.active_links.push_back(links);
    for (int l : links) set.link_schedulable[l] = 1;
  };
  auto compatible = [&](int link) {
    for (int c : chosen)
      if (set.link_distance[c][link] < model.kappa) return false;
    return true;
  };
  auto dfs = [&](auto&& self, int link) -> void {
    if (link == n) {
      emit(current, chosen);
      return;
    }
    self(self, link + 1);
    if (compatible(link)) {
      current[link] = 1;
      chosen.push_back(link);
      self(self, link + 1);
      chosen.pop_back();
      current[link] = 0;
    }
  };
  dfs(dfs, 0);
  return set;
}

}  // namespace lmrsp
