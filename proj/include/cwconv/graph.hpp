#pragma once

#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cwconv {

/// Undirected edge between nodes a and b (0-based, a != b).
struct Edge {
  std::size_t a = 0;
  std::size_t b = 0;
};

/// One endpoint's view of an edge: `forward` is true when the owning node is
/// the edge's `a` end, so the stored orientation matches (i, j).
struct Incidence {
  std::size_t neighbor = 0;
  std::size_t edge = 0;
  bool forward = true;
};

class Graph {
 public:
  Graph() = default;

  Graph(std::size_t n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)), adjacency_(n)
  {
    if (n_ == 0) throw std::invalid_argument("graph: node count must be positive");
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const auto [a, b] = edges_[e];
      if (a >= n_ || b >= n_)
        throw std::invalid_argument("graph: edge " + std::to_string(e) + " references a node out of range");
      if (a == b) throw std::invalid_argument("graph: self-loop at node " + std::to_string(a + 1));
      if (!seen.emplace(std::min(a, b), std::max(a, b)).second)
        throw std::invalid_argument("graph: duplicate edge " + std::to_string(a + 1) + "-" + std::to_string(b + 1));
      adjacency_[a].push_back({b, e, true});
      adjacency_[b].push_back({a, e, false});
    }
  }

  static Graph path(std::size_t n)
  {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1});
    return Graph(n, std::move(edges));
  }

  static Graph complete(std::size_t n)
  {
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) edges.push_back({i, j});
    return Graph(n, std::move(edges));
  }

  std::size_t size() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<Incidence>& neighbors(std::size_t i) const { return adjacency_.at(i); }

  bool has_edge(std::size_t i, std::size_t j) const { return find_incidence(i, j) != nullptr; }

  const Incidence* find_incidence(std::size_t i, std::size_t j) const
  {
    if (i >= n_) return nullptr;
    for (const auto& inc : adjacency_[i])
      if (inc.neighbor == j) return &inc;
    return nullptr;
  }

  bool is_connected() const
  {
    if (n_ == 0) return false;
    std::vector<bool> visited(n_, false);
    std::vector<std::size_t> stack{0};
    visited[0] = true;
    std::size_t count = 1;
    while (!stack.empty()) {
      const auto i = stack.back();
      stack.pop_back();
      for (const auto& inc : adjacency_[i]) {
        if (!visited[inc.neighbor]) {
          visited[inc.neighbor] = true;
          ++count;
          stack.push_back(inc.neighbor);
        }
      }
    }
    return count == n_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
};

}  // namespace cwconv
