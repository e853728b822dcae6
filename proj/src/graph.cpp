#include "jknet/graph.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "jknet/error.hpp"

namespace jknet {

InteractionMatrix::InteractionMatrix(std::size_t d) : d_(d), c_(d * d, 0) {
  if (d < 2) throw std::invalid_argument("interaction matrix needs d >= 2, got " + std::to_string(d));
}

InteractionMatrix InteractionMatrix::from_edges(std::size_t d, std::span<const Edge> edges) {
  InteractionMatrix c(d);
  for (const auto& [src, dst] : edges) {
    if (src == dst) throw std::invalid_argument("self-loop on vertex " + std::to_string(src));
    c.add_edge(src, dst);
  }
  return c;
}

std::size_t InteractionMatrix::index(Vertex i, Vertex j) const {
  if (i >= d_ || j >= d_) {
    throw std::out_of_range("entry (" + std::to_string(i) + "," + std::to_string(j) +
                            ") outside " + std::to_string(d_) + "x" + std::to_string(d_));
  }
  return i * d_ + j;
}

void InteractionMatrix::set(Vertex i, Vertex j, bool value) {
  const std::size_t k = index(i, j);
  if (i == j && value) throw std::invalid_argument("diagonal entries must stay zero");
  c_[k] = value ? 1 : 0;
}

std::size_t InteractionMatrix::edge_count() const noexcept {
  return static_cast<std::size_t>(std::count(c_.begin(), c_.end(), std::uint8_t{1}));
}

std::vector<Edge> InteractionMatrix::edges() const {
  std::vector<Edge> out;
  for (Vertex src = 0; src < d_; ++src)
    for (Vertex dst = 0; dst < d_; ++dst)
      if (c_[dst * d_ + src]) out.emplace_back(src, dst);
  return out;
}

std::vector<Vertex> InteractionMatrix::successors(Vertex j) const {
  std::vector<Vertex> out;
  for (Vertex i = 0; i < d_; ++i)
    if (at(i, j)) out.push_back(i);
  return out;
}

std::vector<Vertex> InteractionMatrix::predecessors(Vertex i) const {
  std::vector<Vertex> out;
  for (Vertex j = 0; j < d_; ++j)
    if (at(i, j)) out.push_back(j);
  return out;
}

ModelParams ModelParams::make(std::size_t d, double p) {
  if (d < 2) throw std::invalid_argument("d must be >= 2");
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("p must lie in [0, 1]");
  return ModelParams{d, p};
}

ModelParams ModelParams::from_theta(std::size_t d, double theta) {
  if (d < 2) throw std::invalid_argument("d must be >= 2");
  return make(d, theta / static_cast<double>(d));
}

InteractionMatrix sample_er_digraph(const ModelParams& params, Rng& rng) {
  InteractionMatrix c(params.d);
  for (Vertex i = 0; i < params.d; ++i)
    for (Vertex j = 0; j < params.d; ++j)
      if (i != j && bernoulli(rng, params.p)) c.set(i, j, true);
  return c;
}

InteractionMatrix resample_vertex(const InteractionMatrix& c, Vertex j, double p, Rng& rng) {
  if (j >= c.size()) throw std::out_of_range("vertex " + std::to_string(j) + " out of range");
  InteractionMatrix out = c;
  for (Vertex i = 0; i < c.size(); ++i) {
    if (i == j) continue;
    out.set(j, i, bernoulli(rng, p));  // row j: edge i -> j
    out.set(i, j, bernoulli(rng, p));  // column j: edge j -> i
  }
  return out;
}

bool has_directed_cycle(const InteractionMatrix& c) {
  // Kahn: a cycle exists iff some vertex never reaches in-degree zero.
  const std::size_t d = c.size();
  const auto data = c.data();
  std::vector<std::size_t> in_degree(d, 0);
  for (Vertex i = 0; i < d; ++i)
    for (Vertex j = 0; j < d; ++j) in_degree[i] += data[i * d + j];
  std::vector<Vertex> stack;
  for (Vertex i = 0; i < d; ++i)
    if (in_degree[i] == 0) stack.push_back(i);
  std::size_t removed = 0;
  while (!stack.empty()) {
    const Vertex j = stack.back();
    stack.pop_back();
    ++removed;
    for (Vertex i = 0; i < d; ++i)
      if (data[i * d + j] && --in_degree[i] == 0) stack.push_back(i);
  }
  return removed != d;
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  // False when a and b were already joined.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

}  // namespace

bool has_undirected_cycle(const InteractionMatrix& c) {
  const std::size_t d = c.size();
  DisjointSets sets(d);
  for (Vertex i = 0; i < d; ++i)
    for (Vertex j = i + 1; j < d; ++j)
      if ((c.at(i, j) || c.at(j, i)) && !sets.unite(i, j)) return true;
  return false;
}

std::vector<VertexSet> strongly_connected_components(const InteractionMatrix& c) {
  const std::size_t d = c.size();
  std::vector<std::vector<Vertex>> succ(d);
  for (Vertex j = 0; j < d; ++j) succ[j] = c.successors(j);

  constexpr std::size_t kUnvisited = static_cast<std::size_t>(-1);
  std::vector<std::size_t> order(d, kUnvisited), low(d, 0);
  std::vector<bool> on_stack(d, false);
  std::vector<Vertex> stack;
  std::vector<VertexSet> components;
  std::size_t counter = 0;

  // Iterative Tarjan: frames hold (vertex, next successor position).
  std::vector<std::pair<Vertex, std::size_t>> frames;
  for (Vertex root = 0; root < d; ++root) {
    if (order[root] != kUnvisited) continue;
    frames.emplace_back(root, 0);
    order[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, pos] = frames.back();
      if (pos < succ[v].size()) {
        const Vertex w = succ[v][pos++];
        if (order[w] == kUnvisited) {
          order[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], order[w]);
        }
        continue;
      }
      const Vertex done = v;
      frames.pop_back();
      if (!frames.empty()) {
        const Vertex parent = frames.back().first;
        low[parent] = std::min(low[parent], low[done]);
      }
      if (low[done] == order[done]) {
        VertexSet comp;
        Vertex w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          comp.push_back(w);
        } while (w != done);
        std::sort(comp.begin(), comp.end());
        components.push_back(std::move(comp));
      }
    }
  }
  return components;
}

bool is_irreducible(const InteractionMatrix& c) {
  return strongly_connected_components(c).size() == 1;
}

bool is_acs(const InteractionMatrix& c, std::span<const Vertex> subset) {
  if (subset.empty()) throw std::invalid_argument("ACS check needs a nonempty subset");
  std::vector<bool> member(c.size(), false);
  for (Vertex v : subset) {
    if (v >= c.size()) throw std::out_of_range("vertex " + std::to_string(v) + " out of range");
    member[v] = true;
  }
  for (Vertex i : subset) {
    bool fed = false;
    for (Vertex j = 0; j < c.size() && !fed; ++j) fed = j != i && member[j] && c.at(i, j);
    if (!fed) return false;
  }
  return true;
}

VertexSet acs_from_eigenvector(const InteractionMatrix& c, std::span<const double> v,
                               double threshold) {
  if (v.size() != c.size()) throw std::invalid_argument("eigenvector length does not match d");
  VertexSet support;
  for (Vertex j = 0; j < v.size(); ++j) {
    if (v[j] < -1e-12) throw std::invalid_argument("eigenvector has a negative entry");
    if (v[j] > threshold) support.push_back(j);
  }
  if (support.empty()) throw std::invalid_argument("eigenvector is zero");
  if (!is_acs(c, support)) throw std::logic_error("support of eigenvector is not an ACS");
  return support;
}

VertexSet terminal_vertices(const InteractionMatrix& c) {
  VertexSet out;
  for (Vertex j = 0; j < c.size(); ++j) {
    bool has_in = false, has_out = false;
    for (Vertex i = 0; i < c.size(); ++i) {
      has_in = has_in || c.at(j, i);
      has_out = has_out || c.at(i, j);
    }
    if (has_in && !has_out) out.push_back(j);
  }
  return out;
}

std::vector<std::size_t> path_counts(const InteractionMatrix& c) {
  const std::size_t d = c.size();
  // Topological order via Kahn; leftover vertices mean a cycle.
  std::vector<std::size_t> in_degree(d, 0);
  for (Vertex i = 0; i < d; ++i)
    for (Vertex j = 0; j < d; ++j) in_degree[i] += c.at(i, j);
  std::vector<Vertex> topo, stack;
  for (Vertex i = 0; i < d; ++i)
    if (in_degree[i] == 0) stack.push_back(i);
  while (!stack.empty()) {
    const Vertex j = stack.back();
    stack.pop_back();
    topo.push_back(j);
    for (Vertex i = 0; i < d; ++i)
      if (c.at(i, j) && --in_degree[i] == 0) stack.push_back(i);
  }
  if (topo.size() != d) throw CyclicInputError("path counts need an acyclic graph");

  std::vector<std::vector<bool>> ancestors(d, std::vector<bool>(d, false));
  for (Vertex i : topo) {
    for (Vertex j = 0; j < d; ++j) {
      if (!c.at(i, j)) continue;
      ancestors[i][j] = true;
      for (Vertex k = 0; k < d; ++k)
        if (ancestors[j][k]) ancestors[i][k] = true;
    }
  }
  std::vector<std::size_t> counts(d, 0);
  for (Vertex i = 0; i < d; ++i)
    counts[i] = static_cast<std::size_t>(std::count(ancestors[i].begin(), ancestors[i].end(), true));
  return counts;
}

std::vector<bool> reachable_from(const InteractionMatrix& c, std::span<const Vertex> sources) {
  std::vector<bool> seen(c.size(), false);
  std::vector<Vertex> stack;
  for (Vertex s : sources) {
    if (s >= c.size()) throw std::out_of_range("vertex out of range");
    if (!seen[s]) {
      seen[s] = true;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const Vertex j = stack.back();
    stack.pop_back();
    for (Vertex i = 0; i < c.size(); ++i) {
      if (c.at(i, j) && !seen[i]) {
        seen[i] = true;
        stack.push_back(i);
      }
    }
  }
  return seen;
}

InteractionMatrix induced_subgraph(const InteractionMatrix& c, std::span<const Vertex> subset) {
  if (subset.size() < 2) throw std::invalid_argument("induced subgraph needs at least 2 vertices");
  InteractionMatrix out(subset.size());
  for (std::size_t a = 0; a < subset.size(); ++a)
    for (std::size_t b = 0; b < subset.size(); ++b)
      if (a != b && c.at(subset[a], subset[b])) out.set(a, b, true);
  return out;
}

GraphAnalysis analyze(const InteractionMatrix& c) {
  GraphAnalysis a;
  a.sccs = strongly_connected_components(c);
  a.directed_cycle_present = std::any_of(a.sccs.begin(), a.sccs.end(),
                                         [](const VertexSet& s) { return s.size() > 1; });
  a.acyclic = !a.directed_cycle_present;
  a.terminal_set = terminal_vertices(c);
  if (a.acyclic) a.path_counts = path_counts(c);
  a.undirected_cycle_present = has_undirected_cycle(c);
  return a;
}

}  // namespace jknet
