/*
Copyright 2026 The GBPA Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#include "gbpa/graph.hpp"

#include <algorithm>
#include <queue>

namespace gbpa {

Dag::Dag(std::vector<std::string> ids, const std::vector<Edge>& edges) : ids_(std::move(ids)) {
  std::sort(ids_.begin(), ids_.end());
  ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
  succ_.resize(ids_.size());
  pred_.resize(ids_.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& [from, to] : edges) {
    const auto a = index_.at(from);
    const auto b = index_.at(to);
    if (!seen.emplace(a, b).second) continue;
    succ_[a].push_back(b);
    pred_[b].push_back(a);
  }
  for (auto& s : succ_) std::sort(s.begin(), s.end());
  for (auto& p : pred_) std::sort(p.begin(), p.end());
}

std::optional<std::size_t> Dag::index(const std::string& id) const {
  const auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::vector<std::size_t>> Dag::topo_order() const {
  std::vector<std::size_t> indegree(size());
  for (std::size_t v = 0; v < size(); ++v) indegree[v] = pred_[v].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t v = 0; v < size(); ++v) {
    if (indegree[v] == 0) ready.push(v);
  }
  std::vector<std::size_t> order;
  order.reserve(size());
  while (!ready.empty()) {
    const auto v = ready.top();
    ready.pop();
    order.push_back(v);
    for (const auto w : succ_[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (order.size() != size()) return std::nullopt;
  return order;
}

std::optional<std::vector<std::string>> Dag::find_cycle() const {
  enum class Mark { white, grey, black };
  std::vector<Mark> mark(size(), Mark::white);
  std::vector<std::size_t> parent(size(), size());
  for (std::size_t root = 0; root < size(); ++root) {
    if (mark[root] != Mark::white) continue;
    // iterative DFS: (node, next successor position)
    std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
    mark[root] = Mark::grey;
    while (!stack.empty()) {
      auto& [v, pos] = stack.back();
      if (pos < succ_[v].size()) {
        const auto w = succ_[v][pos++];
        if (mark[w] == Mark::grey) {
          std::vector<std::string> cycle{ids_[w]};
          for (auto it = stack.rbegin(); it != stack.rend() && it->first != w; ++it) {
            cycle.push_back(ids_[it->first]);
          }
          std::reverse(cycle.begin() + 1, cycle.end());
          cycle.push_back(ids_[w]);
          return cycle;
        }
        if (mark[w] == Mark::white) {
          mark[w] = Mark::grey;
          stack.emplace_back(w, 0);
        }
      } else {
        mark[v] = Mark::black;
        stack.pop_back();
      }
    }
  }
  return std::nullopt;
}

BitMatrix Dag::reachability() const {
  BitMatrix reach(size());
  const auto order = topo_order();
  if (!order) return reach;
  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    for (const auto w : succ_[*it]) {
      reach.set(*it, w);
      reach.or_row(*it, w);
    }
  }
  return reach;
}

std::vector<int> Dag::depths() const {
  std::vector<int> depth(size(), 0);
  const auto order = topo_order();
  if (!order) return depth;
  for (const auto v : *order) {
    for (const auto u : pred_[v]) depth[v] = std::max(depth[v], depth[u] + 1);
  }
  return depth;
}

std::vector<Edge> Dag::transitive_reduction() const {
  const BitMatrix reach = reachability();
  std::vector<Edge> out;
  for (std::size_t u = 0; u < size(); ++u) {
    for (const auto v : succ_[u]) {
      const bool implied = std::any_of(succ_[u].begin(), succ_[u].end(),
                                       [&](std::size_t w) { return w != v && reach.test(w, v); });
      if (!implied) out.emplace_back(ids_[u], ids_[v]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Dag make_dag(const ProcessSpec& spec) {
  std::vector<std::string> ids;
  ids.reserve(spec.nodes.size());
  for (const auto& n : spec.nodes) ids.push_back(n.id);
  return Dag(std::move(ids), spec.edges);
}

std::vector<std::string> ExecutionGraph::predecessors(const std::string& node) const {
  std::vector<std::string> out;
  for (const auto& [from, to] : edges) {
    if (to == node) out.push_back(from);
  }
  return out;
}

ExecutionGraph build_execution_graph(const ProcessSpec& spec) {
  ExecutionGraph g;
  g.spec = std::make_shared<const ProcessSpec>(spec);
  const Dag dag = make_dag(spec);
  const auto depth = dag.depths();
  const int stage_count = depth.empty() ? 0 : *std::max_element(depth.begin(), depth.end()) + 1;
  g.stages.resize(static_cast<std::size_t>(stage_count));
  // dag ids are sorted, so each stage comes out sorted
  for (std::size_t v = 0; v < dag.size(); ++v) {
    g.stages[static_cast<std::size_t>(depth[v])].push_back(dag.ids()[v]);
    g.stage_of.emplace(dag.ids()[v], depth[v]);
  }
  g.edges = dag.transitive_reduction();
  return g;
}

int parallel_cluster_count(const ExecutionGraph& graph) {
  return static_cast<int>(std::count_if(graph.stages.begin(), graph.stages.end(),
                                        [](const auto& stage) { return stage.size() >= 2; }));
}

}  // namespace gbpa
