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

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gbpa/process_spec.hpp"

namespace gbpa {

/// Dense bit rows for reachability over small DAGs.
class BitMatrix {
 public:
  explicit BitMatrix(std::size_t n = 0) : n_(n), words_((n + 63) / 64), bits_(n * words_, 0) {}

  std::size_t size() const noexcept { return n_; }
  bool test(std::size_t r, std::size_t c) const noexcept {
    return (bits_[r * words_ + c / 64] >> (c % 64)) & 1U;
  }
  void set(std::size_t r, std::size_t c) noexcept { bits_[r * words_ + c / 64] |= (1ULL << (c % 64)); }
  void or_row(std::size_t dst, std::size_t src) noexcept {
    for (std::size_t w = 0; w < words_; ++w) bits_[dst * words_ + w] |= bits_[src * words_ + w];
  }

 private:
  std::size_t n_;
  std::size_t words_;
  std::vector<std::uint64_t> bits_;
};

/// Index-based DAG over string ids; ids kept in lexicographic order.
class Dag {
 public:
  Dag() = default;
  Dag(std::vector<std::string> ids, const std::vector<Edge>& edges);

  std::size_t size() const noexcept { return ids_.size(); }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  std::optional<std::size_t> index(const std::string& id) const;
  const std::vector<std::size_t>& succ(std::size_t v) const { return succ_[v]; }
  const std::vector<std::size_t>& pred(std::size_t v) const { return pred_[v]; }

  /// Kahn order with smallest-id tie-break; nullopt when cyclic.
  std::optional<std::vector<std::size_t>> topo_order() const;
  /// One cycle as an id sequence (first id repeated at the end), if any.
  std::optional<std::vector<std::string>> find_cycle() const;
  /// reach.test(u, v) iff a non-empty path u ~> v exists. Requires acyclic.
  BitMatrix reachability() const;
  /// Longest-path depth from any source. Requires acyclic.
  std::vector<int> depths() const;
  /// Minimal edge set with equal reachability, sorted. Requires acyclic.
  std::vector<Edge> transitive_reduction() const;

 private:
  std::vector<std::string> ids_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> succ_;
  std::vector<std::vector<std::size_t>> pred_;
};

Dag make_dag(const ProcessSpec& spec);

/// The staged DAG: minimal-index layering with ids sorted inside a stage.
struct ExecutionGraph {
  std::shared_ptr<const ProcessSpec> spec;
  std::vector<std::vector<std::string>> stages;
  std::vector<Edge> edges;  // transitively reduced
  std::map<std::string, int> stage_of;

  std::vector<std::string> predecessors(const std::string& node) const;
};

ExecutionGraph build_execution_graph(const ProcessSpec& spec);

/// Stages holding two or more nodes.
int parallel_cluster_count(const ExecutionGraph& graph);

}  // namespace gbpa
