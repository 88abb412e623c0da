#pragma once

// Small labeled DAGs stored as one child bitmask per node (n <= 64).

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "opad/core.hpp"

namespace opad {

inline constexpr std::size_t kMaxDagNodes = 64;

/// True when the graph given by per-node child masks has no directed cycle
/// (self-loops count as cycles).
bool is_acyclic(std::span<const std::uint64_t> children);

/// Nodes reachable from `source` along one or more edges.
std::uint64_t reachable_from(std::span<const std::uint64_t> children, std::size_t source);

/// Acyclic adjacency over n labeled nodes. Edge (i, j) means i -> j.
class DagState {
 public:
  /// Empty graph.
  explicit DagState(std::size_t n);
  /// Throws std::invalid_argument on self-loops, cycles or out-of-range bits.
  DagState(std::size_t n, std::vector<std::uint64_t> children);

  /// Row-major n x n bits; bit i*n + j is the edge i -> j. Validates.
  static DagState from_key(const StateKey& key, std::size_t n);
  StateKey to_key() const;

  std::size_t node_count() const noexcept { return n_; }
  bool has_edge(std::size_t from, std::size_t to) const { return (children_[from] >> to) & 1u; }
  std::uint64_t children(std::size_t i) const { return children_[i]; }
  std::uint64_t parents(std::size_t j) const;
  std::size_t edge_count() const;
  const std::vector<std::uint64_t>& child_masks() const noexcept { return children_; }

  friend bool operator==(const DagState&, const DagState&) = default;

 private:
  std::size_t n_;
  std::vector<std::uint64_t> children_;
};

/// Row-major key of an arbitrary child-mask adjacency (no validation).
StateKey adjacency_key(std::span<const std::uint64_t> children);

}  // namespace opad
