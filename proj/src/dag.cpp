#include "opad/dag.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace opad {

bool is_acyclic(std::span<const std::uint64_t> children) {
  // Kahn's algorithm on bitmasks.
  const std::size_t n = children.size();
  std::vector<std::size_t> in_degree(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint64_t c = children[i]; c != 0; c &= c - 1) {
      ++in_degree[static_cast<std::size_t>(std::countr_zero(c))];
    }
  }
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_degree[i] == 0) stack.push_back(i);
  }
  std::size_t removed = 0;
  while (!stack.empty()) {
    const std::size_t node = stack.back();
    stack.pop_back();
    ++removed;
    for (std::uint64_t c = children[node]; c != 0; c &= c - 1) {
      const auto next = static_cast<std::size_t>(std::countr_zero(c));
      if (--in_degree[next] == 0) stack.push_back(next);
    }
  }
  return removed == n;
}

std::uint64_t reachable_from(std::span<const std::uint64_t> children, std::size_t source) {
  std::uint64_t seen = 0;
  std::uint64_t frontier = children[source];
  while (frontier != 0) {
    seen |= frontier;
    std::uint64_t next = 0;
    for (std::uint64_t f = frontier; f != 0; f &= f - 1) {
      next |= children[static_cast<std::size_t>(std::countr_zero(f))];
    }
    frontier = next & ~seen;
  }
  return seen;
}

DagState::DagState(std::size_t n) : n_(n), children_(n, 0) {
  if (n == 0 || n > kMaxDagNodes) {
    throw std::invalid_argument("DagState: node count must be in [1, 64]");
  }
}

DagState::DagState(std::size_t n, std::vector<std::uint64_t> children)
    : n_(n), children_(std::move(children)) {
  if (n == 0 || n > kMaxDagNodes) {
    throw std::invalid_argument("DagState: node count must be in [1, 64]");
  }
  if (children_.size() != n) throw std::invalid_argument("DagState: one child mask per node");
  const std::uint64_t valid = n == 64 ? ~0ull : ((1ull << n) - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if ((children_[i] & ~valid) != 0) throw std::invalid_argument("DagState: edge to unknown node");
    if ((children_[i] >> i) & 1u) {
      throw std::invalid_argument("DagState: self-loop at node " + std::to_string(i));
    }
  }
  if (!is_acyclic(children_)) throw std::invalid_argument("DagState: adjacency has a cycle");
}

DagState DagState::from_key(const StateKey& key, std::size_t n) {
  if (key.bit_count() != n * n) {
    throw std::invalid_argument("DagState::from_key: expected " + std::to_string(n * n) + " bits");
  }
  std::vector<std::uint64_t> children(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (key.get(i * n + j)) children[i] |= 1ull << j;
    }
  }
  return DagState(n, std::move(children));
}

StateKey adjacency_key(std::span<const std::uint64_t> children) {
  const std::size_t n = children.size();
  StateKey key(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::uint64_t c = children[i]; c != 0; c &= c - 1) {
      key.set(i * n + static_cast<std::size_t>(std::countr_zero(c)), true);
    }
  }
  return key;
}

StateKey DagState::to_key() const { return adjacency_key(children_); }

std::uint64_t DagState::parents(std::size_t j) const {
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    if (has_edge(i, j)) mask |= 1ull << i;
  }
  return mask;
}

std::size_t DagState::edge_count() const {
  std::size_t total = 0;
  for (auto c : children_) total += static_cast<std::size_t>(std::popcount(c));
  return total;
}

}  // namespace opad
