#include "opad/exact.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "opad/dag.hpp"

namespace opad {

void enumerate_hypercube(std::size_t m, const StateVisitor& visit) {
  if (m > kMaxHypercubeBits) {
    throw EnumerationLimitError("enumerate_hypercube: m = " + std::to_string(m) +
                                " exceeds the enumeration bound of " +
                                std::to_string(kMaxHypercubeBits));
  }
  const std::uint64_t count = 1ull << m;
  for (std::uint64_t idx = 0; idx < count; ++idx) visit(hypercube_state(idx, m));
}

void enumerate_dags(std::size_t n, const StateVisitor& visit) {
  if (n == 0 || n > kMaxEnumeratedDagNodes) {
    throw EnumerationLimitError("enumerate_dags: n = " + std::to_string(n) +
                                " outside the supported range [1, " +
                                std::to_string(kMaxEnumeratedDagNodes) + "]");
  }
  // Off-diagonal slots in row-major order; mask bit s toggles slot s.
  std::vector<std::pair<std::size_t, std::size_t>> slots;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) slots.emplace_back(i, j);
    }
  }
  const std::uint64_t graphs = 1ull << slots.size();
  std::vector<std::uint64_t> children(n);
  for (std::uint64_t mask = 0; mask < graphs; ++mask) {
    std::fill(children.begin(), children.end(), 0);
    for (std::size_t s = 0; s < slots.size(); ++s) {
      if ((mask >> s) & 1u) children[slots[s].first] |= 1ull << slots[s].second;
    }
    if (is_acyclic(children)) visit(adjacency_key(children));
  }
}

const std::vector<StateKey>& all_dags(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::vector<StateKey>> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<StateKey> dags;
    enumerate_dags(n, [&](const StateKey& k) { dags.push_back(k); });
    it = cache.emplace(n, std::move(dags)).first;
  }
  return it->second;
}

ExactTarget build_exact_target(const TargetModel& model) {
  const SupportSpec spec = model.support();
  std::vector<StateKey> keys;
  std::vector<double> scores;
  auto record = [&](const StateKey& k) {
    const double s = model.log_score(k);
    if (!std::isfinite(s)) {
      throw Error("build_exact_target: non-finite log-score for state " + k.to_string());
    }
    keys.push_back(k);
    scores.push_back(s);
  };
  if (spec.family == SupportFamily::kHypercube) {
    if (spec.dimension > kMaxHypercubeBits) {
      throw EnumerationLimitError("build_exact_target: hypercube dimension exceeds " +
                                  std::to_string(kMaxHypercubeBits));
    }
    keys.reserve(std::size_t{1} << spec.dimension);
    scores.reserve(keys.capacity());
    enumerate_hypercube(spec.dimension, record);
  } else {
    for (const auto& k : all_dags(spec.dimension)) record(k);
  }
  if (keys.size() != spec.cardinality()) {
    throw Error("build_exact_target: enumerated " + std::to_string(keys.size()) +
                " states, support declares " + std::to_string(spec.cardinality()));
  }
  return ExactTarget(std::move(keys), std::move(scores));
}

}  // namespace opad
