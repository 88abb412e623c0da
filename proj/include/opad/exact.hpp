#pragma once

// Full-support enumeration for exact normalization at desk scale.

#include <cstddef>
#include <functional>
#include <vector>

#include "opad/core.hpp"
#include "opad/targets.hpp"

namespace opad {

class EnumerationLimitError : public Error {
 public:
  using Error::Error;
};

inline constexpr std::size_t kMaxHypercubeBits = 24;
inline constexpr std::size_t kMaxEnumeratedDagNodes = 5;

using StateVisitor = std::function<void(const StateKey&)>;

/// All 2^m states in lexicographic order (bit 0 most significant).
void enumerate_hypercube(std::size_t m, const StateVisitor& visit);

/// Every labeled DAG on n nodes exactly once, by filtering all loop-free
/// directed graphs for acyclicity.
void enumerate_dags(std::size_t n, const StateVisitor& visit);

/// Materialized DAG list for n nodes; computed once per n and cached.
const std::vector<StateKey>& all_dags(std::size_t n);

/// Enumerates the model's support and normalizes. Throws
/// EnumerationLimitError outside the guards and Error on non-finite scores.
ExactTarget build_exact_target(const TargetModel& model);

}  // namespace opad
