#pragma once

// Metropolis-Hastings over discrete states, recording everything needed for
// the chain's frequency approximation (P^MC), OPAD on the accepted states and
// OPAD+ on the initial state plus every proposal.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "opad/core.hpp"
#include "opad/dag.hpp"
#include "opad/rng.hpp"
#include "opad/targets.hpp"

namespace opad {

struct Proposal {
  StateKey state;
  double log_q_forward = 0.0;   // log q(proposed | current)
  double log_q_backward = 0.0;  // log q(current | proposed)
};

class ProposalKernel {
 public:
  virtual ~ProposalKernel() = default;
  virtual Proposal propose(const StateKey& current, Rng& rng) const = 0;
  /// log q(to | from); -inf when `to` is not one move away from `from`.
  virtual double log_q(const StateKey& to, const StateKey& from) const = 0;
};

/// Flips one uniformly chosen bit. Symmetric, log q = -log m both ways.
class BitFlipKernel final : public ProposalKernel {
 public:
  explicit BitFlipKernel(std::size_t m);
  Proposal propose(const StateKey& current, Rng& rng) const override;
  double log_q(const StateKey& to, const StateKey& from) const override;
  std::size_t bits() const noexcept { return m_; }

 private:
  std::size_t m_;
};

/// Single-site spin flip on {-1,+1}^m (m >= 2).
BitFlipKernel ising_flip_kernel(std::size_t m);
/// Single-element flip of a selection indicator on {0,1}^m (m >= 2).
BitFlipKernel gamma_flip_kernel(std::size_t m);

enum class EdgeMoveKind { kAdd, kDelete, kReverse };

struct EdgeMove {
  EdgeMoveKind kind;
  std::size_t from;
  std::size_t to;
  friend bool operator==(const EdgeMove&, const EdgeMove&) = default;
};

/// Every acyclicity-preserving single-edge addition, deletion and reversal.
std::vector<EdgeMove> dag_neighborhood(const DagState& dag);
DagState apply_move(const DagState& dag, const EdgeMove& move);

/// Structure MCMC move: uniform over dag_neighborhood(current), with
/// log q = -log |neighborhood| evaluated at each end.
class StructureKernel final : public ProposalKernel {
 public:
  explicit StructureKernel(std::size_t n);
  Proposal propose(const StateKey& current, Rng& rng) const override;
  double log_q(const StateKey& to, const StateKey& from) const override;
  std::size_t nodes() const noexcept { return n_; }

 private:
  std::size_t n_;
};

inline StructureKernel structure_kernel(std::size_t n) { return StructureKernel(n); }

/// One Metropolis-Hastings chain of N states (N - 1 steps).
///
/// `proposals()` holds the initial state followed by each distinct proposal in
/// order of first appearance, with its log-score; it doubles as the score cache
/// so each state is scored once. Accepted and proposed states are stored as
/// indices into it.
class ChainTrace {
 public:
  std::size_t length() const noexcept { return accepted_.size(); }
  const ParticleSet& proposals() const noexcept { return proposals_; }
  std::size_t accept_count() const noexcept { return accept_count_; }

  /// Index into proposals() of the state at chain position t (0-based).
  std::size_t accepted_index(std::size_t t) const { return accepted_[t]; }
  const StateKey& accepted(std::size_t t) const { return proposals_.key(accepted_[t]); }
  std::vector<StateKey> accepted_states() const;

  /// Index into proposals() of the state proposed at step s, s in [1, N).
  std::size_t proposal_index(std::size_t s) const { return proposed_[s - 1]; }

  /// Number of distinct proposals (including the initial state) seen by the
  /// first t chain positions.
  std::size_t proposals_seen(std::size_t t) const;

  /// The trace the chain would have produced had it stopped after t states.
  ChainTrace prefix(std::size_t t) const;

 private:
  friend ChainTrace run_chain(const TargetModel&, const ProposalKernel&, const StateKey&,
                              std::size_t, std::uint64_t);

  ParticleSet proposals_;
  std::vector<std::uint32_t> accepted_;
  std::vector<std::uint32_t> proposed_;
  // proposals_.size() after each chain position
  std::vector<std::uint32_t> seen_;
  std::vector<std::uint32_t> accepts_;  // cumulative accept count per position
  std::size_t accept_count_ = 0;
};

/// Throws Error when the initial state's score is not finite. Proposals with
/// score -inf (outside the support) are rejected and not recorded.
ChainTrace run_chain(const TargetModel& target, const ProposalKernel& kernel, const StateKey& init,
                     std::size_t iterations, std::uint64_t seed);

WeightedApprox frequency_weights(const ChainTrace& trace);

struct ChainApproximations {
  WeightedApprox mcmc;
  WeightedApprox opad;
  WeightedApprox opad_plus;
};

ChainApproximations extract_approximations(const ChainTrace& trace);

/// Uniform draw from the support. DAG spaces with n <= 5 are sampled exactly
/// from the enumerated list; larger ones via a random topological order with
/// each forward edge present with probability 1/2 (not exactly uniform).
StateKey uniform_initial_state(const SupportSpec& support, Rng& rng);

}  // namespace opad
