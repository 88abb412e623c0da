#include "opad/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "opad/exact.hpp"

namespace opad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t hamming(const StateKey& a, const StateKey& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.bit_count(); ++i) d += a.get(i) != b.get(i);
  return d;
}

}  // namespace

// ---------------------------------------------------------------------------
// Bit flips

BitFlipKernel::BitFlipKernel(std::size_t m) : m_(m) {
  if (m == 0) throw std::invalid_argument("BitFlipKernel: m must be positive");
}

Proposal BitFlipKernel::propose(const StateKey& current, Rng& rng) const {
  if (current.bit_count() != m_) throw std::invalid_argument("BitFlipKernel: state length mismatch");
  Proposal p{current, 0.0, 0.0};
  p.state.flip(uniform_index(rng, m_));
  p.log_q_forward = p.log_q_backward = -std::log(static_cast<double>(m_));
  return p;
}

double BitFlipKernel::log_q(const StateKey& to, const StateKey& from) const {
  if (to.bit_count() != m_ || from.bit_count() != m_) return kNegInf;
  return hamming(to, from) == 1 ? -std::log(static_cast<double>(m_)) : kNegInf;
}

BitFlipKernel ising_flip_kernel(std::size_t m) {
  if (m < 2) throw std::invalid_argument("ising_flip_kernel: m must be at least 2");
  return BitFlipKernel(m);
}

BitFlipKernel gamma_flip_kernel(std::size_t m) {
  if (m < 2) throw std::invalid_argument("gamma_flip_kernel: m must be at least 2");
  return BitFlipKernel(m);
}

// ---------------------------------------------------------------------------
// Structure moves

std::vector<EdgeMove> dag_neighborhood(const DagState& dag) {
  const std::size_t n = dag.node_count();
  std::vector<std::uint64_t> children = dag.child_masks();
  std::vector<std::uint64_t> reach(n);
  for (std::size_t i = 0; i < n; ++i) reach[i] = reachable_from(children, i);

  std::vector<EdgeMove> moves;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dag.has_edge(i, j)) {
        moves.push_back({EdgeMoveKind::kDelete, i, j});
        // Reversal closes a cycle iff j is still reachable from i without i->j.
        children[i] &= ~(1ull << j);
        const bool blocked = (reachable_from(children, i) >> j) & 1u;
        children[i] |= 1ull << j;
        if (!blocked) moves.push_back({EdgeMoveKind::kReverse, i, j});
      } else if (!dag.has_edge(j, i)) {
        if (!((reach[j] >> i) & 1u)) moves.push_back({EdgeMoveKind::kAdd, i, j});
      }
    }
  }
  return moves;
}

DagState apply_move(const DagState& dag, const EdgeMove& move) {
  std::vector<std::uint64_t> children = dag.child_masks();
  const std::uint64_t bit = 1ull << move.to;
  switch (move.kind) {
    case EdgeMoveKind::kAdd:
      children[move.from] |= bit;
      break;
    case EdgeMoveKind::kDelete:
      children[move.from] &= ~bit;
      break;
    case EdgeMoveKind::kReverse:
      children[move.from] &= ~bit;
      children[move.to] |= 1ull << move.from;
      break;
  }
  return DagState(dag.node_count(), std::move(children));
}

StructureKernel::StructureKernel(std::size_t n) : n_(n) {
  if (n < 2 || n > kMaxDagNodes) throw std::invalid_argument("StructureKernel: n must be in [2, 64]");
}

Proposal StructureKernel::propose(const StateKey& current, Rng& rng) const {
  const DagState dag = DagState::from_key(current, n_);
  const auto moves = dag_neighborhood(dag);
  if (moves.empty()) throw std::logic_error("StructureKernel: empty neighborhood");
  const DagState next = apply_move(dag, moves[uniform_index(rng, moves.size())]);
  Proposal p;
  p.state = next.to_key();
  p.log_q_forward = -std::log(static_cast<double>(moves.size()));
  p.log_q_backward = -std::log(static_cast<double>(dag_neighborhood(next).size()));
  return p;
}

double StructureKernel::log_q(const StateKey& to, const StateKey& from) const {
  const DagState origin = DagState::from_key(from, n_);
  const auto moves = dag_neighborhood(origin);
  for (const auto& mv : moves) {
    if (apply_move(origin, mv).to_key() == to) return -std::log(static_cast<double>(moves.size()));
  }
  return kNegInf;
}

// ---------------------------------------------------------------------------
// Chains

std::vector<StateKey> ChainTrace::accepted_states() const {
  std::vector<StateKey> out;
  out.reserve(accepted_.size());
  for (auto idx : accepted_) out.push_back(proposals_.key(idx));
  return out;
}

std::size_t ChainTrace::proposals_seen(std::size_t t) const {
  if (t == 0 || t > accepted_.size()) throw std::out_of_range("ChainTrace: prefix length out of range");
  return seen_[t - 1];
}

ChainTrace ChainTrace::prefix(std::size_t t) const {
  const std::size_t seen = proposals_seen(t);
  ChainTrace out;
  out.proposals_ = proposals_.prefix(seen);
  out.accepted_.assign(accepted_.begin(), accepted_.begin() + static_cast<std::ptrdiff_t>(t));
  out.proposed_.assign(proposed_.begin(), proposed_.begin() + static_cast<std::ptrdiff_t>(t - 1));
  out.seen_.assign(seen_.begin(), seen_.begin() + static_cast<std::ptrdiff_t>(t));
  out.accepts_.assign(accepts_.begin(), accepts_.begin() + static_cast<std::ptrdiff_t>(t));
  out.accept_count_ = accepts_[t - 1];
  return out;
}

ChainTrace run_chain(const TargetModel& target, const ProposalKernel& kernel, const StateKey& init,
                     std::size_t iterations, std::uint64_t seed) {
  if (iterations == 0) throw std::invalid_argument("run_chain: need at least one iteration");
  const double init_score = target.log_score(init);
  if (!std::isfinite(init_score)) {
    throw Error("run_chain: initial state " + init.to_string() + " has non-finite log-score");
  }

  ChainTrace trace;
  trace.proposals_.insert(init, init_score);
  trace.accepted_.reserve(iterations);
  trace.proposed_.reserve(iterations - 1);
  trace.seen_.reserve(iterations);
  trace.accepted_.push_back(0);
  trace.seen_.push_back(1);
  trace.accepts_.reserve(iterations);
  trace.accepts_.push_back(0);

  Rng rng = make_rng(seed);
  std::uint32_t current = 0;
  for (std::size_t step = 1; step < iterations; ++step) {
    Proposal prop = kernel.propose(trace.proposals_.key(current), rng);
    std::optional<std::size_t> found = trace.proposals_.find(prop.state);
    double score;
    if (found) {
      score = trace.proposals_.log_score(*found);
    } else {
      score = target.log_score(prop.state);
      if (std::isnan(score) || score == std::numeric_limits<double>::infinity()) {
        throw Error("run_chain: invalid log-score for proposal " + prop.state.to_string());
      }
      if (std::isfinite(score)) {
        trace.proposals_.insert(prop.state, score);
        found = trace.proposals_.size() - 1;
      }
    }

    const double log_ratio = score + prop.log_q_backward -
                             (trace.proposals_.log_score(current) + prop.log_q_forward);
    const double u = uniform01(rng);
    if (found && u < std::exp(log_ratio)) {
      current = static_cast<std::uint32_t>(*found);
      ++trace.accept_count_;
    }
    trace.accepted_.push_back(current);
    trace.proposed_.push_back(found ? static_cast<std::uint32_t>(*found) : current);
    trace.seen_.push_back(static_cast<std::uint32_t>(trace.proposals_.size()));
    trace.accepts_.push_back(static_cast<std::uint32_t>(trace.accept_count_));
  }
  return trace;
}

WeightedApprox frequency_weights(const ChainTrace& trace) {
  if (trace.length() == 0) throw Error("frequency_weights: empty chain");
  const auto& props = trace.proposals();
  std::vector<std::size_t> counts(props.size(), 0);
  std::vector<std::size_t> order;
  for (std::size_t t = 0; t < trace.length(); ++t) {
    const std::size_t idx = trace.accepted_index(t);
    if (counts[idx]++ == 0) order.push_back(idx);
  }
  ParticleSet support;
  std::vector<double> log_weights;
  const double log_n = std::log(static_cast<double>(trace.length()));
  for (auto idx : order) {
    support.insert(props.key(idx), props.log_score(idx));
    log_weights.push_back(std::log(static_cast<double>(counts[idx])) - log_n);
  }
  return WeightedApprox(std::move(support), std::move(log_weights));
}

ChainApproximations extract_approximations(const ChainTrace& trace) {
  WeightedApprox mcmc = frequency_weights(trace);
  WeightedApprox opad = opad_weights(mcmc.particles());
  WeightedApprox opad_plus = opad_weights(trace.proposals());
  return {std::move(mcmc), std::move(opad), std::move(opad_plus)};
}

StateKey uniform_initial_state(const SupportSpec& support, Rng& rng) {
  if (support.family == SupportFamily::kHypercube) {
    StateKey key(support.dimension);
    for (std::size_t j = 0; j < support.dimension; ++j) key.set(j, (rng() >> 63) != 0);
    return key;
  }
  const std::size_t n = support.dimension;
  if (n <= kMaxEnumeratedDagNodes) {
    const auto& dags = all_dags(n);
    return dags[uniform_index(rng, dags.size())];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint64_t> children(n, 0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if ((rng() >> 63) != 0) children[order[a]] |= 1ull << order[b];
    }
  }
  return adjacency_key(children);
}

}  // namespace opad
