#pragma once

// Unnormalized log target scores (log pi) for the three model families:
// a 1D periodic Ising loop, the posterior of a selection indicator vector
// under a g-prior, and the posterior over DAGs with per-node g-prior scores.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "opad/core.hpp"
#include "opad/dag.hpp"

namespace opad {

class SingularGramError : public Error {
 public:
  using Error::Error;
};

enum class SupportFamily { kHypercube, kDagSpace };

/// The state space of a target: {0,1}^dimension or all DAGs on `dimension` nodes.
struct SupportSpec {
  SupportFamily family = SupportFamily::kHypercube;
  std::size_t dimension = 0;

  std::size_t state_bits() const {
    return family == SupportFamily::kHypercube ? dimension : dimension * dimension;
  }
  /// 2^m, or the number of labeled DAGs. Throws when it overflows 64 bits.
  std::uint64_t cardinality() const;
};

/// Number of labeled DAGs on n nodes via
/// a(n) = sum_{k=1..n} (-1)^(k+1) C(n,k) 2^(k(n-k)) a(n-k), a(0) = 1.
std::uint64_t count_labeled_dags(std::size_t n);

/// Position of a hypercube state in lexicographic order (bit 0 most significant).
std::uint64_t hypercube_index(const StateKey& key);
StateKey hypercube_state(std::uint64_t index, std::size_t m);

/// A target known up to normalization. Implementations are immutable and
/// log_score may be called concurrently.
class TargetModel {
 public:
  virtual ~TargetModel() = default;
  virtual SupportSpec support() const = 0;
  virtual double log_score(const StateKey& state) const = 0;
};

// ---------------------------------------------------------------------------
// Ising

struct IsingParams {
  std::size_t m = 0;
  double beta = 0.0;
  double mu = 1.0;
  std::vector<double> coupling;  // J_j, bond between sites j and j+1 (mod m)
  std::vector<double> field;     // h_j

  /// Same coupling and field at every site.
  static IsingParams uniform(std::size_t m, double beta, double mu, double coupling, double field);
  void validate() const;
};

/// Spin +1 is stored as bit 1, spin -1 as bit 0.
StateKey encode_spins(std::span<const int> spins);
std::vector<int> decode_spins(const StateKey& key);

/// -beta * H(x), H(x) = -sum_j J_j x_j x_{j+1} - mu sum_j h_j x_j with x_{m+1} = x_1.
double ising_log_score(const IsingParams& params, std::span<const int> spins);

class IsingTarget final : public TargetModel {
 public:
  explicit IsingTarget(IsingParams params);
  SupportSpec support() const override { return {SupportFamily::kHypercube, params_.m}; }
  double log_score(const StateKey& state) const override;
  const IsingParams& params() const noexcept { return params_; }

 private:
  IsingParams params_;
};

// ---------------------------------------------------------------------------
// g-prior marginal likelihood

/// Log marginal likelihood of a linear regression under the g-prior with an
/// inverse-gamma(a, b) noise prior, up to an additive constant:
///
///   -(k/2) log(g+1) - (a + N/2) log((y'y - g/(g+1) y'P_S y + 2b) / 2)
///
/// where P_S projects onto the selected columns. Columns of `data` serve both
/// as responses and predictors, so the same scorer handles variable selection
/// (response = one designated column) and DAG node scores.
class GPriorScorer {
 public:
  GPriorScorer(Eigen::MatrixXd data, double g, double a, double b);

  /// Throws SingularGramError when the selected columns are collinear.
  double log_marginal(std::size_t response, std::span<const std::size_t> predictors) const;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(data_.rows()); }
  std::size_t columns() const noexcept { return static_cast<std::size_t>(data_.cols()); }
  double g() const noexcept { return g_; }

 private:
  double projected_quadratic(std::size_t response, std::span<const std::size_t> predictors) const;

  Eigen::MatrixXd data_;
  Eigen::MatrixXd gram_;
  double g_, a_, b_;
};

// ---------------------------------------------------------------------------
// Bayesian variable selection

struct BvsParams {
  Eigen::MatrixXd x;  // n x m, centered columns
  Eigen::VectorXd y;  // n, centered
  double g = 0.0;     // <= 0 selects the default g = n
  double a = 3.0;
  double b = 1.0;
  double rho = 0.5;

  void validate() const;
  double effective_g() const { return g > 0.0 ? g : static_cast<double>(x.rows()); }
};

/// log p(y | gamma, X) + log p(gamma) up to a constant. gamma_j = bit j.
double bvs_log_score(const BvsParams& params, const StateKey& gamma);

class BvsTarget final : public TargetModel {
 public:
  explicit BvsTarget(BvsParams params);
  SupportSpec support() const override { return {SupportFamily::kHypercube, m_}; }
  double log_score(const StateKey& gamma) const override;

  double log_prior(const StateKey& gamma) const;
  double log_likelihood(const StateKey& gamma) const;
  std::size_t predictors() const noexcept { return m_; }

 private:
  std::size_t m_;
  double rho_;
  GPriorScorer scorer_;
};

// ---------------------------------------------------------------------------
// Bayesian structure learning

struct BslParams {
  Eigen::MatrixXd data;  // N rows x n nodes, standardized columns
  double g = 0.0;        // <= 0 selects g = N
  double a = 3.0;
  double b = 1.0;

  void validate() const;
  double effective_g() const { return g > 0.0 ? g : static_cast<double>(data.rows()); }
};

/// Sum over nodes of the g-prior score of each node given its parents, with a
/// uniform prior over DAGs.
class BslTarget final : public TargetModel {
 public:
  explicit BslTarget(BslParams params);
  SupportSpec support() const override { return {SupportFamily::kDagSpace, n_}; }
  /// Throws std::invalid_argument for cyclic adjacency.
  double log_score(const StateKey& state) const override;
  double log_score(const DagState& dag) const;

  double node_log_score(std::size_t node, std::uint64_t parent_mask) const;
  std::size_t nodes() const noexcept { return n_; }

 private:
  double compute_node_score(std::size_t node, std::uint64_t parent_mask) const;

  std::size_t n_;
  GPriorScorer scorer_;
  // node * 2^n + parent_mask, filled at construction for small n
  std::vector<double> node_cache_;
};

inline double bsl_log_score(const BslTarget& target, const DagState& dag) {
  return target.log_score(dag);
}

// ---------------------------------------------------------------------------
// Tabulated toy target

/// Arbitrary scores over {0,1}^m, indexed by hypercube_index.
class TabulatedTarget final : public TargetModel {
 public:
  TabulatedTarget(std::size_t m, std::vector<double> log_scores);
  SupportSpec support() const override { return {SupportFamily::kHypercube, m_}; }
  double log_score(const StateKey& state) const override;

 private:
  std::size_t m_;
  std::vector<double> log_scores_;
};

}  // namespace opad
