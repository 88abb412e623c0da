#include "opad/targets.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace opad {

namespace {

constexpr double kCenteringTolerance = 1e-8;
constexpr double kPdTolerance = 1e-10;
constexpr std::size_t kNodeCacheMaxNodes = 10;

void check_centered(const Eigen::MatrixXd& m, const char* what) {
  if (m.rows() == 0) return;
  const Eigen::RowVectorXd means = m.colwise().mean();
  for (Eigen::Index j = 0; j < means.size(); ++j) {
    if (!std::isfinite(means(j)) || std::abs(means(j)) > kCenteringTolerance) {
      std::ostringstream msg;
      msg << what << ": column " << j << " has mean " << means(j) << ", expected 0";
      throw std::invalid_argument(msg.str());
    }
  }
}

void check_hyper(double g, double a, double b) {
  if (!(g > 0.0)) throw std::invalid_argument("g-prior scale must be positive");
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("inverse-gamma a and b must be positive");
}

std::string describe_subset(std::span<const std::size_t> idx) {
  std::ostringstream out;
  out << '{';
  for (std::size_t i = 0; i < idx.size(); ++i) out << (i ? "," : "") << idx[i];
  out << '}';
  return out.str();
}

}  // namespace

std::uint64_t SupportSpec::cardinality() const {
  if (family == SupportFamily::kHypercube) {
    if (dimension >= 64) throw std::overflow_error("hypercube cardinality exceeds 2^63");
    return 1ull << dimension;
  }
  return count_labeled_dags(dimension);
}

std::uint64_t count_labeled_dags(std::size_t n) {
  // a(11) no longer fits in 64 bits; intermediates are exact in 128 bits up to n = 10.
  if (n > 10) throw std::overflow_error("count_labeled_dags: n > 10 not supported");
  std::vector<__int128> a(n + 1, 0);
  a[0] = 1;
  for (std::size_t i = 1; i <= n; ++i) {
    __int128 total = 0;
    __int128 binom = 1;
    for (std::size_t k = 1; k <= i; ++k) {
      binom = binom * static_cast<__int128>(i - k + 1) / static_cast<__int128>(k);
      const __int128 term = binom * (static_cast<__int128>(1) << (k * (i - k))) * a[i - k];
      total += (k % 2 == 1) ? term : -term;
    }
    a[i] = total;
  }
  return static_cast<std::uint64_t>(a[n]);
}

std::uint64_t hypercube_index(const StateKey& key) {
  const std::size_t m = key.bit_count();
  if (m > 63) throw std::invalid_argument("hypercube_index: more than 63 bits");
  std::uint64_t idx = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (key.get(j)) idx |= 1ull << (m - 1 - j);
  }
  return idx;
}

StateKey hypercube_state(std::uint64_t index, std::size_t m) {
  StateKey key(m);
  for (std::size_t j = 0; j < m; ++j) key.set(j, (index >> (m - 1 - j)) & 1u);
  return key;
}

// ---------------------------------------------------------------------------
// Ising

IsingParams IsingParams::uniform(std::size_t m, double beta, double mu, double coupling,
                                 double field) {
  IsingParams p;
  p.m = m;
  p.beta = beta;
  p.mu = mu;
  p.coupling.assign(m, coupling);
  p.field.assign(m, field);
  return p;
}

void IsingParams::validate() const {
  if (m < 2) throw std::invalid_argument("IsingParams: m must be at least 2");
  if (!(beta >= 0.0)) throw std::invalid_argument("IsingParams: beta must be non-negative");
  if (coupling.size() != m || field.size() != m) {
    throw std::invalid_argument("IsingParams: J and h must have length m");
  }
}

StateKey encode_spins(std::span<const int> spins) {
  StateKey key(spins.size());
  for (std::size_t j = 0; j < spins.size(); ++j) {
    if (spins[j] != 1 && spins[j] != -1) throw std::invalid_argument("encode_spins: spins must be +-1");
    key.set(j, spins[j] == 1);
  }
  return key;
}

std::vector<int> decode_spins(const StateKey& key) {
  std::vector<int> spins(key.bit_count());
  for (std::size_t j = 0; j < spins.size(); ++j) spins[j] = key.get(j) ? 1 : -1;
  return spins;
}

double ising_log_score(const IsingParams& params, std::span<const int> spins) {
  if (spins.size() != params.m) {
    throw std::invalid_argument("ising_log_score: state has " + std::to_string(spins.size()) +
                                " spins, model has " + std::to_string(params.m));
  }
  double bonds = 0.0;
  double field = 0.0;
  for (std::size_t j = 0; j < params.m; ++j) {
    const int next = spins[(j + 1) % params.m];
    bonds += params.coupling[j] * spins[j] * next;
    field += params.field[j] * spins[j];
  }
  const double hamiltonian = -bonds - params.mu * field;
  return -params.beta * hamiltonian;
}

IsingTarget::IsingTarget(IsingParams params) : params_(std::move(params)) { params_.validate(); }

double IsingTarget::log_score(const StateKey& state) const {
  if (state.bit_count() != params_.m) {
    throw std::invalid_argument("IsingTarget: state length mismatch");
  }
  const auto spins = decode_spins(state);
  return ising_log_score(params_, spins);
}

// ---------------------------------------------------------------------------
// GPriorScorer

GPriorScorer::GPriorScorer(Eigen::MatrixXd data, double g, double a, double b)
    : data_(std::move(data)), g_(g), a_(a), b_(b) {
  check_hyper(g, a, b);
  if (!data_.allFinite()) throw std::invalid_argument("GPriorScorer: data contains NaN or inf");
  gram_ = data_.transpose() * data_;
}

double GPriorScorer::projected_quadratic(std::size_t response,
                                         std::span<const std::size_t> predictors) const {
  const auto k = static_cast<Eigen::Index>(predictors.size());
  const auto r = static_cast<Eigen::Index>(response);
  Eigen::MatrixXd gss(k, k);
  Eigen::VectorXd gsr(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto pi = static_cast<Eigen::Index>(predictors[i]);
    gsr(i) = gram_(pi, r);
    for (Eigen::Index j = 0; j < k; ++j) gss(i, j) = gram_(pi, static_cast<Eigen::Index>(predictors[j]));
  }

  Eigen::LLT<Eigen::MatrixXd> llt(gss);
  if (llt.info() == Eigen::Success) {
    const auto diag = llt.matrixL().toDenseMatrix().diagonal();
    const double scale = gss.diagonal().maxCoeff();
    if (diag.minCoeff() * diag.minCoeff() > kPdTolerance * scale) {
      const Eigen::VectorXd half = llt.matrixL().solve(gsr);
      return half.squaredNorm();
    }
  }

  // Near-singular Gram: fall back to a rank-revealing QR of the columns.
  Eigen::MatrixXd xs(data_.rows(), k);
  for (Eigen::Index i = 0; i < k; ++i) xs.col(i) = data_.col(static_cast<Eigen::Index>(predictors[i]));
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xs);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    throw SingularGramError("singular Gram matrix for selected columns " + describe_subset(predictors));
  }
  const Eigen::VectorXd y = data_.col(r);
  const Eigen::VectorXd coef = qr.solve(y);
  return y.dot(xs * coef);
}

double GPriorScorer::log_marginal(std::size_t response,
                                  std::span<const std::size_t> predictors) const {
  if (response >= columns()) throw std::out_of_range("GPriorScorer: response column out of range");
  for (auto p : predictors) {
    if (p >= columns() || p == response) {
      throw std::out_of_range("GPriorScorer: invalid predictor column " + std::to_string(p));
    }
  }
  const double n = static_cast<double>(data_.rows());
  const auto r = static_cast<Eigen::Index>(response);
  double residual = gram_(r, r);
  if (!predictors.empty()) {
    residual -= g_ / (g_ + 1.0) * projected_quadratic(response, predictors);
  }
  const double k = static_cast<double>(predictors.size());
  return -0.5 * k * std::log(g_ + 1.0) - (a_ + 0.5 * n) * std::log((residual + 2.0 * b_) / 2.0);
}

// ---------------------------------------------------------------------------
// BVS

void BvsParams::validate() const {
  if (x.rows() == 0 || x.cols() == 0) throw std::invalid_argument("BvsParams: empty design matrix");
  if (y.size() != x.rows()) throw std::invalid_argument("BvsParams: y length must equal rows of X");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("BvsParams: rho must lie in (0, 1)");
  check_hyper(effective_g(), a, b);
  check_centered(x, "BvsParams X");
  check_centered(y, "BvsParams y");
}

namespace {

Eigen::MatrixXd design_with_response(const BvsParams& p) {
  Eigen::MatrixXd out(p.x.rows(), p.x.cols() + 1);
  out.leftCols(p.x.cols()) = p.x;
  out.col(p.x.cols()) = p.y;
  return out;
}

}  // namespace

BvsTarget::BvsTarget(BvsParams params)
    : m_((params.validate(), static_cast<std::size_t>(params.x.cols()))),
      rho_(params.rho),
      scorer_(design_with_response(params), params.effective_g(), params.a, params.b) {}

double BvsTarget::log_prior(const StateKey& gamma) const {
  const double k = static_cast<double>(gamma.popcount());
  return k * std::log(rho_) + (static_cast<double>(m_) - k) * std::log1p(-rho_);
}

double BvsTarget::log_likelihood(const StateKey& gamma) const {
  if (gamma.bit_count() != m_) {
    throw std::invalid_argument("BvsTarget: gamma has " + std::to_string(gamma.bit_count()) +
                                " entries, expected " + std::to_string(m_));
  }
  std::vector<std::size_t> selected;
  for (std::size_t j = 0; j < m_; ++j) {
    if (gamma.get(j)) selected.push_back(j);
  }
  return scorer_.log_marginal(m_, selected);
}

double BvsTarget::log_score(const StateKey& gamma) const {
  return log_likelihood(gamma) + log_prior(gamma);
}

double bvs_log_score(const BvsParams& params, const StateKey& gamma) {
  return BvsTarget(params).log_score(gamma);
}

// ---------------------------------------------------------------------------
// BSL

void BslParams::validate() const {
  if (data.cols() < 1 || data.rows() < 1) throw std::invalid_argument("BslParams: empty dataset");
  if (static_cast<std::size_t>(data.cols()) > kMaxDagNodes) {
    throw std::invalid_argument("BslParams: at most 64 nodes");
  }
  check_hyper(effective_g(), a, b);
  check_centered(data, "BslParams data");
}

BslTarget::BslTarget(BslParams params)
    : n_((params.validate(), static_cast<std::size_t>(params.data.cols()))),
      scorer_(std::move(params.data), params.effective_g(), params.a, params.b) {
  if (n_ <= kNodeCacheMaxNodes) {
    const std::size_t sets = std::size_t{1} << n_;
    node_cache_.assign(n_ * sets, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t node = 0; node < n_; ++node) {
      for (std::uint64_t mask = 0; mask < sets; ++mask) {
        if ((mask >> node) & 1u) continue;
        try {
          node_cache_[node * sets + mask] = compute_node_score(node, mask);
        } catch (const SingularGramError&) {
          // left as NaN; recomputed (and rethrown) on lookup
        }
      }
    }
  }
}

double BslTarget::compute_node_score(std::size_t node, std::uint64_t parent_mask) const {
  std::vector<std::size_t> parents;
  for (std::uint64_t m = parent_mask; m != 0; m &= m - 1) {
    parents.push_back(static_cast<std::size_t>(std::countr_zero(m)));
  }
  return scorer_.log_marginal(node, parents);
}

double BslTarget::node_log_score(std::size_t node, std::uint64_t parent_mask) const {
  if (node >= n_) throw std::out_of_range("BslTarget: node out of range");
  if ((parent_mask >> node) & 1u) throw std::invalid_argument("BslTarget: node is its own parent");
  if (!node_cache_.empty()) {
    const double cached = node_cache_[node * (std::size_t{1} << n_) + parent_mask];
    if (!std::isnan(cached)) return cached;
  }
  return compute_node_score(node, parent_mask);
}

double BslTarget::log_score(const DagState& dag) const {
  if (dag.node_count() != n_) throw std::invalid_argument("BslTarget: DAG has wrong node count");
  double total = 0.0;  // log p(G) = 0 under the uniform DAG prior
  for (std::size_t i = 0; i < n_; ++i) total += node_log_score(i, dag.parents(i));
  return total;
}

double BslTarget::log_score(const StateKey& state) const {
  return log_score(DagState::from_key(state, n_));
}

// ---------------------------------------------------------------------------
// Tabulated

TabulatedTarget::TabulatedTarget(std::size_t m, std::vector<double> log_scores)
    : m_(m), log_scores_(std::move(log_scores)) {
  if (m == 0 || m > 24) throw std::invalid_argument("TabulatedTarget: m must be in [1, 24]");
  if (log_scores_.size() != (std::size_t{1} << m)) {
    throw std::invalid_argument("TabulatedTarget: need 2^m scores");
  }
}

double TabulatedTarget::log_score(const StateKey& state) const {
  if (state.bit_count() != m_) throw std::invalid_argument("TabulatedTarget: state length mismatch");
  return log_scores_[hypercube_index(state)];
}

}  // namespace opad
