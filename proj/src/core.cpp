#include "opad/core.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace opad {

namespace {

constexpr double kWeightSumTolerance = 1e-12;
constexpr double kProbSumTolerance = 1e-9;

}  // namespace

StateKey StateKey::from_bits(std::span<const std::uint8_t> bits) {
  StateKey key(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] > 1) throw std::invalid_argument("StateKey::from_bits: bit values must be 0 or 1");
    key.set(i, bits[i] != 0);
  }
  return key;
}

std::size_t StateKey::popcount() const {
  std::size_t total = 0;
  for (auto b : bytes_) total += static_cast<std::size_t>(std::popcount(b));
  return total;
}

std::string StateKey::to_string() const {
  std::string out(bits_, '0');
  for (std::size_t i = 0; i < bits_; ++i) {
    if (get(i)) out[i] = '1';
  }
  return out;
}

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double top = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(top)) return top;
  double acc = 0.0;
  for (double v : values) acc += std::exp(v - top);
  return top + std::log(acc);
}

double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

// ---------------------------------------------------------------------------
// ParticleSet

bool ParticleSet::insert(const StateKey& key, double log_score) {
  if (!std::isfinite(log_score)) {
    std::ostringstream msg;
    msg << "ParticleSet: non-finite log-score " << log_score << " for state " << key.to_string();
    throw Error(msg.str());
  }
  auto [it, inserted] = index_.try_emplace(key, keys_.size());
  if (!inserted) return false;
  keys_.push_back(key);
  log_scores_.push_back(log_score);
  return true;
}

std::optional<std::size_t> ParticleSet::find(const StateKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ParticleSet ParticleSet::prefix(std::size_t count) const {
  ParticleSet out;
  count = std::min(count, keys_.size());
  for (std::size_t i = 0; i < count; ++i) out.insert(keys_[i], log_scores_[i]);
  return out;
}

// ---------------------------------------------------------------------------
// WeightedApprox

WeightedApprox::WeightedApprox(ParticleSet particles, std::vector<double> log_weights)
    : particles_(std::move(particles)), log_weights_(std::move(log_weights)) {
  if (particles_.empty()) throw Error("WeightedApprox: empty particle set");
  if (log_weights_.size() != particles_.size()) {
    throw std::invalid_argument("WeightedApprox: one log-weight per particle required");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < log_weights_.size(); ++i) {
    if (!std::isfinite(log_weights_[i])) {
      throw Error("WeightedApprox: non-positive weight for state " + particles_.key(i).to_string());
    }
    total += std::exp(log_weights_[i]);
  }
  if (std::abs(total - 1.0) > kWeightSumTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "WeightedApprox: weights sum to " << total << ", expected 1";
    throw Error(msg.str());
  }
}

double WeightedApprox::weight(std::size_t i) const { return std::exp(log_weights_[i]); }

double WeightedApprox::weight_of(const StateKey& key) const {
  auto idx = particles_.find(key);
  return idx ? weight(*idx) : 0.0;
}

// ---------------------------------------------------------------------------
// ExactTarget

ExactTarget::ExactTarget(std::vector<StateKey> keys, std::vector<double> log_scores)
    : keys_(std::move(keys)), log_scores_(std::move(log_scores)) {
  if (keys_.empty()) throw Error("ExactTarget: empty support");
  if (keys_.size() != log_scores_.size()) {
    throw std::invalid_argument("ExactTarget: one log-score per state required");
  }
  index_.reserve(keys_.size());
  for (std::size_t i = 0; i < keys_.size(); ++i) {
    if (!std::isfinite(log_scores_[i])) {
      throw Error("ExactTarget: non-finite log-score for state " + keys_[i].to_string());
    }
    if (!index_.try_emplace(keys_[i], i).second) {
      throw Error("ExactTarget: duplicate state " + keys_[i].to_string());
    }
  }
  log_z_ = log_sum_exp(log_scores_);
}

double ExactTarget::log_score(const StateKey& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) {
    throw SupportMismatchError("state " + key.to_string() + " is not in the target support");
  }
  return log_scores_[it->second];
}

// ---------------------------------------------------------------------------
// Weighting schemes and divergences

WeightedApprox opad_weights(const ParticleSet& particles) {
  if (particles.empty()) throw Error("opad_weights: empty particle set");
  const double lse = log_sum_exp(particles.log_scores());
  std::vector<double> log_weights;
  log_weights.reserve(particles.size());
  for (double s : particles.log_scores()) log_weights.push_back(s - lse);
  return WeightedApprox(particles, std::move(log_weights));
}

WeightedApprox frequency_weights(std::span<const StateKey> sequence,
                                 const std::function<double(const StateKey&)>& log_score_of) {
  if (sequence.empty()) throw Error("frequency_weights: empty chain");
  ParticleSet support;
  std::vector<std::size_t> counts;
  for (const auto& key : sequence) {
    if (auto idx = support.find(key)) {
      ++counts[*idx];
    } else {
      support.insert(key, log_score_of(key));
      counts.push_back(1);
    }
  }
  const double log_n = std::log(static_cast<double>(sequence.size()));
  std::vector<double> log_weights;
  log_weights.reserve(counts.size());
  for (auto c : counts) log_weights.push_back(std::log(static_cast<double>(c)) - log_n);
  return WeightedApprox(std::move(support), std::move(log_weights));
}

double kl_divergence(const WeightedApprox& approx, const ExactTarget& exact) {
  double kl = 0.0;
  const auto& particles = approx.particles();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const double lw = approx.log_weights()[i];
    kl += std::exp(lw) * (lw - exact.log_prob(particles.key(i)));
  }
  return kl;
}

double kl_lower_bound(const ParticleSet& particles, const ExactTarget& exact) {
  if (particles.empty()) throw Error("kl_lower_bound: empty particle set");
  std::vector<double> exact_scores;
  exact_scores.reserve(particles.size());
  for (const auto& key : particles.keys()) exact_scores.push_back(exact.log_score(key));
  return -(log_sum_exp(exact_scores) - exact.log_z());
}

JensenSides jensen_gap(std::span<const double> g_values, std::span<const double> probs,
                       const std::function<double(double)>& f) {
  if (g_values.empty()) throw std::invalid_argument("jensen_gap: empty input");
  if (g_values.size() != probs.size()) {
    throw std::invalid_argument("jensen_gap: g and probs differ in length");
  }
  double total = 0.0;
  for (double p : probs) {
    if (!(p > 0.0)) throw std::invalid_argument("jensen_gap: probabilities must be positive");
    total += p;
  }
  if (std::abs(total - 1.0) > kProbSumTolerance) {
    throw std::invalid_argument("jensen_gap: probabilities do not sum to 1");
  }
  JensenSides out;
  double mean = 0.0;
  for (std::size_t i = 0; i < g_values.size(); ++i) {
    out.lhs += f(g_values[i]) * probs[i];
    mean += g_values[i] * probs[i];
  }
  out.rhs = f(mean);
  return out;
}

}  // namespace opad
