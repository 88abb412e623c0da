#pragma once

// Particle sets, weighting schemes and exact KL divergence for particle-based
// approximations of discrete distributions.
//
// All probabilities are carried in the natural-log domain. A particle set
// stores unnormalized log-scores (log pi); a weighted approximation adds one
// normalized log-weight per particle.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace opad {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a particle is looked up in a target table that does not hold it.
class SupportMismatchError : public Error {
 public:
  using Error::Error;
};

/// Canonical fixed-length bit encoding of one discrete state.
///
/// Bit i lives in byte i / 8 at position i % 8. Padding bits of the last byte
/// are always zero, so two keys of the same length are equal iff their bytes
/// are identical.
class StateKey {
 public:
  StateKey() = default;
  explicit StateKey(std::size_t bits) : bits_(bits), bytes_((bits + 7) / 8, 0) {}

  static StateKey from_bits(std::span<const std::uint8_t> bits);

  std::size_t bit_count() const noexcept { return bits_; }
  const std::vector<std::uint8_t>& bytes() const noexcept { return bytes_; }

  bool get(std::size_t i) const {
    return (bytes_[i >> 3] >> (i & 7)) & 1u;
  }
  void set(std::size_t i, bool v) {
    const auto mask = static_cast<std::uint8_t>(1u << (i & 7));
    if (v) {
      bytes_[i >> 3] |= mask;
    } else {
      bytes_[i >> 3] &= static_cast<std::uint8_t>(~mask);
    }
  }
  void flip(std::size_t i) { bytes_[i >> 3] ^= static_cast<std::uint8_t>(1u << (i & 7)); }

  std::size_t popcount() const;

  /// "0110..." with bit 0 first.
  std::string to_string() const;

  friend bool operator==(const StateKey&, const StateKey&) = default;

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint8_t> bytes_;
};

struct StateKeyHash {
  std::size_t operator()(const StateKey& k) const noexcept {
    const auto& b = k.bytes();
    std::string_view view(reinterpret_cast<const char*>(b.data()), b.size());
    return std::hash<std::string_view>{}(view) ^ (k.bit_count() * 0x9E3779B97F4A7C15ull);
  }
};

/// log(sum(exp(values))) in max-shifted form. Returns -inf for an empty input.
double log_sum_exp(std::span<const double> values);

/// log(exp(a) + exp(b)).
double log_add(double a, double b);

/// Distinct states with cached log-scores, iterated in insertion order.
class ParticleSet {
 public:
  ParticleSet() = default;

  /// Inserts a new state. Returns false (and leaves the set untouched) when
  /// the key is already present. Throws Error on a non-finite score.
  bool insert(const StateKey& key, double log_score);

  std::optional<std::size_t> find(const StateKey& key) const;
  bool contains(const StateKey& key) const { return find(key).has_value(); }

  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }

  const StateKey& key(std::size_t i) const { return keys_[i]; }
  double log_score(std::size_t i) const { return log_scores_[i]; }
  const std::vector<StateKey>& keys() const noexcept { return keys_; }
  const std::vector<double>& log_scores() const noexcept { return log_scores_; }

  /// Sub-set holding the first `count` particles, in order.
  ParticleSet prefix(std::size_t count) const;

 private:
  std::vector<StateKey> keys_;
  std::vector<double> log_scores_;
  std::unordered_map<StateKey, std::size_t, StateKeyHash> index_;
};

/// A particle set with one normalized log-weight per particle.
class WeightedApprox {
 public:
  /// Validates that the weights are finite and sum to one within 1e-12.
  WeightedApprox(ParticleSet particles, std::vector<double> log_weights);

  const ParticleSet& particles() const noexcept { return particles_; }
  const std::vector<double>& log_weights() const noexcept { return log_weights_; }
  std::size_t size() const noexcept { return particles_.size(); }
  double weight(std::size_t i) const;

  /// Weight of `key`, or 0 when it is not a particle.
  double weight_of(const StateKey& key) const;

 private:
  ParticleSet particles_;
  std::vector<double> log_weights_;
};

/// The fully enumerated target: log pi over the whole support plus log Z.
class ExactTarget {
 public:
  ExactTarget(std::vector<StateKey> keys, std::vector<double> log_scores);

  std::size_t size() const noexcept { return keys_.size(); }
  double log_z() const noexcept { return log_z_; }
  const std::vector<StateKey>& keys() const noexcept { return keys_; }
  const std::vector<double>& log_scores() const noexcept { return log_scores_; }

  /// Unnormalized log pi(x). Throws SupportMismatchError for unknown states.
  double log_score(const StateKey& key) const;
  /// Normalized log pi*(x) = log pi(x) - log Z.
  double log_prob(const StateKey& key) const { return log_score(key) - log_z_; }

 private:
  std::vector<StateKey> keys_;
  std::vector<double> log_scores_;
  std::unordered_map<StateKey, std::size_t, StateKeyHash> index_;
  double log_z_ = 0.0;
};

/// Weights proportional to each particle's score on its own support.
WeightedApprox opad_weights(const ParticleSet& particles);

/// Empirical weights count(x) / N of a state sequence (P^MC of a chain).
/// Particle order is order of first occurrence; `log_score_of` supplies the
/// cached score stored alongside each distinct state.
WeightedApprox frequency_weights(std::span<const StateKey> sequence,
                                 const std::function<double(const StateKey&)>& log_score_of);

/// KL(P || pi*) = sum_x P(x) (log P(x) - log pi*(x)).
double kl_divergence(const WeightedApprox& approx, const ExactTarget& exact);

/// -log pi*(X^P): the smallest KL any weighting on these particles can reach.
double kl_lower_bound(const ParticleSet& particles, const ExactTarget& exact);

struct JensenSides {
  double lhs = 0.0;  // sum_i f(g_i) p_i
  double rhs = 0.0;  // f(sum_i g_i p_i)
};

/// Both sides of Jensen's inequality for a discrete distribution `probs`.
/// Throws std::invalid_argument on length mismatch, empty input, non-positive
/// probabilities or probabilities that do not sum to one within 1e-9.
JensenSides jensen_gap(std::span<const double> g_values, std::span<const double> probs,
                       const std::function<double(double)>& f);

}  // namespace opad
