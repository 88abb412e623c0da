#pragma once

// Multi-chain experiment runner: KL divergence from the exact target of the
// chain frequencies (mcmc), OPAD on the accepted states (opad) and OPAD on
// every proposal (opad+), at checkpoint iterations.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "opad/core.hpp"
#include "opad/samplers.hpp"

namespace opad {

/// Raised when the KL ordering mcmc >= opad >= opad+ or the monotonicity of
/// the opad+ series is violated by more than the slack.
class OrderingViolation : public Error {
 public:
  using Error::Error;
};

inline constexpr double kOrderingSlack = 1e-9;

enum class TargetFamily { kIsing, kBvs, kBsl };
enum class KernelChoice { kAuto, kFlip, kStructure };
enum class Method { kMcmc, kOpad, kOpadPlus };

std::string to_string(TargetFamily f);
std::string to_string(KernelChoice k);
std::string to_string(Method m);
TargetFamily parse_target_family(const std::string& s);
KernelChoice parse_kernel_choice(const std::string& s);
Method parse_method(const std::string& s);

/// Flat `key = value` settings; see README for the key list.
struct ExperimentConfig {
  TargetFamily target = TargetFamily::kIsing;
  KernelChoice kernel = KernelChoice::kAuto;
  std::size_t iterations = 10000;
  std::size_t chains = 20;
  std::size_t stride = 100;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "out";
  std::size_t workers = 1;

  std::size_t ising_m = 15;
  double ising_beta = 0.5;
  double ising_mu = 1.0;
  double ising_j = 1.0;
  double ising_h = 0.1;

  std::size_t bvs_m = 10;
  std::size_t bvs_n = 200;
  double bvs_rho = 0.5;
  double bvs_g = 0.0;  // 0 selects g = n
  double bvs_a = 3.0;
  double bvs_b = 1.0;
  std::string bvs_data;  // CSV path; empty generates synthetic data
  std::string bvs_response = "y";
  bool bvs_standardize = true;

  std::size_t bsl_nodes = 5;
  std::size_t bsl_degree = 1;
  std::size_t bsl_rows = 200;
  double bsl_g = 0.0;
  double bsl_a = 3.0;
  double bsl_b = 1.0;

  /// Sets one key from its text value. Throws std::invalid_argument on an
  /// unknown key or malformed value.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  KernelChoice resolved_kernel() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Every key in a fixed order, with the kernel resolved.
std::string to_config_text(const ExperimentConfig& config);

struct KlRow {
  std::size_t chain = 0;
  std::size_t iteration = 0;
  Method method = Method::kMcmc;
  double kl = 0.0;
};
using KlTrace = std::vector<KlRow>;

/// 1, every multiple of stride, and N.
std::vector<std::size_t> checkpoint_iterations(std::size_t iterations, std::size_t stride);

/// KL of the three approximations built from the first t states of `trace`
/// for every checkpoint t. OPAD and OPAD+ use running log-masses; the ordering
/// and opad+ monotonicity are asserted (OrderingViolation).
KlTrace chain_kl_series(const ChainTrace& trace, const ExactTarget& exact,
                        std::span<const std::size_t> checkpoints, std::size_t chain_id);

/// The pieces of one configured experiment chain, before sampling.
struct ChainSetup {
  std::shared_ptr<const TargetModel> target;
  std::shared_ptr<const ExactTarget> exact;
  std::shared_ptr<const ProposalKernel> kernel;
  StateKey init;
  std::uint64_t chain_seed = 0;
};

/// Builds target, exact target, kernel and initial state for one chain.
/// Ising and BVS targets (and their exact tables) are built once and shared
/// by all chains; BSL draws a fresh dataset and target per chain.
class ExperimentPlan {
 public:
  explicit ExperimentPlan(ExperimentConfig config);
  const ExperimentConfig& config() const noexcept { return config_; }
  ChainSetup chain(std::size_t chain_id) const;

 private:
  ExperimentConfig config_;
  std::shared_ptr<const TargetModel> shared_target_;
  std::shared_ptr<const ExactTarget> shared_exact_;
};

/// Runs all chains, writes `kl_trace.csv` and `manifest` to config.out_dir
/// and returns the merged trace sorted by (chain, iteration, method). On
/// failure the rows of the chains that completed are written before the
/// error propagates.
KlTrace run_experiment(const ExperimentConfig& config);

void write_kl_trace(const KlTrace& trace, const std::filesystem::path& path);
KlTrace read_kl_trace(const std::filesystem::path& path);

struct SummaryRow {
  std::size_t iteration = 0;
  Method method = Method::kMcmc;
  double mean = 0.0;
  std::optional<double> lo;  // mean -+ 1.96 sd / sqrt(chains); absent for one chain
  std::optional<double> hi;
};

struct Summary {
  std::vector<SummaryRow> rows;
  std::vector<std::string> warnings;
};

/// Per (iteration, method) mean across chains with a 95% normal interval.
Summary summarize(const KlTrace& trace);

void write_summary(const Summary& summary, const std::filesystem::path& path);
Summary read_summary(const std::filesystem::path& path);

/// SVG line plot, log-scale y axis, one line and shaded band per method.
/// Output bytes depend only on the summary.
void emit_plot(const Summary& summary, const std::filesystem::path& path);
std::string render_plot_svg(const Summary& summary);

/// Shortest round-trip text for a double.
std::string format_number(double v);

}  // namespace opad
