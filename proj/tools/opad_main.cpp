// opad: run particle-reweighting experiments and inspect their outputs.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "opad/datagen.hpp"
#include "opad/exact.hpp"
#include "opad/experiment.hpp"
#include "opad/rng.hpp"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Experiment flags shared by run, exact-info and gen-data. Each flag maps to
/// one config key and overrides the value from --config.
struct ExperimentOptions {
  std::string config_path;
  std::vector<std::string> sets;
  std::deque<std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> keyed;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key = value experiment file")->check(CLI::ExistingFile);
    cmd->add_option("--set", sets, "override any config key: key=value (repeatable)");
    add(cmd, "--target", "target", "ising | bvs | bsl");
    add(cmd, "--kernel", "kernel", "flip | structure");
    add(cmd, "--seed", "seed", "master seed");
    add(cmd, "--chains", "chains", "number of chains");
    add(cmd, "--iterations", "iterations", "chain length N");
    add(cmd, "--stride", "stride", "KL checkpoint stride");
    add(cmd, "--out-dir", "out_dir", "output directory");
    add(cmd, "--workers", "workers", "worker threads");
    add(cmd, "--ising-m", "ising.m", "Ising loop size");
    add(cmd, "--beta", "ising.beta", "inverse temperature");
    add(cmd, "--mu", "ising.mu", "magnetic moment");
    add(cmd, "--coupling", "ising.J", "interaction strength J (all sites)");
    add(cmd, "--field", "ising.h", "field strength h (all sites)");
    add(cmd, "--bvs-m", "bvs.m", "synthetic BVS predictors");
    add(cmd, "--bvs-n", "bvs.n", "synthetic BVS rows");
    add(cmd, "--rho", "bvs.rho", "inclusion probability");
    add(cmd, "--bvs-g", "bvs.g", "g-prior scale (0 = rows)");
    add(cmd, "--bvs-a", "bvs.a", "inverse-gamma shape");
    add(cmd, "--bvs-b", "bvs.b", "inverse-gamma scale");
    add(cmd, "--data", "bvs.data", "BVS CSV file instead of synthetic data");
    add(cmd, "--response", "bvs.response", "response column of --data");
    add(cmd, "--standardize", "bvs.standardize", "standardize --data predictors (true/false)");
    add(cmd, "--bsl-nodes", "bsl.nodes", "DAG nodes");
    add(cmd, "--degree", "bsl.degree", "expected vertex degree of the ground-truth DAG");
    add(cmd, "--rows", "bsl.rows", "rows simulated per chain");
    add(cmd, "--bsl-g", "bsl.g", "g-prior scale (0 = rows)");
    add(cmd, "--bsl-a", "bsl.a", "inverse-gamma shape");
    add(cmd, "--bsl-b", "bsl.b", "inverse-gamma scale");
  }

  opad::ExperimentConfig resolve() const {
    try {
      opad::ExperimentConfig config =
          config_path.empty() ? opad::ExperimentConfig{} : opad::load_config(config_path);
      for (std::size_t i = 0; i < keyed.size(); ++i) {
        if (keyed[i].second->count() > 0) config.set(keyed[i].first, values[i]);
      }
      for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + s + "'");
        config.set(s.substr(0, eq), s.substr(eq + 1));
      }
      config.validate();
      return config;
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }

 private:
  void add(CLI::App* cmd, const char* flag, const char* key, const char* help) {
    values.emplace_back();
    keyed.emplace_back(key, cmd->add_option(flag, values.back(), help));
  }
};

opad::Summary write_outputs(const opad::ExperimentConfig& config, const opad::KlTrace& trace) {
  auto summary = opad::summarize(trace);
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
  opad::write_summary(summary, config.out_dir / "summary.csv");
  opad::emit_plot(summary, config.out_dir / "plot.svg");
  return summary;
}

int cmd_run(const ExperimentOptions& opts) {
  const auto config = opts.resolve();
  const auto trace = opad::run_experiment(config);
  const auto summary = write_outputs(config, trace);

  // Final-iteration means, one line per method.
  const std::size_t last = summary.rows.back().iteration;
  for (const auto& r : summary.rows) {
    if (r.iteration == last) {
      std::cout << opad::to_string(r.method) << " mean KL at iteration " << last << ": "
                << opad::format_number(r.mean) << '\n';
    }
  }
  std::cout << "wrote " << (config.out_dir / "kl_trace.csv").string() << '\n';
  return 0;
}

int cmd_summarize(const std::filesystem::path& trace_path, const std::filesystem::path& out) {
  const auto summary = opad::summarize(opad::read_kl_trace(trace_path));
  for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
  opad::write_summary(summary, out);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_plot(const std::filesystem::path& summary_path, const std::filesystem::path& out) {
  opad::emit_plot(opad::read_summary(summary_path), out);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

int cmd_exact_info(const ExperimentOptions& opts, std::size_t chain) {
  const auto config = opts.resolve();
  const opad::ExperimentPlan plan(config);
  const auto setup = plan.chain(chain);
  const auto spec = setup.target->support();
  std::cout << "target: " << opad::to_string(config.target) << '\n'
            << "support: "
            << (spec.family == opad::SupportFamily::kHypercube ? "hypercube" : "dag-space") << '('
            << spec.dimension << ")\n"
            << "support size: " << setup.exact->size() << '\n'
            << "log Z: " << opad::format_number(setup.exact->log_z()) << '\n';
  return 0;
}

int cmd_gen_data(const ExperimentOptions& opts, std::size_t chain) {
  const auto config = opts.resolve();
  std::filesystem::create_directories(config.out_dir);
  const auto data_path = config.out_dir / "data.csv";
  const auto truth_path = config.out_dir / "truth.csv";
  std::ofstream truth(truth_path, std::ios::binary);
  if (!truth) throw opad::Error("cannot write " + truth_path.string());

  if (config.target == opad::TargetFamily::kBvs) {
    auto [data, gt] = opad::generate_bvs(config.bvs_m, config.bvs_n, config.bvs_rho,
                                         opad::stream_seed(config.seed, 0, opad::StreamPurpose::kData));
    opad::save_csv(data, data_path);
    truth << "predictor,gamma,beta\n";
    for (std::size_t j = 0; j < gt.gamma.size(); ++j) {
      truth << data.column_names[j] << ',' << int{gt.gamma[j]} << ','
            << opad::format_number(gt.beta(static_cast<Eigen::Index>(j))) << '\n';
    }
  } else if (config.target == opad::TargetFamily::kBsl) {
    auto [data, gt] = opad::generate_bsl(config.bsl_nodes, config.bsl_degree, config.bsl_rows,
                                         opad::stream_seed(config.seed, chain, opad::StreamPurpose::kData));
    opad::save_csv(data, data_path);
    truth << "from,to,weight\n";
    for (std::size_t i = 0; i < config.bsl_nodes; ++i) {
      for (std::size_t j = 0; j < config.bsl_nodes; ++j) {
        if (gt.dag.has_edge(i, j)) {
          truth << data.column_names[i] << ',' << data.column_names[j] << ','
                << opad::format_number(gt.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))
                << '\n';
        }
      }
    }
  } else {
    throw UsageError("gen-data needs --target bvs or --target bsl");
  }
  std::cout << "wrote " << data_path.string() << " and " << truth_path.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal reweighting of MCMC particles with exact KL evaluation"};
  app.require_subcommand(1);

  ExperimentOptions run_opts, info_opts, gen_opts;
  auto* run = app.add_subcommand("run", "run chains and write kl_trace.csv, summary.csv, plot.svg");
  run_opts.attach(run);

  std::filesystem::path trace_in = "out/kl_trace.csv", summary_out = "out/summary.csv";
  auto* summarize = app.add_subcommand("summarize", "mean and 95% interval per iteration and method");
  summarize->add_option("--trace", trace_in, "kl_trace.csv to read");
  summarize->add_option("--out", summary_out, "summary.csv to write");

  std::filesystem::path summary_in = "out/summary.csv", plot_out = "out/plot.svg";
  auto* plot = app.add_subcommand("plot", "render summary.csv as an SVG");
  plot->add_option("--summary", summary_in, "summary.csv to read");
  plot->add_option("--out", plot_out, "SVG to write");

  std::size_t info_chain = 0, gen_chain = 0;
  auto* info = app.add_subcommand("exact-info", "print support size and log Z of the target");
  info_opts.attach(info);
  info->add_option("--chain", info_chain, "chain whose target to inspect (bsl draws one per chain)");

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset and its ground truth as CSV");
  gen_opts.attach(gen);
  gen->add_option("--chain", gen_chain, "chain whose dataset to write (bsl)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*summarize) return cmd_summarize(trace_in, summary_out);
    if (*plot) return cmd_plot(summary_in, plot_out);
    if (*info) return cmd_exact_info(info_opts, info_chain);
    if (*gen) return cmd_gen_data(gen_opts, gen_chain);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
