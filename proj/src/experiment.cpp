#include "opad/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include "opad/datagen.hpp"
#include "opad/exact.hpp"

namespace opad {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kZ95 = 1.96;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end) {
    throw std::invalid_argument("config key '" + key + "': expected a non-negative integer, got '" +
                                value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (value.empty() || ec != std::errc() || ptr != end || !std::isfinite(out)) {
    throw std::invalid_argument("config key '" + key + "': expected a number, got '" + value + "'");
  }
  return out;
}

bool parse_flag(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw std::invalid_argument("config key '" + key + "': expected true/false, got '" + value + "'");
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string format_number(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

// ---------------------------------------------------------------------------
// Names

std::string to_string(TargetFamily f) {
  switch (f) {
    case TargetFamily::kIsing: return "ising";
    case TargetFamily::kBvs: return "bvs";
    case TargetFamily::kBsl: return "bsl";
  }
  return "?";
}

std::string to_string(KernelChoice k) {
  switch (k) {
    case KernelChoice::kAuto: return "auto";
    case KernelChoice::kFlip: return "flip";
    case KernelChoice::kStructure: return "structure";
  }
  return "?";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::kMcmc: return "mcmc";
    case Method::kOpad: return "opad";
    case Method::kOpadPlus: return "opad+";
  }
  return "?";
}

TargetFamily parse_target_family(const std::string& s) {
  if (s == "ising") return TargetFamily::kIsing;
  if (s == "bvs") return TargetFamily::kBvs;
  if (s == "bsl") return TargetFamily::kBsl;
  throw std::invalid_argument("unknown target '" + s + "' (expected ising, bvs or bsl)");
}

KernelChoice parse_kernel_choice(const std::string& s) {
  if (s == "auto") return KernelChoice::kAuto;
  if (s == "flip") return KernelChoice::kFlip;
  if (s == "structure") return KernelChoice::kStructure;
  throw std::invalid_argument("unknown kernel '" + s + "' (expected flip or structure)");
}

Method parse_method(const std::string& s) {
  if (s == "mcmc") return Method::kMcmc;
  if (s == "opad") return Method::kOpad;
  if (s == "opad+") return Method::kOpadPlus;
  throw std::invalid_argument("unknown method '" + s + "'");
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "target") target = parse_target_family(value);
  else if (key == "kernel") kernel = parse_kernel_choice(value);
  else if (key == "iterations") iterations = parse_size(key, value);
  else if (key == "chains") chains = parse_size(key, value);
  else if (key == "stride") stride = parse_size(key, value);
  else if (key == "seed") seed = parse_size(key, value);
  else if (key == "out_dir") out_dir = value;
  else if (key == "workers") workers = parse_size(key, value);
  else if (key == "ising.m") ising_m = parse_size(key, value);
  else if (key == "ising.beta") ising_beta = parse_real(key, value);
  else if (key == "ising.mu") ising_mu = parse_real(key, value);
  else if (key == "ising.J") ising_j = parse_real(key, value);
  else if (key == "ising.h") ising_h = parse_real(key, value);
  else if (key == "bvs.m") bvs_m = parse_size(key, value);
  else if (key == "bvs.n") bvs_n = parse_size(key, value);
  else if (key == "bvs.rho") bvs_rho = parse_real(key, value);
  else if (key == "bvs.g") bvs_g = parse_real(key, value);
  else if (key == "bvs.a") bvs_a = parse_real(key, value);
  else if (key == "bvs.b") bvs_b = parse_real(key, value);
  else if (key == "bvs.data") bvs_data = value;
  else if (key == "bvs.response") bvs_response = value;
  else if (key == "bvs.standardize") bvs_standardize = parse_flag(key, value);
  else if (key == "bsl.nodes") bsl_nodes = parse_size(key, value);
  else if (key == "bsl.degree") bsl_degree = parse_size(key, value);
  else if (key == "bsl.rows") bsl_rows = parse_size(key, value);
  else if (key == "bsl.g") bsl_g = parse_real(key, value);
  else if (key == "bsl.a") bsl_a = parse_real(key, value);
  else if (key == "bsl.b") bsl_b = parse_real(key, value);
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

KernelChoice ExperimentConfig::resolved_kernel() const {
  if (kernel != KernelChoice::kAuto) return kernel;
  return target == TargetFamily::kBsl ? KernelChoice::kStructure : KernelChoice::kFlip;
}

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(iterations >= 1, "iterations must be at least 1");
  require(chains >= 1, "chains must be at least 1");
  require(stride >= 1, "stride must be at least 1");
  require(workers >= 1, "workers must be at least 1");
  const KernelChoice k = resolved_kernel();
  switch (target) {
    case TargetFamily::kIsing:
      require(k == KernelChoice::kFlip, "the ising target needs the flip kernel");
      require(ising_m >= 2 && ising_m <= kMaxHypercubeBits, "ising.m must be in [2, 24]");
      require(ising_beta >= 0.0, "ising.beta must be non-negative");
      break;
    case TargetFamily::kBvs:
      require(k == KernelChoice::kFlip, "the bvs target needs the flip kernel");
      if (bvs_data.empty()) {
        require(bvs_m >= 2 && bvs_m <= kMaxHypercubeBits, "bvs.m must be in [2, 24]");
        require(bvs_n >= 2, "bvs.n must be at least 2");
      }
      require(bvs_rho > 0.0 && bvs_rho < 1.0, "bvs.rho must lie in (0, 1)");
      require(bvs_g >= 0.0 && bvs_a > 0.0 && bvs_b > 0.0, "bvs.g must be >= 0, bvs.a and bvs.b > 0");
      break;
    case TargetFamily::kBsl:
      require(k == KernelChoice::kStructure, "the bsl target needs the structure kernel");
      require(bsl_nodes >= 2 && bsl_nodes <= kMaxEnumeratedDagNodes, "bsl.nodes must be in [2, 5]");
      require(bsl_degree < bsl_nodes, "bsl.degree must be below bsl.nodes");
      require(bsl_rows >= 2, "bsl.rows must be at least 2");
      require(bsl_g >= 0.0 && bsl_a > 0.0 && bsl_b > 0.0, "bsl.g must be >= 0, bsl.a and bsl.b > 0");
      break;
  }
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      config.set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file " + path.string());
  return parse_config(in);
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  auto kv = [&](const char* key, const std::string& value) { out << key << " = " << value << '\n'; };
  kv("target", to_string(c.target));
  kv("kernel", to_string(c.resolved_kernel()));
  kv("iterations", std::to_string(c.iterations));
  kv("chains", std::to_string(c.chains));
  kv("stride", std::to_string(c.stride));
  kv("seed", std::to_string(c.seed));
  kv("out_dir", c.out_dir.string());
  kv("workers", std::to_string(c.workers));
  kv("ising.m", std::to_string(c.ising_m));
  kv("ising.beta", format_number(c.ising_beta));
  kv("ising.mu", format_number(c.ising_mu));
  kv("ising.J", format_number(c.ising_j));
  kv("ising.h", format_number(c.ising_h));
  kv("bvs.m", std::to_string(c.bvs_m));
  kv("bvs.n", std::to_string(c.bvs_n));
  kv("bvs.rho", format_number(c.bvs_rho));
  kv("bvs.g", format_number(c.bvs_g));
  kv("bvs.a", format_number(c.bvs_a));
  kv("bvs.b", format_number(c.bvs_b));
  kv("bvs.data", c.bvs_data);
  kv("bvs.response", c.bvs_response);
  kv("bvs.standardize", c.bvs_standardize ? "true" : "false");
  kv("bsl.nodes", std::to_string(c.bsl_nodes));
  kv("bsl.degree", std::to_string(c.bsl_degree));
  kv("bsl.rows", std::to_string(c.bsl_rows));
  kv("bsl.g", format_number(c.bsl_g));
  kv("bsl.a", format_number(c.bsl_a));
  kv("bsl.b", format_number(c.bsl_b));
  return out.str();
}

// ---------------------------------------------------------------------------
// KL series

std::vector<std::size_t> checkpoint_iterations(std::size_t iterations, std::size_t stride) {
  if (iterations == 0 || stride == 0) throw std::invalid_argument("checkpoints need N >= 1 and stride >= 1");
  std::vector<std::size_t> out{1};
  for (std::size_t t = stride; t < iterations; t += stride) {
    if (t > 1) out.push_back(t);
  }
  if (iterations > 1) out.push_back(iterations);
  return out;
}

KlTrace chain_kl_series(const ChainTrace& trace, const ExactTarget& exact,
                        std::span<const std::size_t> checkpoints, std::size_t chain_id) {
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) ||
      (!checkpoints.empty() && (checkpoints.front() == 0 || checkpoints.back() > trace.length()))) {
    throw std::invalid_argument("chain_kl_series: checkpoints must be sorted and within [1, N]");
  }
  const auto& props = trace.proposals();
  std::vector<double> log_prob(props.size());
  for (std::size_t i = 0; i < props.size(); ++i) log_prob[i] = exact.log_prob(props.key(i));

  std::vector<std::size_t> counts(props.size(), 0);
  std::vector<std::size_t> visited;
  double mass_accepted = kNegInf;
  double mass_proposed = kNegInf;
  std::size_t proposed_seen = 0;
  double previous_plus = std::numeric_limits<double>::infinity();

  KlTrace rows;
  rows.reserve(checkpoints.size() * 3);
  std::size_t next = 0;
  for (std::size_t t = 1; t <= trace.length() && next < checkpoints.size(); ++t) {
    const std::size_t idx = trace.accepted_index(t - 1);
    if (counts[idx]++ == 0) {
      visited.push_back(idx);
      mass_accepted = log_add(mass_accepted, log_prob[idx]);
    }
    for (const std::size_t seen = trace.proposals_seen(t); proposed_seen < seen; ++proposed_seen) {
      mass_proposed = log_add(mass_proposed, log_prob[proposed_seen]);
    }
    if (checkpoints[next] != t) continue;
    while (next < checkpoints.size() && checkpoints[next] == t) ++next;

    const double log_t = std::log(static_cast<double>(t));
    double kl_mcmc = 0.0;
    for (auto v : visited) {
      const double lw = std::log(static_cast<double>(counts[v])) - log_t;
      kl_mcmc += std::exp(lw) * (lw - log_prob[v]);
    }
    const double kl_opad = -mass_accepted;
    const double kl_plus = -mass_proposed;

    if (kl_mcmc < kl_opad - kOrderingSlack || kl_opad < kl_plus - kOrderingSlack ||
        kl_plus < -kOrderingSlack || kl_plus > previous_plus + kOrderingSlack) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "KL ordering violated in chain " << chain_id << " at iteration " << t
          << ": mcmc=" << kl_mcmc << " opad=" << kl_opad << " opad+=" << kl_plus
          << " previous opad+=" << previous_plus;
      throw OrderingViolation(msg.str());
    }
    previous_plus = kl_plus;
    rows.push_back({chain_id, t, Method::kMcmc, kl_mcmc});
    rows.push_back({chain_id, t, Method::kOpad, kl_opad});
    rows.push_back({chain_id, t, Method::kOpadPlus, kl_plus});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Plan

ExperimentPlan::ExperimentPlan(ExperimentConfig config) : config_(std::move(config)) {
  config_.validate();
  switch (config_.target) {
    case TargetFamily::kIsing: {
      auto params = IsingParams::uniform(config_.ising_m, config_.ising_beta, config_.ising_mu,
                                         config_.ising_j, config_.ising_h);
      shared_target_ = std::make_shared<IsingTarget>(std::move(params));
      break;
    }
    case TargetFamily::kBvs: {
      Dataset data;
      if (config_.bvs_data.empty()) {
        data = generate_bvs(config_.bvs_m, config_.bvs_n, config_.bvs_rho,
                            stream_seed(config_.seed, 0, StreamPurpose::kData))
                   .first;
      } else {
        data = load_csv(config_.bvs_data, config_.bvs_response, config_.bvs_standardize);
      }
      if (static_cast<std::size_t>(data.x.cols()) > kMaxHypercubeBits) {
        throw EnumerationLimitError("bvs dataset has more predictors than can be enumerated");
      }
      shared_target_ = std::make_shared<BvsTarget>(
          make_bvs_params(data, config_.bvs_g, config_.bvs_a, config_.bvs_b, config_.bvs_rho));
      break;
    }
    case TargetFamily::kBsl:
      break;  // per chain
  }
  if (shared_target_) {
    shared_exact_ = std::make_shared<ExactTarget>(build_exact_target(*shared_target_));
  }
}

ChainSetup ExperimentPlan::chain(std::size_t chain_id) const {
  ChainSetup setup;
  setup.chain_seed = stream_seed(config_.seed, chain_id, StreamPurpose::kChain);
  if (config_.target == TargetFamily::kBsl) {
    auto data = generate_bsl(config_.bsl_nodes, config_.bsl_degree, config_.bsl_rows,
                             stream_seed(config_.seed, chain_id, StreamPurpose::kData))
                    .first;
    auto target = std::make_shared<BslTarget>(
        make_bsl_params(data, config_.bsl_g, config_.bsl_a, config_.bsl_b));
    setup.exact = std::make_shared<ExactTarget>(build_exact_target(*target));
    setup.target = std::move(target);
    setup.kernel = std::make_shared<StructureKernel>(config_.bsl_nodes);
  } else {
    setup.target = shared_target_;
    setup.exact = shared_exact_;
    const std::size_t m = setup.target->support().dimension;
    setup.kernel = std::make_shared<BitFlipKernel>(config_.target == TargetFamily::kIsing
                                                       ? ising_flip_kernel(m)
                                                       : gamma_flip_kernel(m));
  }
  Rng init_rng = make_rng(stream_seed(config_.seed, chain_id, StreamPurpose::kInitialState));
  setup.init = uniform_initial_state(setup.target->support(), init_rng);
  return setup;
}

// ---------------------------------------------------------------------------
// Runner

KlTrace run_experiment(const ExperimentConfig& config) {
  const ExperimentPlan plan(config);
  std::filesystem::create_directories(config.out_dir);
  {
    std::ofstream manifest(config.out_dir / "manifest", std::ios::binary);
    if (!manifest) throw Error("cannot write manifest to " + config.out_dir.string());
    manifest << to_config_text(config);
  }

  const auto checkpoints = checkpoint_iterations(config.iterations, config.stride);
  std::vector<KlTrace> per_chain(config.chains);
  std::vector<std::exception_ptr> errors(config.chains);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t id = next++; id < config.chains; id = next++) {
      try {
        const ChainSetup setup = plan.chain(id);
        const ChainTrace trace =
            run_chain(*setup.target, *setup.kernel, setup.init, config.iterations, setup.chain_seed);
        per_chain[id] = chain_kl_series(trace, *setup.exact, checkpoints, id);
      } catch (...) {
        errors[id] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    const std::size_t n_workers = std::min(config.workers, config.chains);
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }

  KlTrace merged;
  for (std::size_t id = 0; id < config.chains; ++id) {
    if (!errors[id]) merged.insert(merged.end(), per_chain[id].begin(), per_chain[id].end());
  }
  write_kl_trace(merged, config.out_dir / "kl_trace.csv");
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return merged;
}

void write_kl_trace(const KlTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "chain,iteration,method,kl\n";
  for (const auto& r : trace) {
    out << r.chain << ',' << r.iteration << ',' << to_string(r.method) << ',' << format_number(r.kl)
        << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

namespace {

std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path,
                                                 const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != expected_header) {
    throw Error(path.string() + ": expected header '" + expected_header + "'");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (line.back() == ',') fields.emplace_back();
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

KlTrace read_kl_trace(const std::filesystem::path& path) {
  KlTrace trace;
  for (const auto& f : read_table(path, "chain,iteration,method,kl")) {
    if (f.size() != 4) throw Error(path.string() + ": malformed row");
    trace.push_back({parse_size("chain", f[0]), parse_size("iteration", f[1]), parse_method(f[2]),
                     parse_real("kl", f[3])});
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Summary

Summary summarize(const KlTrace& trace) {
  if (trace.empty()) throw Error("summarize: empty trace");
  std::map<std::pair<std::size_t, int>, std::vector<double>> groups;
  for (const auto& r : trace) groups[{r.iteration, static_cast<int>(r.method)}].push_back(r.kl);

  Summary summary;
  bool single = false;
  for (const auto& [key, values] : groups) {
    SummaryRow row;
    row.iteration = key.first;
    row.method = static_cast<Method>(key.second);
    double sum = 0.0;
    for (double v : values) sum += v;
    const double n = static_cast<double>(values.size());
    row.mean = sum / n;
    if (values.size() >= 2) {
      double ss = 0.0;
      for (double v : values) ss += (v - row.mean) * (v - row.mean);
      const double half = kZ95 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
      row.lo = row.mean - half;
      row.hi = row.mean + half;
    } else {
      single = true;
    }
    summary.rows.push_back(row);
  }
  if (single) summary.warnings.emplace_back("single chain: confidence interval omitted");
  return summary;
}

void write_summary(const Summary& summary, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "iteration,method,mean,lo,hi\n";
  for (const auto& r : summary.rows) {
    out << r.iteration << ',' << to_string(r.method) << ',' << format_number(r.mean) << ','
        << (r.lo ? format_number(*r.lo) : "") << ',' << (r.hi ? format_number(*r.hi) : "") << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

Summary read_summary(const std::filesystem::path& path) {
  Summary summary;
  for (const auto& f : read_table(path, "iteration,method,mean,lo,hi")) {
    if (f.size() != 5) throw Error(path.string() + ": malformed row");
    SummaryRow row;
    row.iteration = parse_size("iteration", f[0]);
    row.method = parse_method(f[1]);
    row.mean = parse_real("mean", f[2]);
    if (!f[3].empty()) row.lo = parse_real("lo", f[3]);
    if (!f[4].empty()) row.hi = parse_real("hi", f[4]);
    summary.rows.push_back(row);
  }
  if (summary.rows.empty()) throw Error(path.string() + ": no summary rows");
  return summary;
}

// ---------------------------------------------------------------------------
// Plot

std::string render_plot_svg(const Summary& summary) {
  if (summary.rows.empty()) throw Error("emit_plot: empty summary");
  constexpr double kWidth = 720, kHeight = 480;
  constexpr double kLeft = 80, kRight = 150, kTop = 30, kBottom = 60;
  constexpr double kFloor = 1e-16;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  std::size_t it_min = summary.rows.front().iteration, it_max = it_min;
  double v_min = std::numeric_limits<double>::infinity(), v_max = 0.0;
  for (const auto& r : summary.rows) {
    it_min = std::min(it_min, r.iteration);
    it_max = std::max(it_max, r.iteration);
    for (double v : {r.mean, r.lo.value_or(r.mean), r.hi.value_or(r.mean)}) {
      const double c = std::max(v, kFloor);
      v_min = std::min(v_min, c);
      v_max = std::max(v_max, c);
    }
  }
  double dec_lo = std::floor(std::log10(v_min));
  double dec_hi = std::ceil(std::log10(v_max));
  if (dec_hi <= dec_lo) dec_hi = dec_lo + 1;

  auto px = [&](std::size_t it) {
    if (it_max == it_min) return kLeft + plot_w / 2;
    return kLeft + plot_w * static_cast<double>(it - it_min) / static_cast<double>(it_max - it_min);
  };
  auto py = [&](double v) {
    const double l = std::log10(std::max(v, kFloor));
    return kTop + plot_h * (dec_hi - l) / (dec_hi - dec_lo);
  };

  struct Style {
    Method method;
    const char* color;
  };
  const Style styles[] = {{Method::kMcmc, "#1f77b4"}, {Method::kOpad, "#d62728"},
                          {Method::kOpadPlus, "#2ca02c"}};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed2(kWidth) << "\" height=\""
      << fixed2(kHeight) << "\" viewBox=\"0 0 " << fixed2(kWidth) << ' ' << fixed2(kHeight) << "\">\n";
  svg << "<rect x=\"0\" y=\"0\" width=\"" << fixed2(kWidth) << "\" height=\"" << fixed2(kHeight)
      << "\" fill=\"white\"/>\n";
  svg << "<rect x=\"" << fixed2(kLeft) << "\" y=\"" << fixed2(kTop) << "\" width=\"" << fixed2(plot_w)
      << "\" height=\"" << fixed2(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (double d = dec_lo; d <= dec_hi; d += 1.0) {
    const double y = kTop + plot_h * (dec_hi - d) / (dec_hi - dec_lo);
    svg << "<line x1=\"" << fixed2(kLeft) << "\" y1=\"" << fixed2(y) << "\" x2=\"" << fixed2(kLeft + plot_w)
        << "\" y2=\"" << fixed2(y) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fixed2(kLeft - 8) << "\" y=\"" << fixed2(y + 4)
        << "\" font-size=\"12\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (std::size_t it : {it_min, it_max}) {
    svg << "<text x=\"" << fixed2(px(it)) << "\" y=\"" << fixed2(kTop + plot_h + 18)
        << "\" font-size=\"12\" text-anchor=\"middle\">" << it << "</text>\n";
  }
  svg << "<text x=\"" << fixed2(kLeft + plot_w / 2) << "\" y=\"" << fixed2(kHeight - 15)
      << "\" font-size=\"14\" text-anchor=\"middle\">iteration</text>\n";
  svg << "<text x=\"20\" y=\"" << fixed2(kTop + plot_h / 2) << "\" font-size=\"14\" text-anchor=\"middle\""
      << " transform=\"rotate(-90 20 " << fixed2(kTop + plot_h / 2) << ")\">KL divergence</text>\n";

  double legend_y = kTop + 10;
  for (const auto& style : styles) {
    std::vector<const SummaryRow*> series;
    for (const auto& r : summary.rows) {
      if (r.method == style.method) series.push_back(&r);
    }
    if (series.empty()) continue;
    std::sort(series.begin(), series.end(),
              [](const SummaryRow* a, const SummaryRow* b) { return a->iteration < b->iteration; });

    const bool banded = std::all_of(series.begin(), series.end(),
                                    [](const SummaryRow* r) { return r->lo && r->hi; });
    if (banded) {
      svg << "<polygon fill=\"" << style.color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (const auto* r : series) svg << fixed2(px(r->iteration)) << ',' << fixed2(py(*r->hi)) << ' ';
      for (auto it = series.rbegin(); it != series.rend(); ++it) {
        svg << fixed2(px((*it)->iteration)) << ',' << fixed2(py(*(*it)->lo)) << ' ';
      }
      svg << "\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << style.color << "\" stroke-width=\"2\" points=\"";
    for (const auto* r : series) svg << fixed2(px(r->iteration)) << ',' << fixed2(py(r->mean)) << ' ';
    svg << "\"/>\n";
    for (const auto* r : series) {
      svg << "<circle class=\"marker\" cx=\"" << fixed2(px(r->iteration)) << "\" cy=\""
          << fixed2(py(r->mean)) << "\" r=\"2.5\" fill=\"" << style.color << "\"/>\n";
    }
    const double lx = kLeft + plot_w + 15;
    svg << "<line x1=\"" << fixed2(lx) << "\" y1=\"" << fixed2(legend_y) << "\" x2=\"" << fixed2(lx + 25)
        << "\" y2=\"" << fixed2(legend_y) << "\" stroke=\"" << style.color << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fixed2(lx + 32) << "\" y=\"" << fixed2(legend_y + 4) << "\" font-size=\"12\">"
        << to_string(style.method) << "</text>\n";
    legend_y += 20;
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(const Summary& summary, const std::filesystem::path& path) {
  const std::string svg = render_plot_svg(summary);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << svg;
  if (!out) throw Error("failed writing " + path.string());
}

}  // namespace opad
