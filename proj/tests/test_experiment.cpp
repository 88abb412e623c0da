#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "opad/datagen.hpp"
#include "opad/exact.hpp"
#include "opad/experiment.hpp"

using namespace opad;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "opad_test_experiment" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small_ising(const fs::path& out) {
  ExperimentConfig c;
  c.ising_m = 6;
  c.iterations = 700;
  c.chains = 4;
  c.stride = 50;
  c.seed = 5;
  c.out_dir = out;
  return c;
}

void check_rows(const KlTrace& trace) {
  REQUIRE(trace.size() % 3 == 0);
  double previous = INFINITY;
  std::size_t chain = SIZE_MAX;
  for (std::size_t i = 0; i < trace.size(); i += 3) {
    const auto& mc = trace[i];
    const auto& op = trace[i + 1];
    const auto& pl = trace[i + 2];
    CHECK(mc.method == Method::kMcmc);
    CHECK(op.method == Method::kOpad);
    CHECK(pl.method == Method::kOpadPlus);
    CHECK(mc.iteration == pl.iteration);
    CHECK(pl.kl >= -1e-9);
    CHECK(mc.kl >= op.kl - 1e-9);
    CHECK(op.kl >= pl.kl - 1e-9);
    if (pl.chain != chain) {
      chain = pl.chain;
      previous = INFINITY;
    }
    CHECK(pl.kl <= previous + 1e-9);
    previous = pl.kl;
  }
}

std::vector<double> polyline_ys(const std::string& svg, const std::string& color) {
  const std::regex line("<polyline fill=\"none\" stroke=\"" + color + "\"[^>]*points=\"([^\"]*)\"");
  std::smatch m;
  std::vector<double> ys;
  if (!std::regex_search(svg, m, line)) return ys;
  std::istringstream pts(m[1].str());
  std::string pair;
  while (pts >> pair) ys.push_back(std::stod(pair.substr(pair.find(',') + 1)));
  return ys;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("checkpoints") {
  CHECK(checkpoint_iterations(1, 100) == std::vector<std::size_t>{1});
  CHECK(checkpoint_iterations(250, 100) == std::vector<std::size_t>{1, 100, 200, 250});
  CHECK(checkpoint_iterations(200, 100) == std::vector<std::size_t>{1, 100, 200});
  CHECK(checkpoint_iterations(4, 1) == std::vector<std::size_t>{1, 2, 3, 4});
  CHECK_THROWS(checkpoint_iterations(10, 0));
}

TEST_CASE("incremental KL matches a from-scratch recomputation at every checkpoint") {
  const IsingTarget ising(IsingParams::uniform(7, 0.5, 1.0, 1.0, 0.1));
  const auto exact = build_exact_target(ising);
  const auto trace = run_chain(ising, ising_flip_kernel(7), hypercube_state(3, 7), 600, 17);
  const auto cps = checkpoint_iterations(600, 7);
  const auto rows = chain_kl_series(trace, exact, cps, 2);
  REQUIRE(rows.size() == cps.size() * 3);
  for (std::size_t c = 0; c < cps.size(); ++c) {
    const auto ap = extract_approximations(trace.prefix(cps[c]));
    CHECK(rows[3 * c].chain == 2);
    CHECK(rows[3 * c].iteration == cps[c]);
    CHECK(std::abs(rows[3 * c].kl - kl_divergence(ap.mcmc, exact)) <= 1e-9);
    CHECK(std::abs(rows[3 * c + 1].kl - kl_divergence(ap.opad, exact)) <= 1e-9);
    CHECK(std::abs(rows[3 * c + 2].kl - kl_divergence(ap.opad_plus, exact)) <= 1e-9);
  }
  check_rows(rows);
  const std::vector<std::size_t> beyond{1, 601};
  CHECK_THROWS_AS(chain_kl_series(trace, exact, beyond, 0), std::invalid_argument);
}

TEST_CASE("a one-state run reports the point-mass KL for every method") {
  auto c = small_ising(scratch("point"));
  c.chains = 1;
  c.iterations = 1;
  const auto trace = run_experiment(c);
  REQUIRE(trace.size() == 3);
  const ExperimentPlan plan(c);
  const auto setup = plan.chain(0);
  const double expected = -setup.exact->log_prob(setup.init);
  for (const auto& r : trace) CHECK(r.kl == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("run_experiment writes trace and manifest and satisfies the ordering") {
  const auto out = scratch("ising");
  const auto c = small_ising(out);
  const auto trace = run_experiment(c);
  CHECK(trace.size() == 4 * checkpoint_iterations(700, 50).size() * 3);
  check_rows(trace);
  CHECK(read_kl_trace(out / "kl_trace.csv").size() == trace.size());
  CHECK(slurp(out / "kl_trace.csv").rfind("chain,iteration,method,kl\n", 0) == 0);

  std::istringstream manifest(slurp(out / "manifest"));
  const auto again = parse_config(manifest);
  CHECK(to_config_text(again) == to_config_text(c));
}

TEST_CASE("repeated runs are byte-identical regardless of worker count") {
  auto a = small_ising(scratch("det_a"));
  auto b = small_ising(scratch("det_b"));
  b.workers = 3;
  run_experiment(a);
  run_experiment(b);
  CHECK(slurp(a.out_dir / "kl_trace.csv") == slurp(b.out_dir / "kl_trace.csv"));

  auto c = small_ising(scratch("det_c"));
  c.seed = 6;
  run_experiment(c);
  CHECK(slurp(a.out_dir / "kl_trace.csv") != slurp(c.out_dir / "kl_trace.csv"));
}

TEST_CASE("bvs and bsl experiments") {
  SUBCASE("synthetic bvs") {
    ExperimentConfig c;
    c.target = TargetFamily::kBvs;
    c.bvs_m = 6;
    c.bvs_n = 50;
    c.iterations = 400;
    c.chains = 3;
    c.out_dir = scratch("bvs");
    check_rows(run_experiment(c));
  }
  SUBCASE("bvs from csv") {
    const auto dir = scratch("bvs_csv");
    save_csv(generate_bvs(5, 40, 0.5, 3).first, dir / "data.csv");
    ExperimentConfig c;
    c.target = TargetFamily::kBvs;
    c.bvs_data = (dir / "data.csv").string();
    c.iterations = 300;
    c.chains = 2;
    c.out_dir = dir;
    const ExperimentPlan plan(c);
    CHECK(plan.chain(0).exact->size() == 32);
    check_rows(run_experiment(c));
  }
  SUBCASE("bsl draws one dataset per chain") {
    ExperimentConfig c;
    c.target = TargetFamily::kBsl;
    c.bsl_nodes = 3;
    c.bsl_rows = 40;
    c.iterations = 300;
    c.chains = 3;
    c.out_dir = scratch("bsl");
    const ExperimentPlan plan(c);
    CHECK(plan.chain(0).exact->size() == 25);
    CHECK(plan.chain(0).exact->log_z() != plan.chain(1).exact->log_z());
    check_rows(run_experiment(c));
  }
}

TEST_CASE("config parsing") {
  std::istringstream text(
      "# comment\n"
      "target = bsl\n"
      "bsl.nodes = 4\n"
      "\n"
      "iterations=250   # trailing\n"
      "seed = 12\n");
  const auto c = parse_config(text);
  CHECK(c.target == TargetFamily::kBsl);
  CHECK(c.bsl_nodes == 4);
  CHECK(c.iterations == 250);
  CHECK(c.seed == 12);
  CHECK(c.resolved_kernel() == KernelChoice::kStructure);

  ExperimentConfig d;
  CHECK_THROWS_AS(d.set("nope", "1"), std::invalid_argument);
  CHECK_THROWS_AS(d.set("chains", "-3"), std::invalid_argument);
  CHECK_THROWS_AS(d.set("ising.beta", "warm"), std::invalid_argument);
  CHECK_THROWS_AS(d.set("target", "potts"), std::invalid_argument);
  d.set("kernel", "structure");
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d.set("kernel", "flip");
  d.set("chains", "0");
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);

  std::istringstream back(to_config_text(c));
  CHECK(to_config_text(parse_config(back)) == to_config_text(c));
}

TEST_CASE("summary statistics") {
  KlTrace t;
  for (std::size_t chain = 0; chain < 3; ++chain) {
    for (std::size_t it : {1u, 10u}) {
      t.push_back({chain, it, Method::kMcmc, 2.0});
      t.push_back({chain, it, Method::kOpad, 1.0 + static_cast<double>(chain)});
      t.push_back({chain, it, Method::kOpadPlus, 0.5});
    }
  }
  const auto s = summarize(t);
  CHECK(s.warnings.empty());
  REQUIRE(s.rows.size() == 6);
  for (const auto& r : s.rows) {
    REQUIRE(r.lo);
    REQUIRE(r.hi);
    if (r.method == Method::kOpad) {
      // values 1, 2, 3: mean 2, sample sd 1
      CHECK(r.mean == doctest::Approx(2.0));
      CHECK(*r.hi - r.mean == doctest::Approx(1.96 / std::sqrt(3.0)));
      CHECK(r.mean - *r.lo == doctest::Approx(1.96 / std::sqrt(3.0)));
    } else {
      CHECK(*r.hi - *r.lo == 0.0);
    }
  }

  KlTrace single(t.begin(), t.begin() + 3);
  const auto s1 = summarize(single);
  CHECK_FALSE(s1.warnings.empty());
  for (const auto& r : s1.rows) CHECK_FALSE(r.lo);

  CHECK_THROWS(summarize(KlTrace{}));
}

TEST_CASE("duplicated chains give zero-width intervals") {
  const auto c = small_ising(scratch("dup"));
  const ExperimentPlan plan(c);
  const auto setup = plan.chain(0);
  const auto trace = run_chain(*setup.target, *setup.kernel, setup.init, c.iterations, setup.chain_seed);
  const auto cps = checkpoint_iterations(c.iterations, c.stride);
  KlTrace both = chain_kl_series(trace, *setup.exact, cps, 0);
  const auto twin = chain_kl_series(trace, *setup.exact, cps, 1);
  both.insert(both.end(), twin.begin(), twin.end());
  for (const auto& r : summarize(both).rows) CHECK(*r.hi - *r.lo == 0.0);
}

TEST_CASE("trace and summary CSV round trips") {
  const auto dir = scratch("csv");
  const KlTrace t{{0, 1, Method::kMcmc, 0.1 + 0.2}, {0, 1, Method::kOpad, 1e-300}, {0, 1, Method::kOpadPlus, 0.0}};
  write_kl_trace(t, dir / "kl_trace.csv");
  const auto back = read_kl_trace(dir / "kl_trace.csv");
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].kl == t[i].kl);
    CHECK(back[i].method == t[i].method);
  }
  const auto s = summarize(t);
  write_summary(s, dir / "summary.csv");
  CHECK(slurp(dir / "summary.csv").rfind("iteration,method,mean,lo,hi\n", 0) == 0);
  const auto sb = read_summary(dir / "summary.csv");
  REQUIRE(sb.rows.size() == 3);
  CHECK(sb.rows[0].mean == s.rows[0].mean);
  CHECK_FALSE(sb.rows[0].lo);
  CHECK(format_number(0.30000000000000004) == "0.30000000000000004");
}

TEST_CASE("plot output") {
  Summary one;
  one.rows = {{1, Method::kMcmc, 0.9, 0.8, 1.0}, {1, Method::kOpad, 0.5, 0.4, 0.6}, {1, Method::kOpadPlus, 0.1, 0.05, 0.15}};
  const auto svg = render_plot_svg(one);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(count_of(svg, "class=\"marker\"") == 3);
  CHECK(render_plot_svg(one) == svg);

  Summary curve;
  const double plus[] = {1.0, 0.3, 0.3, 0.01, 1e-5};
  for (std::size_t i = 0; i < 5; ++i) {
    curve.rows.push_back({1 + 100 * i, Method::kMcmc, 2.0 - 0.1 * static_cast<double>(i), {}, {}});
    curve.rows.push_back({1 + 100 * i, Method::kOpadPlus, plus[i], {}, {}});
  }
  const auto ys = polyline_ys(render_plot_svg(curve), "#2ca02c");
  REQUIRE(ys.size() == 5);
  // Larger y pixel means smaller KL on the plot.
  for (std::size_t i = 1; i < ys.size(); ++i) CHECK(ys[i] >= ys[i - 1]);

  const auto dir = scratch("plot");
  emit_plot(one, dir / "a.svg");
  emit_plot(one, dir / "b.svg");
  CHECK(slurp(dir / "a.svg") == slurp(dir / "b.svg"));
  CHECK_THROWS_AS(emit_plot(one, dir / "missing" / "dir" / "c.svg"), Error);
  CHECK_THROWS(render_plot_svg(Summary{}));
}
