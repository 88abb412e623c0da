#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <functional>
#include <set>
#include <vector>

#include "opad/exact.hpp"

using namespace opad;

namespace {

// Colour-marking DFS over the row-major adjacency bits.
bool dfs_acyclic(const StateKey& key, std::size_t n) {
  std::vector<int> colour(n, 0);
  std::function<bool(std::size_t)> visit = [&](std::size_t u) {
    colour[u] = 1;
    for (std::size_t v = 0; v < n; ++v) {
      if (!key.get(u * n + v)) continue;
      if (colour[v] == 1) return false;
      if (colour[v] == 0 && !visit(v)) return false;
    }
    colour[u] = 2;
    return true;
  };
  for (std::size_t u = 0; u < n; ++u) {
    if (colour[u] == 0 && !visit(u)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("hypercube enumeration") {
  std::size_t count = 0;
  enumerate_hypercube(1, [&](const StateKey&) { ++count; });
  CHECK(count == 2);

  std::set<std::string> seen;
  std::vector<std::uint64_t> order;
  enumerate_hypercube(4, [&](const StateKey& k) {
    seen.insert(k.to_string());
    order.push_back(hypercube_index(k));
  });
  CHECK(seen.size() == 16);
  for (std::uint64_t i = 0; i < order.size(); ++i) CHECK(order[i] == i);

  count = 0;
  enumerate_hypercube(15, [&](const StateKey&) { ++count; });
  CHECK(count == 32768);

  CHECK_THROWS_AS(enumerate_hypercube(25, [](const StateKey&) {}), EnumerationLimitError);
}

TEST_CASE("DAG enumeration matches frozen counts and an independent acyclicity check") {
  // Brute-force filter counts, frozen.
  const std::size_t fixtures[] = {0, 1, 3, 25, 543, 29281};
  for (std::size_t n = 1; n <= 5; ++n) {
    std::set<std::vector<std::uint8_t>> seen;
    bool all_acyclic = true;
    enumerate_dags(n, [&](const StateKey& k) {
      all_acyclic = all_acyclic && dfs_acyclic(k, n);
      for (std::size_t i = 0; i < n; ++i) all_acyclic = all_acyclic && !k.get(i * n + i);
      seen.insert(k.bytes());
    });
    CHECK(all_acyclic);
    CHECK(seen.size() == fixtures[n]);
    CHECK(seen.size() == count_labeled_dags(n));
    CHECK(all_dags(n).size() == fixtures[n]);
  }

  // n = 3 the slow way: every loop-free graph, keep the acyclic ones.
  std::size_t brute = 0;
  for (std::uint32_t mask = 0; mask < (1u << 9); ++mask) {
    StateKey k(9);
    for (std::size_t b = 0; b < 9; ++b) k.set(b, (mask >> b) & 1u);
    bool loop = k.get(0) || k.get(4) || k.get(8);
    if (!loop && dfs_acyclic(k, 3)) ++brute;
  }
  CHECK(brute == 25);

  CHECK_THROWS_AS(enumerate_dags(6, [](const StateKey&) {}), EnumerationLimitError);
}

TEST_CASE("n = 2 DAGs are the empty graph and one edge either way") {
  std::set<std::string> s;
  enumerate_dags(2, [&](const StateKey& k) { s.insert(k.to_string()); });
  CHECK(s == std::set<std::string>{"0000", "0100", "0010"});
}

TEST_CASE("build_exact_target examples") {
  SUBCASE("uniform Ising") {
    const IsingTarget t(IsingParams::uniform(3, 0.0, 1.0, 1.0, 0.1));
    const auto exact = build_exact_target(t);
    CHECK(exact.size() == 8);
    for (const auto& k : exact.keys()) CHECK(std::exp(exact.log_prob(k)) == doctest::Approx(0.125));
  }
  SUBCASE("two-state toy target") {
    const TabulatedTarget t(1, {std::log(2.0), std::log(1.0)});
    const auto exact = build_exact_target(t);
    CHECK(std::exp(exact.log_prob(hypercube_state(0, 1))) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(std::exp(exact.log_prob(hypercube_state(1, 1))) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("normalization identity") {
    const IsingTarget t(IsingParams::uniform(4, 0.5, 1.0, 1.0, 0.1));
    const auto exact = build_exact_target(t);
    double total = 0.0;
    for (const auto& k : exact.keys()) total += std::exp(exact.log_prob(k));
    CHECK(std::abs(total - 1.0) <= 1e-12);
    CHECK(std::abs(std::exp(log_sum_exp(exact.log_scores()) - exact.log_z()) - 1.0) <= 1e-12);
  }
  SUBCASE("non-finite scores name the state") {
    const TabulatedTarget t(2, {0.0, NAN, 0.0, 0.0});
    try {
      build_exact_target(t);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("01") != std::string::npos);
    }
  }
}
