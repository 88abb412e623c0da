#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "opad/datagen.hpp"
#include "opad/targets.hpp"

using namespace opad;

namespace {

Eigen::MatrixXd centered_random(Eigen::Index rows, Eigen::Index cols, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = z(rng);
  }
  m.rowwise() -= m.colwise().mean();
  return m;
}

// g-prior log marginal evaluated with an explicit normal-equation solve.
double marginal_oracle(const Eigen::VectorXd& y, const Eigen::MatrixXd& xs, double g, double a, double b) {
  const double n = static_cast<double>(y.size());
  double term = y.squaredNorm();
  if (xs.cols() > 0) {
    const Eigen::MatrixXd gram = xs.transpose() * xs;
    const Eigen::VectorXd coef = gram.fullPivLu().solve(xs.transpose() * y);
    term -= g / (g + 1.0) * y.dot(xs * coef);
  }
  return -0.5 * static_cast<double>(xs.cols()) * std::log(g + 1.0) - (a + n / 2.0) * std::log((term + 2.0 * b) / 2.0);
}

StateKey bits_of(std::initializer_list<int> v) {
  std::vector<std::uint8_t> b(v.begin(), v.end());
  return StateKey::from_bits(b);
}

}  // namespace

TEST_CASE("Ising examples") {
  const std::vector<int> up{1, 1, 1};
  CHECK(ising_log_score(IsingParams::uniform(3, 0.0, 1.0, 1.0, 0.1), up) == 0.0);
  CHECK(ising_log_score(IsingParams::uniform(3, 0.0, 1.0, 1.0, 0.1), std::vector<int>{1, -1, 1}) == 0.0);
  CHECK(ising_log_score(IsingParams::uniform(3, 1.0, 1.0, 1.0, 0.0), up) == doctest::Approx(3.0));
  CHECK(ising_log_score(IsingParams::uniform(3, 0.5, 1.0, 1.0, 0.1), up) == doctest::Approx(1.65));
  CHECK_THROWS_AS(ising_log_score(IsingParams::uniform(3, 0.5, 1.0, 1.0, 0.1), std::vector<int>{1, 1}),
                  std::invalid_argument);
}

TEST_CASE("Ising target matches the direct formula and its symmetries") {
  std::mt19937_64 rng(3);
  IsingParams p;
  p.m = 7;
  p.beta = 0.8;
  p.mu = 1.3;
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (std::size_t j = 0; j < p.m; ++j) {
    p.coupling.push_back(u(rng));
    p.field.push_back(u(rng));
  }
  const IsingTarget target(p);
  for (std::uint64_t v = 0; v < (1u << p.m); ++v) {
    const StateKey key = hypercube_state(v, p.m);
    const auto x = decode_spins(key);
    CHECK(encode_spins(x) == key);
    double h = 0.0;
    for (std::size_t j = 0; j < p.m; ++j) {
      h -= p.coupling[j] * x[j] * x[(j + 1) % p.m];
      h -= p.mu * p.field[j] * x[j];
    }
    CHECK(target.log_score(key) == doctest::Approx(-p.beta * h).epsilon(1e-13));
  }

  const auto uni = IsingParams::uniform(9, 0.5, 1.0, 1.0, 0.1);
  const auto no_field = IsingParams::uniform(9, 0.5, 1.0, 1.0, 0.0);
  for (int rep = 0; rep < 50; ++rep) {
    std::vector<int> x(9);
    for (auto& s : x) s = (rng() & 1u) ? 1 : -1;
    auto rotated = x;
    std::rotate(rotated.begin(), rotated.begin() + 1 + rep % 8, rotated.end());
    CHECK(ising_log_score(uni, rotated) == doctest::Approx(ising_log_score(uni, x)).epsilon(1e-14));
    auto flipped = x;
    for (auto& s : flipped) s = -s;
    CHECK(ising_log_score(no_field, flipped) == doctest::Approx(ising_log_score(no_field, x)).epsilon(1e-14));
  }
}

TEST_CASE("hypercube index is lexicographic with bit 0 first") {
  CHECK(hypercube_index(bits_of({1, 0, 0})) == 4);
  CHECK(hypercube_index(bits_of({0, 0, 1})) == 1);
  for (std::uint64_t v = 0; v < 32; ++v) CHECK(hypercube_index(hypercube_state(v, 5)) == v);
}

TEST_CASE("BVS examples") {
  SUBCASE("two-row hand case") {
    BvsParams p;
    p.x = Eigen::MatrixXd(2, 1);
    p.x << 1.0, -1.0;
    p.y = Eigen::VectorXd(2);
    p.y << 1.0, -1.0;
    p.g = 1.0;
    const double expected = std::log(0.5) - 0.5 * std::log(2.0) - 4.0 * std::log(1.5);
    CHECK(bvs_log_score(p, bits_of({1})) == doctest::Approx(expected).epsilon(1e-14));
  }
  SUBCASE("empty selection") {
    BvsParams p;
    p.x = centered_random(40, 5, 1);
    p.y = centered_random(40, 1, 2).col(0);
    p.rho = 0.3;
    const double expected =
        5.0 * std::log(0.7) - (3.0 + 20.0) * std::log((p.y.squaredNorm() + 2.0) / 2.0);
    CHECK(bvs_log_score(p, StateKey(5)) == doctest::Approx(expected).epsilon(1e-13));
  }
  SUBCASE("duplicating an unselected column leaves the likelihood unchanged") {
    BvsParams p;
    p.x = centered_random(30, 3, 4);
    p.y = centered_random(30, 1, 5).col(0);
    BvsParams q = p;
    q.x.conservativeResize(Eigen::NoChange, 4);
    q.x.col(3) = p.x.col(2);
    const BvsTarget tp(p), tq(q);
    const auto gp = bits_of({1, 1, 0});
    const auto gq = bits_of({1, 1, 0, 0});
    CHECK(tq.log_likelihood(gq) == doctest::Approx(tp.log_likelihood(gp)).epsilon(1e-13));
    // The only change in the full score is the prior factor of the extra indicator.
    CHECK(tq.log_score(gq) - tp.log_score(gp) == doctest::Approx(std::log(1.0 - p.rho)).epsilon(1e-12));
  }
}

TEST_CASE("BVS scores agree with an explicit-solve oracle") {
  BvsParams p;
  p.x = centered_random(60, 6, 8);
  p.y = (p.x.col(0) * 2.0 - p.x.col(3) + centered_random(60, 1, 9).col(0)).eval();
  p.y.array() -= p.y.mean();
  const BvsTarget t(p);
  for (std::uint64_t v = 0; v < 64; ++v) {
    const StateKey gamma = hypercube_state(v, 6);
    std::vector<Eigen::Index> cols;
    for (std::size_t j = 0; j < 6; ++j) {
      if (gamma.get(j)) cols.push_back(static_cast<Eigen::Index>(j));
    }
    Eigen::MatrixXd xs(60, static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < cols.size(); ++i) xs.col(static_cast<Eigen::Index>(i)) = p.x.col(cols[i]);
    const double k = static_cast<double>(cols.size());
    const double oracle = marginal_oracle(p.y, xs, 60.0, 3.0, 1.0) + k * std::log(0.5) + (6.0 - k) * std::log(0.5);
    CHECK(t.log_score(gamma) == doctest::Approx(oracle).epsilon(1e-11));
    CHECK(std::isfinite(t.log_score(gamma)));
  }
}

TEST_CASE("BVS prior term carries all dependence on rho") {
  BvsParams lo;
  lo.x = centered_random(50, 6, 12);
  lo.y = centered_random(50, 1, 13).col(0);
  lo.rho = 0.3;
  BvsParams hi = lo;
  hi.rho = 0.6;
  const BvsTarget a(lo), b(hi);
  const auto gamma = bits_of({1, 1, 1, 1, 0, 0});  // more than half selected
  CHECK(a.log_likelihood(gamma) == b.log_likelihood(gamma));
  CHECK(b.log_score(gamma) > a.log_score(gamma));
  CHECK(b.log_score(gamma) - a.log_score(gamma) ==
        doctest::Approx(4.0 * std::log(0.6 / 0.3) + 2.0 * std::log(0.4 / 0.7)).epsilon(1e-12));
}

TEST_CASE("collinear selections raise SingularGramError naming the subset") {
  BvsParams p;
  p.x = centered_random(20, 3, 21);
  p.x.col(2) = p.x.col(0) * 2.0;
  p.y = centered_random(20, 1, 22).col(0);
  const BvsTarget t(p);
  try {
    t.log_score(bits_of({1, 0, 1}));
    FAIL("expected SingularGramError");
  } catch (const SingularGramError& e) {
    const std::string what = e.what();
    CHECK(what.find('0') != std::string::npos);
    CHECK(what.find('2') != std::string::npos);
  }
  CHECK(std::isfinite(t.log_score(bits_of({1, 1, 0}))));
}

TEST_CASE("BvsParams validation") {
  BvsParams p;
  p.x = centered_random(10, 2, 1);
  p.y = centered_random(10, 1, 2).col(0);
  p.rho = 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.rho = 0.5;
  p.y.array() += 1.0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}

TEST_CASE("BSL examples") {
  const auto [data, truth] = generate_bsl(4, 2, 80, 99);
  const BslTarget target(make_bsl_params(data, 0.0, 3.0, 1.0));

  SUBCASE("empty graph") {
    double expected = 0.0;
    for (Eigen::Index i = 0; i < 4; ++i) {
      expected -= (3.0 + 40.0) * std::log((data.x.col(i).squaredNorm() + 2.0) / 2.0);
    }
    CHECK(target.log_score(DagState(4)) == doctest::Approx(expected).epsilon(1e-13));
  }

  SUBCASE("decomposability") {
    const DagState g1(4, {0b0010, 0b0100, 0, 0});  // 0->1, 1->2
    const DagState g2(4, {0b0010, 0b0100, 0b0000, 0b0100});  // adds 3->2
    const double diff = target.log_score(g2) - target.log_score(g1);
    CHECK(diff == doctest::Approx(target.node_log_score(2, 0b1010) - target.node_log_score(2, 0b0010))
                      .epsilon(1e-12));
    for (std::size_t node : {0u, 1u, 3u}) {
      CHECK(target.node_log_score(node, g1.parents(node)) == target.node_log_score(node, g2.parents(node)));
    }
  }

  SUBCASE("node scores match the oracle") {
    const double g = 80.0;
    for (std::size_t node = 0; node < 4; ++node) {
      for (std::uint64_t mask = 0; mask < 16; ++mask) {
        if ((mask >> node) & 1u) continue;
        std::vector<Eigen::Index> cols;
        for (std::size_t j = 0; j < 4; ++j) {
          if ((mask >> j) & 1u) cols.push_back(static_cast<Eigen::Index>(j));
        }
        Eigen::MatrixXd xs(80, static_cast<Eigen::Index>(cols.size()));
        for (std::size_t i = 0; i < cols.size(); ++i) xs.col(static_cast<Eigen::Index>(i)) = data.x.col(cols[i]);
        CHECK(target.node_log_score(node, mask) ==
              doctest::Approx(marginal_oracle(data.x.col(static_cast<Eigen::Index>(node)), xs, g, 3.0, 1.0))
                  .epsilon(1e-11));
      }
    }
  }

  SUBCASE("cyclic adjacency is rejected") {
    const std::vector<std::uint64_t> cyc{0b0010, 0b0001, 0, 0};
    CHECK_THROWS_AS(target.log_score(adjacency_key(cyc)), std::invalid_argument);
  }
}

TEST_CASE("BSL single edge scores are symmetric on identical columns") {
  Eigen::MatrixXd col = centered_random(50, 1, 31);
  col /= std::sqrt(col.squaredNorm() / 50.0);
  Eigen::MatrixXd data(50, 2);
  data.col(0) = col.col(0);
  data.col(1) = col.col(0);
  BslParams p;
  p.data = data;
  const BslTarget t(p);
  const DagState forward(2, {0b10, 0});
  const DagState backward(2, {0, 0b01});
  CHECK(t.log_score(forward) == doctest::Approx(t.log_score(backward)).epsilon(1e-13));
}

TEST_CASE("BSL score is invariant to consistent node relabeling") {
  const auto [data, truth] = generate_bsl(5, 2, 100, 5);
  const BslTarget t(make_bsl_params(data, 0.0, 3.0, 1.0));
  std::mt19937_64 rng(17);
  std::vector<std::size_t> perm(5);
  std::iota(perm.begin(), perm.end(), 0);
  for (int rep = 0; rep < 20; ++rep) {
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::MatrixXd permuted(data.x.rows(), 5);
    for (std::size_t j = 0; j < 5; ++j) permuted.col(static_cast<Eigen::Index>(perm[j])) = data.x.col(static_cast<Eigen::Index>(j));
    BslParams q;
    q.data = permuted;
    const BslTarget tp(q);
    std::vector<std::uint64_t> children(5, 0);
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        if (truth.dag.has_edge(i, j)) children[perm[i]] |= 1ull << perm[j];
      }
    }
    CHECK(tp.log_score(DagState(5, children)) == doctest::Approx(t.log_score(truth.dag)).epsilon(1e-12));
  }
}

TEST_CASE("labeled DAG counts from the recurrence") {
  const std::uint64_t expected[] = {1, 1, 3, 25, 543, 29281, 3781503};
  for (std::size_t n = 0; n < 7; ++n) CHECK(count_labeled_dags(n) == expected[n]);
  CHECK(SupportSpec{SupportFamily::kDagSpace, 5}.cardinality() == 29281);
  CHECK(SupportSpec{SupportFamily::kHypercube, 15}.cardinality() == 32768);
  CHECK(SupportSpec{SupportFamily::kDagSpace, 3}.state_bits() == 9);
}

TEST_CASE("TabulatedTarget looks scores up by lexicographic index") {
  const TabulatedTarget t(2, {0.0, 1.0, 2.0, 3.0});
  CHECK(t.log_score(bits_of({1, 0})) == 2.0);
  CHECK(t.log_score(bits_of({0, 1})) == 1.0);
  CHECK_THROWS(TabulatedTarget(2, {0.0}));
}
