#include <doctest.h>

#include <cmath>

#include "phylocp/likelihood.hpp"
#include "phylocp/parallel.hpp"
#include "phylocp/simulate.hpp"
#include "test_support.hpp"

using namespace phylocp;

namespace {

const char* kBase = "(((Taxon0:1.0,Taxon1:1.0):1.0,(Taxon2:1.0,Taxon3:1.0):1.0):1.0,"
                    "((Taxon4:1.0,Taxon5:1.0):1.0,(Taxon6:1.0,Taxon7:1.0):1.0):1.0):1.0;";

// Random rooted binary tree by repeatedly joining two random subtrees.
Tree random_tree(int n, Rng& rng)
{
  std::vector<std::string> parts;
  for (int i = 0; i < n; ++i)
    parts.push_back("t" + std::to_string(i));
  while (parts.size() > 1) {
    const int a = uniform_int(rng, 0, static_cast<int>(parts.size()) - 1);
    std::string left = parts[a];
    parts.erase(parts.begin() + a);
    const int b = uniform_int(rng, 0, static_cast<int>(parts.size()) - 1);
    std::string right = parts[b];
    parts.erase(parts.begin() + b);
    const auto len = [&] { return std::to_string(0.05 + 1.5 * uniform01(rng)); };
    parts.push_back("(" + left + ":" + len() + "," + right + ":" + len() + ")");
  }
  return parse_newick(parts.front() + ";");
}

SequenceData random_alignment(int n, int m, Rng& rng)
{
  SequenceData d;
  d.states.resize(n, m);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j)
      d.states(i, j) = static_cast<std::uint8_t>(uniform_int(rng, 0, 3));
  return d;
}

std::vector<int> column(const SequenceData& d, int site)
{
  std::vector<int> c;
  for (int i = 1; i <= d.sequence_count(); ++i)
    c.push_back(d.at(i, site));
  return c;
}

} // namespace

TEST_CASE("pruning equals enumeration over internal states")
{
  Rng rng(2024);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = uniform_int(rng, 2, 5);
    const Tree t = random_tree(n, rng);
    const auto data = random_alignment(n, 3, rng);
    const double theta = 0.05 + 4.95 * uniform01(rng);
    const LikelihoodEngine engine(t);
    for (int site = 1; site <= 3; ++site) {
      const double expected = std::log(test::enumerate_site_likelihood(t, theta, column(data, site)));
      CHECK(engine.site_log_likelihood(theta, data, site) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("time machine equals enumeration of its product form")
{
  Rng rng(7);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = uniform_int(rng, 2, 5);
    const Tree t = random_tree(n, rng);
    const auto data = random_alignment(n, 2, rng);
    const double theta = 0.1 + 3.0 * uniform01(rng);
    for (int g = 2; g <= n; ++g) {
      const LikelihoodEngine engine(t, g);
      for (int site = 1; site <= 2; ++site) {
        const double expected = std::log(test::enumerate_truncated_site_likelihood(t, g, theta, column(data, site)));
        CHECK(engine.site_log_likelihood(theta, data, site) == doctest::Approx(expected).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("g = 2 is exact under a stationary root")
{
  const Tree t = parse_newick(kBase);
  Rng rng(1);
  const auto data = random_alignment(8, 20, rng);
  const ChangePointState st{{7}, Eigen::Vector2d(0.6, 1.4)};
  CHECK(LikelihoodEngine(t, 2).log_likelihood(st, data) ==
        doctest::Approx(LikelihoodEngine(t, 1).log_likelihood(st, data)).epsilon(1e-13));
}

TEST_CASE("g = n on the eight-taxon tree keeps the cherries")
{
  const Tree t = parse_newick(kBase);
  SequenceData d;
  d.states = StateMatrix::Zero(8, 1);
  const double theta = 0.8;
  // identical cherry leaves are more likely than under independent leaves
  const double lik = LikelihoodEngine(t, 8).site_log_likelihood(theta, d, 1);
  const JukesCantor<double> jc(theta);
  const double pair = 0.25 * (std::pow(jc.transition_prob(1, 0, 0), 2) * 1 + 3 * std::pow(jc.transition_prob(1, 1, 0), 2));
  CHECK(lik == doctest::Approx(4 * std::log(pair)).epsilon(1e-13));
  CHECK(lik > 8 * std::log(0.25));
}

TEST_CASE("segments factorize")
{
  const Tree t = parse_newick(kBase);
  Rng rng(3);
  const auto data = random_alignment(8, 30, rng);
  const LikelihoodEngine engine(t, 4);
  const ChangePointState st{{10, 22}, Eigen::Vector3d(0.5, 1.0, 2.0)};
  const double expected = engine.block_log_likelihood(0.5, data, 1, 10) + engine.block_log_likelihood(1.0, data, 10, 22) +
                          engine.block_log_likelihood(2.0, data, 22, 31);
  CHECK(engine.log_likelihood(st, data) == doctest::Approx(expected).epsilon(1e-13));
  CHECK(segmented_log_likelihood(t, st, data) == doctest::Approx(LikelihoodEngine(t).log_likelihood(st, data)));
  CHECK(time_machine_log_likelihood(t, 4, st, data) == doctest::Approx(expected));
  CHECK_THROWS(time_machine_log_likelihood(t, 1, st, data));
  CHECK_THROWS(time_machine_log_likelihood(t, 9, st, data));
}

TEST_CASE("thread count does not change the result")
{
  const Tree t = parse_newick(kBase);
  Rng rng(5);
  const auto data = random_alignment(8, 700, rng);
  const ChangePointState st{{300}, Eigen::Vector2d(0.7, 1.1)};
  const LikelihoodEngine engine(t, 1);
  set_thread_count(1);
  const double one = engine.log_likelihood(st, data);
  set_thread_count(4);
  const double four = engine.log_likelihood(st, data);
  set_thread_count(0);
  CHECK(one == four);
}

TEST_CASE("zero rate and validation")
{
  const Tree t = parse_newick("(a:1,b:1);");
  SequenceData d;
  d.states.resize(2, 2);
  d.states << 0, 1, 0, 2;
  const LikelihoodEngine engine(t);
  CHECK(engine.site_log_likelihood(0.0, d, 1) == doctest::Approx(std::log(0.25)));
  CHECK(engine.site_log_likelihood(0.0, d, 2) == -std::numeric_limits<double>::infinity());
  CHECK_THROWS(engine.site_log_likelihood(1.0, d, 3));
  SequenceData wrong;
  wrong.states = StateMatrix::Zero(3, 2);
  CHECK_THROWS(engine.log_likelihood({{}, Eigen::VectorXd::Constant(1, 1.0)}, wrong));
  CHECK_THROWS(LikelihoodEngine(t, 3));
}

TEST_CASE("simulated data is most likely near the true rate")
{
  const Tree t = parse_newick(kBase);
  const ChangePointState truth{{}, Eigen::VectorXd::Constant(1, 0.8)};
  const auto data = simulate_dataset({t, truth, 10000, 17}).leaves;
  const LikelihoodEngine engine(t);
  const double at = engine.block_log_likelihood(0.8, data, 1, 10001);
  CHECK(at > engine.block_log_likelihood(2.4, data, 1, 10001));
  CHECK(at > engine.block_log_likelihood(0.8 / 3, data, 1, 10001));
}

TEST_CASE("likelihood cost grows linearly in m")
{
  const Tree t = parse_newick(kBase);
  Rng rng(8);
  const auto small = random_alignment(8, 2000, rng);
  const auto large = random_alignment(8, 8000, rng);
  const LikelihoodEngine engine(t);
  set_thread_count(1);
  const double a = complexity_probe(engine, small, 0.8, 10);
  const double b = complexity_probe(engine, large, 0.8, 10);
  set_thread_count(0);
  CHECK(b / a > 2.0);
  CHECK(b / a < 8.0);
}

TEST_CASE("long branches into the removed region make truncation exact")
{
  // g = 3 removes the (c,d) parent and the root; every kept node below them
  // hangs from a branch of length 60
  const Tree t = parse_newick("((a:0.3,b:0.4):60,(c:60,d:60):0.5);");
  REQUIRE(boundary_nodes(t, 3) == (std::vector<NodeId>{6, 7}));
  Rng rng(12);
  const auto data = random_alignment(4, 25, rng);
  const ChangePointState st{{9}, Eigen::Vector2d(0.4, 1.3)};
  const double exact = LikelihoodEngine(t, 1).log_likelihood(st, data);
  const double truncated = LikelihoodEngine(t, 3).log_likelihood(st, data);
  CHECK(std::abs(exact - truncated) < 1e-6 * std::abs(exact));
}

TEST_CASE("swapping rates with identical blocks leaves the total unchanged")
{
  const Tree t = parse_newick(kBase);
  Rng rng(13);
  const auto block = random_alignment(8, 15, rng);
  SequenceData data;
  data.states.resize(8, 30);
  data.states << block.states, block.states;
  const LikelihoodEngine engine(t, 4);
  const double a = engine.log_likelihood({{16}, Eigen::Vector2d(0.3, 1.7)}, data);
  const double b = engine.log_likelihood({{16}, Eigen::Vector2d(1.7, 0.3)}, data);
  CHECK(a == doctest::Approx(b).epsilon(1e-13));
}

TEST_CASE("large trees and alignments stay finite")
{
  const Tree t = test::balanced_tree(64, 0.5);
  const auto data = simulate_dataset({t, {{}, Eigen::VectorXd::Constant(1, 1.0)}, 10000, 3}).leaves;
  for (int g : {1, 32, 64}) {
    const double ll = LikelihoodEngine(t, g).block_log_likelihood(1.0, data, 1, 10001);
    CHECK(std::isfinite(ll));
    CHECK(ll < 0.0);
  }
}
