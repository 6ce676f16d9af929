#include <doctest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "phylocp/likelihood.hpp"
#include "phylocp/parallel.hpp"
#include "phylocp/simulate.hpp"
#include "test_support.hpp"

using namespace phylocp;

namespace {

double disagreement(const SequenceData& d)
{
  long differ = 0;
  for (int j = 0; j < d.site_count(); ++j)
    for (int i = 1; i < d.sequence_count(); ++i)
      differ += d.states(i, j) != d.states(0, j);
  return static_cast<double>(differ) / (static_cast<double>(d.site_count()) * (d.sequence_count() - 1));
}

} // namespace

TEST_CASE("zero rate copies the root to every leaf")
{
  const Tree tree = test::balanced_tree(8);
  const auto res = simulate_dataset({tree, {{}, Eigen::VectorXd::Zero(1)}, 200, 4}, true);
  REQUIRE(res.all_nodes);
  for (int j = 0; j < 200; ++j)
    for (int i = 0; i < tree.node_count(); ++i)
      CHECK((*res.all_nodes)(i, j) == (*res.all_nodes)(tree.root() - 1, j));
  CHECK(res.leaves.names == tree.leaf_names());
  CHECK(res.leaves.states == res.all_nodes->topRows(8));
}

TEST_CASE("seeded simulation is deterministic and thread independent")
{
  const Tree tree = test::balanced_tree(8);
  const SimulationSpec spec{tree, {{300}, Eigen::Vector2d(0.4, 1.6)}, 1000, 12};
  set_thread_count(1);
  const auto a = simulate_dataset(spec).leaves.states;
  set_thread_count(4);
  const auto b = simulate_dataset(spec).leaves.states;
  set_thread_count(0);
  CHECK(a == b);
  auto other = spec;
  other.seed = 13;
  CHECK(simulate_dataset(other).leaves.states != a);

  Rng rng(99);
  Rng copy = rng;
  const auto pseudo = simulate_pseudo_data(tree, spec.state, 1000, rng);
  auto same = spec;
  same.seed = copy();
  CHECK(pseudo.states == simulate_dataset(same).leaves.states);
}

TEST_CASE("shapes and validation")
{
  const Tree tree = test::balanced_tree(3);
  CHECK(simulate_dataset({tree, {{}, Eigen::VectorXd::Ones(1)}, 0, 1}).leaves.site_count() == 0);
  CHECK(simulate_dataset({tree, {{}, Eigen::VectorXd::Ones(1)}, 7, 1}).leaves.sequence_count() == 3);
  CHECK_THROWS(simulate_dataset({tree, {{9}, Eigen::Vector2d(1, 1)}, 7, 1}));
  CHECK_THROWS(simulate_dataset({tree, {{}, Eigen::VectorXd::Constant(1, -1.0)}, 7, 1}));
  CHECK_THROWS(simulate_dataset({tree, {{3}, Eigen::VectorXd::Ones(1)}, 7, 1}));
}

TEST_CASE("two-leaf site patterns follow the joint transition law")
{
  const Tree tree = parse_newick("(a:0.5,b:0.7);");
  const double theta = 1.2;
  const int m = 100000;
  const auto d = simulate_dataset({tree, {{}, Eigen::VectorXd::Constant(1, theta)}, m, 21}).leaves;
  Eigen::Matrix4d counts = Eigen::Matrix4d::Zero();
  for (int j = 0; j < m; ++j)
    counts(d.states(0, j), d.states(1, j)) += 1.0;
  // reversibility: the pair law is stationary times P(t_a + t_b)
  const Eigen::Matrix4d expected = 0.25 * m * JukesCantor<double>(theta).transition_matrix(1.2);
  const double chi2 = ((counts - expected).array().square() / expected.array()).sum();
  const boost::math::chi_squared dist(15);
  CHECK(chi2 < boost::math::quantile(dist, 0.999));
}

TEST_CASE("leaf disagreement increases with the rate")
{
  const Tree tree = test::balanced_tree(8);
  double previous = -1.0;
  for (double theta : {0.1, 0.5, 2.0}) {
    const double d = disagreement(simulate_dataset({tree, {{}, Eigen::VectorXd::Constant(1, theta)}, 5000, 6}).leaves);
    CHECK(d > previous);
    previous = d;
  }
  CHECK(previous < 0.75 + 0.02);
}

TEST_CASE("segments use their own rates")
{
  const Tree tree = test::balanced_tree(8);
  const auto d = simulate_dataset({tree, {{2001}, Eigen::Vector2d(0.1, 2.0)}, 4000, 8}).leaves;
  SequenceData left, right;
  left.states = d.states.leftCols(2000);
  right.states = d.states.rightCols(2000);
  CHECK(disagreement(left) < disagreement(right) - 0.2);
}

TEST_CASE("simulated data favour the generating rate")
{
  const Tree tree = test::balanced_tree(8);
  const LikelihoodEngine engine(tree);
  for (double theta : {0.3, 1.0}) {
    const auto d = simulate_dataset({tree, {{}, Eigen::VectorXd::Constant(1, theta)}, 3000, 10}).leaves;
    const double at = engine.block_log_likelihood(theta, d, 1, 3001);
    CHECK(at > engine.block_log_likelihood(3 * theta, d, 1, 3001));
    CHECK(at > engine.block_log_likelihood(theta / 3, d, 1, 3001));
  }
}

TEST_CASE("neighbouring sites are uncorrelated")
{
  const Tree tree = parse_newick("(a:0.4,b:0.4);");
  const int m = 100000;
  const auto d = simulate_dataset({tree, {{}, Eigen::VectorXd::Constant(1, 1.0)}, m, 31}).leaves;
  Eigen::ArrayXd x(m);
  for (int j = 0; j < m; ++j)
    x[j] = d.states(0, j) == d.states(1, j) ? 1.0 : 0.0;
  const Eigen::ArrayXd c = x - x.mean();
  const double rho = (c.head(m - 1) * c.tail(m - 1)).sum() / c.square().sum();
  CHECK(std::abs(rho) < 0.02);
}
