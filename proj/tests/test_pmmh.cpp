#include <doctest.h>

#include <chrono>
#include <cmath>
#include <random>
#include <thread>

#include "phylocp/pmmh.hpp"
#include "phylocp/simulate.hpp"
#include "test_support.hpp"

using namespace phylocp;

namespace {

PmmhConfig three_models(int iterations)
{
  PmmhConfig c;
  c.iterations = iterations;
  c.prior.k_support = {0, 1, 2};
  c.seed = 5;
  return c;
}

ChangePointState dummy_state(int k)
{
  std::vector<int> s;
  for (int j = 0; j < k; ++j)
    s.push_back(2 + j);
  return {s, Eigen::VectorXd::Ones(k + 1)};
}

// Evidence 1, 2, 5 for k = 0, 1, 2; optional mean-one log-normal noise.
EvidenceEstimator fixed_estimator(double noise_sd)
{
  return [noise_sd](int k, std::uint64_t seed) -> std::optional<EvidenceDraw> {
    static const double z[] = {1.0, 2.0, 5.0};
    double log_z = std::log(z[k]);
    if (noise_sd > 0.0) {
      Rng rng(seed);
      std::normal_distribution<double> normal(-0.5 * noise_sd * noise_sd, noise_sd);
      log_z += normal(rng);
    }
    return EvidenceDraw{dummy_state(k), log_z};
  };
}

} // namespace

TEST_CASE("acceptance probability")
{
  CHECK(pmmh_log_acceptance(0.0, std::log(2.0), 0.0, 0.0, 0.0, 0.0) == 0.0);
  CHECK(pmmh_log_acceptance(std::log(2.0), 0.0, 0.0, 0.0, 0.0, 0.0) == doctest::Approx(-std::log(2.0)));
  CHECK(pmmh_log_acceptance(0.0, 0.0, std::log(0.5), std::log(0.25), std::log(0.5), std::log(0.25)) ==
        doctest::Approx(std::log(0.25)));
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(pmmh_log_acceptance(0.0, -inf, 0.0, 0.0, 0.0, 0.0) == -inf);
  CHECK(pmmh_log_acceptance(-inf, -inf, 0.0, 0.0, 0.0, 0.0) == -inf);
}

TEST_CASE("exact estimates reproduce the posterior over k")
{
  const PmmhSampler sampler(three_models(60000), fixed_estimator(0.0));
  const auto chain = sampler.run();
  REQUIRE(chain.size() == 60000);
  const auto freq = visit_frequencies(chain, 1000);
  CHECK(freq.at(0) == doctest::Approx(1.0 / 8).epsilon(0.05));
  CHECK(freq.at(1) == doctest::Approx(2.0 / 8).epsilon(0.05));
  CHECK(freq.at(2) == doctest::Approx(5.0 / 8).epsilon(0.05));
}

TEST_CASE("unbiased noisy estimates leave the target unchanged")
{
  const PmmhSampler sampler(three_models(80000), fixed_estimator(0.5));
  const auto freq = visit_frequencies(sampler.run(), 1000);
  CHECK(freq.at(0) == doctest::Approx(1.0 / 8).epsilon(0.1));
  CHECK(freq.at(2) == doctest::Approx(5.0 / 8).epsilon(0.05));
}

TEST_CASE("chain bookkeeping")
{
  const PmmhSampler sampler(three_models(300), fixed_estimator(0.3));
  const auto chain = sampler.run();
  CHECK(chain.front().iteration == 0);
  CHECK_FALSE(chain.front().accepted);
  int accepted = 0;
  for (std::size_t r = 1; r < chain.size(); ++r) {
    CHECK(chain[r].iteration == static_cast<int>(r));
    CHECK(chain[r].wall_time >= chain[r - 1].wall_time);
    if (chain[r].accepted) {
      ++accepted;
      CHECK(chain[r].state.k() == chain[r].proposal_k);
    } else {
      CHECK(chain[r].state == chain[r - 1].state);
      CHECK(chain[r].log_evidence == chain[r - 1].log_evidence);
    }
  }
  CHECK(acceptance_ratio(chain) == doctest::Approx(accepted / 299.0));
  CHECK(std::isnan(acceptance_ratio({chain.front()})));
  CHECK_THROWS(visit_frequencies(chain, 300));

  // same seed, same chain; each step depends only on its predecessor
  const auto again = sampler.run();
  for (std::size_t r = 0; r < chain.size(); ++r) {
    CHECK(again[r].state == chain[r].state);
    CHECK(again[r].log_evidence == chain[r].log_evidence);
  }
  const auto redo = sampler.step(chain[100]);
  CHECK(redo.state == chain[101].state);
  CHECK(redo.accepted == chain[101].accepted);
}

TEST_CASE("time budget stops the chain")
{
  PmmhConfig c = three_models(0);
  c.time_budget_seconds = 0.2;
  auto slow = [](int k, std::uint64_t) -> std::optional<EvidenceDraw> {
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
    return EvidenceDraw{dummy_state(k), 0.0};
  };
  const auto start = std::chrono::steady_clock::now();
  const auto chain = PmmhSampler(c, slow).run();
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(chain.size() > 5);
  CHECK(elapsed < 1.0);
  c.iterations = 10;
  CHECK(PmmhSampler(c, slow).run().size() == 10);
  c.iterations = 0;
  c.time_budget_seconds = 0.0;
  CHECK_THROWS(PmmhSampler(c, slow));
}

TEST_CASE("degenerate estimates")
{
  auto never = [](int, std::uint64_t) -> std::optional<EvidenceDraw> { return std::nullopt; };
  CHECK_THROWS_AS(PmmhSampler(three_models(10), never).init(), DegenerateWeights);

  // k = 1 never yields an estimate, so it is never visited
  auto partial = [](int k, std::uint64_t) -> std::optional<EvidenceDraw> {
    if (k == 1)
      return std::nullopt;
    return EvidenceDraw{dummy_state(k), 0.0};
  };
  const auto chain = PmmhSampler(three_models(500), partial).run();
  for (const auto& r : chain)
    CHECK(r.state.k() != 1);
}

TEST_CASE("SMC-backed chain on simulated data")
{
  const Tree tree = test::balanced_tree(4);
  const auto data = simulate_dataset({tree, {{8}, Eigen::Vector2d(0.3, 2.0)}, 16, 2}).leaves;
  PmmhConfig c;
  c.iterations = 25;
  c.particles = 10;
  c.steps = 5;
  c.g = 2;
  c.seed = 9;
  const auto chain = run_pmmh(c, data, tree);
  REQUIRE(chain.size() == 25);
  for (const auto& r : chain) {
    CHECK(is_valid(r.state, 16));
    CHECK(std::isfinite(r.log_evidence));
  }
  const auto first = pmmh_init(c, data, tree);
  CHECK(first.state == chain[0].state);
  CHECK(first.log_evidence == chain[0].log_evidence);
  const auto next = pmmh_step(chain[3], c, data, tree);
  CHECK(next.state == chain[4].state);
  CHECK(next.log_evidence == chain[4].log_evidence);
}
