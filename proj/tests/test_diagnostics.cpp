#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "phylocp/chain_io.hpp"
#include "phylocp/diagnostics.hpp"
#include "test_support.hpp"

using namespace phylocp;

namespace {

std::vector<double> read_column(const std::string& name)
{
  std::ifstream in(test::fixture_path(name));
  REQUIRE(in);
  std::vector<double> x;
  double v;
  while (in >> v)
    x.push_back(v);
  return x;
}

nlohmann::json expected()
{
  return nlohmann::json::parse(test::slurp(test::fixture_path("expected.json")));
}

// Smallest width of any window of sorted samples holding `count` of them.
double brute_min_width(std::vector<double> x, std::size_t count)
{
  std::sort(x.begin(), x.end());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t lo = 0; lo < x.size(); ++lo)
    for (std::size_t hi = lo; hi < x.size(); ++hi)
      if (hi - lo + 1 >= count)
        best = std::min(best, x[hi] - x[lo]);
  return best;
}

std::size_t inside(const std::vector<double>& x, Interval iv)
{
  return static_cast<std::size_t>(std::count_if(x.begin(), x.end(), [&](double v) { return v >= iv.lo && v <= iv.hi; }));
}

} // namespace

TEST_CASE("autocorrelation")
{
  std::vector<double> alt;
  for (int i = 0; i < 1000; ++i)
    alt.push_back(i % 2);
  CHECK(autocorrelation(alt, 0) == doctest::Approx(1.0));
  CHECK(std::abs(autocorrelation(alt, 1) + 1.0) < 2.0 / 1000);
  CHECK(std::isnan(autocorrelation({2.0, 2.0, 2.0}, 1)));
  CHECK_THROWS(autocorrelation(alt, 1000));
  CHECK_THROWS(autocorrelation(alt, -1));

  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  std::vector<double> noise(10000);
  for (auto& v : noise)
    v = normal(rng);
  CHECK(std::abs(autocorrelation(noise, 25)) < 0.03);
  const auto table = acf_table(noise, 30);
  CHECK(table.size() == 31);
  CHECK(table[25] == autocorrelation(noise, 25));
  CHECK(acf_table({1.0, 2.0, 4.0}, 10).size() == 3);
}

TEST_CASE("weighted effective sample size")
{
  CHECK(weighted_ess(std::vector<double>(7, 0.3)) == doctest::Approx(7.0));
  CHECK(weighted_ess({0.0, 0.0, 5.0}) == doctest::Approx(1.0));
  CHECK(weighted_ess({1.0, 1.0, 2.0}) == doctest::Approx(16.0 / 6.0));
  CHECK_THROWS(weighted_ess({0.0, 0.0}));
  CHECK_THROWS(weighted_ess({1.0, -1.0}));
}

TEST_CASE("Geweke scores")
{
  std::vector<double> palindrome;
  for (int i = 0; i < 200; ++i)
    palindrome.push_back(std::sin(0.37 * i) + (i % 7));
  const std::vector<double> rev(palindrome.rbegin(), palindrome.rend());
  palindrome.insert(palindrome.end(), rev.begin(), rev.end());
  CHECK(geweke_z(palindrome, 0.25, 0.25) == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<double> trend(10000);
  std::iota(trend.begin(), trend.end(), 1.0);
  CHECK(std::abs(geweke_z(trend)) > 10.0);

  int within = 0;
  std::normal_distribution<double> normal;
  for (int rep = 0; rep < 200; ++rep) {
    std::mt19937_64 rng(1000 + rep);
    std::vector<double> x(10000);
    for (auto& v : x)
      v = normal(rng);
    within += std::abs(geweke_z(x)) < 3.0;
  }
  CHECK(within >= 198);

  CHECK(std::isnan(geweke_z(std::vector<double>(200, 1.0))));
  CHECK_THROWS(geweke_z(std::vector<double>(50, 1.0)));
  CHECK_THROWS(geweke_z(trend, 0.6, 0.5));
}

TEST_CASE("HPD intervals")
{
  const auto same = hpd_interval(std::vector<double>(30, 4.5));
  CHECK(same.lo == 4.5);
  CHECK(same.hi == 4.5);

  std::vector<double> grid(100);
  std::iota(grid.begin(), grid.end(), 1.0);
  const auto g = hpd_interval(grid);
  CHECK(g.lo == 1.0);
  CHECK(g.hi == 95.0);
  CHECK(inside(grid, g) == 95);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  std::vector<double> x(100000);
  for (auto& v : x)
    v = normal(rng);
  const auto n = hpd_interval(x);
  CHECK(n.lo == doctest::Approx(-1.96).epsilon(0.05 / 1.96));
  CHECK(n.hi == doctest::Approx(1.96).epsilon(0.05 / 1.96));

  CHECK_THROWS(hpd_interval(std::vector<double>(19, 1.0)));
  CHECK_THROWS(hpd_interval(grid, 0.0));
}

TEST_CASE("HPD width is minimal by exhaustive window scan")
{
  std::mt19937_64 rng(17);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  std::uniform_int_distribution<int> small(0, 12);
  for (std::size_t size = 20; size <= 200; size += 9) {
    for (int discrete = 0; discrete < 2; ++discrete) {
      std::vector<double> x(size);
      for (auto& v : x)
        v = discrete ? small(rng) : gamma(rng);
      for (double mass : {0.5, 0.8, 0.95}) {
        const auto iv = hpd_interval(x, mass);
        const auto count = static_cast<std::size_t>(std::ceil(mass * size - 1e-9));
        CHECK(inside(x, iv) >= count);
        CHECK(iv.hi - iv.lo == doctest::Approx(brute_min_width(x, count)).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("quantile and MCSE intervals")
{
  const auto q = quantile_interval({4.0, 1.0, 3.0, 2.0, 5.0}, 0.25, 0.75);
  CHECK(q.lo == doctest::Approx(2.0));
  CHECK(q.hi == doctest::Approx(4.0));
  const auto q2 = quantile_interval({0.0, 10.0}, 0.1, 1.0);
  CHECK(q2.lo == doctest::Approx(1.0));
  CHECK(q2.hi == doctest::Approx(10.0));
  CHECK_THROWS(quantile_interval({}));
  CHECK_THROWS(quantile_interval({1.0}, 0.8, 0.2));

  // batches of 2: means 1.5 and 3.5, S(0) = 2 * 2 = 4
  const auto m = mcse_interval({1.0, 2.0, 3.0, 4.0});
  CHECK(m.lo == doctest::Approx(2.5 - 1.96));
  CHECK(m.hi == doctest::Approx(2.5 + 1.96));
  CHECK(batch_means_spectral_variance({1.0, 2.0, 3.0, 4.0}) == doctest::Approx(4.0));
  CHECK_THROWS(mcse_interval({1.0, 2.0, 3.0}));
  CHECK_THROWS(batch_means_spectral_variance({1.0}));
}

TEST_CASE("shipped fixtures match independently computed values")
{
  const auto e = expected();
  const auto ar = read_column("ar_series.txt");
  REQUIRE(ar.size() == 2000);
  for (const auto& [lag, value] : e["ar"]["acf"].items())
    CHECK(autocorrelation(ar, std::stoi(lag)) == doctest::Approx(value.get<double>()).epsilon(1e-10));
  CHECK(batch_means_spectral_variance(ar) == doctest::Approx(e["ar"]["spectral_variance"].get<double>()).epsilon(1e-10));
  CHECK(chain_ess(ar) == doctest::Approx(e["ar"]["ess"].get<double>()).epsilon(1e-10));
  CHECK(geweke_z(ar) == doctest::Approx(e["ar"]["geweke"].get<double>()).epsilon(1e-9));
  CHECK(geweke_z(ar, 0.2, 0.4) == doctest::Approx(e["ar"]["geweke_02_04"].get<double>()).epsilon(1e-9));
  const auto q = quantile_interval(ar);
  CHECK(q.lo == doctest::Approx(e["ar"]["quantile"][0].get<double>()).epsilon(1e-12));
  CHECK(q.hi == doctest::Approx(e["ar"]["quantile"][1].get<double>()).epsilon(1e-12));
  const auto h = hpd_interval(ar);
  CHECK(h.lo == e["ar"]["hpd95"][0].get<double>());
  CHECK(h.hi == e["ar"]["hpd95"][1].get<double>());
  const auto m = mcse_interval(ar);
  CHECK(m.lo == doctest::Approx(e["ar"]["mcse"][0].get<double>()).epsilon(1e-10));
  CHECK(m.hi == doctest::Approx(e["ar"]["mcse"][1].get<double>()).epsilon(1e-10));

  const auto d = read_column("discrete_samples.txt");
  const auto d95 = hpd_interval(d, 0.95);
  const auto d50 = hpd_interval(d, 0.5);
  CHECK(d95.lo == e["discrete"]["hpd95"][0].get<double>());
  CHECK(d95.hi == e["discrete"]["hpd95"][1].get<double>());
  CHECK(d50.lo == e["discrete"]["hpd50"][0].get<double>());
  CHECK(d50.hi == e["discrete"]["hpd50"][1].get<double>());

  CHECK(weighted_ess(read_column("weights.txt")) == doctest::Approx(e["weights"]["ess"].get<double>()).epsilon(1e-12));
}

TEST_CASE("hand-built six-record chain")
{
  std::ifstream in(test::fixture_path("six_records.csv"));
  const auto file = read_chain_csv(in);
  CHECK(file.meta.at("config_hash") == "0123456789abcdef");
  CHECK(file.meta.at("seed") == "7");
  REQUIRE(file.records.size() == 6);
  const auto s = summarize_chain(file.records, 1, {1});
  CHECK(s.records == 6);
  CHECK(s.burn_in == 1);
  CHECK(s.model_probs.at(0) == doctest::Approx(0.2));
  CHECK(s.model_probs.at(1) == doctest::Approx(0.8));
  CHECK(s.sample_counts.at(0) == 1);
  CHECK(s.sample_counts.at(1) == 4);
  CHECK(s.acceptance_ratio == doctest::Approx(0.8));
  // k after burn-in: 1 1 1 0 1
  CHECK(s.acf.at(1) == doctest::Approx(-0.3));
  CHECK(s.ess_k == doctest::Approx(3.2));
  CHECK(std::isnan(s.geweke_k));

  const auto& s1 = s.parameters.at("s1|k=1");
  CHECK(s1.samples == 4);
  CHECK(s1.mean == doctest::Approx(21.5));
  CHECK(s1.quantile->lo == doctest::Approx(20.0));
  CHECK(s1.quantile->hi == doctest::Approx(23.85));
  CHECK_FALSE(s1.hpd.has_value());
  CHECK(s1.mcse->lo == doctest::Approx(21.5 - 2.94));
  CHECK(s1.mcse->hi == doctest::Approx(21.5 + 2.94));
  CHECK(s.parameters.at("theta1|k=1").mean == doctest::Approx(0.6));
  CHECK(s.parameters.at("theta2|k=1").mean == doctest::Approx(0.9));
  const auto& t0 = s.parameters.at("theta1|k=0");
  CHECK(t0.mean == doctest::Approx(0.4));
  CHECK_FALSE(t0.mcse.has_value());
  CHECK(s.parameters.size() == 4);

  CHECK_THROWS(summarize_chain(file.records, 6));
}

TEST_CASE("summaries of constant and long chains")
{
  std::vector<ChainRecord> chain(300);
  for (int r = 0; r < 300; ++r) {
    chain[r].iteration = r;
    chain[r].state = {{10 + r % 3}, Eigen::Vector2d(0.5, 0.7)};
    chain[r].accepted = r % 2;
  }
  const auto s = summarize_chain(chain, 50);
  CHECK(s.model_probs.size() == 1);
  CHECK(s.model_probs.at(1) == 1.0);
  CHECK(s.sample_counts.at(1) == 250);
  CHECK(std::isnan(s.acf.at(25)));
  const auto& sp = s.parameters.at("s1|k=1");
  CHECK(sp.hpd.has_value());
  CHECK(sp.hpd->lo == 10.0);
  CHECK(sp.hpd->hi == 12.0);
  const auto hist = integer_histogram(changepoint_samples(chain, 50, 1, 1));
  REQUIRE(hist.size() == 3);
  CHECK(hist[0].first == 10);
  CHECK(hist[0].second + hist[1].second + hist[2].second == 250);
  CHECK_THROWS(changepoint_samples(chain, 0, 1, 2));
  CHECK_THROWS(rate_samples(chain, 0, 1, 3));
  CHECK(rate_samples(chain, 0, 2, 1).empty());
}

TEST_CASE("kernel density integrates to one")
{
  std::mt19937_64 rng(9);
  std::gamma_distribution<double> gamma(3.0, 0.2);
  std::vector<double> x(500);
  for (auto& v : x)
    v = gamma(rng);
  const auto grid = kernel_density(x);
  CHECK(grid.x.size() == 200);
  double area = 0.0;
  for (std::size_t i = 1; i < grid.x.size(); ++i)
    area += 0.5 * (grid.density[i] + grid.density[i - 1]) * (grid.x[i] - grid.x[i - 1]);
  CHECK(area == doctest::Approx(1.0).epsilon(0.01));
  CHECK(grid.bandwidth > 0.0);
  CHECK_THROWS(kernel_density({1.0}));
}

TEST_CASE("chain CSV round trip and parse errors")
{
  std::vector<ChainRecord> chain(3);
  chain[0] = {0, {{}, Eigen::VectorXd::Constant(1, 0.123456789012345)}, -1e300, false, 0, 0.5};
  chain[1] = {1, {{4, 9}, Eigen::Vector3d(0.1, 2.0 / 3.0, 7.0)}, -std::numeric_limits<double>::infinity(), true, 2, 0.75};
  chain[2] = {2, {{4, 9}, Eigen::Vector3d(0.1, 2.0 / 3.0, 7.0)}, -12.25, false, 0, 1.0};
  std::stringstream io;
  write_chain_csv(io, chain, {{"config_hash", "abc"}, {"seed", "3"}});
  const auto back = read_chain_csv(io);
  CHECK(back.meta.at("config_hash") == "abc");
  REQUIRE(back.records.size() == 3);
  for (int r = 0; r < 3; ++r) {
    CHECK(back.records[r].iteration == chain[r].iteration);
    CHECK(back.records[r].state == chain[r].state);
    CHECK(back.records[r].log_evidence == chain[r].log_evidence);
    CHECK(back.records[r].accepted == chain[r].accepted);
    CHECK(back.records[r].proposal_k == chain[r].proposal_k);
    CHECK(back.records[r].wall_time == chain[r].wall_time);
  }

  const std::string header = "iteration,k,s,theta,log_evidence,accepted,proposal_k,cumulative_seconds\n";
  const auto line_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_chain_csv(in);
    } catch (const ChainParseError& e) {
      return e.line();
    }
    return -1;
  };
  CHECK(line_of("# seed=1\n" + header + "0,0,,0.5,-1,0,0,0\n0,1,,0.5,-1,0,0,0\n") == 4);
  CHECK(line_of(header + "0,0,,0.5,-1,0,0\n") == 2);
  CHECK(line_of(header + "0,0,,0.5,-1,0,0,0\n1,1,3,0.5;x,-1,1,1,0\n") == 3);
  CHECK(line_of(header + "0,0,,0.5,-1,2,0,0\n") == 2);
  CHECK(line_of("0,0,,0.5,-1,0,0,0\n") == 1);
  CHECK(line_of("") >= 0);
}
