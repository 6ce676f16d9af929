#include "phylocp/changepoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <stdexcept>

namespace phylocp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_binomial(int n, int k)
{
  if (k == 0)
    return 0.0;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

} // namespace

bool is_valid(const ChangePointState& state, int m, bool allow_zero_rates)
{
  if (state.theta.size() != state.k() + 1)
    return false;
  int prev = 1;
  for (int site : state.s) {
    if (site <= prev || site > m)
      return false;
    prev = site;
  }
  for (double t : state.theta)
    if (!(allow_zero_rates ? t >= 0.0 : t > 0.0) || !std::isfinite(t))
      return false;
  return true;
}

void PriorSpec::validate() const
{
  if (k_support.empty())
    throw std::invalid_argument("prior k support must be nonempty");
  for (int k : k_support)
    if (k < 0)
      throw std::invalid_argument("prior k support must be nonnegative");
  if (std::set<int>(k_support.begin(), k_support.end()).size() != k_support.size())
    throw std::invalid_argument("prior k support has duplicates");
  if (!(gamma_shape > 0.0) || !(gamma_scale > 0.0))
    throw std::invalid_argument("gamma shape and scale must be positive");
}

int PriorSpec::k_min() const { return *std::min_element(k_support.begin(), k_support.end()); }
int PriorSpec::k_max() const { return *std::max_element(k_support.begin(), k_support.end()); }

bool PriorSpec::supports(int k) const
{
  return std::find(k_support.begin(), k_support.end(), k) != k_support.end();
}

double PriorSpec::log_prob_k(int k) const
{
  const std::set<int> distinct(k_support.begin(), k_support.end());
  return distinct.contains(k) ? -std::log(static_cast<double>(distinct.size())) : kNegInf;
}

void ProposalSpec::validate() const
{
  if (k_window < 3 || k_window % 2 == 0 || s_window < 3 || s_window % 2 == 0)
    throw std::invalid_argument("proposal windows must be odd and greater than 1");
  if (!(rate_sigma > 0.0))
    throw std::invalid_argument("rate proposal sigma must be positive");
}

double log_gamma_density(double x, double shape, double scale)
{
  if (!(x > 0.0))
    return kNegInf;
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

double log_conditional_prior(const ChangePointState& state, const PriorSpec& prior, int m)
{
  if (!is_valid(state, m))
    return kNegInf;
  double lp = -log_binomial(m - 1, state.k());
  for (double t : state.theta)
    lp += log_gamma_density(t, prior.gamma_shape, prior.gamma_scale);
  return lp;
}

double log_prior(const ChangePointState& state, const PriorSpec& prior, int m)
{
  const double lk = prior.log_prob_k(state.k());
  if (lk == kNegInf)
    return kNegInf;
  return lk + log_conditional_prior(state, prior, m);
}

ChangePointState sample_prior(int k, const PriorSpec& prior, int m, Rng& rng)
{
  if (k < 0 || k > std::max(m - 1, 0))
    throw std::invalid_argument("cannot place " + std::to_string(k) + " change-points on " + std::to_string(m) + " sites");
  // Floyd's subset sampling over the m-1 eligible sites {2..m}.
  std::set<int> chosen;
  const int pool = m - 1;
  for (int j = pool - k + 1; j <= pool; ++j) {
    const int t = uniform_int(rng, 1, j);
    chosen.insert(chosen.contains(t + 1) ? j + 1 : t + 1);
  }
  ChangePointState state;
  state.s.assign(chosen.begin(), chosen.end());
  state.theta.resize(k + 1);
  std::gamma_distribution<double> gamma(prior.gamma_shape, prior.gamma_scale);
  for (Eigen::Index j = 0; j <= k; ++j) {
    double draw = 0.0;
    while (!(draw > 0.0))
      draw = gamma(rng);
    state.theta[j] = draw;
  }
  return state;
}

ChangePointState birth_death_adjust(const ChangePointState&, int k_new, const PriorSpec& prior, int m, Rng& rng)
{
  return sample_prior(k_new, prior, m, rng);
}

std::vector<int> window_support(int center, int window, int lo, int hi)
{
  const int half = (window - 1) / 2;
  std::vector<int> support;
  for (int v = std::max(lo, center - half); v <= std::min(hi, center + half); ++v)
    support.push_back(v);
  return support;
}

double k_proposal_log_prob(int from, int to, int k_min, int k_max, int window)
{
  const auto support = window_support(from, window, k_min, k_max);
  if (std::find(support.begin(), support.end(), to) == support.end())
    return kNegInf;
  return -std::log(static_cast<double>(support.size()));
}

Proposal<int> propose_k(int k, int k_min, int k_max, int window, Rng& rng)
{
  if (k < k_min || k > k_max)
    throw std::invalid_argument("current k outside [k_min, k_max]");
  const auto support = window_support(k, window, k_min, k_max);
  const int next = support[uniform_int(rng, 0, static_cast<int>(support.size()) - 1)];
  return {next, k_proposal_log_prob(k, next, k_min, k_max, window), k_proposal_log_prob(next, k, k_min, k_max, window)};
}

namespace {

std::vector<int> sequential_support(int center, int window, int m, const std::vector<int>& chosen)
{
  auto support = window_support(center, window, 2, m);
  std::erase_if(support, [&](int v) { return std::find(chosen.begin(), chosen.end(), v) != chosen.end(); });
  return support;
}

// Sum over draw orders: position j may take any unused element of `to`
// lying in its (exclusion-reduced) window.
double sequential_prob(const std::vector<int>& from, const std::vector<int>& to, int window, int m,
                       std::vector<int>& chosen, std::vector<bool>& used)
{
  const std::size_t j = chosen.size();
  if (j == from.size())
    return 1.0;
  const auto support = sequential_support(from[j], window, m, chosen);
  if (support.empty())
    return 0.0;
  double total = 0.0;
  for (std::size_t c = 0; c < to.size(); ++c) {
    if (used[c] || std::find(support.begin(), support.end(), to[c]) == support.end())
      continue;
    used[c] = true;
    chosen.push_back(to[c]);
    total += sequential_prob(from, to, window, m, chosen, used);
    chosen.pop_back();
    used[c] = false;
  }
  return total / static_cast<double>(support.size());
}

} // namespace

double changepoint_proposal_log_prob(const std::vector<int>& from, const std::vector<int>& to, int window, int m)
{
  if (from.size() != to.size())
    return kNegInf;
  std::vector<int> chosen;
  std::vector<bool> used(to.size(), false);
  return std::log(sequential_prob(from, to, window, m, chosen, used));
}

std::optional<Proposal<std::vector<int>>> propose_changepoints(const std::vector<int>& s, int window, int m, Rng& rng)
{
  std::vector<int> chosen;
  chosen.reserve(s.size());
  for (int center : s) {
    const auto support = sequential_support(center, window, m, chosen);
    if (support.empty())
      return std::nullopt;
    chosen.push_back(support[uniform_int(rng, 0, static_cast<int>(support.size()) - 1)]);
  }
  std::sort(chosen.begin(), chosen.end());
  const double fwd = changepoint_proposal_log_prob(s, chosen, window, m);
  const double rev = changepoint_proposal_log_prob(chosen, s, window, m);
  return Proposal<std::vector<int>>{std::move(chosen), fwd, rev};
}

double rate_proposal_log_density(const Eigen::VectorXd& from, const Eigen::VectorXd& to, double sigma)
{
  if (from.size() != to.size())
    return kNegInf;
  if ((to.array() <= 0.0).any())
    return kNegInf;
  const Eigen::ArrayXd log_to = to.array().log();
  const Eigen::ArrayXd z = (log_to - from.array().log()) / sigma;
  const double norm = std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi);
  return (-log_to - norm - 0.5 * z.square()).sum();
}

Proposal<Eigen::VectorXd> propose_rates(const Eigen::VectorXd& theta, double sigma, Rng& rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd next(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j)
    next[j] = theta[j] * std::exp(sigma * normal(rng));
  return {next, rate_proposal_log_density(theta, next, sigma), rate_proposal_log_density(next, theta, sigma)};
}

} // namespace phylocp
