#include "phylocp/abc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>

#include "phylocp/simulate.hpp"

namespace phylocp {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

int count_within(const std::vector<int>& distances, double tolerance)
{
  return static_cast<int>(std::count_if(distances.begin(), distances.end(), [&](int d) { return d <= tolerance; }));
}

std::vector<int> simulate_distances(const Tree& tree, const ChangePointState& state, const SequenceData& obs, int count,
                                    Rng& rng)
{
  std::vector<int> d(count);
  for (auto& x : d)
    x = summary_distance(simulate_pseudo_data(tree, state, obs.site_count(), rng), obs);
  return d;
}

// Stream tags of the model-selection sampler.
constexpr std::uint64_t kAbcSmcTag = 0x7A6F;
} // namespace

void AbcConfig::validate() const
{
  if (pseudo_datasets < 1)
    throw std::invalid_argument("ABC needs at least one pseudo-dataset per particle");
  if (particles < 1 || steps < 1)
    throw std::invalid_argument("ABC needs N >= 1 and T >= 1");
  if (kernel_sweeps < 0)
    throw std::invalid_argument("kernel sweeps must be nonnegative");
  if (!(terminal_divisor >= 1.0))
    throw std::invalid_argument("terminal tolerance divisor must be at least 1");
  if (max_attempts_per_generation < 1)
    throw std::invalid_argument("attempt budget must be positive");
  if (!tolerances.empty()) {
    if (static_cast<int>(tolerances.size()) != steps + 1)
      throw std::invalid_argument("tolerance schedule must hold T+1 values");
    for (std::size_t t = 1; t < tolerances.size(); ++t)
      if (!(tolerances[t] < tolerances[t - 1]))
        throw std::invalid_argument("tolerance schedule must be strictly decreasing");
    if (!(tolerances.back() > 0.0))
      throw std::invalid_argument("terminal tolerance must be positive");
  }
}

std::vector<double> AbcConfig::schedule(int n, int m) const
{
  validate();
  if (!tolerances.empty())
    return tolerances;
  const double top = static_cast<double>(n) * m;
  if (!(top > 0.0))
    throw std::invalid_argument("default tolerances need n*m > 0");
  if (terminal_divisor == 1.0)
    throw std::invalid_argument("a divisor of 1 gives a constant schedule");
  std::vector<double> eps(steps + 1);
  for (int t = 0; t <= steps; ++t)
    eps[t] = top * std::pow(terminal_divisor, -static_cast<double>(t) / steps);
  eps.back() = top / terminal_divisor;
  return eps;
}

int summary_distance(const SequenceData& sim, const SequenceData& obs)
{
  if (sim.states.rows() != obs.states.rows() || sim.states.cols() != obs.states.cols())
    throw std::invalid_argument("summary distance needs datasets of equal dimensions");
  return static_cast<int>((sim.states.array() != obs.states.array()).count());
}

double abc_weight(const std::vector<int>& distances, double tolerance)
{
  if (distances.empty())
    throw std::invalid_argument("ABC weight needs at least one distance");
  return static_cast<double>(count_within(distances, tolerance)) / static_cast<double>(distances.size());
}

AbcPolicy::AbcPolicy(int k, const SequenceData& obs, const Tree& tree, const PriorSpec& prior,
                     const ProposalSpec& proposals, std::vector<double> tolerances, int pseudo_datasets,
                     int kernel_sweeps)
    : k_(k), obs_(obs), tree_(tree), prior_(prior), proposals_(proposals), tolerances_(std::move(tolerances)),
      pseudo_datasets_(pseudo_datasets), sweeps_(kernel_sweeps)
{
  if (obs.sequence_count() != tree.leaf_count())
    throw std::invalid_argument("data rows must match the tree leaves");
}

std::vector<int> AbcPolicy::simulate_distances(const ChangePointState& state, Rng& rng) const
{
  return phylocp::simulate_distances(tree_, state, obs_, pseudo_datasets_, rng);
}

AbcParticle AbcPolicy::initial(Rng& rng) const
{
  const int m = obs_.site_count();
  AbcParticle p;
  p.state = sample_prior(k_, prior_, m, rng);
  p.log_prior = log_conditional_prior(p.state, prior_, m);
  p.distances = simulate_distances(p.state, rng);
  return p;
}

double AbcPolicy::log_incremental_weight(const AbcParticle& p, int t) const
{
  const int now = count_within(p.distances, tolerances_[t]);
  if (now == 0)
    return kNegInf;
  // a resampled particle always had positive weight at the previous tolerance
  const int before = count_within(p.distances, tolerances_[t - 1]);
  return std::log(static_cast<double>(now) / static_cast<double>(before));
}

void AbcPolicy::update(AbcParticle& p, ChangePointState candidate, double log_q_forward, double log_q_reverse,
                       double tolerance, Rng& rng) const
{
  const int m = obs_.site_count();
  const double lp = log_conditional_prior(candidate, prior_, m);
  if (lp == kNegInf)
    return;
  auto distances = simulate_distances(candidate, rng);
  const int hits_new = count_within(distances, tolerance);
  if (hits_new == 0)
    return;
  const int hits_old = count_within(p.distances, tolerance);
  const double log_alpha = hits_old == 0 ? 0.0
                                         : std::log(static_cast<double>(hits_new) / hits_old) + lp - p.log_prior +
                                               log_q_reverse - log_q_forward;
  if (log_alpha >= 0.0 || std::log(uniform01(rng)) < log_alpha) {
    p.state = std::move(candidate);
    p.log_prior = lp;
    p.distances = std::move(distances);
  }
}

void AbcPolicy::move(AbcParticle& p, int t, Rng& rng) const
{
  const double eps = tolerances_[t];
  for (int sweep = 0; sweep < sweeps_; ++sweep) {
    auto rates = propose_rates(p.state.theta, proposals_.rate_sigma, rng);
    update(p, ChangePointState{p.state.s, std::move(rates.value)}, rates.log_q_forward, rates.log_q_reverse, eps, rng);
    if (p.state.k() == 0)
      continue;
    auto cps = propose_changepoints(p.state.s, proposals_.s_window, obs_.site_count(), rng);
    if (cps)
      update(p, ChangePointState{std::move(cps->value), p.state.theta}, cps->log_q_forward, cps->log_q_reverse, eps,
             rng);
  }
}

AbcEvidence abc_evidence_estimate(int k, const SequenceData& obs, const Tree& tree, const PriorSpec& prior,
                                  const ProposalSpec& proposals, const AbcConfig& config, std::uint64_t seed)
{
  if (!prior.supports(k))
    throw std::invalid_argument("k outside the prior support");
  const auto eps = config.schedule(obs.sequence_count(), obs.site_count());
  const AbcPolicy policy(k, obs, tree, prior, proposals, eps, config.pseudo_datasets, config.kernel_sweeps);
  SmcOptions options;
  options.particles = config.particles;
  // the tempering schedule only fixes the step count here
  options.schedule = make_schedule(config.steps, 1.0);
  options.seed = seed;
  auto system = run_sampler(policy, options);
  const double log_evidence = system.log_evidence();
  return {std::move(system), log_evidence};
}

EvidenceEstimator make_abc_estimator(const AbcConfig& config, const PriorSpec& prior, const ProposalSpec& proposals,
                                     const SequenceData& obs, const Tree& tree)
{
  return [&config, &prior, &proposals, &obs, &tree](int k, std::uint64_t seed) -> std::optional<EvidenceDraw> {
    try {
      auto result = abc_evidence_estimate(k, obs, tree, prior, proposals, config, seed);
      Rng pick = make_stream(seed, kResampleStream, kResampleStream);
      const int i = select_particle(result.system, pick);
      return EvidenceDraw{result.system.final_particles()[i].state, result.log_evidence};
    } catch (const DegenerateWeights&) {
      return std::nullopt;
    }
  };
}

std::vector<ChainRecord> run_pmmh_abc(const PmmhConfig& outer, const AbcConfig& abc, const SequenceData& obs,
                                      const Tree& tree)
{
  outer.validate();
  abc.validate();
  PmmhConfig config = outer;
  config.particles = abc.particles;
  config.steps = abc.steps;
  const PmmhSampler sampler(config, make_abc_estimator(abc, config.prior, config.proposals, obs, tree));
  return sampler.run();
}

ToleranceStall::ToleranceStall(int generation, double tolerance, int accepted)
    : std::runtime_error("ABC-SMC stalled at generation " + std::to_string(generation) + " (tolerance " +
                         std::to_string(tolerance) + ", " + std::to_string(accepted) + " acceptances)"),
      generation_(generation), tolerance_(tolerance)
{
}

namespace {

struct Candidate {
  bool accepted = false;
  ChangePointState state;
  int hits = 0;
};

struct Population {
  std::vector<ChangePointState> states;
  std::vector<double> weights; // normalized
  std::map<int, double> marginal;
  std::map<int, std::vector<int>> members;

  void index()
  {
    marginal.clear();
    members.clear();
    for (std::size_t i = 0; i < states.size(); ++i) {
      marginal[states[i].k()] += weights[i];
      members[states[i].k()].push_back(static_cast<int>(i));
    }
  }
};

std::vector<double> normalize_log(const std::vector<double>& log_w)
{
  const double top = *std::max_element(log_w.begin(), log_w.end());
  std::vector<double> w(log_w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    w[i] = std::exp(log_w[i] - top);
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w)
    x /= total;
  return w;
}

double kernel_log_density(const ChangePointState& from, const ChangePointState& to, const ProposalSpec& proposals,
                          int m)
{
  return changepoint_proposal_log_prob(from.s, to.s, proposals.s_window, m) +
         rate_proposal_log_density(from.theta, to.theta, proposals.rate_sigma);
}

} // namespace

AbcSmcResult run_abc_smc_model_selection(const AbcConfig& config, const PriorSpec& prior, const ProposalSpec& proposals,
                                         const SequenceData& obs, const Tree& tree, std::uint64_t seed)
{
  prior.validate();
  proposals.validate();
  if (obs.sequence_count() != tree.leaf_count())
    throw std::invalid_argument("data rows must match the tree leaves");
  const auto eps = config.schedule(obs.sequence_count(), obs.site_count());
  const int m = obs.site_count();
  const int n_target = config.particles;
  const int batch = std::max(n_target, 16);

  AbcSmcResult result;
  Population previous;

  for (int t = 0; t < static_cast<int>(eps.size()); ++t) {
    Population current;
    std::vector<int> hits;
    long attempts = 0;

    while (static_cast<int>(current.states.size()) < n_target && attempts < config.max_attempts_per_generation) {
      const long count = std::min<long>(batch, config.max_attempts_per_generation - attempts);
      std::vector<Candidate> candidates(count);
      std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
      for (long a = 0; a < count; ++a) {
        try {
          Rng rng = make_stream(seed, kAbcSmcTag + static_cast<std::uint64_t>(t),
                                static_cast<std::uint64_t>(attempts + a));
          Candidate& c = candidates[a];
          if (t == 0) {
            const auto& ks = prior.k_support;
            c.state = sample_prior(ks[uniform_int(rng, 0, static_cast<int>(ks.size()) - 1)], prior, m, rng);
          } else {
            // MS2: model from the previous marginal, perturbed by the k window
            std::vector<int> ks;
            Eigen::ArrayXd lw(static_cast<Eigen::Index>(previous.marginal.size()));
            for (const auto& [k, p] : previous.marginal) {
              lw[static_cast<Eigen::Index>(ks.size())] = std::log(p);
              ks.push_back(k);
            }
            const int k0 = ks[sample_index(lw, rng)];
            const int k = propose_k(k0, prior.k_min(), prior.k_max(), proposals.k_window, rng).value;
            const auto it = previous.members.find(k);
            if (!prior.supports(k) || it == previous.members.end())
              continue;
            const auto& idx = it->second;
            Eigen::ArrayXd pw(static_cast<Eigen::Index>(idx.size()));
            for (std::size_t j = 0; j < idx.size(); ++j)
              pw[static_cast<Eigen::Index>(j)] = std::log(previous.weights[idx[j]]);
            const ChangePointState& source = previous.states[idx[sample_index(pw, rng)]];
            ChangePointState next{source.s, propose_rates(source.theta, proposals.rate_sigma, rng).value};
            if (source.k() > 0) {
              auto cps = propose_changepoints(source.s, proposals.s_window, m, rng);
              if (!cps)
                continue;
              next.s = std::move(cps->value);
            }
            if (log_prior(next, prior, m) == kNegInf)
              continue;
            c.state = std::move(next);
          }
          c.hits = count_within(simulate_distances(tree, c.state, obs, config.pseudo_datasets, rng), eps[t]);
          c.accepted = c.hits > 0;
        } catch (...) {
#pragma omp critical(phylocp_abc_failure)
          failure = std::current_exception();
        }
      }
      if (failure)
        std::rethrow_exception(failure);

      // keep acceptances in attempt order so the result ignores scheduling
      for (long a = 0; a < count; ++a) {
        ++attempts;
        if (!candidates[a].accepted)
          continue;
        current.states.push_back(std::move(candidates[a].state));
        hits.push_back(candidates[a].hits);
        if (static_cast<int>(current.states.size()) == n_target)
          break;
      }
    }
    if (current.states.empty())
      throw ToleranceStall(t, eps[t], 0);

    // MS3: prior times acceptance count over the mixture of kernels
    std::vector<double> log_w(current.states.size());
    for (std::size_t i = 0; i < current.states.size(); ++i) {
      const auto& st = current.states[i];
      if (t == 0) {
        log_w[i] = std::log(static_cast<double>(hits[i]));
        continue;
      }
      const int k = st.k();
      double model_mix = 0.0;
      for (const auto& [k_prev, p] : previous.marginal)
        model_mix += p * std::exp(k_proposal_log_prob(k_prev, k, prior.k_min(), prior.k_max(), proposals.k_window));
      const auto& idx = previous.members.at(k);
      double param_mix = 0.0;
      for (int j : idx)
        param_mix += previous.weights[j] * std::exp(kernel_log_density(previous.states[j], st, proposals, m));
      param_mix /= previous.marginal.at(k);
      log_w[i] = log_prior(st, prior, m) + std::log(static_cast<double>(hits[i])) - std::log(model_mix) -
                 std::log(param_mix);
    }
    current.weights = normalize_log(log_w);
    current.index();
    result.generations.push_back({eps[t], attempts, static_cast<int>(current.states.size())});
    previous = std::move(current);
  }

  for (std::size_t i = 0; i < previous.states.size(); ++i)
    result.population.push_back({previous.states[i], previous.weights[i]});
  for (const auto& [k, idx] : previous.members) {
    double sum = 0.0, sum_sq = 0.0;
    for (int j : idx) {
      sum += previous.weights[j];
      sum_sq += previous.weights[j] * previous.weights[j];
    }
    result.model_probs[k] = sum;
    result.model_ess[k] = sum * sum / sum_sq;
    result.model_counts[k] = static_cast<int>(idx.size());
  }
  for (int k : prior.k_support)
    result.model_probs.try_emplace(k, 0.0);
  return result;
}

} // namespace phylocp
