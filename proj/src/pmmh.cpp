#include "phylocp/pmmh.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace phylocp {

namespace {

constexpr std::uint64_t kInitStream = 0x696e6974; // "init"
constexpr std::uint64_t kStepStream = 0x73746570; // "step"

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
  return std::chrono::duration<double>(Clock::now() - start).count();
}

} // namespace

void PmmhConfig::validate() const
{
  if (iterations < 1 && !(time_budget_seconds > 0.0))
    throw std::invalid_argument("PMMH needs at least one iteration or a time budget");
  if (particles < 1 || steps < 1 || kernel_sweeps < 0 || max_init_retries < 1)
    throw std::invalid_argument("invalid SMC settings");
  proposals.validate();
  prior.validate();
}

double pmmh_log_acceptance(double log_evidence_current, double log_evidence_proposed, double log_prior_k_current,
                           double log_prior_k_proposed, double log_q_forward, double log_q_reverse)
{
  const double log_ratio = (log_evidence_proposed + log_prior_k_proposed) - (log_evidence_current + log_prior_k_current) +
                           log_q_reverse - log_q_forward;
  if (std::isnan(log_ratio))
    return -std::numeric_limits<double>::infinity();
  return std::min(0.0, log_ratio);
}

PmmhSampler::PmmhSampler(PmmhConfig config, EvidenceEstimator estimator)
    : config_(std::move(config)), estimator_(std::move(estimator))
{
  config_.validate();
}

ChainRecord PmmhSampler::init() const
{
  const auto start = Clock::now();
  const auto& support = config_.prior.k_support;
  for (int attempt = 0; attempt < config_.max_init_retries; ++attempt) {
    Rng rng = make_stream(config_.seed, kInitStream, static_cast<std::uint64_t>(attempt));
    const int k = support[uniform_int(rng, 0, static_cast<int>(support.size()) - 1)];
    auto draw = estimator_(k, rng());
    if (!draw)
      continue;
    ChainRecord record;
    record.iteration = 0;
    record.state = std::move(draw->state);
    record.log_evidence = draw->log_evidence;
    record.accepted = false;
    record.proposal_k = k;
    record.wall_time = seconds_since(start);
    return record;
  }
  throw DegenerateWeights(0, "no usable evidence estimate in " + std::to_string(config_.max_init_retries) +
                                 " initialization attempts");
}

ChainRecord PmmhSampler::step(const ChainRecord& current) const
{
  const auto start = Clock::now();
  const int r = current.iteration + 1;
  Rng rng = make_stream(config_.seed, kStepStream, static_cast<std::uint64_t>(r));
  const auto& prior = config_.prior;
  const int k = current.state.k();
  const auto proposal = propose_k(k, prior.k_min(), prior.k_max(), config_.proposals.k_window, rng);
  const std::uint64_t smc_seed = rng();
  const double u = uniform01(rng);

  ChainRecord next = current;
  next.iteration = r;
  next.accepted = false;
  next.proposal_k = proposal.value;

  if (prior.supports(proposal.value)) {
    if (auto draw = estimator_(proposal.value, smc_seed)) {
      const double log_alpha = pmmh_log_acceptance(current.log_evidence, draw->log_evidence, prior.log_prob_k(k),
                                                   prior.log_prob_k(proposal.value), proposal.log_q_forward,
                                                   proposal.log_q_reverse);
      if (std::log(u) < log_alpha) {
        next.state = std::move(draw->state);
        next.log_evidence = draw->log_evidence;
        next.accepted = true;
      }
    }
  }
  next.wall_time = current.wall_time + seconds_since(start);
  return next;
}

std::vector<ChainRecord> PmmhSampler::run() const
{
  const auto start = Clock::now();
  const bool budgeted = config_.time_budget_seconds > 0.0;
  std::vector<ChainRecord> chain;
  chain.push_back(init());
  while (true) {
    if (config_.iterations > 0 && static_cast<int>(chain.size()) >= config_.iterations)
      break;
    if (budgeted && seconds_since(start) >= config_.time_budget_seconds)
      break;
    chain.push_back(step(chain.back()));
  }
  return chain;
}

EvidenceEstimator make_smc_estimator(const PmmhConfig& config, const SequenceData& data, const LikelihoodEngine& engine)
{
  return [&config, &data, &engine](int k, std::uint64_t seed) -> std::optional<EvidenceDraw> {
    SmcOptions options;
    options.particles = config.particles;
    options.schedule = make_schedule(config.steps, config.schedule_exponent);
    options.seed = seed;
    options.systematic_resampling = config.systematic_resampling;
    try {
      const auto result = run_smc(k, data, engine, config.prior, config.proposals, options, config.kernel_sweeps);
      Rng rng = make_stream(seed, kResampleStream, kResampleStream);
      const int l = select_particle(result.system, rng);
      return EvidenceDraw{result.system.final_particles()[l].state, result.log_evidence};
    } catch (const DegenerateWeights&) {
      return std::nullopt;
    }
  };
}

ChainRecord pmmh_init(const PmmhConfig& config, const SequenceData& data, const Tree& tree)
{
  const LikelihoodEngine engine(tree, config.g);
  return PmmhSampler(config, make_smc_estimator(config, data, engine)).init();
}

ChainRecord pmmh_step(const ChainRecord& current, const PmmhConfig& config, const SequenceData& data, const Tree& tree)
{
  const LikelihoodEngine engine(tree, config.g);
  return PmmhSampler(config, make_smc_estimator(config, data, engine)).step(current);
}

std::vector<ChainRecord> run_pmmh(const PmmhConfig& config, const SequenceData& data, const Tree& tree)
{
  const LikelihoodEngine engine(tree, config.g);
  return PmmhSampler(config, make_smc_estimator(config, data, engine)).run();
}

double acceptance_ratio(const std::vector<ChainRecord>& chain)
{
  if (chain.size() < 2)
    return std::numeric_limits<double>::quiet_NaN();
  std::size_t accepted = 0;
  for (std::size_t r = 1; r < chain.size(); ++r)
    accepted += chain[r].accepted ? 1 : 0;
  return static_cast<double>(accepted) / static_cast<double>(chain.size() - 1);
}

std::map<int, double> visit_frequencies(const std::vector<ChainRecord>& chain, int burn_in)
{
  std::map<int, double> freq;
  if (burn_in < 0 || burn_in >= static_cast<int>(chain.size()))
    throw std::invalid_argument("burn-in must be smaller than the chain length");
  for (std::size_t r = burn_in; r < chain.size(); ++r)
    freq[chain[r].state.k()] += 1.0;
  for (auto& [k, f] : freq)
    f /= static_cast<double>(chain.size() - burn_in);
  return freq;
}

} // namespace phylocp
