#ifndef PHYLOCP_PMMH_HPP
#define PHYLOCP_PMMH_HPP

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <vector>

#include "phylocp/changepoint.hpp"
#include "phylocp/likelihood.hpp"
#include "phylocp/sequence.hpp"
#include "phylocp/smc.hpp"
#include "phylocp/tree.hpp"

namespace phylocp {

struct PmmhConfig {
  int iterations = 1000;
  /// Stop once this many seconds have elapsed (0 disables the budget).
  double time_budget_seconds = 0.0;
  int particles = 20;
  int steps = 10;
  double schedule_exponent = 2.0;
  int kernel_sweeps = 1;
  bool systematic_resampling = false;
  ProposalSpec proposals;
  PriorSpec prior;
  int g = 1;
  std::uint64_t seed = 1;
  int max_init_retries = 10;

  void validate() const;
};

struct ChainRecord {
  int iteration = 0;
  ChangePointState state;
  double log_evidence = 0.0;
  bool accepted = false;
  int proposal_k = 0;
  /// Cumulative seconds since the start of the run.
  double wall_time = 0.0;
};

/// One run of an evidence estimator at dimension k: the selected particle
/// and log p^N(x | k). nullopt signals a degenerate estimate.
struct EvidenceDraw {
  ChangePointState state;
  double log_evidence;
};
using EvidenceEstimator = std::function<std::optional<EvidenceDraw>(int k, std::uint64_t seed)>;

/// log of the PMMH acceptance probability
/// min(1, p^N(x|k') p(k') q(k|k') / (p^N(x|k) p(k) q(k'|k))).
double pmmh_log_acceptance(double log_evidence_current, double log_evidence_proposed, double log_prior_k_current,
                           double log_prior_k_proposed, double log_q_forward, double log_q_reverse);

/// Trans-dimensional PMMH over k. Every proposal runs a fresh estimator at
/// k' (even when k' = k); the incumbent's evidence estimate is stored and
/// never refreshed.
class PmmhSampler {
 public:
  PmmhSampler(PmmhConfig config, EvidenceEstimator estimator);

  ChainRecord init() const;
  /// Iteration r = current.iteration + 1; all randomness comes from the
  /// stream (seed, r).
  ChainRecord step(const ChainRecord& current) const;
  /// Iteration or time budget, whichever ends first.
  std::vector<ChainRecord> run() const;

  const PmmhConfig& config() const noexcept { return config_; }

 private:
  PmmhConfig config_;
  EvidenceEstimator estimator_;
};

/// Evidence estimator backed by the tempered SMC sampler. References must
/// outlive the returned function.
EvidenceEstimator make_smc_estimator(const PmmhConfig& config, const SequenceData& data, const LikelihoodEngine& engine);

ChainRecord pmmh_init(const PmmhConfig& config, const SequenceData& data, const Tree& tree);
ChainRecord pmmh_step(const ChainRecord& current, const PmmhConfig& config, const SequenceData& data, const Tree& tree);
std::vector<ChainRecord> run_pmmh(const PmmhConfig& config, const SequenceData& data, const Tree& tree);

/// Accepted steps divided by (records - 1); the initial record is not a step.
double acceptance_ratio(const std::vector<ChainRecord>& chain);
std::map<int, double> visit_frequencies(const std::vector<ChainRecord>& chain, int burn_in = 0);

} // namespace phylocp

#endif
