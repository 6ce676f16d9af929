#ifndef PHYLOCP_ABC_HPP
#define PHYLOCP_ABC_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "phylocp/changepoint.hpp"
#include "phylocp/pmmh.hpp"
#include "phylocp/sequence.hpp"
#include "phylocp/smc.hpp"
#include "phylocp/tree.hpp"

namespace phylocp {

struct AbcConfig {
  /// Pseudo-datasets simulated per particle (M).
  int pseudo_datasets = 20;
  int particles = 20;
  int steps = 10;
  /// Explicit tolerances eps_0 > ... > eps_T; empty selects the default
  /// geometric schedule from n*m down to n*m / terminal_divisor.
  std::vector<double> tolerances;
  double terminal_divisor = 3.0;
  int kernel_sweeps = 1;
  /// Candidate budget per generation of the model-selection sampler.
  long max_attempts_per_generation = 100000;

  void validate() const;
  /// eps_0..eps_T for data of n sequences and m sites.
  std::vector<double> schedule(int n, int m) const;
};

/// Number of (sequence, site) cells where the two datasets differ.
int summary_distance(const SequenceData& sim, const SequenceData& obs);

/// Fraction of distances within the tolerance.
double abc_weight(const std::vector<int>& distances, double tolerance);

struct AbcParticle {
  ChangePointState state;
  std::vector<int> distances; // one per pseudo-dataset
  double log_prior = 0.0;
};

/// ABC-SMC at fixed k over a decreasing tolerance schedule. A particle
/// carries M pseudo-datasets; its weight at eps is the fraction within eps,
/// the incremental weight is the ratio of fractions at successive
/// tolerances, and moves are MH steps on the ABC target with freshly
/// simulated pseudo-data.
class AbcPolicy {
 public:
  using Particle = AbcParticle;

  AbcPolicy(int k, const SequenceData& obs, const Tree& tree, const PriorSpec& prior, const ProposalSpec& proposals,
            std::vector<double> tolerances, int pseudo_datasets, int kernel_sweeps);

  Particle initial(Rng& rng) const;
  double log_incremental_weight(const Particle& p, int t) const;
  void move(Particle& p, int t, Rng& rng) const;

 private:
  std::vector<int> simulate_distances(const ChangePointState& state, Rng& rng) const;
  void update(Particle& p, ChangePointState candidate, double log_q_forward, double log_q_reverse, double tolerance,
              Rng& rng) const;

  int k_;
  const SequenceData& obs_;
  const Tree& tree_;
  const PriorSpec& prior_;
  const ProposalSpec& proposals_;
  std::vector<double> tolerances_;
  int pseudo_datasets_;
  int sweeps_;
};

struct AbcEvidence {
  ParticleSystem<AbcParticle> system;
  double log_evidence;
};

/// Estimates the ABC evidence Pr(distance <= eps_T | k) as the product of
/// mean incremental weights. Throws DegenerateWeights when every weight
/// vanishes at some tolerance.
AbcEvidence abc_evidence_estimate(int k, const SequenceData& obs, const Tree& tree, const PriorSpec& prior,
                                  const ProposalSpec& proposals, const AbcConfig& config, std::uint64_t seed);

EvidenceEstimator make_abc_estimator(const AbcConfig& config, const PriorSpec& prior, const ProposalSpec& proposals,
                                     const SequenceData& obs, const Tree& tree);

/// PMMH whose evidence estimates come from the ABC-SMC sampler. The outer
/// chain (iterations, budget, k prior, k proposal, seed) follows `outer`;
/// particle count, steps and tolerances follow `abc`.
std::vector<ChainRecord> run_pmmh_abc(const PmmhConfig& outer, const AbcConfig& abc, const SequenceData& obs,
                                      const Tree& tree);

class ToleranceStall : public std::runtime_error {
 public:
  ToleranceStall(int generation, double tolerance, int accepted);
  int generation() const noexcept { return generation_; }
  double tolerance() const noexcept { return tolerance_; }

 private:
  int generation_;
  double tolerance_;
};

struct AbcSmcSample {
  ChangePointState state;
  double weight; // normalized over the population
};

struct AbcSmcGeneration {
  double tolerance;
  long attempts;
  int accepted;
};

struct AbcSmcResult {
  std::vector<AbcSmcSample> population;
  std::map<int, double> model_probs;
  std::map<int, double> model_ess;
  std::map<int, int> model_counts;
  std::vector<AbcSmcGeneration> generations;
};

/// Population ABC-SMC for model choice over k: each generation draws a model
/// from the previous model marginal perturbed by the k window, a particle of
/// that model by weight, perturbs it with the change-point and rate kernels,
/// and keeps it when at least one of M pseudo-datasets lies within eps.
/// Importance weights are prior density times the acceptance count over the
/// mixture density of the perturbation kernels.
AbcSmcResult run_abc_smc_model_selection(const AbcConfig& config, const PriorSpec& prior, const ProposalSpec& proposals,
                                         const SequenceData& obs, const Tree& tree, std::uint64_t seed);

} // namespace phylocp

#endif
