#ifndef PHYLOCP_SMC_HPP
#define PHYLOCP_SMC_HPP

#include <cstdint>
#include <exception>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "phylocp/changepoint.hpp"
#include "phylocp/likelihood.hpp"
#include "phylocp/random.hpp"

namespace phylocp {

/// Temperatures 0 = kappa_0 < kappa_1 < ... < kappa_T = 1.
struct TemperSchedule {
  std::vector<double> kappa;

  int steps() const { return static_cast<int>(kappa.size()) - 1; }
  void validate() const;
};

/// kappa_t = (t / T)^exponent.
TemperSchedule make_schedule(int steps, double exponent = 2.0);

/// Every particle at some step carries zero weight.
class DegenerateWeights : public std::runtime_error {
 public:
  explicit DegenerateWeights(int step)
      : std::runtime_error("all particle weights vanished at SMC step " + std::to_string(step)), step_(step)
  {
  }
  DegenerateWeights(int step, const std::string& what) : std::runtime_error(what), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Output of the SMC sampler. Step t holds the particles after the move of
/// step t, the unnormalized log-weights log W_t (computed at the pre-move
/// resampled particles), and the ancestor indices used to build them.
template <typename Particle>
struct ParticleSystem {
  int particle_count = 0;
  /// All generations when history is kept, otherwise only the final one.
  std::vector<std::vector<Particle>> particles;
  std::vector<Eigen::ArrayXd> log_weights;
  std::vector<std::vector<int>> ancestors;
  std::vector<double> log_evidence_terms;

  const std::vector<Particle>& final_particles() const { return particles.back(); }
  const Eigen::ArrayXd& final_log_weights() const { return log_weights.back(); }

  /// log of prod_t (1/N) sum_i W_t^i.
  double log_evidence() const
  {
    double total = 0.0;
    for (double term : log_evidence_terms)
      total += term;
    return total;
  }
};

struct SmcOptions {
  int particles = 20;
  TemperSchedule schedule = make_schedule(10);
  std::uint64_t seed = 1;
  bool systematic_resampling = false;
  bool keep_history = false;
};

/// log((1/N) sum exp(x)); -infinity when every entry is -infinity.
double log_mean_exp(const Eigen::ArrayXd& log_values);

std::vector<int> resample_multinomial(const Eigen::ArrayXd& log_weights, Rng& rng);
std::vector<int> resample_systematic(const Eigen::ArrayXd& log_weights, Rng& rng);

/// Index drawn with probability proportional to exp(log_weights).
int sample_index(const Eigen::ArrayXd& log_weights, Rng& rng);

/// Stream index reserved for resampling draws at each step.
inline constexpr std::uint64_t kResampleStream = std::numeric_limits<std::uint64_t>::max();

/// Generic resample-move sampler.
///
/// `Policy` provides `Particle initial(Rng&) const`,
/// `double log_incremental_weight(const Particle&, int t) const` and
/// `void move(Particle&, int t, Rng&) const`. Particles are independent
/// between resampling barriers and are processed in parallel; every draw
/// comes from a stream indexed by (seed, t, i), so the output does not
/// depend on scheduling.
template <typename Policy>
ParticleSystem<typename Policy::Particle> run_sampler(const Policy& policy, const SmcOptions& options)
{
  using Particle = typename Policy::Particle;
  options.schedule.validate();
  const int n = options.particles;
  const int steps = options.schedule.steps();
  if (n < 1)
    throw std::invalid_argument("SMC needs at least one particle");

  ParticleSystem<Particle> system;
  system.particle_count = n;
  std::vector<Particle> current(n);
  std::exception_ptr failure;

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    try {
      Rng rng = make_stream(options.seed, 0, static_cast<std::uint64_t>(i));
      current[i] = policy.initial(rng);
    } catch (...) {
#pragma omp critical(phylocp_smc_failure)
      failure = std::current_exception();
    }
  }
  if (failure)
    std::rethrow_exception(failure);

  system.log_weights.push_back(Eigen::ArrayXd::Zero(n));
  system.log_evidence_terms.push_back(0.0);
  if (options.keep_history)
    system.particles.push_back(current);

  std::vector<Particle> next(n);
  for (int t = 1; t <= steps; ++t) {
    Rng resample_rng = make_stream(options.seed, static_cast<std::uint64_t>(t), kResampleStream);
    const Eigen::ArrayXd& previous = system.log_weights.back();
    std::vector<int> ancestors = options.systematic_resampling ? resample_systematic(previous, resample_rng)
                                                               : resample_multinomial(previous, resample_rng);
    Eigen::ArrayXd log_w(n);

#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      try {
        Particle p = current[ancestors[i]];
        log_w[i] = policy.log_incremental_weight(p, t);
        Rng rng = make_stream(options.seed, static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(i));
        policy.move(p, t, rng);
        next[i] = std::move(p);
      } catch (...) {
#pragma omp critical(phylocp_smc_failure)
        failure = std::current_exception();
      }
    }
    if (failure)
      std::rethrow_exception(failure);

    const double term = log_mean_exp(log_w);
    if (term == -std::numeric_limits<double>::infinity())
      throw DegenerateWeights(t);
    std::swap(current, next);
    system.ancestors.push_back(std::move(ancestors));
    system.log_weights.push_back(std::move(log_w));
    system.log_evidence_terms.push_back(term);
    if (options.keep_history)
      system.particles.push_back(current);
  }
  if (!options.keep_history)
    system.particles.push_back(std::move(current));
  return system;
}

// Likelihood-tempered sampler at fixed k ------------------------------------

struct TemperedParticle {
  ChangePointState state;
  double log_likelihood = 0.0;
  double log_prior = 0.0; // log p(s, theta | k)
};

/// Targets xi_t proportional to L^kappa_t * p(s, theta | k) with a
/// rate move followed by a change-point move per sweep, each an MH step
/// against xi_t. The incremental weight is (kappa_t - kappa_{t-1}) * l at
/// the pre-move particle.
class TemperedPolicy {
 public:
  using Particle = TemperedParticle;

  TemperedPolicy(int k, const SequenceData& data, const LikelihoodEngine& engine, const PriorSpec& prior,
                 const ProposalSpec& proposals, const TemperSchedule& schedule, int kernel_sweeps);

  Particle initial(Rng& rng) const;
  double log_incremental_weight(const Particle& p, int t) const;
  void move(Particle& p, int t, Rng& rng) const;

  /// One MH update against temperature kappa; returns true on acceptance.
  bool rate_update(Particle& p, double kappa, Rng& rng) const;
  bool changepoint_update(Particle& p, double kappa, Rng& rng) const;

 private:
  bool accept(Particle& p, ChangePointState candidate, double log_q_forward, double log_q_reverse, double kappa,
              Rng& rng) const;

  int k_;
  const SequenceData& data_;
  const LikelihoodEngine& engine_;
  const PriorSpec& prior_;
  const ProposalSpec& proposals_;
  const TemperSchedule& schedule_;
  int sweeps_;
};

struct SmcResult {
  ParticleSystem<TemperedParticle> system;
  double log_evidence;
};

SmcResult run_smc(int k, const SequenceData& data, const LikelihoodEngine& engine, const PriorSpec& prior,
                  const ProposalSpec& proposals, const SmcOptions& options, int kernel_sweeps = 1);

/// Particle index drawn proportionally to the final weights W_T.
template <typename Particle>
int select_particle(const ParticleSystem<Particle>& system, Rng& rng)
{
  return sample_index(system.final_log_weights(), rng);
}

/// CSV dump of every step: t, i, ancestor, log_weight, k, s..., theta...
/// Requires a system run with `keep_history`.
void write_smc_trace(std::ostream& out, const ParticleSystem<TemperedParticle>& system);

} // namespace phylocp

#endif
