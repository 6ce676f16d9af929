#include "phylocp/smc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

namespace phylocp {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// kappa * l with 0 * (-inf) taken as 0 (the prior has no likelihood factor).
double tempered(double kappa, double log_likelihood)
{
  return kappa == 0.0 ? 0.0 : kappa * log_likelihood;
}

Eigen::ArrayXd normalized(const Eigen::ArrayXd& log_weights)
{
  const double top = log_weights.maxCoeff();
  if (top == kNegInf)
    throw DegenerateWeights(-1);
  return (log_weights - top).exp();
}
} // namespace

void TemperSchedule::validate() const
{
  if (kappa.size() < 2 || kappa.front() != 0.0 || kappa.back() != 1.0)
    throw std::invalid_argument("temperatures must start at 0 and end at 1");
  for (std::size_t t = 1; t < kappa.size(); ++t)
    if (!(kappa[t] > kappa[t - 1]))
      throw std::invalid_argument("temperatures must be strictly increasing");
}

TemperSchedule make_schedule(int steps, double exponent)
{
  if (steps < 1 || !(exponent > 0.0))
    throw std::invalid_argument("schedule needs T >= 1 and a positive exponent");
  TemperSchedule s;
  s.kappa.resize(steps + 1);
  for (int t = 0; t <= steps; ++t)
    s.kappa[t] = std::pow(static_cast<double>(t) / steps, exponent);
  s.kappa.back() = 1.0;
  return s;
}

double log_mean_exp(const Eigen::ArrayXd& log_values)
{
  const double top = log_values.maxCoeff();
  if (top == kNegInf)
    return kNegInf;
  return top + std::log((log_values - top).exp().sum() / static_cast<double>(log_values.size()));
}

std::vector<int> resample_multinomial(const Eigen::ArrayXd& log_weights, Rng& rng)
{
  const Eigen::ArrayXd w = normalized(log_weights);
  std::vector<double> cumulative(w.size());
  std::partial_sum(w.begin(), w.end(), cumulative.begin());
  const double total = cumulative.back();
  std::vector<int> idx(w.size());
  for (auto& a : idx) {
    const double u = uniform01(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    a = static_cast<int>(std::min<std::ptrdiff_t>(it - cumulative.begin(), w.size() - 1));
  }
  return idx;
}

std::vector<int> resample_systematic(const Eigen::ArrayXd& log_weights, Rng& rng)
{
  const Eigen::ArrayXd w = normalized(log_weights);
  const auto n = w.size();
  const double step = w.sum() / static_cast<double>(n);
  double u = uniform01(rng) * step;
  double acc = w[0];
  Eigen::Index j = 0;
  std::vector<int> idx(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    while (u >= acc && j + 1 < n)
      acc += w[++j];
    idx[i] = static_cast<int>(j);
    u += step;
  }
  return idx;
}

int sample_index(const Eigen::ArrayXd& log_weights, Rng& rng)
{
  const Eigen::ArrayXd w = normalized(log_weights);
  const double u = uniform01(rng) * w.sum();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    acc += w[i];
    if (u < acc)
      return static_cast<int>(i);
  }
  // rounding at the top end; take the last index with positive weight
  for (Eigen::Index i = w.size() - 1; i >= 0; --i)
    if (w[i] > 0.0)
      return static_cast<int>(i);
  throw DegenerateWeights(-1);
}

TemperedPolicy::TemperedPolicy(int k, const SequenceData& data, const LikelihoodEngine& engine, const PriorSpec& prior,
                               const ProposalSpec& proposals, const TemperSchedule& schedule, int kernel_sweeps)
    : k_(k), data_(data), engine_(engine), prior_(prior), proposals_(proposals), schedule_(schedule),
      sweeps_(kernel_sweeps)
{
  if (kernel_sweeps < 0)
    throw std::invalid_argument("kernel sweeps must be nonnegative");
}

TemperedParticle TemperedPolicy::initial(Rng& rng) const
{
  const int m = data_.site_count();
  TemperedParticle p;
  p.state = sample_prior(k_, prior_, m, rng);
  p.log_prior = log_conditional_prior(p.state, prior_, m);
  p.log_likelihood = engine_.log_likelihood(p.state, data_);
  return p;
}

double TemperedPolicy::log_incremental_weight(const TemperedParticle& p, int t) const
{
  const double dk = schedule_.kappa[t] - schedule_.kappa[t - 1];
  return tempered(dk, p.log_likelihood);
}

bool TemperedPolicy::accept(TemperedParticle& p, ChangePointState candidate, double log_q_forward,
                            double log_q_reverse, double kappa, Rng& rng) const
{
  const int m = data_.site_count();
  const double lp = log_conditional_prior(candidate, prior_, m);
  if (lp == kNegInf)
    return false;
  const double ll = engine_.log_likelihood(candidate, data_);
  const double target_new = tempered(kappa, ll) + lp;
  const double target_old = tempered(kappa, p.log_likelihood) + p.log_prior;
  if (target_new == kNegInf)
    return false;
  const double log_alpha = target_old == kNegInf ? 0.0 : target_new - target_old + log_q_reverse - log_q_forward;
  if (log_alpha >= 0.0 || std::log(uniform01(rng)) < log_alpha) {
    p.state = std::move(candidate);
    p.log_prior = lp;
    p.log_likelihood = ll;
    return true;
  }
  return false;
}

bool TemperedPolicy::rate_update(TemperedParticle& p, double kappa, Rng& rng) const
{
  auto prop = propose_rates(p.state.theta, proposals_.rate_sigma, rng);
  ChangePointState candidate{p.state.s, std::move(prop.value)};
  return accept(p, std::move(candidate), prop.log_q_forward, prop.log_q_reverse, kappa, rng);
}

bool TemperedPolicy::changepoint_update(TemperedParticle& p, double kappa, Rng& rng) const
{
  if (p.state.k() == 0)
    return false;
  auto prop = propose_changepoints(p.state.s, proposals_.s_window, data_.site_count(), rng);
  if (!prop)
    return false;
  ChangePointState candidate{std::move(prop->value), p.state.theta};
  return accept(p, std::move(candidate), prop->log_q_forward, prop->log_q_reverse, kappa, rng);
}

void TemperedPolicy::move(TemperedParticle& p, int t, Rng& rng) const
{
  const double kappa = schedule_.kappa[t];
  for (int sweep = 0; sweep < sweeps_; ++sweep) {
    rate_update(p, kappa, rng);
    changepoint_update(p, kappa, rng);
  }
}

SmcResult run_smc(int k, const SequenceData& data, const LikelihoodEngine& engine, const PriorSpec& prior,
                  const ProposalSpec& proposals, const SmcOptions& options, int kernel_sweeps)
{
  if (!prior.supports(k))
    throw std::invalid_argument("k outside the prior support");
  const TemperedPolicy policy(k, data, engine, prior, proposals, options.schedule, kernel_sweeps);
  auto system = run_sampler(policy, options);
  const double log_evidence = system.log_evidence();
  return {std::move(system), log_evidence};
}

void write_smc_trace(std::ostream& out, const ParticleSystem<TemperedParticle>& system)
{
  if (system.particles.size() != system.log_weights.size())
    throw std::invalid_argument("trace needs the full particle history");
  out << "t,i,ancestor,log_weight,k,s,theta\n";
  out.precision(17);
  for (std::size_t t = 0; t < system.particles.size(); ++t) {
    for (int i = 0; i < system.particle_count; ++i) {
      const auto& st = system.particles[t][i].state;
      out << t << ',' << i << ',' << (t == 0 ? -1 : system.ancestors[t - 1][i]) << ',' << system.log_weights[t][i]
          << ',' << st.k() << ',';
      for (int j = 0; j < st.k(); ++j)
        out << (j ? ";" : "") << st.s[j];
      out << ',';
      for (Eigen::Index j = 0; j < st.theta.size(); ++j)
        out << (j ? ";" : "") << st.theta[j];
      out << '\n';
    }
  }
}

} // namespace phylocp
