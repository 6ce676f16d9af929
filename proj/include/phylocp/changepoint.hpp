#ifndef PHYLOCP_CHANGEPOINT_HPP
#define PHYLOCP_CHANGEPOINT_HPP

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "phylocp/random.hpp"

namespace phylocp {

/// A point of the trans-dimensional space: k change-points at sites
/// 1 < s_1 < ... < s_k <= m and k+1 segment rates. Segment j (0-based)
/// covers sites [s_{j-1}, s_j) with s_{-1} = 1 and s_k = m+1.
struct ChangePointState {
  std::vector<int> s;
  Eigen::VectorXd theta;

  int k() const { return static_cast<int>(s.size()); }
  bool operator==(const ChangePointState& o) const { return s == o.s && theta == o.theta; }
};

/// Sorted change-points in 2..m and k+1 finite positive rates (or
/// nonnegative ones when `allow_zero_rates`).
bool is_valid(const ChangePointState& state, int m, bool allow_zero_rates = false);

/// Uniform prior on k over `k_support`, uniform change-point positions
/// given k, independent Gamma(shape, scale) rates.
struct PriorSpec {
  std::vector<int> k_support{0, 1};
  double gamma_shape = 2.0;
  double gamma_scale = 0.4;

  void validate() const;
  int k_min() const;
  int k_max() const;
  bool supports(int k) const;
  double log_prob_k(int k) const;
};

struct ProposalSpec {
  int k_window = 3;
  int s_window = 3;
  double rate_sigma = 0.25;

  void validate() const;
};

double log_gamma_density(double x, double shape, double scale);

/// log p(k) + log p(s | k) + sum_j log Gamma(theta_j); -infinity outside
/// the support.
double log_prior(const ChangePointState& state, const PriorSpec& prior, int m);

/// Log prior of (s, theta) given k.
double log_conditional_prior(const ChangePointState& state, const PriorSpec& prior, int m);

ChangePointState sample_prior(int k, const PriorSpec& prior, int m, Rng& rng);

/// Fresh prior draw at dimension `k_new`. Dimension changes never reuse the
/// incumbent state; SMC at the new k starts from the prior.
ChangePointState birth_death_adjust(const ChangePointState& state, int k_new, const PriorSpec& prior, int m, Rng& rng);

// Proposals -----------------------------------------------------------------

template <typename T>
struct Proposal {
  T value;
  double log_q_forward;
  double log_q_reverse;
};

/// Support of the truncated discrete-uniform window of odd width `window`
/// centred at `center`, clipped to [lo, hi].
std::vector<int> window_support(int center, int window, int lo, int hi);

double k_proposal_log_prob(int from, int to, int k_min, int k_max, int window);
Proposal<int> propose_k(int k, int k_min, int k_max, int window, Rng& rng);

/// Sequential change-point proposal: s'_1 from the window around s_1, then
/// s'_j from the window around s_j with s'_1..s'_{j-1} removed; the result
/// is sorted. Returns nullopt when some window empties.
std::optional<Proposal<std::vector<int>>> propose_changepoints(const std::vector<int>& s, int window, int m, Rng& rng);

/// Exact probability that the sequential scheme started at `from` yields the
/// sorted vector `to`, summed over every draw order that sorts to `to`.
double changepoint_proposal_log_prob(const std::vector<int>& from, const std::vector<int>& to, int window, int m);

/// Independent log-normal random walk on each rate.
Proposal<Eigen::VectorXd> propose_rates(const Eigen::VectorXd& theta, double sigma, Rng& rng);
double rate_proposal_log_density(const Eigen::VectorXd& from, const Eigen::VectorXd& to, double sigma);

} // namespace phylocp

#endif
