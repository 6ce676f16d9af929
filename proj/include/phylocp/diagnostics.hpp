#ifndef PHYLOCP_DIAGNOSTICS_HPP
#define PHYLOCP_DIAGNOSTICS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "phylocp/pmmh.hpp"

namespace phylocp {

/// Sample autocorrelation at `lag`; NaN for a constant series.
double autocorrelation(const std::vector<double>& x, int lag);

/// (sum w)^2 / sum w^2.
double weighted_ess(const std::vector<double>& weights);

/// Spectral density at frequency zero by non-overlapping batch means with
/// batches of size floor(sqrt(L)); the variance of the sample mean is this
/// value divided by L.
double batch_means_spectral_variance(const std::vector<double>& x);

/// L * var(x) / S(0), capped at L.
double chain_ess(const std::vector<double>& x);

/// (mean of the first window - mean of the last window) over the root of the
/// summed batch-means variances of the two means. NaN when the variance
/// vanishes.
double geweke_z(const std::vector<double>& x, double first_frac = 0.1, double last_frac = 0.5);

struct Interval {
  double lo;
  double hi;
};

/// Shortest window of sorted samples holding at least ceil(mass * L) of
/// them; ties go to the smallest lower end.
Interval hpd_interval(std::vector<double> samples, double mass = 0.95);
/// Empirical quantiles with linear interpolation.
Interval quantile_interval(std::vector<double> samples, double lower = 0.025, double upper = 0.975);
/// mean +- 1.96 * sqrt(S(0) / L).
Interval mcse_interval(const std::vector<double>& samples);

struct ParameterSummary {
  int samples = 0;
  double mean = 0.0;
  double geweke = 0.0;
  std::optional<Interval> quantile;
  std::optional<Interval> hpd;
  std::optional<Interval> mcse;
};

struct ChainSummary {
  int records = 0;
  int burn_in = 0;
  std::map<int, double> model_probs;
  std::map<int, int> sample_counts;
  /// Accepted post-burn-in steps over post-burn-in steps.
  double acceptance_ratio = 0.0;
  /// Autocorrelation of k after burn-in.
  std::map<int, double> acf;
  double geweke_k = 0.0;
  double ess_k = 0.0;
  /// Keyed "s1|k=1", "theta2|k=1" and so on; parameters of every visited k.
  std::map<std::string, ParameterSummary> parameters;
};

inline const std::vector<int> kDefaultAcfLags{25, 100};

ChainSummary summarize_chain(const std::vector<ChainRecord>& records, int burn_in,
                             const std::vector<int>& acf_lags = kDefaultAcfLags);

/// Post-burn-in k values.
std::vector<double> k_series(const std::vector<ChainRecord>& records, int burn_in);
/// Post-burn-in samples of s_j (1-based j) among records at dimension k.
std::vector<double> changepoint_samples(const std::vector<ChainRecord>& records, int burn_in, int k, int j);
/// Post-burn-in samples of theta_j (1-based j) among records at dimension k.
std::vector<double> rate_samples(const std::vector<ChainRecord>& records, int burn_in, int k, int j);

// Plot data -------------------------------------------------------------------

/// Counts per distinct integer value, ascending.
std::vector<std::pair<int, int>> integer_histogram(const std::vector<double>& values);

struct DensityGrid {
  std::vector<double> x;
  std::vector<double> density;
  double bandwidth;
};

/// Gaussian kernel density on an even grid spanning the samples plus three
/// bandwidths; Silverman bandwidth.
DensityGrid kernel_density(const std::vector<double>& samples, int points = 200);

/// Autocorrelation at lags 0..max_lag (bounded by the series length).
std::vector<double> acf_table(const std::vector<double>& x, int max_lag);

} // namespace phylocp

#endif
