#include "phylocp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace phylocp {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(const std::vector<double>& x, std::size_t first, std::size_t last)
{
  return std::accumulate(x.begin() + first, x.begin() + last, 0.0) / static_cast<double>(last - first);
}

double variance_of(const std::vector<double>& x)
{
  const double mu = mean_of(x, 0, x.size());
  double ss = 0.0;
  for (double v : x)
    ss += (v - mu) * (v - mu);
  return ss / static_cast<double>(x.size());
}

std::string key(const char* name, int j, int k)
{
  return std::string(name) + std::to_string(j) + "|k=" + std::to_string(k);
}

ParameterSummary summarize_parameter(const std::vector<double>& x)
{
  ParameterSummary p;
  p.samples = static_cast<int>(x.size());
  if (x.empty()) {
    p.mean = kNaN;
    p.geweke = kNaN;
    return p;
  }
  p.mean = mean_of(x, 0, x.size());
  p.quantile = quantile_interval(x);
  if (x.size() >= 20)
    p.hpd = hpd_interval(x);
  if (x.size() >= 4)
    p.mcse = mcse_interval(x);
  p.geweke = x.size() >= 100 ? geweke_z(x) : kNaN;
  return p;
}

} // namespace

double autocorrelation(const std::vector<double>& x, int lag)
{
  if (lag < 0 || static_cast<std::size_t>(lag) >= x.size())
    throw std::invalid_argument("autocorrelation needs 0 <= lag < length");
  const double mu = mean_of(x, 0, x.size());
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    den += (x[t] - mu) * (x[t] - mu);
    if (t + lag < x.size())
      num += (x[t] - mu) * (x[t + lag] - mu);
  }
  if (den == 0.0)
    return kNaN;
  return num / den;
}

double weighted_ess(const std::vector<double>& weights)
{
  double sum = 0.0, sum_sq = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0))
      throw std::invalid_argument("weights must be nonnegative");
    sum += w;
    sum_sq += w * w;
  }
  if (sum == 0.0)
    throw std::invalid_argument("weights are all zero");
  return sum * sum / sum_sq;
}

double batch_means_spectral_variance(const std::vector<double>& x)
{
  const std::size_t length = x.size();
  const auto size = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(length))));
  const std::size_t batches = size ? length / size : 0;
  if (batches < 2)
    throw std::invalid_argument("batch means need at least two batches");
  std::vector<double> means(batches);
  for (std::size_t b = 0; b < batches; ++b)
    means[b] = mean_of(x, b * size, (b + 1) * size);
  const double mu = mean_of(means, 0, batches);
  double ss = 0.0;
  for (double v : means)
    ss += (v - mu) * (v - mu);
  return static_cast<double>(size) * ss / static_cast<double>(batches - 1);
}

double chain_ess(const std::vector<double>& x)
{
  const double s0 = batch_means_spectral_variance(x);
  const double var = variance_of(x);
  if (var == 0.0 || s0 == 0.0)
    return kNaN;
  return std::min(static_cast<double>(x.size()), static_cast<double>(x.size()) * var / s0);
}

double geweke_z(const std::vector<double>& x, double first_frac, double last_frac)
{
  if (!(first_frac > 0.0) || !(last_frac > 0.0) || first_frac + last_frac > 1.0)
    throw std::invalid_argument("Geweke windows must be positive and not overlap");
  const auto first = static_cast<std::size_t>(std::floor(first_frac * static_cast<double>(x.size())));
  const auto last = static_cast<std::size_t>(std::floor(last_frac * static_cast<double>(x.size())));
  if (first < 10 || last < 10)
    throw std::invalid_argument("Geweke windows need at least 10 points each");
  const std::vector<double> a(x.begin(), x.begin() + first);
  const std::vector<double> b(x.end() - last, x.end());
  const double var = batch_means_spectral_variance(a) / static_cast<double>(a.size()) +
                     batch_means_spectral_variance(b) / static_cast<double>(b.size());
  if (!(var > 0.0))
    return kNaN;
  return (mean_of(a, 0, a.size()) - mean_of(b, 0, b.size())) / std::sqrt(var);
}

Interval hpd_interval(std::vector<double> samples, double mass)
{
  if (samples.size() < 20)
    throw std::invalid_argument("HPD interval needs at least 20 samples");
  if (!(mass > 0.0 && mass <= 1.0))
    throw std::invalid_argument("HPD mass must lie in (0, 1]");
  std::sort(samples.begin(), samples.end());
  const std::size_t total = samples.size();
  auto count = static_cast<std::size_t>(std::ceil(mass * static_cast<double>(total) - 1e-9));
  count = std::clamp<std::size_t>(count, 1, total);
  std::size_t best = 0;
  for (std::size_t i = 1; i + count <= total; ++i)
    if (samples[i + count - 1] - samples[i] < samples[best + count - 1] - samples[best])
      best = i;
  return {samples[best], samples[best + count - 1]};
}

Interval quantile_interval(std::vector<double> samples, double lower, double upper)
{
  if (samples.empty())
    throw std::invalid_argument("quantiles need samples");
  if (!(lower >= 0.0 && lower <= upper && upper <= 1.0))
    throw std::invalid_argument("quantile levels must satisfy 0 <= lower <= upper <= 1");
  std::sort(samples.begin(), samples.end());
  const auto at = [&](double q) {
    const double h = q * static_cast<double>(samples.size() - 1);
    const auto i = static_cast<std::size_t>(std::floor(h));
    if (i + 1 >= samples.size())
      return samples.back();
    return samples[i] + (h - static_cast<double>(i)) * (samples[i + 1] - samples[i]);
  };
  return {at(lower), at(upper)};
}

Interval mcse_interval(const std::vector<double>& samples)
{
  if (samples.size() < 4)
    throw std::invalid_argument("MCSE interval needs at least 4 samples");
  const double mu = mean_of(samples, 0, samples.size());
  const double half = 1.96 * std::sqrt(batch_means_spectral_variance(samples) / static_cast<double>(samples.size()));
  return {mu - half, mu + half};
}

std::vector<double> k_series(const std::vector<ChainRecord>& records, int burn_in)
{
  std::vector<double> out;
  for (std::size_t r = static_cast<std::size_t>(burn_in); r < records.size(); ++r)
    out.push_back(records[r].state.k());
  return out;
}

std::vector<double> changepoint_samples(const std::vector<ChainRecord>& records, int burn_in, int k, int j)
{
  if (j < 1 || j > k)
    throw std::out_of_range("change-point index outside 1..k");
  std::vector<double> out;
  for (std::size_t r = static_cast<std::size_t>(burn_in); r < records.size(); ++r)
    if (records[r].state.k() == k)
      out.push_back(records[r].state.s[j - 1]);
  return out;
}

std::vector<double> rate_samples(const std::vector<ChainRecord>& records, int burn_in, int k, int j)
{
  if (j < 1 || j > k + 1)
    throw std::out_of_range("rate index outside 1..k+1");
  std::vector<double> out;
  for (std::size_t r = static_cast<std::size_t>(burn_in); r < records.size(); ++r)
    if (records[r].state.k() == k)
      out.push_back(records[r].state.theta[j - 1]);
  return out;
}

ChainSummary summarize_chain(const std::vector<ChainRecord>& records, int burn_in, const std::vector<int>& acf_lags)
{
  if (burn_in < 0 || static_cast<std::size_t>(burn_in) >= records.size())
    throw std::invalid_argument("burn-in must be smaller than the chain length");
  ChainSummary out;
  out.records = static_cast<int>(records.size());
  out.burn_in = burn_in;

  const auto ks = k_series(records, burn_in);
  for (double k : ks)
    ++out.sample_counts[static_cast<int>(k)];
  for (const auto& [k, c] : out.sample_counts)
    out.model_probs[k] = static_cast<double>(c) / static_cast<double>(ks.size());

  int steps = 0, accepted = 0;
  for (std::size_t r = std::max<std::size_t>(1, burn_in); r < records.size(); ++r) {
    ++steps;
    accepted += records[r].accepted ? 1 : 0;
  }
  out.acceptance_ratio = steps ? static_cast<double>(accepted) / steps : kNaN;

  for (int lag : acf_lags)
    out.acf[lag] = static_cast<std::size_t>(lag) < ks.size() ? autocorrelation(ks, lag) : kNaN;
  out.geweke_k = ks.size() >= 100 ? geweke_z(ks) : kNaN;
  out.ess_k = ks.size() >= 4 ? chain_ess(ks) : kNaN;

  for (const auto& [k, c] : out.sample_counts) {
    for (int j = 1; j <= k; ++j)
      out.parameters[key("s", j, k)] = summarize_parameter(changepoint_samples(records, burn_in, k, j));
    for (int j = 1; j <= k + 1; ++j)
      out.parameters[key("theta", j, k)] = summarize_parameter(rate_samples(records, burn_in, k, j));
  }
  return out;
}

std::vector<std::pair<int, int>> integer_histogram(const std::vector<double>& values)
{
  std::map<int, int> counts;
  for (double v : values)
    ++counts[static_cast<int>(std::lround(v))];
  return {counts.begin(), counts.end()};
}

DensityGrid kernel_density(const std::vector<double>& samples, int points)
{
  if (samples.size() < 2 || points < 2)
    throw std::invalid_argument("density grid needs two samples and two points");
  const double sd = std::sqrt(variance_of(samples) * samples.size() / (samples.size() - 1.0));
  const auto iqr = quantile_interval(samples, 0.25, 0.75);
  double spread = std::min(sd, (iqr.hi - iqr.lo) / 1.34);
  if (!(spread > 0.0))
    spread = sd > 0.0 ? sd : 1.0;
  DensityGrid grid;
  grid.bandwidth = 0.9 * spread * std::pow(static_cast<double>(samples.size()), -0.2);
  const auto [lo_it, hi_it] = std::minmax_element(samples.begin(), samples.end());
  const double lo = *lo_it - 3.0 * grid.bandwidth;
  const double hi = *hi_it + 3.0 * grid.bandwidth;
  const double norm = 1.0 / (static_cast<double>(samples.size()) * grid.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  for (int i = 0; i < points; ++i) {
    const double x = lo + (hi - lo) * i / (points - 1);
    double d = 0.0;
    for (double s : samples) {
      const double z = (x - s) / grid.bandwidth;
      d += std::exp(-0.5 * z * z);
    }
    grid.x.push_back(x);
    grid.density.push_back(d * norm);
  }
  return grid;
}

std::vector<double> acf_table(const std::vector<double>& x, int max_lag)
{
  std::vector<double> out;
  for (int lag = 0; lag <= max_lag && static_cast<std::size_t>(lag) < x.size(); ++lag)
    out.push_back(autocorrelation(x, lag));
  return out;
}

} // namespace phylocp
