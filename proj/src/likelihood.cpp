#include "phylocp/likelihood.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "phylocp/parallel.hpp"

namespace phylocp {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

LikelihoodEngine::LikelihoodEngine(Tree tree, int g) : tree_(std::move(tree)), g_(g)
{
  const int n = tree_.leaf_count();
  boundary_ = boundary_nodes(tree_, g); // validates g
  // The root alone always acts as a boundary node with its stationary law,
  // so g = 1 and g = 2 share one code path.
  last_kept_ = std::min(2 * n - g, 2 * n - 2);
  const std::vector<NodeId> tops = g_ == 1 ? std::vector<NodeId>{tree_.root()} : boundary_;
  for (NodeId b : tops) {
    std::vector<NodeId> kept;
    for (NodeId c : tree_.children(b))
      if (c <= last_kept_)
        kept.push_back(c);
    if (kept.empty())
      throw std::logic_error("boundary node without kept children");
    top_children_.push_back(std::move(kept));
  }
  // every kept node whose parent is removed must hang below a top node
  for (NodeId id = 1; id <= last_kept_; ++id) {
    const NodeId p = tree_.parent(id);
    if (p > last_kept_ && std::find(tops.begin(), tops.end(), p) == tops.end())
      throw std::logic_error("kept node with a removed non-boundary parent");
  }
}

void LikelihoodEngine::check_data(const SequenceData& data) const
{
  if (data.sequence_count() != tree_.leaf_count())
    throw std::invalid_argument("data has " + std::to_string(data.sequence_count()) + " sequences but the tree has " +
                                std::to_string(tree_.leaf_count()) + " leaves");
}

void LikelihoodEngine::prepare(Workspace& ws, double theta) const
{
  const JukesCantor<double> model(theta);
  ws.transition.resize(last_kept_ + 1);
  ws.partial.resize(last_kept_ + 1);
  for (NodeId id = 1; id <= last_kept_; ++id)
    ws.transition[id] = model.transition_matrix(tree_.branch_length(id));
}

double LikelihoodEngine::site_term(Workspace& ws, const SequenceData& data, int column) const
{
  const int n = tree_.leaf_count();
  const auto message = [&](NodeId c) -> Eigen::Array4d {
    if (c <= n)
      return ws.transition[c].col(data.states(c - 1, column)).array();
    return (ws.transition[c] * ws.partial[c].matrix()).array();
  };

  double log_scale = 0.0;
  // ids increase towards the root, so ascending order is a post-order
  for (NodeId id = n + 1; id <= last_kept_; ++id) {
    const auto& ch = tree_.children(id);
    Eigen::Array4d p = message(ch[0]) * message(ch[1]);
    const double scale = p.maxCoeff();
    if (!(scale > 0.0))
      return kNegInf;
    ws.partial[id] = p / scale;
    log_scale += std::log(scale);
  }
  const Eigen::Array4d stationary = JukesCantor<double>::stationary().array();
  for (const auto& kept : top_children_) {
    Eigen::Array4d v = Eigen::Array4d::Ones();
    for (NodeId c : kept)
      v *= message(c);
    const double term = (stationary * v).sum();
    if (!(term > 0.0))
      return kNegInf;
    log_scale += std::log(term);
  }
  return log_scale;
}

double LikelihoodEngine::site_log_likelihood(double theta, const SequenceData& data, int site) const
{
  check_data(data);
  if (site < 1 || site > data.site_count())
    throw std::out_of_range("site out of range");
  Workspace ws;
  prepare(ws, theta);
  return site_term(ws, data, site - 1);
}

double LikelihoodEngine::block_log_likelihood(double theta, const SequenceData& data, int first, int last) const
{
  ChangePointState state;
  state.theta = Eigen::VectorXd::Constant(1, theta);
  SequenceData block;
  block.states = data.states.middleCols(first - 1, last - first);
  return log_likelihood(state, block);
}

double LikelihoodEngine::log_likelihood(const ChangePointState& state, const SequenceData& data) const
{
  check_data(data);
  const int m = data.site_count();
  const int k = state.k();
  if (state.theta.size() != k + 1)
    throw std::invalid_argument("state needs k+1 rates");

  const bool fan_out = m >= kParallelSiteThreshold && thread_count() > 1 && !in_parallel_region();
  std::vector<double> site_values;
  if (fan_out)
    site_values.resize(m);

  double total = 0.0;
  Workspace ws;
  for (int j = 0; j <= k; ++j) {
    const int first = j == 0 ? 1 : state.s[j - 1];
    const int last = j == k ? m + 1 : state.s[j];
    if (first >= last)
      continue;
    prepare(ws, state.theta[j]);
    if (!fan_out) {
      for (int site = first; site < last; ++site)
        total += site_term(ws, data, site - 1);
      continue;
    }
#pragma omp parallel
    {
      Workspace local = ws;
#pragma omp for schedule(static)
      for (int site = first; site < last; ++site)
        site_values[site - 1] = site_term(local, data, site - 1);
    }
  }
  if (fan_out)
    for (double v : site_values)
      total += v;
  return total;
}

double segmented_log_likelihood(const Tree& tree, const ChangePointState& state, const SequenceData& data)
{
  return LikelihoodEngine(tree, 1).log_likelihood(state, data);
}

double time_machine_log_likelihood(const Tree& tree, int g, const ChangePointState& state, const SequenceData& data)
{
  if (g < 2 || g > tree.leaf_count())
    throw std::domain_error("time machine needs 2 <= g <= n");
  return LikelihoodEngine(tree, g).log_likelihood(state, data);
}

double complexity_probe(const LikelihoodEngine& engine, const SequenceData& data, double theta, int repeats)
{
  ChangePointState state;
  state.theta = Eigen::VectorXd::Constant(1, theta);
  volatile double sink = 0.0;
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r)
    sink = sink + engine.log_likelihood(state, data);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  return elapsed.count() / std::max(repeats, 1);
}

} // namespace phylocp
