#include "phylocp/simulate.hpp"

#include <array>
#include <stdexcept>
#include <vector>

#include "phylocp/parallel.hpp"
#include "phylocp/subst_model.hpp"

namespace phylocp {

namespace {

using CumulativeRow = std::array<double, kStates>;

int draw_state(const CumulativeRow& cumulative, SplitMix64& rng)
{
  const double u = uniform01(rng) * cumulative.back();
  for (int a = 0; a < kStates - 1; ++a)
    if (u < cumulative[a])
      return a;
  return kStates - 1;
}

CumulativeRow cumulate(const Eigen::Ref<const Eigen::RowVector4d>& row)
{
  CumulativeRow c{};
  double acc = 0.0;
  for (int a = 0; a < kStates; ++a)
    c[a] = acc += row[a];
  return c;
}

// Cumulative transition rows per node (index = node id) for one rate.
std::vector<std::array<CumulativeRow, kStates>> branch_tables(const Tree& tree, double theta)
{
  const JukesCantor<double> model(theta);
  std::vector<std::array<CumulativeRow, kStates>> tables(tree.node_count());
  for (NodeId id = 1; id < tree.root(); ++id) {
    const auto p = model.transition_matrix(tree.branch_length(id));
    for (int a = 0; a < kStates; ++a)
      tables[id][a] = cumulate(p.row(a));
  }
  return tables;
}

StateMatrix simulate_nodes(const Tree& tree, const ChangePointState& state, int m, std::uint64_t seed)
{
  if (!is_valid(state, m, true))
    throw std::invalid_argument("simulation state is not valid for m sites");
  const int nodes = tree.node_count();
  StateMatrix out(nodes, m);
  const CumulativeRow root_row = cumulate(JukesCantor<double>::stationary().transpose());

  std::vector<int> segment_of(m);
  for (int j = 0, site = 1; j <= state.k(); ++j) {
    const int last = j == state.k() ? m + 1 : state.s[j];
    for (; site < last; ++site)
      segment_of[site - 1] = j;
  }
  std::vector<std::vector<std::array<CumulativeRow, kStates>>> tables;
  for (Eigen::Index j = 0; j < state.theta.size(); ++j)
    tables.push_back(branch_tables(tree, state.theta[j]));

  const bool fan_out = m >= 256 && thread_count() > 1 && !in_parallel_region();
#pragma omp parallel for schedule(static) if (fan_out)
  for (int col = 0; col < m; ++col) {
    SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(col + 1)));
    const auto& table = tables[segment_of[col]];
    out(nodes - 1, col) = static_cast<std::uint8_t>(draw_state(root_row, rng));
    // parents carry larger ids, so descending order visits parents first
    for (NodeId id = nodes - 1; id >= 1; --id) {
      const int parent_state = out(tree.parent(id) - 1, col);
      out(id - 1, col) = static_cast<std::uint8_t>(draw_state(table[id][parent_state], rng));
    }
  }
  return out;
}

} // namespace

SimulationResult simulate_dataset(const SimulationSpec& spec, bool keep_internal)
{
  StateMatrix nodes = simulate_nodes(spec.tree, spec.state, spec.m, spec.seed);
  SimulationResult result;
  const int n = spec.tree.leaf_count();
  result.leaves.states = nodes.topRows(n);
  result.leaves.names = spec.tree.leaf_names();
  if (keep_internal)
    result.all_nodes = std::move(nodes);
  return result;
}

SequenceData simulate_pseudo_data(const Tree& tree, const ChangePointState& state, int m, Rng& rng)
{
  SequenceData data;
  data.states = simulate_nodes(tree, state, m, rng()).topRows(tree.leaf_count());
  return data;
}

} // namespace phylocp
