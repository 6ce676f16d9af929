#ifndef PHYLOCP_SIMULATE_HPP
#define PHYLOCP_SIMULATE_HPP

#include <cstdint>
#include <optional>

#include "phylocp/changepoint.hpp"
#include "phylocp/random.hpp"
#include "phylocp/sequence.hpp"
#include "phylocp/tree.hpp"

namespace phylocp {

struct SimulationSpec {
  Tree tree;
  ChangePointState state;
  int m = 0;
  std::uint64_t seed = 1;
};

struct SimulationResult {
  SequenceData leaves;
  /// States of all 2n-1 nodes (row i = node i+1), when requested.
  std::optional<StateMatrix> all_nodes;
};

/// Forward simulation: at every site of segment j the root is drawn from the
/// stationary law and each branch applies the transition kernel at rate
/// theta_j. Site l uses its own substream (seed, l), so output does not
/// depend on the thread count.
SimulationResult simulate_dataset(const SimulationSpec& spec, bool keep_internal = false);

/// Same generator with the seed taken from `rng`.
SequenceData simulate_pseudo_data(const Tree& tree, const ChangePointState& state, int m, Rng& rng);

} // namespace phylocp

#endif
