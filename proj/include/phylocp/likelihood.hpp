#ifndef PHYLOCP_LIKELIHOOD_HPP
#define PHYLOCP_LIKELIHOOD_HPP

#include <vector>

#include <Eigen/Core>

#include "phylocp/changepoint.hpp"
#include "phylocp/sequence.hpp"
#include "phylocp/subst_model.hpp"
#include "phylocp/tree.hpp"

namespace phylocp {

/// Observed-data log-likelihood of the change-point model by pruning.
///
/// With g = 1 the likelihood is exact. With 2 <= g <= n the top g-1 nodes
/// are cut off: every boundary node (a removed node with a kept child) gets
/// an independent stationary marginal and only its kept children hang below
/// it. g = 2 replaces just the root by its stationary law and is therefore
/// also exact under a stationary root.
///
/// Evaluation is O(m p^2 (2n-g)). Sites are evaluated in parallel for long
/// alignments; the reduction order is fixed, so results do not depend on
/// the thread count.
class LikelihoodEngine {
 public:
  explicit LikelihoodEngine(Tree tree, int g = 1);

  const Tree& tree() const noexcept { return tree_; }
  int g() const noexcept { return g_; }
  /// Boundary set of the truncation (empty for g = 1).
  const std::vector<NodeId>& boundary() const noexcept { return boundary_; }

  double site_log_likelihood(double theta, const SequenceData& data, int site) const;
  /// Sum of site terms over sites [first, last) at a common rate.
  double block_log_likelihood(double theta, const SequenceData& data, int first, int last) const;
  double log_likelihood(const ChangePointState& state, const SequenceData& data) const;

  /// Sites at or above which evaluation fans out across threads.
  static constexpr int kParallelSiteThreshold = 256;

 private:
  struct Workspace {
    std::vector<TransitionMatrix<double>> transition;
    std::vector<Eigen::Array4d> partial;
  };

  void prepare(Workspace& ws, double theta) const;
  double site_term(Workspace& ws, const SequenceData& data, int column) const;
  void check_data(const SequenceData& data) const;

  Tree tree_;
  int g_;
  int last_kept_;
  std::vector<NodeId> boundary_;
  std::vector<std::vector<NodeId>> top_children_;
};

double segmented_log_likelihood(const Tree& tree, const ChangePointState& state, const SequenceData& data);
double time_machine_log_likelihood(const Tree& tree, int g, const ChangePointState& state, const SequenceData& data);

/// Mean wall-clock seconds of one full-data likelihood evaluation at a
/// single rate, averaged over `repeats` evaluations.
double complexity_probe(const LikelihoodEngine& engine, const SequenceData& data, double theta, int repeats = 20);

} // namespace phylocp

#endif
