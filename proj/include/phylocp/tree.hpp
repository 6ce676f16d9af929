#ifndef PHYLOCP_TREE_HPP
#define PHYLOCP_TREE_HPP

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace phylocp {

/// Node identifier. Leaves are 1..n, internal nodes n+1..2n-1, root 2n-1.
using NodeId = int;

class NewickError : public std::runtime_error {
 public:
  NewickError(const std::string& what, std::size_t offset);
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Rooted, strictly binary tree with known branch lengths.
///
/// Nodes are numbered backwards in time: every parent id is larger than the
/// ids of its children, so the suffix {2n-g+1, ..., 2n-1} always holds the
/// g-1 top-most nodes. Leaves are numbered by their order of appearance in
/// the Newick text and internal nodes by post-order traversal.
class Tree {
 public:
  /// `parent[i-1]` is the parent of node i (0 for the root); `lengths[i-1]`
  /// the length of the branch above node i. Validates every invariant.
  Tree(std::vector<NodeId> parent, std::vector<double> lengths, std::vector<std::string> leaf_names);

  int leaf_count() const noexcept { return n_; }
  int node_count() const noexcept { return 2 * n_ - 1; }
  NodeId root() const noexcept { return 2 * n_ - 1; }
  bool is_leaf(NodeId id) const noexcept { return id <= n_; }

  NodeId parent(NodeId id) const;
  double branch_length(NodeId id) const;
  const std::array<NodeId, 2>& children(NodeId id) const;
  const std::string& leaf_name(NodeId id) const;
  const std::vector<std::string>& leaf_names() const noexcept { return leaf_names_; }

  /// Newick serialization with round-trippable branch lengths.
  std::string to_newick() const;

  friend bool operator==(const Tree&, const Tree&) = default;

 private:
  void check_id(NodeId id) const;

  int n_;
  std::vector<NodeId> parent_;
  std::vector<double> length_;
  std::vector<std::array<NodeId, 2>> children_;
  std::vector<std::string> leaf_names_;
};

/// Rooted binary Newick with a length on every non-root branch. Bracketed
/// comments are skipped.
Tree parse_newick(std::string_view text);

/// Removed nodes {2n-g+1..2n-1} that are parents of at least one kept node
/// {1..2n-g}, in increasing order. Empty for g = 1.
std::vector<NodeId> boundary_nodes(const Tree& tree, int g);

} // namespace phylocp

#endif
