#include "phylocp/tree.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>
#include <unordered_map>

namespace phylocp {

NewickError::NewickError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at offset " + std::to_string(offset)), offset_(offset)
{
}

Tree::Tree(std::vector<NodeId> parent, std::vector<double> lengths, std::vector<std::string> leaf_names)
    : n_(static_cast<int>(leaf_names.size())),
      parent_(std::move(parent)),
      length_(std::move(lengths)),
      leaf_names_(std::move(leaf_names))
{
  if (n_ < 2)
    throw std::invalid_argument("unsupported tree: at least two leaves are required");
  const int nodes = 2 * n_ - 1;
  if (static_cast<int>(parent_.size()) != nodes || static_cast<int>(length_.size()) != nodes)
    throw std::invalid_argument("tree arrays must have 2n-1 entries");

  children_.assign(nodes, {0, 0});
  std::vector<int> arity(nodes, 0);
  for (NodeId id = 1; id <= nodes; ++id) {
    const NodeId p = parent_[id - 1];
    const double len = length_[id - 1];
    if (!std::isfinite(len) || len < 0.0)
      throw std::invalid_argument("branch lengths must be finite and nonnegative");
    if (id == nodes) {
      if (p != 0)
        throw std::invalid_argument("root must not have a parent");
      continue;
    }
    if (p <= n_ || p > nodes || p <= id)
      throw std::invalid_argument("parent ids must be internal and larger than the child id");
    if (arity[p - 1] == 2)
      throw std::invalid_argument("tree is not binary");
    children_[p - 1][arity[p - 1]++] = id;
  }
  for (NodeId id = n_ + 1; id <= nodes; ++id)
    if (arity[id - 1] != 2)
      throw std::invalid_argument("internal node without two children");
}

void Tree::check_id(NodeId id) const
{
  if (id < 1 || id > node_count())
    throw std::out_of_range("node id out of range");
}

NodeId Tree::parent(NodeId id) const
{
  check_id(id);
  return parent_[id - 1];
}

double Tree::branch_length(NodeId id) const
{
  check_id(id);
  return length_[id - 1];
}

const std::array<NodeId, 2>& Tree::children(NodeId id) const
{
  check_id(id);
  if (is_leaf(id))
    throw std::invalid_argument("leaves have no children");
  return children_[id - 1];
}

const std::string& Tree::leaf_name(NodeId id) const
{
  check_id(id);
  if (!is_leaf(id))
    throw std::invalid_argument("internal nodes are unnamed");
  return leaf_names_[id - 1];
}

namespace {

std::string format_length(double x)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_subtree(const Tree& t, NodeId id, std::string& out)
{
  if (t.is_leaf(id)) {
    out += t.leaf_name(id);
  } else {
    const auto& ch = t.children(id);
    out += '(';
    write_subtree(t, ch[0], out);
    out += ',';
    write_subtree(t, ch[1], out);
    out += ')';
  }
  out += ':';
  out += format_length(t.branch_length(id));
}

// Recursive-descent parser building an intermediate node graph, then
// numbering it.
struct RawNode {
  std::string label;
  double length = 0.0;
  bool has_length = false;
  std::size_t offset = 0;
  std::vector<std::unique_ptr<RawNode>> children;
};

class NewickParser {
 public:
  explicit NewickParser(std::string_view s) : s_(s) {}

  std::unique_ptr<RawNode> parse()
  {
    skip_ws();
    auto root = parse_node();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ';') {
      ++pos_;
      skip_ws();
    }
    if (pos_ != s_.size())
      fail("unexpected trailing characters");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const { throw NewickError(what, pos_); }

  // whitespace and bracketed comments
  void skip_ws()
  {
    while (pos_ < s_.size()) {
      if (std::isspace(static_cast<unsigned char>(s_[pos_]))) {
        ++pos_;
      } else if (s_[pos_] == '[') {
        const auto close = s_.find(']', pos_);
        if (close == std::string_view::npos)
          fail("unterminated comment");
        pos_ = close + 1;
      } else {
        break;
      }
    }
  }

  bool is_label_char(char c) const
  {
    return !std::isspace(static_cast<unsigned char>(c)) && c != '(' && c != ')' && c != ',' && c != ':' && c != ';' && c != '[' &&
           c != ']';
  }

  std::unique_ptr<RawNode> parse_node()
  {
    auto node = std::make_unique<RawNode>();
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == '(') {
      const std::size_t open = pos_;
      ++pos_;
      node->children.push_back(parse_node());
      skip_ws();
      while (pos_ < s_.size() && s_[pos_] == ',') {
        ++pos_;
        node->children.push_back(parse_node());
        skip_ws();
      }
      if (pos_ >= s_.size() || s_[pos_] != ')')
        fail("unbalanced parentheses: expected ')'");
      if (node->children.size() != 2)
        throw NewickError("non-binary node with " + std::to_string(node->children.size()) + " children", open);
      ++pos_;
    }
    skip_ws();
    const std::size_t label_start = pos_;
    while (pos_ < s_.size() && is_label_char(s_[pos_]))
      ++pos_;
    node->label = std::string(s_.substr(label_start, pos_ - label_start));
    node->offset = pos_;
    if (node->children.empty() && node->label.empty())
      fail("leaf without a label");
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == ':') {
      ++pos_;
      skip_ws();
      const char* first = s_.data() + pos_;
      const char* last = s_.data() + s_.size();
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc())
        fail("malformed branch length");
      pos_ += static_cast<std::size_t>(ptr - first);
      node->length = value;
      node->has_length = true;
    }
    return node;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

struct Numbering {
  std::vector<const RawNode*> leaves;
  std::vector<const RawNode*> internals; // post-order
};

void collect(const RawNode* node, Numbering& out)
{
  if (node->children.empty()) {
    out.leaves.push_back(node);
    return;
  }
  for (const auto& c : node->children)
    collect(c.get(), out);
  out.internals.push_back(node);
}

} // namespace

std::string Tree::to_newick() const
{
  std::string out;
  write_subtree(*this, root(), out);
  out += ';';
  return out;
}

Tree parse_newick(std::string_view text)
{
  const auto root = NewickParser(text).parse();
  if (root->children.empty())
    throw std::invalid_argument("unsupported tree: at least two leaves are required");

  Numbering order;
  collect(root.get(), order);
  const int n = static_cast<int>(order.leaves.size());
  const int nodes = 2 * n - 1;

  // Leaves first in textual order, then internal nodes in post-order.
  std::vector<const RawNode*> by_id;
  by_id.reserve(nodes);
  by_id.insert(by_id.end(), order.leaves.begin(), order.leaves.end());
  by_id.insert(by_id.end(), order.internals.begin(), order.internals.end());

  std::vector<NodeId> parent(nodes, 0);
  std::vector<double> lengths(nodes, 0.0);
  std::vector<std::string> names;
  names.reserve(n);
  std::set<std::string> seen;
  for (int i = 0; i < nodes; ++i) {
    const RawNode* node = by_id[i];
    if (i < n) {
      if (!seen.insert(node->label).second)
        throw std::invalid_argument("duplicate leaf label '" + node->label + "'");
      names.push_back(node->label);
    }
    if (i + 1 != nodes && !node->has_length)
      throw NewickError("missing branch length", node->offset);
    lengths[i] = node->has_length ? node->length : 0.0;
  }
  std::unordered_map<const RawNode*, NodeId> id_of;
  for (int i = 0; i < nodes; ++i)
    id_of[by_id[i]] = i + 1;
  for (int i = n; i < nodes; ++i)
    for (const auto& c : by_id[i]->children)
      parent[id_of.at(c.get()) - 1] = i + 1;
  return Tree(std::move(parent), std::move(lengths), std::move(names));
}

std::vector<NodeId> boundary_nodes(const Tree& tree, int g)
{
  const int n = tree.leaf_count();
  if (g < 1 || g > n)
    throw std::domain_error("truncation parameter g must lie in [1, n]");
  const NodeId last_kept = 2 * n - g;
  std::set<NodeId> boundary;
  for (NodeId id = 1; id <= last_kept; ++id) {
    const NodeId p = tree.parent(id);
    if (p > last_kept)
      boundary.insert(p);
  }
  return {boundary.begin(), boundary.end()};
}

} // namespace phylocp
