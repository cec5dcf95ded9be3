// dag.hpp - Validated causal DAG and elementary relatives.
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "causal/model.hpp"

namespace causal
{

/// Node identifiers, kept sorted so every query result has a canonical order.
using NodeSet = std::set<std::string>;

struct NodeRecord
{
  std::string name;
  NodeKind kind = NodeKind::observed;
  NodeRole role = NodeRole::covariate;
  std::vector<std::string> traces;
  std::optional<std::string> label;
  std::optional<bool> controllable;

  bool observed() const { return kind == NodeKind::observed; }
};

struct EdgeRecord
{
  std::string from;
  std::string to;
  std::vector<std::string> traces;
  std::optional<std::string> mechanism_tag;
};

class UnknownNodeError : public std::invalid_argument
{
public:
  explicit UnknownNodeError(const std::string & name)
      : std::invalid_argument("unknown node '" + name + "'"), name_(name)
  {
  }
  const std::string & name() const noexcept { return name_; }

private:
  std::string name_;
};

class CycleError : public std::runtime_error
{
public:
  explicit CycleError(std::vector<std::string> witness);
  /// Closed walk, first == last (e.g. A, B, C, A).
  const std::vector<std::string> & witness() const noexcept { return witness_; }

private:
  std::vector<std::string> witness_;
};

/// Raised for structural problems other than cycles (dangling endpoints,
/// disturbances with parents).
class GraphError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Immutable after construction. Public interfaces address nodes by name;
/// the index-based accessors exist for the analysis algorithms.
class CausalDag
{
public:
  static CausalDag build(const ModelDocument & doc);

  /// Convenience for tests and tools: all nodes observed covariates.
  static CausalDag from_edges(const std::vector<std::string> & nodes,
                              const std::vector<std::pair<std::string, std::string>> & edges);

  std::size_t size() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<NodeRecord> & nodes() const { return nodes_; }
  const std::vector<EdgeRecord> & edges() const { return edges_; }

  bool contains(const std::string & name) const { return index_.count(name) != 0; }
  std::size_t index(const std::string & name) const;
  const NodeRecord & node(const std::string & name) const { return nodes_[index(name)]; }
  const NodeRecord & node(std::size_t i) const { return nodes_[i]; }
  const std::string & name(std::size_t i) const { return nodes_[i].name; }
  const EdgeRecord * find_edge(const std::string & from, const std::string & to) const;
  bool adjacent(const std::string & a, const std::string & b) const;

  NodeSet parents(const std::string & x) const;
  NodeSet children(const std::string & x) const;
  NodeSet ancestors(const std::string & x) const;
  NodeSet descendants(const std::string & x) const;
  std::vector<std::string> topological_order() const;

  NodeSet all_nodes() const;
  NodeSet observed_nodes() const;
  std::optional<std::string> exposure() const;
  std::optional<std::string> outcome() const;
  /// Declared override, else true exactly for parentless nodes.
  bool controllable(const std::string & x) const;

  /// Copy without the edges leaving `x`.
  CausalDag without_outgoing(const std::string & x) const;
  /// Copy with `x` re-declared as observed or latent.
  CausalDag with_kind(const std::string & x, NodeKind kind) const;

  const std::vector<std::size_t> & parents_of(std::size_t i) const { return in_[i]; }
  const std::vector<std::size_t> & children_of(std::size_t i) const { return out_[i]; }
  std::vector<bool> ancestor_mask(const std::vector<std::size_t> & seeds) const;

private:
  CausalDag(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges);
  void check_acyclic() const;

  std::vector<NodeRecord> nodes_;
  std::vector<EdgeRecord> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::size_t>> out_;
  std::vector<std::vector<std::size_t>> in_;
};

/// Graphviz rendering: latent nodes filled gray, observed white; edges
/// coloured by mechanism tag.
std::string to_dot(const CausalDag & dag, const std::string & graph_name = "causal");

}  // namespace causal
