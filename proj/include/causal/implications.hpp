// implications.hpp - Conditional independencies implied by a causal DAG.
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "causal/dag.hpp"

namespace causal
{

enum class Provenance { local_markov, minimal_separator, user_asserted };

std::string_view to_string(Provenance p);

/// x ⊥ y | given, stored with x < y.
struct CiStatement
{
  std::string x;
  std::string y;
  NodeSet given;
  Provenance provenance = Provenance::minimal_separator;
  std::string tag;  // optional author tag (e.g. "ID1") for user-asserted statements

  static CiStatement make(std::string a, std::string b, NodeSet given,
                          Provenance provenance = Provenance::minimal_separator);

  /// Same pair and conditioning set, ignoring provenance and tag.
  bool same_claim(const CiStatement & other) const
  {
    return x == other.x && y == other.y && given == other.given;
  }
  bool involves(const std::string & v) const { return x == v || y == v; }

  bool operator==(const CiStatement &) const = default;
};

/// "X ⊥ Y | A, B" (or "X ⊥ Y" for an empty conditioning set).
std::string to_string(const CiStatement & s);

/// Pairwise local Markov statements: each node against every non-descendant
/// non-parent, given its parents.
std::vector<CiStatement> local_markov_basis(const CausalDag & dag);

/// Smallest subset of the statement's conditioning set that still separates
/// its pair (lexicographically first among the smallest).
CiStatement reduce(const CausalDag & dag, const CiStatement & statement);

/// For each non-adjacent pair in `scope`, every minimal separating set drawn
/// from scope with at most `max_given` members. Sorted by pair, then size,
/// then lexicographically.
std::vector<CiStatement> implied_independencies(const CausalDag & dag, const NodeSet & scope,
                                                std::size_t max_given);

bool verify(const CausalDag & dag, const CiStatement & statement);

/// Statements declared in the model document, in declaration order.
std::vector<CiStatement> asserted_statements(const ModelDocument & doc);

}  // namespace causal
