#include "causal/implications.hpp"

#include <algorithm>
#include <stdexcept>

#include "causal/analysis.hpp"

namespace causal
{

std::string_view to_string(Provenance p)
{
  switch (p) {
    case Provenance::local_markov:
      return "local_markov";
    case Provenance::minimal_separator:
      return "minimal_separator";
    case Provenance::user_asserted:
      return "user_asserted";
  }
  return "minimal_separator";
}

CiStatement CiStatement::make(std::string a, std::string b, NodeSet given, Provenance provenance)
{
  if (a == b) throw std::invalid_argument("independence statement needs two distinct variables");
  if (given.count(a) || given.count(b)) {
    throw std::invalid_argument("independence statement conditions on one of its own variables");
  }
  if (b < a) std::swap(a, b);
  return CiStatement{std::move(a), std::move(b), std::move(given), provenance, {}};
}

std::string to_string(const CiStatement & s)
{
  std::string out = s.x + " ⊥ " + s.y;
  if (!s.given.empty()) {
    out += " | ";
    bool first = true;
    for (const auto & g : s.given) {
      if (!first) out += ", ";
      first = false;
      out += g;
    }
  }
  return out;
}

namespace
{

bool statement_less(const CiStatement & a, const CiStatement & b)
{
  if (a.x != b.x) return a.x < b.x;
  if (a.y != b.y) return a.y < b.y;
  if (a.given.size() != b.given.size()) return a.given.size() < b.given.size();
  return a.given < b.given;
}

/// Calls visit(subset) for each subset of `pool` of size k, lexicographically.
template <typename Visit>
void for_each_combination(const std::vector<std::string> & pool, std::size_t k, Visit && visit)
{
  if (k > pool.size()) return;
  std::vector<std::size_t> comb(k);
  for (std::size_t i = 0; i < k; ++i) comb[i] = i;
  for (;;) {
    NodeSet s;
    for (std::size_t i : comb) s.insert(pool[i]);
    visit(s);
    std::size_t i = k;
    while (i > 0 && comb[i - 1] == pool.size() - k + i - 1) --i;
    if (i == 0) return;
    ++comb[i - 1];
    for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
  }
}

}  // namespace

std::vector<CiStatement> local_markov_basis(const CausalDag & dag)
{
  std::vector<CiStatement> out;
  for (const auto & node : dag.nodes()) {
    const NodeSet parents = dag.parents(node.name);
    const NodeSet desc = dag.descendants(node.name);
    for (const auto & other : dag.nodes()) {
      if (other.name == node.name || desc.count(other.name) || parents.count(other.name)) continue;
      out.push_back(CiStatement::make(node.name, other.name, parents, Provenance::local_markov));
    }
  }
  std::sort(out.begin(), out.end(), statement_less);
  out.erase(std::unique(out.begin(), out.end(), [](const auto & a, const auto & b) { return a.same_claim(b); }),
            out.end());
  return out;
}

CiStatement reduce(const CausalDag & dag, const CiStatement & statement)
{
  const std::vector<std::string> pool(statement.given.begin(), statement.given.end());
  for (std::size_t k = 0; k <= pool.size(); ++k) {
    std::optional<NodeSet> hit;
    for_each_combination(pool, k, [&](const NodeSet & s) {
      if (!hit && d_separated(dag, {statement.x, statement.y, s})) hit = s;
    });
    if (hit) {
      CiStatement out = statement;
      out.given = *hit;
      return out;
    }
  }
  throw std::invalid_argument("statement " + to_string(statement) + " is not implied by the graph");
}

std::vector<CiStatement> implied_independencies(const CausalDag & dag, const NodeSet & scope, std::size_t max_given)
{
  if (scope.size() < 2) throw std::invalid_argument("implication scope needs at least two variables");
  for (const auto & v : scope) dag.index(v);

  const std::vector<std::string> vars(scope.begin(), scope.end());
  std::vector<CiStatement> out;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    for (std::size_t j = i + 1; j < vars.size(); ++j) {
      const std::string & x = vars[i];
      const std::string & y = vars[j];
      if (dag.adjacent(x, y)) continue;

      std::vector<std::string> pool;
      for (const auto & v : vars) {
        if (v != x && v != y) pool.push_back(v);
      }
      // Growing subsets by size: a separating set is minimal iff it contains
      // no smaller separating set found earlier.
      std::vector<NodeSet> minimal;
      for (std::size_t k = 0; k <= std::min(max_given, pool.size()); ++k) {
        for_each_combination(pool, k, [&](const NodeSet & s) {
          for (const auto & m : minimal) {
            if (std::includes(s.begin(), s.end(), m.begin(), m.end())) return;
          }
          if (d_separated(dag, {x, y, s})) minimal.push_back(s);
        });
      }
      for (auto & m : minimal) out.push_back(CiStatement::make(x, y, std::move(m)));
    }
  }
  std::sort(out.begin(), out.end(), statement_less);
  return out;
}

bool verify(const CausalDag & dag, const CiStatement & statement)
{
  return d_separated(dag, {statement.x, statement.y, statement.given});
}

std::vector<CiStatement> asserted_statements(const ModelDocument & doc)
{
  std::vector<CiStatement> out;
  for (const auto & ind : doc.independencies) {
    CiStatement s = CiStatement::make(ind.x, ind.y, NodeSet(ind.given.begin(), ind.given.end()),
                                      Provenance::user_asserted);
    s.tag = ind.tag;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace causal
