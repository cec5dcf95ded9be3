#include "causal/analysis.hpp"

#include <algorithm>
#include <deque>

namespace causal
{

std::string_view to_string(InnerRole role)
{
  switch (role) {
    case InnerRole::chain:
      return "chain";
    case InnerRole::fork:
      return "fork";
    case InnerRole::collider:
      return "collider";
  }
  return "chain";
}

std::string_view to_string(PathStatus status)
{
  return status == PathStatus::open ? "open" : "blocked";
}

std::optional<std::string> PathReport::fork() const
{
  for (std::size_t i = 0; i < inner_roles.size(); ++i) {
    if (inner_roles[i] == InnerRole::collider) return std::nullopt;
  }
  for (std::size_t i = 0; i < inner_roles.size(); ++i) {
    if (inner_roles[i] == InnerRole::fork) return nodes[i + 1];
  }
  return std::nullopt;
}

namespace
{

void check_query(const CausalDag & dag, const SeparationQuery & q)
{
  dag.index(q.x);
  dag.index(q.y);
  for (const auto & z : q.given) dag.index(z);
  if (q.x == q.y) throw std::invalid_argument("separation query needs two distinct nodes");
  if (q.given.count(q.x) || q.given.count(q.y)) {
    throw std::invalid_argument("separation query conditions on one of its endpoints");
  }
}

std::vector<std::size_t> indices(const CausalDag & dag, const NodeSet & names)
{
  std::vector<std::size_t> out;
  for (const auto & n : names) out.push_back(dag.index(n));
  return out;
}

bool has_edge(const CausalDag & dag, std::size_t from, std::size_t to)
{
  const auto & ch = dag.children_of(from);
  return std::find(ch.begin(), ch.end(), to) != ch.end();
}

PathReport classify(const CausalDag & dag, const std::vector<std::size_t> & path, const std::vector<bool> & in_given,
                    const std::vector<bool> & given_ancestor)
{
  PathReport report;
  report.directed = true;
  bool blocked = false;
  for (std::size_t i = 0; i < path.size(); ++i) {
    report.nodes.push_back(dag.name(path[i]));
    if (i + 1 < path.size() && !has_edge(dag, path[i], path[i + 1])) report.directed = false;
    if (i == 0 || i + 1 == path.size()) continue;
    const bool in_from_prev = has_edge(dag, path[i - 1], path[i]);
    const bool in_from_next = has_edge(dag, path[i + 1], path[i]);
    InnerRole role;
    if (in_from_prev && in_from_next) {
      role = InnerRole::collider;
    } else if (!in_from_prev && !in_from_next) {
      role = InnerRole::fork;
    } else {
      role = InnerRole::chain;
    }
    report.inner_roles.push_back(role);
    if (role == InnerRole::collider) {
      // given_ancestor covers "the collider or one of its descendants is conditioned on".
      if (!given_ancestor[path[i]]) blocked = true;
    } else {
      report.blockers.insert(dag.name(path[i]));
      if (in_given[path[i]]) blocked = true;
    }
  }
  report.status = blocked ? PathStatus::blocked : PathStatus::open;
  return report;
}

}  // namespace

std::vector<PathReport> enumerate_paths(const CausalDag & dag, const std::string & x, const std::string & y,
                                        const NodeSet & given, std::size_t cap)
{
  const std::size_t source = dag.index(x);
  const std::size_t target = dag.index(y);
  for (const auto & z : given) dag.index(z);
  if (source == target) throw std::invalid_argument("path enumeration needs two distinct nodes");

  std::vector<bool> in_given(dag.size(), false);
  const auto zs = indices(dag, given);
  for (std::size_t z : zs) in_given[z] = true;
  const std::vector<bool> given_ancestor = dag.ancestor_mask(zs);

  // Neighbours sorted by name make depth-first order lexicographic.
  std::vector<std::vector<std::size_t>> nbrs(dag.size());
  for (std::size_t u = 0; u < dag.size(); ++u) {
    auto & v = nbrs[u];
    v = dag.parents_of(u);
    v.insert(v.end(), dag.children_of(u).begin(), dag.children_of(u).end());
    std::sort(v.begin(), v.end(), [&](auto a, auto b) { return dag.name(a) < dag.name(b); });
  }

  std::vector<PathReport> out;
  std::vector<std::size_t> path{source};
  std::vector<bool> on_path(dag.size(), false);
  on_path[source] = true;

  // Explicit stack of neighbour cursors keeps deep graphs off the call stack.
  std::vector<std::size_t> cursor{0};
  while (!cursor.empty()) {
    const std::size_t u = path.back();
    std::size_t & k = cursor.back();
    if (k == nbrs[u].size()) {
      on_path[u] = false;
      path.pop_back();
      cursor.pop_back();
      continue;
    }
    const std::size_t v = nbrs[u][k++];
    if (on_path[v]) continue;
    if (v == target) {
      if (out.size() == cap) throw PathOverflowError(cap);
      path.push_back(v);
      out.push_back(classify(dag, path, in_given, given_ancestor));
      path.pop_back();
      continue;
    }
    on_path[v] = true;
    path.push_back(v);
    cursor.push_back(0);
  }
  return out;
}

bool d_separated(const CausalDag & dag, const SeparationQuery & query)
{
  check_query(dag, query);
  const std::size_t n = dag.size();
  const auto zs = indices(dag, query.given);
  std::vector<bool> in_given(n, false);
  for (std::size_t z : zs) in_given[z] = true;
  const std::vector<bool> active_collider = dag.ancestor_mask(zs);
  const std::size_t target = dag.index(query.y);

  // State: node plus direction of arrival. `up` means we came from a child
  // (travelling against the edge), `down` from a parent.
  std::vector<bool> seen_up(n, false);
  std::vector<bool> seen_down(n, false);
  std::deque<std::pair<std::size_t, bool>> todo;  // (node, up)
  todo.emplace_back(dag.index(query.x), true);

  while (!todo.empty()) {
    auto [u, up] = todo.front();
    todo.pop_front();
    if (up ? seen_up[u] : seen_down[u]) continue;
    (up ? seen_up : seen_down)[u] = true;
    if (u == target) return false;

    if (up) {
      if (in_given[u]) continue;
      for (std::size_t p : dag.parents_of(u)) todo.emplace_back(p, true);
      for (std::size_t c : dag.children_of(u)) todo.emplace_back(c, false);
    } else {
      if (!in_given[u]) {
        for (std::size_t c : dag.children_of(u)) todo.emplace_back(c, false);
      }
      if (active_collider[u]) {
        for (std::size_t p : dag.parents_of(u)) todo.emplace_back(p, true);
      }
    }
  }
  return true;
}

bool d_separated_by_paths(const CausalDag & dag, const SeparationQuery & query, std::size_t cap)
{
  check_query(dag, query);
  for (const auto & p : enumerate_paths(dag, query.x, query.y, query.given, cap)) {
    if (p.open()) return false;
  }
  return true;
}

ExposurePaths classify_exposure_paths(const CausalDag & dag, const std::string & exposure,
                                      const std::string & outcome)
{
  ExposurePaths out;
  for (auto & p : enumerate_paths(dag, exposure, outcome)) {
    if (p.directed) {
      out.causal.push_back(std::move(p));
    } else if (p.open()) {
      out.biasing_open.push_back(std::move(p));
    } else {
      out.blocked.push_back(std::move(p));
    }
  }
  return out;
}

bool satisfies_backdoor(const CausalDag & dag, const std::string & exposure, const std::string & outcome,
                        const NodeSet & set)
{
  const NodeSet desc = dag.descendants(exposure);
  for (const auto & s : set) {
    if (desc.count(s) || s == exposure || s == outcome) return false;
  }
  // Removing the exposure's outgoing edges leaves exactly the paths that enter it.
  return d_separated(dag.without_outgoing(exposure), {exposure, outcome, set});
}

std::vector<AdjustmentSet> backdoor_sets(const CausalDag & dag, const std::string & exposure,
                                         const std::string & outcome, const NodeSet & candidates,
                                         std::size_t max_size)
{
  dag.index(exposure);
  dag.index(outcome);
  if (exposure == outcome) throw std::invalid_argument("exposure and outcome must differ");
  for (const auto & c : candidates) {
    dag.index(c);
    if (c == exposure || c == outcome) {
      throw std::invalid_argument("adjustment candidates must exclude exposure and outcome ('" + c + "')");
    }
  }

  const NodeSet desc = dag.descendants(exposure);
  std::vector<std::string> pool;
  for (const auto & c : candidates) {
    if (!desc.count(c)) pool.push_back(c);
  }
  const CausalDag mutilated = dag.without_outgoing(exposure);

  std::vector<AdjustmentSet> found;
  auto contains_found = [&](const NodeSet & s) {
    return std::any_of(found.begin(), found.end(), [&](const AdjustmentSet & f) {
      return std::includes(s.begin(), s.end(), f.members.begin(), f.members.end());
    });
  };

  const std::size_t limit = std::min(max_size, pool.size());
  for (std::size_t k = 0; k <= limit; ++k) {
    // Lexicographic k-combinations of pool indices.
    std::vector<std::size_t> comb(k);
    for (std::size_t i = 0; i < k; ++i) comb[i] = i;
    for (;;) {
      NodeSet s;
      for (std::size_t i : comb) s.insert(pool[i]);
      if (!contains_found(s) && d_separated(mutilated, {exposure, outcome, s})) found.push_back({s, true});

      std::size_t i = k;
      while (i > 0 && comb[i - 1] == pool.size() - k + i - 1) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return found;
}

NodeSet find_instruments(const CausalDag & dag, const std::string & exposure, const std::string & outcome,
                         const NodeSet & candidates)
{
  dag.index(exposure);
  dag.index(outcome);
  const CausalDag mutilated = dag.without_outgoing(exposure);
  NodeSet out;
  for (const auto & z : candidates) {
    dag.index(z);
    if (z == exposure || z == outcome) {
      throw std::invalid_argument("instrument candidates must exclude exposure and outcome ('" + z + "')");
    }
    const bool relevant = !d_separated(dag, {z, exposure, {}});
    const bool excluded = d_separated(mutilated, {z, outcome, {}});
    if (relevant && excluded) out.insert(z);
  }
  return out;
}

NodeSet admissible_blockers(const CausalDag & dag, const PathReport & path, const std::string & exposure)
{
  const NodeSet desc = dag.descendants(exposure);
  NodeSet out;
  for (const auto & b : path.blockers) {
    if (!desc.count(b)) out.insert(b);
  }
  return out;
}

NodeSet observability_gaps(const CausalDag & dag, const std::string & exposure, const std::string & outcome)
{
  NodeSet gaps;
  for (const auto & path : classify_exposure_paths(dag, exposure, outcome).biasing_open) {
    const NodeSet blockers = admissible_blockers(dag, path, exposure);
    const bool observable = std::any_of(blockers.begin(), blockers.end(),
                                        [&](const std::string & b) { return dag.node(b).observed(); });
    if (observable) continue;
    for (const auto & b : blockers) gaps.insert(b);
  }
  return gaps;
}

}  // namespace causal
