#include "causal/dag.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <sstream>

namespace causal
{

namespace
{

std::string describe_cycle(const std::vector<std::string> & witness)
{
  std::string out = "cycle detected: ";
  for (std::size_t i = 0; i < witness.size(); ++i) {
    if (i) out += " -> ";
    out += witness[i];
  }
  return out;
}

}  // namespace

CycleError::CycleError(std::vector<std::string> witness)
    : std::runtime_error(describe_cycle(witness)), witness_(std::move(witness))
{
}

CausalDag::CausalDag(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), out_(nodes_.size()), in_(nodes_.size())
{
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!index_.emplace(nodes_[i].name, i).second) {
      throw GraphError("duplicate node '" + nodes_[i].name + "'");
    }
  }
  for (const auto & e : edges_) {
    auto from = index_.find(e.from);
    auto to = index_.find(e.to);
    if (from == index_.end()) throw GraphError("dangling edge endpoint '" + e.from + "'");
    if (to == index_.end()) throw GraphError("dangling edge endpoint '" + e.to + "'");
    out_[from->second].push_back(to->second);
    in_[to->second].push_back(from->second);
  }
  auto by_name = [this](std::size_t a, std::size_t b) { return nodes_[a].name < nodes_[b].name; };
  for (auto & v : out_) std::sort(v.begin(), v.end(), by_name);
  for (auto & v : in_) std::sort(v.begin(), v.end(), by_name);
  check_acyclic();
}

CausalDag CausalDag::build(const ModelDocument & doc)
{
  std::vector<NodeRecord> nodes;
  nodes.reserve(doc.nodes.size());
  for (const auto & n : doc.nodes) nodes.push_back({n.name, n.kind, n.role, n.traces, n.label, n.controllable});
  std::vector<EdgeRecord> edges;
  edges.reserve(doc.edges.size());
  for (const auto & e : doc.edges) {
    if (e.from == e.to) throw CycleError({e.from, e.to});
    edges.push_back({e.from, e.to, e.traces, e.mechanism_tag});
  }
  CausalDag dag(std::move(nodes), std::move(edges));
  for (std::size_t i = 0; i < dag.size(); ++i) {
    if (dag.nodes_[i].role == NodeRole::disturbance && !dag.in_[i].empty()) {
      throw GraphError("disturbance node '" + dag.nodes_[i].name + "' must not have parents");
    }
  }
  return dag;
}

CausalDag CausalDag::from_edges(const std::vector<std::string> & nodes,
                                const std::vector<std::pair<std::string, std::string>> & edges)
{
  std::vector<NodeRecord> records;
  for (const auto & n : nodes) records.push_back({n, NodeKind::observed, NodeRole::covariate, {}, {}, {}});
  std::vector<EdgeRecord> es;
  for (const auto & [a, b] : edges) {
    if (a == b) throw CycleError({a, b});
    es.push_back({a, b, {}, {}});
  }
  return CausalDag(std::move(records), std::move(es));
}

void CausalDag::check_acyclic() const
{
  // Depth-first search; the first back edge closes the reported witness.
  enum class Mark { white, grey, black };
  std::vector<Mark> mark(nodes_.size(), Mark::white);
  std::vector<std::size_t> stack;

  std::vector<std::size_t> order(nodes_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [this](auto a, auto b) { return nodes_[a].name < nodes_[b].name; });

  std::function<void(std::size_t)> visit = [&](std::size_t u) {
    mark[u] = Mark::grey;
    stack.push_back(u);
    for (std::size_t v : out_[u]) {
      if (mark[v] == Mark::grey) {
        auto start = std::find(stack.begin(), stack.end(), v);
        std::vector<std::string> witness;
        for (auto it = start; it != stack.end(); ++it) witness.push_back(nodes_[*it].name);
        witness.push_back(nodes_[v].name);
        throw CycleError(std::move(witness));
      }
      if (mark[v] == Mark::white) visit(v);
    }
    stack.pop_back();
    mark[u] = Mark::black;
  };
  for (std::size_t u : order) {
    if (mark[u] == Mark::white) visit(u);
  }
}

std::size_t CausalDag::index(const std::string & name) const
{
  auto it = index_.find(name);
  if (it == index_.end()) throw UnknownNodeError(name);
  return it->second;
}

const EdgeRecord * CausalDag::find_edge(const std::string & from, const std::string & to) const
{
  for (const auto & e : edges_) {
    if (e.from == from && e.to == to) return &e;
  }
  return nullptr;
}

bool CausalDag::adjacent(const std::string & a, const std::string & b) const
{
  const std::size_t ia = index(a);
  const std::size_t ib = index(b);
  auto has = [](const std::vector<std::size_t> & v, std::size_t x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  return has(out_[ia], ib) || has(in_[ia], ib);
}

NodeSet CausalDag::parents(const std::string & x) const
{
  NodeSet out;
  for (std::size_t p : in_[index(x)]) out.insert(nodes_[p].name);
  return out;
}

NodeSet CausalDag::children(const std::string & x) const
{
  NodeSet out;
  for (std::size_t c : out_[index(x)]) out.insert(nodes_[c].name);
  return out;
}

namespace
{

NodeSet closure(const CausalDag & dag, std::size_t start, bool upward)
{
  std::vector<bool> seen(dag.size(), false);
  std::vector<std::size_t> todo{start};
  NodeSet out;
  while (!todo.empty()) {
    std::size_t u = todo.back();
    todo.pop_back();
    for (std::size_t v : upward ? dag.parents_of(u) : dag.children_of(u)) {
      if (!seen[v]) {
        seen[v] = true;
        out.insert(dag.name(v));
        todo.push_back(v);
      }
    }
  }
  return out;
}

}  // namespace

NodeSet CausalDag::ancestors(const std::string & x) const
{
  return closure(*this, index(x), true);
}

NodeSet CausalDag::descendants(const std::string & x) const
{
  return closure(*this, index(x), false);
}

std::vector<bool> CausalDag::ancestor_mask(const std::vector<std::size_t> & seeds) const
{
  std::vector<bool> mask(size(), false);
  std::vector<std::size_t> todo;
  for (std::size_t s : seeds) {
    if (!mask[s]) {
      mask[s] = true;
      todo.push_back(s);
    }
  }
  while (!todo.empty()) {
    std::size_t u = todo.back();
    todo.pop_back();
    for (std::size_t p : in_[u]) {
      if (!mask[p]) {
        mask[p] = true;
        todo.push_back(p);
      }
    }
  }
  return mask;
}

std::vector<std::string> CausalDag::topological_order() const
{
  // Kahn's algorithm, ties broken by name so the order ignores declaration order.
  std::vector<std::size_t> indegree(size());
  for (std::size_t i = 0; i < size(); ++i) indegree[i] = in_[i].size();
  auto later = [this](std::size_t a, std::size_t b) { return nodes_[a].name > nodes_[b].name; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
  for (std::size_t i = 0; i < size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::string> order;
  order.reserve(size());
  while (!ready.empty()) {
    std::size_t u = ready.top();
    ready.pop();
    order.push_back(nodes_[u].name);
    for (std::size_t v : out_[u]) {
      if (--indegree[v] == 0) ready.push(v);
    }
  }
  return order;
}

NodeSet CausalDag::all_nodes() const
{
  NodeSet out;
  for (const auto & n : nodes_) out.insert(n.name);
  return out;
}

NodeSet CausalDag::observed_nodes() const
{
  NodeSet out;
  for (const auto & n : nodes_) {
    if (n.observed()) out.insert(n.name);
  }
  return out;
}

std::optional<std::string> CausalDag::exposure() const
{
  for (const auto & n : nodes_) {
    if (n.role == NodeRole::exposure) return n.name;
  }
  return std::nullopt;
}

std::optional<std::string> CausalDag::outcome() const
{
  for (const auto & n : nodes_) {
    if (n.role == NodeRole::outcome) return n.name;
  }
  return std::nullopt;
}

bool CausalDag::controllable(const std::string & x) const
{
  const std::size_t i = index(x);
  if (nodes_[i].controllable) return *nodes_[i].controllable;
  return in_[i].empty();
}

CausalDag CausalDag::without_outgoing(const std::string & x) const
{
  index(x);
  std::vector<EdgeRecord> kept;
  for (const auto & e : edges_) {
    if (e.from != x) kept.push_back(e);
  }
  return CausalDag(nodes_, std::move(kept));
}

CausalDag CausalDag::with_kind(const std::string & x, NodeKind kind) const
{
  std::vector<NodeRecord> nodes = nodes_;
  nodes[index(x)].kind = kind;
  return CausalDag(std::move(nodes), edges_);
}

std::string to_dot(const CausalDag & dag, const std::string & graph_name)
{
  static const std::map<std::string, std::string> palette{
    {"temperature", "#008000"}, {"flux", "#008080"},   {"power", "#00cccc"},
    {"mechanical", "#800000"},  {"environment", "#ff5555"}, {"noise", "#808080"},
  };
  const char * fallback[] = {"#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#bcbd22"};

  auto quoted = [](const std::string & s) {
    std::string out = "\"";
    for (char c : s) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    return out + "\"";
  };

  std::ostringstream out;
  out << "digraph " << quoted(graph_name) << " {\n";
  out << "  rankdir=LR;\n  node [shape=ellipse, style=filled];\n";
  for (const auto & n : dag.nodes()) {
    out << "  " << quoted(n.name) << " [label=" << quoted(n.label.value_or(n.name))
        << ", fillcolor=" << (n.observed() ? "white" : "gray");
    if (n.role == NodeRole::exposure || n.role == NodeRole::outcome) out << ", penwidth=2";
    out << "];\n";
  }
  std::map<std::string, std::string> assigned;
  std::size_t next_color = 0;
  for (const auto & e : dag.edges()) {
    out << "  " << quoted(e.from) << " -> " << quoted(e.to);
    if (e.mechanism_tag) {
      auto known = palette.find(*e.mechanism_tag);
      std::string color;
      if (known != palette.end()) {
        color = known->second;
      } else {
        auto [it, fresh] = assigned.emplace(*e.mechanism_tag, "");
        if (fresh) it->second = fallback[next_color++ % std::size(fallback)];
        color = it->second;
      }
      out << " [color=" << quoted(color) << ", label=" << quoted(*e.mechanism_tag) << "]";
    }
    out << ";\n";
  }
  out << "}\n";
  return out.str();
}

}  // namespace causal
