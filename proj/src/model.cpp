#include "causal/model.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace causal
{

std::string_view to_string(NodeKind kind)
{
  return kind == NodeKind::observed ? "observed" : "latent";
}

std::string_view to_string(NodeRole role)
{
  switch (role) {
    case NodeRole::exposure:
      return "exposure";
    case NodeRole::outcome:
      return "outcome";
    case NodeRole::covariate:
      return "covariate";
    case NodeRole::disturbance:
      return "disturbance";
  }
  return "covariate";
}

std::optional<NodeKind> parse_node_kind(std::string_view text)
{
  if (text == "observed") return NodeKind::observed;
  if (text == "latent") return NodeKind::latent;
  return std::nullopt;
}

std::optional<NodeRole> parse_node_role(std::string_view text)
{
  if (text == "exposure") return NodeRole::exposure;
  if (text == "outcome") return NodeRole::outcome;
  if (text == "covariate") return NodeRole::covariate;
  if (text == "disturbance") return NodeRole::disturbance;
  return std::nullopt;
}

const NodeDecl * ModelDocument::find_node(std::string_view name) const
{
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeDecl & n) { return n.name == name; });
  return it == nodes.end() ? nullptr : &*it;
}

NodeDecl * ModelDocument::find_node(std::string_view name)
{
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeDecl & n) { return n.name == name; });
  return it == nodes.end() ? nullptr : &*it;
}

namespace
{

std::string format_error(const std::string & message, const SourcePosition & pos)
{
  if (pos.line == 0) return message;
  std::ostringstream out;
  out << pos.line << ':' << pos.column << ": " << message;
  return out.str();
}

bool is_identifier(std::string_view s)
{
  if (s.empty()) return false;
  if (!(std::isalpha(static_cast<unsigned char>(s.front())) || s.front() == '_')) return false;
  if (s.back() == '-') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

class Checker
{
public:
  Checker(const ModelDocument & doc, const DeclarationSites * sites) : doc_(doc), sites_(sites) {}

  void run()
  {
    std::set<std::string> tags;
    for (const auto & a : doc_.assumptions) {
      require_identifier(a.tag, "assume:" + a.tag, "assumption tag");
      if (!tags.insert(a.tag).second) fail("duplicate assumption tag '" + a.tag + "'", "assume:" + a.tag, a.tag);
    }

    std::set<std::string> names;
    int exposures = 0;
    int outcomes = 0;
    for (const auto & n : doc_.nodes) {
      const std::string key = "node:" + n.name;
      require_identifier(n.name, key, "node name");
      if (!names.insert(n.name).second) fail("duplicate node '" + n.name + "'", key, n.name);
      if (n.role == NodeRole::exposure && ++exposures > 1)
        fail("more than one exposure node ('" + n.name + "')", key, n.name);
      if (n.role == NodeRole::outcome && ++outcomes > 1)
        fail("more than one outcome node ('" + n.name + "')", key, n.name);
      check_traces(n.traces, tags, key);
    }

    std::set<std::pair<std::string, std::string>> edges;
    for (const auto & e : doc_.edges) {
      const std::string key = "edge:" + e.from + "->" + e.to;
      if (e.from == e.to) fail("self-loop edge on '" + e.from + "'", key, e.from);
      if (!names.count(e.from)) fail("edge references unknown node '" + e.from + "'", key, e.from);
      if (!names.count(e.to)) fail("edge references unknown node '" + e.to + "'", key, e.to);
      if (!edges.emplace(e.from, e.to).second) fail("duplicate edge " + e.from + " -> " + e.to, key, e.from);
      check_traces(e.traces, tags, key);
    }

    for (const auto & [node, mech] : doc_.mechanisms) {
      if (!names.count(node)) fail("mechanism for unknown node '" + node + "'", "mechanism:" + node, node);
    }

    std::set<std::string> ids;
    for (const auto & ind : doc_.independencies) {
      const std::string key = "independence:" + ind.tag;
      require_identifier(ind.tag, key, "independence tag");
      if (!ids.insert(ind.tag).second) fail("duplicate independence tag '" + ind.tag + "'", key, ind.tag);
      for (const auto * v : {&ind.x, &ind.y}) {
        if (!names.count(*v)) fail("independence references unknown node '" + *v + "'", key, *v);
      }
      if (ind.x == ind.y) fail("independence relates '" + ind.x + "' to itself", key, ind.x);
      for (const auto & g : ind.given) {
        if (!names.count(g)) fail("independence references unknown node '" + g + "'", key, g);
        if (g == ind.x || g == ind.y) fail("independence conditions on its own variable '" + g + "'", key, g);
      }
    }
  }

private:
  [[noreturn]] void fail(const std::string & message, const std::string & site, const std::string & subject) const
  {
    SourcePosition pos;
    if (sites_) {
      auto it = sites_->find(site);
      if (it != sites_->end()) pos = it->second;
    }
    throw ModelError(message, pos, subject);
  }

  void require_identifier(const std::string & s, const std::string & site, const char * what) const
  {
    if (!is_identifier(s)) fail(std::string("invalid ") + what + " '" + s + "'", site, s);
  }

  void check_traces(const std::vector<std::string> & traces, const std::set<std::string> & tags,
                    const std::string & site) const
  {
    for (const auto & t : traces) {
      if (!tags.count(t)) fail("trace references undeclared assumption '" + t + "'", site, t);
    }
  }

  const ModelDocument & doc_;
  const DeclarationSites * sites_;
};

}  // namespace

ModelError::ModelError(std::string message, SourcePosition position, std::string subject)
    : std::runtime_error(format_error(message, position)),
      message_(std::move(message)),
      position_(position),
      subject_(std::move(subject))
{
}

void validate_document(const ModelDocument & doc, const DeclarationSites * sites)
{
  Checker(doc, sites).run();
}

ModelDocument with_added_edge(ModelDocument doc, const std::string & from, const std::string & to,
                              double weight)
{
  doc.edges.push_back(EdgeDecl{from, to, {}, std::nullopt});
  auto it = doc.mechanisms.find(to);
  if (it != doc.mechanisms.end()) {
    std::visit(
      [&](auto & m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, TableCpd>) {
          throw std::invalid_argument("cannot add a weighted parent to table mechanism of '" + to + "'");
        } else {
          m.weights[from] = weight;
        }
      },
      it->second);
  }
  validate_document(doc);
  return doc;
}

}  // namespace causal
