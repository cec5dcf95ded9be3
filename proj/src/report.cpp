#include "causal/report.hpp"

#include <algorithm>
#include <utility>

namespace causal
{

namespace
{

Json names(const NodeSet & set)
{
  Json out = Json::array();
  for (const auto & n : set) out.push_back(n);
  return out;
}

template <typename T>
Json list(const std::vector<T> & items)
{
  Json out = Json::array();
  for (const auto & item : items) out.push_back(to_json(item));
  return out;
}

std::string_view provenance_name(Provenance p)
{
  switch (p) {
    case Provenance::local_markov: return "local_markov";
    case Provenance::minimal_separator: return "minimal_separator";
    case Provenance::user_asserted: return "user_asserted";
  }
  return "?";
}

}  // namespace

Json to_json(const PathReport & path)
{
  Json j;
  j["nodes"] = path.nodes;
  Json roles = Json::array();
  for (auto r : path.inner_roles) roles.push_back(to_string(r));
  j["roles"] = std::move(roles);
  j["directed"] = path.directed;
  j["status"] = to_string(path.status);
  j["blockers"] = names(path.blockers);
  return j;
}

Json to_json(const CiStatement & s)
{
  Json j;
  j["x"] = s.x;
  j["y"] = s.y;
  j["given"] = names(s.given);
  j["text"] = to_string(s);
  j["provenance"] = provenance_name(s.provenance);
  if (!s.tag.empty()) j["tag"] = s.tag;
  return j;
}

Json to_json(const AdjustmentSet & set)
{
  Json j;
  j["members"] = names(set.members);
  j["minimal"] = set.minimal;
  return j;
}

Json to_json(const RequirementArtifact & a)
{
  Json j;
  j["id"] = a.id;
  j["kind"] = to_string(a.kind);
  j["rule"] = to_string(a.rule);
  j["text"] = a.text;
  j["subjects"] = names(a.subjects);
  j["paths"] = list(a.paths);
  j["statements"] = list(a.statements);
  j["traces"] = a.traces;
  if (!a.commentary.empty()) j["commentary"] = a.commentary;
  return j;
}

Json to_json(const MonitorSpec & m)
{
  Json j;
  j["id"] = m.id;
  j["statement"] = to_json(m.statement);
  j["window"] = m.window;
  j["threshold"] = m.threshold;
  j["consecutive"] = m.consecutive;
  j["statistic"] = to_string(m.statistic);
  return j;
}

Json to_json(const CiTestResult & r)
{
  Json j;
  j["statement"] = to_json(r.statement);
  j["method"] = to_string(r.method);
  j["statistic"] = r.statistic;
  j["p_value"] = r.p_value;
  j["alpha"] = r.alpha;
  j["rejected"] = r.rejected;
  if (r.method == CiMethod::g_test) j["dof"] = r.dof;
  return j;
}

Json to_json(const ModelError & e)
{
  Json j;
  j["message"] = e.message();
  j["line"] = e.position().line;
  j["column"] = e.position().column;
  if (!e.subject().empty()) j["subject"] = e.subject();
  return j;
}

std::string render(const Json & j)
{
  return j.dump(2) + "\n";
}

NodeSet parse_name_list(const std::string & text)
{
  NodeSet out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(start, comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.insert(item);
    start = comma + 1;
  }
  return out;
}

ResolvedRoles resolve(const CausalDag & dag, const AnalysisOptions & options)
{
  ResolvedRoles r;
  r.exposure = options.exposure.value_or(dag.exposure().value_or(""));
  r.outcome = options.outcome.value_or(dag.outcome().value_or(""));
  for (const auto * role : {&r.exposure, &r.outcome}) {
    if (!role->empty() && !dag.contains(*role)) throw UnknownNodeError(*role);
  }
  if (options.scope) {
    for (const auto & n : *options.scope) {
      if (!dag.contains(n)) throw UnknownNodeError(n);
    }
    r.scope = *options.scope;
  } else {
    r.scope = dag.observed_nodes();
    if (!r.exposure.empty()) r.scope.insert(r.exposure);
    if (!r.outcome.empty()) r.scope.insert(r.outcome);
  }
  return r;
}

Json validation_json(const ModelDocument & doc)
{
  Json j;
  try {
    const CausalDag dag = CausalDag::build(doc);
    j["acyclic"] = true;
    j["nodes"] = dag.size();
    j["edges"] = dag.edge_count();
  } catch (const CycleError & e) {
    j["acyclic"] = false;
    j["cycle"] = e.witness();
    j["nodes"] = doc.nodes.size();
    j["edges"] = doc.edges.size();
  }
  return j;
}

Json separation_json(const CausalDag & dag, const SeparationQuery & q)
{
  Json j;
  j["x"] = q.x;
  j["y"] = q.y;
  j["given"] = names(q.given);
  j["separated"] = d_separated(dag, q);
  return j;
}

Json paths_json(const CausalDag & dag, const std::string & exposure, const std::string & outcome)
{
  const ExposurePaths p = classify_exposure_paths(dag, exposure, outcome);
  Json j;
  j["exposure"] = exposure;
  j["outcome"] = outcome;
  j["causal"] = list(p.causal);
  j["biasing"] = list(p.biasing_open);
  j["blocked"] = list(p.blocked);
  return j;
}

Json adjustment_json(const CausalDag & dag, const std::string & exposure, const std::string & outcome,
                     const NodeSet & candidates, std::size_t max_size)
{
  Json j;
  j["exposure"] = exposure;
  j["outcome"] = outcome;
  j["candidates"] = names(candidates);
  j["max_size"] = max_size;
  j["sets"] = list(backdoor_sets(dag, exposure, outcome, candidates, max_size));
  return j;
}

Json implications_json(const ModelDocument & doc, const CausalDag & dag, const NodeSet & scope,
                       std::size_t max_given)
{
  Json j;
  j["scope"] = names(scope);
  j["max_given"] = max_given;
  j["statements"] = scope.size() < 2 ? Json::array() : list(implied_independencies(dag, scope, max_given));
  Json asserted = Json::array();
  for (const auto & s : asserted_statements(doc)) {
    Json a = to_json(s);
    a["holds"] = verify(dag, s);
    asserted.push_back(std::move(a));
  }
  j["asserted"] = std::move(asserted);
  return j;
}

Json requirements_json(const ModelDocument & doc, const CausalDag & dag, const AnalysisOptions & options)
{
  const ResolvedRoles roles = resolve(dag, options);
  Json j;
  j["model"] = doc.name;
  j["exposure"] = roles.exposure;
  j["outcome"] = roles.outcome;
  j["artifacts"] =
    list(derive_all(dag, roles.exposure, roles.outcome, asserted_statements(doc), options.stratified_monitors));
  return j;
}

Json analysis_report(const ModelDocument & doc, const AnalysisOptions & options)
{
  Json report;
  report["model"] = doc.name;
  Json validation = validation_json(doc);
  if (!validation["acyclic"].get<bool>()) {
    report["validation"] = std::move(validation);
    return report;
  }
  const CausalDag dag = CausalDag::build(doc);
  const ResolvedRoles roles = resolve(dag, options);
  const bool roles_known = !roles.exposure.empty() && !roles.outcome.empty();
  validation["observability_gaps"] =
    roles_known ? names(observability_gaps(dag, roles.exposure, roles.outcome)) : Json::array();
  report["validation"] = std::move(validation);
  report["exposure"] = roles.exposure.empty() ? Json(nullptr) : Json(roles.exposure);
  report["outcome"] = roles.outcome.empty() ? Json(nullptr) : Json(roles.outcome);

  std::vector<RequirementArtifact> artifacts;
  std::vector<MonitorSpec> monitors;
  if (roles_known) {
    artifacts = derive_all(dag, roles.exposure, roles.outcome, asserted_statements(doc), options.stratified_monitors);
    monitors = derive_monitors(dag, options.stratified_monitors);

    const ExposurePaths classified = classify_exposure_paths(dag, roles.exposure, roles.outcome);
    std::vector<PathReport> supporting;
    auto listed = [&](const PathReport & p) {
      for (const std::vector<PathReport> * group :
           {&classified.causal, &classified.biasing_open, &classified.blocked, &std::as_const(supporting)}) {
        if (std::find(group->begin(), group->end(), p) != group->end()) return true;
      }
      return false;
    };
    for (const auto & a : artifacts) {
      for (const auto & p : a.paths) {
        if (!listed(p)) supporting.push_back(p);
      }
    }
    Json paths;
    paths["causal"] = list(classified.causal);
    paths["biasing"] = list(classified.biasing_open);
    paths["blocked"] = list(classified.blocked);
    paths["supporting"] = list(supporting);
    report["paths"] = std::move(paths);

    NodeSet candidates = dag.observed_nodes();
    candidates.erase(roles.exposure);
    candidates.erase(roles.outcome);
    report["adjustment"] =
      adjustment_json(dag, roles.exposure, roles.outcome, candidates, std::min<std::size_t>(candidates.size(), 5));
    NodeSet instrument_candidates = dag.observed_nodes();
    instrument_candidates.erase(roles.exposure);
    instrument_candidates.erase(roles.outcome);
    report["instruments"] = names(find_instruments(dag, roles.exposure, roles.outcome, instrument_candidates));
  } else {
    report["paths"] = nullptr;
    report["adjustment"] = nullptr;
    report["instruments"] = nullptr;
  }
  report["implications"] = implications_json(doc, dag, roles.scope, options.max_given);
  report["requirements"] = list(artifacts);
  for (auto & m : monitors) {
    for (const auto & a : asserted_statements(doc)) {
      if (a.same_claim(m.statement)) m.statement.tag = a.tag;
    }
  }
  report["monitors"] = list(monitors);
  return report;
}

}  // namespace causal
