#include "causal/derivation.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

namespace causal
{

std::string_view to_string(ArtifactKind kind)
{
  switch (kind) {
    case ArtifactKind::data: return "data";
    case ArtifactKind::model: return "model";
    case ArtifactKind::test_case: return "test_case";
    case ArtifactKind::monitor: return "monitor";
  }
  return "?";
}

std::string_view to_string(Rule rule)
{
  switch (rule) {
    case Rule::R1: return "R1";
    case Rule::R2: return "R2";
    case Rule::R3: return "R3";
    case Rule::R4: return "R4";
    case Rule::R5: return "R5";
    case Rule::R6: return "R6";
    case Rule::TC: return "TC";
    case Rule::MON: return "MON";
  }
  return "?";
}

std::string_view to_string(CorrelationKind kind)
{
  return kind == CorrelationKind::pearson ? "pearson" : "spearman";
}

namespace
{

template <typename Range>
std::string join(const Range & items, std::string_view sep = ", ")
{
  std::string out;
  for (const auto & item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

/// Collects assumption tags from nodes and edges.
class TraceSet
{
public:
  explicit TraceSet(const CausalDag & dag) : dag_(dag) {}

  void node(const std::string & n)
  {
    for (const auto & t : dag_.node(n).traces) tags_.insert(t);
  }

  void edge(const std::string & a, const std::string & b)
  {
    const EdgeRecord * e = dag_.find_edge(a, b);
    if (!e) e = dag_.find_edge(b, a);
    if (!e) return;
    for (const auto & t : e->traces) tags_.insert(t);
  }

  /// Nodes nodes[first..last] and the edges between them.
  void segment(const std::vector<std::string> & nodes, std::size_t first, std::size_t last)
  {
    for (std::size_t i = first; i <= last; ++i) {
      node(nodes[i]);
      if (i > first) edge(nodes[i - 1], nodes[i]);
    }
  }

  void path(const PathReport & p) { segment(p.nodes, 0, p.nodes.size() - 1); }

  std::vector<std::string> sorted() const { return {tags_.begin(), tags_.end()}; }

private:
  const CausalDag & dag_;
  NodeSet tags_;
};

void check_roles(const CausalDag & dag, const std::string & exposure, const std::string & outcome)
{
  if (exposure.empty()) throw std::invalid_argument("no exposure declared");
  if (outcome.empty()) throw std::invalid_argument("no outcome declared");
  if (!dag.contains(exposure)) throw UnknownNodeError(exposure);
  if (!dag.contains(outcome)) throw UnknownNodeError(outcome);
  if (exposure == outcome) throw std::invalid_argument("exposure and outcome must differ");
}

std::size_t position(const std::vector<std::string> & nodes, const std::string & n)
{
  return static_cast<std::size_t>(std::find(nodes.begin(), nodes.end(), n) - nodes.begin());
}

struct Grouped
{
  NodeSet subjects;
  std::vector<PathReport> paths;
  TraceSet traces;
};

}  // namespace

void validate_monitor(const MonitorSpec & spec, const CausalDag * dag)
{
  if (spec.window < 30) throw std::invalid_argument("monitor window must be at least 30 samples");
  if (!(spec.threshold > 0.0 && spec.threshold < 1.0)) {
    throw std::invalid_argument("monitor threshold must lie in (0, 1)");
  }
  if (spec.consecutive < 1) throw std::invalid_argument("monitor needs at least one consecutive window");
  if (spec.statement.given.size() > 1) {
    throw std::invalid_argument("monitors stratify on at most one variable");
  }
  if (spec.statement.x.empty() || spec.statement.y.empty() || spec.statement.x == spec.statement.y) {
    throw std::invalid_argument("monitor needs two distinct variables");
  }
  if (!dag) return;
  NodeSet vars = spec.statement.given;
  vars.insert(spec.statement.x);
  vars.insert(spec.statement.y);
  for (const auto & v : vars) {
    if (!dag->node(v).observed()) throw std::invalid_argument("monitor variable '" + v + "' is latent");
  }
}

std::vector<RequirementArtifact> derive_requirements(const CausalDag & dag)
{
  return derive_requirements(dag, dag.exposure().value_or(""), dag.outcome().value_or(""));
}

std::vector<RequirementArtifact> derive_requirements(const CausalDag & dag, const std::string & exposure,
                                                     const std::string & outcome)
{
  check_roles(dag, exposure, outcome);
  const ExposurePaths classified = classify_exposure_paths(dag, exposure, outcome);

  std::map<std::pair<std::string, std::string>, Grouped> r1;  // (latent fork, sensor)
  std::map<std::string, Grouped> r2;                          // observed fork
  for (const auto & p : classified.biasing_open) {
    const auto fork = p.fork();
    if (!fork) continue;
    const std::size_t w = position(p.nodes, *fork);
    if (dag.node(*fork).observed()) {
      auto [it, _] = r2.try_emplace(*fork, Grouped{{*fork}, {}, TraceSet(dag)});
      it->second.paths.push_back(p);
      it->second.traces.node(*fork);
      it->second.traces.edge(p.nodes[w - 1], *fork);
      it->second.traces.edge(*fork, p.nodes[w + 1]);
      continue;
    }
    for (std::size_t j = w + 1; j + 1 < p.nodes.size(); ++j) {
      if (!dag.node(p.nodes[j]).observed()) continue;
      auto [it, _] = r1.try_emplace({*fork, p.nodes[j]}, Grouped{{}, {}, TraceSet(dag)});
      it->second.paths.push_back(p);
      it->second.subjects.insert(p.nodes.begin() + static_cast<std::ptrdiff_t>(w),
                                 p.nodes.begin() + static_cast<std::ptrdiff_t>(j) + 1);
      it->second.traces.segment(p.nodes, w, j);
      break;
    }
  }

  std::vector<RequirementArtifact> data;
  std::vector<RequirementArtifact> model;

  for (auto & [key, g] : r1) {
    RequirementArtifact a;
    a.kind = ArtifactKind::data;
    a.rule = Rule::R1;
    a.text = "Data: cover variation of " + key.second + " driven by " + key.first + " in samples where " + exposure +
             " is absent.";
    a.subjects = g.subjects;
    a.paths = g.paths;
    a.traces = g.traces.sorted();
    data.push_back(std::move(a));
  }
  for (auto & [fork, g] : r2) {
    RequirementArtifact a;
    a.kind = ArtifactKind::data;
    a.rule = Rule::R2;
    a.text = "Data: record " + fork + " with every sample and cover each level of " + fork + " both with and without " +
             exposure + ".";
    a.subjects = g.subjects;
    a.paths = g.paths;
    a.traces = g.traces.sorted();
    data.push_back(std::move(a));
  }

  // R3: disturbances acting on observed sensors.
  {
    RequirementArtifact a;
    a.kind = ArtifactKind::data;
    a.rule = Rule::R3;
    TraceSet traces(dag);
    NodeSet sensors;
    for (const auto & n : dag.nodes()) {
      if (n.role != NodeRole::disturbance) continue;
      for (const auto & child : dag.children(n.name)) {
        if (!dag.node(child).observed()) continue;
        a.subjects.insert(n.name);
        a.subjects.insert(child);
        sensors.insert(child);
        traces.node(n.name);
        traces.edge(n.name, child);
      }
    }
    if (!sensors.empty()) {
      a.text = "Data: keep the raw disturbance on " + join(sensors) + "; no denoising before training.";
      a.traces = traces.sorted();
      data.push_back(std::move(a));
    }
  }

  // R6: latent variables that are the only way to block a biasing path.
  for (const auto & gap : observability_gaps(dag, exposure, outcome)) {
    RequirementArtifact a;
    a.kind = ArtifactKind::data;
    a.rule = Rule::R6;
    a.subjects = {gap};
    TraceSet traces(dag);
    traces.node(gap);
    for (const auto & p : classified.biasing_open) {
      if (std::find(p.nodes.begin(), p.nodes.end(), gap) != p.nodes.end()) a.paths.push_back(p);
    }
    a.text = "Observability: add a measurement of " + gap + "; it is the only block on a biasing path from " + exposure +
             " to " + outcome + ".";
    a.traces = traces.sorted();
    data.push_back(std::move(a));
  }

  // R4 inputs: observed inner nodes of causal paths, plus the sensors of R1.
  NodeSet inputs;
  TraceSet input_traces(dag);
  std::vector<PathReport> input_paths;
  for (const auto & p : classified.causal) {
    for (std::size_t i = 1; i + 1 < p.nodes.size(); ++i) {
      if (dag.node(p.nodes[i]).observed()) inputs.insert(p.nodes[i]);
    }
    input_traces.path(p);
    input_paths.push_back(p);
  }
  for (const auto & [key, g] : r1) {
    inputs.insert(key.second);
    for (const auto & p : g.paths) {
      if (std::find(input_paths.begin(), input_paths.end(), p) == input_paths.end()) {
        input_traces.path(p);
        input_paths.push_back(p);
      }
    }
  }

  // R5: inputs connected to the exposure only through non-causal paths.
  for (const auto & s : inputs) {
    std::vector<PathReport> open;
    for (auto & p : enumerate_paths(dag, exposure, s)) {
      if (p.open()) open.push_back(std::move(p));
    }
    if (open.empty() || std::any_of(open.begin(), open.end(), [](const PathReport & p) { return p.directed; })) {
      continue;
    }
    RequirementArtifact a;
    a.kind = ArtifactKind::model;
    a.rule = Rule::R5;
    a.subjects = {s};
    TraceSet traces(dag);
    for (const auto & p : open) traces.path(p);
    a.paths = std::move(open);
    a.text = "Model: " + s + " must not be a sufficient input for predicting " + exposure + ".";
    a.commentary = "Every open path between " + exposure + " and " + s + " runs through a common cause; " + s +
                   " gets no contribution from " + exposure + " itself.";
    a.traces = traces.sorted();
    model.push_back(std::move(a));
  }

  if (!inputs.empty()) {
    RequirementArtifact a;
    a.kind = ArtifactKind::model;
    a.rule = Rule::R4;
    a.subjects = inputs;
    a.paths = input_paths;
    a.text = "Model inputs: " + join(inputs) + ".";
    a.traces = input_traces.sorted();
    model.push_back(std::move(a));
  }

  for (std::size_t i = 0; i < data.size(); ++i) data[i].id = "RQ-D" + std::to_string(i + 1);
  for (std::size_t i = 0; i < model.size(); ++i) model[i].id = "RQ-M" + std::to_string(i + 1);
  data.insert(data.end(), std::make_move_iterator(model.begin()), std::make_move_iterator(model.end()));
  return data;
}

namespace
{

void carry_tag(CiStatement & s, const std::vector<CiStatement> & asserted)
{
  for (const auto & a : asserted) {
    if (a.same_claim(s)) {
      s.tag = a.tag;
      return;
    }
  }
}

}  // namespace

std::vector<RequirementArtifact> derive_test_cases(const CausalDag & dag, const std::string & exposure,
                                                   const std::string & outcome,
                                                   const std::vector<CiStatement> & asserted)
{
  check_roles(dag, exposure, outcome);
  NodeSet scope = dag.observed_nodes();
  scope.insert(exposure);
  scope.insert(outcome);
  if (scope.size() < 2) return {};

  std::vector<RequirementArtifact> out;
  for (auto s : implied_independencies(dag, scope, 3)) {
    std::string varied;
    if (dag.controllable(s.x)) {
      varied = s.x;
    } else if (dag.controllable(s.y)) {
      varied = s.y;
    } else {
      continue;
    }
    const std::string & other = varied == s.x ? s.y : s.x;
    carry_tag(s, asserted);

    RequirementArtifact a;
    a.id = "TC-" + std::to_string(out.size() + 1);
    a.kind = ArtifactKind::test_case;
    a.rule = Rule::TC;
    a.subjects = s.given;
    a.subjects.insert(s.x);
    a.subjects.insert(s.y);
    if (s.given.empty()) {
      a.text = "Vary " + varied + " across its test levels; " + other + " shall show no association with " + varied + ".";
    } else {
      a.text = "Vary " + varied + " across its test levels while holding the acquisition of " + join(s.given) +
               " fixed; the distribution of " + other + " given " + join(s.given) + " shall remain unchanged.";
    }
    if (other == outcome && s.given.count(exposure) == 0) {
      a.commentary = "Trigger " + exposure + " at each level of " + varied + ".";
    }
    TraceSet traces(dag);
    for (const auto & n : a.subjects) traces.node(n);
    a.traces = traces.sorted();
    a.statements.push_back(std::move(s));
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<MonitorSpec> derive_monitors(const CausalDag & dag, bool stratified)
{
  const NodeSet observed = dag.observed_nodes();
  if (observed.size() < 2) return {};
  std::vector<MonitorSpec> out;
  for (auto & s : implied_independencies(dag, observed, stratified ? 1 : 0)) {
    MonitorSpec m;
    m.id = "MON-" + std::to_string(out.size() + 1);
    m.statement = std::move(s);
    out.push_back(std::move(m));
  }
  return out;
}

RequirementArtifact monitor_artifact(const CausalDag & dag, const MonitorSpec & spec)
{
  const CiStatement & s = spec.statement;
  RequirementArtifact a;
  a.id = spec.id;
  a.kind = ArtifactKind::monitor;
  a.rule = Rule::MON;
  a.subjects = s.given;
  a.subjects.insert(s.x);
  a.subjects.insert(s.y);
  std::ostringstream text;
  text << "At runtime, track the " << to_string(spec.statistic) << " correlation of " << s.x << " and " << s.y;
  if (!s.given.empty()) text << " within strata of " << join(s.given);
  text << " over windows of " << spec.window << " samples; raise an alarm when its magnitude exceeds "
       << spec.threshold << " in " << spec.consecutive << " consecutive windows.";
  a.text = text.str();
  TraceSet traces(dag);
  for (const auto & n : a.subjects) traces.node(n);
  a.traces = traces.sorted();
  a.statements.push_back(s);
  return a;
}

std::vector<RequirementArtifact> derive_all(const CausalDag & dag, const std::string & exposure,
                                            const std::string & outcome, const std::vector<CiStatement> & asserted,
                                            bool stratified_monitors)
{
  auto out = derive_requirements(dag, exposure, outcome);
  for (auto & a : derive_test_cases(dag, exposure, outcome, asserted)) out.push_back(std::move(a));
  for (auto m : derive_monitors(dag, stratified_monitors)) {
    carry_tag(m.statement, asserted);
    out.push_back(monitor_artifact(dag, m));
  }
  return out;
}

std::string render_markdown(const std::vector<RequirementArtifact> & artifacts, const std::string & title)
{
  std::ostringstream md;
  md << "# Requirements: " << title << "\n\n";
  if (artifacts.empty()) {
    md << "No requirements derived.\n";
    return md.str();
  }
  md << "| ID | Kind | Rule | Requirement | Evidence | Traces |\n";
  md << "|----|------|------|-------------|----------|--------|\n";
  for (const auto & a : artifacts) {
    std::string evidence = join(a.subjects);
    for (const auto & s : a.statements) {
      evidence += "; " + (s.tag.empty() ? "" : s.tag + ": ") + to_string(s);
    }
    md << "| " << a.id << " | " << to_string(a.kind) << " | " << to_string(a.rule) << " | " << a.text << " | "
       << evidence << " | " << join(a.traces) << " |\n";
  }
  bool notes = false;
  for (const auto & a : artifacts) {
    if (a.commentary.empty()) continue;
    if (!notes) md << "\n## Notes\n\n";
    notes = true;
    md << "- " << a.id << ": " << a.commentary << "\n";
  }
  return md.str();
}

}  // namespace causal
