// causal-spec: command-line front end.
//
// Exit codes: 0 success, 1 findings that fail a gate (cycles, or observability
// gaps under --strict), 2 usage, input or parse errors.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>
#include <httplib.h>

#include "causal/analysis.hpp"
#include "causal/derivation.hpp"
#include "causal/dsl.hpp"
#include "causal/implications.hpp"
#include "causal/monitor.hpp"
#include "causal/report.hpp"
#include "causal/scm.hpp"
#include "causal/service.hpp"

using namespace causal;

namespace
{

constexpr int exit_findings = 1;
constexpr int exit_usage = 2;

struct Common
{
  std::string model_path;
  bool json = false;
};

std::string read_text(const std::string & path)
{
  if (path == "-") return {std::istreambuf_iterator<char>(std::cin), std::istreambuf_iterator<char>()};
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string & path, const std::string & text)
{
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << text;
}

std::string arrow_path(const CausalDag & dag, const std::vector<std::string> & nodes)
{
  std::string out = nodes.front();
  for (std::size_t i = 1; i < nodes.size(); ++i) {
    out += dag.find_edge(nodes[i - 1], nodes[i]) ? " -> " : " <- ";
    out += nodes[i];
  }
  return out;
}

std::string braces(const NodeSet & set)
{
  std::string out = "{";
  for (const auto & n : set) out += (out.size() > 1 ? ", " : "") + n;
  return out + "}";
}

std::string cycle_text(const std::vector<std::string> & witness)
{
  std::string out;
  for (const auto & n : witness) out += (out.empty() ? "" : " -> ") + n;
  return out;
}

std::string tag_for(const CiStatement & s, const std::vector<CiStatement> & asserted)
{
  for (const auto & a : asserted) {
    if (a.same_claim(s)) return "  [" + a.tag + "]";
  }
  return {};
}

AnalysisOptions analysis_options(const std::string & exposure, const std::string & outcome, const std::string & scope,
                                 std::size_t max_given, bool stratified)
{
  AnalysisOptions o;
  if (!exposure.empty()) o.exposure = exposure;
  if (!outcome.empty()) o.outcome = outcome;
  if (!scope.empty()) o.scope = parse_name_list(scope);
  o.max_given = max_given;
  o.stratified_monitors = stratified;
  return o;
}

ResolvedRoles require_roles(const CausalDag & dag, const AnalysisOptions & o)
{
  ResolvedRoles r = resolve(dag, o);
  if (r.exposure.empty()) throw std::invalid_argument("no exposure declared; pass --exposure");
  if (r.outcome.empty()) throw std::invalid_argument("no outcome declared; pass --outcome");
  return r;
}

// ----------------------------------------------------------------------------

int cmd_validate(const Common & c, bool strict)
{
  const ModelDocument doc = load_model_file(c.model_path);
  Json v = validation_json(doc);
  NodeSet gaps;
  if (v["acyclic"].get<bool>()) {
    const CausalDag dag = CausalDag::build(doc);
    if (dag.exposure() && dag.outcome()) gaps = observability_gaps(dag, *dag.exposure(), *dag.outcome());
    Json g = Json::array();
    for (const auto & n : gaps) g.push_back(n);
    v["observability_gaps"] = std::move(g);
  }
  const bool acyclic = v["acyclic"].get<bool>();
  if (c.json) {
    std::cout << render(v);
  } else if (!acyclic) {
    std::cout << "cycle: " << cycle_text(v["cycle"].get<std::vector<std::string>>()) << "\n";
  } else {
    std::cout << "ok: " << doc.name << " (" << v["nodes"] << " nodes, " << v["edges"] << " edges)\n";
    for (const auto & g : gaps) std::cout << "observability gap: " << g << "\n";
  }
  if (!acyclic) return exit_findings;
  return strict && !gaps.empty() ? exit_findings : 0;
}

int cmd_analyze(const Common & c, const AnalysisOptions & o, bool strict)
{
  const ModelDocument doc = load_model_file(c.model_path);
  const Json report = analysis_report(doc, o);
  const Json & v = report["validation"];
  const bool acyclic = v["acyclic"].get<bool>();
  const bool gaps = acyclic && !v["observability_gaps"].empty();
  if (c.json) {
    std::cout << render(report);
  } else if (!acyclic) {
    std::cout << "cycle: " << cycle_text(v["cycle"].get<std::vector<std::string>>()) << "\n";
  } else {
    const CausalDag dag = CausalDag::build(doc);
    std::cout << "model " << doc.name << ": " << dag.size() << " nodes, " << dag.edge_count() << " edges, acyclic\n";
    if (!report["exposure"].is_null() && !report["outcome"].is_null()) {
      const std::string e = report["exposure"];
      const std::string y = report["outcome"];
      std::cout << "exposure " << e << ", outcome " << y << "\n";
      const auto paths = classify_exposure_paths(dag, e, y);
      std::cout << "causal paths (" << paths.causal.size() << "):\n";
      for (const auto & p : paths.causal) std::cout << "  " << arrow_path(dag, p.nodes) << "\n";
      std::cout << "biasing paths (" << paths.biasing_open.size() << "):\n";
      for (const auto & p : paths.biasing_open) std::cout << "  " << arrow_path(dag, p.nodes) << "\n";
      std::cout << "adjustment sets:";
      if (report["adjustment"]["sets"].empty()) std::cout << " none";
      for (const auto & s : report["adjustment"]["sets"]) {
        std::cout << " " << braces(s["members"].get<NodeSet>());
      }
      std::cout << "\nobservability gaps: "
                << (v["observability_gaps"].empty() ? "none" : braces(v["observability_gaps"].get<NodeSet>())) << "\n";
    }
    const auto & stmts = report["implications"]["statements"];
    std::cout << "implications (" << stmts.size() << "):\n";
    for (const auto & s : stmts) {
      std::cout << "  " << s["text"].get<std::string>();
      if (s.contains("tag")) std::cout << "  [" << s["tag"].get<std::string>() << "]";
      std::cout << "\n";
    }
    std::cout << "requirements (" << report["requirements"].size() << "):\n";
    for (const auto & a : report["requirements"]) {
      std::cout << "  " << a["id"].get<std::string>() << " [" << a["rule"].get<std::string>() << "] "
                << a["text"].get<std::string>() << "\n";
    }
  }
  if (!acyclic) return strict ? exit_findings : 0;
  return strict && gaps ? exit_findings : 0;
}

int cmd_dsep(const Common & c, const std::string & x, const std::string & y, const std::string & given)
{
  const CausalDag dag = CausalDag::build(load_model_file(c.model_path));
  const Json j = separation_json(dag, {x, y, parse_name_list(given)});
  if (c.json) {
    std::cout << render(j);
  } else {
    std::cout << "d-separated: " << (j["separated"].get<bool>() ? "true" : "false") << "\n";
  }
  return 0;
}

int cmd_paths(const Common & c, const AnalysisOptions & o)
{
  const CausalDag dag = CausalDag::build(load_model_file(c.model_path));
  const auto roles = require_roles(dag, o);
  if (c.json) {
    std::cout << render(paths_json(dag, roles.exposure, roles.outcome));
    return 0;
  }
  const auto paths = classify_exposure_paths(dag, roles.exposure, roles.outcome);
  auto section = [&](const char * title, const std::vector<PathReport> & list) {
    std::cout << title << " (" << list.size() << "):\n";
    for (const auto & p : list) {
      std::cout << "  " << arrow_path(dag, p.nodes);
      if (!p.blockers.empty()) std::cout << "   blockers " << braces(p.blockers);
      std::cout << "\n";
    }
  };
  section("causal", paths.causal);
  section("biasing, open", paths.biasing_open);
  section("blocked", paths.blocked);
  return 0;
}

int cmd_adjust(const Common & c, const AnalysisOptions & o, const std::string & candidates_flag, std::size_t max_size)
{
  const CausalDag dag = CausalDag::build(load_model_file(c.model_path));
  const auto roles = require_roles(dag, o);
  NodeSet candidates;
  if (candidates_flag.empty()) {
    candidates = dag.observed_nodes();
    candidates.erase(roles.exposure);
    candidates.erase(roles.outcome);
  } else {
    candidates = parse_name_list(candidates_flag);
  }
  if (max_size == 0) max_size = candidates.size();
  const Json j = adjustment_json(dag, roles.exposure, roles.outcome, candidates, max_size);
  if (c.json) {
    std::cout << render(j);
  } else if (j["sets"].empty()) {
    std::cout << "no adjustment set among " << braces(candidates) << "\n";
  } else {
    for (const auto & s : j["sets"]) std::cout << braces(s["members"].get<NodeSet>()) << "\n";
  }
  return 0;
}

int cmd_implications(const Common & c, const AnalysisOptions & o)
{
  const ModelDocument doc = load_model_file(c.model_path);
  const CausalDag dag = CausalDag::build(doc);
  const NodeSet scope = resolve(dag, o).scope;
  if (c.json) {
    std::cout << render(implications_json(doc, dag, scope, o.max_given));
    return 0;
  }
  const auto asserted = asserted_statements(doc);
  if (scope.size() >= 2) {
    for (const auto & s : implied_independencies(dag, scope, o.max_given)) {
      std::cout << to_string(s) << tag_for(s, asserted) << "\n";
    }
  }
  return 0;
}

int cmd_requirements(const Common & c, const AnalysisOptions & o)
{
  const ModelDocument doc = load_model_file(c.model_path);
  const CausalDag dag = CausalDag::build(doc);
  if (c.json) {
    std::cout << render(requirements_json(doc, dag, o));
    return 0;
  }
  const auto roles = require_roles(dag, o);
  std::cout << render_markdown(
    derive_all(dag, roles.exposure, roles.outcome, asserted_statements(doc), o.stratified_monitors), doc.name);
  return 0;
}

ModelDocument apply_mutations(ModelDocument doc, const std::vector<std::string> & specs)
{
  for (const auto & spec : specs) {
    // FROM->TO:WEIGHT
    const auto arrow = spec.find("->");
    const auto colon = spec.rfind(':');
    if (arrow == std::string::npos || colon == std::string::npos || colon < arrow) {
      throw std::invalid_argument("--add-edge expects FROM->TO:WEIGHT, got '" + spec + "'");
    }
    const std::string from = spec.substr(0, arrow);
    const std::string to = spec.substr(arrow + 2, colon - arrow - 2);
    std::size_t used = 0;
    const double w = std::stod(spec.substr(colon + 1), &used);
    if (used != spec.size() - colon - 1) throw std::invalid_argument("bad weight in '" + spec + "'");
    doc = with_added_edge(std::move(doc), from, to, w);
  }
  return doc;
}

int cmd_simulate(const Common & c, std::size_t n, std::uint64_t seed, const std::vector<std::string> & mutations,
                 const std::string & out)
{
  const ModelDocument doc = apply_mutations(load_model_file(c.model_path), mutations);
  const ScmSpec scm = ScmSpec::from_document(doc);
  write_text(out, to_csv(sample(scm, n, seed)));
  return 0;
}

int cmd_citest(const Common & c, const std::string & data_path, const std::string & x, const std::string & y,
               const std::string & given, const AnalysisOptions & o, double alpha, const std::string & method_name)
{
  const ModelDocument doc = load_model_file(c.model_path);
  const CausalDag dag = CausalDag::build(doc);
  const Dataset data = read_csv(read_text(data_path));
  const CiMethod method = method_name == "g_test" ? CiMethod::g_test : CiMethod::fisher_z;

  ValidationReport report;
  if (!x.empty() || !y.empty()) {
    if (x.empty() || y.empty()) throw std::invalid_argument("--x and --y go together");
    CiStatement s = CiStatement::make(x, y, parse_name_list(given));
    verify(dag, s);  // rejects unknown names
    report = validate_statements(data, {s}, alpha, method);
  } else {
    report = validate_model(dag, data, resolve(dag, o).scope, alpha, method, o.max_given);
  }
  const auto asserted = asserted_statements(doc);
  if (c.json) {
    Json j;
    Json results = Json::array();
    for (auto r : report.results) {
      for (const auto & a : asserted) {
        if (a.same_claim(r.statement)) r.statement.tag = a.tag;
      }
      results.push_back(to_json(r));
    }
    j["results"] = std::move(results);
    j["violations"] = report.violations;
    std::cout << render(j);
    return 0;
  }
  for (const auto & r : report.results) {
    char line[160];
    std::snprintf(line, sizeof line, "statistic %.4f  p %.4g  %s", r.statistic, r.p_value,
                  r.rejected ? "REJECTED" : "not rejected");
    std::cout << to_string(r.statement) << tag_for(r.statement, asserted) << "\n  " << line << "\n";
  }
  std::cout << report.violations << " of " << report.results.size() << " rejected at alpha " << alpha << "\n";
  return 0;
}

struct MonitorFlags
{
  std::string input = "-";
  std::string format;
  std::vector<std::string> pairs;
  std::size_t window = 500;
  double threshold = 0.2;
  std::size_t consecutive = 3;
  bool spearman = false;
  bool stratified = false;
  bool windows = false;
};

int cmd_monitor(const Common & c, const MonitorFlags & f)
{
  std::vector<MonitorSpec> specs;
  std::optional<CausalDag> dag;
  if (!c.model_path.empty()) dag = CausalDag::build(load_model_file(c.model_path));
  if (!f.pairs.empty()) {
    for (const auto & p : f.pairs) {
      const auto parts = parse_name_list(p);
      const auto comma = p.find(',');
      if (comma == std::string::npos || parts.size() != 2) throw std::invalid_argument("--pair expects X,Y");
      MonitorSpec m;
      m.id = "MON-" + std::to_string(specs.size() + 1);
      m.statement = CiStatement::make(p.substr(0, comma), p.substr(comma + 1), {});
      specs.push_back(std::move(m));
    }
  } else if (dag) {
    specs = derive_monitors(*dag, f.stratified);
  } else {
    throw std::invalid_argument("monitor needs a model file or at least one --pair");
  }
  for (auto & m : specs) {
    m.window = f.window;
    m.threshold = f.threshold;
    m.consecutive = f.consecutive;
    m.statistic = f.spearman ? CorrelationKind::spearman : CorrelationKind::pearson;
    validate_monitor(m, dag ? &*dag : nullptr);
  }

  const std::string text = read_text(f.input);
  std::string format = f.format;
  if (format.empty()) {
    const auto first = text.find_first_not_of(" \t\r\n");
    format = first != std::string::npos && text[first] == '{' ? "ndjson" : "csv";
  }
  const auto samples = format == "ndjson" ? read_samples_ndjson(text) : read_samples_csv(text);

  std::vector<MonitorState> states;
  for (const auto & m : specs) states.push_back(initial_state(m));
  for (const auto & s : samples) {
    for (auto & state : states) {
      auto r = ingest(std::move(state), s);
      state = std::move(r.state);
      if (r.window && f.windows) std::cout << to_ndjson(*r.window);
      if (r.alarm) std::cout << to_ndjson(*r.alarm);
    }
  }
  std::cout.flush();
  return 0;
}

int cmd_export(const Common & c, const std::string & format, const std::string & out)
{
  const ModelDocument doc = load_model_file(c.model_path);
  if (format == "dot") {
    write_text(out, to_dot(CausalDag::build(doc), doc.name));
  } else if (format == "json") {
    write_text(out, serialize(doc, Format::json));
  } else {
    write_text(out, serialize(doc, Format::dsl));
  }
  return 0;
}

int cmd_serve(const std::string & host, int port, const std::string & dir, bool allow_remote)
{
  if (!is_loopback(host) && !allow_remote) {
    std::cerr << "error: refusing to bind to non-loopback address '" << host << "' without --allow-remote\n";
    return exit_usage;
  }
  if (!is_loopback(host)) {
    std::cerr << "warning: serving on " << host << " without authentication; any host that can reach this "
              << "port can read and overwrite models\n";
  }
  ModelStore store(dir);
  httplib::Server server;
  register_routes(server, store);
  std::cerr << "serving " << std::filesystem::absolute(dir).string() << " on http://" << host << ":" << port << "\n";
  if (!server.listen(host, port)) {
    std::cerr << "error: cannot listen on " << host << ":" << port << "\n";
    return exit_usage;
  }
  return 0;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"causal-spec: analyse causal models and derive requirements from them"};
  app.require_subcommand(1);

  Common common;
  std::string exposure;
  std::string outcome;
  std::string scope;
  std::size_t max_given = 3;
  bool strict = false;
  bool stratified = false;

  auto model_arg = [&](CLI::App * sub) {
    sub->add_option("model", common.model_path, "Model file (.cdag DSL or JSON)")->required();
    sub->add_flag("--json", common.json, "Print JSON instead of text");
  };
  auto role_flags = [&](CLI::App * sub) {
    sub->add_option("--exposure", exposure, "Exposure node (default: declared role)");
    sub->add_option("--outcome", outcome, "Outcome node (default: declared role)");
  };

  auto * validate = app.add_subcommand("validate", "Check a model for parse errors, cycles and observability gaps");
  model_arg(validate);
  validate->add_flag("--strict", strict, "Also fail on observability gaps");

  auto * analyze = app.add_subcommand("analyze", "Paths, adjustment, implications and requirements in one report");
  model_arg(analyze);
  role_flags(analyze);
  analyze->add_option("--scope", scope, "Comma-separated implication scope");
  analyze->add_option("--max-given", max_given, "Largest conditioning set for implications");
  analyze->add_flag("--strict", strict, "Exit 1 on cycles or observability gaps");
  analyze->add_flag("--stratified", stratified, "Include single-variable stratified monitors");

  std::string x;
  std::string y;
  std::string given;
  auto * dsep = app.add_subcommand("dsep", "Test whether X and Y are d-separated given a set");
  model_arg(dsep);
  dsep->add_option("x", x)->required();
  dsep->add_option("y", y)->required();
  dsep->add_option("--given", given, "Comma-separated conditioning set");

  auto * paths = app.add_subcommand("paths", "Classify exposure-outcome paths");
  model_arg(paths);
  role_flags(paths);

  std::string candidates;
  std::size_t max_size = 0;
  auto * adjust = app.add_subcommand("adjust", "Minimal back-door adjustment sets");
  model_arg(adjust);
  role_flags(adjust);
  adjust->add_option("--candidates", candidates, "Comma-separated candidates (default: observed nodes)");
  adjust->add_option("--max-size", max_size, "Largest set size (default: all candidates)");

  auto * implications = app.add_subcommand("implications", "Testable conditional independencies");
  model_arg(implications);
  implications->add_option("--scope", scope, "Comma-separated scope (default: observed plus exposure and outcome)");
  implications->add_option("--max-given", max_given, "Largest conditioning set");

  auto * requirements = app.add_subcommand("requirements", "Derive requirement artifacts (Markdown or JSON)");
  model_arg(requirements);
  role_flags(requirements);
  requirements->add_flag("--stratified", stratified, "Include single-variable stratified monitors");

  std::size_t n = 1000;
  std::uint64_t seed = 1;
  std::vector<std::string> mutations;
  std::string out;
  auto * simulate = app.add_subcommand("simulate", "Sample the model's structural equations to CSV");
  simulate->add_option("model", common.model_path, "Model file")->required();
  simulate->add_option("-n,--samples", n, "Number of rows");
  simulate->add_option("--seed", seed, "Random seed");
  simulate->add_option("--add-edge", mutations, "Extra dependence FROM->TO:WEIGHT (repeatable)");
  simulate->add_option("-o,--out", out, "Output file (default: stdout)");

  std::string data_path;
  double alpha = 0.01;
  std::string method = "fisher_z";
  auto * citest = app.add_subcommand("citest", "Test implied independencies against a CSV dataset");
  model_arg(citest);
  citest->add_option("--data", data_path, "CSV file with a header row ('-' for stdin)")->required();
  citest->add_option("--x", x, "Single test: first variable");
  citest->add_option("--y", y, "Single test: second variable");
  citest->add_option("--given", given, "Single test: conditioning set");
  citest->add_option("--scope", scope, "Scope when testing all implications");
  citest->add_option("--max-given", max_given, "Largest conditioning set when testing all implications");
  citest->add_option("--alpha", alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  citest->add_option("--method", method, "fisher_z or g_test")->check(CLI::IsMember({"fisher_z", "g_test"}));

  MonitorFlags mf;
  auto * monitor = app.add_subcommand("monitor", "Run correlation monitors over a CSV or NDJSON stream");
  monitor->add_option("model", common.model_path, "Model file to derive monitors from");
  monitor->add_option("--input", mf.input, "Stream file ('-' for stdin)");
  monitor->add_option("--format", mf.format, "csv or ndjson (default: sniffed)")->check(CLI::IsMember({"csv", "ndjson"}));
  monitor->add_option("--pair", mf.pairs, "Monitor X,Y instead of derived monitors (repeatable)");
  monitor->add_option("--window", mf.window, "Samples per window");
  monitor->add_option("--threshold", mf.threshold, "Absolute correlation bound");
  monitor->add_option("--consecutive", mf.consecutive, "Violating windows before an alarm");
  monitor->add_flag("--spearman", mf.spearman, "Use rank correlation");
  monitor->add_flag("--stratified", mf.stratified, "Include single-variable stratified monitors");
  monitor->add_flag("--windows", mf.windows, "Also print every window statistic");

  std::string format = "dsl";
  auto * exp = app.add_subcommand("export", "Write the model as DOT, JSON or DSL");
  exp->add_option("model", common.model_path, "Model file")->required();
  exp->add_option("--format", format, "dot, json or dsl")->check(CLI::IsMember({"dot", "json", "dsl"}));
  exp->add_option("-o,--out", out, "Output file (default: stdout)");

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string models_dir = "models";
  bool allow_remote = false;
  auto * serve = app.add_subcommand("serve", "Run the local HTTP service");
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--models", models_dir, "Model directory");
  serve->add_flag("--allow-remote", allow_remote, "Permit a non-loopback bind address");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_usage;
  }

  try {
    const AnalysisOptions opts = analysis_options(exposure, outcome, scope, max_given, stratified);
    if (*validate) return cmd_validate(common, strict);
    if (*analyze) return cmd_analyze(common, opts, strict);
    if (*dsep) return cmd_dsep(common, x, y, given);
    if (*paths) return cmd_paths(common, opts);
    if (*adjust) return cmd_adjust(common, opts, candidates, max_size);
    if (*implications) return cmd_implications(common, opts);
    if (*requirements) return cmd_requirements(common, opts);
    if (*simulate) return cmd_simulate(common, n, seed, mutations, out);
    if (*citest) return cmd_citest(common, data_path, x, y, given, opts, alpha, method);
    if (*monitor) return cmd_monitor(common, mf);
    if (*exp) return cmd_export(common, format, out);
    if (*serve) return cmd_serve(host, port, models_dir, allow_remote);
  } catch (const ModelError & e) {
    std::cerr << common.model_path << (e.position().line ? ":" : ": ") << e.what() << "\n";
    return exit_usage;
  } catch (const CycleError & e) {
    std::cerr << "cycle: " << cycle_text(e.witness()) << "\n";
    return exit_findings;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_usage;
  }
  return exit_usage;
}
