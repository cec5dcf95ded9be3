// report.hpp - JSON shapes shared by the command-line tool and the HTTP
// service. Both print `dump(2)` of these values, so identical queries produce
// identical bytes.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causal/analysis.hpp"
#include "causal/derivation.hpp"
#include "causal/implications.hpp"
#include "causal/model.hpp"
#include "causal/scm.hpp"

namespace causal
{

using Json = nlohmann::ordered_json;

Json to_json(const PathReport & path);
Json to_json(const CiStatement & statement);
Json to_json(const AdjustmentSet & set);
Json to_json(const RequirementArtifact & artifact);
Json to_json(const MonitorSpec & spec);
Json to_json(const CiTestResult & result);
Json to_json(const ModelError & error);

struct AnalysisOptions
{
  std::optional<std::string> exposure;  // default: declared exposure
  std::optional<std::string> outcome;   // default: declared outcome
  std::optional<NodeSet> scope;         // default: observed nodes plus exposure and outcome
  std::size_t max_given = 3;
  bool stratified_monitors = false;
};

/// Exposure, outcome and implication scope after applying defaults. Throws
/// std::invalid_argument when a role is missing and UnknownNodeError for
/// unknown names.
struct ResolvedRoles
{
  std::string exposure;
  std::string outcome;
  NodeSet scope;
};
ResolvedRoles resolve(const CausalDag & dag, const AnalysisOptions & options);

/// Validation section only: {"acyclic", "cycle"?, "nodes", "edges"}.
Json validation_json(const ModelDocument & doc);

/// Full report: validation, paths, adjustment, instruments, implications,
/// requirements and monitors. A cyclic model yields the validation section alone.
Json analysis_report(const ModelDocument & doc, const AnalysisOptions & options);

Json separation_json(const CausalDag & dag, const SeparationQuery & query);
Json paths_json(const CausalDag & dag, const std::string & exposure, const std::string & outcome);
Json adjustment_json(const CausalDag & dag, const std::string & exposure, const std::string & outcome,
                     const NodeSet & candidates, std::size_t max_size);
Json implications_json(const ModelDocument & doc, const CausalDag & dag, const NodeSet & scope,
                       std::size_t max_given);
Json requirements_json(const ModelDocument & doc, const CausalDag & dag, const AnalysisOptions & options);

/// Two-space indented text with a trailing newline; the one rendering used by
/// every JSON-producing entry point.
std::string render(const Json & j);

/// Splits "a,b , c" into names; empty input gives an empty set.
NodeSet parse_name_list(const std::string & text);

}  // namespace causal
