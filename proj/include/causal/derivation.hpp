// derivation.hpp - Requirement artifacts derived from the causal graph:
// data and model requirements, test-case specifications and runtime monitors.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "causal/analysis.hpp"
#include "causal/dag.hpp"
#include "causal/implications.hpp"

namespace causal
{

enum class ArtifactKind { data, model, test_case, monitor };

/// R1 latent-confounder coverage, R2 observed-confounder stratification,
/// R3 sensor-noise coverage, R4 input sufficiency, R5 sole-feature
/// prohibition, R6 observability; TC and MON for test cases and monitors.
enum class Rule { R1, R2, R3, R4, R5, R6, TC, MON };

std::string_view to_string(ArtifactKind kind);
std::string_view to_string(Rule rule);

struct RequirementArtifact
{
  std::string id;
  ArtifactKind kind = ArtifactKind::data;
  Rule rule = Rule::R1;
  std::string text;
  NodeSet subjects;                     // evidence node set
  std::vector<PathReport> paths;        // supporting paths
  std::vector<CiStatement> statements;  // supporting independencies
  std::vector<std::string> traces;      // sorted assumption tags
  std::string commentary;

  bool operator==(const RequirementArtifact &) const = default;
};

enum class CorrelationKind { pearson, spearman };

std::string_view to_string(CorrelationKind kind);

struct MonitorSpec
{
  std::string id;
  CiStatement statement;
  std::size_t window = 500;
  double threshold = 0.2;
  std::size_t consecutive = 3;
  CorrelationKind statistic = CorrelationKind::pearson;

  bool stratified() const { return !statement.given.empty(); }
  bool operator==(const MonitorSpec &) const = default;
};

/// Throws std::invalid_argument unless window >= 30, 0 < threshold < 1,
/// consecutive >= 1 and at most one stratifying variable. With a DAG, every
/// statement variable must also be an observed node.
void validate_monitor(const MonitorSpec & spec, const CausalDag * dag = nullptr);

/// Data and model requirements, ids RQ-D* then RQ-M*. Throws
/// std::invalid_argument for unknown, equal or undeclared exposure/outcome.
std::vector<RequirementArtifact> derive_requirements(const CausalDag & dag, const std::string & exposure,
                                                     const std::string & outcome);
std::vector<RequirementArtifact> derive_requirements(const CausalDag & dag);

/// Test specifications (TC-*) for implied independencies among observed
/// variables, the exposure and the outcome whose pair contains a controllable
/// variable. Tags of matching `asserted` statements are carried over.
std::vector<RequirementArtifact> derive_test_cases(const CausalDag & dag, const std::string & exposure,
                                                   const std::string & outcome,
                                                   const std::vector<CiStatement> & asserted = {});

/// Marginal monitors (MON-*) for implied independencies among observed
/// variables; with `stratified`, single-variable conditioning sets as well.
std::vector<MonitorSpec> derive_monitors(const CausalDag & dag, bool stratified = false);

RequirementArtifact monitor_artifact(const CausalDag & dag, const MonitorSpec & spec);

/// Requirements, test cases and monitor artifacts in report order.
std::vector<RequirementArtifact> derive_all(const CausalDag & dag, const std::string & exposure,
                                            const std::string & outcome,
                                            const std::vector<CiStatement> & asserted = {},
                                            bool stratified_monitors = false);

std::string render_markdown(const std::vector<RequirementArtifact> & artifacts, const std::string & title);

}  // namespace causal
