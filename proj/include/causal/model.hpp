// model.hpp - In-memory form of a causal model description.
//
// A ModelDocument is what the DSL and JSON readers produce and what the
// writers consume. It carries no graph structure beyond declared edges;
// see dag.hpp for the validated DAG.
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace causal
{

enum class NodeKind { observed, latent };
enum class NodeRole { exposure, outcome, covariate, disturbance };

std::string_view to_string(NodeKind kind);
std::string_view to_string(NodeRole role);
std::optional<NodeKind> parse_node_kind(std::string_view text);
std::optional<NodeRole> parse_node_role(std::string_view text);

struct Assumption
{
  std::string tag;
  std::string text;

  bool operator==(const Assumption &) const = default;
};

struct NodeDecl
{
  std::string name;
  NodeKind kind = NodeKind::observed;
  NodeRole role = NodeRole::covariate;
  std::vector<std::string> traces;
  std::optional<std::string> label;
  // Overrides the "parentless means controllable" default used for test derivation.
  std::optional<bool> controllable;

  bool operator==(const NodeDecl &) const = default;
};

struct EdgeDecl
{
  std::string from;
  std::string to;
  std::vector<std::string> traces;
  std::optional<std::string> mechanism_tag;

  bool operator==(const EdgeDecl &) const = default;
};

/// x = intercept + sum(w_p * p) + noise_sd * N(0,1)
struct LinearGaussian
{
  double intercept = 0.0;
  double noise_sd = 1.0;
  std::map<std::string, double> weights;

  bool operator==(const LinearGaussian &) const = default;
};

/// P(x = 1) = sigmoid(intercept + sum(w_p * p)); x in {0, 1}
struct Logistic
{
  double intercept = 0.0;
  std::map<std::string, double> weights;

  bool operator==(const Logistic &) const = default;
};

/// Categorical node with values 0..levels-1. One row per parent configuration,
/// indexed mixed-radix over `parents` with the first parent most significant.
struct TableCpd
{
  int levels = 2;
  std::vector<std::string> parents;
  std::vector<std::vector<double>> rows;

  bool operator==(const TableCpd &) const = default;
};

using MechanismDecl = std::variant<LinearGaussian, Logistic, TableCpd>;

/// An independence statement declared by the model author, e.g. the ID1..ID5
/// conditions of a fixture. Checked against the graph, never assumed.
struct AssertedIndependence
{
  std::string tag;
  std::string x;
  std::string y;
  std::vector<std::string> given;

  bool operator==(const AssertedIndependence &) const = default;
};

struct ModelDocument
{
  std::string name;
  std::vector<Assumption> assumptions;
  std::vector<NodeDecl> nodes;
  std::vector<EdgeDecl> edges;
  std::map<std::string, MechanismDecl> mechanisms;
  std::vector<AssertedIndependence> independencies;

  const NodeDecl * find_node(std::string_view name) const;
  NodeDecl * find_node(std::string_view name);

  bool operator==(const ModelDocument &) const = default;
};

struct SourcePosition
{
  std::size_t line = 0;  // 1-based; 0 when unknown (e.g. JSON semantic errors)
  std::size_t column = 0;
};

/// Raised for malformed or invariant-violating model text. `subject` names the
/// offending identifier when there is one.
class ModelError : public std::runtime_error
{
public:
  ModelError(std::string message, SourcePosition position, std::string subject = {});

  const std::string & message() const noexcept { return message_; }
  const SourcePosition & position() const noexcept { return position_; }
  const std::string & subject() const noexcept { return subject_; }

private:
  std::string message_;
  SourcePosition position_;
  std::string subject_;
};

/// Declaration sites keyed "node:A", "edge:A->B", "assume:PK1", "mechanism:A",
/// "independence:ID1". Used to position semantic diagnostics.
using DeclarationSites = std::map<std::string, SourcePosition>;

/// Checks every ModelDocument invariant; throws ModelError on the first violation.
void validate_document(const ModelDocument & doc, const DeclarationSites * sites = nullptr);

/// Returns a copy of `doc` with edge from -> to added and the child's mechanism
/// (if any) extended with `weight` for the new parent.
ModelDocument with_added_edge(ModelDocument doc, const std::string & from, const std::string & to,
                              double weight);

}  // namespace causal
