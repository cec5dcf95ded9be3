// scm.hpp - Structural causal models: ancestral sampling, factorised
// log-density and conditional-independence tests on sampled data.
//
// Random numbers come from std::mt19937_64. Every node owns a substream whose
// seed is splitmix64(seed ^ fnv1a64(node name)), so a node's draws depend on
// the run seed and its name only, never on declaration order.
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "causal/dag.hpp"
#include "causal/implications.hpp"
#include "causal/model.hpp"

namespace causal
{

class ScmError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class ScmSpec
{
public:
  /// Throws ScmError unless every node has a mechanism consistent with its parents.
  ScmSpec(CausalDag dag, std::map<std::string, MechanismDecl> mechanisms);
  static ScmSpec from_document(const ModelDocument & doc);

  const CausalDag & dag() const { return dag_; }
  const MechanismDecl & mechanism(const std::string & node) const;
  /// 0 for continuous nodes, else the number of categories.
  int levels(const std::string & node) const;
  bool categorical(const std::string & node) const { return levels(node) > 0; }

private:
  CausalDag dag_;
  std::map<std::string, MechanismDecl> mechanisms_;
};

/// Column-oriented samples. Categorical values are integer codes stored as doubles.
struct Dataset
{
  std::vector<std::string> names;
  std::map<std::string, std::vector<double>> columns;
  std::set<std::string> categorical;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  const std::vector<double> & column(const std::string & name) const;
  bool has(const std::string & name) const { return columns.count(name) != 0; }
};

std::uint64_t substream_seed(std::uint64_t seed, std::string_view node);

Dataset sample(const ScmSpec & scm, std::size_t n, std::uint64_t seed);

/// Sum over nodes of log p(x_i | parents).
double log_density(const ScmSpec & scm, const std::map<std::string, double> & record);

enum class CiMethod { fisher_z, g_test };

std::string_view to_string(CiMethod m);

struct CiTestResult
{
  CiStatement statement;
  double statistic = 0.0;
  double p_value = 1.0;
  bool rejected = false;
  CiMethod method = CiMethod::fisher_z;
  double alpha = 0.05;
  double dof = 0.0;  // g_test only
};

/// fisher_z: partial correlation from least-squares residuals, z-transform
/// with n - |Z| - 3 effective samples, two-sided normal p-value.
/// g_test: conditional likelihood-ratio test; x and y must be categorical,
/// continuous conditioning columns are cut into `bins` quantile bins.
CiTestResult ci_test(const Dataset & data, const CiStatement & statement, double alpha, CiMethod method,
                     std::size_t bins = 4);

struct ValidationReport
{
  std::vector<CiTestResult> results;
  std::size_t violations = 0;
};

ValidationReport validate_statements(const Dataset & data, const std::vector<CiStatement> & statements,
                                     double alpha, CiMethod method);

/// Tests every implied independence within `scope` (see implied_independencies).
ValidationReport validate_model(const CausalDag & dag, const Dataset & data, const NodeSet & scope, double alpha,
                                CiMethod method = CiMethod::fisher_z, std::size_t max_given = 3);

/// Pearson correlation; NaN when either column has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

std::string to_csv(const Dataset & data);
Dataset read_csv(std::string_view text);

}  // namespace causal
