#pragma once

#include <random>
#include <string>

#include "causal/dag.hpp"
#include "causal/dsl.hpp"
#include "causal/scm.hpp"
#include "oracles.hpp"

namespace testing_support
{

inline std::string fixture_path(const std::string & name)
{
  return std::string(CAUSAL_FIXTURE_DIR) + "/" + name;
}

inline const causal::ModelDocument & motor_document()
{
  static const causal::ModelDocument doc = causal::load_model_file(fixture_path("motor.cdag"));
  return doc;
}

inline const causal::CausalDag & motor()
{
  static const causal::CausalDag dag = causal::CausalDag::build(motor_document());
  return dag;
}

inline causal::CausalDag to_dag(const oracle::Graph & g)
{
  return causal::CausalDag::from_edges(g.nodes, g.edges);
}

inline oracle::Graph to_graph(const causal::CausalDag & dag)
{
  oracle::Graph g;
  for (const auto & n : dag.nodes()) g.nodes.push_back(n.name);
  for (const auto & e : dag.edges()) g.edges.emplace_back(e.from, e.to);
  return g;
}

/// Linear-Gaussian SCM over `g` with random weights, plus the same system in
/// the oracle's own representation.
inline std::pair<causal::ScmSpec, oracle::LinearSystem> random_linear_scm(const oracle::Graph & g, std::mt19937_64 & rng)
{
  std::uniform_real_distribution<double> weight(-1.5, 1.5);
  std::uniform_real_distribution<double> sd(0.3, 2.0);
  oracle::LinearSystem sys;
  sys.nodes = g.nodes;
  std::map<std::string, causal::MechanismDecl> mechanisms;
  for (const auto & n : g.nodes) {
    causal::LinearGaussian m;
    m.intercept = weight(rng);
    m.noise_sd = sd(rng);
    sys.intercept[n] = m.intercept;
    sys.noise_sd[n] = m.noise_sd;
    mechanisms[n] = m;
  }
  for (const auto & [a, b] : g.edges) {
    const double w = weight(rng);
    std::get<causal::LinearGaussian>(mechanisms[b]).weights[a] = w;
    sys.weights[{a, b}] = w;
  }
  return {causal::ScmSpec(to_dag(g), mechanisms), sys};
}

inline const causal::ScmSpec & motor_scm()
{
  static const causal::ScmSpec scm = causal::ScmSpec::from_document(motor_document());
  return scm;
}

/// Motor SCM with an extra T_E -> MechFault dependence of weight 0.5.
inline const causal::ScmSpec & mutated_motor_scm()
{
  static const causal::ScmSpec scm =
    causal::ScmSpec::from_document(causal::with_added_edge(motor_document(), "T_E", "MechFault", 0.5));
  return scm;
}

}  // namespace testing_support
