#include <doctest.h>

#include <random>

#include "causal/analysis.hpp"
#include "causal/implications.hpp"
#include "support.hpp"

using namespace causal;
using testing_support::motor;

namespace
{

bool contains(const std::vector<CiStatement> & list, const CiStatement & s)
{
  return std::any_of(list.begin(), list.end(), [&](const CiStatement & t) { return t.same_claim(s); });
}

const NodeSet motor_scope{"Classification", "T_E", "H_s", "T_s", "V_s", "CoolingFault"};

}  // namespace

TEST_CASE("statement canonical form and rendering")
{
  const auto s = CiStatement::make("V_s", "T_E", {});
  CHECK(s.x == "T_E");
  CHECK(s.y == "V_s");
  CHECK(to_string(s) == "T_E ⊥ V_s");
  CHECK(to_string(CiStatement::make("Classification", "T_E", {"V_s", "H_s", "T_s"})) ==
        "Classification ⊥ T_E | H_s, T_s, V_s");
  CHECK_THROWS_AS(CiStatement::make("A", "A", {}), std::invalid_argument);
  CHECK_THROWS_AS(CiStatement::make("A", "B", {"A"}), std::invalid_argument);
}

TEST_CASE("local Markov basis")
{
  SUBCASE("chain")
  {
    const auto dag = CausalDag::from_edges({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
    const auto basis = local_markov_basis(dag);
    CHECK(contains(basis, CiStatement::make("A", "C", {"B"})));
    for (const auto & s : basis) CHECK(s.provenance == Provenance::local_markov);
  }
  SUBCASE("single node")
  {
    CHECK(local_markov_basis(CausalDag::from_edges({"A"}, {})).empty());
  }
  SUBCASE("motor")
  {
    const auto basis = local_markov_basis(motor());
    const auto s = CiStatement::make("V_s", "T_E", {"V", "U_V"});
    REQUIRE(contains(basis, s));
    CHECK(reduce(motor(), s).given.empty());
    for (const auto & t : basis) CHECK(verify(motor(), t));
  }
}

TEST_CASE("motor implied independencies contain the five listed conditions")
{
  const auto implied = implied_independencies(motor(), motor_scope, 3);
  const std::vector<CiStatement> listed{
    CiStatement::make("Classification", "T_E", {"H_s", "T_s", "V_s"}),
    CiStatement::make("H_s", "T_E", {"CoolingFault"}),
    CiStatement::make("H_s", "V_s", {"CoolingFault"}),
    CiStatement::make("T_s", "V_s", {"CoolingFault", "T_E"}),
    CiStatement::make("V_s", "T_E", {}),
  };
  for (const auto & s : listed) CHECK_MESSAGE(contains(implied, s), to_string(s));

  // The fixture's declared statements are the same five.
  const auto asserted = asserted_statements(testing_support::motor_document());
  REQUIRE(asserted.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(asserted[i].same_claim(listed[i]));
    CHECK(asserted[i].tag == "ID" + std::to_string(i + 1));
  }

  // Each listed statement is the only minimal one for its pair.
  for (const auto & s : listed) {
    const auto n = std::count_if(implied.begin(), implied.end(),
                                 [&](const CiStatement & t) { return t.x == s.x && t.y == s.y; });
    CHECK(n == 1);
  }
  // The one remaining pair separable inside this scope.
  CHECK(implied.size() == 6);
  CHECK(contains(implied, CiStatement::make("Classification", "CoolingFault", {"H_s", "T_s", "V_s"})));
}

TEST_CASE("implied independencies are sound and minimal on random graphs")
{
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 60; ++trial) {
    const auto g = oracle::random_dag(rng, 7, 0.3);
    const auto dag = testing_support::to_dag(g);
    const NodeSet scope(g.nodes.begin(), g.nodes.end());
    for (const auto & s : implied_independencies(dag, scope, 3)) {
      CHECK(oracle::d_separated(g, s.x, s.y, s.given));
      CHECK_FALSE(dag.adjacent(s.x, s.y));
      for (const auto & drop : s.given) {
        NodeSet smaller = s.given;
        smaller.erase(drop);
        CHECK_FALSE(verify(dag, CiStatement::make(s.x, s.y, smaller)));
      }
    }
  }
}

TEST_CASE("small cases")
{
  const auto complete = CausalDag::from_edges({"A", "B", "C"}, {{"A", "B"}, {"A", "C"}, {"B", "C"}});
  CHECK(implied_independencies(complete, complete.all_nodes(), 3).empty());

  const auto fork = CausalDag::from_edges({"X1", "X2", "Z"}, {{"Z", "X1"}, {"Z", "X2"}});
  const auto implied = implied_independencies(fork, fork.all_nodes(), 3);
  REQUIRE(implied.size() == 1);
  CHECK(implied[0].same_claim(CiStatement::make("X1", "X2", {"Z"})));

  CHECK_THROWS_AS(implied_independencies(fork, {"Z"}, 3), std::invalid_argument);
}

TEST_CASE("verify")
{
  CHECK(verify(motor(), CiStatement::make("H_s", "T_E", {"CoolingFault"})));
  CHECK_FALSE(verify(motor(), CiStatement::make("H_s", "T_s", {})));
  const auto two = CausalDag::from_edges({"A", "B", "C", "D"}, {{"A", "B"}, {"C", "D"}});
  CHECK(verify(two, CiStatement::make("A", "C", {"B", "D"})));
  CHECK(verify(two, CiStatement::make("B", "D", {"A"})));
  CHECK_THROWS_AS(verify(two, CiStatement::make("A", "Q", {})), UnknownNodeError);
}
