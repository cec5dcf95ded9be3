// analysis.hpp - d-separation, path classification, back-door adjustment and
// instrument search over a CausalDag.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "causal/dag.hpp"

namespace causal
{

enum class InnerRole { chain, fork, collider };
enum class PathStatus { open, blocked };

std::string_view to_string(InnerRole role);
std::string_view to_string(PathStatus status);

/// An undirected simple path, classified relative to the conditioning set it
/// was enumerated under.
struct PathReport
{
  std::vector<std::string> nodes;       // x ... y
  std::vector<InnerRole> inner_roles;   // nodes.size() - 2 entries
  bool directed = false;                // x -> ... -> y
  PathStatus status = PathStatus::open;
  NodeSet blockers;                     // non-collider inner nodes

  bool open() const { return status == PathStatus::open; }
  /// Unique fork on a collider-free path, if any.
  std::optional<std::string> fork() const;

  bool operator==(const PathReport &) const = default;
};

struct SeparationQuery
{
  std::string x;
  std::string y;
  NodeSet given;
};

struct AdjustmentSet
{
  NodeSet members;
  bool minimal = true;

  bool operator==(const AdjustmentSet &) const = default;
};

struct ExposurePaths
{
  std::vector<PathReport> causal;
  std::vector<PathReport> biasing_open;
  std::vector<PathReport> blocked;
};

class PathOverflowError : public std::runtime_error
{
public:
  explicit PathOverflowError(std::size_t cap)
      : std::runtime_error("path enumeration exceeded cap of " + std::to_string(cap) + " paths")
  {
  }
};

constexpr std::size_t default_path_cap = 10000;

/// All simple undirected x-y paths in lexicographic order of node sequence.
std::vector<PathReport> enumerate_paths(const CausalDag & dag, const std::string & x, const std::string & y,
                                        const NodeSet & given = {}, std::size_t cap = default_path_cap);

/// Reachability ("Bayes ball") d-separation test; linear in the graph size.
bool d_separated(const CausalDag & dag, const SeparationQuery & query);

/// The textbook definition: every x-y path is blocked. Exponential; kept for
/// cross-checking and for path-level reporting.
bool d_separated_by_paths(const CausalDag & dag, const SeparationQuery & query,
                          std::size_t cap = default_path_cap);

ExposurePaths classify_exposure_paths(const CausalDag & dag, const std::string & exposure,
                                      const std::string & outcome);

/// True iff `set` holds no exposure descendant and blocks every back-door path.
bool satisfies_backdoor(const CausalDag & dag, const std::string & exposure, const std::string & outcome,
                        const NodeSet & set);

/// All minimal back-door adjustment sets drawn from `candidates` with at most
/// `max_size` members, ordered by size then lexicographically. Exposure
/// descendants among the candidates are skipped.
std::vector<AdjustmentSet> backdoor_sets(const CausalDag & dag, const std::string & exposure,
                                         const std::string & outcome, const NodeSet & candidates,
                                         std::size_t max_size);

/// Unconditioned graphical instruments among `candidates`.
NodeSet find_instruments(const CausalDag & dag, const std::string & exposure, const std::string & outcome,
                         const NodeSet & candidates);

/// Latent nodes that would be needed to block an open biasing path that has no
/// observed, non-descendant blocker.
NodeSet observability_gaps(const CausalDag & dag, const std::string & exposure, const std::string & outcome);

/// Blockers of `path` usable for adjustment: non-collider inner nodes that are
/// not descendants of `exposure`.
NodeSet admissible_blockers(const CausalDag & dag, const PathReport & path, const std::string & exposure);

}  // namespace causal
