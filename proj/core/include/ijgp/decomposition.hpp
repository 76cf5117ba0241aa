#pragma once

// Elimination orderings, schematic mini-bucket tracing, join-graph structuring,
// and auditing of arc-labeled join-graph decompositions.

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ijgp/network.hpp"

namespace ijgp {

// Cluster-size bound meaning "no partitioning".
inline constexpr std::size_t kUnboundedI = std::numeric_limits<std::size_t>::max();

// Variables ordered X_1..X_n; buckets are processed from the back, so
// order()[0] is eliminated last.
class EliminationOrdering {
 public:
  EliminationOrdering() = default;
  explicit EliminationOrdering(std::vector<VarId> order);
  // From the sequence in which variables are eliminated (first eliminated first).
  static EliminationOrdering from_elimination_sequence(std::vector<VarId> sequence);

  std::size_t size() const noexcept { return order_.size(); }
  std::span<const VarId> order() const noexcept { return order_; }
  std::size_t position(VarId v) const { return position_[v]; }
  std::vector<VarId> elimination_sequence() const;

 private:
  std::vector<VarId> order_;
  std::vector<std::size_t> position_;
};

// Greedy min-fill; ties go to the lowest vertex index.
EliminationOrdering min_fill_ordering(const UndirectedGraph& g);
int induced_width(const UndirectedGraph& g, const EliminationOrdering& ord);

struct MiniBucket {
  VarId bucket_var = 0;
  std::vector<VarId> vars;           // union of the held scopes, ascending
  std::vector<VarId> cpts;           // original CPT ids (= child variable)
  std::vector<std::size_t> inputs;   // mini-buckets whose messages landed here
  std::vector<VarId> message_scope;  // vars - {bucket_var}
  std::optional<std::size_t> consumer;
};

struct SchematicBucketTrace {
  std::size_t i_bound = kUnboundedI;
  std::vector<MiniBucket> minibuckets;           // creation order
  std::vector<std::vector<std::size_t>> buckets;  // per variable, mini-bucket ids in creation order
};

// Scope-only mini-bucket trace: first-fit partitioning of functions sorted by
// descending scope size; a function larger than i gets its own mini-bucket.
SchematicBucketTrace schematic_mini_bucket(const BeliefNetwork& net, const EliminationOrdering& ord, std::size_t i);

enum class EdgeKind { kOut, kIn };

struct Cluster {
  std::vector<VarId> vars;  // χ, ascending
  std::vector<VarId> cpts;  // ψ, CPT ids
  std::optional<VarId> bucket_var;

  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct JoinEdge {
  std::size_t u = 0;
  std::size_t v = 0;
  std::vector<VarId> label;  // θ, ascending
  EdgeKind kind = EdgeKind::kOut;

  friend bool operator==(const JoinEdge&, const JoinEdge&) = default;
};

struct ArcLabeledJoinGraph {
  std::vector<Cluster> nodes;
  std::vector<JoinEdge> edges;

  // Incident edge ids per node.
  std::vector<std::vector<std::size_t>> incidence() const;

  friend bool operator==(const ArcLabeledJoinGraph&, const ArcLabeledJoinGraph&) = default;
};

ArcLabeledJoinGraph join_graph_structuring(const BeliefNetwork& net, const EliminationOrdering& ord, std::size_t i);
ArcLabeledJoinGraph build_join_tree(const BeliefNetwork& net, const EliminationOrdering& ord);
// One cluster per CPT, edges between scope-sharing clusters, labels minimized.
ArcLabeledJoinGraph dual_join_graph(const BeliefNetwork& net);

// Empty iff CPT placement, label ⊆ separator and per-variable arc-connectedness hold.
std::vector<std::string> validate_decomposition(const BeliefNetwork& net, const ArcLabeledJoinGraph& jg);

// True iff the clusters containing v are connected through edges whose label contains v.
bool arc_connected(const ArcLabeledJoinGraph& jg, VarId v);
// Variables whose labeled edges contain a cycle.
std::vector<VarId> variables_with_cycles(const ArcLabeledJoinGraph& jg);
// True iff no single label variable can be deleted without breaking arc-connectedness.
bool is_label_minimal(const ArcLabeledJoinGraph& jg);

// Greedy label deletion (edges in canonical order, variables ascending) while
// arc-connectedness holds. Edges left with an empty label are dropped.
ArcLabeledJoinGraph minimize_arc_labels(const ArcLabeledJoinGraph& jg);

// True iff no path joins a node of `from` to a node of `to` once `removed` edges are deleted.
bool arc_separates(const ArcLabeledJoinGraph& jg, std::span<const std::size_t> from, std::span<const std::size_t> to,
                   std::span<const std::size_t> removed);

struct DecompositionStats {
  std::size_t cluster_count = 0;
  std::size_t max_cluster_size = 0;  // w* + 1
  std::size_t max_label_size = 0;
  std::size_t max_degree = 0;
  std::size_t separator_width = 0;
};

DecompositionStats decomposition_stats(const ArcLabeledJoinGraph& jg);

// Debug text: `node <id> chi: ... psi: ...` and `edge <u> <v> theta: ... <in|out>` lines.
void dump_join_graph(const ArcLabeledJoinGraph& jg, std::ostream& out);

}  // namespace ijgp
