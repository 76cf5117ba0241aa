#pragma once

// Message passing over arc-labeled join-graphs (IJGP), its IBP and
// mini-clustering baselines, and exact bucket-tree elimination.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ijgp/decomposition.hpp"
#include "ijgp/network.hpp"

namespace ijgp {

struct DirectedEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::size_t edge = 0;  // index into ArcLabeledJoinGraph::edges

  friend bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

// Forward pass: each undirected edge once, greedily choosing the directed edge
// whose source misses the fewest incoming messages (ties to the lowest (from, to)).
std::vector<DirectedEdge> build_schedule(const ArcLabeledJoinGraph& jg);
// Forward pass followed by the reversed pass with directions flipped.
std::vector<DirectedEdge> iteration_schedule(const ArcLabeledJoinGraph& jg);

struct MessageBundle {
  std::size_t from = 0;
  std::size_t to = 0;
  std::vector<FactorPtr> individual;  // forwarded unchanged
  FactorPtr combined;                 // over θ(from,to); null when nothing needed combining
};

struct EngineConfig {
  std::size_t iterations = 1;
  bool normalize_messages = true;
  std::optional<double> convergence_epsilon;  // stop once messages move less than this
  std::optional<double> time_limit_s;         // checked between iterations
};

struct BeliefResult {
  Posterior posterior;
  std::size_t iterations_run = 0;
  bool converged = false;
  bool timed_out = false;
  double wall_time_s = 0.0;
};

// Iterative join-graph propagation over a fixed decomposition and evidence.
class IjgpEngine {
 public:
  IjgpEngine(const BeliefNetwork& net, const Assignment& evidence, const ArcLabeledJoinGraph& jg,
             EngineConfig cfg = {});

  // Message u -> v from the current state (does not store it).
  MessageBundle compute_message(std::size_t u, std::size_t v) const;
  // One forward+backward sweep; returns the largest change of a combined message entry.
  double sweep();
  BeliefResult run();

  // Normalized Bel(x) from cluster u (x must be an unobserved member of χ(u)).
  Factor cluster_belief(std::size_t u, VarId x) const;
  // Beliefs from the lowest-id cluster holding each variable.
  Posterior beliefs() const;

  std::span<const DirectedEdge> schedule() const noexcept { return schedule_; }
  std::span<const VarId> cluster_vars(std::size_t u) const { return chi_[u]; }
  std::span<const VarId> edge_label(std::size_t e) const { return theta_[e]; }
  std::size_t iterations_done() const noexcept { return iterations_done_; }
  std::size_t messages_computed() const noexcept { return messages_computed_; }

 private:
  std::size_t slot(std::size_t from, std::size_t edge) const { return 2 * edge + (jg_->edges[edge].u == from ? 0 : 1); }
  std::vector<FactorPtr> cluster_functions(std::size_t u, std::optional<std::size_t> except_from) const;
  // Where one input of a message comes from: a cluster CPT or part of an incoming bundle.
  struct Source {
    enum Kind : std::uint8_t { kPsi, kIndividual, kCombined } kind;
    std::size_t slot;
    std::size_t index;
  };
  // Cached split of a message's inputs, valid while the incoming bundles keep their shapes.
  struct Recipe {
    std::vector<Source> combine;
    std::vector<Source> individual;
    std::vector<std::pair<std::size_t, std::uint64_t>> deps;  // (slot, shape version)
    bool valid = false;
  };
  const FactorPtr& resolve(std::size_t u, const Source& src) const;
  bool recipe_current(const Recipe& r) const;
  // Recomputes one directed message in place; returns its largest entry change.
  double update(const DirectedEdge& d);

  const BeliefNetwork* net_;
  const ArcLabeledJoinGraph* jg_;
  Assignment evidence_;
  EngineConfig cfg_;
  std::vector<std::vector<VarId>> chi_;    // after removing evidence
  std::vector<std::vector<VarId>> theta_;  // after removing evidence
  std::vector<std::vector<VarId>> elim_;   // per slot: χ(from) - θ
  std::vector<std::vector<FactorPtr>> psi_;
  std::vector<std::vector<std::size_t>> incident_;
  std::vector<DirectedEdge> schedule_;
  std::vector<std::optional<MessageBundle>> messages_;  // slot 2e: u->v, 2e+1: v->u
  std::size_t iterations_done_ = 0;
  std::size_t messages_computed_ = 0;
  std::vector<std::optional<SumProductPlan>> plans_;  // per slot, rebuilt when input scopes change
  std::vector<Recipe> recipes_;
  std::vector<std::uint64_t> shape_version_;  // bumped when a slot's bundle changes shape
  mutable std::vector<const Factor*> scratch_;
  std::vector<const FactorPtr*> individual_scratch_;
  std::vector<double> table_scratch_;
};

BeliefResult ijgp_run(const BeliefNetwork& net, const Assignment& evidence, const ArcLabeledJoinGraph& jg,
                      const EngineConfig& cfg);
// IJGP over the minimal dual join-graph.
BeliefResult ibp_run(const BeliefNetwork& net, const Assignment& evidence, const EngineConfig& cfg);
// One collect/distribute pass over the join-tree with messages split into
// mini-partitions of at most i variables.
BeliefResult mc_run(const BeliefNetwork& net, const Assignment& evidence, const EliminationOrdering& ord,
                    std::size_t i);
BeliefResult mc_run(const BeliefNetwork& net, const Assignment& evidence, const ArcLabeledJoinGraph& join_tree,
                    std::size_t i);

// Exact posteriors by bucket-tree elimination along `ord`. Throws
// GuardExceeded if a bucket's table would exceed `max_table_entries`.
Posterior bucket_elimination_posterior(const BeliefNetwork& net, const Assignment& evidence,
                                       const EliminationOrdering& ord,
                                       std::size_t max_table_entries = std::size_t{1} << 26);

// First-fit partition of functions (sorted by descending scope size) into
// groups of at most i variables.
std::vector<std::vector<FactorPtr>> partition_functions(std::vector<FactorPtr> fns, std::size_t i);

}  // namespace ijgp
