#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include "ijgp/factor.hpp"

namespace ijgp {

// A Bayesian network: one CPT per variable, CPT i has scope parents(i) ∪ {i}.
// Construction only checks shapes; call validate() for the semantic invariants.
class BeliefNetwork {
 public:
  BeliefNetwork() = default;
  BeliefNetwork(std::vector<std::size_t> cards, std::vector<std::vector<VarId>> parents, std::vector<Factor> cpts);

  std::size_t size() const noexcept { return cards_.size(); }
  std::size_t card(VarId v) const { return cards_[v]; }
  std::span<const std::size_t> cards() const noexcept { return cards_; }
  std::span<const VarId> parents(VarId v) const { return parents_[v]; }
  const Factor& cpt(VarId v) const { return cpts_[v]; }
  std::span<const Factor> cpts() const noexcept { return cpts_; }

  friend bool operator==(const BeliefNetwork&, const BeliefNetwork&) = default;

 private:
  std::vector<std::size_t> cards_;
  std::vector<std::vector<VarId>> parents_;  // ascending
  std::vector<Factor> cpts_;                 // indexed by child variable
};

// CPT for `child` given a table listed as (parents..., child), child fastest.
Factor make_cpt(VarId child, std::span<const VarId> parents, std::span<const std::size_t> cards,
                std::vector<double> table);

enum class ViolationKind { kShape, kCycle, kNormalization };

struct Violation {
  ViolationKind kind;
  std::string message;
};

// Empty iff the network is acyclic, every CPT scope equals its family, and each
// CPT row sums to 1 within 1e-9.
std::vector<Violation> validate(const BeliefNetwork& net);

// Undirected graph over variable ids; adjacency lists kept sorted.
class UndirectedGraph {
 public:
  explicit UndirectedGraph(std::size_t n = 0) : adj_(n) {}

  std::size_t size() const noexcept { return adj_.size(); }
  void add_edge(VarId a, VarId b);
  bool has_edge(VarId a, VarId b) const;
  std::span<const VarId> neighbors(VarId v) const { return adj_[v]; }
  std::size_t edge_count() const;

  friend bool operator==(const UndirectedGraph&, const UndirectedGraph&) = default;

 private:
  std::vector<std::vector<VarId>> adj_;
};

using MoralGraph = UndirectedGraph;

MoralGraph moral_graph(const BeliefNetwork& net);

// Per-variable posterior marginals. Observed variables carry a point mass on
// their observed value and are flagged so metrics can skip them.
struct Posterior {
  std::vector<Factor> beliefs;
  std::vector<bool> observed;

  std::size_t size() const noexcept { return beliefs.size(); }
};

// Point-mass posterior entries for evidence variables; other entries are left
// as scalar placeholders for the caller to fill.
Posterior make_posterior_shell(const BeliefNetwork& net, const Assignment& evidence);

// Exact posteriors by enumerating the joint. Throws GuardExceeded when the
// number of joint configurations exceeds `max_configurations`.
Posterior brute_force_posterior(const BeliefNetwork& net, const Assignment& evidence,
                                std::size_t max_configurations = std::size_t{1} << 22);

// Whitespace-token text format ("BAYES" header, scopes with child last, tables).
BeliefNetwork parse_network(std::istream& in);
BeliefNetwork parse_network(const std::string& text);
void serialize_network(const BeliefNetwork& net, std::ostream& out);
std::string serialize_network(const BeliefNetwork& net);

// "<count>" followed by "<var> <value>" pairs.
Assignment parse_evidence(std::istream& in);
void serialize_evidence(const Assignment& evidence, std::ostream& out);
// Checks variable ids and value ranges against the network; throws ModelError.
void check_evidence(const BeliefNetwork& net, const Assignment& evidence);

BeliefNetwork load_network(const std::string& path);
Assignment load_evidence(const std::string& path);

}  // namespace ijgp
