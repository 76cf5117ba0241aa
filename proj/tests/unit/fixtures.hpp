#pragma once

// Hand-transcribed textbook fixtures.

#include <vector>

#include "ijgp/decomposition.hpp"
#include "ijgp/network.hpp"

namespace fixtures {

using ijgp::VarId;

// Seven binary variables A..G with CPTs P(A), P(B|A), P(C|A,B), P(D|B),
// P(F|C,D), P(E|B,F), P(G|E,F). Its join tree has clusters ABC, BCDF, BEF, EFG.
enum : VarId { A, B, C, D, E, F, G };

inline ijgp::BeliefNetwork seven_variable_network() {
  const std::vector<std::size_t> cards(7, 2);
  const std::vector<std::vector<VarId>> parents{{}, {A}, {A, B}, {B}, {B, F}, {C, D}, {E, F}};
  std::vector<ijgp::Factor> cpts;
  // Deterministic but uneven tables so beliefs are not symmetric.
  for (VarId v = 0; v < 7; ++v) {
    std::size_t rows = std::size_t{1} << parents[v].size();
    std::vector<double> t;
    for (std::size_t r = 0; r < rows; ++r) {
      const double p = 0.15 + 0.1 * static_cast<double>((v * 3 + r * 5) % 8);
      t.push_back(p);
      t.push_back(1.0 - p);
    }
    cpts.push_back(ijgp::make_cpt(v, parents[v], cards, std::move(t)));
  }
  return ijgp::BeliefNetwork(cards, parents, std::move(cpts));
}

// Ordering A, B, C, D, F, E, G: G is processed first, A last.
inline ijgp::EliminationOrdering seven_variable_ordering() { return ijgp::EliminationOrdering({A, B, C, D, F, E, G}); }

// Triangle of clusters {1,2,4}, {2,3,4}, {1,3,4} with separator labels; every label
// holds variable 4, so the graph cycles on it. Variables 1..4 are ids 0..3 here.
struct TriangleExample {
  ijgp::BeliefNetwork net;
  ijgp::ArcLabeledJoinGraph graph;
};

inline TriangleExample triangle_example() {
  const std::vector<std::size_t> cards(4, 2);
  const std::vector<std::vector<VarId>> parents{{3}, {0, 3}, {1, 3}, {}};
  std::vector<ijgp::Factor> cpts;
  for (VarId v = 0; v < 4; ++v) {
    std::vector<double> t;
    for (std::size_t r = 0; r < (std::size_t{1} << parents[v].size()); ++r) {
      t.push_back(0.3);
      t.push_back(0.7);
    }
    cpts.push_back(ijgp::make_cpt(v, parents[v], cards, std::move(t)));
  }
  TriangleExample ex{ijgp::BeliefNetwork(cards, parents, std::move(cpts)), {}};
  ex.graph.nodes = {{{0, 1, 3}, {0, 1, 3}, std::nullopt}, {{1, 2, 3}, {2}, std::nullopt}, {{0, 2, 3}, {}, std::nullopt}};
  ex.graph.edges = {{0, 1, {1, 3}, ijgp::EdgeKind::kOut},
                    {1, 2, {2, 3}, ijgp::EdgeKind::kOut},
                    {0, 2, {0, 3}, ijgp::EdgeKind::kOut}};
  return ex;
}

}  // namespace fixtures
