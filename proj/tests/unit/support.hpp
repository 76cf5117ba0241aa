#pragma once

// Small seeded generators and brute-force helpers shared by the unit tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "ijgp/factor.hpp"
#include "ijgp/network.hpp"

namespace testing {

using ijgp::Assignment;
using ijgp::BeliefNetwork;
using ijgp::Factor;
using ijgp::Scope;
using ijgp::VarId;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool coin(double p = 0.5) { return uniform() < p; }

  // Random subset of [0, universe) with `size` elements, ascending.
  std::vector<VarId> subset(std::size_t universe, std::size_t size) {
    std::vector<VarId> all(universe);
    for (VarId v = 0; v < universe; ++v) all[v] = v;
    std::shuffle(all.begin(), all.end(), rng_);
    all.resize(size);
    std::sort(all.begin(), all.end());
    return all;
  }

  Factor factor(const std::vector<VarId>& vars, const std::vector<std::size_t>& cards_by_var, double zero_p = 0.0) {
    std::vector<std::size_t> cards;
    for (VarId v : vars) cards.push_back(cards_by_var[v]);
    Scope s(vars, cards);
    std::vector<double> t(s.table_size());
    for (double& x : t) x = coin(zero_p) ? 0.0 : uniform(0.05, 1.0);
    return Factor(s, std::move(t));
  }

  // Random DAG on n variables: variable v may take parents among 0..v-1, then ids are
  // shuffled so parent lists are not always lower-numbered.
  BeliefNetwork network(std::size_t n, std::size_t max_card, std::size_t max_parents, double zero_p = 0.0) {
    std::vector<VarId> perm(n);
    for (VarId v = 0; v < n; ++v) perm[v] = v;
    std::shuffle(perm.begin(), perm.end(), rng_);
    std::vector<std::size_t> cards(n);
    for (auto& c : cards) c = 2 + index(max_card - 1);
    std::vector<std::vector<VarId>> parents(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
      const std::size_t np = std::min(pos, index(max_parents + 1));
      for (VarId q : subset(pos, np)) parents[perm[pos]].push_back(perm[q]);
      std::sort(parents[perm[pos]].begin(), parents[perm[pos]].end());
    }
    std::vector<Factor> cpts;
    for (VarId v = 0; v < n; ++v) {
      std::size_t rows = 1;
      for (VarId p : parents[v]) rows *= cards[p];
      std::vector<double> t(rows * cards[v]);
      for (std::size_t r = 0; r < rows; ++r) {
        double z = 0.0;
        for (std::size_t x = 0; x < cards[v]; ++x) {
          double& e = t[r * cards[v] + x];
          e = coin(zero_p) ? 0.0 : uniform(0.05, 1.0);
          z += e;
        }
        if (z == 0.0) {
          t[r * cards[v]] = 1.0;
          z = 1.0;
        }
        for (std::size_t x = 0; x < cards[v]; ++x) t[r * cards[v] + x] /= z;
      }
      cpts.push_back(ijgp::make_cpt(v, parents[v], cards, std::move(t)));
    }
    return BeliefNetwork(cards, parents, std::move(cpts));
  }

  // Evidence drawn from a forward sample, so it always has positive probability.
  Assignment evidence(const BeliefNetwork& net, std::size_t count, const std::vector<ijgp::Value>& sample) {
    Assignment e;
    for (VarId v : subset(net.size(), std::min(count, net.size()))) e.emplace(v, sample[v]);
    return e;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

// Every full assignment of `vars` (ascending, with matching cards), last fastest.
template <class F>
void for_each_assignment(std::span<const VarId> vars, std::span<const std::size_t> cards, F&& f) {
  Assignment a;
  for (VarId v : vars) a[v] = 0;
  while (true) {
    f(a);
    std::size_t k = vars.size();
    while (k-- > 0) {
      if (++a[vars[k]] < cards[k]) break;
      a[vars[k]] = 0;
    }
    if (k == static_cast<std::size_t>(-1)) return;
  }
}

inline double max_posterior_diff(const ijgp::Posterior& a, const ijgp::Posterior& b) {
  double d = 0.0;
  for (std::size_t v = 0; v < a.size(); ++v)
    for (std::size_t x = 0; x < a.beliefs[v].size(); ++x)
      d = std::max(d, std::abs(a.beliefs[v][x] - b.beliefs[v][x]));
  return d;
}

inline double max_rel_diff(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double scale = std::max({std::abs(a[k]), std::abs(b[k]), 1e-300});
    d = std::max(d, std::abs(a[k] - b[k]) / scale);
  }
  return d;
}

}  // namespace testing
