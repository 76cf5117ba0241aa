#include "ijgp/decomposition.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <queue>
#include <tuple>

#include "ijgp/errors.hpp"

namespace ijgp {

namespace {

std::vector<VarId> set_union(std::span<const VarId> a, std::span<const VarId> b) {
  std::vector<VarId> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<VarId> set_intersection(std::span<const VarId> a, std::span<const VarId> b) {
  std::vector<VarId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

bool is_subset(std::span<const VarId> a, std::span<const VarId> b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

EliminationOrdering::EliminationOrdering(std::vector<VarId> order) : order_(std::move(order)) {
  position_.assign(order_.size(), order_.size());
  for (std::size_t p = 0; p < order_.size(); ++p) {
    VarId v = order_[p];
    if (v >= order_.size() || position_[v] != order_.size())
      throw ContractViolation("elimination ordering is not a permutation");
    position_[v] = p;
  }
}

EliminationOrdering EliminationOrdering::from_elimination_sequence(std::vector<VarId> sequence) {
  std::reverse(sequence.begin(), sequence.end());
  return EliminationOrdering(std::move(sequence));
}

std::vector<VarId> EliminationOrdering::elimination_sequence() const {
  return std::vector<VarId>(order_.rbegin(), order_.rend());
}

namespace {

// Mutable elimination graph with an adjacency matrix for O(1) edge tests.
class EliminationGraph {
 public:
  explicit EliminationGraph(const UndirectedGraph& g)
      : n_(g.size()), matrix_(n_ * n_, 0), nbrs_(n_), alive_(n_, true) {
    for (VarId v = 0; v < n_; ++v) {
      for (VarId w : g.neighbors(v)) {
        matrix_[v * n_ + w] = 1;
        nbrs_[v].push_back(w);
      }
    }
  }

  std::size_t fill_in(VarId v) const {
    const auto& nb = nbrs_[v];
    std::size_t fill = 0;
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t b = a + 1; b < nb.size(); ++b)
        if (!matrix_[nb[a] * n_ + nb[b]]) ++fill;
    return fill;
  }

  std::size_t degree(VarId v) const { return nbrs_[v].size(); }
  std::span<const VarId> neighbors(VarId v) const { return nbrs_[v]; }
  bool alive(VarId v) const { return alive_[v]; }

  void eliminate(VarId v) {
    const auto nb = nbrs_[v];
    for (std::size_t a = 0; a < nb.size(); ++a) {
      for (std::size_t b = a + 1; b < nb.size(); ++b) {
        VarId x = nb[a], y = nb[b];
        if (!matrix_[x * n_ + y]) {
          matrix_[x * n_ + y] = matrix_[y * n_ + x] = 1;
          nbrs_[x].push_back(y);
          nbrs_[y].push_back(x);
        }
      }
    }
    for (VarId w : nb) {
      auto& l = nbrs_[w];
      l.erase(std::find(l.begin(), l.end(), v));
      matrix_[w * n_ + v] = matrix_[v * n_ + w] = 0;
    }
    nbrs_[v].clear();
    alive_[v] = false;
  }

 private:
  std::size_t n_;
  std::vector<char> matrix_;
  std::vector<std::vector<VarId>> nbrs_;
  std::vector<bool> alive_;
};

}  // namespace

EliminationOrdering min_fill_ordering(const UndirectedGraph& g) {
  const std::size_t n = g.size();
  EliminationGraph eg(g);
  std::vector<std::size_t> score(n);
  for (VarId v = 0; v < n; ++v) score[v] = eg.fill_in(v);
  std::vector<char> dirty(n, 0);
  std::vector<VarId> sequence;
  sequence.reserve(n);
  for (std::size_t step = 0; step < n; ++step) {
    VarId best = 0;
    bool found = false;
    for (VarId v = 0; v < n; ++v) {
      if (!eg.alive(v)) continue;
      if (!found || score[v] < score[best]) {
        best = v;
        found = true;
      }
    }
    // Fill counts can change for the neighbors and their neighbors.
    std::vector<VarId> touched;
    for (VarId w : eg.neighbors(best)) {
      if (!dirty[w]) touched.push_back(w), dirty[w] = 1;
      for (VarId x : eg.neighbors(w))
        if (!dirty[x]) touched.push_back(x), dirty[x] = 1;
    }
    eg.eliminate(best);
    sequence.push_back(best);
    for (VarId w : touched) {
      dirty[w] = 0;
      if (eg.alive(w)) score[w] = eg.fill_in(w);
    }
  }
  return EliminationOrdering::from_elimination_sequence(std::move(sequence));
}

int induced_width(const UndirectedGraph& g, const EliminationOrdering& ord) {
  if (ord.size() != g.size()) throw ContractViolation("ordering size differs from graph size");
  EliminationGraph eg(g);
  int width = 0;
  for (VarId v : ord.elimination_sequence()) {
    width = std::max(width, static_cast<int>(eg.degree(v)));
    eg.eliminate(v);
  }
  return width;
}

SchematicBucketTrace schematic_mini_bucket(const BeliefNetwork& net, const EliminationOrdering& ord, std::size_t i) {
  if (i < 1) throw ContractViolation("i-bound must be at least 1");
  if (ord.size() != net.size()) throw ContractViolation("ordering size differs from network size");

  struct Fn {
    std::vector<VarId> scope;
    std::optional<VarId> cpt;         // original CPT id
    std::optional<std::size_t> from;  // producing mini-bucket
  };
  auto highest = [&](std::span<const VarId> scope) {
    return *std::max_element(scope.begin(), scope.end(),
                             [&](VarId a, VarId b) { return ord.position(a) < ord.position(b); });
  };

  const std::size_t n = net.size();
  std::vector<std::vector<Fn>> pending(n);
  for (VarId v = 0; v < n; ++v) {
    auto s = net.cpt(v).scope().vars();
    pending[highest(s)].push_back(Fn{std::vector<VarId>(s.begin(), s.end()), v, std::nullopt});
  }

  SchematicBucketTrace trace;
  trace.i_bound = i;
  trace.buckets.resize(n);
  for (std::size_t p = n; p-- > 0;) {
    const VarId x = ord.order()[p];
    auto fns = std::move(pending[x]);
    std::stable_sort(fns.begin(), fns.end(), [](const Fn& a, const Fn& b) { return a.scope.size() > b.scope.size(); });

    std::vector<std::pair<std::vector<VarId>, std::vector<const Fn*>>> parts;
    for (const Fn& f : fns) {
      bool placed = false;
      for (auto& [vars, members] : parts) {
        auto u = set_union(vars, f.scope);
        if (u.size() <= i) {
          vars = std::move(u);
          members.push_back(&f);
          placed = true;
          break;
        }
      }
      if (!placed) parts.emplace_back(f.scope, std::vector<const Fn*>{&f});
    }

    for (auto& [vars, members] : parts) {
      const std::size_t id = trace.minibuckets.size();
      MiniBucket mb;
      mb.bucket_var = x;
      mb.vars = vars;
      for (const Fn* f : members) {
        if (f->cpt) mb.cpts.push_back(*f->cpt);
        if (f->from) {
          mb.inputs.push_back(*f->from);
          trace.minibuckets[*f->from].consumer = id;
        }
      }
      std::sort(mb.cpts.begin(), mb.cpts.end());
      for (VarId v : vars)
        if (v != x) mb.message_scope.push_back(v);
      if (!mb.message_scope.empty())
        pending[highest(mb.message_scope)].push_back(Fn{mb.message_scope, std::nullopt, id});
      trace.buckets[x].push_back(id);
      trace.minibuckets.push_back(std::move(mb));
    }
  }
  return trace;
}

std::vector<std::vector<std::size_t>> ArcLabeledJoinGraph::incidence() const {
  std::vector<std::vector<std::size_t>> inc(nodes.size());
  for (std::size_t e = 0; e < edges.size(); ++e) {
    inc[edges[e].u].push_back(e);
    inc[edges[e].v].push_back(e);
  }
  return inc;
}

ArcLabeledJoinGraph join_graph_structuring(const BeliefNetwork& net, const EliminationOrdering& ord, std::size_t i) {
  const SchematicBucketTrace trace = schematic_mini_bucket(net, ord, i);
  ArcLabeledJoinGraph jg;
  for (const MiniBucket& mb : trace.minibuckets) jg.nodes.push_back(Cluster{mb.vars, mb.cpts, mb.bucket_var});
  for (std::size_t id = 0; id < trace.minibuckets.size(); ++id) {
    const auto& mb = trace.minibuckets[id];
    if (!mb.consumer) continue;
    jg.edges.push_back(JoinEdge{id, *mb.consumer, set_intersection(mb.vars, jg.nodes[*mb.consumer].vars), EdgeKind::kOut});
  }
  for (VarId x = 0; x < trace.buckets.size(); ++x) {
    const auto& ids = trace.buckets[x];
    for (std::size_t k = 1; k < ids.size(); ++k) jg.edges.push_back(JoinEdge{ids[k - 1], ids[k], {x}, EdgeKind::kIn});
  }
  return jg;
}

ArcLabeledJoinGraph build_join_tree(const BeliefNetwork& net, const EliminationOrdering& ord) {
  ArcLabeledJoinGraph bt = join_graph_structuring(net, ord, kUnboundedI);

  // Contract tree edges whose one endpoint's χ is contained in the other's.
  const std::size_t n = bt.nodes.size();
  std::vector<std::size_t> rep(n);
  std::iota(rep.begin(), rep.end(), std::size_t{0});
  auto find = [&](std::size_t a) {
    while (rep[a] != a) a = rep[a] = rep[rep[a]];
    return a;
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (const JoinEdge& e : bt.edges) {
      std::size_t a = find(e.u), b = find(e.v);
      if (a == b) continue;
      if (is_subset(bt.nodes[a].vars, bt.nodes[b].vars)) {
        std::swap(a, b);
      } else if (!is_subset(bt.nodes[b].vars, bt.nodes[a].vars)) {
        continue;
      }
      // b is absorbed into a.
      auto& keep = bt.nodes[a];
      auto& gone = bt.nodes[b];
      keep.cpts.insert(keep.cpts.end(), gone.cpts.begin(), gone.cpts.end());
      std::sort(keep.cpts.begin(), keep.cpts.end());
      gone.cpts.clear();
      rep[b] = a;
      changed = true;
    }
  }

  ArcLabeledJoinGraph jt;
  std::vector<std::size_t> new_id(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    if (find(k) != k) continue;
    new_id[k] = jt.nodes.size();
    jt.nodes.push_back(bt.nodes[k]);
  }
  for (const JoinEdge& e : bt.edges) {
    std::size_t a = new_id[find(e.u)], b = new_id[find(e.v)];
    if (a == b) continue;
    jt.edges.push_back(JoinEdge{a, b, set_intersection(jt.nodes[a].vars, jt.nodes[b].vars), EdgeKind::kOut});
  }
  return jt;
}

namespace {

// Per-variable view of which edges currently carry the variable.
class LabelIndex {
 public:
  explicit LabelIndex(const ArcLabeledJoinGraph& jg) : jg_(jg) {
    VarId max_var = 0;
    for (const auto& c : jg.nodes)
      for (VarId v : c.vars) max_var = std::max(max_var, v + 1);
    for (const auto& e : jg.edges)
      for (VarId v : e.label) max_var = std::max(max_var, v + 1);
    holders_.resize(max_var);
    carriers_.resize(max_var);
    for (std::size_t u = 0; u < jg.nodes.size(); ++u)
      for (VarId v : jg.nodes[u].vars) holders_[v].push_back(u);
    for (std::size_t e = 0; e < jg.edges.size(); ++e)
      for (VarId v : jg.edges[e].label) carriers_[v].push_back(e);
  }

  std::size_t var_count() const { return holders_.size(); }
  std::span<const std::size_t> holders(VarId v) const { return holders_[v]; }
  std::span<const std::size_t> carriers(VarId v) const { return carriers_[v]; }

  // Connectivity of v's clusters over v-carrying edges, optionally ignoring one edge.
  bool connected(VarId v, std::optional<std::size_t> skip = std::nullopt) const {
    const auto& hs = holders_[v];
    if (hs.size() <= 1) return true;
    std::vector<std::size_t> parent(jg_.nodes.size());
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (std::size_t e : carriers_[v]) {
      if (skip && *skip == e) continue;
      parent[find(jg_.edges[e].u)] = find(jg_.edges[e].v);
    }
    const std::size_t root = find(hs[0]);
    return std::all_of(hs.begin(), hs.end(), [&](std::size_t u) { return find(u) == root; });
  }

  void remove(VarId v, std::size_t e) {
    auto& c = carriers_[v];
    c.erase(std::find(c.begin(), c.end(), e));
  }

 private:
  const ArcLabeledJoinGraph& jg_;
  std::vector<std::vector<std::size_t>> holders_;
  std::vector<std::vector<std::size_t>> carriers_;
};

}  // namespace

bool arc_connected(const ArcLabeledJoinGraph& jg, VarId v) {
  LabelIndex idx(jg);
  if (v >= idx.var_count()) return true;
  return idx.connected(v);
}

std::vector<VarId> variables_with_cycles(const ArcLabeledJoinGraph& jg) {
  LabelIndex idx(jg);
  std::vector<VarId> out;
  std::vector<std::size_t> parent(jg.nodes.size());
  for (VarId v = 0; v < idx.var_count(); ++v) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t a) {
      while (parent[a] != a) a = parent[a] = parent[parent[a]];
      return a;
    };
    for (std::size_t e : idx.carriers(v)) {
      std::size_t a = find(jg.edges[e].u), b = find(jg.edges[e].v);
      if (a == b) {
        out.push_back(v);
        break;
      }
      parent[a] = b;
    }
  }
  return out;
}

bool is_label_minimal(const ArcLabeledJoinGraph& jg) {
  LabelIndex idx(jg);
  for (std::size_t e = 0; e < jg.edges.size(); ++e)
    for (VarId v : jg.edges[e].label)
      if (idx.connected(v, e)) return false;
  return true;
}

std::vector<std::string> validate_decomposition(const BeliefNetwork& net, const ArcLabeledJoinGraph& jg) {
  std::vector<std::string> out;
  const std::size_t n = net.size();
  std::vector<std::size_t> placed(n, 0);
  for (std::size_t u = 0; u < jg.nodes.size(); ++u) {
    const Cluster& c = jg.nodes[u];
    if (!std::is_sorted(c.vars.begin(), c.vars.end()) ||
        std::adjacent_find(c.vars.begin(), c.vars.end()) != c.vars.end())
      out.push_back("node " + std::to_string(u) + ": chi is not a sorted set");
    for (VarId v : c.vars)
      if (v >= n) out.push_back("node " + std::to_string(u) + ": unknown variable " + std::to_string(v));
    for (VarId f : c.cpts) {
      if (f >= n) {
        out.push_back("node " + std::to_string(u) + ": unknown CPT " + std::to_string(f));
        continue;
      }
      ++placed[f];
      if (!is_subset(net.cpt(f).scope().vars(), c.vars))
        out.push_back("node " + std::to_string(u) + ": scope of CPT " + std::to_string(f) + " not inside chi");
    }
  }
  for (VarId f = 0; f < n; ++f)
    if (placed[f] != 1)
      out.push_back("CPT " + std::to_string(f) + " placed in " + std::to_string(placed[f]) + " nodes");

  for (std::size_t e = 0; e < jg.edges.size(); ++e) {
    const JoinEdge& ed = jg.edges[e];
    if (ed.u >= jg.nodes.size() || ed.v >= jg.nodes.size() || ed.u == ed.v) {
      out.push_back("edge " + std::to_string(e) + ": bad endpoints");
      continue;
    }
    if (!std::is_sorted(ed.label.begin(), ed.label.end()) ||
        !is_subset(ed.label, set_intersection(jg.nodes[ed.u].vars, jg.nodes[ed.v].vars)))
      out.push_back("edge " + std::to_string(e) + ": label is not inside the separator");
  }
  if (!out.empty()) return out;

  LabelIndex idx(jg);
  for (VarId v = 0; v < idx.var_count(); ++v)
    if (!idx.connected(v)) out.push_back("variable " + std::to_string(v) + ": clusters not arc-connected");
  return out;
}

namespace {

// Greedy deletion over (edge, variable) pairs; pairs with late(edge, x) true are
// tried after all others, each group in canonical edge order, variables ascending.
template <class Late>
ArcLabeledJoinGraph minimize_labels(const ArcLabeledJoinGraph& jg, Late late) {
  ArcLabeledJoinGraph out = jg;
  struct Pair {
    bool late;
    std::size_t lo, hi, e;
    VarId x;
  };
  std::vector<Pair> pairs;
  for (std::size_t e = 0; e < out.edges.size(); ++e) {
    const auto& ed = out.edges[e];
    for (VarId x : ed.label)
      pairs.push_back(Pair{static_cast<bool>(late(ed, x)), std::min(ed.u, ed.v), std::max(ed.u, ed.v), e, x});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.late, a.lo, a.hi, a.e, a.x) < std::tie(b.late, b.lo, b.hi, b.e, b.x);
  });

  LabelIndex idx(out);
  std::vector<std::vector<char>> drop(out.edges.size());
  for (std::size_t e = 0; e < out.edges.size(); ++e) drop[e].assign(out.edges[e].label.size(), 0);
  for (const Pair& p : pairs) {
    if (!idx.connected(p.x, p.e)) continue;
    idx.remove(p.x, p.e);
    const auto& lab = out.edges[p.e].label;
    drop[p.e][static_cast<std::size_t>(std::lower_bound(lab.begin(), lab.end(), p.x) - lab.begin())] = 1;
  }
  for (std::size_t e = 0; e < out.edges.size(); ++e) {
    std::vector<VarId> kept;
    for (std::size_t j = 0; j < out.edges[e].label.size(); ++j)
      if (!drop[e][j]) kept.push_back(out.edges[e].label[j]);
    out.edges[e].label = std::move(kept);
  }
  std::erase_if(out.edges, [](const JoinEdge& e) { return e.label.empty(); });
  return out;
}

}  // namespace

ArcLabeledJoinGraph minimize_arc_labels(const ArcLabeledJoinGraph& jg) {
  return minimize_labels(jg, [](const JoinEdge&, VarId) { return false; });
}

ArcLabeledJoinGraph dual_join_graph(const BeliefNetwork& net) {
  ArcLabeledJoinGraph jg;
  for (VarId v = 0; v < net.size(); ++v) {
    auto s = net.cpt(v).scope().vars();
    jg.nodes.push_back(Cluster{std::vector<VarId>(s.begin(), s.end()), {v}, std::nullopt});
  }
  // Only pairs sharing a variable can be adjacent; enumerate through a variable index.
  std::vector<std::vector<std::size_t>> holders(net.size());
  for (std::size_t u = 0; u < jg.nodes.size(); ++u)
    for (VarId x : jg.nodes[u].vars) holders[x].push_back(u);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& h : holders)
    for (std::size_t a = 0; a < h.size(); ++a)
      for (std::size_t b = a + 1; b < h.size(); ++b) pairs.emplace_back(std::min(h[a], h[b]), std::max(h[a], h[b]));
  std::sort(pairs.begin(), pairs.end());
  pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  for (auto [u, v] : pairs)
    jg.edges.push_back(JoinEdge{u, v, set_intersection(jg.nodes[u].vars, jg.nodes[v].vars), EdgeKind::kOut});
  // Deleting x from edges away from x's own family first leaves, per variable,
  // the star from its family to its children's families: parent-child BP.
  return minimize_labels(jg, [](const JoinEdge& e, VarId x) { return e.u == x || e.v == x; });
}

bool arc_separates(const ArcLabeledJoinGraph& jg, std::span<const std::size_t> from, std::span<const std::size_t> to,
                   std::span<const std::size_t> removed) {
  std::vector<char> cut(jg.edges.size(), 0);
  for (std::size_t e : removed) cut.at(e) = 1;
  const auto inc = jg.incidence();
  std::vector<char> seen(jg.nodes.size(), 0);
  std::queue<std::size_t> q;
  for (std::size_t u : from) {
    if (!seen.at(u)) seen[u] = 1, q.push(u);
  }
  while (!q.empty()) {
    std::size_t u = q.front();
    q.pop();
    for (std::size_t e : inc[u]) {
      if (cut[e]) continue;
      std::size_t w = jg.edges[e].u == u ? jg.edges[e].v : jg.edges[e].u;
      if (!seen[w]) seen[w] = 1, q.push(w);
    }
  }
  return std::none_of(to.begin(), to.end(), [&](std::size_t u) { return seen.at(u) != 0; });
}

DecompositionStats decomposition_stats(const ArcLabeledJoinGraph& jg) {
  DecompositionStats s;
  s.cluster_count = jg.nodes.size();
  for (const auto& c : jg.nodes) s.max_cluster_size = std::max(s.max_cluster_size, c.vars.size());
  for (const auto& e : jg.edges) {
    s.max_label_size = std::max(s.max_label_size, e.label.size());
    s.separator_width =
        std::max(s.separator_width, set_intersection(jg.nodes[e.u].vars, jg.nodes[e.v].vars).size());
  }
  for (const auto& l : jg.incidence()) s.max_degree = std::max(s.max_degree, l.size());
  return s;
}

void dump_join_graph(const ArcLabeledJoinGraph& jg, std::ostream& out) {
  auto list = [&](std::span<const VarId> xs) {
    for (std::size_t k = 0; k < xs.size(); ++k) out << (k ? " " : "") << xs[k];
  };
  for (std::size_t u = 0; u < jg.nodes.size(); ++u) {
    out << "node " << u << " chi: ";
    list(jg.nodes[u].vars);
    out << " psi: ";
    list(jg.nodes[u].cpts);
    out << '\n';
  }
  for (const auto& e : jg.edges) {
    out << "edge " << e.u << ' ' << e.v << " theta: ";
    list(e.label);
    out << ' ' << (e.kind == EdgeKind::kIn ? "in" : "out") << '\n';
  }
}

}  // namespace ijgp
