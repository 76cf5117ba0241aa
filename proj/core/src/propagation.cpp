#include "ijgp/propagation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <tuple>

#include "ijgp/errors.hpp"

namespace ijgp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<VarId> minus_evidence(std::span<const VarId> vars, const Assignment& evidence) {
  std::vector<VarId> out;
  for (VarId v : vars)
    if (!evidence.contains(v)) out.push_back(v);
  return out;
}

bool intersects(std::span<const VarId> sorted_a, std::span<const VarId> sorted_b) {
  auto i = sorted_a.begin();
  auto j = sorted_b.begin();
  while (i != sorted_a.end() && j != sorted_b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      return true;
    }
  }
  return false;
}

std::vector<VarId> set_difference(std::span<const VarId> a, std::span<const VarId> b) {
  std::vector<VarId> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

// Evidence-reduced CPTs; scalar results are dropped once checked for mass.
std::vector<FactorPtr> reduced_functions(const BeliefNetwork& net, std::span<const VarId> cpts,
                                         const Assignment& evidence) {
  std::vector<FactorPtr> out;
  for (VarId f : cpts) {
    Factor r = reduce_evidence(net.cpt(f), evidence);
    if (r.scope().empty()) {
      if (!(r[0] > 0.0)) throw InconsistentEvidence("evidence contradicts CPT " + std::to_string(f));
      continue;
    }
    out.push_back(std::make_shared<const Factor>(std::move(r)));
  }
  return out;
}

// A finished message: scalar messages carry no information once checked for mass.
FactorPtr finish_message(Factor m, bool normalize_it) {
  if (!(m.sum() > 0.0)) throw InconsistentEvidence("message lost all probability mass");
  if (m.scope().empty()) return nullptr;
  if (normalize_it) m = normalize(std::move(m));
  return std::make_shared<const Factor>(std::move(m));
}

Factor belief_from(std::span<const FactorPtr> fns, VarId x, std::size_t card) {
  const VarId keep[] = {x};
  Factor b = sum_product(fns, keep);
  if (b.scope().empty()) b = Factor::ones(Scope({x}, {card}));
  return normalize(b);
}

void fill_beliefs_from_clusters(const BeliefNetwork& net, const Assignment& evidence,
                                std::span<const std::vector<VarId>> chi,
                                const std::function<std::vector<FactorPtr>(std::size_t)>& functions_of,
                                Posterior& post) {
  const std::size_t n = net.size();
  std::vector<std::size_t> home(n, chi.size());
  for (std::size_t u = chi.size(); u-- > 0;)
    for (VarId v : chi[u]) home[v] = u;
  std::vector<std::vector<VarId>> asked(chi.size());
  for (VarId v = 0; v < n; ++v) {
    if (evidence.contains(v)) continue;
    if (home[v] == chi.size()) throw ModelError("variable " + std::to_string(v) + " is in no cluster");
    asked[home[v]].push_back(v);
  }
  for (std::size_t u = 0; u < chi.size(); ++u) {
    if (asked[u].empty()) continue;
    auto fns = functions_of(u);
    Factor joint = sum_product(std::span<const FactorPtr>(fns), chi[u]);
    for (VarId v : asked[u]) {
      if (!joint.scope().contains(v)) {
        post.beliefs[v] = normalize(Factor::ones(Scope({v}, {net.card(v)})));
        continue;
      }
      std::vector<VarId> others;
      for (VarId w : joint.scope().vars())
        if (w != v) others.push_back(w);
      post.beliefs[v] = normalize(marginalize(joint, others));
    }
  }
}

}  // namespace

std::vector<DirectedEdge> build_schedule(const ArcLabeledJoinGraph& jg) {
  const std::size_t m = jg.edges.size();
  const auto inc = jg.incidence();
  // missing[u]: incoming messages into u not yet scheduled.
  std::vector<std::size_t> missing(jg.nodes.size());
  for (std::size_t u = 0; u < jg.nodes.size(); ++u) missing[u] = inc[u].size();
  std::vector<char> done(m, 0);
  std::vector<DirectedEdge> out;
  out.reserve(m);
  for (std::size_t step = 0; step < m; ++step) {
    std::tuple<std::size_t, std::size_t, std::size_t> best{std::numeric_limits<std::size_t>::max(), 0, 0};
    std::size_t best_edge = m;
    for (std::size_t e = 0; e < m; ++e) {
      if (done[e]) continue;
      const auto& ed = jg.edges[e];
      // The message v->u on this very edge is never counted for u->v.
      for (auto [from, to] : {std::pair{ed.u, ed.v}, std::pair{ed.v, ed.u}}) {
        std::tuple<std::size_t, std::size_t, std::size_t> key{missing[from] - 1, from, to};
        if (key < best) {
          best = key;
          best_edge = e;
        }
      }
    }
    done[best_edge] = 1;
    const std::size_t to = std::get<2>(best);
    --missing[to];
    out.push_back(DirectedEdge{std::get<1>(best), to, best_edge});
  }
  return out;
}

std::vector<DirectedEdge> iteration_schedule(const ArcLabeledJoinGraph& jg) {
  auto fwd = build_schedule(jg);
  std::vector<DirectedEdge> out = fwd;
  for (auto it = fwd.rbegin(); it != fwd.rend(); ++it) out.push_back(DirectedEdge{it->to, it->from, it->edge});
  return out;
}

std::vector<std::vector<FactorPtr>> partition_functions(std::vector<FactorPtr> fns, std::size_t i) {
  std::stable_sort(fns.begin(), fns.end(),
                   [](const FactorPtr& a, const FactorPtr& b) { return a->scope().size() > b->scope().size(); });
  std::vector<std::vector<FactorPtr>> parts;
  std::vector<Scope> scopes;
  for (auto& f : fns) {
    bool placed = false;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      Scope u = Scope::merge(scopes[k], f->scope());
      if (u.size() <= i) {
        scopes[k] = std::move(u);
        parts[k].push_back(f);
        placed = true;
        break;
      }
    }
    if (!placed) {
      scopes.push_back(f->scope());
      parts.push_back({f});
    }
  }
  return parts;
}

IjgpEngine::IjgpEngine(const BeliefNetwork& net, const Assignment& evidence, const ArcLabeledJoinGraph& jg,
                       EngineConfig cfg)
    : net_(&net), jg_(&jg), evidence_(evidence), cfg_(cfg) {
  if (cfg_.iterations < 1) throw ContractViolation("iterations must be at least 1");
  check_evidence(net, evidence);
  if (auto bad = validate_decomposition(net, jg); !bad.empty())
    throw ModelError("invalid decomposition: " + bad.front());

  for (const Cluster& c : jg.nodes) {
    chi_.push_back(minus_evidence(c.vars, evidence));
    psi_.push_back(reduced_functions(net, c.cpts, evidence));
  }
  for (const JoinEdge& e : jg.edges) {
    theta_.push_back(minus_evidence(e.label, evidence));
    elim_.push_back(set_difference(chi_[e.u], theta_.back()));
    elim_.push_back(set_difference(chi_[e.v], theta_.back()));
  }
  incident_ = jg.incidence();
  schedule_ = iteration_schedule(jg);
  messages_.resize(2 * jg.edges.size());
  plans_.resize(2 * jg.edges.size());
  recipes_.resize(2 * jg.edges.size());
  shape_version_.assign(2 * jg.edges.size(), 0);
}

std::vector<FactorPtr> IjgpEngine::cluster_functions(std::size_t u, std::optional<std::size_t> except_edge) const {
  std::vector<FactorPtr> fns = psi_[u];
  for (std::size_t e : incident_[u]) {
    if (except_edge && *except_edge == e) continue;
    const std::size_t other = jg_->edges[e].u == u ? jg_->edges[e].v : jg_->edges[e].u;
    const auto& msg = messages_[slot(other, e)];
    if (!msg) continue;
    fns.insert(fns.end(), msg->individual.begin(), msg->individual.end());
    if (msg->combined) fns.push_back(msg->combined);
  }
  return fns;
}

MessageBundle IjgpEngine::compute_message(std::size_t u, std::size_t v) const {
  std::optional<std::size_t> edge;
  for (std::size_t e : incident_.at(u)) {
    const auto& ed = jg_->edges[e];
    if ((ed.u == u && ed.v == v) || (ed.v == u && ed.u == v)) {
      edge = e;
      break;
    }
  }
  if (!edge) throw ContractViolation("no edge between clusters " + std::to_string(u) + " and " + std::to_string(v));

  const auto& theta = theta_[*edge];
  const auto& elim = elim_[2 * *edge + (jg_->edges[*edge].u == u ? 0 : 1)];
  MessageBundle out;
  out.from = u;
  out.to = v;
  std::vector<const Factor*>& combine_set = scratch_;
  combine_set.clear();
  auto take = [&](const FactorPtr& f) {
    if (intersects(f->scope().vars(), elim)) {
      combine_set.push_back(f.get());
    } else if (std::find(out.individual.begin(), out.individual.end(), f) == out.individual.end()) {
      out.individual.push_back(f);
    }
  };
  for (const auto& f : psi_[u]) take(f);
  for (std::size_t e : incident_[u]) {
    if (e == *edge) continue;
    const std::size_t other = jg_->edges[e].u == u ? jg_->edges[e].v : jg_->edges[e].u;
    const auto& msg = messages_[slot(other, e)];
    if (!msg) continue;
    for (const auto& f : msg->individual) take(f);
    if (msg->combined) take(msg->combined);
  }
  if (!combine_set.empty())
    out.combined =
        finish_message(sum_product(std::span<const Factor* const>(combine_set), theta), cfg_.normalize_messages);
  return out;
}

const FactorPtr& IjgpEngine::resolve(std::size_t u, const Source& src) const {
  switch (src.kind) {
    case Source::kPsi: return psi_[u][src.index];
    case Source::kIndividual: return messages_[src.slot]->individual[src.index];
    case Source::kCombined: break;
  }
  return messages_[src.slot]->combined;
}

bool IjgpEngine::recipe_current(const Recipe& r) const {
  if (!r.valid) return false;
  for (const auto& [s, version] : r.deps)
    if (shape_version_[s] != version) return false;
  return true;
}

double IjgpEngine::update(const DirectedEdge& d) {
  const std::size_t u = d.from;
  const std::size_t my_slot = slot(u, d.edge);
  std::vector<const Factor*>& combine_set = scratch_;
  combine_set.clear();
  auto& msg = messages_[my_slot];
  if (!msg) msg = MessageBundle{d.from, d.to, {}, nullptr};
  Recipe& recipe = recipes_[my_slot];
  const bool cached = recipe_current(recipe);

  if (cached) {
    // Input shapes are unchanged, so the split into combined and forwarded
    // functions is too; only the values behind the pointers moved.
    for (const Source& src : recipe.combine) combine_set.push_back(resolve(u, src).get());
    for (std::size_t k = 0; k < recipe.individual.size(); ++k) {
      const FactorPtr& f = resolve(u, recipe.individual[k]);
      if (msg->individual[k] != f) msg->individual[k] = f;
    }
  } else {
    const auto& elim = elim_[my_slot];
    std::vector<const FactorPtr*>& individual = individual_scratch_;
    individual.clear();
    recipe = Recipe{};
    bool duplicate = false;
    auto take = [&](const FactorPtr& f, Source src) {
      if (intersects(f->scope().vars(), elim)) {
        combine_set.push_back(f.get());
        recipe.combine.push_back(src);
      } else if (std::none_of(individual.begin(), individual.end(),
                              [&](const FactorPtr* g) { return g->get() == f.get(); })) {
        individual.push_back(&f);
        recipe.individual.push_back(src);
      } else {
        duplicate = true;
      }
    };
    for (std::size_t k = 0; k < psi_[u].size(); ++k) take(psi_[u][k], Source{Source::kPsi, 0, k});
    for (std::size_t e : incident_[u]) {
      if (e == d.edge) continue;
      const std::size_t other = jg_->edges[e].u == u ? jg_->edges[e].v : jg_->edges[e].u;
      const std::size_t in = slot(other, e);
      recipe.deps.emplace_back(in, shape_version_[in]);
      const auto& m = messages_[in];
      if (!m) continue;
      for (std::size_t k = 0; k < m->individual.size(); ++k)
        take(m->individual[k], Source{Source::kIndividual, in, k});
      if (m->combined) take(m->combined, Source{Source::kCombined, in, 0});
    }
    // Pointer-level deduplication depends on identities, not shapes; never cache it.
    recipe.valid = !duplicate;

    bool reshaped = msg->individual.size() != individual.size();
    for (std::size_t k = 0; !reshaped && k < individual.size(); ++k)
      reshaped = !((*individual[k])->scope() == msg->individual[k]->scope());
    msg->individual.resize(individual.size());
    for (std::size_t k = 0; k < individual.size(); ++k) msg->individual[k] = *individual[k];
    if (reshaped) ++shape_version_[my_slot];
  }

  double change = 0.0;
  auto drop_combined = [&] {
    if (msg->combined) {
      change = std::numeric_limits<double>::infinity();
      msg->combined.reset();
      ++shape_version_[my_slot];
    }
    return change;
  };
  if (combine_set.empty()) return drop_combined();

  auto& plan = plans_[my_slot];
  if (!plan || (!cached && !plan->matches(combine_set))) plan.emplace(combine_set, theta_[d.edge]);
  auto& buf = table_scratch_;
  buf.resize(plan->result_scope().table_size());
  plan->run(combine_set, buf);
  double z = 0.0;
  for (double x : buf) z += x;
  if (!(z > 0.0)) throw InconsistentEvidence("message lost all probability mass");
  if (plan->result_scope().empty()) return drop_combined();
  if (cfg_.normalize_messages)
    for (double& x : buf) x /= z;

  const FactorPtr& old = msg->combined;
  if (old && old->scope() == plan->result_scope()) {
    for (std::size_t k = 0; k < buf.size(); ++k) change = std::max(change, std::abs((*old)[k] - buf[k]));
    if (old.use_count() == 1) {
      // Nobody else holds the previous message, so it can be overwritten.
      // Messages are created non-const below, which makes this write legal.
      auto& target = const_cast<Factor&>(*old);
      std::copy(buf.begin(), buf.end(), target.table_.begin());
      target.scope_ = plan->result_scope();  // share the plan's copy so later scope checks are pointer compares
      return change;
    }
  } else {
    change = std::numeric_limits<double>::infinity();
    ++shape_version_[my_slot];
  }
  msg->combined = std::make_shared<Factor>(Factor(Factor::Unchecked{}, plan->result_scope(), buf));
  return change;
}

double IjgpEngine::sweep() {
  double change = 0.0;
  for (const DirectedEdge& d : schedule_) {
    change = std::max(change, update(d));
    ++messages_computed_;
  }
  ++iterations_done_;
  return change;
}

BeliefResult IjgpEngine::run() {
  const auto t0 = Clock::now();
  BeliefResult r;
  for (std::size_t it = 0; it < cfg_.iterations; ++it) {
    const double change = sweep();
    ++r.iterations_run;
    if (cfg_.convergence_epsilon && change < *cfg_.convergence_epsilon) {
      r.converged = true;
      break;
    }
    if (cfg_.time_limit_s && seconds_since(t0) > *cfg_.time_limit_s && it + 1 < cfg_.iterations) {
      r.timed_out = true;
      break;
    }
  }
  r.posterior = beliefs();
  r.wall_time_s = seconds_since(t0);
  return r;
}

Factor IjgpEngine::cluster_belief(std::size_t u, VarId x) const {
  if (evidence_.contains(x) || !std::binary_search(chi_.at(u).begin(), chi_[u].end(), x))
    throw ContractViolation("variable " + std::to_string(x) + " is not an unobserved member of cluster " +
                            std::to_string(u));
  auto fns = cluster_functions(u, std::nullopt);
  return belief_from(fns, x, net_->card(x));
}

Posterior IjgpEngine::beliefs() const {
  Posterior post = make_posterior_shell(*net_, evidence_);
  fill_beliefs_from_clusters(*net_, evidence_, chi_,
                             [this](std::size_t u) { return cluster_functions(u, std::nullopt); }, post);
  return post;
}

BeliefResult ijgp_run(const BeliefNetwork& net, const Assignment& evidence, const ArcLabeledJoinGraph& jg,
                      const EngineConfig& cfg) {
  const auto t0 = Clock::now();
  IjgpEngine engine(net, evidence, jg, cfg);
  BeliefResult r = engine.run();
  r.wall_time_s = seconds_since(t0);
  return r;
}

BeliefResult ibp_run(const BeliefNetwork& net, const Assignment& evidence, const EngineConfig& cfg) {
  const ArcLabeledJoinGraph dual = dual_join_graph(net);
  return ijgp_run(net, evidence, dual, cfg);
}

BeliefResult mc_run(const BeliefNetwork& net, const Assignment& evidence, const EliminationOrdering& ord,
                    std::size_t i) {
  const ArcLabeledJoinGraph jt = build_join_tree(net, ord);
  return mc_run(net, evidence, jt, i);
}

BeliefResult mc_run(const BeliefNetwork& net, const Assignment& evidence, const ArcLabeledJoinGraph& jt,
                    std::size_t i) {
  if (i < 1) throw ContractViolation("i-bound must be at least 1");
  const auto t0 = Clock::now();
  check_evidence(net, evidence);
  if (auto bad = validate_decomposition(net, jt); !bad.empty())
    throw ModelError("invalid join-tree: " + bad.front());

  std::vector<std::vector<VarId>> chi, theta;
  std::vector<std::vector<FactorPtr>> psi;
  for (const Cluster& c : jt.nodes) {
    chi.push_back(minus_evidence(c.vars, evidence));
    psi.push_back(reduced_functions(net, c.cpts, evidence));
  }
  for (const JoinEdge& e : jt.edges) theta.push_back(minus_evidence(e.label, evidence));
  const auto inc = jt.incidence();
  std::vector<std::vector<FactorPtr>> messages(2 * jt.edges.size());
  auto slot = [&](std::size_t from, std::size_t e) { return 2 * e + (jt.edges[e].u == from ? 0 : 1); };
  auto functions_of = [&](std::size_t u, std::optional<std::size_t> except_edge) {
    std::vector<FactorPtr> fns = psi[u];
    for (std::size_t e : inc[u]) {
      if (except_edge && *except_edge == e) continue;
      const std::size_t other = jt.edges[e].u == u ? jt.edges[e].v : jt.edges[e].u;
      const auto& msg = messages[slot(other, e)];
      fns.insert(fns.end(), msg.begin(), msg.end());
    }
    return fns;
  };

  for (const DirectedEdge& d : iteration_schedule(jt)) {
    const auto elim = set_difference(chi[d.from], theta[d.edge]);
    std::vector<FactorPtr> out;
    for (auto& part : partition_functions(functions_of(d.from, d.edge), i)) {
      std::vector<VarId> keep;
      for (const auto& f : part)
        for (VarId v : f->scope().vars())
          if (!std::binary_search(elim.begin(), elim.end(), v)) keep.push_back(v);
      std::sort(keep.begin(), keep.end());
      keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
      if (auto m = finish_message(sum_product(std::span<const FactorPtr>(part), keep), true)) out.push_back(std::move(m));
    }
    messages[slot(d.from, d.edge)] = std::move(out);
  }

  BeliefResult r;
  r.posterior = make_posterior_shell(net, evidence);
  fill_beliefs_from_clusters(net, evidence, chi, [&](std::size_t u) { return functions_of(u, std::nullopt); },
                             r.posterior);
  r.iterations_run = 1;
  r.wall_time_s = seconds_since(t0);
  return r;
}

Posterior bucket_elimination_posterior(const BeliefNetwork& net, const Assignment& evidence,
                                       const EliminationOrdering& ord, std::size_t max_table_entries) {
  check_evidence(net, evidence);
  if (ord.size() != net.size()) throw ContractViolation("ordering size differs from network size");
  const std::size_t n = net.size();
  auto highest = [&](std::span<const VarId> scope) {
    return *std::max_element(scope.begin(), scope.end(),
                             [&](VarId a, VarId b) { return ord.position(a) < ord.position(b); });
  };

  std::vector<std::vector<FactorPtr>> bucket(n);
  {
    std::vector<VarId> all(n);
    for (VarId v = 0; v < n; ++v) all[v] = v;
    for (auto& f : reduced_functions(net, all, evidence)) bucket[highest(f->scope().vars())].push_back(f);
  }

  struct ChildMessage {
    VarId child;
    FactorPtr lambda;
  };
  std::vector<std::vector<ChildMessage>> from_children(n);

  for (std::size_t p = n; p-- > 0;) {
    const VarId x = ord.order()[p];
    if (evidence.contains(x)) continue;
    std::vector<FactorPtr> fns = bucket[x];
    for (const auto& c : from_children[x]) fns.push_back(c.lambda);
    std::vector<const Factor*> raw;
    for (const auto& f : fns) raw.push_back(f.get());
    const Scope all = scope_union(raw);
    if (all.table_size() > max_table_entries)
      throw GuardExceeded("bucket of variable " + std::to_string(x) + " needs " + std::to_string(all.table_size()) +
                          " table entries");
    const Scope rest = all.without(std::span<const VarId>(&x, 1));
    FactorPtr lambda = finish_message(sum_product(std::span<const FactorPtr>(fns), rest.vars()), true);
    if (lambda) from_children[highest(lambda->scope().vars())].push_back(ChildMessage{x, lambda});
  }

  Posterior post = make_posterior_shell(net, evidence);
  std::vector<FactorPtr> pi(n);
  for (std::size_t p = 0; p < n; ++p) {
    const VarId x = ord.order()[p];
    if (evidence.contains(x)) continue;
    std::vector<FactorPtr> fns = bucket[x];
    for (const auto& c : from_children[x]) fns.push_back(c.lambda);
    if (pi[x]) fns.push_back(pi[x]);
    post.beliefs[x] = belief_from(fns, x, net.card(x));
    for (const auto& c : from_children[x]) {
      std::vector<FactorPtr> others;
      for (const auto& f : fns)
        if (f != c.lambda) others.push_back(f);
      pi[c.child] = finish_message(sum_product(std::span<const FactorPtr>(others), c.lambda->scope().vars()), true);
    }
  }
  return post;
}

}  // namespace ijgp
