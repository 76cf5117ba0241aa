#include "ijgp/factor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ijgp/errors.hpp"

namespace ijgp {

Scope Scope::from_sorted(std::vector<VarId> vars, std::vector<std::size_t> cards) {
  Scope out;
  if (vars.empty()) return out;
  auto d = std::make_shared<Data>();
  d->table_size = 1;
  for (std::size_t c : cards) d->table_size *= c;
  d->vars = std::move(vars);
  d->cards = std::move(cards);
  out.d_ = std::move(d);
  return out;
}

Scope::Scope(std::vector<VarId> vars, std::vector<std::size_t> cards) {
  if (vars.size() != cards.size()) throw ModelError("scope: variable/cardinality count mismatch");
  std::vector<std::size_t> perm(vars.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) { return vars[a] < vars[b]; });
  std::vector<VarId> sv;
  std::vector<std::size_t> sc;
  sv.reserve(vars.size());
  sc.reserve(vars.size());
  for (std::size_t k : perm) {
    if (!sv.empty() && sv.back() == vars[k])
      throw ModelError("scope: duplicate variable " + std::to_string(vars[k]));
    if (cards[k] == 0) throw ModelError("scope: zero cardinality for variable " + std::to_string(vars[k]));
    sv.push_back(vars[k]);
    sc.push_back(cards[k]);
  }
  *this = from_sorted(std::move(sv), std::move(sc));
}

bool Scope::contains(VarId v) const noexcept {
  const auto vs = vars();
  return std::binary_search(vs.begin(), vs.end(), v);
}

std::size_t Scope::position(VarId v) const noexcept {
  const auto vs = vars();
  auto it = std::lower_bound(vs.begin(), vs.end(), v);
  if (it == vs.end() || *it != v) return vs.size();
  return static_cast<std::size_t>(it - vs.begin());
}

Scope Scope::merge(const Scope& a, const Scope& b) {
  if (b.empty()) return a;
  if (a.empty()) return b;
  std::vector<VarId> vars;
  std::vector<std::size_t> cards;
  vars.reserve(a.size() + b.size());
  cards.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a.var(i) < b.var(j))) {
      vars.push_back(a.var(i));
      cards.push_back(a.card(i));
      ++i;
    } else if (i == a.size() || b.var(j) < a.var(i)) {
      vars.push_back(b.var(j));
      cards.push_back(b.card(j));
      ++j;
    } else {
      if (a.card(i) != b.card(j)) throw ModelError("cardinality mismatch for variable " + std::to_string(a.var(i)));
      vars.push_back(a.var(i));
      cards.push_back(a.card(i));
      ++i;
      ++j;
    }
  }
  return from_sorted(std::move(vars), std::move(cards));
}

Scope Scope::without(std::span<const VarId> drop) const {
  std::vector<VarId> vars;
  std::vector<std::size_t> cards;
  for (std::size_t k = 0; k < size(); ++k) {
    if (std::find(drop.begin(), drop.end(), var(k)) != drop.end()) continue;
    vars.push_back(var(k));
    cards.push_back(card(k));
  }
  return from_sorted(std::move(vars), std::move(cards));
}

Scope Scope::restricted_to(std::span<const VarId> keep) const {
  std::vector<VarId> vars;
  std::vector<std::size_t> cards;
  for (std::size_t k = 0; k < size(); ++k) {
    if (std::find(keep.begin(), keep.end(), var(k)) == keep.end()) continue;
    vars.push_back(var(k));
    cards.push_back(card(k));
  }
  return from_sorted(std::move(vars), std::move(cards));
}

namespace {

void check_entries(std::span<const double> table) {
  for (double x : table) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw ModelError("factor entries must be finite and non-negative");
  }
}

}  // namespace

Factor::Factor() : table_{1.0} {}

Factor::Factor(Scope scope, std::vector<double> table) : scope_(std::move(scope)), table_(std::move(table)) {
  if (table_.size() != scope_.table_size())
    throw ModelError("factor table has " + std::to_string(table_.size()) + " entries, scope needs " +
                     std::to_string(scope_.table_size()));
  check_entries(table_);
}

Factor Factor::scalar(double value) { return Factor(Scope{}, {value}); }

Factor Factor::ones(Scope scope) {
  std::vector<double> t(scope.table_size(), 1.0);
  return Factor(Unchecked{}, std::move(scope), std::move(t));
}

Factor Factor::from_ordered(std::span<const VarId> vars, std::span<const std::size_t> cards,
                            std::vector<double> table) {
  Scope scope(std::vector<VarId>(vars.begin(), vars.end()), std::vector<std::size_t>(cards.begin(), cards.end()));
  if (table.size() != scope.table_size())
    throw ModelError("factor table has " + std::to_string(table.size()) + " entries, scope needs " +
                     std::to_string(scope.table_size()));
  // Walk the listed order (last fastest) and scatter into canonical positions.
  std::vector<std::size_t> canon_stride(vars.size());
  {
    std::vector<std::size_t> strides(scope.size());
    std::size_t s = 1;
    for (std::size_t k = scope.size(); k-- > 0;) {
      strides[k] = s;
      s *= scope.card(k);
    }
    for (std::size_t k = 0; k < vars.size(); ++k) canon_stride[k] = strides[scope.position(vars[k])];
  }
  std::vector<double> out(table.size());
  std::vector<std::size_t> counter(vars.size(), 0);
  std::size_t idx = 0;
  for (std::size_t flat = 0; flat < table.size(); ++flat) {
    out[idx] = table[flat];
    for (std::size_t k = vars.size(); k-- > 0;) {
      idx += canon_stride[k];
      if (++counter[k] < cards[k]) break;
      idx -= canon_stride[k] * cards[k];
      counter[k] = 0;
    }
  }
  return Factor(std::move(scope), std::move(out));
}

std::vector<double> Factor::table_in_order(std::span<const VarId> order) const {
  if (order.size() != scope_.size()) throw ContractViolation("table_in_order: order is not a permutation of the scope");
  std::vector<std::size_t> canon_stride(order.size()), cards(order.size());
  std::vector<std::size_t> strides(scope_.size());
  std::size_t s = 1;
  for (std::size_t k = scope_.size(); k-- > 0;) {
    strides[k] = s;
    s *= scope_.card(k);
  }
  for (std::size_t k = 0; k < order.size(); ++k) {
    std::size_t p = scope_.position(order[k]);
    if (p == scope_.size()) throw ContractViolation("table_in_order: variable not in scope");
    canon_stride[k] = strides[p];
    cards[k] = scope_.card(p);
  }
  std::vector<double> out(table_.size());
  std::vector<std::size_t> counter(order.size(), 0);
  std::size_t idx = 0;
  for (std::size_t flat = 0; flat < table_.size(); ++flat) {
    out[flat] = table_[idx];
    for (std::size_t k = order.size(); k-- > 0;) {
      idx += canon_stride[k];
      if (++counter[k] < cards[k]) break;
      idx -= canon_stride[k] * cards[k];
      counter[k] = 0;
    }
  }
  return out;
}

double Factor::at(const Assignment& a) const {
  std::size_t idx = 0;
  for (std::size_t k = 0; k < scope_.size(); ++k) {
    auto it = a.find(scope_.var(k));
    if (it == a.end()) throw ContractViolation("Factor::at: assignment misses variable " + std::to_string(scope_.var(k)));
    if (it->second >= scope_.card(k)) throw ContractViolation("Factor::at: value out of range");
    idx = idx * scope_.card(k) + it->second;
  }
  return table_[idx];
}

double Factor::sum() const noexcept { return std::accumulate(table_.begin(), table_.end(), 0.0); }

Scope scope_union(std::span<const Factor* const> factors) {
  Scope u;
  for (const Factor* f : factors) u = Scope::merge(u, f->scope());
  return u;
}

SumProductPlan::SumProductPlan(std::span<const Factor* const> factors, std::span<const VarId> keep) {
  std::vector<std::pair<VarId, std::size_t>> pool;
  inputs_.reserve(factors.size());
  for (const Factor* f : factors) {
    const Scope& s = f->scope();
    inputs_.push_back(s);
    for (std::size_t k = 0; k < s.size(); ++k) pool.emplace_back(s.var(k), s.card(k));
  }
  std::sort(pool.begin(), pool.end());
  std::vector<VarId> vars;
  for (const auto& [v, c] : pool) {
    if (!vars.empty() && vars.back() == v) {
      if (cards_.back() != c) throw ModelError("variable " + std::to_string(v) + " has two cardinalities");
      continue;
    }
    vars.push_back(v);
    cards_.push_back(c);
  }
  const std::size_t n = vars.size();
  const std::size_t m = factors.size();

  std::vector<VarId> rvars;
  std::vector<std::size_t> rcards;
  for (std::size_t k = 0; k < n; ++k) {
    if (std::find(keep.begin(), keep.end(), vars[k]) != keep.end()) {
      rvars.push_back(vars[k]);
      rcards.push_back(cards_[k]);
    }
  }
  result_ = Scope::from_sorted(std::move(rvars), std::move(rcards));

  const std::size_t w = m + 1;
  strides_.assign(n * w, 0);
  auto fill = [&](const Scope& s, std::size_t j) {
    std::size_t stride = 1, k = n;
    for (std::size_t q = s.size(); q-- > 0;) {
      while (vars[--k] != s.var(q)) {
      }
      strides_[k * w + j] = stride;
      stride *= s.card(q);
    }
  };
  for (std::size_t j = 0; j < m; ++j) fill(inputs_[j], j);
  fill(result_, m);
  for (std::size_t c : cards_) total_ *= c;
}

bool SumProductPlan::matches(std::span<const Factor* const> factors) const noexcept {
  if (factors.size() != inputs_.size()) return false;
  for (std::size_t j = 0; j < factors.size(); ++j)
    if (!(factors[j]->scope() == inputs_[j])) return false;
  return true;
}

void SumProductPlan::run(std::span<const Factor* const> factors, std::span<double> out) const {
  std::fill(out.begin(), out.end(), 0.0);
  const std::size_t n = cards_.size();
  const std::size_t m = factors.size();
  if (n == 0) {
    double p = 1.0;
    for (const Factor* f : factors) p *= (*f)[0];
    out[0] = p;
    return;
  }
  // Small fixed buffers cover every realistic cluster; larger ones fall back to the heap.
  constexpr std::size_t kInline = 64;
  std::size_t ix_buf[kInline + 1], counter_buf[kInline];
  const double* tab_buf[kInline];
  std::vector<std::size_t> ix_heap, counter_heap;
  std::vector<const double*> tab_heap;
  std::size_t* ix = ix_buf;
  std::size_t* counter = counter_buf;
  const double** tab = tab_buf;
  if (m > kInline || n > kInline) {
    ix_heap.resize(m + 1);
    counter_heap.resize(n);
    tab_heap.resize(m);
    ix = ix_heap.data();
    counter = counter_heap.data();
    tab = tab_heap.data();
  }
  for (std::size_t j = 0; j <= m; ++j) ix[j] = 0;
  for (std::size_t k = 0; k < n; ++k) counter[k] = 0;
  for (std::size_t j = 0; j < m; ++j) tab[j] = factors[j]->table().data();

  const std::size_t w = m + 1;
  const std::size_t* strides = strides_.data();
  const std::size_t* cards = cards_.data();
  double* res = out.data();
  for (std::size_t flat = 0; flat < total_; ++flat) {
    double p = 1.0;
    for (std::size_t j = 0; j < m; ++j) p *= tab[j][ix[j]];
    res[ix[m]] += p;
    for (std::size_t k = n; k-- > 0;) {
      const std::size_t* st = strides + k * w;
      if (++counter[k] < cards[k]) {
        for (std::size_t j = 0; j <= m; ++j) ix[j] += st[j];
        break;
      }
      const std::size_t back = cards[k] - 1;
      for (std::size_t j = 0; j <= m; ++j) ix[j] -= st[j] * back;
      counter[k] = 0;
    }
  }
}

Factor sum_product(std::span<const Factor* const> factors, std::span<const VarId> keep) {
  const SumProductPlan plan(factors, keep);
  std::vector<double> result(plan.result_scope().table_size());
  plan.run(factors, result);
  return Factor(Factor::Unchecked{}, plan.result_scope(), std::move(result));
}

Factor sum_product(std::span<const FactorPtr> factors, std::span<const VarId> keep) {
  std::vector<const Factor*> raw;
  raw.reserve(factors.size());
  for (const auto& f : factors) raw.push_back(f.get());
  return sum_product(std::span<const Factor* const>(raw), keep);
}

Factor combine(const Factor& f, const Factor& g) {
  const Factor* fs[] = {&f, &g};
  Scope u = Scope::merge(f.scope(), g.scope());
  return sum_product(fs, u.vars());
}

Factor marginalize(const Factor& f, std::span<const VarId> elim) {
  for (VarId v : elim) {
    if (!f.scope().contains(v))
      throw ContractViolation("marginalize: variable " + std::to_string(v) + " not in scope");
  }
  if (elim.empty()) return f;
  Scope keep = f.scope().without(elim);
  const Factor* fs[] = {&f};
  return sum_product(fs, keep.vars());
}

Factor reduce_evidence(const Factor& f, const Assignment& evidence) {
  const Scope& s = f.scope();
  std::vector<VarId> observed;
  std::size_t base = 0;
  std::vector<std::size_t> strides(s.size());
  {
    std::size_t st = 1;
    for (std::size_t k = s.size(); k-- > 0;) {
      strides[k] = st;
      st *= s.card(k);
    }
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    auto it = evidence.find(s.var(k));
    if (it == evidence.end()) continue;
    if (it->second >= s.card(k))
      throw ContractViolation("evidence value out of range for variable " + std::to_string(s.var(k)));
    observed.push_back(s.var(k));
    base += it->second * strides[k];
  }
  if (observed.empty()) return f;

  Scope out_scope = s.without(observed);
  std::vector<std::size_t> src_stride;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (!evidence.contains(s.var(k))) src_stride.push_back(strides[k]);
  }
  std::vector<double> out(out_scope.table_size());
  std::vector<std::size_t> counter(out_scope.size(), 0);
  std::size_t idx = base;
  for (std::size_t flat = 0; flat < out.size(); ++flat) {
    out[flat] = f[idx];
    for (std::size_t k = out_scope.size(); k-- > 0;) {
      idx += src_stride[k];
      if (++counter[k] < out_scope.card(k)) break;
      idx -= src_stride[k] * out_scope.card(k);
      counter[k] = 0;
    }
  }
  return Factor(Factor::Unchecked{}, std::move(out_scope), std::move(out));
}

Factor normalize(const Factor& f) {
  const double z = f.sum();
  if (!(z > 0.0)) throw InconsistentEvidence("cannot normalize a factor with zero mass");
  std::vector<double> t(f.table().begin(), f.table().end());
  for (double& x : t) x /= z;
  return Factor(Factor::Unchecked{}, f.scope(), std::move(t));
}

Factor normalize(Factor&& f) {
  const double z = f.sum();
  if (!(z > 0.0)) throw InconsistentEvidence("cannot normalize a factor with zero mass");
  for (double& x : f.table_) x /= z;
  return std::move(f);
}

Factor scale(const Factor& f, double by) {
  if (!(by >= 0.0) || !std::isfinite(by)) throw ContractViolation("scale: factor must be finite and non-negative");
  std::vector<double> t(f.table().begin(), f.table().end());
  for (double& x : t) x *= by;
  return Factor(Factor::Unchecked{}, f.scope(), std::move(t));
}

Value argmax_value(const Factor& f) {
  if (f.scope().size() != 1) throw ContractViolation("argmax_value needs a single-variable factor");
  auto t = f.table();
  return static_cast<Value>(std::max_element(t.begin(), t.end()) - t.begin());
}

double max_abs_diff(const Factor& a, const Factor& b) {
  if (!(a.scope() == b.scope())) throw ContractViolation("max_abs_diff: scopes differ");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

}  // namespace ijgp
