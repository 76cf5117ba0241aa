#pragma once

// Dense tabular factors over discrete variables.
//
// Tables are laid out row-major over the canonical (ascending) scope, with the
// last variable changing fastest. All operations are pure and return new values.

#include <cstddef>
#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

namespace ijgp {

using VarId = std::uint32_t;
using Value = std::size_t;

// Partial assignment of values to variables (evidence, configurations).
using Assignment = std::map<VarId, Value>;

// Immutable; copies share one representation.
class Scope {
 public:
  Scope() = default;
  // Accepts variables in any order and sorts them; duplicates are a ModelError.
  Scope(std::vector<VarId> vars, std::vector<std::size_t> cards);

  std::size_t size() const noexcept { return d_ ? d_->vars.size() : 0; }
  bool empty() const noexcept { return size() == 0; }
  std::span<const VarId> vars() const noexcept { return d_ ? std::span<const VarId>(d_->vars) : std::span<const VarId>(); }
  std::span<const std::size_t> cards() const noexcept {
    return d_ ? std::span<const std::size_t>(d_->cards) : std::span<const std::size_t>();
  }
  VarId var(std::size_t k) const { return d_->vars[k]; }
  std::size_t card(std::size_t k) const { return d_->cards[k]; }

  bool contains(VarId v) const noexcept;
  // Position of v in the scope, or size() if absent.
  std::size_t position(VarId v) const noexcept;
  std::size_t table_size() const noexcept { return d_ ? d_->table_size : 1; }

  // Union in canonical order; a shared variable with two cardinalities is a ModelError.
  static Scope merge(const Scope& a, const Scope& b);
  Scope without(std::span<const VarId> drop) const;
  Scope restricted_to(std::span<const VarId> keep) const;

  friend bool operator==(const Scope& a, const Scope& b) noexcept {
    if (a.d_ == b.d_) return true;
    if (a.size() != b.size()) return false;
    return std::equal(a.vars().begin(), a.vars().end(), b.vars().begin()) &&
           std::equal(a.cards().begin(), a.cards().end(), b.cards().begin());
  }

 private:
  friend class SumProductPlan;
  struct Data {
    std::vector<VarId> vars;
    std::vector<std::size_t> cards;
    std::size_t table_size = 1;
  };
  // Caller guarantees ascending, duplicate-free variables and nonzero cards.
  static Scope from_sorted(std::vector<VarId> vars, std::vector<std::size_t> cards);

  std::shared_ptr<const Data> d_;
};

class Factor {
 public:
  // Scalar 1.
  Factor();
  // Table must match the scope's table size; entries must be finite and >= 0.
  Factor(Scope scope, std::vector<double> table);

  static Factor scalar(double value);
  static Factor ones(Scope scope);
  // Table given with `vars` in the listed (not necessarily sorted) order, last fastest.
  static Factor from_ordered(std::span<const VarId> vars, std::span<const std::size_t> cards,
                             std::vector<double> table);

  const Scope& scope() const noexcept { return scope_; }
  std::span<const double> table() const noexcept { return table_; }
  std::size_t size() const noexcept { return table_.size(); }
  double operator[](std::size_t k) const { return table_[k]; }
  // Entry for a full assignment of the scope (extra variables are ignored).
  double at(const Assignment& a) const;
  double sum() const noexcept;

  // Table re-linearized with the scope listed in `order` (a permutation of the scope).
  std::vector<double> table_in_order(std::span<const VarId> order) const;

  friend bool operator==(const Factor&, const Factor&) = default;

 private:
  struct Unchecked {};
  Factor(Unchecked, Scope scope, std::vector<double> table)
      : scope_(std::move(scope)), table_(std::move(table)) {}

  friend Factor sum_product(std::span<const Factor* const>, std::span<const VarId>);
  friend Factor reduce_evidence(const Factor&, const Assignment&);
  friend Factor normalize(const Factor&);
  friend Factor normalize(Factor&&);
  friend Factor scale(const Factor&, double);
  friend class IjgpEngine;

  Scope scope_;
  std::vector<double> table_;
};

using FactorPtr = std::shared_ptr<const Factor>;

// Pointwise product over the union scope.
Factor combine(const Factor& f, const Factor& g);
// Sum over all completions of `elim` (elim must be a subset of f's scope).
Factor marginalize(const Factor& f, std::span<const VarId> elim);
// Slice consistent with evidence; evidenced variables leave the scope.
Factor reduce_evidence(const Factor& f, const Assignment& evidence);
// Rescale to sum 1; all-zero tables raise InconsistentEvidence.
Factor normalize(const Factor& f);
Factor normalize(Factor&& f);
Factor scale(const Factor& f, double by);
// Index of the largest entry of a single-variable factor, lowest index on ties.
Value argmax_value(const Factor& f);

// Sum over (union scope - keep) of the product of `factors`, without
// materializing the product table. The result scope is union ∩ keep.
Factor sum_product(std::span<const Factor* const> factors, std::span<const VarId> keep);
Factor sum_product(std::span<const FactorPtr> factors, std::span<const VarId> keep);

// Precomputed strides for repeated sum-product over factors with fixed scopes.
class SumProductPlan {
 public:
  SumProductPlan(std::span<const Factor* const> factors, std::span<const VarId> keep);

  // True iff `factors` have exactly the scopes this plan was built for.
  bool matches(std::span<const Factor* const> factors) const noexcept;
  const Scope& result_scope() const noexcept { return result_; }
  // Overwrites `out` (result_scope().table_size() entries).
  void run(std::span<const Factor* const> factors, std::span<double> out) const;

 private:
  std::vector<Scope> inputs_;
  Scope result_;
  std::vector<std::size_t> cards_;
  std::vector<std::size_t> strides_;  // [k * (m + 1) + j]; slot m is the result
  std::size_t total_ = 1;
};

// Union of the scopes of `factors`.
Scope scope_union(std::span<const Factor* const> factors);

// Largest absolute entrywise difference; scopes must be equal.
double max_abs_diff(const Factor& a, const Factor& b);

}  // namespace ijgp
