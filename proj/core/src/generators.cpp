#include "ijgp/generators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "ijgp/errors.hpp"
#include "rng.hpp"

namespace ijgp {

namespace {

using detail::Rng;

// Uniform(0,1) entries, each row (child fastest) normalized to 1.
std::vector<double> random_rows(Rng& rng, std::size_t rows, std::size_t k) {
  std::vector<double> t(rows * k);
  for (std::size_t r = 0; r < rows; ++r) {
    double z = 0.0;
    for (std::size_t x = 0; x < k; ++x) z += t[r * k + x] = rng.uniform();
    if (z == 0.0) {
      for (std::size_t x = 0; x < k; ++x) t[r * k + x] = 1.0 / static_cast<double>(k);
    } else {
      for (std::size_t x = 0; x < k; ++x) t[r * k + x] /= z;
    }
  }
  return t;
}

BeliefNetwork random_tables(Rng& rng, std::vector<std::size_t> cards, std::vector<std::vector<VarId>> parents) {
  std::vector<Factor> cpts;
  cpts.reserve(cards.size());
  for (VarId v = 0; v < cards.size(); ++v) {
    std::size_t rows = 1;
    for (VarId p : parents[v]) rows *= cards[p];
    cpts.push_back(make_cpt(v, parents[v], cards, random_rows(rng, rows, cards[v])));
  }
  return BeliefNetwork(std::move(cards), std::move(parents), std::move(cpts));
}

Assignment sample_evidence(Rng& rng, const BeliefNetwork& net, std::size_t count) {
  if (count > net.size()) throw ContractViolation("more evidence variables than network variables");
  Assignment e;
  if (count == 0) return e;
  const auto joint = ancestral_sample(net, rng.bits());
  std::vector<VarId> vars(net.size());
  std::iota(vars.begin(), vars.end(), VarId{0});
  rng.shuffle(vars.begin(), vars.end());
  for (std::size_t j = 0; j < count; ++j) e.emplace(vars[j], joint[vars[j]]);
  return e;
}

double logistic(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

std::vector<Value> ancestral_sample(const BeliefNetwork& net, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = net.size();
  std::vector<std::size_t> pending(n);
  std::vector<std::vector<VarId>> children(n);
  for (VarId v = 0; v < n; ++v) {
    pending[v] = net.parents(v).size();
    for (VarId p : net.parents(v)) children[p].push_back(v);
  }
  std::vector<VarId> ready;
  for (VarId v = n; v-- > 0;)
    if (pending[v] == 0) ready.push_back(v);

  std::vector<Value> x(n, 0);
  Assignment a;
  std::size_t visited = 0;
  while (!ready.empty()) {
    // Lowest id first keeps the draw order independent of container details.
    auto it = std::min_element(ready.begin(), ready.end());
    const VarId v = *it;
    ready.erase(it);
    ++visited;
    std::vector<double> row(net.card(v));
    for (Value val = 0; val < net.card(v); ++val) {
      a[v] = val;
      row[val] = net.cpt(v).at(a);
    }
    const double z = std::accumulate(row.begin(), row.end(), 0.0);
    double u = rng.uniform() * z;
    Value pick = net.card(v) - 1;
    for (Value val = 0; val < net.card(v); ++val) {
      if (u < row[val]) {
        pick = val;
        break;
      }
      u -= row[val];
    }
    // Never pick a zero-probability value through rounding at the tail.
    while (row[pick] == 0.0 && pick > 0) --pick;
    x[v] = pick;
    a[v] = pick;
    for (VarId c : children[v])
      if (--pending[c] == 0) ready.push_back(c);
  }
  if (visited != n) throw ModelError("cannot sample from a cyclic network");
  return x;
}

GeneratedInstance gen_random(const RandomNetSpec& spec) {
  if (spec.k < 2) throw ContractViolation("random network: K must be at least 2");
  if (spec.c > spec.n) throw ContractViolation("random network: C exceeds N");
  if (spec.c > 0 && spec.n - spec.c < spec.p)
    throw ContractViolation("random network: the first child would have fewer than P predecessors");

  Rng rng(spec.seed);
  std::vector<VarId> order(spec.n);
  std::iota(order.begin(), order.end(), VarId{0});
  rng.shuffle(order.begin(), order.end());

  std::vector<std::vector<VarId>> parents(spec.n);
  for (std::size_t pos = spec.n - spec.c; pos < spec.n; ++pos) {
    std::vector<VarId> pred(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(pos));
    for (std::size_t j = 0; j < spec.p; ++j) std::swap(pred[j], pred[j + rng.index(pred.size() - j)]);
    std::vector<VarId> pa(pred.begin(), pred.begin() + static_cast<std::ptrdiff_t>(spec.p));
    std::sort(pa.begin(), pa.end());
    parents[order[pos]] = std::move(pa);
  }

  GeneratedInstance inst;
  inst.network = random_tables(rng, std::vector<std::size_t>(spec.n, spec.k), std::move(parents));
  inst.evidence = sample_evidence(rng, inst.network, spec.evidence);
  return inst;
}

GeneratedInstance gen_grid(const GridSpec& spec) {
  if (spec.m < 2) throw ContractViolation("grid: M must be at least 2");
  if (spec.k < 2) throw ContractViolation("grid: K must be at least 2");
  const std::size_t n = spec.m * spec.m;
  std::vector<std::vector<VarId>> parents(n);
  for (std::size_t r = 0; r < spec.m; ++r) {
    for (std::size_t c = 0; c < spec.m; ++c) {
      auto& pa = parents[r * spec.m + c];
      if (r > 0) pa.push_back(static_cast<VarId>((r - 1) * spec.m + c));
      if (c > 0) pa.push_back(static_cast<VarId>(r * spec.m + c - 1));
    }
  }
  Rng rng(spec.seed);
  GeneratedInstance inst;
  inst.network = random_tables(rng, std::vector<std::size_t>(n, spec.k), std::move(parents));
  inst.evidence = sample_evidence(rng, inst.network, spec.evidence);
  return inst;
}

GeneratedInstance gen_coding(const CodingSpec& spec) {
  if (spec.parents < 1 || spec.parents > spec.k_info)
    throw ContractViolation("coding: parity parent count must be in [1, k_info]");
  if (!(spec.sigma > 0.0)) throw ContractViolation("coding: sigma must be positive");
  const std::size_t k = spec.k_info;
  const std::size_t bits = 2 * k;
  const std::size_t n = 2 * bits;
  Rng rng(spec.seed);

  std::vector<std::size_t> cards(n, 2);
  std::vector<std::vector<VarId>> parents(n);
  std::vector<Factor> cpts(n);
  for (VarId v = 0; v < k; ++v) cpts[v] = make_cpt(v, {}, cards, {0.5, 0.5});

  std::vector<VarId> info(k);
  std::iota(info.begin(), info.end(), VarId{0});
  for (std::size_t j = 0; j < k; ++j) {
    const VarId x = static_cast<VarId>(k + j);
    for (std::size_t t = 0; t < spec.parents; ++t) std::swap(info[t], info[t + rng.index(k - t)]);
    std::vector<VarId> pa(info.begin(), info.begin() + static_cast<std::ptrdiff_t>(spec.parents));
    std::sort(pa.begin(), pa.end());
    // XOR indicator, parents listed ascending, child fastest.
    const std::size_t rows = std::size_t{1} << spec.parents;
    std::vector<double> t(rows * 2);
    for (std::size_t r = 0; r < rows; ++r) {
      const unsigned parity = static_cast<unsigned>(std::popcount(r) & 1);
      t[r * 2 + parity] = 1.0;
    }
    cpts[x] = make_cpt(x, pa, cards, std::move(t));
    parents[x] = std::move(pa);
  }

  GeneratedInstance inst;
  inst.ground_truth.assign(bits, 0);
  for (std::size_t v = 0; v < k; ++v) inst.ground_truth[v] = rng.index(2);
  for (std::size_t j = 0; j < k; ++j) {
    Value parity = 0;
    for (VarId p : parents[k + j]) parity ^= inst.ground_truth[p];
    inst.ground_truth[k + j] = parity;
  }

  // Observation node per bit: P(obs = 1 | bit = b) is proportional to the
  // Gaussian likelihood exp(-(y - s_b)^2 / 2σ²) with s_b = 1 - 2b.
  const double inv_var = 1.0 / (spec.sigma * spec.sigma);
  for (std::size_t b = 0; b < bits; ++b) {
    const VarId obs = static_cast<VarId>(bits + b);
    const double s = inst.ground_truth[b] == 0 ? 1.0 : -1.0;
    const double y = s + spec.sigma * rng.gaussian();
    const double p0 = logistic(2.0 * y * inv_var);   // bit = 0
    const double p1 = logistic(-2.0 * y * inv_var);  // bit = 1
    const VarId bit = static_cast<VarId>(b);
    parents[obs] = {bit};
    cpts[obs] = make_cpt(obs, std::span<const VarId>(&bit, 1), cards, {1.0 - p0, p0, 1.0 - p1, p1});
    inst.evidence.emplace(obs, 1);
  }
  inst.network = BeliefNetwork(std::move(cards), std::move(parents), std::move(cpts));
  return inst;
}

}  // namespace ijgp
