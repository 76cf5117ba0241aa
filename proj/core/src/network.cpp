#include "ijgp/network.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "ijgp/errors.hpp"

namespace ijgp {

BeliefNetwork::BeliefNetwork(std::vector<std::size_t> cards, std::vector<std::vector<VarId>> parents,
                             std::vector<Factor> cpts)
    : cards_(std::move(cards)), parents_(std::move(parents)), cpts_(std::move(cpts)) {
  if (parents_.size() != cards_.size() || cpts_.size() != cards_.size())
    throw ModelError("network needs one parent list and one CPT per variable");
  for (auto& pa : parents_) std::sort(pa.begin(), pa.end());
}

Factor make_cpt(VarId child, std::span<const VarId> parents, std::span<const std::size_t> cards,
                std::vector<double> table) {
  std::vector<VarId> order(parents.begin(), parents.end());
  order.push_back(child);
  std::vector<std::size_t> order_cards;
  for (VarId v : order) order_cards.push_back(cards[v]);
  return Factor::from_ordered(order, order_cards, std::move(table));
}

namespace {

bool has_cycle(const BeliefNetwork& net, VarId* witness) {
  // 0 = unvisited, 1 = on stack, 2 = done. Iterative DFS over parent links.
  std::vector<int> state(net.size(), 0);
  for (VarId root = 0; root < net.size(); ++root) {
    if (state[root] != 0) continue;
    std::vector<std::pair<VarId, std::size_t>> stack{{root, 0}};
    state[root] = 1;
    while (!stack.empty()) {
      auto& [v, next] = stack.back();
      auto pa = net.parents(v);
      if (next < pa.size()) {
        VarId p = pa[next++];
        if (p >= net.size()) continue;
        if (state[p] == 1) {
          *witness = p;
          return true;
        }
        if (state[p] == 0) {
          state[p] = 1;
          stack.emplace_back(p, 0);
        }
      } else {
        state[v] = 2;
        stack.pop_back();
      }
    }
  }
  return false;
}

}  // namespace

std::vector<Violation> validate(const BeliefNetwork& net) {
  std::vector<Violation> out;
  const std::size_t n = net.size();
  bool shapes_ok = true;
  for (VarId v = 0; v < n; ++v) {
    auto pa = net.parents(v);
    std::vector<VarId> family(pa.begin(), pa.end());
    family.push_back(v);
    std::sort(family.begin(), family.end());
    bool ok = std::adjacent_find(family.begin(), family.end()) == family.end() &&
              std::all_of(family.begin(), family.end(), [&](VarId x) { return x < n; });
    const Scope& s = net.cpt(v).scope();
    if (ok) ok = std::equal(family.begin(), family.end(), s.vars().begin(), s.vars().end());
    if (ok) {
      for (std::size_t k = 0; k < s.size(); ++k) ok = ok && s.card(k) == net.card(s.var(k));
    }
    if (!ok) {
      shapes_ok = false;
      out.push_back({ViolationKind::kShape, "CPT " + std::to_string(v) + " scope does not match its family"});
    }
  }
  VarId witness = 0;
  if (has_cycle(net, &witness))
    out.push_back({ViolationKind::kCycle, "parent graph has a cycle through variable " + std::to_string(witness)});
  if (!shapes_ok) return out;

  for (VarId v = 0; v < n; ++v) {
    const Factor& f = net.cpt(v);
    // Sum out the child; every parent configuration must give 1.
    const VarId child[] = {v};
    Factor rows = marginalize(f, child);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (std::abs(rows[r] - 1.0) > 1e-9) {
        out.push_back({ViolationKind::kNormalization, "CPT " + std::to_string(v) + " row " + std::to_string(r) +
                                                          " sums to " + std::to_string(rows[r])});
        break;
      }
    }
  }
  return out;
}

void UndirectedGraph::add_edge(VarId a, VarId b) {
  if (a == b) return;
  auto insert = [](std::vector<VarId>& list, VarId x) {
    auto it = std::lower_bound(list.begin(), list.end(), x);
    if (it == list.end() || *it != x) list.insert(it, x);
  };
  insert(adj_[a], b);
  insert(adj_[b], a);
}

bool UndirectedGraph::has_edge(VarId a, VarId b) const {
  return std::binary_search(adj_[a].begin(), adj_[a].end(), b);
}

std::size_t UndirectedGraph::edge_count() const {
  std::size_t d = 0;
  for (const auto& l : adj_) d += l.size();
  return d / 2;
}

MoralGraph moral_graph(const BeliefNetwork& net) {
  MoralGraph g(net.size());
  for (const Factor& f : net.cpts()) {
    auto vars = f.scope().vars();
    for (std::size_t a = 0; a < vars.size(); ++a)
      for (std::size_t b = a + 1; b < vars.size(); ++b) g.add_edge(vars[a], vars[b]);
  }
  return g;
}

Posterior make_posterior_shell(const BeliefNetwork& net, const Assignment& evidence) {
  Posterior p;
  p.beliefs.resize(net.size());
  p.observed.assign(net.size(), false);
  for (auto [v, value] : evidence) {
    std::vector<double> t(net.card(v), 0.0);
    t[value] = 1.0;
    p.beliefs[v] = Factor(Scope({v}, {net.card(v)}), std::move(t));
    p.observed[v] = true;
  }
  return p;
}

void check_evidence(const BeliefNetwork& net, const Assignment& evidence) {
  for (auto [v, value] : evidence) {
    if (v >= net.size()) throw ModelError("evidence names unknown variable " + std::to_string(v));
    if (value >= net.card(v))
      throw ModelError("evidence value " + std::to_string(value) + " out of range for variable " + std::to_string(v));
  }
}

Posterior brute_force_posterior(const BeliefNetwork& net, const Assignment& evidence, std::size_t max_configurations) {
  check_evidence(net, evidence);
  const std::size_t n = net.size();
  std::vector<VarId> free_vars;
  std::size_t configs = 1;
  for (VarId v = 0; v < n; ++v) {
    if (evidence.contains(v)) continue;
    free_vars.push_back(v);
    if (configs > max_configurations / net.card(v))
      throw GuardExceeded("brute-force enumeration exceeds " + std::to_string(max_configurations) + " configurations");
    configs *= net.card(v);
  }

  std::vector<Value> x(n, 0);
  for (auto [v, value] : evidence) x[v] = value;

  // Per-CPT strides over full assignments.
  std::vector<std::vector<std::pair<VarId, std::size_t>>> cpt_strides(n);
  for (VarId v = 0; v < n; ++v) {
    const Scope& s = net.cpt(v).scope();
    std::size_t st = 1;
    for (std::size_t k = s.size(); k-- > 0;) {
      cpt_strides[v].emplace_back(s.var(k), st);
      st *= s.card(k);
    }
  }

  std::vector<std::vector<double>> acc(n);
  for (VarId v : free_vars) acc[v].assign(net.card(v), 0.0);
  double total = 0.0;
  for (std::size_t c = 0; c < configs; ++c) {
    double w = 1.0;
    for (VarId v = 0; v < n && w > 0.0; ++v) {
      std::size_t idx = 0;
      for (auto [var, st] : cpt_strides[v]) idx += x[var] * st;
      w *= net.cpt(v)[idx];
    }
    total += w;
    for (VarId v : free_vars) acc[v][x[v]] += w;
    for (std::size_t k = free_vars.size(); k-- > 0;) {
      VarId v = free_vars[k];
      if (++x[v] < net.card(v)) break;
      x[v] = 0;
    }
  }
  if (!(total > 0.0)) throw InconsistentEvidence("evidence has zero probability");

  Posterior p = make_posterior_shell(net, evidence);
  for (VarId v : free_vars) {
    for (double& a : acc[v]) a /= total;
    p.beliefs[v] = Factor(Scope({v}, {net.card(v)}), std::move(acc[v]));
  }
  return p;
}

namespace {

class Tokenizer {
 public:
  explicit Tokenizer(std::istream& in) : in_(in) {}

  // Next token, or empty at end of input. Text after '#' to end of line is a comment.
  std::string next() {
    std::string tok;
    int ch;
    while ((ch = in_.get()) != EOF) {
      if (ch == '#') {
        while ((ch = in_.get()) != EOF && ch != '\n') {
        }
        if (ch == EOF) break;
      }
      if (ch == '\n') {
        if (!tok.empty()) {
          in_.unget();
          return tok;
        }
        ++line_;
        continue;
      }
      if (std::isspace(ch)) {
        if (!tok.empty()) return tok;
        continue;
      }
      tok.push_back(static_cast<char>(ch));
    }
    return tok;
  }

  std::size_t line() const noexcept { return line_; }

  std::string expect(const std::string& what) {
    std::string t = next();
    if (t.empty()) throw ParseError(line_, "unexpected end of input, expected " + what);
    return t;
  }

  std::size_t integer(const std::string& what) {
    std::string t = expect(what);
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size())
      throw ParseError(line_, "expected " + what + ", got '" + t + "'");
    return v;
  }

  double real(const std::string& what) {
    std::string t = expect(what);
    double v = 0.0;
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc{} || p != t.data() + t.size())
      throw ParseError(line_, "expected " + what + ", got '" + t + "'");
    return v;
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

std::string format_double(double x) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, p);
}

}  // namespace

BeliefNetwork parse_network(std::istream& in) {
  Tokenizer tok(in);
  std::string header = tok.next();
  if (header != "BAYES") throw ParseError(tok.line(), "expected header 'BAYES', got '" + header + "'");
  const std::size_t n = tok.integer("variable count");
  std::vector<std::size_t> cards(n);
  for (auto& c : cards) {
    c = tok.integer("cardinality");
    if (c == 0) throw ParseError(tok.line(), "cardinality must be positive");
  }
  const std::size_t m = tok.integer("CPT count");
  if (m != n) throw ParseError(tok.line(), "CPT count " + std::to_string(m) + " differs from variable count");

  std::vector<std::vector<VarId>> scopes(m);
  for (std::size_t f = 0; f < m; ++f) {
    const std::size_t k = tok.integer("scope size of CPT " + std::to_string(f));
    if (k == 0) throw ParseError(tok.line(), "CPT " + std::to_string(f) + " has an empty scope");
    for (std::size_t j = 0; j < k; ++j) {
      std::size_t v = tok.integer("scope variable of CPT " + std::to_string(f));
      if (v >= n) throw ParseError(tok.line(), "CPT " + std::to_string(f) + " names unknown variable " + std::to_string(v));
      scopes[f].push_back(static_cast<VarId>(v));
    }
  }

  std::vector<std::vector<VarId>> parents(n);
  std::vector<std::optional<Factor>> cpts(n);
  for (std::size_t f = 0; f < m; ++f) {
    const auto& sc = scopes[f];
    std::size_t expected = 1;
    std::vector<std::size_t> sc_cards;
    for (VarId v : sc) {
      expected *= cards[v];
      sc_cards.push_back(cards[v]);
    }
    const std::size_t len = tok.integer("table length of CPT " + std::to_string(f));
    if (len != expected)
      throw ParseError(tok.line(), "CPT " + std::to_string(f) + " declares " + std::to_string(len) +
                                       " entries, scope needs " + std::to_string(expected));
    std::vector<double> table(len);
    for (std::size_t j = 0; j < len; ++j) {
      std::string t = tok.next();
      if (t.empty())
        throw ParseError(tok.line(), "table of CPT " + std::to_string(f) + " truncated after " + std::to_string(j) +
                                         " of " + std::to_string(len) + " entries");
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), table[j]);
      if (ec != std::errc{} || p != t.data() + t.size())
        throw ParseError(tok.line(), "non-numeric entry '" + t + "' in CPT " + std::to_string(f));
    }
    const VarId child = sc.back();
    if (cpts[child]) throw ParseError(tok.line(), "variable " + std::to_string(child) + " has two CPTs");
    parents[child].assign(sc.begin(), sc.end() - 1);
    try {
      cpts[child] = Factor::from_ordered(sc, sc_cards, std::move(table));
    } catch (const ModelError& e) {
      throw ParseError(tok.line(), "CPT " + std::to_string(f) + ": " + e.what());
    }
  }
  if (!tok.next().empty()) throw ParseError(tok.line(), "trailing tokens after last table");

  std::vector<Factor> out;
  out.reserve(n);
  for (std::size_t v = 0; v < n; ++v) {
    if (!cpts[v]) throw ParseError(tok.line(), "variable " + std::to_string(v) + " has no CPT");
    out.push_back(std::move(*cpts[v]));
  }
  return BeliefNetwork(std::move(cards), std::move(parents), std::move(out));
}

BeliefNetwork parse_network(const std::string& text) {
  std::istringstream in(text);
  return parse_network(in);
}

void serialize_network(const BeliefNetwork& net, std::ostream& out) {
  const std::size_t n = net.size();
  out << "BAYES\n" << n << '\n';
  for (std::size_t v = 0; v < n; ++v) out << (v ? " " : "") << net.card(static_cast<VarId>(v));
  out << '\n' << n << '\n';
  std::vector<std::vector<VarId>> orders(n);
  for (VarId v = 0; v < n; ++v) {
    auto pa = net.parents(v);
    orders[v].assign(pa.begin(), pa.end());
    std::sort(orders[v].begin(), orders[v].end());
    orders[v].push_back(v);
    out << orders[v].size();
    for (VarId x : orders[v]) out << ' ' << x;
    out << '\n';
  }
  for (VarId v = 0; v < n; ++v) {
    auto table = net.cpt(v).table_in_order(orders[v]);
    out << '\n' << table.size() << '\n';
    for (std::size_t j = 0; j < table.size(); ++j) out << (j ? " " : "") << format_double(table[j]);
    out << '\n';
  }
}

std::string serialize_network(const BeliefNetwork& net) {
  std::ostringstream out;
  serialize_network(net, out);
  return out.str();
}

Assignment parse_evidence(std::istream& in) {
  Tokenizer tok(in);
  Assignment e;
  std::string first = tok.next();
  if (first.empty()) return e;
  std::size_t count = 0;
  auto [p, ec] = std::from_chars(first.data(), first.data() + first.size(), count);
  if (ec != std::errc{} || p != first.data() + first.size())
    throw ParseError(tok.line(), "expected evidence count, got '" + first + "'");
  for (std::size_t j = 0; j < count; ++j) {
    auto v = tok.integer("evidence variable");
    auto x = tok.integer("evidence value");
    if (!e.emplace(static_cast<VarId>(v), x).second)
      throw ParseError(tok.line(), "variable " + std::to_string(v) + " observed twice");
  }
  if (!tok.next().empty()) throw ParseError(tok.line(), "trailing tokens after evidence");
  return e;
}

void serialize_evidence(const Assignment& evidence, std::ostream& out) {
  out << evidence.size() << '\n';
  for (auto [v, x] : evidence) out << v << ' ' << x << '\n';
}

BeliefNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open model file '" + path + "'");
  return parse_network(in);
}

Assignment load_evidence(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ModelError("cannot open evidence file '" + path + "'");
  return parse_evidence(in);
}

}  // namespace ijgp
