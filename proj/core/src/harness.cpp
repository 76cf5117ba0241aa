#include "ijgp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>

#include "ijgp/decomposition.hpp"
#include "ijgp/errors.hpp"
#include "ijgp/metrics.hpp"
#include "ijgp/propagation.hpp"

namespace ijgp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Instance {
  GeneratedInstance data;
  std::uint64_t seed = 0;
  std::size_t evidence_count = 0;
};

// Everything an algorithm cell needs to score itself, shared read-only by all cells.
struct Reference {
  const Instance* inst = nullptr;
  EliminationOrdering ordering;
  std::optional<Posterior> exact;
  double exact_time_s = 0.0;
};

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

std::string sigma_text(double sigma) { return format_double(sigma); }

class Runner {
 public:
  explicit Runner(const ExperimentSpec& spec) : spec_(spec) {}

  std::vector<ExperimentRecord> run() {
    std::vector<ExperimentRecord> out;
    for (const Instance& inst : instances()) {
      Reference ref;
      ref.inst = &inst;
      if (!prepare(ref)) continue;
      for (Algorithm a : spec_.algorithms) run_cells(ref, a, out);
    }
    return out;
  }

 private:
  void log(const std::string& msg) const {
    if (spec_.log) *spec_.log << msg << '\n';
  }

  std::vector<std::size_t> sorted_iterations() const {
    std::vector<std::size_t> its = spec_.iterations;
    std::sort(its.begin(), its.end());
    its.erase(std::unique(its.begin(), its.end()), its.end());
    if (!its.empty() && its.front() == 0) throw ContractViolation("iteration counts must be at least 1");
    return its;
  }

  std::vector<Instance> instances() const {
    std::vector<Instance> out;
    switch (spec_.family) {
      case Family::kRandom:
      case Family::kGrid:
        for (std::size_t ev : spec_.evidence_counts) {
          for (std::size_t j = 0; j < spec_.instance_count; ++j) {
            Instance inst;
            inst.seed = spec_.seed + j;
            inst.evidence_count = ev;
            if (spec_.family == Family::kRandom) {
              RandomNetSpec s = spec_.random;
              s.seed = inst.seed;
              s.evidence = ev;
              inst.data = gen_random(s);
            } else {
              GridSpec s = spec_.grid;
              s.seed = inst.seed;
              s.evidence = ev;
              inst.data = gen_grid(s);
            }
            out.push_back(std::move(inst));
          }
        }
        break;
      case Family::kCoding:
        for (std::size_t j = 0; j < spec_.instance_count; ++j) {
          Instance inst;
          inst.seed = spec_.seed + j;
          CodingSpec s = spec_.coding;
          s.seed = inst.seed;
          inst.data = gen_coding(s);
          inst.evidence_count = inst.data.evidence.size();
          out.push_back(std::move(inst));
        }
        break;
      case Family::kFile:
        if (spec_.instance_count > 0) {
          Instance inst;
          inst.seed = spec_.seed;
          inst.data.network = load_network(spec_.model_path);
          if (!spec_.evidence_path.empty()) inst.data.evidence = load_evidence(spec_.evidence_path);
          check_evidence(inst.data.network, inst.data.evidence);
          inst.evidence_count = inst.data.evidence.size();
          out.push_back(std::move(inst));
        }
        break;
    }
    return out;
  }

  bool prepare(Reference& ref) const {
    const auto& net = ref.inst->data.network;
    ref.ordering = min_fill_ordering(moral_graph(net));
    if (spec_.family == Family::kCoding) return true;
    const auto t0 = Clock::now();
    try {
      ref.exact = bucket_elimination_posterior(net, ref.inst->data.evidence, ref.ordering,
                                               spec_.exact_max_table_entries);
    } catch (const GuardExceeded& e) {
      log("seed " + std::to_string(ref.inst->seed) + ": skipped, exact reference too large (" + e.what() + ")");
      return false;
    } catch (const InconsistentEvidence& e) {
      log("seed " + std::to_string(ref.inst->seed) + ": skipped, " + e.what());
      return false;
    }
    ref.exact_time_s = seconds_since(t0);
    return true;
  }

  ExperimentRecord blank(const Reference& ref, Algorithm a) const {
    ExperimentRecord r;
    const auto& net = ref.inst->data.network;
    switch (spec_.family) {
      case Family::kRandom:
        r.family = "random";
        r.n = spec_.random.n;
        r.k = spec_.random.k;
        r.c = spec_.random.c;
        r.p = spec_.random.p;
        break;
      case Family::kGrid:
        r.family = "grid";
        r.n = spec_.grid.m * spec_.grid.m;
        r.k = spec_.grid.k;
        break;
      case Family::kCoding:
        r.family = "coding@" + sigma_text(spec_.coding.sigma);
        r.n = spec_.coding.k_info;
        r.k = 2;
        r.p = spec_.coding.parents;
        break;
      case Family::kFile: {
        r.family = "file";
        r.n = net.size();
        std::size_t k = 0;
        for (std::size_t v = 0; v < net.size(); ++v) k = std::max(k, net.card(static_cast<VarId>(v)));
        r.k = k;
        break;
      }
    }
    r.seed = ref.inst->seed;
    r.evidence = ref.inst->evidence_count;
    r.algorithm = to_string(a);
    return r;
  }

  void score(const Reference& ref, const Posterior& approx, ExperimentRecord& r) const {
    if (ref.exact) {
      const ErrorReport rep = evaluate(*ref.exact, approx);
      if (std::isnan(rep.kl_distance) || rep.kl_distance < 0.0)
        throw ContractViolation("negative KL distance for seed " + std::to_string(ref.inst->seed));
      r.abs_err = rep.absolute_error;
      r.rel_err = rep.relative_error;
      r.kl = rep.kl_distance;
    }
    if (!ref.inst->data.ground_truth.empty()) r.ber = bit_error_rate(ref.inst->data.ground_truth, approx);
  }

  // IJGP over a fixed graph, capturing beliefs after each requested iteration count.
  void run_iterative(const Reference& ref, Algorithm a, std::optional<std::size_t> i_bound,
                     std::vector<ExperimentRecord>& out) const {
    const auto& net = ref.inst->data.network;
    const auto& ev = ref.inst->data.evidence;
    const auto its = sorted_iterations();
    if (its.empty()) return;

    const auto t0 = Clock::now();
    const ArcLabeledJoinGraph jg =
        a == Algorithm::kIbp ? dual_join_graph(net) : join_graph_structuring(net, ref.ordering, *i_bound);
    EngineConfig cfg;
    cfg.iterations = its.back();
    IjgpEngine engine(net, ev, jg, cfg);
    const double build_s = seconds_since(t0);

    double engine_s = 0.0;
    std::size_t done = 0;
    for (std::size_t target : its) {
      const auto t1 = Clock::now();
      while (done < target) {
        engine.sweep();
        ++done;
      }
      const Posterior post = engine.beliefs();
      engine_s += seconds_since(t1);

      ExperimentRecord r = blank(ref, a);
      r.i_bound = i_bound;
      r.iterations = target;
      score(ref, post, r);
      r.time_s = engine_s + (spec_.timing == TimingMode::kTotal ? build_s : 0.0);
      out.push_back(std::move(r));

      if (spec_.cell_timeout_s && engine_s > *spec_.cell_timeout_s && target != its.back()) {
        log("seed " + std::to_string(ref.inst->seed) + ": " + to_string(a) +
            (i_bound ? " i=" + std::to_string(*i_bound) : std::string()) + " timed out after " +
            std::to_string(done) + " iterations");
        break;
      }
    }
  }

  void run_cells(const Reference& ref, Algorithm a, std::vector<ExperimentRecord>& out) const {
    const auto& net = ref.inst->data.network;
    const auto& ev = ref.inst->data.evidence;
    switch (a) {
      case Algorithm::kIbp:
        run_iterative(ref, a, std::nullopt, out);
        break;
      case Algorithm::kIjgp:
        for (std::size_t i : spec_.i_bounds) run_iterative(ref, a, i, out);
        break;
      case Algorithm::kMc:
        for (std::size_t i : spec_.i_bounds) {
          const auto t0 = Clock::now();
          const ArcLabeledJoinGraph jt = build_join_tree(net, ref.ordering);
          const double build_s = seconds_since(t0);
          const BeliefResult res = mc_run(net, ev, jt, i);
          ExperimentRecord r = blank(ref, a);
          r.i_bound = i;
          r.iterations = 1;
          score(ref, res.posterior, r);
          r.time_s = res.wall_time_s + (spec_.timing == TimingMode::kTotal ? build_s : 0.0);
          out.push_back(std::move(r));
        }
        break;
      case Algorithm::kExact: {
        ExperimentRecord r = blank(ref, a);
        if (ref.exact) {
          score(ref, *ref.exact, r);
          r.time_s = ref.exact_time_s;
        } else {
          const auto t0 = Clock::now();
          try {
            const Posterior post =
                bucket_elimination_posterior(net, ev, ref.ordering, spec_.exact_max_table_entries);
            r.time_s = seconds_since(t0);
            score(ref, post, r);
          } catch (const GuardExceeded& e) {
            log("seed " + std::to_string(ref.inst->seed) + ": exact skipped (" + e.what() + ")");
            return;
          }
        }
        out.push_back(std::move(r));
        break;
      }
    }
  }

  const ExperimentSpec& spec_;
};

auto sort_key(const ExperimentRecord& r) {
  return std::make_tuple(r.evidence, !r.seed.has_value(), r.seed.value_or(0), r.algorithm, r.i_bound, r.iterations);
}

std::vector<ExperimentRecord> mean_rows(const std::vector<ExperimentRecord>& rows) {
  using Key = std::tuple<std::size_t, std::string, std::optional<std::size_t>, std::optional<std::size_t>>;
  std::map<Key, std::vector<const ExperimentRecord*>> groups;
  for (const auto& r : rows) groups[{r.evidence, r.algorithm, r.i_bound, r.iterations}].push_back(&r);

  auto mean_of = [](const std::vector<const ExperimentRecord*>& g,
                    std::optional<double> ExperimentRecord::*field) -> std::optional<double> {
    double s = 0.0;
    for (const auto* r : g) {
      if (!(r->*field)) return std::nullopt;
      s += *(r->*field);
    }
    return s / static_cast<double>(g.size());
  };

  std::vector<ExperimentRecord> out;
  for (const auto& [key, g] : groups) {
    ExperimentRecord m = *g.front();
    m.seed.reset();
    m.abs_err = mean_of(g, &ExperimentRecord::abs_err);
    m.rel_err = mean_of(g, &ExperimentRecord::rel_err);
    m.kl = mean_of(g, &ExperimentRecord::kl);
    m.ber = mean_of(g, &ExperimentRecord::ber);
    double t = 0.0;
    for (const auto* r : g) t += r->time_s;
    m.time_s = t / static_cast<double>(g.size());
    out.push_back(std::move(m));
  }
  return out;
}

template <class T>
std::string opt_text(const std::optional<T>& x) {
  if (!x) return {};
  if constexpr (std::is_floating_point_v<T>) {
    return format_double(*x);
  } else {
    return std::to_string(*x);
  }
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::uint64_t parse_uint(const std::string& s, std::size_t line, const char* what) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ParseError(line, std::string("bad ") + what + " '" + s + "'");
  try {
    return std::stoull(s);
  } catch (const std::out_of_range&) {
    throw ParseError(line, std::string(what) + " out of range");
  }
}

double parse_real(const std::string& s, std::size_t line, const char* what) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(line, std::string("bad ") + what + " '" + s + "'");
  }
  if (used != s.size()) throw ParseError(line, std::string("bad ") + what + " '" + s + "'");
  return x;
}

std::optional<std::size_t> opt_size(const std::string& s, std::size_t line, const char* what) {
  if (s.empty()) return std::nullopt;
  return static_cast<std::size_t>(parse_uint(s, line, what));
}

std::optional<double> opt_real(const std::string& s, std::size_t line, const char* what) {
  if (s.empty()) return std::nullopt;
  return parse_real(s, line, what);
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::kRandom: return "random";
    case Family::kGrid: return "grid";
    case Family::kCoding: return "coding";
    case Family::kFile: return "file";
  }
  return "?";
}

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kIbp: return "ibp";
    case Algorithm::kIjgp: return "ijgp";
    case Algorithm::kMc: return "mc";
    case Algorithm::kExact: return "exact";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  for (Family f : {Family::kRandom, Family::kGrid, Family::kCoding, Family::kFile})
    if (to_string(f) == s) return f;
  throw ContractViolation("unknown family '" + s + "'");
}

Algorithm parse_algorithm(const std::string& s) {
  for (Algorithm a : {Algorithm::kIbp, Algorithm::kIjgp, Algorithm::kMc, Algorithm::kExact})
    if (to_string(a) == s) return a;
  throw ContractViolation("unknown algorithm '" + s + "'");
}

std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec) {
  for (std::size_t i : spec.i_bounds)
    if (i < 1) throw ContractViolation("i-bounds must be at least 1");
  std::vector<ExperimentRecord> rows = Runner(spec).run();
  if (spec.mean_rows && !rows.empty()) {
    auto means = mean_rows(rows);
    rows.insert(rows.end(), std::make_move_iterator(means.begin()), std::make_move_iterator(means.end()));
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ExperimentRecord& a, const ExperimentRecord& b) { return sort_key(a) < sort_key(b); });
  return rows;
}

void write_csv(const std::vector<ExperimentRecord>& records, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.family << ',' << opt_text(r.n) << ',' << opt_text(r.k) << ',' << opt_text(r.c) << ',' << opt_text(r.p)
        << ',' << (r.seed ? std::to_string(*r.seed) : std::string("mean")) << ',' << r.evidence << ','
        << r.algorithm << ',' << opt_text(r.i_bound) << ',' << opt_text(r.iterations) << ',' << opt_text(r.abs_err)
        << ',' << opt_text(r.rel_err) << ',' << opt_text(r.kl) << ',' << opt_text(r.ber) << ','
        << format_double(r.time_s) << '\n';
  }
}

void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  write_csv(records, f);
  f.flush();
  if (!f) throw Error("failed writing '" + path + "'");
}

std::vector<ExperimentRecord> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError(1, "unexpected header");
  std::vector<ExperimentRecord> out;
  std::size_t no = 1;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != 15) throw ParseError(no, "expected 15 fields, got " + std::to_string(f.size()));
    ExperimentRecord r;
    r.family = f[0];
    r.n = opt_size(f[1], no, "n");
    r.k = opt_size(f[2], no, "k");
    r.c = opt_size(f[3], no, "c");
    r.p = opt_size(f[4], no, "p");
    if (f[5] != "mean") r.seed = parse_uint(f[5], no, "seed");
    r.evidence = static_cast<std::size_t>(parse_uint(f[6], no, "evidence"));
    r.algorithm = f[7];
    r.i_bound = opt_size(f[8], no, "i_bound");
    r.iterations = opt_size(f[9], no, "iterations");
    r.abs_err = opt_real(f[10], no, "abs_err");
    r.rel_err = opt_real(f[11], no, "rel_err");
    r.kl = opt_real(f[12], no, "kl");
    r.ber = opt_real(f[13], no, "ber");
    r.time_s = parse_real(f[14], no, "time_s");
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ijgp
