// Command-line front end: solve one model, run benchmark sweeps, inspect
// join-graph decompositions.
//
// Exit codes: 0 success, 1 usage error, 2 model/evidence error, 3 guard exceeded.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ijgp/decomposition.hpp"
#include "ijgp/errors.hpp"
#include "ijgp/harness.hpp"
#include "ijgp/network.hpp"
#include "ijgp/propagation.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kModel = 2;
constexpr int kGuard = 3;

struct SolveArgs {
  std::string model;
  std::string evidence;
  std::string algorithm = "ijgp";
  std::size_t i_bound = 2;
  std::size_t iterations = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::size_t max_table = std::size_t{1} << 26;
};

struct BenchArgs {
  std::string family = "random";
  ijgp::RandomNetSpec random;
  std::size_t m = 9;
  double sigma = 0.22;
  std::size_t k_info = 200;
  std::string model;
  std::string evidence_file;
  std::size_t instances = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> algorithms{"ibp", "ijgp"};
  std::vector<std::size_t> i_bounds{2, 5, 8};
  std::vector<std::size_t> iterations{1, 5, 10};
  std::vector<std::size_t> evidence{0};
  std::string timing = "engine";
  std::optional<double> cell_timeout;
  bool no_mean = false;
  std::string out;
};

struct DecomposeArgs {
  std::string model;
  std::size_t i_bound = 2;
  bool dump = false;
};

void write_beliefs(const ijgp::Posterior& post, std::ostream& out) {
  char buf[40];
  for (std::size_t v = 0; v < post.size(); ++v) {
    out << 'X' << v;
    const auto& b = post.beliefs[v];
    for (std::size_t a = 0; a < b.size(); ++a) {
      std::snprintf(buf, sizeof buf, " %.9g", b[a]);
      out << buf;
    }
    out << '\n';
  }
}

int run_solve(const SolveArgs& a) {
  using namespace ijgp;
  const BeliefNetwork net = load_network(a.model);
  const Assignment ev = a.evidence.empty() ? Assignment{} : load_evidence(a.evidence);
  check_evidence(net, ev);
  const Algorithm alg = parse_algorithm(a.algorithm);
  const EliminationOrdering ord = min_fill_ordering(moral_graph(net));

  Posterior post;
  EngineConfig cfg;
  cfg.iterations = a.iterations;
  switch (alg) {
    case Algorithm::kExact:
      post = bucket_elimination_posterior(net, ev, ord, a.max_table);
      break;
    case Algorithm::kIbp:
      post = ibp_run(net, ev, cfg).posterior;
      break;
    case Algorithm::kIjgp:
      post = ijgp_run(net, ev, join_graph_structuring(net, ord, a.i_bound), cfg).posterior;
      break;
    case Algorithm::kMc:
      post = mc_run(net, ev, ord, a.i_bound).posterior;
      break;
  }
  if (a.out.empty()) {
    write_beliefs(post, std::cout);
  } else {
    std::ofstream f(a.out);
    if (!f) throw Error("cannot open '" + a.out + "' for writing");
    write_beliefs(post, f);
  }
  return 0;
}

int run_bench(const BenchArgs& a) {
  using namespace ijgp;
  ExperimentSpec spec;
  spec.family = parse_family(a.family);
  spec.random = a.random;
  spec.grid.m = a.m;
  spec.grid.k = a.random.k;
  spec.coding.k_info = a.k_info;
  spec.coding.parents = a.random.p;
  spec.coding.sigma = a.sigma;
  spec.model_path = a.model;
  spec.evidence_path = a.evidence_file;
  spec.instance_count = a.instances;
  spec.seed = a.seed;
  spec.algorithms.clear();
  for (const auto& s : a.algorithms) spec.algorithms.push_back(parse_algorithm(s));
  spec.i_bounds = a.i_bounds;
  spec.iterations = a.iterations;
  spec.evidence_counts = a.evidence;
  spec.timing = a.timing == "total" ? TimingMode::kTotal : TimingMode::kEngine;
  spec.cell_timeout_s = a.cell_timeout;
  spec.mean_rows = !a.no_mean;
  spec.log = &std::cerr;

  const auto records = run_experiment(spec);
  if (a.out.empty() || a.out == "-") {
    write_csv(records, std::cout);
  } else {
    emit_csv(records, a.out);
  }
  return 0;
}

int run_decompose(const DecomposeArgs& a) {
  using namespace ijgp;
  const BeliefNetwork net = load_network(a.model);
  const EliminationOrdering ord = min_fill_ordering(moral_graph(net));
  const ArcLabeledJoinGraph jg = join_graph_structuring(net, ord, a.i_bound);
  if (a.dump) dump_join_graph(jg, std::cout);
  const DecompositionStats s = decomposition_stats(jg);
  std::cout << "induced_width " << induced_width(moral_graph(net), ord) << '\n'
            << "clusters " << s.cluster_count << '\n'
            << "max_cluster " << s.max_cluster_size << '\n'
            << "max_label " << s.max_label_size << '\n'
            << "max_degree " << s.max_degree << '\n'
            << "separator_width " << s.separator_width << '\n';
  const auto problems = validate_decomposition(net, jg);
  std::cout << "valid " << (problems.empty() ? "yes" : "no") << '\n'
            << "label_minimal " << (is_label_minimal(jg) ? "yes" : "no") << '\n';
  for (const auto& p : problems) std::cout << "problem " << p << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative join-graph propagation for belief networks"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* sc = app.add_subcommand("solve", "Posterior marginals of one model");
  sc->add_option("--model", solve.model, "Network file")->required();
  sc->add_option("--evidence", solve.evidence, "Evidence file");
  sc->add_option("--algorithm", solve.algorithm, "ijgp|ibp|mc|exact")
      ->check(CLI::IsMember({"ijgp", "ibp", "mc", "exact"}));
  sc->add_option("--i-bound", solve.i_bound, "Cluster size bound")->check(CLI::PositiveNumber);
  sc->add_option("--iterations", solve.iterations, "Sweeps for ijgp and ibp")->check(CLI::PositiveNumber);
  sc->add_option("--seed", solve.seed, "Accepted for symmetry with bench; solving is deterministic");
  sc->add_option("--out", solve.out, "Output file (default stdout)");
  sc->add_option("--max-table", solve.max_table, "Largest table exact elimination may build");

  BenchArgs bench;
  auto* bc = app.add_subcommand("bench", "Benchmark sweep to CSV");
  bc->add_option("--family", bench.family, "random|grid|coding|file")
      ->check(CLI::IsMember({"random", "grid", "coding", "file"}));
  bc->add_option("--n", bench.random.n, "Random: variables");
  bc->add_option("--k", bench.random.k, "Random/grid: domain size");
  bc->add_option("--c", bench.random.c, "Random: CPTs with parents");
  bc->add_option("--p", bench.random.p, "Random: parents per CPT; coding: parents per parity bit");
  bc->add_option("--m", bench.m, "Grid: side length");
  bc->add_option("--sigma", bench.sigma, "Coding: channel noise standard deviation");
  bc->add_option("--k-info", bench.k_info, "Coding: information bits");
  bc->add_option("--model", bench.model, "File: network file");
  bc->add_option("--evidence-file", bench.evidence_file, "File: evidence file");
  bc->add_option("--instances", bench.instances, "Instances per evidence count");
  bc->add_option("--seed", bench.seed, "Base seed; instance j uses seed + j");
  bc->add_option("--algorithms", bench.algorithms, "Comma list of ibp,ijgp,mc,exact")
      ->delimiter(',')
      ->check(CLI::IsMember({"ijgp", "ibp", "mc", "exact"}));
  bc->add_option("--i-bounds", bench.i_bounds, "Comma list")->delimiter(',')->check(CLI::PositiveNumber);
  bc->add_option("--iterations", bench.iterations, "Comma list")->delimiter(',')->check(CLI::PositiveNumber);
  bc->add_option("--evidence", bench.evidence, "Comma list of evidence counts")->delimiter(',');
  bc->add_option("--timing", bench.timing, "engine: message passing only; total: with decomposition")
      ->check(CLI::IsMember({"engine", "total"}));
  bc->add_option("--cell-timeout", bench.cell_timeout, "Seconds before an iterative cell stops early");
  bc->add_flag("--no-mean", bench.no_mean, "Omit mean rows");
  bc->add_option("--out", bench.out, "CSV path (default stdout)");

  DecomposeArgs dec;
  auto* dc = app.add_subcommand("decompose", "Build and audit a join-graph");
  dc->add_option("--model", dec.model, "Network file")->required();
  dc->add_option("--i-bound", dec.i_bound, "Cluster size bound")->check(CLI::PositiveNumber);
  dc->add_flag("--dump", dec.dump, "Print nodes and edges");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  try {
    if (*sc) return run_solve(solve);
    if (*bc) return run_bench(bench);
    if (*dc) return run_decompose(dec);
  } catch (const ijgp::GuardExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kGuard;
  } catch (const ijgp::ContractViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ijgp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kModel;
  }
  return kUsage;
}
