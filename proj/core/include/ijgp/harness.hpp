#pragma once

// Benchmark sweeps over generated or loaded instances, and their CSV form.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ijgp/generators.hpp"

namespace ijgp {

enum class Family { kRandom, kGrid, kCoding, kFile };
enum class Algorithm { kIbp, kIjgp, kMc, kExact };
// kEngine times message passing only; kTotal adds decomposition construction.
enum class TimingMode { kEngine, kTotal };

std::string to_string(Family f);
std::string to_string(Algorithm a);
Family parse_family(const std::string& s);
Algorithm parse_algorithm(const std::string& s);

struct ExperimentSpec {
  Family family = Family::kRandom;
  RandomNetSpec random;
  GridSpec grid;
  CodingSpec coding;
  std::string model_path;     // kFile
  std::string evidence_path;  // kFile, optional

  std::size_t instance_count = 1;
  std::uint64_t seed = 0;  // instance j uses seed + j
  std::vector<Algorithm> algorithms{Algorithm::kIbp, Algorithm::kIjgp};
  std::vector<std::size_t> i_bounds{2, 5, 8};
  std::vector<std::size_t> iterations{1, 5, 10};
  std::vector<std::size_t> evidence_counts{0};  // ignored by coding and file families

  TimingMode timing = TimingMode::kEngine;
  std::optional<double> cell_timeout_s;
  std::size_t exact_max_table_entries = std::size_t{1} << 26;
  bool mean_rows = true;
  std::ostream* log = nullptr;  // skipped instances and timeouts are reported here
};

struct ExperimentRecord {
  std::string family;  // coding rows carry the noise level, e.g. "coding@0.4"
  std::optional<std::size_t> n, k, c, p;
  std::optional<std::uint64_t> seed;  // empty on mean rows
  std::size_t evidence = 0;
  std::string algorithm;
  std::optional<std::size_t> i_bound;
  std::optional<std::size_t> iterations;
  std::optional<double> abs_err, rel_err, kl, ber;
  double time_s = 0.0;

  friend bool operator==(const ExperimentRecord&, const ExperimentRecord&) = default;
};

std::vector<ExperimentRecord> run_experiment(const ExperimentSpec& spec);

inline constexpr const char* kCsvHeader =
    "family,n,k,c,p,seed,evidence,algorithm,i_bound,iterations,abs_err,rel_err,kl,ber,time_s";

void write_csv(const std::vector<ExperimentRecord>& records, std::ostream& out);
// Throws Error if the file cannot be written.
void emit_csv(const std::vector<ExperimentRecord>& records, const std::string& path);
// Throws ParseError on malformed rows.
std::vector<ExperimentRecord> parse_csv(std::istream& in);

}  // namespace ijgp
