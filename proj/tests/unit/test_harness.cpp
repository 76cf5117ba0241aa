#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "ijgp/errors.hpp"
#include "ijgp/harness.hpp"

using namespace ijgp;

namespace {

ExperimentSpec small_random_spec() {
  ExperimentSpec s;
  s.family = Family::kRandom;
  s.random = {12, 2, 10, 2, 0, 0};
  s.instance_count = 3;
  s.seed = 40;
  s.algorithms = {Algorithm::kIbp, Algorithm::kIjgp, Algorithm::kMc, Algorithm::kExact};
  s.i_bounds = {2, 3};
  s.iterations = {1, 4};
  s.evidence_counts = {0, 2};
  return s;
}

std::string csv(const std::vector<ExperimentRecord>& rs) {
  std::ostringstream out;
  write_csv(rs, out);
  return out.str();
}

std::vector<ExperimentRecord> without_time(std::vector<ExperimentRecord> rs) {
  for (auto& r : rs) r.time_s = 0.0;
  return rs;
}

}  // namespace

TEST_CASE("names round-trip") {
  for (Family f : {Family::kRandom, Family::kGrid, Family::kCoding, Family::kFile}) CHECK(parse_family(to_string(f)) == f);
  for (Algorithm a : {Algorithm::kIbp, Algorithm::kIjgp, Algorithm::kMc, Algorithm::kExact})
    CHECK(parse_algorithm(to_string(a)) == a);
  CHECK_THROWS_AS(parse_family("lattice"), ContractViolation);
  CHECK_THROWS_AS(parse_algorithm("gibbs"), ContractViolation);
}

TEST_CASE("zero instances give no records") {
  ExperimentSpec s = small_random_spec();
  s.instance_count = 0;
  CHECK(run_experiment(s).empty());
  CHECK(csv({}) == std::string(kCsvHeader) + "\n");
}

TEST_CASE("random sweep rows, means and determinism") {
  const ExperimentSpec s = small_random_spec();
  const auto rs = run_experiment(s);

  // Per instance and evidence level: ibp x 2 iteration counts, ijgp x 2 x 2, mc x 2, exact.
  std::size_t per_instance = 0, means = 0;
  for (const auto& r : rs) (r.seed ? per_instance : means) += 1;
  CHECK(per_instance == 2 * 3 * (2 + 4 + 2 + 1));
  CHECK(means == 2 * (2 + 4 + 2 + 1));

  std::map<std::tuple<std::size_t, std::string, std::optional<std::size_t>, std::optional<std::size_t>>,
           std::vector<const ExperimentRecord*>>
      groups;
  for (const auto& r : rs) {
    CHECK(r.family == "random");
    CHECK(r.n == std::optional<std::size_t>{12});
    REQUIRE(r.kl);
    CHECK(*r.kl >= 0.0);
    CHECK_FALSE(r.ber);
    if (r.algorithm == "exact") CHECK(*r.kl == 0.0);
    if (r.algorithm == "ijgp" || r.algorithm == "mc") CHECK(r.i_bound);
    if (r.algorithm == "ibp") CHECK_FALSE(r.i_bound);
    if (r.algorithm == "mc") CHECK(r.iterations == std::optional<std::size_t>{1});
    groups[{r.evidence, r.algorithm, r.i_bound, r.iterations}].push_back(&r);
  }
  for (const auto& [key, rows] : groups) {
    const ExperimentRecord* mean = nullptr;
    double kl = 0.0, abs = 0.0;
    std::size_t count = 0;
    for (const auto* r : rows) {
      if (!r->seed) {
        mean = r;
        continue;
      }
      kl += *r->kl;
      abs += *r->abs_err;
      ++count;
    }
    REQUIRE(mean);
    CHECK(count == 3);
    CHECK(std::abs(*mean->kl - kl / 3.0) <= 1e-12);
    CHECK(std::abs(*mean->abs_err - abs / 3.0) <= 1e-12);
  }

  CHECK(csv(without_time(rs)) == csv(without_time(run_experiment(s))));
}

TEST_CASE("longer runs extend shorter ones") {
  ExperimentSpec s = small_random_spec();
  s.algorithms = {Algorithm::kIjgp};
  s.i_bounds = {3};
  s.iterations = {2};
  s.mean_rows = false;
  const auto two = run_experiment(s);
  s.iterations = {1, 2};
  const auto both = run_experiment(s);
  std::size_t matched = 0;
  for (const auto& r : both)
    if (r.iterations == std::optional<std::size_t>{2}) {
      for (const auto& q : two)
        if (q.seed == r.seed && q.evidence == r.evidence) {
          CHECK(q.kl == r.kl);
          ++matched;
        }
    }
  CHECK(matched == two.size());
}

TEST_CASE("coding sweep reports bit error rates") {
  ExperimentSpec s;
  s.family = Family::kCoding;
  s.coding = {16, 3, 0.3, 0};
  s.instance_count = 2;
  s.algorithms = {Algorithm::kIbp, Algorithm::kIjgp};
  s.i_bounds = {2, 4};
  s.iterations = {5};
  const auto rs = run_experiment(s);
  REQUIRE_FALSE(rs.empty());
  for (const auto& r : rs) {
    CHECK(r.family == "coding@0.3");
    REQUIRE(r.ber);
    CHECK(*r.ber >= 0.0);
    CHECK(*r.ber <= 1.0);
    CHECK(r.evidence == 32);
    CHECK_FALSE(r.kl);
  }
}

TEST_CASE("guard failures skip the instance and log it") {
  ExperimentSpec s = small_random_spec();
  s.exact_max_table_entries = 2;
  std::ostringstream log;
  s.log = &log;
  CHECK(run_experiment(s).empty());
  CHECK(log.str().find("skip") != std::string::npos);
}

TEST_CASE("CSV round trip and errors") {
  ExperimentRecord a;
  a.family = "random";
  a.n = 50, a.k = 2, a.c = 45, a.p = 3;
  a.seed = 7;
  a.evidence = 5;
  a.algorithm = "ijgp";
  a.i_bound = 8;
  a.iterations = 10;
  a.abs_err = 0.00123456;
  a.rel_err = 0.25;
  a.kl = 1.5e-4;
  a.time_s = 0.0125;
  ExperimentRecord b;
  b.family = "coding@0.22";
  b.evidence = 400;
  b.algorithm = "ibp";
  b.iterations = 30;
  b.ber = 0.0005;
  b.kl = std::numeric_limits<double>::infinity();
  b.time_s = 1.0;

  const std::string text = csv({a});
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text == std::string(kCsvHeader) + "\nrandom,50,2,45,3,7,5,ijgp,8,10,0.00123456,0.25,0.00015,,0.0125\n");

  std::istringstream in(csv({a, b}));
  const auto back = parse_csv(in);
  REQUIRE(back.size() == 2);
  CHECK(back[0] == a);
  CHECK(back[1] == b);

  std::istringstream bad_header("family,n\n");
  CHECK_THROWS_AS(parse_csv(bad_header), ParseError);
  std::istringstream short_row(std::string(kCsvHeader) + "\nrandom,1,2\n");
  try {
    parse_csv(short_row);
    FAIL("short row accepted");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
  std::istringstream bad_number(std::string(kCsvHeader) + "\nrandom,x,2,45,3,7,5,ijgp,8,10,1,1,1,,1\n");
  CHECK_THROWS_AS(parse_csv(bad_number), ParseError);

  const auto dir = std::filesystem::temp_directory_path() / "ijgp_csv_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "out.csv").string();
  emit_csv({a, b}, path);
  std::ifstream f(path);
  CHECK(parse_csv(f) == std::vector<ExperimentRecord>{a, b});
  emit_csv({}, path);
  std::ifstream g(path);
  std::string header, rest;
  std::getline(g, header);
  CHECK(header == kCsvHeader);
  CHECK_FALSE(std::getline(g, rest));
  CHECK_THROWS_AS(emit_csv({a}, (dir / "missing" / "out.csv").string()), Error);
  std::filesystem::remove_all(dir);
}
