#include "ijgp/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ijgp/errors.hpp"

namespace ijgp {

namespace {

void check_shapes(const Posterior& exact, const Posterior& approx) {
  if (exact.size() != approx.size() || exact.observed != approx.observed)
    throw ContractViolation("posteriors cover different variables or evidence");
  for (std::size_t v = 0; v < exact.size(); ++v) {
    if (exact.observed[v]) continue;
    if (!(exact.beliefs[v].scope() == approx.beliefs[v].scope()) || exact.beliefs[v].scope().size() != 1)
      throw ContractViolation("belief shapes differ for variable " + std::to_string(v));
  }
}

}  // namespace

double absolute_error(const Posterior& exact, const Posterior& approx) {
  check_shapes(exact, approx);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t v = 0; v < exact.size(); ++v) {
    if (exact.observed[v]) continue;
    const Factor& p = exact.beliefs[v];
    const Factor& q = approx.beliefs[v];
    for (std::size_t a = 0; a < p.size(); ++a) sum += std::abs(p[a] - q[a]);
    count += p.size();
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

double relative_error(const Posterior& exact, const Posterior& approx, std::size_t* skipped) {
  check_shapes(exact, approx);
  double sum = 0.0;
  std::size_t count = 0, zeros = 0;
  for (std::size_t v = 0; v < exact.size(); ++v) {
    if (exact.observed[v]) continue;
    const Factor& p = exact.beliefs[v];
    const Factor& q = approx.beliefs[v];
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (p[a] > 0.0) {
        sum += std::abs(p[a] - q[a]) / p[a];
        ++count;
      } else {
        ++zeros;
      }
    }
  }
  if (skipped) *skipped = zeros;
  return count ? sum / static_cast<double>(count) : 0.0;
}

double kl_distance(const Posterior& exact, const Posterior& approx) {
  check_shapes(exact, approx);
  double sum = 0.0;
  std::size_t vars = 0;
  for (std::size_t v = 0; v < exact.size(); ++v) {
    if (exact.observed[v]) continue;
    const Factor& p = exact.beliefs[v];
    const Factor& q = approx.beliefs[v];
    double kl = 0.0;
    for (std::size_t a = 0; a < p.size(); ++a) {
      if (p[a] == 0.0) continue;
      if (q[a] == 0.0) return std::numeric_limits<double>::infinity();
      kl += p[a] * std::log(p[a] / q[a]);
    }
    // Rounding can push a tiny divergence below zero.
    sum += std::max(kl, 0.0);
    ++vars;
  }
  return vars ? sum / static_cast<double>(vars) : 0.0;
}

ErrorReport evaluate(const Posterior& exact, const Posterior& approx) {
  ErrorReport r;
  r.absolute_error = absolute_error(exact, approx);
  r.relative_error = relative_error(exact, approx, &r.skipped_entries);
  r.kl_distance = kl_distance(exact, approx);
  r.kl_infinite = std::isinf(r.kl_distance);
  return r;
}

double bit_error_rate(const std::vector<Value>& truth, const Posterior& approx) {
  if (truth.size() > approx.size()) throw ContractViolation("more true bits than variables");
  if (truth.empty()) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t v = 0; v < truth.size(); ++v) {
    const Factor& b = approx.beliefs[v];
    if (b.scope().size() != 1 || b.size() != 2)
      throw ContractViolation("bit error rate needs binary variables; variable " + std::to_string(v) + " is not");
    if (argmax_value(b) != truth[v]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

}  // namespace ijgp
