#pragma once

// Accuracy measures between exact and approximate posteriors. Observed
// variables are skipped everywhere.

#include <cstddef>
#include <vector>

#include "ijgp/network.hpp"

namespace ijgp {

struct ErrorReport {
  double absolute_error = 0.0;
  double relative_error = 0.0;
  double kl_distance = 0.0;
  std::size_t skipped_entries = 0;  // exact == 0 entries left out of the relative error
  bool kl_infinite = false;         // approx put zero mass where exact did not
};

// Mean |exact - approx| over all (variable, value) pairs.
double absolute_error(const Posterior& exact, const Posterior& approx);
// Mean |exact - approx| / exact over pairs with exact > 0.
double relative_error(const Posterior& exact, const Posterior& approx, std::size_t* skipped = nullptr);
// Mean over variables of sum_a exact(a) ln(exact(a) / approx(a)); +inf if
// approx is zero where exact is not.
double kl_distance(const Posterior& exact, const Posterior& approx);
ErrorReport evaluate(const Posterior& exact, const Posterior& approx);

// Fraction of the listed bits whose most likely decoded value disagrees with
// the truth; truth[v] is the true value of variable v.
double bit_error_rate(const std::vector<Value>& truth, const Posterior& approx);

}  // namespace ijgp
