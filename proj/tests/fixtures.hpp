#pragma once

// Sequence fixtures shared by the convergence tests and the acceptance run.

#include <string>
#include <vector>

namespace fixtures {

// alternating pair, null sequence, squares escaping to infinity over a zero
// background, the rational enumeration, and a sequence with a limit on the
// evens and a constant on the odds.
inline const std::vector<std::string>& matrix_sequences() {
  static const std::vector<std::string> m = {"alt(0,1)", "inv", "piecewise(pts(square),n,0)", "ratenum",
                                             "piecewise(odds,1,inv)"};
  return m;
}

}  // namespace fixtures
