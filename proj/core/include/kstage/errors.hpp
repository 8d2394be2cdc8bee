#pragma once

#include <stdexcept>
#include <string>

namespace kstage {

/* Violated precondition or invariant of a library call. The CLI maps these
 * to a nonzero exit code with the message on stderr. */
struct contract_error : std::invalid_argument {
  explicit contract_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/* An iterative solve that did not reach its tolerance. Carries the partial
 * result so callers can report it instead of losing the run. */
struct convergence_error : std::runtime_error {
  double partial_value;
  double residual;
  convergence_error(const std::string& msg, double partial, double res)
      : std::runtime_error(msg), partial_value(partial), residual(res) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw contract_error(msg);
}

}  // namespace kstage
