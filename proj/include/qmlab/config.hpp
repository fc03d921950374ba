#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qmlab {

inline constexpr const char* kVersion = "0.3.1";

// Every numeric tolerance used across the library lives here.
struct Tolerances {
  double metric_axiom = 1e-9;    // symmetry, diagonal, triangle checks
  double measure_sum = 1e-12;    // probability weights sum to one
  double coupling_marginal = 1e-9;
  double lipschitz = 1e-9;       // |f(x)-f(y)| <= d(x,y) + lipschitz
  double duality_gap = 1e-7;     // |primal - dual| for W1
  double hermitian = 1e-12;
  double eigen = 1e-10;
  std::size_t prob_net_cap = 200000;
  std::size_t nucleus_cap = 2000000;
};

// Process-wide defaults. Mutable so the CLI can apply overrides before work starts.
Tolerances& tolerances();

void set_thread_count(unsigned n);
unsigned thread_count();

// Base class of every domain error. The CLI maps these to exit status 1.
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(std::move(module)) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

}  // namespace qmlab
