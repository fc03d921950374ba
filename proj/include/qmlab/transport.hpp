#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "qmlab/metric_space.hpp"

namespace qmlab {

class TransportError : public DomainError {
 public:
  explicit TransportError(const std::string& what) : DomainError("transport", what) {}
};

// Probability weights over the points of a finite metric space.
class Measure {
 public:
  Measure(SpacePtr space, std::vector<double> weights);

  static Measure point_mass(SpacePtr space, std::size_t i);
  static Measure uniform(SpacePtr space, std::span<const std::size_t> support);
  static Measure uniform(SpacePtr space);

  const SpacePtr& space() const noexcept { return space_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::size_t size() const noexcept { return weights_.size(); }
  std::vector<std::size_t> support() const;

 private:
  SpacePtr space_;
  std::vector<double> weights_;
};

// Row i is the mass sent from source point i; columns index target points.
struct Coupling {
  Matrix plan;
};

// Dual witness: a 1-Lipschitz function with integral gap equal to the distance.
struct Potential {
  std::vector<double> values;
  double lipschitz = 0.0;  // measured seminorm, the certificate
};

struct W1Result {
  double value = 0.0;
  Coupling witness;
};

struct W1DualResult {
  double value = 0.0;
  Potential witness;  // value == integral(f d nu) - integral(f d mu)
};

double integrate(const Measure& mu, std::span<const double> f);

// Exact transportation problem between weight vectors a (rows) and b (columns) under
// `cost`. Solved by the transportation simplex on the supports; returns the optimal
// value and fills `plan` (rows x cols) when requested.
double solve_transport(std::span<const double> a, std::span<const double> b, const Matrix& cost,
                       Matrix* plan = nullptr);

W1Result wasserstein1(const Measure& mu, const Measure& nu);
double w1(const Measure& mu, const Measure& nu);

// Kantorovich-Rubinstein route: min-cost flow of mu - nu over the complete graph by
// successive shortest paths. Node potentials form the 1-Lipschitz witness.
W1DualResult wasserstein1_dual(const Measure& mu, const Measure& nu);

double wasserstein_inf(const Measure& mu, const Measure& nu);

// Bipartite feasibility: is there a coupling moving no mass farther than `threshold`?
bool bottleneck_feasible(const Measure& mu, const Measure& nu, double threshold);

// h maps source indices to indices of `target` (defaults to the source space).
Measure pushforward(const Measure& mu, std::span<const std::size_t> h, SpacePtr target = nullptr);

Measure mix(std::span<const Measure> measures, std::span<const double> lambdas);

struct ProbNet {
  std::vector<Measure> measures;
  std::size_t resolution = 0;
  double density = 0.0;  // every measure on the support is within this W1 distance of the net
};

// All measures on `support` (default: every point) with weights in {0, 1/m, ..., 1}.
ProbNet prob_net(const SpacePtr& space, std::size_t m, std::optional<std::vector<std::size_t>> support = {},
                 std::size_t cap = tolerances().prob_net_cap);

std::size_t prob_net_size(std::size_t points, std::size_t m);

// Pairwise W1 matrix of a list of measures on one space.
Matrix w1_matrix(std::span<const Measure> measures);

}  // namespace qmlab
