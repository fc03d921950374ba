#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qmlab/dynamics.hpp"
#include "qmlab/lipgeometry.hpp"
#include "qmlab/metric_space.hpp"
#include "qmlab/transport.hpp"

namespace qmlab {

class MarkovError : public DomainError {
 public:
  explicit MarkovError(const std::string& what) : DomainError("markov", what) {}
};

// splitmix64, pinned so trajectories are identical on every platform.
class SplitMix64 {
 public:
  static constexpr const char* kName = "splitmix64-v1";
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform();  // [0, 1) with 53 random bits

 private:
  std::uint64_t state_;
};

// Seed of an independent stream, derived from a base seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct MarkovKernel {
  MarkovKernel(SpacePtr space, Matrix p);
  SpacePtr space;
  Matrix p;  // row x: distribution of the next state from x
};

struct RandomMapFamily {
  RandomMapFamily(std::vector<DynMap> maps, std::vector<double> probabilities);
  std::vector<DynMap> maps;
  std::vector<double> probabilities;
  const SpacePtr& space() const { return maps.front().space; }
};

MarkovKernel kernel_from_maps(const RandomMapFamily& f);

// Row of the kernel as a measure.
Measure transition(const MarkovKernel& k, std::size_t x);

// mu P
Measure step(const Measure& mu, const MarkovKernel& k);

struct StationaryResult {
  std::vector<Measure> measures;  // one per closed communicating class
  bool unique() const noexcept { return measures.size() == 1; }
};

StationaryResult stationary_measures(const MarkovKernel& k);

// Index drawn from `weights` by inverse CDF over the fixed order.
std::size_t sample_index(std::span<const double> weights, double u);

// x0, x1, ..., xn
std::vector<std::size_t> simulate(const MarkovKernel& k, std::size_t x0, std::size_t n, std::uint64_t seed);

struct LdpReport {
  double eps = 0.0;
  std::vector<std::size_t> n_values;
  std::vector<double> probabilities;
  std::vector<std::size_t> exceed_counts;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::string rng = SplitMix64::kName;
  std::vector<std::size_t> start_net;  // eps/4-net of start points
  double c1 = 0.0, c2 = 0.0;           // p ~ c1 exp(-c2 n eps^2)
  double r_squared = 0.0;
  std::size_t fitted_points = 0;
  std::vector<std::string> warnings;
};

struct LdpOptions {
  std::size_t trials = 10000;
  std::uint64_t seed = 0;
};

// Per trial, one map sequence drives every start point of the eps/4-net. The event at
// n is that some start point has sup_f |(1/n) sum_{k<n} f(x_k) - int f d(nu)| > eps.
// Trajectories are shared across the n values (prefixes of one run per trial).
LdpReport ldp_experiment(const RandomMapFamily& f, const Nucleus& nucleus, double eps,
                         std::span<const std::size_t> n_values, const LdpOptions& options = {});

struct LinearFit {
  double intercept = 0.0, slope = 0.0, r_squared = 0.0;
};

LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// Refits (c1, c2) from the curve, dropping zero probabilities.
void fit_ldp(LdpReport& r);

// p(n_{i+1}) <= p(n_i) + z * (combined standard error) + 1/trials for every i.
bool nonincreasing_within_bands(const LdpReport& r, double z = 3.0);

// 16-point net of the middle-thirds Cantor set: x(w) = sum 2 w_i 3^-i, w in {0,1}^4.
SpacePtr cantor_net(std::size_t depth = 4);

// The two contractions w -> (a, w1, ..., w_{depth-1}), a in {0, 1}, with probability 1/2 each.
RandomMapFamily two_contractions(const SpacePtr& cantor, std::size_t depth = 4);

}  // namespace qmlab
