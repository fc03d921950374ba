#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "qmlab/distances.hpp"
#include "qmlab/lipgeometry.hpp"
#include "qmlab/metric_space.hpp"
#include "qmlab/transport.hpp"

namespace qmlab {

class DynamicsError : public DomainError {
 public:
  explicit DynamicsError(const std::string& what) : DomainError("dynamics", what) {}
};

// Self-map of a finite space. projection_error is the largest distance between an
// analytic image and the net point it was rounded to, over every analytic map the
// index map was built from (0 for exact index maps).
struct DynMap {
  DynMap(SpacePtr space, PointMap map, double projection_error = 0.0);
  SpacePtr space;
  PointMap map;
  double projection_error = 0.0;

  std::size_t operator()(std::size_t i) const { return map[i]; }
  std::size_t size() const noexcept { return map.size(); }
};

DynMap identity_map(const SpacePtr& x);
DynMap compose(const DynMap& a, const DynMap& b);  // a after b
bool is_bijective(const DynMap& h);
DynMap inverse(const DynMap& h);
DynMap power(const DynMap& h, long k);  // negative k needs a bijection

// Index shift by `steps` on an equally spaced circle net.
DynMap rotation(const SpacePtr& x, long steps);

// Map of the circle given on arc coordinates.
using CircleMap = std::function<double(double)>;

// x + (t/2) sin^2 x
CircleMap sine_pluck(double t);

// Rounds g to the nearest net point (lowest index on ties) and records the error.
DynMap project_circle_map(const SpacePtr& x, const CircleMap& g);

// g h g^-1. The analytic overload projects g first and requires a bijection of the net.
DynMap deform(const DynMap& g, const DynMap& h);
DynMap deform(const CircleMap& g, const DynMap& h);

// Extreme invariant measures. Every invariant measure of a deterministic map lives on
// its periodic points, so the extremes are the uniform measures on the cycles of the
// functional graph, for bijective and non-bijective maps alike.
struct InvariantSimplex {
  std::vector<Measure> extremes;
  std::vector<std::vector<std::size_t>> cycles;  // cycles[k] supports extremes[k]
  bool uniquely_ergodic() const noexcept { return extremes.size() == 1; }
};

InvariantSimplex invariant_measures(const DynMap& h);

// Mixtures of the extremes with weights in {0, 1/m, ..., 1}.
std::vector<Measure> hull_net(std::span<const Measure> extremes, std::size_t m,
                              std::size_t cap = tolerances().prob_net_cap);

// W1-Hausdorff distance between the resolution-m nets of two convex hulls.
double hull_hausdorff(std::span<const Measure> a, std::span<const Measure> b, std::size_t m);

double invariant_simplex_hausdorff(const DynMap& h1, const DynMap& h2, std::size_t m);

struct BirkhoffReport {
  double epsilon = 0.0;
  std::size_t rate = 0;        // least N with deviation(n) <= eps on [N, n_max]
  bool resolved = true;        // false when deviation(n_max) > eps
  std::vector<double> deviation;  // deviation[n-1] for n = 1..n_max
  std::string note;
};

// deviation(n) = sup over nucleus members f and points x of
// |(1/n) sum_{k<n} f(h^k x) - int f d(nu)|. Point masses suffice by affinity.
BirkhoffReport birkhoff_rate(const DynMap& h, const Nucleus& nucleus, double eps, std::size_t n_max);

// Least N whose tail stays within eps; n_max + 1 when the last entry fails.
std::size_t rate_from_curve(std::span<const double> deviation, double eps);

// h^-n..h^n (needs a bijection), or h^0..h^(q-1) when h has period q.
std::vector<DynMap> z_window(const DynMap& h, std::size_t n);
std::vector<DynMap> periodic_window(const DynMap& h);
std::size_t period(const DynMap& h);  // 0 when h is not a bijection

enum class EghMode {
  Strict,  // distortion, density and equivariance
  Relaxed  // density and equivariance only
};

struct EghDefects {
  double distortion = 0.0;
  double density = 0.0;
  double equivariance = 0.0;  // includes the projection errors of both windows
  double value(EghMode mode) const;
};

EghDefects egh_defects_at(std::span<const DynMap> a1, std::span<const DynMap> a2, const PointMap& f);

struct EghResult {
  double value = 0.0;
  BoundKind kind = BoundKind::Exact;
  PointMap forward, backward;
  EghDefects forward_defects, backward_defects;
};

EghResult egh_distance(std::span<const DynMap> a1, std::span<const DynMap> a2, EghMode mode = EghMode::Strict,
                       const SearchBudget& budget = {});

enum class CrossedMode { General, UniquelyErgodic };

// Lipschitz seminorm of mu -> int a0 d(mu) over the resolution-m net of the hull of
// `extremes`, with the W1 metric.
double restricted_seminorm(const Observable& a0, std::span<const Measure> extremes, std::size_t m = 2);

double crossed_product_seminorm(const Observable& a0, const DynMap& h, CrossedMode mode, std::size_t m = 2);

struct DominatedSeminorm {
  double general = 0.0;
  double full = 0.0;  // lipschitz_seminorm(a0)
};

DominatedSeminorm crossed_product_seminorm_dominated(const Observable& a0, const DynMap& h, std::size_t m = 2);

}  // namespace qmlab
