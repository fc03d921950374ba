#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmlab/metric_space.hpp"
#include "qmlab/transport.hpp"

namespace qmlab {

class DistanceError : public DomainError {
 public:
  explicit DistanceError(const std::string& what) : DomainError("distances", what) {}
};

using PointMap = std::vector<std::size_t>;

enum class BoundKind { Exact, Upper };
std::string to_string(BoundKind k);

struct Correspondence {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

// max |d_X(x,x') - d_Y(y,y')| over pairs of related pairs; throws if R does not cover both sides.
double correspondence_distortion(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const Correspondence& r);

struct SearchBudget {
  std::size_t max_pairs = 4'000'000;   // exhaustive when the candidate count fits
  std::size_t max_local_rounds = 200;  // local search sweeps otherwise
};

struct GhResult {
  double value = 0.0;
  BoundKind kind = BoundKind::Exact;
  double lower_bound = 0.0;  // |diam X - diam Y| / 2
  Correspondence witness;
};

// Half the least distortion of a correspondence. Every correspondence contains the
// graph of some f: X->Y joined with the transposed graph of some g: Y->X, and distortion
// only grows with the relation, so the search runs over map pairs.
GhResult gh_distance(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const SearchBudget& budget = {});

// A W1 net of Prob(boundary). Nets built by simplex_net with one resolution m are
// closed under pushforward by boundary maps, which the gap searches rely on.
struct SimplexNet {
  SpacePtr boundary;
  std::vector<Measure> measures;
  double density = 0.0;
  std::size_t resolution = 0;
};

SimplexNet simplex_net(const SpacePtr& boundary, std::size_t m);
// Wraps explicit measures; point masses of the boundary are appended when missing.
SimplexNet simplex_net(const SpacePtr& boundary, std::vector<Measure> measures, double density);

struct AlmostIsometryReport {
  PointMap forward;
  PointMap backward;                // empty when only one map is involved
  double boundary_distortion = 0.0; // over boundary point pairs
  double distortion = 0.0;          // over net pairs, via pushforward (max of both maps when backward is set)
  double inversion_defect = 0.0;    // max W1(g f mu, mu), W1(f g nu, nu) over the nets
  double density_defect = 0.0;      // max over nu in the target net of min over mu of W1(f mu, nu)
  BoundKind kind = BoundKind::Exact;
  double gamma() const;             // max(distortion, inversion_defect)
};

// Distortion and surjectivity defect of a single boundary map.
AlmostIsometryReport epsilon_isometry_check(const PointMap& f, const SimplexNet& sx, const SimplexNet& sy);

// Defects of a given map pair (no search).
AlmostIsometryReport intertwining_gap_at(const SimplexNet& sx, const SimplexNet& sy, const PointMap& f,
                                         const PointMap& g);

struct GapResult {
  double gamma = 0.0;
  AlmostIsometryReport report;
};

GapResult intertwining_gap(const SimplexNet& sx, const SimplexNet& sy, const SearchBudget& budget = {});

struct FukayaResult {
  double value = 0.0;
  AlmostIsometryReport report;
};

FukayaResult fukaya_distance(const SimplexNet& sx, const SimplexNet& sy, const SearchBudget& budget = {});

struct DqResult {
  double value = 0.0;
  double delta = 0.0;
};

// Hausdorff distance between the two nets inside Prob of the bridge space. When delta
// is not given it is the intertwining-gap estimate of the pair (or a tiny positive
// floor when that is 0).
DqResult dq_upper(const SimplexNet& sx, const SimplexNet& sy, const PointMap& f, std::optional<double> delta = {},
                  const SearchBudget& budget = {});

// Sup over pairs of |W1(f mu, f mu') - W1(mu, mu')| on a net.
double net_distortion(const PointMap& f, const SimplexNet& sx, const FiniteMetricSpace& target);
double map_distortion(const PointMap& f, const FiniteMetricSpace& x, const FiniteMetricSpace& y);

}  // namespace qmlab
