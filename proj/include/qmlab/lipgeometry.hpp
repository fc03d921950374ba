#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qmlab/metric_space.hpp"
#include "qmlab/transport.hpp"

namespace qmlab {

class LipError : public DomainError {
 public:
  explicit LipError(const std::string& what) : DomainError("lipgeometry", what) {}
};

// Real function on the points of a space.
struct Observable {
  Observable(SpacePtr space, std::vector<double> values);
  SpacePtr space;
  std::vector<double> values;
};

struct Seminorm {
  double value = 0.0;
  bool degenerate = false;  // singleton space: no pairs, value reported as 0
};

Seminorm lipschitz_seminorm(const Observable& f);
double lipschitz_constant(const FiniteMetricSpace& x, std::span<const double> f);

struct Generator {
  Observable f;
  double seminorm;  // L(f); the generator enters as f / L(f)
};

// rho(s,t) = max over generators of |int g ds - int g dt| / L(g). Generators with
// L = 0 are constants and contribute nothing.
Matrix state_metric(std::span<const Measure> states, std::span<const Generator> generators);

// sup over state pairs at positive distance of |f(s) - f(t)| / metric(s,t).
double lipnorm_from_state_metric(std::span<const double> values, const Matrix& metric);

// Values int f d(mu) per state.
std::vector<double> extend_to_simplex(const Observable& f, std::span<const Measure> states);

// A finite eps-net (uniform norm) of {f : |f| <= r, f 1-Lipschitz}.
//   Stored:   members held row-major, sorted lexicographically, duplicates removed.
//   Streamed: members regenerated on every pass; for nets too large to hold.
//   Exact:    stands for the whole polytope; sup-gaps over it are W1 distances.
enum class NucleusKind { Stored, Streamed, Exact };

struct Nucleus {
  SpacePtr space;
  double r = 0.0;
  double density = 0.0;
  double grid_step = 0.0;
  NucleusKind kind = NucleusKind::Stored;
  std::size_t count = 0;  // stored members; 0 for streamed and exact nuclei
  std::vector<double> data;

  bool exact() const noexcept { return kind == NucleusKind::Exact; }
  std::span<const double> function(std::size_t k) const {
    return {data.data() + k * space->size(), space->size()};
  }
  Observable observable(std::size_t k) const;
};

Nucleus nucleus_net(const SpacePtr& x, double r, double eps, std::size_t cap = tolerances().nucleus_cap,
                    NucleusKind kind = NucleusKind::Stored);
Nucleus exact_nucleus(const SpacePtr& x, double r);

// Calls visit(f) for every member (stored or regenerated). Not defined for exact nuclei.
void for_each_member(const Nucleus& nucleus, const std::function<void(std::span<const double>)>& visit);

// Grid functions the construction visits, counted without building the net.
std::size_t nucleus_candidate_count(const SpacePtr& x, double r, double eps, std::size_t stop_after);

struct MemberCheck {
  bool ok = true;
  double norm_excess = 0.0;  // max(|f| - r), clipped at 0
  double lip_excess = 0.0;   // max(|f(x)-f(y)| - d(x,y)), clipped at 0
  std::size_t i = 0, j = 0;  // worst pair when lip_excess > 0
};

MemberCheck nucleus_member_check(const FiniteMetricSpace& x, double r, std::span<const double> f,
                                 double tol = tolerances().lipschitz);

// McShane projection onto the polytope: min_y (g(y) + d(., y)) clipped to [-r, r].
std::vector<double> mcshane_project(const FiniteMetricSpace& x, double r, std::span<const double> g);

// sup over the nucleus of |int f d(mu) - int f d(nu)|.
double nucleus_gap(const Nucleus& nucleus, const Measure& mu, const Measure& nu);

// Gaps of many measures against one reference, in a single pass over the members.
std::vector<double> nucleus_gaps(const Nucleus& nucleus, std::span<const Measure> mus, const Measure& nu);

// Empirical density certificate: max over `samples` random polytope members of the
// uniform distance to the nearest member.
double nucleus_probe_density(const Nucleus& nucleus, std::size_t samples, std::uint64_t seed);

// Generators for state_metric from a nucleus (each member with its own seminorm).
std::vector<Generator> nucleus_generators(const Nucleus& nucleus);

// Point-mass state metric generated by a nucleus, one pass over the members. Each
// member enters normalized by its own Lipschitz constant.
Matrix nucleus_state_metric(const Nucleus& nucleus);

// ----- matrix-valued observables ------------------------------------------------

struct MatrixObservable {
  MatrixObservable(SpacePtr space, std::vector<Eigen::MatrixXcd> values);
  SpacePtr space;
  std::size_t n = 0;
  std::vector<Eigen::MatrixXcd> values;
};

double operator_norm(const Eigen::MatrixXcd& hermitian);

// Normalized trace: tr(F(x)) / n.
Observable matrix_trace_observable(const MatrixObservable& f);

struct MatrixMembership {
  bool member = true;
  double max_norm = 0.0;
  std::size_t worst_point = 0;
  std::optional<std::pair<std::size_t, std::size_t>> violating_pair;
  double excess = 0.0;  // ||F(x)-F(y)|| - d(x,y) at the violating pair
  std::string describe() const;
};

MatrixMembership matrix_nucleus_membership(const MatrixObservable& f, double r);

enum class DecomposeAnchor {
  Midrange,      // c = (max + min)/2 of the trace observable; G always lands in the nucleus
  DiameterPoint  // c = trace value at the first point of a diameter pair
};

struct Decomposition {
  MatrixObservable g;
  double c = 0.0;
  MatrixObservable h;
  std::size_t x0 = 0, x1 = 0;  // lexicographically first pair realizing the diameter
  double reconstruction_error = 0.0;
  MatrixMembership g_membership;
  double h_trace_max = 0.0;  // max_x |tr H(x)| / n
};

Decomposition nucleus_decompose(const MatrixObservable& f, double r,
                                DecomposeAnchor anchor = DecomposeAnchor::Midrange);

}  // namespace qmlab
