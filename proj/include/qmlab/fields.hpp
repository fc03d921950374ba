#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmlab/distances.hpp"
#include "qmlab/dynamics.hpp"
#include "qmlab/lipgeometry.hpp"
#include "qmlab/metric_space.hpp"

namespace qmlab {

class FieldError : public DomainError {
 public:
  explicit FieldError(const std::string& what) : DomainError("fields", what) {}
};

// Metrics on one label set, indexed by a parameter grid.
struct MetricField {
  std::vector<double> thetas;
  std::vector<SpacePtr> fibres;
  // Set by wave_metric_field: arc position of every grid point from the left end, and
  // the full string length, per fibre.
  std::vector<std::vector<double>> arc_positions;
  std::vector<double> arc_totals;
  double quadrature_error = 0.0;  // summed adaptive Simpson error estimates

  std::size_t size() const noexcept { return fibres.size(); }
  const std::vector<std::string>& labels() const { return fibres.front()->labels(); }
};

// Checks that every fibre lives on the same labels and the grid is strictly increasing.
void validate_field(const MetricField& f);

MetricField constant_field(const SpacePtr& base, std::vector<double> thetas);
// rho_theta = c(theta) rho
MetricField scaled_field(const SpacePtr& base, std::vector<double> thetas, const std::function<double(double)>& c);

// u(x,t) = sum_k sin(k pi x / L) (a_k cos(w_k t) + b_k sin(w_k t)), w_k = k pi c / L.
struct WaveProfile {
  std::vector<double> displacement;  // a_1, a_2, ...
  std::vector<double> velocity;      // b_1, b_2, ... (missing entries are 0)
  double speed = 1.0;
  double length = 3.14159265358979323846;

  double slope(double x, double t) const;  // du/dx
  double period() const { return 2.0 * length / speed; }
};

WaveProfile flat_profile(double length = 3.14159265358979323846);
WaveProfile single_mode(double amplitude, std::size_t k = 1, double length = 3.14159265358979323846);
// Triangular pluck of the given height at `peak` (default mid-string), released at rest.
WaveProfile triangular_pluck(std::size_t modes = 16, double height = 0.5, std::optional<double> peak = {},
                             double length = 3.14159265358979323846);

// int_a^b sqrt(1 + u_x^2) dx, written as (b - a) + int u_x^2 / (sqrt(1 + u_x^2) + 1).
struct ArcLength {
  double value = 0.0;
  double error = 0.0;
};
ArcLength arc_length(const WaveProfile& p, double t, double a, double b, double tol = 1e-10);

MetricField wave_metric_field(const WaveProfile& p, std::vector<double> ts, std::vector<double> xs,
                              double tol = 1e-10);

// Identifies the string ends: rho'(a,b) = min(rho(a,b), total - rho(a,b)) on each fibre.
MetricField circle_wave_metric(const MetricField& interval_field);

struct EnvelopeReport {
  std::vector<double> m, big_m;  // inf and sup of rho_theta / rho_0 over pairs
  Matrix k, big_k;               // k(s,t) = m_t / M_s, K(s,t) = M_t / m_s, 1 on the diagonal
  double max_violation = 0.0;    // worst excess of the sandwich over all fibre and point pairs
  bool ok() const noexcept { return max_violation <= 1e-9; }
};

EnvelopeReport lipschitz_envelope(const MetricField& f);

// min(f+/K, r) - min(f-/K, r)
std::vector<double> retract(std::span<const double> f, double k, double r);

struct NucleusFieldStep {
  std::size_t from = 0, to = 0;
  double k = 1.0;             // K used by the retraction from `from` into `to`
  double hausdorff = 0.0;     // uniform-norm Hausdorff distance between the two nuclei
  double displacement = 0.0;  // max |R f - f| over retracted members, both directions
  double bound = 0.0;         // retraction bound plus both net densities
  std::size_t violations = 0; // retracted members failing target membership
};

struct NucleusFieldReport {
  std::vector<Nucleus> nuclei;
  std::vector<NucleusFieldStep> steps;  // consecutive fibre pairs
  bool ok() const;
};

NucleusFieldReport nucleus_field(const MetricField& f, double r, double eps);

struct BirkhoffFieldReport {
  std::vector<BirkhoffReport> fibres;
  std::vector<std::size_t> rates;
  std::vector<std::size_t> usc_flags;  // grid indices whose neighbours all have larger rates
};

BirkhoffFieldReport birkhoff_field(const MetricField& f, const PointMap& h, double eps, double r, std::size_t n_max,
                                   double nucleus_eps);

enum class RotationMode {
  Exact,     // fibre t carries the points g_t(x_i); no rounding
  Projected  // g_t rounded to the fixed net; must be a bijection
};

struct RotationFieldOptions {
  RotationMode mode = RotationMode::Exact;
  std::size_t hull_resolution = 2;
  std::size_t simplex_resolution = 2;
};

struct RotationFieldReport {
  std::vector<double> ts;
  std::size_t steps = 0, q = 0, net_size = 0;
  std::vector<std::vector<std::vector<std::size_t>>> orbits;  // per t, cycles of the deformed rotation
  std::vector<SpacePtr> fibres;                               // per t, the points carrying the dynamics
  std::vector<DynMap> dynamics;                               // per t, the deformed rotation on its fibre
  std::vector<std::vector<Measure>> extremes;                 // per t, orbit uniforms on the fibre
  Matrix dhat, gamma, distortion;
  RotationMode mode = RotationMode::Exact;
};

// theta = p/q on an n-point circle of circumference 2 pi, deformed by g_t(x) = x + (t/2) sin^2 x.
RotationFieldReport rotation_field(std::size_t p, std::size_t q, std::vector<double> ts, std::size_t n,
                                   const RotationFieldOptions& options = {});

// Smallest multiple of q in [from, limit] whose net keeps every projected g_t bijective; 0 if none.
std::size_t minimal_rotation_net(std::size_t q, std::span<const double> ts, std::size_t from = 1,
                                 std::size_t limit = 4096);

struct ContinuityReport {
  std::vector<std::vector<double>> values;  // values[section][theta]
  std::vector<std::vector<std::size_t>> lower_jumps;  // interior grid indices below both neighbours by > tol
  std::vector<double> max_step;  // largest change between neighbouring samples, per section
};

// Sampled semicontinuity diagnostic on precomputed seminorm values.
ContinuityReport continuity_report(std::vector<std::vector<double>> values, double tol = 1e-9);

// L_theta(f_theta) for each section over the fibres of f.
ContinuityReport field_continuity_check(const MetricField& f, std::span<const std::vector<std::vector<double>>> sections,
                                        double tol = 1e-9);

}  // namespace qmlab
