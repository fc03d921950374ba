#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qmlab/config.hpp"

namespace qmlab {

// Square matrix of doubles, row-major. Used for distance matrices and couplings.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<std::vector<double>> to_rows() const;

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class AxiomKind { NotSquare, NonFinite, Asymmetry, NonzeroDiagonal, NegativeEntry, ZeroOffDiagonal, Triangle };

std::string to_string(AxiomKind k);

struct AxiomViolation {
  AxiomKind kind;
  std::size_t i = 0, j = 0, k = 0;  // k only meaningful for Triangle
  double excess = 0.0;              // amount by which the axiom fails
  std::string describe() const;
};

struct MetricReport {
  std::vector<AxiomViolation> violations;  // truncated at kMaxListed
  std::size_t total = 0;                   // full count, including truncated ones
  static constexpr std::size_t kMaxListed = 64;
  bool ok() const noexcept { return total == 0; }
  std::string summary() const;
};

class MetricError : public DomainError {
 public:
  explicit MetricError(const std::string& what) : DomainError("metric_space", what) {}
  MetricError(const std::string& what, MetricReport report)
      : DomainError("metric_space", what), report_(std::move(report)) {}
  const MetricReport& report() const noexcept { return report_; }

 private:
  MetricReport report_;
};

// Finite metric space; an epsilon-net standing in for a compact metric space.
// Immutable once built, shared by reference between measures, observables and maps.
class FiniteMetricSpace {
 public:
  std::size_t size() const noexcept { return labels_.size(); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  double operator()(std::size_t i, std::size_t j) const { return dist_(i, j); }
  const Matrix& dist() const noexcept { return dist_; }
  double diameter() const noexcept { return diameter_; }
  double min_positive_distance() const noexcept;

  // Circle coordinate (arc position) of each point, present only for circle_net outputs.
  const std::vector<double>& circle_coordinates() const noexcept { return circle_coords_; }
  double circumference() const noexcept { return circumference_; }
  bool is_circle() const noexcept { return !circle_coords_.empty(); }

  bool same_as(const FiniteMetricSpace& other) const noexcept;

 private:
  friend std::shared_ptr<const FiniteMetricSpace> make_space(std::vector<std::string>, Matrix);
  friend std::shared_ptr<const FiniteMetricSpace> circle_net(std::size_t, double);
  friend std::shared_ptr<const FiniteMetricSpace> circle_points(std::vector<double>, double);
  std::vector<std::string> labels_;
  Matrix dist_;
  double diameter_ = 0.0;
  std::vector<double> circle_coords_;
  double circumference_ = 0.0;
};

using SpacePtr = std::shared_ptr<const FiniteMetricSpace>;

MetricReport check_metric(const Matrix& d, double tol = tolerances().metric_axiom);

// Validates and wraps; throws MetricError carrying the full report on failure.
SpacePtr validate_metric(const Matrix& d, std::vector<std::string> labels = {});
SpacePtr make_space(std::vector<std::string> labels, Matrix d);

SpacePtr circle_net(std::size_t n, double circumference);
SpacePtr interval_net(std::size_t n, double length);
// Arc-length metric on given positions (reduced mod the circumference; must be distinct).
SpacePtr circle_points(std::vector<double> coords, double circumference);

enum class Combiner { Max, Sum };
SpacePtr product_space(const FiniteMetricSpace& t, const FiniteMetricSpace& x, Combiner combiner);

class SubsetRef {
 public:
  SubsetRef(SpacePtr space, std::vector<std::size_t> indices);
  static SubsetRef all(SpacePtr space);
  const SpacePtr& space() const noexcept { return space_; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t size() const noexcept { return indices_.size(); }

 private:
  SpacePtr space_;
  std::vector<std::size_t> indices_;
};

double radius(const FiniteMetricSpace& x);
double hausdorff_distance(const FiniteMetricSpace& x, const SubsetRef& a, const SubsetRef& b);

struct CoveringResult {
  std::size_t count = 0;
  bool exact = true;  // false: greedy upper bound (space larger than the exhaustive cap)
  std::vector<std::size_t> centers;
};

inline constexpr std::size_t kExhaustiveCoverCap = 20;

// Minimum number of open eps-balls centred at points of x that cover x.
CoveringResult covering_number(const FiniteMetricSpace& x, double eps);

// Greedy farthest-point eps-net seeded at `start`; ties go to the lowest index.
SubsetRef epsilon_net(const SpacePtr& x, double eps, std::size_t start = 0);

// Metric on the disjoint union of x and y (x first). Cross distances are
// min_z (dx(a,z) + dy(f(z),b)) + delta/2. Needs delta at least the distortion
// max |dx(z,z') - dy(f z, f z')|; smaller delta raises MetricError.
SpacePtr bridge_metric(const FiniteMetricSpace& x, const FiniteMetricSpace& y,
                       std::span<const std::size_t> f, double delta);

}  // namespace qmlab
