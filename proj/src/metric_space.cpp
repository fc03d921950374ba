#include "qmlab/metric_space.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>

namespace qmlab {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.front().size();
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) throw MetricError("ragged matrix: row " + std::to_string(i));
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<std::vector<double>> Matrix::to_rows() const {
  std::vector<std::vector<double>> out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i].assign(row(i).begin(), row(i).end());
  return out;
}

std::string to_string(AxiomKind k) {
  switch (k) {
    case AxiomKind::NotSquare: return "not square";
    case AxiomKind::NonFinite: return "non-finite entry";
    case AxiomKind::Asymmetry: return "asymmetry";
    case AxiomKind::NonzeroDiagonal: return "nonzero diagonal";
    case AxiomKind::NegativeEntry: return "negative entry";
    case AxiomKind::ZeroOffDiagonal: return "zero off-diagonal distance";
    case AxiomKind::Triangle: return "triangle violation";
  }
  return "unknown";
}

std::string AxiomViolation::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (kind == AxiomKind::Triangle) {
    os << " (" << i << "," << j << "," << k << "): d(" << i << "," << k << ") exceeds d(" << i << "," << j
       << ")+d(" << j << "," << k << ") by " << excess;
  } else if (kind != AxiomKind::NotSquare) {
    os << " at (" << i << "," << j << ")";
    if (excess != 0.0) os << " by " << excess;
  }
  return os.str();
}

std::string MetricReport::summary() const {
  if (ok()) return "valid metric";
  std::ostringstream os;
  os << total << " violation(s)";
  for (const auto& v : violations) os << "; " << v.describe();
  if (total > violations.size()) os << "; ...";
  return os.str();
}

MetricReport check_metric(const Matrix& d, double tol) {
  MetricReport rep;
  auto add = [&](AxiomViolation v) {
    ++rep.total;
    if (rep.violations.size() < MetricReport::kMaxListed) rep.violations.push_back(v);
  };
  if (d.rows() != d.cols()) {
    add({AxiomKind::NotSquare});
    return rep;
  }
  const std::size_t n = d.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(d(i, j))) add({AxiomKind::NonFinite, i, j});
  if (!rep.ok()) return rep;

  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(d(i, i)) > tol) add({AxiomKind::NonzeroDiagonal, i, i, 0, std::abs(d(i, i))});
    for (std::size_t j = i + 1; j < n; ++j) {
      const double gap = std::abs(d(i, j) - d(j, i));
      if (gap > tol) add({AxiomKind::Asymmetry, i, j, 0, gap});
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (d(i, j) < -tol) add({AxiomKind::NegativeEntry, i, j, 0, -d(i, j)});
      else if (i < j && d(i, j) <= tol && d(j, i) <= tol) add({AxiomKind::ZeroOffDiagonal, i, j});
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) {
        if (i == j || j == k || i == k) continue;
        const double excess = d(i, k) - (d(i, j) + d(j, k));
        if (excess > tol) add({AxiomKind::Triangle, i, j, k, excess});
      }
  return rep;
}

SpacePtr make_space(std::vector<std::string> labels, Matrix d) {
  auto rep = check_metric(d);
  if (!rep.ok()) throw MetricError("invalid metric: " + rep.summary(), std::move(rep));
  const std::size_t n = d.rows();
  if (n == 0) throw MetricError("empty space");
  if (labels.empty()) {
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(std::to_string(i));
  }
  if (labels.size() != n) throw MetricError("label count does not match matrix size");
  // Symmetrize exactly and zero the diagonal so downstream code sees a clean matrix.
  for (std::size_t i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = 0.5 * (d(i, j) + d(j, i));
      d(i, j) = d(j, i) = v;
    }
  }
  auto s = std::make_shared<FiniteMetricSpace>();
  s->labels_ = std::move(labels);
  s->dist_ = std::move(d);
  s->diameter_ = s->dist_.data().empty() ? 0.0 : *std::max_element(s->dist_.data().begin(), s->dist_.data().end());
  return s;
}

SpacePtr validate_metric(const Matrix& d, std::vector<std::string> labels) {
  return make_space(std::move(labels), d);
}

double FiniteMetricSpace::min_positive_distance() const noexcept {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i + 1; j < size(); ++j) best = std::min(best, dist_(i, j));
  return best;
}

bool FiniteMetricSpace::same_as(const FiniteMetricSpace& other) const noexcept {
  return this == &other || (labels_ == other.labels_ && dist_ == other.dist_);
}

SpacePtr circle_net(std::size_t n, double circumference) {
  if (n < 2) throw MetricError("circle_net needs at least 2 points");
  if (!(circumference > 0.0)) throw MetricError("circle_net needs a positive circumference");
  const double step = circumference / static_cast<double>(n);
  Matrix d(n, n);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back("c" + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t gap = i > j ? i - j : j - i;
      d(i, j) = static_cast<double>(std::min(gap, n - gap)) * step;
    }
  }
  auto base = make_space(std::move(labels), std::move(d));
  auto s = std::make_shared<FiniteMetricSpace>(*base);
  s->circumference_ = circumference;
  s->circle_coords_.resize(n);
  for (std::size_t i = 0; i < n; ++i) s->circle_coords_[i] = static_cast<double>(i) * step;
  return s;
}

SpacePtr circle_points(std::vector<double> coords, double circumference) {
  if (coords.size() < 2) throw MetricError("circle_points needs at least 2 points");
  if (!(circumference > 0.0)) throw MetricError("circle_points needs a positive circumference");
  const std::size_t n = coords.size();
  for (double& c : coords) {
    if (!std::isfinite(c)) throw MetricError("circle_points: non-finite coordinate");
    c = std::fmod(c, circumference);
    if (c < 0.0) c += circumference;
  }
  Matrix d(n, n);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back("p" + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) {
      const double a = std::abs(coords[i] - coords[j]);
      d(i, j) = std::min(a, circumference - a);
    }
  }
  auto base = make_space(std::move(labels), std::move(d));
  auto s = std::make_shared<FiniteMetricSpace>(*base);
  s->circumference_ = circumference;
  s->circle_coords_ = std::move(coords);
  return s;
}

SpacePtr interval_net(std::size_t n, double length) {
  if (n < 2) throw MetricError("interval_net needs at least 2 points");
  if (!(length > 0.0)) throw MetricError("interval_net needs a positive length");
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = length * static_cast<double>(i) / static_cast<double>(n - 1);
  Matrix d(n, n);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back("x" + std::to_string(i));
    for (std::size_t j = 0; j < n; ++j) d(i, j) = std::abs(x[i] - x[j]);
  }
  return make_space(std::move(labels), std::move(d));
}

SpacePtr product_space(const FiniteMetricSpace& t, const FiniteMetricSpace& x, Combiner combiner) {
  const std::size_t nt = t.size(), nx = x.size();
  Matrix d(nt * nx, nt * nx);
  std::vector<std::string> labels;
  labels.reserve(nt * nx);
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t b = 0; b < nx; ++b) labels.push_back("(" + t.labels()[a] + "," + x.labels()[b] + ")");
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t b = 0; b < nx; ++b)
      for (std::size_t c = 0; c < nt; ++c)
        for (std::size_t e = 0; e < nx; ++e) {
          const double dt = t(a, c), dx = x(b, e);
          d(a * nx + b, c * nx + e) = combiner == Combiner::Max ? std::max(dt, dx) : dt + dx;
        }
  return make_space(std::move(labels), std::move(d));
}

SubsetRef::SubsetRef(SpacePtr space, std::vector<std::size_t> indices)
    : space_(std::move(space)), indices_(std::move(indices)) {
  if (!space_) throw MetricError("subset without a space");
  if (indices_.empty()) throw MetricError("empty subset");
  std::vector<std::size_t> sorted = indices_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw MetricError("duplicate subset index");
  if (sorted.back() >= space_->size()) throw MetricError("subset index out of range");
}

SubsetRef SubsetRef::all(SpacePtr space) {
  std::vector<std::size_t> idx(space->size());
  std::iota(idx.begin(), idx.end(), 0);
  return SubsetRef(std::move(space), std::move(idx));
}

double radius(const FiniteMetricSpace& x) { return 0.5 * x.diameter(); }

double hausdorff_distance(const FiniteMetricSpace& x, const SubsetRef& a, const SubsetRef& b) {
  if (!a.space()->same_as(x) || !b.space()->same_as(x)) throw MetricError("subsets of a different space");
  auto directed = [&](const SubsetRef& from, const SubsetRef& to) {
    double worst = 0.0;
    for (std::size_t p : from.indices()) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t q : to.indices()) best = std::min(best, x(p, q));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

namespace {

using Mask = std::uint32_t;

// Depth-first search for a cover of `target` using exactly `k` more balls, choosing
// balls in increasing index order. The first uncovered point must be covered by some
// ball, which keeps the branching small.
bool cover_search(const std::vector<Mask>& balls, Mask covered, Mask target, std::size_t k,
                  std::vector<std::size_t>& chosen) {
  if ((covered & target) == target) return true;
  if (k == 0) return false;
  const Mask missing = target & ~covered;
  const unsigned first = static_cast<unsigned>(std::countr_zero(missing));
  for (std::size_t c = 0; c < balls.size(); ++c) {
    if (!(balls[c] & (Mask{1} << first))) continue;
    chosen.push_back(c);
    if (cover_search(balls, covered | balls[c], target, k - 1, chosen)) return true;
    chosen.pop_back();
  }
  return false;
}

}  // namespace

CoveringResult covering_number(const FiniteMetricSpace& x, double eps) {
  if (!(eps > 0.0)) throw MetricError("covering_number needs eps > 0");
  const std::size_t n = x.size();
  CoveringResult res;
  if (n <= kExhaustiveCoverCap) {
    std::vector<Mask> balls(n, 0);
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t p = 0; p < n; ++p)
        if (x(c, p) < eps) balls[c] |= Mask{1} << p;
    const Mask target = n == 32 ? ~Mask{0} : ((Mask{1} << n) - 1);
    for (std::size_t k = 1; k <= n; ++k) {
      std::vector<std::size_t> chosen;
      if (cover_search(balls, 0, target, k, chosen)) {
        res.count = k;
        res.centers = std::move(chosen);
        res.exact = true;
        return res;
      }
    }
  }
  // Greedy set cover: repeatedly take the ball covering the most uncovered points.
  std::vector<bool> covered(n, false);
  std::size_t left = n;
  while (left > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t gain = 0;
      for (std::size_t p = 0; p < n; ++p)
        if (!covered[p] && x(c, p) < eps) ++gain;
      if (gain > best_gain) best = c, best_gain = gain;
    }
    res.centers.push_back(best);
    for (std::size_t p = 0; p < n; ++p)
      if (!covered[p] && x(best, p) < eps) covered[p] = true, --left;
  }
  res.count = res.centers.size();
  res.exact = false;
  return res;
}

SubsetRef epsilon_net(const SpacePtr& x, double eps, std::size_t start) {
  if (!(eps > 0.0)) throw MetricError("epsilon_net needs eps > 0");
  const std::size_t n = x->size();
  if (start >= n) throw MetricError("epsilon_net start index out of range");
  std::vector<std::size_t> net{start};
  std::vector<double> gap(n);
  for (std::size_t p = 0; p < n; ++p) gap[p] = (*x)(start, p);
  while (true) {
    std::size_t far = 0;
    for (std::size_t p = 1; p < n; ++p)
      if (gap[p] > gap[far]) far = p;
    if (gap[far] <= eps) break;
    net.push_back(far);
    for (std::size_t p = 0; p < n; ++p) gap[p] = std::min(gap[p], (*x)(far, p));
  }
  return SubsetRef(x, std::move(net));
}

SpacePtr bridge_metric(const FiniteMetricSpace& x, const FiniteMetricSpace& y, std::span<const std::size_t> f,
                       double delta) {
  if (!(delta > 0.0)) throw MetricError("bridge_metric needs delta > 0");
  if (f.size() != x.size()) throw MetricError("bridge_metric: map must be total on X");
  for (std::size_t v : f)
    if (v >= y.size()) throw MetricError("bridge_metric: map value out of range");
  const std::size_t nx = x.size(), ny = y.size();
  // Triangles through the other side need |d_X(z,z') - d_Y(f z, f z')| <= delta.
  double distortion = 0.0;
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < nx; ++b) distortion = std::max(distortion, std::abs(x(a, b) - y(f[a], f[b])));
  if (distortion > delta + tolerances().metric_axiom)
    throw MetricError("bridge_metric: delta " + std::to_string(delta) + " is below the distortion " +
                      std::to_string(distortion) + " of the map");
  Matrix d(nx + ny, nx + ny);
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < nx; ++j) d(i, j) = x(i, j);
  for (std::size_t i = 0; i < ny; ++i)
    for (std::size_t j = 0; j < ny; ++j) d(nx + i, nx + j) = y(i, j);
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < ny; ++b) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t z = 0; z < nx; ++z) best = std::min(best, x(a, z) + y(f[z], b));
      d(a, nx + b) = d(nx + b, a) = best + 0.5 * delta;
    }
  std::vector<std::string> labels;
  for (const auto& l : x.labels()) labels.push_back("X:" + l);
  for (const auto& l : y.labels()) labels.push_back("Y:" + l);
  auto rep = check_metric(d);
  if (!rep.ok()) throw MetricError("bridge_metric produced a non-metric (implementation bug): " + rep.summary());
  return make_space(std::move(labels), std::move(d));
}

}  // namespace qmlab
