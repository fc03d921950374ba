#include "qmlab/lipgeometry.hpp"
#include "qmlab/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include <limits>

namespace qmlab {

Observable::Observable(SpacePtr s, std::vector<double> v) : space(std::move(s)), values(std::move(v)) {
  if (!space) throw LipError("observable without a space");
  if (values.size() != space->size()) throw LipError("observable size does not match the space");
  for (double x : values)
    if (!std::isfinite(x)) throw LipError("observable has a non-finite value");
}

double lipschitz_constant(const FiniteMetricSpace& x, std::span<const double> f) {
  double best = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) best = std::max(best, std::abs(f[i] - f[j]) / x(i, j));
  return best;
}

Seminorm lipschitz_seminorm(const Observable& f) {
  if (f.space->size() < 2) return {0.0, true};
  return {lipschitz_constant(*f.space, f.values), false};
}

Matrix state_metric(std::span<const Measure> states, std::span<const Generator> generators) {
  if (generators.empty()) throw LipError("state_metric needs at least one generator");
  const std::size_t s = states.size();
  Matrix out(s, s, 0.0);
  std::vector<double> integral(s);
  for (const Generator& g : generators) {
    if (!std::isfinite(g.seminorm) || g.seminorm < 0.0) throw LipError("generator seminorm must be finite and >= 0");
    if (g.seminorm == 0.0) continue;
    for (std::size_t k = 0; k < s; ++k) integral[k] = integrate(states[k], g.f.values) / g.seminorm;
    for (std::size_t a = 0; a < s; ++a)
      for (std::size_t b = a + 1; b < s; ++b) {
        const double v = std::abs(integral[a] - integral[b]);
        if (v > out(a, b)) out(a, b) = out(b, a) = v;
      }
  }
  // A max of seminorm differences is a pseudometric; anything else is a bug.
  for (std::size_t a = 0; a < s; ++a)
    for (std::size_t b = 0; b < s; ++b)
      for (std::size_t c = 0; c < s; ++c)
        if (out(a, c) > out(a, b) + out(b, c) + 1e-9) throw LipError("state_metric produced a non-pseudometric");
  return out;
}

double lipnorm_from_state_metric(std::span<const double> values, const Matrix& metric) {
  if (metric.rows() != values.size() || metric.cols() != values.size()) throw LipError("size mismatch");
  double best = 0.0;
  bool any = false;
  for (std::size_t a = 0; a < values.size(); ++a)
    for (std::size_t b = a + 1; b < values.size(); ++b) {
      if (metric(a, b) <= 0.0) continue;
      any = true;
      best = std::max(best, std::abs(values[a] - values[b]) / metric(a, b));
    }
  if (!any) throw LipError("state metric is degenerate: no pair at positive distance");
  return best;
}

std::vector<double> extend_to_simplex(const Observable& f, std::span<const Measure> states) {
  std::vector<double> out;
  out.reserve(states.size());
  for (const Measure& m : states) {
    if (!m.space()->same_as(*f.space)) throw LipError("state lives on a different space");
    out.push_back(integrate(m, f.values));
  }
  return out;
}

// ----- nuclei --------------------------------------------------------------------

Observable Nucleus::observable(std::size_t k) const {
  auto f = function(k);
  return Observable(space, std::vector<double>(f.begin(), f.end()));
}

std::vector<double> mcshane_project(const FiniteMetricSpace& x, double r, std::span<const double> g) {
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double v = g[i];
    for (std::size_t j = 0; j < n; ++j) v = std::min(v, g[j] + x(i, j));
    out[i] = std::clamp(v, -r, r);
  }
  return out;
}

namespace {

// Visits the McShane projection of every grid function k * step with
// |k step| <= r + step/2 and |k_x - k_y| step <= d(x,y) + step. Every polytope member
// rounds to one of these grid functions, and projection moves it by at most step/2,
// so step = 2 eps gives an eps-net. Partial minima are carried down the recursion so
// each leaf costs O(n).
template <typename Visit>
void enumerate_members(const FiniteMetricSpace& x, double r, double step, bool project, Visit&& visit) {
  const std::size_t n = x.size();
  const auto kmax = static_cast<long>(std::floor((r + 0.5 * step) / step + 1e-9));
  std::vector<std::vector<long>> reach(n, std::vector<long>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) reach[i][j] = static_cast<long>(std::floor(x(i, j) / step + 1.0 + 1e-9));
  std::vector<long> k(n);
  // partial[pos * n + i] = min over y < pos of g(y) + d(i, y)
  std::vector<double> partial((n + 1) * n, std::numeric_limits<double>::infinity());
  std::vector<double> dist(x.dist().data());
  std::vector<double> f(n);
  auto rec = [&](auto&& self, std::size_t pos) -> bool {
    if (pos == n) {
      if (project)
        for (std::size_t i = 0; i < n; ++i) f[i] = std::clamp(partial[n * n + i], -r, r);
      return visit(std::span<const double>(f));
    }
    long lo = -kmax, hi = kmax;
    for (std::size_t j = 0; j < pos; ++j) {
      lo = std::max(lo, k[j] - reach[pos][j]);
      hi = std::min(hi, k[j] + reach[pos][j]);
    }
    for (long v = lo; v <= hi; ++v) {
      k[pos] = v;
      if (project) {
        const double g = static_cast<double>(v) * step;
        const double* from = partial.data() + pos * n;
        double* to = partial.data() + (pos + 1) * n;
        for (std::size_t i = 0; i < n; ++i) to[i] = std::min(from[i], g + dist[i * n + pos]);
      }
      if (!self(self, pos + 1)) return false;
    }
    return true;
  };
  rec(rec, 0);
}

double grid_step_for(double eps) { return 2.0 * eps; }

}  // namespace

std::size_t nucleus_candidate_count(const SpacePtr& x, double r, double eps, std::size_t stop_after) {
  std::size_t count = 0;
  enumerate_members(*x, r, grid_step_for(eps), false, [&](std::span<const double>) { return ++count < stop_after; });
  return count;
}

Nucleus nucleus_net(const SpacePtr& x, double r, double eps, std::size_t cap, NucleusKind kind) {
  if (!(eps > 0.0)) throw LipError("nucleus_net needs eps > 0");
  if (r < radius(*x) - 1e-12) throw LipError("nucleus_net needs r >= radius of the space");
  if (kind == NucleusKind::Exact) return exact_nucleus(x, r);
  const std::size_t n = x->size();
  const double step = grid_step_for(eps);
  Nucleus nu;
  nu.space = x;
  nu.r = r;
  nu.density = eps;
  nu.grid_step = step;
  nu.kind = kind;
  if (kind == NucleusKind::Streamed) return nu;

  std::vector<double> raw;
  std::size_t candidates = 0;
  enumerate_members(*x, r, step, true, [&](std::span<const double> f) {
    if (++candidates > cap) return false;
    raw.insert(raw.end(), f.begin(), f.end());
    return true;
  });
  if (candidates > cap)
    throw LipError("nucleus_net: more than " + std::to_string(cap) + " members at eps = " + std::to_string(eps) +
                   "; raise the cap, stream the net, or use a larger eps");

  std::vector<std::size_t> order(candidates);
  std::iota(order.begin(), order.end(), 0);
  auto row = [&](std::size_t k) { return raw.begin() + static_cast<std::ptrdiff_t>(k * n); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(row(a), row(a) + n, row(b), row(b) + n);
  });
  nu.data.reserve(raw.size());
  for (std::size_t idx = 0; idx < order.size(); ++idx) {
    if (idx > 0 && std::equal(row(order[idx]), row(order[idx]) + n, row(order[idx - 1]))) continue;
    nu.data.insert(nu.data.end(), row(order[idx]), row(order[idx]) + n);
  }
  nu.count = n == 0 ? 0 : nu.data.size() / n;
  nu.data.shrink_to_fit();
  return nu;
}

Nucleus exact_nucleus(const SpacePtr& x, double r) {
  if (r < radius(*x) - 1e-12) throw LipError("exact_nucleus needs r >= radius of the space");
  Nucleus nu;
  nu.space = x;
  nu.r = r;
  nu.kind = NucleusKind::Exact;
  return nu;
}

namespace {

template <typename Visit>
void visit_members(const Nucleus& nucleus, Visit&& visit) {
  switch (nucleus.kind) {
    case NucleusKind::Exact:
      throw LipError("an exact nucleus has no member list");
    case NucleusKind::Stored:
      for (std::size_t k = 0; k < nucleus.count; ++k) visit(nucleus.function(k));
      return;
    case NucleusKind::Streamed:
      enumerate_members(*nucleus.space, nucleus.r, nucleus.grid_step, true, [&](std::span<const double> f) {
        visit(f);
        return true;
      });
      return;
  }
}

}  // namespace

void for_each_member(const Nucleus& nucleus, const std::function<void(std::span<const double>)>& visit) {
  visit_members(nucleus, visit);
}

MemberCheck nucleus_member_check(const FiniteMetricSpace& x, double r, std::span<const double> f, double tol) {
  MemberCheck c;
  for (std::size_t i = 0; i < x.size(); ++i) c.norm_excess = std::max(c.norm_excess, std::abs(f[i]) - r);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double e = std::abs(f[i] - f[j]) - x(i, j);
      if (e > c.lip_excess) c.lip_excess = e, c.i = i, c.j = j;
    }
  c.ok = c.norm_excess <= tol && c.lip_excess <= tol;
  return c;
}

double nucleus_gap(const Nucleus& nucleus, const Measure& mu, const Measure& nu) {
  if (!mu.space()->same_as(*nucleus.space) || !nu.space()->same_as(*nucleus.space))
    throw LipError("measures do not live on the nucleus space");
  // Any 1-Lipschitz potential has range at most 2 * radius <= 2r, so a shift fits it in [-r, r].
  if (nucleus.exact()) return w1(mu, nu);
  const std::size_t n = nucleus.space->size();
  std::vector<double> diff(n);
  for (std::size_t i = 0; i < n; ++i) diff[i] = mu[i] - nu[i];
  double best = 0.0;
  visit_members(nucleus, [&](std::span<const double> f) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += f[i] * diff[i];
    best = std::max(best, std::abs(s));
  });
  return best;
}

std::vector<double> nucleus_gaps(const Nucleus& nucleus, std::span<const Measure> mus, const Measure& nu) {
  for (const Measure& mu : mus)
    if (!mu.space()->same_as(*nucleus.space)) throw LipError("measures do not live on the nucleus space");
  if (!nu.space()->same_as(*nucleus.space)) throw LipError("measures do not live on the nucleus space");
  std::vector<double> best(mus.size(), 0.0);
  if (nucleus.exact()) {
    parallel_for(mus.size(), [&](std::size_t k) { best[k] = w1(mus[k], nu); });
    return best;
  }
  const std::size_t n = nucleus.space->size();
  std::vector<double> diff(mus.size() * n);
  for (std::size_t k = 0; k < mus.size(); ++k)
    for (std::size_t i = 0; i < n; ++i) diff[k * n + i] = mus[k][i] - nu[i];
  visit_members(nucleus, [&](std::span<const double> f) {
    for (std::size_t k = 0; k < mus.size(); ++k) {
      const double* d = diff.data() + k * n;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += f[i] * d[i];
      best[k] = std::max(best[k], std::abs(s));
    }
  });
  return best;
}

double nucleus_probe_density(const Nucleus& nucleus, std::size_t samples, std::uint64_t seed) {
  if (nucleus.exact()) return 0.0;
  const FiniteMetricSpace& x = *nucleus.space;
  const std::size_t n = x.size();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-nucleus.r, nucleus.r);
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<double>> probes;
  std::vector<double> g(n);
  for (std::size_t s = 0; s < samples; ++s) {
    // Alternate interior samples with pushes toward vertices (values at +-r before projection).
    for (auto& v : g) v = (s % 2 == 0) ? u(rng) : (coin(rng) ? nucleus.r : -nucleus.r);
    probes.push_back(mcshane_project(x, nucleus.r, g));
  }
  std::vector<double> best(samples, std::numeric_limits<double>::infinity());
  visit_members(nucleus, [&](std::span<const double> f) {
    for (std::size_t s = 0; s < samples; ++s) {
      double d = 0.0;
      for (std::size_t i = 0; i < n && d < best[s]; ++i) d = std::max(d, std::abs(f[i] - probes[s][i]));
      best[s] = std::min(best[s], d);
    }
  });
  double worst = 0.0;
  for (double b : best) worst = std::max(worst, b);
  return worst;
}

std::vector<Generator> nucleus_generators(const Nucleus& nucleus) {
  if (nucleus.kind != NucleusKind::Stored) throw LipError("only a stored nucleus has a generator list");
  std::vector<Generator> out;
  out.reserve(nucleus.count);
  for (std::size_t k = 0; k < nucleus.count; ++k) {
    auto f = nucleus.observable(k);
    const double l = lipschitz_constant(*nucleus.space, f.values);
    out.push_back({std::move(f), l});
  }
  return out;
}

Matrix nucleus_state_metric(const Nucleus& nucleus) {
  const FiniteMetricSpace& x = *nucleus.space;
  const std::size_t n = x.size();
  if (nucleus.exact()) return x.dist();
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> inv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j), inv.push_back(1.0 / x(i, j));
  std::vector<double> best(pairs.size(), 0.0), gap(pairs.size());
  bool any = false;
  visit_members(nucleus, [&](std::span<const double> f) {
    any = true;
    double l = 0.0;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      gap[p] = std::abs(f[pairs[p].first] - f[pairs[p].second]);
      l = std::max(l, gap[p] * inv[p]);
    }
    if (l == 0.0) return;
    const double scale = 1.0 / l;
    for (std::size_t p = 0; p < pairs.size(); ++p) best[p] = std::max(best[p], gap[p] * scale);
  });
  if (!any) throw LipError("empty nucleus");
  Matrix out(n, n, 0.0);
  for (std::size_t p = 0; p < pairs.size(); ++p) out(pairs[p].first, pairs[p].second) = out(pairs[p].second, pairs[p].first) = best[p];
  return out;
}

// ----- matrix-valued observables ------------------------------------------------

MatrixObservable::MatrixObservable(SpacePtr s, std::vector<Eigen::MatrixXcd> v)
    : space(std::move(s)), values(std::move(v)) {
  if (!space) throw LipError("matrix observable without a space");
  if (values.size() != space->size()) throw LipError("matrix observable size does not match the space");
  n = values.empty() ? 0 : static_cast<std::size_t>(values.front().rows());
  for (const auto& m : values) {
    if (static_cast<std::size_t>(m.rows()) != n || static_cast<std::size_t>(m.cols()) != n)
      throw LipError("matrix observable needs square matrices of one size");
    if (!m.allFinite()) throw LipError("matrix observable has non-finite entries");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tolerances().hermitian)
      throw LipError("matrix observable value is not Hermitian");
  }
}

double operator_norm(const Eigen::MatrixXcd& h) {
  if (h.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw LipError("eigenvalue computation failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Observable matrix_trace_observable(const MatrixObservable& f) {
  std::vector<double> v;
  v.reserve(f.values.size());
  for (const auto& m : f.values) v.push_back(m.trace().real() / static_cast<double>(f.n));
  return Observable(f.space, std::move(v));
}

std::string MatrixMembership::describe() const {
  std::ostringstream os;
  os << (member ? "member" : "not a member") << "; max norm " << max_norm << " at point " << worst_point;
  if (violating_pair)
    os << "; Lipschitz violation at (" << violating_pair->first << "," << violating_pair->second << ") by " << excess;
  return os.str();
}

MatrixMembership matrix_nucleus_membership(const MatrixObservable& f, double r) {
  if (!(r > 0.0)) throw LipError("membership radius must be positive");
  const FiniteMetricSpace& x = *f.space;
  const double tol = tolerances().eigen;
  MatrixMembership m;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = operator_norm(f.values[i]);
    if (v > m.max_norm) m.max_norm = v, m.worst_point = i;
  }
  if (m.max_norm > r + tol) m.member = false;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double e = operator_norm(f.values[i] - f.values[j]) - x(i, j);
      if (e > tol && e > m.excess) {
        m.member = false;
        m.excess = e;
        m.violating_pair = {i, j};
      }
    }
  return m;
}

Decomposition nucleus_decompose(const MatrixObservable& f, double r, DecomposeAnchor anchor) {
  const FiniteMetricSpace& x = *f.space;
  if (r < radius(x) - 1e-12) throw LipError("nucleus_decompose needs r >= radius of the space");
  const Observable tr = matrix_trace_observable(f);
  if (x.size() >= 2 && lipschitz_constant(x, tr.values) > 1.0 + tolerances().lipschitz)
    throw LipError("nucleus_decompose needs a 1-Lipschitz trace observable; scale the field first");

  std::size_t x0 = 0, x1 = x.size() > 1 ? 1 : 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if (x(i, j) > x(x0, x1)) x0 = i, x1 = j;

  double c;
  if (anchor == DecomposeAnchor::Midrange) {
    const auto [lo, hi] = std::minmax_element(tr.values.begin(), tr.values.end());
    c = 0.5 * (*lo + *hi);
  } else {
    c = tr.values[x0];
  }
  const auto n = static_cast<Eigen::Index>(f.n);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  std::vector<Eigen::MatrixXcd> g, h;
  for (std::size_t i = 0; i < x.size(); ++i) {
    g.push_back((tr.values[i] - c) * id);
    h.push_back(f.values[i] - tr.values[i] * id);
  }
  Decomposition d{MatrixObservable(f.space, std::move(g)), c, MatrixObservable(f.space, std::move(h)), x0, x1};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Eigen::MatrixXcd back = d.g.values[i] + c * id + d.h.values[i];
    d.reconstruction_error = std::max(d.reconstruction_error, (back - f.values[i]).cwiseAbs().maxCoeff());
    d.h_trace_max = std::max(d.h_trace_max, std::abs(d.h.values[i].trace().real()) / static_cast<double>(f.n));
  }
  d.g_membership = matrix_nucleus_membership(d.g, r);
  return d;
}

}  // namespace qmlab
