#include "qmlab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "qmlab/parallel.hpp"

namespace qmlab {

DynMap::DynMap(SpacePtr s, PointMap m, double err) : space(std::move(s)), map(std::move(m)), projection_error(err) {
  if (!space) throw DynamicsError("map without a space");
  if (map.size() != space->size()) throw DynamicsError("map is not total on its space");
  for (std::size_t v : map)
    if (v >= space->size()) throw DynamicsError("map image out of range");
}

DynMap identity_map(const SpacePtr& x) {
  PointMap id(x->size());
  std::iota(id.begin(), id.end(), 0);
  return DynMap(x, std::move(id));
}

DynMap compose(const DynMap& a, const DynMap& b) {
  if (!a.space->same_as(*b.space)) throw DynamicsError("compose: maps live on different spaces");
  PointMap m(b.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = a(b(i));
  return DynMap(b.space, std::move(m), std::max(a.projection_error, b.projection_error));
}

bool is_bijective(const DynMap& h) {
  std::vector<char> hit(h.size(), 0);
  for (std::size_t v : h.map) {
    if (hit[v]) return false;
    hit[v] = 1;
  }
  return true;
}

DynMap inverse(const DynMap& h) {
  if (!is_bijective(h)) throw DynamicsError("inverse of a non-bijective map");
  PointMap inv(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) inv[h(i)] = i;
  return DynMap(h.space, std::move(inv), h.projection_error);
}

DynMap power(const DynMap& h, long k) {
  const DynMap base = k < 0 ? inverse(h) : h;
  PointMap m(h.size());
  std::iota(m.begin(), m.end(), 0);
  const unsigned long steps = static_cast<unsigned long>(k < 0 ? -k : k);
  for (unsigned long s = 0; s < steps; ++s)
    for (std::size_t& v : m) v = base(v);
  return DynMap(h.space, std::move(m), h.projection_error);
}

namespace {

bool equally_spaced_circle(const FiniteMetricSpace& x) {
  if (!x.is_circle()) return false;
  const double step = x.circumference() / static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    if (std::abs(x.circle_coordinates()[i] - static_cast<double>(i) * step) > 1e-12 * x.circumference()) return false;
  return true;
}

double circle_gap(double a, double b, double c) {
  double d = std::fmod(std::abs(a - b), c);
  return std::min(d, c - d);
}

}  // namespace

DynMap rotation(const SpacePtr& x, long steps) {
  if (!equally_spaced_circle(*x)) throw DynamicsError("rotation needs an equally spaced circle net");
  const long n = static_cast<long>(x->size());
  const long shift = ((steps % n) + n) % n;
  PointMap m(x->size());
  for (long i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = static_cast<std::size_t>((i + shift) % n);
  return DynMap(x, std::move(m));
}

CircleMap sine_pluck(double t) {
  return [t](double x) {
    const double s = std::sin(x);
    return x + 0.5 * t * s * s;
  };
}

DynMap project_circle_map(const SpacePtr& x, const CircleMap& g) {
  if (!x->is_circle()) throw DynamicsError("analytic maps need a circle space");
  const auto& c = x->circle_coordinates();
  const double len = x->circumference();
  PointMap m(x->size());
  double err = 0.0;
  for (std::size_t i = 0; i < x->size(); ++i) {
    const double y = g(c[i]);
    if (!std::isfinite(y)) throw DynamicsError("analytic map returned a non-finite value");
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x->size(); ++j) {
      const double d = circle_gap(y, c[j], len);
      if (d < bd) bd = d, best = j;
    }
    m[i] = best;
    err = std::max(err, bd);
  }
  return DynMap(x, std::move(m), err);
}

DynMap deform(const DynMap& g, const DynMap& h) {
  if (!is_bijective(g)) throw DynamicsError("deform: the conjugating map is not a bijection of the net");
  return compose(compose(g, h), inverse(g));
}

DynMap deform(const CircleMap& g, const DynMap& h) {
  const DynMap p = project_circle_map(h.space, g);
  if (!is_bijective(p))
    throw DynamicsError("deform: the projection of the analytic map is not a bijection of the net; refine the net");
  return deform(p, h);
}

InvariantSimplex invariant_measures(const DynMap& h) {
  const std::size_t n = h.size();
  // 0 unvisited, 1 on the current walk, 2 finished
  std::vector<char> state(n, 0);
  InvariantSimplex out;
  for (std::size_t s = 0; s < n; ++s) {
    if (state[s]) continue;
    std::vector<std::size_t> walk;
    std::size_t v = s;
    while (state[v] == 0) {
      state[v] = 1;
      walk.push_back(v);
      v = h(v);
    }
    if (state[v] == 1) {
      std::vector<std::size_t> cycle(std::find(walk.begin(), walk.end(), v), walk.end());
      std::sort(cycle.begin(), cycle.end());
      out.cycles.push_back(std::move(cycle));
    }
    for (std::size_t w : walk) state[w] = 2;
  }
  std::sort(out.cycles.begin(), out.cycles.end());
  for (const auto& c : out.cycles) out.extremes.push_back(Measure::uniform(h.space, c));
  return out;
}

std::vector<Measure> hull_net(std::span<const Measure> extremes, std::size_t m, std::size_t cap) {
  if (extremes.empty()) throw DynamicsError("hull_net of an empty set");
  if (m == 0) throw DynamicsError("hull_net needs a positive resolution");
  const std::size_t k = extremes.size();
  if (prob_net_size(k, m) > cap)
    throw DynamicsError("hull_net would hold " + std::to_string(prob_net_size(k, m)) + " measures, above the cap");
  const SpacePtr& space = extremes.front().space();
  const std::size_t n = space->size();
  std::vector<Measure> out;
  std::vector<std::size_t> c(k, 0);
  // Compositions of m into k parts in lexicographic order, starting at (m, 0, ..., 0).
  c[0] = m;
  while (true) {
    std::vector<double> w(n, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
      if (c[j] == 0) continue;
      const double lam = static_cast<double>(c[j]) / static_cast<double>(m);
      for (std::size_t i = 0; i < n; ++i) w[i] += lam * extremes[j][i];
    }
    out.emplace_back(space, std::move(w));
    if (k == 1) break;
    // next composition: move one unit from the last nonzero part (before the tail) rightwards
    std::size_t last = k - 1;
    const std::size_t tail = c[last];
    c[last] = 0;
    std::size_t j = last;
    while (j > 0 && c[j - 1] == 0) --j;
    if (j == 0) break;
    --c[j - 1];
    c[j] = tail + 1;
  }
  return out;
}

double hull_hausdorff(std::span<const Measure> a, std::span<const Measure> b, std::size_t m) {
  const auto na = hull_net(a, m);
  const auto nb = hull_net(b, m);
  Matrix d(na.size(), nb.size());
  parallel_for(na.size(), [&](std::size_t i) {
    for (std::size_t j = 0; j < nb.size(); ++j) d(i, j) = w1(na[i], nb[j]);
  });
  double h = 0.0;
  for (std::size_t i = 0; i < na.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < nb.size(); ++j) best = std::min(best, d(i, j));
    h = std::max(h, best);
  }
  for (std::size_t j = 0; j < nb.size(); ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < na.size(); ++i) best = std::min(best, d(i, j));
    h = std::max(h, best);
  }
  return h;
}

double invariant_simplex_hausdorff(const DynMap& h1, const DynMap& h2, std::size_t m) {
  if (!h1.space->same_as(*h2.space)) throw DynamicsError("invariant_simplex_hausdorff: different spaces");
  const auto a = invariant_measures(h1);
  const auto b = invariant_measures(h2);
  return hull_hausdorff(a.extremes, b.extremes, m);
}

std::size_t rate_from_curve(std::span<const double> deviation, double eps) {
  std::size_t n = deviation.size();
  while (n > 0 && deviation[n - 1] <= eps) --n;
  return n + 1;
}

BirkhoffReport birkhoff_rate(const DynMap& h, const Nucleus& nucleus, double eps, std::size_t n_max) {
  if (!(eps > 0.0)) throw DynamicsError("birkhoff_rate needs a positive epsilon");
  if (n_max == 0) throw DynamicsError("birkhoff_rate needs n_max >= 1");
  if (!nucleus.space->same_as(*h.space)) throw DynamicsError("nucleus and map live on different spaces");
  if (nucleus.r < radius(*h.space) - 1e-12) throw DynamicsError("nucleus radius is below the radius of the space");
  const auto inv = invariant_measures(h);
  if (!inv.uniquely_ergodic())
    throw DynamicsError("map is not uniquely ergodic on the net (" + std::to_string(inv.extremes.size()) +
                        " extreme invariant measures)");
  const Measure& nu = inv.extremes.front();
  const std::size_t sz = h.size();
  // Empirical orbit measures, index (n-1)*sz + x. Counts divided by n keep full cycles exact.
  std::vector<Measure> emp;
  emp.reserve(n_max * sz);
  std::vector<std::vector<double>> counts(sz, std::vector<double>(sz, 0.0));
  std::vector<std::size_t> pos(sz);
  std::iota(pos.begin(), pos.end(), 0);
  for (std::size_t n = 1; n <= n_max; ++n) {
    for (std::size_t x = 0; x < sz; ++x) {
      counts[x][pos[x]] += 1.0;
      pos[x] = h(pos[x]);
      std::vector<double> w(sz);
      for (std::size_t i = 0; i < sz; ++i) w[i] = counts[x][i] / static_cast<double>(n);
      emp.emplace_back(h.space, std::move(w));
    }
  }
  const auto gaps = nucleus_gaps(nucleus, emp, nu);
  BirkhoffReport rep;
  rep.epsilon = eps;
  rep.deviation.assign(n_max, 0.0);
  for (std::size_t n = 0; n < n_max; ++n)
    for (std::size_t x = 0; x < sz; ++x) rep.deviation[n] = std::max(rep.deviation[n], gaps[n * sz + x]);
  rep.rate = rate_from_curve(rep.deviation, eps);
  rep.resolved = rep.rate <= n_max;
  rep.note = rep.resolved ? "tail validated up to n_max; crossings beyond n_max are not detectable"
                          : "deviation at n_max exceeds eps; rate unresolved";
  return rep;
}

std::size_t period(const DynMap& h) {
  if (!is_bijective(h)) return 0;
  std::size_t q = 1;
  for (const auto& c : invariant_measures(h).cycles) q = std::lcm(q, c.size());
  return q;
}

std::vector<DynMap> z_window(const DynMap& h, std::size_t n) {
  if (!is_bijective(h)) throw DynamicsError("z_window needs a bijection");
  std::vector<DynMap> out;
  for (long k = -static_cast<long>(n); k <= static_cast<long>(n); ++k) out.push_back(power(h, k));
  return out;
}

std::vector<DynMap> periodic_window(const DynMap& h) {
  const std::size_t q = period(h);
  if (q == 0) throw DynamicsError("periodic_window needs a bijection");
  std::vector<DynMap> out;
  for (std::size_t k = 0; k < q; ++k) out.push_back(power(h, static_cast<long>(k)));
  return out;
}

double EghDefects::value(EghMode mode) const {
  const double base = std::max(density, equivariance);
  return mode == EghMode::Strict ? std::max(base, distortion) : base;
}

namespace {

void check_windows(std::span<const DynMap> a1, std::span<const DynMap> a2) {
  if (a1.empty() || a2.empty()) throw DynamicsError("empty group window");
  if (a1.size() != a2.size()) throw DynamicsError("group windows differ in length");
  for (const auto& g : a1)
    if (!g.space->same_as(*a1.front().space)) throw DynamicsError("window maps live on different spaces");
  for (const auto& g : a2)
    if (!g.space->same_as(*a2.front().space)) throw DynamicsError("window maps live on different spaces");
}

// Scores maps X -> Y. Projection slack is a constant added to equivariance.
struct EghScorer {
  std::span<const DynMap> a1, a2;
  const FiniteMetricSpace& x;
  const FiniteMetricSpace& y;
  double slack = 0.0;

  EghDefects operator()(const PointMap& f) const {
    EghDefects d;
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = i + 1; j < x.size(); ++j)
        d.distortion = std::max(d.distortion, std::abs(x(i, j) - y(f[i], f[j])));
    for (std::size_t b = 0; b < y.size(); ++b) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < x.size(); ++i) best = std::min(best, y(b, f[i]));
      d.density = std::max(d.density, best);
    }
    for (std::size_t g = 0; g < a1.size(); ++g)
      for (std::size_t i = 0; i < x.size(); ++i)
        d.equivariance = std::max(d.equivariance, y(a2[g](f[i]), f[a1[g](i)]));
    d.equivariance += slack;
    return d;
  }
};

double window_slack(std::span<const DynMap> a1, std::span<const DynMap> a2) {
  double s = 0.0;
  for (const auto& g : a1) s = std::max(s, g.projection_error);
  for (const auto& g : a2) s = std::max(s, g.projection_error);
  return s;
}

struct Best {
  PointMap f;
  EghDefects defects;
  bool exact = true;
};

Best search_side(const EghScorer& score, EghMode mode, const SearchBudget& budget) {
  const std::size_t nx = score.x.size(), ny = score.y.size();
  double total = 1.0;
  for (std::size_t i = 0; i < nx; ++i) total *= static_cast<double>(ny);
  Best best;
  best.f.assign(nx, 0);
  best.defects = score(best.f);
  if (total <= static_cast<double>(budget.max_pairs)) {
    PointMap f(nx, 0);
    while (true) {
      const auto d = score(f);
      if (d.value(mode) < best.defects.value(mode)) best = {f, d, true};
      std::size_t i = 0;
      while (i < nx && ++f[i] == ny) f[i++] = 0;
      if (i == nx) break;
    }
    return best;
  }
  // Coordinate descent from the cyclic labelling.
  best.exact = false;
  for (std::size_t i = 0; i < nx; ++i) best.f[i] = i % ny;
  best.defects = score(best.f);
  for (std::size_t round = 0; round < budget.max_local_rounds; ++round) {
    bool improved = false;
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t v = 0; v < ny; ++v) {
        if (v == best.f[i]) continue;
        PointMap f = best.f;
        f[i] = v;
        const auto d = score(f);
        if (d.value(mode) < best.defects.value(mode) - 1e-15) {
          best.f = std::move(f);
          best.defects = d;
          improved = true;
        }
      }
    if (!improved) break;
  }
  return best;
}

}  // namespace

EghDefects egh_defects_at(std::span<const DynMap> a1, std::span<const DynMap> a2, const PointMap& f) {
  check_windows(a1, a2);
  const auto& x = *a1.front().space;
  const auto& y = *a2.front().space;
  if (f.size() != x.size()) throw DynamicsError("egh map is not total");
  for (std::size_t v : f)
    if (v >= y.size()) throw DynamicsError("egh map image out of range");
  return EghScorer{a1, a2, x, y, window_slack(a1, a2)}(f);
}

EghResult egh_distance(std::span<const DynMap> a1, std::span<const DynMap> a2, EghMode mode,
                       const SearchBudget& budget) {
  check_windows(a1, a2);
  const double slack = window_slack(a1, a2);
  const auto& x = *a1.front().space;
  const auto& y = *a2.front().space;
  // The two maps are scored independently, so each side is minimized on its own.
  const Best fwd = search_side(EghScorer{a1, a2, x, y, slack}, mode, budget);
  const Best bwd = search_side(EghScorer{a2, a1, y, x, slack}, mode, budget);
  EghResult r;
  r.forward = fwd.f;
  r.backward = bwd.f;
  r.forward_defects = fwd.defects;
  r.backward_defects = bwd.defects;
  r.value = std::max(fwd.defects.value(mode), bwd.defects.value(mode));
  r.kind = fwd.exact && bwd.exact ? BoundKind::Exact : BoundKind::Upper;
  return r;
}

double restricted_seminorm(const Observable& a0, std::span<const Measure> extremes, std::size_t m) {
  if (extremes.size() < 2)
    throw DynamicsError("the invariant simplex is a single point; use the uniquely ergodic convention");
  for (const auto& e : extremes)
    if (!e.space()->same_as(*a0.space)) throw DynamicsError("observable and measures live on different spaces");
  const auto net = hull_net(extremes, m);
  const auto values = extend_to_simplex(a0, net);
  return lipnorm_from_state_metric(values, w1_matrix(net));
}

double crossed_product_seminorm(const Observable& a0, const DynMap& h, CrossedMode mode, std::size_t m) {
  if (!a0.space->same_as(*h.space)) throw DynamicsError("observable and map live on different spaces");
  if (mode == CrossedMode::UniquelyErgodic) return lipschitz_seminorm(a0).value;
  return restricted_seminorm(a0, invariant_measures(h).extremes, m);
}

DominatedSeminorm crossed_product_seminorm_dominated(const Observable& a0, const DynMap& h, std::size_t m) {
  DominatedSeminorm d;
  d.general = crossed_product_seminorm(a0, h, CrossedMode::General, m);
  d.full = lipschitz_seminorm(a0).value;
  if (d.general > d.full + 1e-9 * std::max(1.0, d.full))
    throw DynamicsError("restricted seminorm exceeds the full seminorm");
  return d;
}

}  // namespace qmlab
