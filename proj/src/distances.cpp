#include "qmlab/distances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace qmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// n^k with saturation at SIZE_MAX.
std::size_t power_sat(std::size_t n, std::size_t k) {
  std::size_t out = 1;
  for (std::size_t i = 0; i < k; ++i) {
    if (n != 0 && out > std::numeric_limits<std::size_t>::max() / n) return std::numeric_limits<std::size_t>::max();
    out *= n;
  }
  return out;
}

std::size_t mul_sat(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a) return std::numeric_limits<std::size_t>::max();
  return a * b;
}

// Map number `code` in base `ny`, least significant digit first.
PointMap decode(std::size_t code, std::size_t nx, std::size_t ny) {
  PointMap f(nx);
  for (std::size_t i = 0; i < nx; ++i) f[i] = code % ny, code /= ny;
  return f;
}

PointMap compose(const PointMap& outer, const PointMap& inner) {
  PointMap h(inner.size());
  for (std::size_t i = 0; i < inner.size(); ++i) h[i] = outer[inner[i]];
  return h;
}

void check_map(const PointMap& f, std::size_t nx, std::size_t ny) {
  if (f.size() != nx) throw DistanceError("map must be total on its source");
  for (std::size_t v : f)
    if (v >= ny) throw DistanceError("map value out of range");
}

// 1-D W1 between the distance profiles of x in X and y in Y (uniform weights).
double profile_gap(const FiniteMetricSpace& x, std::size_t a, const FiniteMetricSpace& y, std::size_t b) {
  std::vector<double> p(x.dist().row(a).begin(), x.dist().row(a).end());
  std::vector<double> q(y.dist().row(b).begin(), y.dist().row(b).end());
  std::sort(p.begin(), p.end());
  std::sort(q.begin(), q.end());
  // Integrate |F_p^{-1}(t) - F_q^{-1}(t)| over t in [0, 1] on the merged breakpoints.
  std::vector<double> cuts;
  for (std::size_t i = 0; i <= p.size(); ++i) cuts.push_back(double(i) / double(p.size()));
  for (std::size_t i = 0; i <= q.size(); ++i) cuts.push_back(double(i) / double(q.size()));
  std::sort(cuts.begin(), cuts.end());
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    if (hi <= lo) continue;
    const double mid = 0.5 * (lo + hi);
    const double vp = p[std::min(p.size() - 1, static_cast<std::size_t>(mid * double(p.size())))];
    const double vq = q[std::min(q.size() - 1, static_cast<std::size_t>(mid * double(q.size())))];
    s += (hi - lo) * std::abs(vp - vq);
  }
  return s;
}

// Map induced by an optimal coupling of uniform measures under the profile cost.
std::pair<PointMap, PointMap> coupling_maps(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  const std::size_t nx = x.size(), ny = y.size();
  Matrix cost(nx, ny);
  for (std::size_t a = 0; a < nx; ++a)
    for (std::size_t b = 0; b < ny; ++b) cost(a, b) = profile_gap(x, a, y, b);
  std::vector<double> ua(nx, 1.0 / double(nx)), ub(ny, 1.0 / double(ny));
  Matrix plan;
  solve_transport(ua, ub, cost, &plan);
  PointMap f(nx), g(ny);
  for (std::size_t a = 0; a < nx; ++a) {
    std::size_t best = 0;
    for (std::size_t b = 1; b < ny; ++b)
      if (plan(a, b) > plan(a, best)) best = b;
    f[a] = best;
  }
  for (std::size_t b = 0; b < ny; ++b) {
    std::size_t best = 0;
    for (std::size_t a = 1; a < nx; ++a)
      if (plan(a, b) > plan(best, b)) best = a;
    g[b] = best;
  }
  return {f, g};
}

// Generic coordinate-descent over a map pair; cost(f, g) is minimized.
template <typename Cost>
std::pair<PointMap, PointMap> local_search(PointMap f, PointMap g, std::size_t nx, std::size_t ny, std::size_t rounds,
                                           Cost&& cost) {
  double best = cost(f, g);
  for (std::size_t round = 0; round < rounds; ++round) {
    bool improved = false;
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t v = 0; v < ny; ++v) {
        if (v == f[i]) continue;
        const std::size_t old = f[i];
        f[i] = v;
        const double c = cost(f, g);
        if (c < best) best = c, improved = true;
        else f[i] = old;
      }
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t v = 0; v < nx; ++v) {
        if (v == g[j]) continue;
        const std::size_t old = g[j];
        g[j] = v;
        const double c = cost(f, g);
        if (c < best) best = c, improved = true;
        else g[j] = old;
      }
    if (!improved) break;
  }
  return {f, g};
}

}  // namespace

std::string to_string(BoundKind k) { return k == BoundKind::Exact ? "exact" : "upper"; }

double correspondence_distortion(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const Correspondence& r) {
  std::vector<bool> hx(x.size(), false), hy(y.size(), false);
  for (auto [a, b] : r.pairs) {
    if (a >= x.size() || b >= y.size()) throw DistanceError("correspondence index out of range");
    hx[a] = hy[b] = true;
  }
  if (std::find(hx.begin(), hx.end(), false) != hx.end() || std::find(hy.begin(), hy.end(), false) != hy.end())
    throw DistanceError("relation does not cover both spaces");
  double d = 0.0;
  for (auto [a, b] : r.pairs)
    for (auto [c, e] : r.pairs) d = std::max(d, std::abs(x(a, c) - y(b, e)));
  return d;
}

double map_distortion(const PointMap& f, const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  check_map(f, x.size(), y.size());
  double d = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a)
    for (std::size_t b = a + 1; b < x.size(); ++b) d = std::max(d, std::abs(y(f[a], f[b]) - x(a, b)));
  return d;
}

GhResult gh_distance(const FiniteMetricSpace& x, const FiniteMetricSpace& y, const SearchBudget& budget) {
  const std::size_t nx = x.size(), ny = y.size();
  GhResult res;
  res.lower_bound = 0.5 * std::abs(x.diameter() - y.diameter());
  auto cross = [&](const PointMap& f, const PointMap& g, double stop) {
    double d = 0.0;
    for (std::size_t a = 0; a < nx && d < stop; ++a)
      for (std::size_t b = 0; b < ny; ++b) d = std::max(d, std::abs(x(a, g[b]) - y(f[a], b)));
    return d;
  };
  const std::size_t fx = power_sat(ny, nx), gy = power_sat(nx, ny);
  PointMap bf, bg;
  double best = kInf;
  if (mul_sat(fx, gy) <= budget.max_pairs) {
    std::vector<double> df(fx), dg(gy);
    for (std::size_t c = 0; c < fx; ++c) df[c] = map_distortion(decode(c, nx, ny), x, y);
    for (std::size_t c = 0; c < gy; ++c) dg[c] = map_distortion(decode(c, ny, nx), y, x);
    for (std::size_t cf = 0; cf < fx; ++cf) {
      if (df[cf] >= best) continue;
      const PointMap f = decode(cf, nx, ny);
      for (std::size_t cg = 0; cg < gy; ++cg) {
        const double base = std::max(df[cf], dg[cg]);
        if (base >= best) continue;
        const PointMap g = decode(cg, ny, nx);
        const double v = std::max(base, cross(f, g, best));
        if (v < best) best = v, bf = f, bg = std::move(g);
      }
    }
    res.kind = BoundKind::Exact;
  } else {
    auto total = [&](const PointMap& f, const PointMap& g) {
      return std::max({map_distortion(f, x, y), map_distortion(g, y, x), cross(f, g, kInf)});
    };
    auto [f0, g0] = coupling_maps(x, y);
    std::tie(bf, bg) = local_search(f0, g0, nx, ny, budget.max_local_rounds, total);
    best = total(bf, bg);
    res.kind = BoundKind::Upper;
  }
  res.value = 0.5 * best;
  for (std::size_t a = 0; a < nx; ++a) res.witness.pairs.emplace_back(a, bf[a]);
  for (std::size_t b = 0; b < ny; ++b)
    if (std::find(res.witness.pairs.begin(), res.witness.pairs.end(), std::pair{bg[b], b}) == res.witness.pairs.end())
      res.witness.pairs.emplace_back(bg[b], b);
  return res;
}

// ----- simplex nets --------------------------------------------------------------

SimplexNet simplex_net(const SpacePtr& boundary, std::size_t m) {
  auto net = prob_net(boundary, m);
  return {boundary, std::move(net.measures), net.density, m};
}

SimplexNet simplex_net(const SpacePtr& boundary, std::vector<Measure> measures, double density) {
  for (const auto& mu : measures)
    if (!mu.space()->same_as(*boundary)) throw DistanceError("net measure is not on the declared boundary");
  for (std::size_t i = 0; i < boundary->size(); ++i) {
    const bool present = std::any_of(measures.begin(), measures.end(), [&](const Measure& mu) { return mu[i] == 1.0; });
    if (!present) measures.push_back(Measure::point_mass(boundary, i));
  }
  return {boundary, std::move(measures), density, 0};
}

namespace {

// Per-direction tables for a source net and a target boundary.
class MapScorer {
 public:
  MapScorer(const SimplexNet& src, const SimplexNet& dst) : src_(src), dst_(dst), base_(w1_matrix(src.measures)) {}

  std::vector<Measure> push(const PointMap& f) const {
    std::vector<Measure> out;
    out.reserve(src_.measures.size());
    for (const auto& mu : src_.measures) out.push_back(pushforward(mu, f, dst_.boundary));
    return out;
  }

  double distortion(const PointMap& f) {
    if (auto it = dist_.find(f); it != dist_.end()) return it->second;
    const auto pushed = push(f);
    double d = 0.0;
    for (std::size_t a = 0; a < pushed.size(); ++a)
      for (std::size_t b = a + 1; b < pushed.size(); ++b) d = std::max(d, std::abs(w1(pushed[a], pushed[b]) - base_(a, b)));
    return dist_[f] = d;
  }

  double surjectivity(const PointMap& f) const {
    const auto pushed = push(f);
    double worst = 0.0;
    for (const auto& nu : dst_.measures) {
      double best = kInf;
      for (const auto& p : pushed) best = std::min(best, w1(p, nu));
      worst = std::max(worst, best);
    }
    return worst;
  }

 private:
  const SimplexNet& src_;
  const SimplexNet& dst_;
  Matrix base_;
  std::map<PointMap, double> dist_;
};

// max W1(h mu, mu) over a net, memoized by the self-map h.
class ReturnDefect {
 public:
  explicit ReturnDefect(const SimplexNet& net) : net_(net) {}
  double operator()(const PointMap& h) {
    if (auto it = memo_.find(h); it != memo_.end()) return it->second;
    double d = 0.0;
    for (const auto& mu : net_.measures) d = std::max(d, w1(pushforward(mu, h), mu));
    return memo_[h] = d;
  }

 private:
  const SimplexNet& net_;
  std::map<PointMap, double> memo_;
};

void check_net(const SimplexNet& s) {
  if (!s.boundary || s.measures.empty()) throw DistanceError("simplex net is empty");
}

}  // namespace

double net_distortion(const PointMap& f, const SimplexNet& sx, const FiniteMetricSpace& target) {
  check_map(f, sx.boundary->size(), target.size());
  auto tgt = std::make_shared<const FiniteMetricSpace>(target);
  SimplexNet dst{tgt, {}, 0.0, 0};
  MapScorer s(sx, dst);
  return s.distortion(f);
}

double AlmostIsometryReport::gamma() const { return std::max(distortion, inversion_defect); }

AlmostIsometryReport epsilon_isometry_check(const PointMap& f, const SimplexNet& sx, const SimplexNet& sy) {
  check_net(sx);
  check_net(sy);
  check_map(f, sx.boundary->size(), sy.boundary->size());
  MapScorer s(sx, sy);
  AlmostIsometryReport r;
  r.forward = f;
  r.boundary_distortion = map_distortion(f, *sx.boundary, *sy.boundary);
  r.distortion = s.distortion(f);
  r.density_defect = s.surjectivity(f);
  return r;
}

AlmostIsometryReport intertwining_gap_at(const SimplexNet& sx, const SimplexNet& sy, const PointMap& f,
                                         const PointMap& g) {
  check_net(sx);
  check_net(sy);
  check_map(f, sx.boundary->size(), sy.boundary->size());
  check_map(g, sy.boundary->size(), sx.boundary->size());
  MapScorer fs(sx, sy), gs(sy, sx);
  ReturnDefect rx(sx), ry(sy);
  AlmostIsometryReport r;
  r.forward = f;
  r.backward = g;
  r.boundary_distortion =
      std::max(map_distortion(f, *sx.boundary, *sy.boundary), map_distortion(g, *sy.boundary, *sx.boundary));
  r.distortion = std::max(fs.distortion(f), gs.distortion(g));
  r.inversion_defect = std::max(rx(compose(g, f)), ry(compose(f, g)));
  return r;
}

GapResult intertwining_gap(const SimplexNet& sx, const SimplexNet& sy, const SearchBudget& budget) {
  check_net(sx);
  check_net(sy);
  const std::size_t nx = sx.boundary->size(), ny = sy.boundary->size();
  MapScorer fs(sx, sy), gs(sy, sx);
  ReturnDefect rx(sx), ry(sy);
  auto gamma = [&](const PointMap& f, const PointMap& g, double stop) {
    double v = std::max(fs.distortion(f), gs.distortion(g));
    if (v >= stop) return v;
    v = std::max(v, rx(compose(g, f)));
    if (v >= stop) return v;
    return std::max(v, ry(compose(f, g)));
  };

  const std::size_t fx = power_sat(ny, nx), gy = power_sat(nx, ny);
  PointMap bf, bg;
  double best = kInf;
  BoundKind kind;
  if (mul_sat(fx, gy) <= budget.max_pairs) {
    std::vector<double> df(fx), dg(gy);
    for (std::size_t c = 0; c < fx; ++c) df[c] = fs.distortion(decode(c, nx, ny));
    for (std::size_t c = 0; c < gy; ++c) dg[c] = gs.distortion(decode(c, ny, nx));
    for (std::size_t cf = 0; cf < fx; ++cf) {
      if (df[cf] >= best) continue;
      const PointMap f = decode(cf, nx, ny);
      for (std::size_t cg = 0; cg < gy; ++cg) {
        if (std::max(df[cf], dg[cg]) >= best) continue;
        const PointMap g = decode(cg, ny, nx);
        const double v = gamma(f, g, best);
        if (v < best) best = v, bf = f, bg = g;
      }
    }
    kind = BoundKind::Exact;
  } else {
    auto [f0, g0] = coupling_maps(*sx.boundary, *sy.boundary);
    std::tie(bf, bg) = local_search(f0, g0, nx, ny, budget.max_local_rounds,
                                    [&](const PointMap& f, const PointMap& g) { return gamma(f, g, kInf); });
    best = gamma(bf, bg, kInf);
    kind = BoundKind::Upper;
  }
  // Every map pair is feasible at twice the larger diameter.
  const double ceiling = 2.0 * std::max(sx.boundary->diameter(), sy.boundary->diameter());
  if (!(best <= ceiling + 1e-9)) throw DistanceError("intertwining gap search found no pair below 2 * max diameter");
  GapResult res;
  res.report = intertwining_gap_at(sx, sy, bf, bg);
  res.report.kind = kind;
  res.gamma = res.report.gamma();
  return res;
}

FukayaResult fukaya_distance(const SimplexNet& sx, const SimplexNet& sy, const SearchBudget& budget) {
  check_net(sx);
  check_net(sy);
  const std::size_t nx = sx.boundary->size(), ny = sy.boundary->size();
  MapScorer fs(sx, sy);
  auto value = [&](const PointMap& f, double stop) {
    const double d = fs.distortion(f);
    if (d >= stop) return d;
    return std::max(d, fs.surjectivity(f));
  };
  const std::size_t fx = power_sat(ny, nx);
  PointMap bf;
  double best = kInf;
  BoundKind kind;
  if (fx <= budget.max_pairs) {
    for (std::size_t c = 0; c < fx; ++c) {
      const PointMap f = decode(c, nx, ny);
      const double v = value(f, best);
      if (v < best) best = v, bf = f;
    }
    kind = BoundKind::Exact;
  } else {
    auto [f0, g0] = coupling_maps(*sx.boundary, *sy.boundary);
    PointMap unused(ny, 0);
    bf = local_search(f0, unused, nx, ny, budget.max_local_rounds,
                      [&](const PointMap& f, const PointMap&) { return value(f, kInf); })
             .first;
    best = value(bf, kInf);
    kind = BoundKind::Upper;
  }
  FukayaResult res;
  res.report = epsilon_isometry_check(bf, sx, sy);
  res.report.kind = kind;
  res.value = std::max(res.report.distortion, res.report.density_defect);
  return res;
}

DqResult dq_upper(const SimplexNet& sx, const SimplexNet& sy, const PointMap& f, std::optional<double> delta,
                  const SearchBudget& budget) {
  check_net(sx);
  check_net(sy);
  const FiniteMetricSpace& x = *sx.boundary;
  const FiniteMetricSpace& y = *sy.boundary;
  check_map(f, x.size(), y.size());
  DqResult res;
  if (delta) {
    if (!(*delta > 0.0)) throw DistanceError("dq_upper needs delta > 0");
    res.delta = *delta;
  } else {
    // Bridge points sit delta/2 apart at least; keep that clear of the zero-distance tolerance.
    const double floor = std::max(1e-9 * std::max({1.0, x.diameter(), y.diameter()}), 4 * tolerances().metric_axiom);
    res.delta = std::max({intertwining_gap(sx, sy, budget).gamma, map_distortion(f, x, y), floor});
  }
  auto bridge = bridge_metric(x, y, f, res.delta);
  const std::size_t nx = x.size(), ny = y.size();
  auto lift = [&](const Measure& mu, std::size_t offset) {
    std::vector<double> w(nx + ny, 0.0);
    for (std::size_t i = 0; i < mu.size(); ++i) w[offset + i] = mu[i];
    return Measure(bridge, std::move(w));
  };
  std::vector<Measure> a, b;
  for (const auto& mu : sx.measures) a.push_back(lift(mu, 0));
  for (const auto& nu : sy.measures) b.push_back(lift(nu, nx));
  Matrix d(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) d(i, j) = w1(a[i], b[j]);
  double h = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double m = kInf;
    for (std::size_t j = 0; j < b.size(); ++j) m = std::min(m, d(i, j));
    h = std::max(h, m);
  }
  for (std::size_t j = 0; j < b.size(); ++j) {
    double m = kInf;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::min(m, d(i, j));
    h = std::max(h, m);
  }
  res.value = h;
  return res;
}

}  // namespace qmlab
