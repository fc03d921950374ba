#include "qmlab/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>

#include "qmlab/parallel.hpp"

namespace qmlab {

void validate_field(const MetricField& f) {
  if (f.fibres.empty()) throw FieldError("field without fibres");
  if (f.thetas.size() != f.fibres.size()) throw FieldError("one theta per fibre is required");
  for (std::size_t i = 1; i < f.thetas.size(); ++i)
    if (!(f.thetas[i] > f.thetas[i - 1])) throw FieldError("theta grid must be strictly increasing");
  for (const auto& s : f.fibres)
    if (s->labels() != f.fibres.front()->labels()) throw FieldError("fibres carry different label sets");
}

MetricField constant_field(const SpacePtr& base, std::vector<double> thetas) {
  return scaled_field(base, std::move(thetas), [](double) { return 1.0; });
}

MetricField scaled_field(const SpacePtr& base, std::vector<double> thetas, const std::function<double(double)>& c) {
  MetricField f;
  for (double t : thetas) {
    const double s = c(t);
    if (!(s > 0.0) || !std::isfinite(s)) throw FieldError("scale factors must be positive and finite");
    Matrix d = base->dist();
    for (std::size_t i = 0; i < d.rows(); ++i)
      for (std::size_t j = 0; j < d.cols(); ++j) d(i, j) *= s;
    f.fibres.push_back(validate_metric(d, base->labels()));
  }
  f.thetas = std::move(thetas);
  validate_field(f);
  return f;
}

double WaveProfile::slope(double x, double t) const {
  double s = 0.0;
  const std::size_t modes = std::max(displacement.size(), velocity.size());
  for (std::size_t k = 1; k <= modes; ++k) {
    const double kk = static_cast<double>(k) * std::numbers::pi / length;
    const double w = kk * speed;
    const double a = k <= displacement.size() ? displacement[k - 1] : 0.0;
    const double b = k <= velocity.size() ? velocity[k - 1] : 0.0;
    const double amp = a * std::cos(w * t) + b * std::sin(w * t);
    if (amp != 0.0) s += kk * std::cos(kk * x) * amp;
  }
  return s;
}

WaveProfile flat_profile(double length) {
  WaveProfile p;
  p.length = length;
  return p;
}

WaveProfile single_mode(double amplitude, std::size_t k, double length) {
  if (k == 0) throw FieldError("mode index starts at 1");
  WaveProfile p;
  p.length = length;
  p.displacement.assign(k, 0.0);
  p.displacement[k - 1] = amplitude;
  return p;
}

WaveProfile triangular_pluck(std::size_t modes, double height, std::optional<double> peak, double length) {
  if (modes == 0) throw FieldError("a pluck needs at least one mode");
  const double c = peak.value_or(0.5 * length);
  if (!(c > 0.0 && c < length)) throw FieldError("pluck peak must lie inside the string");
  WaveProfile p;
  p.length = length;
  for (std::size_t k = 1; k <= modes; ++k) {
    const double kd = static_cast<double>(k);
    p.displacement.push_back(2.0 * height * length * length / (kd * kd * std::numbers::pi * std::numbers::pi * c *
                                                               (length - c)) *
                             std::sin(kd * std::numbers::pi * c / length));
  }
  return p;
}

namespace {

struct Simpson {
  const std::function<double(double)>& g;
  double error = 0.0;
  int failures = 0;

  double rule(double a, double b, double fa, double fm, double fb) const { return (b - a) / 6.0 * (fa + 4 * fm + fb); }

  double run(double a, double b, double fa, double fm, double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = g(lm), frm = g(rm);
    const double left = rule(a, m, fa, flm, fm), right = rule(m, b, fm, frm, fb);
    const double diff = left + right - whole;
    if (std::abs(diff) <= 15.0 * tol || depth >= 50) {
      if (depth >= 50) ++failures;
      error += std::abs(diff) / 15.0;
      return left + right + diff / 15.0;
    }
    return run(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) + run(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
  }
};

// int_a^b u_x^2 / (sqrt(1 + u_x^2) + 1), the excess of arc length over b - a.
ArcLength excess(const WaveProfile& p, double t, double a, double b, double tol) {
  if (a == b) return {};
  const std::function<double(double)> g = [&](double x) {
    const double s = p.slope(x, t);
    return s * s / (std::sqrt(1.0 + s * s) + 1.0);
  };
  Simpson q{g};
  // Split into pieces no longer than a quarter wavelength of the highest mode.
  const std::size_t modes = std::max<std::size_t>(1, std::max(p.displacement.size(), p.velocity.size()));
  const double piece = p.length / (4.0 * static_cast<double>(modes));
  const std::size_t parts = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((b - a) / piece)));
  double total = 0.0;
  for (std::size_t i = 0; i < parts; ++i) {
    const double lo = a + (b - a) * static_cast<double>(i) / static_cast<double>(parts);
    const double hi = i + 1 == parts ? b : a + (b - a) * static_cast<double>(i + 1) / static_cast<double>(parts);
    const double fa = g(lo), fb = g(hi), fm = g(0.5 * (lo + hi));
    total += q.run(lo, hi, fa, fm, fb, q.rule(lo, hi, fa, fm, fb), tol / static_cast<double>(parts), 0);
  }
  if (q.failures > 0) throw FieldError("arc-length quadrature did not converge");
  return {total, q.error};
}

}  // namespace

ArcLength arc_length(const WaveProfile& p, double t, double a, double b, double tol) {
  if (a > b) std::swap(a, b);
  const auto e = excess(p, t, a, b, tol);
  return {(b - a) + e.value, e.error};
}

MetricField wave_metric_field(const WaveProfile& p, std::vector<double> ts, std::vector<double> xs, double tol) {
  if (ts.empty() || xs.size() < 2) throw FieldError("wave field needs a time grid and at least two points");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < 0.0 || xs[i] > p.length) throw FieldError("grid point outside the string");
    if (i > 0 && !(xs[i] > xs[i - 1])) throw FieldError("x grid must be strictly increasing");
  }
  for (double a : p.displacement)
    if (!std::isfinite(a)) throw FieldError("non-finite wave coefficient");
  for (double b : p.velocity)
    if (!std::isfinite(b)) throw FieldError("non-finite wave coefficient");
  const std::size_t nt = ts.size(), nx = xs.size();
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < nx; ++i) labels.push_back("x" + std::to_string(i));
  MetricField f;
  f.fibres.resize(nt);
  f.arc_positions.assign(nt, std::vector<double>(nx, 0.0));
  f.arc_totals.assign(nt, 0.0);
  std::vector<double> errors(nt, 0.0);
  parallel_for(nt, [&](std::size_t k) {
    const double t = ts[k];
    // Excess prefix: E[i] = excess on [0, x_i]; rho(i,j) = |x_j - x_i| + |E_j - E_i| keeps flat strings exact.
    std::vector<double> e(nx, 0.0);
    double acc = 0.0, prev = 0.0;
    for (std::size_t i = 0; i < nx; ++i) {
      const auto seg = excess(p, t, prev, xs[i], tol);
      acc += seg.value;
      errors[k] += seg.error;
      e[i] = acc;
      prev = xs[i];
    }
    const auto tail = excess(p, t, prev, p.length, tol);
    errors[k] += tail.error;
    Matrix d(nx, nx);
    for (std::size_t i = 0; i < nx; ++i)
      for (std::size_t j = 0; j < nx; ++j) d(i, j) = std::abs(xs[j] - xs[i]) + std::abs(e[j] - e[i]);
    for (std::size_t i = 0; i < nx; ++i) f.arc_positions[k][i] = xs[i] + e[i];
    f.arc_totals[k] = p.length + acc + tail.value;
    f.fibres[k] = validate_metric(d, labels);
  });
  for (double e : errors) f.quadrature_error = std::max(f.quadrature_error, e);
  f.thetas = std::move(ts);
  validate_field(f);
  return f;
}

MetricField circle_wave_metric(const MetricField& in) {
  if (in.arc_totals.size() != in.size()) throw FieldError("circle_wave_metric needs a wave field on an interval");
  MetricField out = in;
  for (std::size_t k = 0; k < in.size(); ++k) {
    const auto& s = *in.fibres[k];
    const auto& pos = in.arc_positions[k];
    const double total = in.arc_totals[k];
    const std::size_t n = s.size();
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        // Wrap paths through the identified ends, in both orders.
        const double wrap1 = pos[std::min(i, j)] + (total - pos[std::max(i, j)]);
        d(i, j) = std::min(s(i, j), wrap1);
      }
    try {
      out.fibres[k] = validate_metric(d, s.labels());
    } catch (const MetricError& e) {
      throw FieldError(std::string("circle fibre is not a metric (are both string ends on the grid?): ") + e.what());
    }
  }
  return out;
}

EnvelopeReport lipschitz_envelope(const MetricField& f) {
  validate_field(f);
  if (f.size() < 2) throw FieldError("an envelope needs at least two fibres");
  const std::size_t nf = f.size(), n = f.fibres.front()->size();
  const auto& ref = *f.fibres.front();
  EnvelopeReport r;
  r.m.assign(nf, std::numeric_limits<double>::infinity());
  r.big_m.assign(nf, 0.0);
  for (std::size_t t = 0; t < nf; ++t)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        if (ref(i, j) == 0.0 || (*f.fibres[t])(i, j) == 0.0) throw FieldError("zero distance between distinct points");
        const double ratio = (*f.fibres[t])(i, j) / ref(i, j);
        r.m[t] = std::min(r.m[t], ratio);
        r.big_m[t] = std::max(r.big_m[t], ratio);
      }
  if (n < 2) r.m.assign(nf, 1.0), r.big_m.assign(nf, 1.0);
  r.k = Matrix(nf, nf, 1.0);
  r.big_k = Matrix(nf, nf, 1.0);
  for (std::size_t s = 0; s < nf; ++s)
    for (std::size_t t = 0; t < nf; ++t) {
      if (s == t) continue;
      r.k(s, t) = r.m[t] / r.big_m[s];
      r.big_k(s, t) = r.big_m[t] / r.m[s];
    }
  for (std::size_t s = 0; s < nf; ++s)
    for (std::size_t t = 0; t < nf; ++t)
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const double rs = (*f.fibres[s])(i, j), rt = (*f.fibres[t])(i, j);
          r.max_violation = std::max({r.max_violation, r.k(s, t) * rs - rt, rt - r.big_k(s, t) * rs});
        }
  return r;
}

std::vector<double> retract(std::span<const double> f, double k, double r) {
  if (!(k > 0.0)) throw FieldError("retraction constant must be positive");
  std::vector<double> g(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double pos = std::max(f[i], 0.0), neg = std::max(-f[i], 0.0);
    g[i] = std::min(pos / k, r) - std::min(neg / k, r);
  }
  return g;
}

bool NucleusFieldReport::ok() const {
  for (const auto& s : steps)
    if (s.violations > 0 || s.hausdorff > s.bound + 1e-12) return false;
  return true;
}

namespace {

double directed_uniform_hausdorff(const Nucleus& a, const Nucleus& b) {
  const std::size_t n = a.space->size();
  std::vector<double> best(a.count, 0.0);
  parallel_for(a.count, [&](std::size_t i) {
    const auto f = a.function(i);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < b.count && m > 0.0; ++j) {
      const auto g = b.function(j);
      double d = 0.0;
      for (std::size_t x = 0; x < n && d < m; ++x) d = std::max(d, std::abs(f[x] - g[x]));
      m = std::min(m, d);
    }
    best[i] = m;
  });
  return best.empty() ? 0.0 : *std::max_element(best.begin(), best.end());
}

struct RetractionCheck {
  double displacement = 0.0;
  std::size_t violations = 0;
};

RetractionCheck retract_all(const Nucleus& from, const FiniteMetricSpace& to, double k, double r) {
  RetractionCheck c;
  for (std::size_t i = 0; i < from.count; ++i) {
    const auto f = from.function(i);
    const auto g = retract(f, k, r);
    for (std::size_t x = 0; x < g.size(); ++x) c.displacement = std::max(c.displacement, std::abs(g[x] - f[x]));
    if (!nucleus_member_check(to, r, g).ok) ++c.violations;
  }
  return c;
}

}  // namespace

NucleusFieldReport nucleus_field(const MetricField& f, double r, double eps) {
  validate_field(f);
  for (const auto& s : f.fibres)
    if (r < radius(*s) - 1e-12) throw FieldError("r is below the radius of some fibre");
  NucleusFieldReport rep;
  for (const auto& s : f.fibres) rep.nuclei.push_back(nucleus_net(s, r, eps));
  if (f.size() < 2) return rep;
  const auto env = lipschitz_envelope(f);
  for (std::size_t a = 0; a + 1 < f.size(); ++a) {
    const std::size_t b = a + 1;
    NucleusFieldStep st;
    st.from = a;
    st.to = b;
    // rho_a <= K(b,a) rho_b, so dividing by K(b,a) makes a-members 1-Lipschitz for rho_b.
    const double kf = env.big_k(b, a), kb = env.big_k(a, b);
    st.k = kf;
    const auto fwd = retract_all(rep.nuclei[a], *f.fibres[b], kf, r);
    const auto bwd = retract_all(rep.nuclei[b], *f.fibres[a], kb, r);
    st.violations = fwd.violations + bwd.violations;
    st.displacement = std::max(fwd.displacement, bwd.displacement);
    st.hausdorff = std::max(directed_uniform_hausdorff(rep.nuclei[a], rep.nuclei[b]),
                            directed_uniform_hausdorff(rep.nuclei[b], rep.nuclei[a]));
    st.bound = std::max(r * std::abs(1.0 - 1.0 / kf) + rep.nuclei[b].density,
                        r * std::abs(1.0 - 1.0 / kb) + rep.nuclei[a].density);
    rep.steps.push_back(st);
  }
  return rep;
}

BirkhoffFieldReport birkhoff_field(const MetricField& f, const PointMap& h, double eps, double r, std::size_t n_max,
                                   double nucleus_eps) {
  validate_field(f);
  BirkhoffFieldReport rep;
  for (const auto& s : f.fibres) {
    const auto nuc = nucleus_net(s, r, nucleus_eps, tolerances().nucleus_cap, NucleusKind::Streamed);
    rep.fibres.push_back(birkhoff_rate(DynMap(s, h), nuc, eps, n_max));
    rep.rates.push_back(rep.fibres.back().rate);
  }
  for (std::size_t i = 0; i < rep.rates.size(); ++i) {
    bool all_higher = rep.rates.size() > 1;
    if (i > 0) all_higher = all_higher && rep.rates[i - 1] > rep.rates[i];
    if (i + 1 < rep.rates.size()) all_higher = all_higher && rep.rates[i + 1] > rep.rates[i];
    if (all_higher) rep.usc_flags.push_back(i);
  }
  return rep;
}

namespace {

// Same rounding as project_circle_map on an equally spaced net, without building the space.
bool projections_bijective(std::size_t n, std::span<const double> ts) {
  const double len = 2 * std::numbers::pi, step = len / static_cast<double>(n);
  for (double t : ts) {
    const auto g = sine_pluck(t);
    std::vector<char> hit(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double y = std::fmod(g(static_cast<double>(i) * step), len);
      if (y < 0.0) y += len;
      const std::size_t j = static_cast<std::size_t>(std::floor(y / step + 0.5)) % n;
      if (hit[j]) return false;
      hit[j] = 1;
    }
  }
  return true;
}

// Boundary of a fibre simplex: its extreme points with their W1 distances.
SpacePtr extreme_boundary(const std::vector<Measure>& ext) {
  return validate_metric(w1_matrix(ext));
}

}  // namespace

std::size_t minimal_rotation_net(std::size_t q, std::span<const double> ts, std::size_t from, std::size_t limit) {
  if (q == 0) throw FieldError("q must be positive");
  for (std::size_t n = std::max<std::size_t>({q, 2, from}); n <= limit; ++n)
    if (n % q == 0 && projections_bijective(n, ts)) return n;
  return 0;
}

RotationFieldReport rotation_field(std::size_t p, std::size_t q, std::vector<double> ts, std::size_t n,
                                   const RotationFieldOptions& options) {
  if (q == 0 || n % q != 0) throw FieldError("net size must be a multiple of q");
  if (ts.empty()) throw FieldError("rotation field needs a t grid");
  for (double t : ts)
    if (!(std::abs(t) < 2.0)) throw FieldError("g_t is a homeomorphism only for |t| < 2");
  const double len = 2 * std::numbers::pi;
  auto net = circle_net(n, len);
  const DynMap h = rotation(net, static_cast<long>(p * (n / q)));
  const auto base_cycles = invariant_measures(h).cycles;
  const std::size_t nt = ts.size();

  RotationFieldReport rep;
  rep.ts = ts;
  rep.steps = p * (n / q);
  rep.q = q;
  rep.net_size = n;
  rep.mode = options.mode;

  // Per fibre: extremes on a common space (for dhat), and the boundary metric (for gamma).
  std::vector<std::vector<Measure>> ext_common;
  std::vector<SpacePtr> fibre_space(nt);
  std::vector<std::vector<double>> coords(nt, std::vector<double>(n));
  for (std::size_t k = 0; k < nt; ++k)
    for (std::size_t i = 0; i < n; ++i) coords[k][i] = sine_pluck(ts[k])(net->circle_coordinates()[i]);

  if (options.mode == RotationMode::Exact) {
    // Union of every fibre's points; equal coordinates share one point.
    std::map<double, std::size_t> slot;
    std::vector<double> all;
    std::vector<std::vector<std::size_t>> where(nt, std::vector<std::size_t>(n));
    for (std::size_t k = 0; k < nt; ++k)
      for (std::size_t i = 0; i < n; ++i) {
        double c = std::fmod(coords[k][i], len);
        if (c < 0.0) c += len;
        auto [it, fresh] = slot.emplace(c, all.size());
        if (fresh) all.push_back(c);
        where[k][i] = it->second;
      }
    auto uni = circle_points(all, len);
    for (std::size_t k = 0; k < nt; ++k) {
      fibre_space[k] = circle_points(coords[k], len);
      rep.dynamics.emplace_back(fibre_space[k], h.map);
      std::vector<Measure> e;
      for (const auto& c : base_cycles) {
        std::vector<std::size_t> sup;
        for (std::size_t i : c) sup.push_back(where[k][i]);
        e.push_back(Measure::uniform(uni, sup));
      }
      ext_common.push_back(std::move(e));
      rep.orbits.push_back(base_cycles);
    }
  } else {
    std::vector<DynMap> proj;
    for (double t : ts) proj.push_back(project_circle_map(net, sine_pluck(t)));
    for (std::size_t k = 0; k < nt; ++k)
      if (!is_bijective(proj[k])) {
        const std::size_t need = minimal_rotation_net(q, ts, n);
        throw FieldError("projected g_t is not a bijection of the " + std::to_string(n) +
                         "-point net; minimal admissible net size " +
                         (need ? std::to_string(need) : std::string("above the search limit")));
      }
    for (std::size_t k = 0; k < nt; ++k) {
      fibre_space[k] = net;
      rep.dynamics.push_back(deform(proj[k], h));
      std::vector<Measure> e;
      std::vector<std::vector<std::size_t>> orb;
      for (const auto& c : base_cycles) {
        std::vector<std::size_t> sup;
        for (std::size_t i : c) sup.push_back(proj[k](i));
        std::sort(sup.begin(), sup.end());
        e.push_back(Measure::uniform(net, sup));
        orb.push_back(sup);
      }
      ext_common.push_back(std::move(e));
      rep.orbits.push_back(std::move(orb));
    }
  }

  rep.fibres = fibre_space;
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<Measure> e;
    for (const auto& c : rep.orbits[k]) e.push_back(Measure::uniform(fibre_space[k], c));
    rep.extremes.push_back(std::move(e));
  }
  std::vector<SimplexNet> nets;
  for (std::size_t k = 0; k < nt; ++k) nets.push_back(simplex_net(extreme_boundary(ext_common[k]), options.simplex_resolution));

  rep.dhat = Matrix(nt, nt);
  rep.gamma = Matrix(nt, nt);
  rep.distortion = Matrix(nt, nt);
  PointMap ident(base_cycles.size());
  std::iota(ident.begin(), ident.end(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t b = a + 1; b < nt; ++b) pairs.emplace_back(a, b);
  parallel_for(pairs.size(), [&](std::size_t w) {
    const auto [a, b] = pairs[w];
    const double d = hull_hausdorff(ext_common[a], ext_common[b], options.hull_resolution);
    const double g = intertwining_gap_at(nets[a], nets[b], ident, ident).gamma();
    double dis = 0.0;
    const auto& sa = *fibre_space[a];
    const auto& sb = *fibre_space[b];
    if (options.mode == RotationMode::Exact) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) dis = std::max(dis, std::abs(sa(i, j) - sb(i, j)));
    } else {
      // Distortion of the analytic g_b g_a^-1 on the points g_a(x_i).
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
          const double da = std::abs(coords[a][i] - coords[a][j]), db = std::abs(coords[b][i] - coords[b][j]);
          const double ra = std::min(std::fmod(da, len), len - std::fmod(da, len));
          const double rb = std::min(std::fmod(db, len), len - std::fmod(db, len));
          dis = std::max(dis, std::abs(ra - rb));
        }
    }
    rep.dhat(a, b) = rep.dhat(b, a) = d;
    rep.gamma(a, b) = rep.gamma(b, a) = g;
    rep.distortion(a, b) = rep.distortion(b, a) = dis;
  });
  return rep;
}

ContinuityReport continuity_report(std::vector<std::vector<double>> values, double tol) {
  ContinuityReport r;
  for (const auto& v : values) {
    std::vector<std::size_t> jumps;
    double step = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i + 1 < v.size()) step = std::max(step, std::abs(v[i + 1] - v[i]));
      if (i == 0 || i + 1 == v.size()) continue;
      if (v[i] < std::min(v[i - 1], v[i + 1]) - tol) jumps.push_back(i);
    }
    r.lower_jumps.push_back(std::move(jumps));
    r.max_step.push_back(step);
  }
  r.values = std::move(values);
  return r;
}

ContinuityReport field_continuity_check(const MetricField& f, std::span<const std::vector<std::vector<double>>> sections,
                                        double tol) {
  validate_field(f);
  std::vector<std::vector<double>> values;
  for (const auto& sec : sections) {
    if (sec.size() != f.size()) throw FieldError("a section needs one observable per fibre");
    std::vector<double> v;
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (sec[k].size() != f.fibres[k]->size()) throw FieldError("section value count does not match the fibre");
      v.push_back(lipschitz_constant(*f.fibres[k], sec[k]));
    }
    values.push_back(std::move(v));
  }
  return continuity_report(std::move(values), tol);
}

}  // namespace qmlab
