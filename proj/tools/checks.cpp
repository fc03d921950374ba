#include "checks.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "io.hpp"
#include "qmlab/distances.hpp"
#include "qmlab/dynamics.hpp"
#include "qmlab/fields.hpp"
#include "qmlab/lipgeometry.hpp"
#include "qmlab/markov.hpp"

namespace qmlab::checks {

namespace {

SpacePtr random_space(SplitMix64& g, std::size_t n) {
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d(i, j) = d(j, i) = 0.5 + 2.5 * g.uniform();
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d(i, j) = std::min(d(i, j), d(i, k) + d(k, j));
  return validate_metric(d);
}

Measure random_measure(SplitMix64& g, const SpacePtr& x) {
  std::vector<double> w(x->size());
  double total = 0.0;
  for (auto& v : w) total += v = g.uniform() < 0.3 ? 0.0 : g.uniform();
  if (total == 0.0) w[0] = total = 1.0;
  for (auto& v : w) v /= total;
  return Measure(x, w);
}

CheckResult worst(std::string name, double value, double limit) {
  return {std::move(name), value <= limit, "worst " + io::format_double(value) + " (limit " + io::format_double(limit) + ")"};
}

CheckResult transport_duality(std::uint64_t seed) {
  SplitMix64 g(derive_seed(seed, 1));
  double gap = 0.0;
  for (int t = 0; t < 40; ++t) {
    const auto x = random_space(g, 3 + static_cast<std::size_t>(g.next() % 8));
    const auto mu = random_measure(g, x), nu = random_measure(g, x);
    gap = std::max(gap, std::abs(w1(mu, nu) - wasserstein1_dual(mu, nu).value));
  }
  return worst("transport: primal equals dual", gap, tolerances().duality_gap);
}

CheckResult w1_triangle(std::uint64_t seed) {
  SplitMix64 g(derive_seed(seed, 2));
  double excess = 0.0;
  for (int t = 0; t < 40; ++t) {
    const auto x = random_space(g, 6);
    const auto a = random_measure(g, x), b = random_measure(g, x), c = random_measure(g, x);
    excess = std::max({excess, w1(a, c) - w1(a, b) - w1(b, c), std::abs(w1(a, b) - w1(b, a))});
  }
  return worst("transport: W1 triangle and symmetry", excess, 1e-7);
}

CheckResult winf_dominates(std::uint64_t seed) {
  SplitMix64 g(derive_seed(seed, 3));
  double excess = 0.0;
  for (int t = 0; t < 30; ++t) {
    const auto x = random_space(g, 5);
    const auto a = random_measure(g, x), b = random_measure(g, x);
    excess = std::max(excess, w1(a, b) - wasserstein_inf(a, b));
  }
  return worst("transport: W1 at most W_inf", excess, 1e-9);
}

CheckResult gh_two_point(std::uint64_t seed) {
  SplitMix64 g(derive_seed(seed, 4));
  double err = 0.0;
  for (int t = 0; t < 20; ++t) {
    const double a = 0.1 + 3 * g.uniform(), b = 0.1 + 3 * g.uniform();
    const auto x = validate_metric(Matrix::from_rows({{0, a}, {a, 0}}));
    const auto y = validate_metric(Matrix::from_rows({{0, b}, {b, 0}}));
    err = std::max(err, std::abs(gh_distance(*x, *y).value - std::abs(a - b) / 2));
  }
  return worst("distances: two-point GH", err, 1e-12);
}

CheckResult state_metric_roundtrip() {
  const auto x = interval_net(5, std::numbers::pi);
  const double r = radius(*x), eps = 0.2;
  const auto d = nucleus_state_metric(nucleus_net(x, r, eps));
  double err = 0.0;
  for (std::size_t i = 0; i < x->size(); ++i)
    for (std::size_t j = 0; j < x->size(); ++j) err = std::max(err, std::abs(d(i, j) - (*x)(i, j)));
  return worst("lipgeometry: nucleus recovers the metric", err, eps * (1 + x->diameter() / r));
}

CheckResult nucleus_membership() {
  const auto x = circle_net(6, 1.0);
  const auto nuc = nucleus_net(x, radius(*x), 0.1);
  std::size_t bad = 0;
  for (std::size_t k = 0; k < nuc.count; ++k)
    if (!nucleus_member_check(*x, nuc.r, nuc.function(k)).ok) ++bad;
  return {"lipgeometry: nucleus members are in the polytope", bad == 0,
          std::to_string(bad) + " of " + std::to_string(nuc.count) + " members fail"};
}

CheckResult invariant_measures_fixed(std::uint64_t seed) {
  SplitMix64 g(derive_seed(seed, 5));
  double err = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto x = random_space(g, 7);
    PointMap m(7);
    for (auto& v : m) v = g.next() % 7;
    const DynMap h(x, m);
    for (const auto& mu : invariant_measures(h).extremes) {
      const auto pushed = pushforward(mu, h.map);
      for (std::size_t i = 0; i < 7; ++i) err = std::max(err, std::abs(pushed[i] - mu[i]));
    }
  }
  return worst("dynamics: extreme measures are invariant", err, 1e-12);
}

CheckResult birkhoff_periodic() {
  double worst_dev = 0.0;
  for (std::size_t q : {4u, 6u}) {
    const auto x = circle_net(q, 1.0);
    const auto rep = birkhoff_rate(rotation(x, 1), nucleus_net(x, radius(*x), 0.1), 0.1, 4 * q);
    for (std::size_t k = 1; k <= 4; ++k) worst_dev = std::max(worst_dev, rep.deviation[k * q - 1]);
  }
  return worst("dynamics: Birkhoff deviation vanishes at multiples of the period", worst_dev, 1e-12);
}

CheckResult stationary_fixed() {
  const auto c = cantor_net(3);
  const auto k = kernel_from_maps(two_contractions(c, 3));
  const auto st = stationary_measures(k);
  double err = 0.0;
  for (const auto& mu : st.measures) {
    const auto nxt = step(mu, k);
    for (std::size_t i = 0; i < mu.size(); ++i) err = std::max(err, std::abs(nxt[i] - mu[i]));
  }
  return {"markov: stationary measure is fixed by the kernel", st.unique() && err <= 1e-10,
          "classes " + std::to_string(st.measures.size()) + ", residual " + io::format_double(err)};
}

CheckResult wave_flat_and_sandwich() {
  const std::vector<double> xs{0.0, 0.8, 1.6, 2.4, std::numbers::pi};
  const auto flat = wave_metric_field(flat_profile(), {0.0, 1.0}, xs);
  double err = 0.0;
  for (const auto& s : flat.fibres)
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < xs.size(); ++j) err = std::max(err, std::abs((*s)(i, j) - std::abs(xs[i] - xs[j])));
  const auto env = lipschitz_envelope(wave_metric_field(triangular_pluck(), {0.0, 0.5, 1.0, 1.5}, xs));
  return {"fields: flat string is Euclidean and the envelope sandwich holds", err == 0.0 && env.ok(),
          "flat error " + io::format_double(err) + ", sandwich violation " + io::format_double(env.max_violation)};
}

CheckResult retraction_field() {
  const auto f = scaled_field(interval_net(4, 1.0), {0.0, 0.25, 0.5}, [](double t) { return 1.0 + t; });
  const auto rep = nucleus_field(f, 1.5 * radius(*f.fibres.back()), 0.25);
  return {"fields: retracted nuclei stay within the bound", rep.ok(), std::to_string(rep.steps.size()) + " steps"};
}

CheckResult rotation_symmetry() {
  const auto rep = rotation_field(1, 4, {-0.5, 0.0, 0.5}, 8);
  double asym = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    asym = std::max({asym, rep.dhat(a, a), rep.gamma(a, a)});
    for (std::size_t b = 0; b < 3; ++b)
      asym = std::max({asym, std::abs(rep.dhat(a, b) - rep.dhat(b, a)), std::abs(rep.gamma(a, b) - rep.gamma(b, a))});
  }
  return worst("fields: rotation tables are symmetric with zero diagonal", asym, 0.0);
}

}  // namespace

std::vector<CheckResult> run_invariant_suite(std::uint64_t seed) {
  std::vector<std::function<CheckResult()>> all{
      [&] { return transport_duality(seed); }, [&] { return w1_triangle(seed); },
      [&] { return winf_dominates(seed); },    [&] { return gh_two_point(seed); },
      state_metric_roundtrip,                  nucleus_membership,
      [&] { return invariant_measures_fixed(seed); }, birkhoff_periodic,
      stationary_fixed,                        wave_flat_and_sandwich,
      retraction_field,                        rotation_symmetry,
  };
  std::vector<CheckResult> out;
  for (std::size_t i = 0; i < all.size(); ++i) {
    try {
      out.push_back(all[i]());
    } catch (const DomainError& e) {
      out.push_back({"check " + std::to_string(i + 1), false, e.what()});
    }
  }
  return out;
}

}  // namespace qmlab::checks
