#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qmlab/distances.hpp"

using namespace qmlab;

namespace {

// Half the least distortion over every relation covering both sides.
double gh_by_relations(const FiniteMetricSpace& x, const FiniteMetricSpace& y) {
  const std::size_t nx = x.size(), ny = y.size(), cells = nx * ny;
  double best = 1e300;
  for (unsigned long s = 1; s < (1ul << cells); ++s) {
    Correspondence r;
    for (std::size_t c = 0; c < cells; ++c)
      if (s >> c & 1ul) r.pairs.emplace_back(c / ny, c % ny);
    std::vector<bool> hx(nx), hy(ny);
    for (auto [a, b] : r.pairs) hx[a] = hy[b] = true;
    if (std::find(hx.begin(), hx.end(), false) != hx.end() || std::find(hy.begin(), hy.end(), false) != hy.end())
      continue;
    best = std::min(best, correspondence_distortion(x, y, r));
  }
  return best / 2;
}

std::vector<PointMap> all_maps(std::size_t nx, std::size_t ny) {
  std::vector<PointMap> out;
  PointMap f(nx, 0);
  while (true) {
    out.push_back(f);
    std::size_t i = 0;
    while (i < nx && ++f[i] == ny) f[i++] = 0;
    if (i == nx) break;
  }
  return out;
}

// Direct evaluation of the gap defects for a map pair, no caching.
double naive_gamma(const SimplexNet& sx, const SimplexNet& sy, const PointMap& f, const PointMap& g) {
  double v = 0.0;
  for (const auto& a : sx.measures)
    for (const auto& b : sx.measures)
      v = std::max(v, std::abs(w1(pushforward(a, f, sy.boundary), pushforward(b, f, sy.boundary)) - w1(a, b)));
  for (const auto& a : sy.measures)
    for (const auto& b : sy.measures)
      v = std::max(v, std::abs(w1(pushforward(a, g, sx.boundary), pushforward(b, g, sx.boundary)) - w1(a, b)));
  for (const auto& a : sx.measures)
    v = std::max(v, w1(pushforward(pushforward(a, f, sy.boundary), g, sx.boundary), a));
  for (const auto& b : sy.measures)
    v = std::max(v, w1(pushforward(pushforward(b, g, sx.boundary), f, sy.boundary), b));
  return v;
}

SpacePtr two_point(double d) { return validate_metric(Matrix::from_rows({{0, d}, {d, 0}})); }

}  // namespace

TEST_CASE("gh distance") {
  auto c = circle_net(5, 5);
  CHECK(gh_distance(*c, *c).value == 0.0);
  auto single = validate_metric(Matrix::from_rows({{0}}));
  CHECK(gh_distance(*single, *single).value == 0.0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int i = 0; i < 20; ++i) {
    const double d1 = u(rng), d2 = u(rng);
    auto r = gh_distance(*two_point(d1), *two_point(d2));
    CHECK(r.value == doctest::Approx(std::abs(d1 - d2) / 2));
    CHECK(r.kind == BoundKind::Exact);
  }
  for (int trial = 0; trial < 25; ++trial) {
    auto x = oracle::random_space(rng, 1 + trial % 4), y = oracle::random_space(rng, 1 + (trial / 4) % 4);
    auto r = gh_distance(*x, *y);
    CHECK(r.value == doctest::Approx(gh_by_relations(*x, *y)));
    CHECK(r.value == gh_distance(*y, *x).value);
    CHECK(r.lower_bound <= r.value + 1e-12);
    CHECK(correspondence_distortion(*x, *y, r.witness) == doctest::Approx(2 * r.value));
  }
  // Beyond the budget: flagged upper bound, never below the diameter bound.
  SearchBudget tiny{10, 50};
  auto big = gh_distance(*circle_net(6, 6), *circle_net(7, 7), tiny);
  CHECK(big.kind == BoundKind::Upper);
  CHECK(big.value >= big.lower_bound);
}

TEST_CASE("simplex nets") {
  auto net = simplex_net(interval_net(3, 1), 2);
  CHECK(net.measures.size() == 6);
  auto x = interval_net(3, 1);
  auto wrapped = simplex_net(x, {Measure::uniform(x)}, 0.5);
  CHECK(wrapped.measures.size() == 4);
  CHECK_THROWS_AS(simplex_net(x, {Measure::uniform(interval_net(3, 2))}, 0.5), DistanceError);
}

TEST_CASE("epsilon isometry check") {
  auto x = interval_net(3, 1);
  auto sx = simplex_net(x, 2);
  PointMap id{0, 1, 2};
  auto r = epsilon_isometry_check(id, sx, sx);
  CHECK(r.distortion == 0.0);
  CHECK(r.density_defect == 0.0);
  auto two = simplex_net(two_point(1.7), 2);
  PointMap constant{0, 0};
  CHECK(epsilon_isometry_check(constant, two, two).distortion == doctest::Approx(1.7));
  CHECK(epsilon_isometry_check(constant, two, two).boundary_distortion == doctest::Approx(1.7));

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto a = simplex_net(oracle::random_space(rng, 3), 2), b = simplex_net(oracle::random_space(rng, 4), 2);
    PointMap f(3);
    for (auto& v : f) v = rng() % 4;
    auto rep = epsilon_isometry_check(f, a, b);
    double dist = 0.0, surj = 0.0, bd = 0.0;
    for (const auto& p : a.measures)
      for (const auto& q : a.measures)
        dist = std::max(dist, std::abs(w1(pushforward(p, f, b.boundary), pushforward(q, f, b.boundary)) - w1(p, q)));
    for (const auto& nu : b.measures) {
      double m = 1e300;
      for (const auto& p : a.measures) m = std::min(m, w1(pushforward(p, f, b.boundary), nu));
      surj = std::max(surj, m);
    }
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) bd = std::max(bd, std::abs((*b.boundary)(f[i], f[j]) - (*a.boundary)(i, j)));
    CHECK(rep.distortion == doctest::Approx(dist));
    CHECK(rep.density_defect == doctest::Approx(surj));
    CHECK(rep.boundary_distortion == doctest::Approx(bd));
    // Net distortion never undercuts the boundary one (point masses are in the net)
    // and exceeds it by at most the net density.
    CHECK(rep.distortion >= rep.boundary_distortion - 1e-12);
    CHECK(rep.distortion <= rep.boundary_distortion + a.density + 1e-9);
  }
}

TEST_CASE("intertwining gap") {
  auto sx = simplex_net(circle_net(4, 4), 2);
  auto g0 = intertwining_gap(sx, sx);
  CHECK(g0.gamma == 0.0);
  CHECK(g0.report.kind == BoundKind::Exact);

  // Relabelled circle: same metric, points listed in reverse order.
  Matrix d(4, 4);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) d(i, j) = (*circle_net(4, 4))(3 - i, 3 - j);
  auto sy = simplex_net(validate_metric(d, {"a", "b", "c", "d"}), 2);
  CHECK(intertwining_gap(sx, sy).gamma == 0.0);

  auto a = simplex_net(interval_net(3, 1), 2), b = simplex_net(interval_net(3, 1.2), 2);
  auto gap = intertwining_gap(a, b);
  CHECK(gap.gamma <= 0.2 + 1e-12);
  CHECK(gap.gamma >= 0.1 - a.density);
  double oracle_best = 1e300;
  for (const auto& f : all_maps(3, 3))
    for (const auto& g : all_maps(3, 3)) oracle_best = std::min(oracle_best, naive_gamma(a, b, f, g));
  CHECK(gap.gamma == doctest::Approx(oracle_best));
  CHECK(gap.gamma == doctest::Approx(naive_gamma(a, b, gap.report.forward, gap.report.backward)));
  CHECK(intertwining_gap(b, a).gamma == gap.gamma);

  auto fk = fukaya_distance(a, b);
  CHECK(fk.value <= gap.gamma + 1e-12);
  CHECK(fk.value >= 0.1 - a.density);
  CHECK(fk.value <= 0.2 + 1e-12);
  CHECK(fukaya_distance(sx, sx).value == 0.0);

  // Non-exhaustive regime is flagged and still feasible.
  SearchBudget tiny{4, 20};
  auto up = intertwining_gap(a, b, tiny);
  CHECK(up.report.kind == BoundKind::Upper);
  CHECK(up.gamma >= gap.gamma - 1e-12);
}

TEST_CASE("quasimetric, sandwich and symmetry on random triples") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 6; ++trial) {
    auto x = simplex_net(oracle::random_space(rng, 2 + trial % 2, 0.5, 1.5), 2);
    auto y = simplex_net(oracle::random_space(rng, 3, 0.5, 1.5), 2);
    auto z = simplex_net(oracle::random_space(rng, 2 + (trial + 1) % 2, 0.5, 1.5), 2);
    const double xy = intertwining_gap(x, y).gamma, yz = intertwining_gap(y, z).gamma;
    auto xz = intertwining_gap(x, z);
    CHECK(xz.gamma <= 2 * (xy + yz) + 1e-9);
    CHECK(fukaya_distance(x, z).value <= xz.gamma + 1e-12);
    CHECK(intertwining_gap(z, x).gamma == doctest::Approx(xz.gamma));
    auto dq = dq_upper(x, z, xz.report.forward);
    CHECK(xz.gamma <= 2 * dq.value + 1e-12);
  }
}

TEST_CASE("dq upper bound") {
  auto x = interval_net(3, 1);
  auto sx = simplex_net(x, 2);
  PointMap id{0, 1, 2};
  double last = 0.0;
  for (double delta : {0.05, 0.1, 0.2, 0.4}) {
    auto r = dq_upper(sx, sx, id, delta);
    CHECK(r.value <= delta / 2 + sx.density + 1e-12);
    CHECK(r.value >= delta / 2 - 1e-12);
    CHECK(r.value >= last);
    last = r.value;
  }
  CHECK_THROWS_AS(dq_upper(sx, sx, id, 0.0), DistanceError);

  // Point-mass nets: Hausdorff distance of the two boundaries inside the bridge.
  std::mt19937_64 rng(5);
  auto p = oracle::random_space(rng, 3), q = oracle::random_space(rng, 3);
  auto np = simplex_net(p, 1), nq = simplex_net(q, 1);
  PointMap f{2, 0, 1};
  const double delta = map_distortion(f, *p, *q) + 0.1;
  auto bridge = bridge_metric(*p, *q, f, delta);
  const double h = hausdorff_distance(*bridge, SubsetRef(bridge, {0, 1, 2}), SubsetRef(bridge, {3, 4, 5}));
  CHECK(dq_upper(np, nq, f, delta).value == doctest::Approx(h));

  // Circles of circumference 2 pi and 2 pi (1 + s): shrinking s shrinks the bound.
  double prev = 1e300;
  for (double s : {0.4, 0.2, 0.1, 0.05}) {
    auto a = simplex_net(circle_net(4, 2 * std::numbers::pi), 2);
    auto b = simplex_net(circle_net(4, 2 * std::numbers::pi * (1 + s)), 2);
    PointMap nat{0, 1, 2, 3};
    auto r = dq_upper(a, b, nat);
    CHECK(r.value < prev);
    prev = r.value;
  }
  CHECK(prev < 0.2);

  // Isometric boundaries: the default delta floor still yields a metric bridge.
  auto tri = simplex_net(validate_metric(Matrix::from_rows({{0, 1, 1}, {1, 0, 1}, {1, 1, 0}})), 2);
  const auto iso = dq_upper(tri, tri, PointMap{2, 0, 1});
  CHECK(iso.delta > 2 * tolerances().metric_axiom);
  CHECK(iso.value <= iso.delta / 2 + 1e-12);
}
