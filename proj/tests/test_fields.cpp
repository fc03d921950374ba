#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "qmlab/fields.hpp"

using namespace qmlab;

namespace {

constexpr double kPi = std::numbers::pi;

// Midpoint rule for the arc length of u(x,t) = a sin(kx) cos(kt) on [lo, hi], string length pi.
double riemann_arc(double a, double k, double t, double lo, double hi, std::size_t steps) {
  const double h = (hi - lo) / static_cast<double>(steps);
  double s = 0.0;
  for (std::size_t i = 0; i < steps; ++i) {
    const double x = lo + (static_cast<double>(i) + 0.5) * h;
    const double ux = a * k * std::cos(k * x) * std::cos(k * t);
    s += std::sqrt(1.0 + ux * ux) * h;
  }
  return s;
}

double brute_lipschitz(const FiniteMetricSpace& x, const std::vector<double>& f) {
  double l = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (i != j) l = std::max(l, std::abs(f[i] - f[j]) / x(i, j));
  return l;
}

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return v;
}

}  // namespace

TEST_CASE("flat string gives the interval metric exactly") {
  const std::vector<double> xs{0.0, 0.5, 1.25, 2.0, kPi};
  const auto f = wave_metric_field(flat_profile(), {0.0, 1.0, 2.0}, xs);
  for (const auto& s : f.fibres)
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (std::size_t j = 0; j < xs.size(); ++j) CHECK((*s)(i, j) == std::abs(xs[i] - xs[j]));
  for (double total : f.arc_totals) CHECK(total == kPi);
}

TEST_CASE("single mode is flat at a quarter period") {
  const auto p = single_mode(0.7);
  const std::vector<double> xs = linspace(0.0, kPi, 6);
  const auto f = wave_metric_field(p, {kPi / 2}, xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j)
      CHECK((*f.fibres[0])(i, j) == doctest::Approx(std::abs(xs[i] - xs[j])).epsilon(1e-8));
}

TEST_CASE("arc length agrees with a fine Riemann sum") {
  for (double t : {0.0, 0.4, 2.5}) {
    CAPTURE(t);
    const auto p = single_mode(0.5, 2);
    const double ref = riemann_arc(0.5, 2.0, t, 0.0, kPi, 1000000);
    CHECK(std::abs(arc_length(p, t, 0.0, kPi).value - ref) < 1e-6);
    const std::vector<double> xs{0.3, 1.1, 2.9};
    const auto f = wave_metric_field(p, {t}, xs);
    CHECK(std::abs((*f.fibres[0])(0, 2) - riemann_arc(0.5, 2.0, t, 0.3, 2.9, 1000000)) < 1e-6);
    CHECK(std::abs(f.arc_totals[0] - ref) < 1e-6);
  }
}

TEST_CASE("wave field is periodic in time") {
  const auto p = triangular_pluck();
  const std::vector<double> xs = linspace(0.0, kPi, 7);
  const double t0 = 0.37;
  const auto f = wave_metric_field(p, {t0, t0 + p.period()}, xs);
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j)
      CHECK(std::abs((*f.fibres[0])(i, j) - (*f.fibres[1])(i, j)) < 1e-9);
}

TEST_CASE("triangular pluck coefficients reproduce the shape") {
  // Sum of the sine series at the peak approaches the height as modes grow.
  const auto p = triangular_pluck(400, 0.5);
  double u = 0.0;
  for (std::size_t k = 1; k <= p.displacement.size(); ++k) u += p.displacement[k - 1] * std::sin(k * kPi / 2);
  CHECK(u == doctest::Approx(0.5).epsilon(1e-3));
  CHECK_THROWS_AS(triangular_pluck(4, 0.5, 0.0), FieldError);
}

TEST_CASE("wave field input validation") {
  CHECK_THROWS_AS(wave_metric_field(flat_profile(), {0.0}, {0.0}), FieldError);
  CHECK_THROWS_AS(wave_metric_field(flat_profile(), {0.0}, {1.0, 0.5}), FieldError);
  CHECK_THROWS_AS(wave_metric_field(flat_profile(), {0.0}, {0.0, 4.0}), FieldError);
  CHECK_THROWS_AS(wave_metric_field(flat_profile(), {1.0, 0.0}, {0.0, 1.0}), FieldError);
}

TEST_CASE("circle wave metric wraps through the identified ends") {
  const std::vector<double> xs{0.0, kPi / 4, kPi / 2, 3 * kPi / 4};
  const auto c = circle_wave_metric(wave_metric_field(flat_profile(), {0.0}, xs));
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double d = std::abs(xs[i] - xs[j]);
      CHECK((*c.fibres[0])(i, j) == doctest::Approx(std::min(d, kPi - d)).epsilon(1e-12));
    }
  CHECK((*c.fibres[0])(0, 3) == doctest::Approx(kPi / 4).epsilon(1e-12));

  const auto p = single_mode(0.4);
  const auto w = wave_metric_field(p, {0.0}, {0.2, 1.0, 2.5});
  const auto cw = circle_wave_metric(w);
  const double total = w.arc_totals[0];
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const double d = (*w.fibres[0])(i, j);
      CHECK((*cw.fibres[0])(i, j) == doctest::Approx(std::min(d, total - d)).epsilon(1e-12));
    }

  CHECK_THROWS_AS(circle_wave_metric(wave_metric_field(flat_profile(), {0.0}, {0.0, 1.0, kPi})), FieldError);
  CHECK_THROWS_AS(circle_wave_metric(constant_field(interval_net(3, 1.0), {0.0})), FieldError);
}

TEST_CASE("lipschitz envelope") {
  const auto base = interval_net(5, 1.0);
  SUBCASE("constant field") {
    const auto env = lipschitz_envelope(constant_field(base, {0.0, 1.0, 2.0}));
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t t = 0; t < 3; ++t) {
        CHECK(env.k(s, t) == doctest::Approx(1.0));
        CHECK(env.big_k(s, t) == doctest::Approx(1.0));
      }
    CHECK(env.ok());
  }
  SUBCASE("scaled field") {
    const std::vector<double> th{0.0, 0.25, 0.5};
    const auto env = lipschitz_envelope(scaled_field(base, th, [](double t) { return 1.0 + t; }));
    for (std::size_t s = 0; s < 3; ++s)
      for (std::size_t t = 0; t < 3; ++t) {
        CHECK(env.k(s, t) == doctest::Approx((1.0 + th[t]) / (1.0 + th[s])).epsilon(1e-12));
        CHECK(env.big_k(s, t) == doctest::Approx((1.0 + th[t]) / (1.0 + th[s])).epsilon(1e-12));
      }
    CHECK(env.max_violation < 1e-12);
  }
  SUBCASE("wave field sandwich holds pairwise") {
    const auto f = wave_metric_field(triangular_pluck(), linspace(0.0, kPi, 5), linspace(0.0, kPi, 6));
    const auto env = lipschitz_envelope(f);
    CHECK(env.ok());
    for (std::size_t s = 0; s < f.size(); ++s)
      for (std::size_t t = 0; t < f.size(); ++t)
        for (std::size_t i = 0; i < 6; ++i)
          for (std::size_t j = i + 1; j < 6; ++j) {
            const double rs = (*f.fibres[s])(i, j), rt = (*f.fibres[t])(i, j);
            CHECK(env.k(s, t) * rs <= rt + 1e-9);
            CHECK(rt <= env.big_k(s, t) * rs + 1e-9);
          }
  }
  CHECK_THROWS_AS(lipschitz_envelope(constant_field(base, {0.0})), FieldError);
}

TEST_CASE("retraction clips after scaling") {
  const std::vector<double> f{2.0, -3.0, 0.5, 0.0};
  const auto g = retract(f, 2.0, 1.0);
  CHECK(g[0] == 1.0);
  CHECK(g[1] == -1.0);
  CHECK(g[2] == 0.25);
  CHECK(g[3] == 0.0);
  CHECK_THROWS_AS(retract(f, 0.0, 1.0), FieldError);
}

TEST_CASE("nucleus field") {
  const auto base = interval_net(4, 1.0);
  SUBCASE("constant field has identical nuclei") {
    const auto rep = nucleus_field(constant_field(base, {0.0, 1.0}), 1.0, 0.25);
    REQUIRE(rep.steps.size() == 1);
    CHECK(rep.steps[0].hausdorff == 0.0);
    CHECK(rep.steps[0].violations == 0);
    CHECK(rep.ok());
  }
  SUBCASE("scaled field stays within the retraction bound") {
    const auto f = scaled_field(base, {0.0, 0.1, 0.2}, [](double t) { return 1.0 + t; });
    const auto rep = nucleus_field(f, 1.2, 0.25);
    REQUIRE(rep.steps.size() == 2);
    for (const auto& st : rep.steps) {
      CHECK(st.violations == 0);
      CHECK(st.hausdorff <= st.bound + 1e-12);
      CHECK(st.k == doctest::Approx((1.0 + f.thetas[st.from]) / (1.0 + f.thetas[st.to])).epsilon(1e-12));
    }
    CHECK(rep.ok());
    // Every member of every nucleus is in its own polytope.
    for (std::size_t k = 0; k < rep.nuclei.size(); ++k)
      for (std::size_t i = 0; i < rep.nuclei[k].count; ++i)
        CHECK(nucleus_member_check(*f.fibres[k], 1.2, rep.nuclei[k].function(i)).ok);
  }
  CHECK_THROWS_AS(nucleus_field(constant_field(base, {0.0}), 0.1, 0.25), FieldError);
}

TEST_CASE("birkhoff field") {
  const auto base = circle_net(4, 1.0);
  const auto h = rotation(base, 1);
  SUBCASE("constant field has one rate") {
    const auto f = constant_field(base, {0.0, 0.5, 1.0});
    const auto rep = birkhoff_field(f, h.map, 0.05, 0.5, 32, 0.25);
    const auto nuc = nucleus_net(base, 0.5, 0.25, tolerances().nucleus_cap, NucleusKind::Streamed);
    const auto direct = birkhoff_rate(h, nuc, 0.05, 32);
    for (auto r : rep.rates) CHECK(r == direct.rate);
    CHECK(rep.usc_flags.empty());
  }
  SUBCASE("eps above twice r resolves at once") {
    const auto rep = birkhoff_field(constant_field(base, {0.0, 1.0}), h.map, 1.1, 0.5, 8, 0.25);
    for (auto r : rep.rates) CHECK(r == 1);
  }
  SUBCASE("flags agree with a neighbour comparison") {
    const std::vector<double> th{0.0, 1.0, 2.0, 3.0, 4.0};
    const auto f = scaled_field(base, th, [](double t) { return t == 2.0 ? 0.5 : 1.0 + 0.1 * t; });
    const auto rep = birkhoff_field(f, h.map, 0.03, 0.5, 64, 0.25);
    std::vector<std::size_t> expect;
    for (std::size_t i = 0; i < rep.rates.size(); ++i) {
      const bool left = i == 0 || rep.rates[i - 1] > rep.rates[i];
      const bool right = i + 1 == rep.rates.size() || rep.rates[i + 1] > rep.rates[i];
      if (left && right) expect.push_back(i);
    }
    CHECK(rep.usc_flags == expect);
  }
}

TEST_CASE("rotation field") {
  const auto ts = linspace(-1.0, 1.0, 5);
  const auto rep = rotation_field(1, 4, ts, 32);
  const std::size_t nt = ts.size();
  CHECK(rep.steps == 8);
  for (std::size_t a = 0; a < nt; ++a) {
    CHECK(rep.dhat(a, a) == 0.0);
    CHECK(rep.gamma(a, a) == 0.0);
    for (std::size_t b = 0; b < nt; ++b) {
      CHECK(rep.dhat(a, b) == rep.dhat(b, a));
      CHECK(rep.gamma(a, b) == rep.gamma(b, a));
      CHECK(rep.gamma(a, b) >= 0.0);
      CHECK(rep.gamma(a, b) <= rep.distortion(a, b) + 1e-12);
    }
  }
  // Moving away from the diagonal never brings fibres closer.
  for (std::size_t a = 0; a < nt; ++a)
    for (std::size_t b = a + 1; b + 1 < nt; ++b) CHECK(rep.dhat(a, b + 1) >= rep.dhat(a, b) - 1e-12);

  // t = 0 is the undeformed rotation.
  const auto base = circle_net(32, 2 * kPi);
  const auto inv = invariant_measures(rotation(base, 8));
  CHECK(rep.orbits[2] == inv.cycles);
  for (std::size_t i = 0; i < 32; ++i) CHECK((*rep.fibres[2])(i, (i + 5) % 32) == doctest::Approx((*base)(i, (i + 5) % 32)));
  CHECK(rep.dynamics[2].map == rotation(base, 8).map);
  for (std::size_t k = 0; k < nt; ++k) {
    CHECK(rep.extremes[k].size() == 8);
    CHECK(invariant_measures(rep.dynamics[k]).cycles.size() == 8);
  }
}

TEST_CASE("rotation field input checks and projected mode") {
  CHECK_THROWS_AS(rotation_field(1, 4, {0.0}, 30), FieldError);
  CHECK_THROWS_AS(rotation_field(1, 4, {2.5}, 32), FieldError);
  CHECK(minimal_rotation_net(4, std::vector<double>{0.0}) == 4);
  const std::vector<double> ts{0.0, 1.0};
  try {
    rotation_field(1, 4, ts, 32, {RotationMode::Projected});
    FAIL("projected mode should reject a non-bijective net");
  } catch (const FieldError& e) {
    CHECK(std::string(e.what()).find("minimal admissible") != std::string::npos);
  }
  const auto small = rotation_field(1, 4, {0.0, 0.05}, 16, {RotationMode::Projected});
  CHECK(small.dhat(0, 0) == 0.0);
  CHECK(small.orbits[0].size() == 4);
}

TEST_CASE("continuity diagnostics") {
  const auto base = interval_net(5, 1.0);
  const std::vector<double> th = linspace(0.0, 0.5, 6);
  const std::vector<double> obs{0.0, 0.1, 0.5, 0.2, -0.3};
  std::vector<std::vector<std::vector<double>>> sections{std::vector<std::vector<double>>(th.size(), obs)};
  SUBCASE("constant field") {
    const auto r = field_continuity_check(constant_field(base, th), sections);
    CHECK(r.lower_jumps[0].empty());
    CHECK(r.max_step[0] == 0.0);
  }
  SUBCASE("scaled field divides the constant") {
    const auto f = scaled_field(base, th, [](double t) { return 1.0 + t; });
    const auto r = field_continuity_check(f, sections);
    for (std::size_t k = 0; k < th.size(); ++k) {
      CHECK(r.values[0][k] == doctest::Approx(brute_lipschitz(*base, obs) / (1.0 + th[k])).epsilon(1e-12));
      CHECK(r.values[0][k] == doctest::Approx(brute_lipschitz(*f.fibres[k], obs)).epsilon(1e-12));
    }
    CHECK(r.lower_jumps[0].empty());
  }
  SUBCASE("a dip is reported") {
    const auto r = continuity_report({{1.0, 1.0, 0.2, 1.0}, {3.0, 2.0, 1.0}});
    // Endpoints have one neighbour; monotone decay is not a dip.
    CHECK(r.lower_jumps[0] == std::vector<std::size_t>{2});
    CHECK(r.lower_jumps[1].empty());
    CHECK(r.max_step[0] == doctest::Approx(0.8));
  }
  std::vector<std::vector<std::vector<double>>> bad{std::vector<std::vector<double>>(2, obs)};
  CHECK_THROWS_AS(field_continuity_check(constant_field(base, th), bad), FieldError);
}
