#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "qmlab/lipgeometry.hpp"

using namespace qmlab;
using std::numbers::pi;
using cd = std::complex<double>;

namespace {

// Operator norm of a Hermitian matrix without an eigen-solver: closed form for 2x2,
// power iteration on H^2 otherwise.
double norm_oracle(const Eigen::MatrixXcd& h) {
  if (h.rows() == 2) {
    const double a = h(0, 0).real(), d = h(1, 1).real();
    const double rad = std::sqrt(0.25 * (a - d) * (a - d) + std::norm(h(0, 1)));
    return std::max(std::abs(0.5 * (a + d) + rad), std::abs(0.5 * (a + d) - rad));
  }
  Eigen::MatrixXcd h2 = h * h;
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(h.rows());
  v(0) = cd(0.3, 0.7);
  double lambda = 0.0;
  for (int it = 0; it < 5000; ++it) {
    Eigen::VectorXcd w = h2 * v;
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    lambda = nw / v.norm();
    v = w / nw;
  }
  return std::sqrt(lambda);
}

Eigen::MatrixXcd random_hermitian(std::mt19937_64& rng, int n, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, i) = g(rng);
    for (int j = i + 1; j < n; ++j) {
      m(i, j) = cd(g(rng), g(rng));
      m(j, i) = std::conj(m(i, j));
    }
  }
  return m;
}

MatrixObservable random_field(std::mt19937_64& rng, const SpacePtr& x, int n) {
  std::vector<Eigen::MatrixXcd> vals;
  for (std::size_t i = 0; i < x->size(); ++i) vals.push_back(random_hermitian(rng, n, 1.0));
  return MatrixObservable(x, vals);
}

}  // namespace

TEST_CASE("lipschitz seminorm") {
  auto x = interval_net(3, 2);
  CHECK(lipschitz_seminorm(Observable(x, {4, 4, 4})).value == 0.0);
  CHECK(lipschitz_seminorm(Observable(x, {0, 1, 2})).value == doctest::Approx(1));
  auto y = interval_net(3, pi);
  CHECK(lipschitz_seminorm(Observable(y, {0, pi * pi / 4, pi * pi})).value == doctest::Approx(3 * pi / 2));
  auto single = validate_metric(Matrix::from_rows({{0}}));
  auto s = lipschitz_seminorm(Observable(single, {5}));
  CHECK(s.value == 0.0);
  CHECK(s.degenerate);
  CHECK_THROWS_AS(Observable(x, {1, 2}), LipError);
}

TEST_CASE("state metric basics") {
  auto x = interval_net(3, 2);
  std::vector<Measure> states{Measure::point_mass(x, 0), Measure::point_mass(x, 2)};
  std::vector<Generator> constant{{Observable(x, {1, 1, 1}), 0.0}};
  CHECK(state_metric(states, constant)(0, 1) == 0.0);
  Observable f(x, {0.0, 3.0, 1.0});
  std::vector<Generator> one{{f, lipschitz_seminorm(f).value}};
  CHECK(state_metric(states, one)(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(state_metric(states, std::vector<Generator>{}), LipError);
}

TEST_CASE("lipnorm from state metric") {
  auto x = interval_net(4, 3);
  std::vector<double> c{2, 2, 2, 2};
  CHECK(lipnorm_from_state_metric(c, x->dist()) == 0.0);
  Matrix two = Matrix::from_rows({{0, 2}, {2, 0}});
  CHECK(lipnorm_from_state_metric(std::vector<double>{1, 4}, two) == doctest::Approx(1.5));
  CHECK_THROWS_AS(lipnorm_from_state_metric(std::vector<double>{1, 4}, Matrix(2, 2, 0.0)), LipError);

  // A 1-Lipschitz potential integrated against states is 1-Lipschitz for W1.
  std::mt19937_64 rng(12);
  auto y = oracle::random_space(rng, 4);
  auto mu = oracle::random_measure(rng, y), nu = oracle::random_measure(rng, y);
  auto pot = wasserstein1_dual(mu, nu).witness.values;
  auto net = prob_net(y, 3);
  auto vals = extend_to_simplex(Observable(y, pot), net.measures);
  CHECK(lipnorm_from_state_metric(vals, w1_matrix(net.measures)) <= 1 + 1e-9);
}

TEST_CASE("extension to the simplex keeps norm and seminorm") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = oracle::random_space(rng, 4);
    std::uniform_real_distribution<double> u(-2, 2);
    std::vector<double> v(4);
    for (auto& a : v) a = u(rng);
    Observable f(x, v);
    CHECK(extend_to_simplex(f, std::vector<Measure>{Measure::point_mass(x, 2)})[0] == v[2]);
    std::vector<std::size_t> pair{0, 3};
    CHECK(extend_to_simplex(f, std::vector<Measure>{Measure::uniform(x, pair)})[0] == doctest::Approx((v[0] + v[3]) / 2));
    auto net = prob_net(x, 3);
    auto ext = extend_to_simplex(f, net.measures);
    double sup_f = 0, sup_ext = 0;
    for (double a : v) sup_f = std::max(sup_f, std::abs(a));
    for (double a : ext) sup_ext = std::max(sup_ext, std::abs(a));
    CHECK(sup_ext == doctest::Approx(sup_f).epsilon(1e-12));
    CHECK(std::abs(lipnorm_from_state_metric(ext, w1_matrix(net.measures)) - lipschitz_seminorm(f).value) <= 1e-7);
  }
}

TEST_CASE("nucleus members and density") {
  SUBCASE("singleton space gives a grid of constants") {
    auto single = validate_metric(Matrix::from_rows({{0}}));
    auto nu = nucleus_net(single, 1.0, 0.25);
    CHECK(nu.count >= 3);
    CHECK(nu.function(0)[0] == -1.0);
    CHECK(nu.function(nu.count - 1)[0] == 1.0);
    for (std::size_t k = 1; k < nu.count; ++k) CHECK(nu.function(k)[0] - nu.function(k - 1)[0] <= 0.5 + 1e-12);
  }
  SUBCASE("two points: dense sampling of the 2-D polytope") {
    const double d = 1.3, r = 0.8, eps = 0.1;
    auto x = validate_metric(Matrix::from_rows({{0, d}, {d, 0}}));
    auto nu = nucleus_net(x, r, eps);
    for (std::size_t k = 0; k < nu.count; ++k) CHECK(nucleus_member_check(*x, r, nu.function(k)).ok);
    double worst = 0.0;
    for (int a = 0; a <= 200; ++a)
      for (int b = 0; b <= 200; ++b) {
        const double f1 = -r + 2 * r * a / 200.0, f2 = -r + 2 * r * b / 200.0;
        if (std::abs(f1 - f2) > d) continue;
        double best = 1e9;
        for (std::size_t k = 0; k < nu.count; ++k)
          best = std::min(best, std::max(std::abs(nu.function(k)[0] - f1), std::abs(nu.function(k)[1] - f2)));
        worst = std::max(worst, best);
      }
    CHECK(worst <= eps + 1e-12);
  }
  SUBCASE("random spaces: soundness, probing, ordering") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 6; ++trial) {
      auto x = oracle::random_space(rng, 3 + trial % 3, 0.3, 1.0);
      const double r = radius(*x) + 0.1 * trial, eps = 0.15;
      auto nu = nucleus_net(x, r, eps);
      for (std::size_t k = 0; k < nu.count; ++k) {
        CHECK(nucleus_member_check(*x, r, nu.function(k)).ok);
        if (k > 0) {
          auto a = nu.function(k - 1), b = nu.function(k);
          CHECK(std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end()));
        }
      }
      CHECK(nucleus_probe_density(nu, 40, 5 + trial) <= eps + 1e-12);
    }
  }
  SUBCASE("streamed and stored nets agree") {
    auto x = circle_net(5, 3.0);
    auto stored = nucleus_net(x, radius(*x), 0.2);
    auto streamed = nucleus_net(x, radius(*x), 0.2, 0, NucleusKind::Streamed);
    std::size_t seen = 0;
    for_each_member(streamed, [&](std::span<const double>) { ++seen; });
    CHECK(seen >= stored.count);
    CHECK(nucleus_state_metric(stored) == nucleus_state_metric(streamed));
    CHECK(nucleus_probe_density(streamed, 10, 1) == nucleus_probe_density(stored, 10, 1));
  }
  CHECK_THROWS_AS(nucleus_net(interval_net(4, 2), 0.5, 0.1), LipError);
  CHECK_THROWS_AS(nucleus_net(circle_net(8, 8), 2.0, 0.01, 1000), LipError);
}

TEST_CASE("nucleus state metric recovers the ground metric") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = oracle::random_space(rng, 5, 0.4, 1.2);
    const double r = radius(*x), eps = 0.1;
    auto nu = nucleus_net(x, r, eps);
    auto m = nucleus_state_metric(nu);
    for (std::size_t i = 0; i < 5; ++i)
      for (std::size_t j = 0; j < 5; ++j) {
        const double w = wasserstein1_dual(Measure::point_mass(x, i), Measure::point_mass(x, j)).value;
        CHECK(m(i, j) <= w + 1e-9);
        CHECK(m(i, j) >= w - eps * (1 + x->diameter() / r));
      }
    // General states: gap over the net is within 2 eps of W1.
    auto gens = nucleus_generators(nu);
    std::vector<Measure> states;
    for (int k = 0; k < 4; ++k) states.push_back(oracle::random_measure(rng, x));
    auto sm = state_metric(states, gens);
    for (std::size_t a = 0; a < states.size(); ++a)
      for (std::size_t b = 0; b < states.size(); ++b) {
        const double w = w1(states[a], states[b]);
        CHECK(sm(a, b) <= w + 1e-9);
        CHECK(sm(a, b) >= w - 2 * eps);
        CHECK(nucleus_gap(nu, states[a], states[b]) >= w - 2 * eps);
        CHECK(nucleus_gap(exact_nucleus(x, r), states[a], states[b]) == doctest::Approx(w));
      }
  }
}

TEST_CASE("matrix observables: trace, Weyl, membership") {
  auto x = interval_net(3, 1);
  std::vector<Eigen::MatrixXcd> scalar;
  const std::vector<double> phi{0.1, 0.4, 0.2};
  for (double p : phi) scalar.push_back(p * Eigen::MatrixXcd::Identity(3, 3));
  MatrixObservable fs(x, scalar);
  auto tr = matrix_trace_observable(fs);
  for (std::size_t i = 0; i < 3; ++i) CHECK(tr.values[i] == doctest::Approx(phi[i]));
  CHECK(matrix_nucleus_membership(fs, 0.5).member);

  std::vector<Eigen::MatrixXcd> traceless;
  Eigen::MatrixXcd z(2, 2);
  z << 1, cd(0, 2), cd(0, -2), -1;
  for (int i = 0; i < 3; ++i) traceless.push_back(z * (i + 1.0));
  for (double v : matrix_trace_observable(MatrixObservable(x, traceless)).values) CHECK(std::abs(v) < 1e-15);

  std::vector<Eigen::MatrixXcd> zero(3, Eigen::MatrixXcd::Zero(2, 2));
  CHECK(matrix_nucleus_membership(MatrixObservable(x, zero), 1e-6).member);

  // Explicit jump: ||F(1) - F(2)|| = 3 > 0.5 = d(1, 2).
  std::vector<Eigen::MatrixXcd> jump(3, Eigen::MatrixXcd::Zero(2, 2));
  jump[2] = z * (3.0 / norm_oracle(z));
  auto cert = matrix_nucleus_membership(MatrixObservable(x, jump), 10.0);
  CHECK_FALSE(cert.member);
  REQUIRE(cert.violating_pair.has_value());
  CHECK(cert.violating_pair->second == 2);
  CHECK(cert.excess == doctest::Approx(norm_oracle(jump[2] - jump[cert.violating_pair->first]) -
                                       (*x)(cert.violating_pair->first, 2)));

  Eigen::MatrixXcd bad(2, 2);
  bad << 1, 2, 3, 1;
  CHECK_THROWS_AS(MatrixObservable(interval_net(2, 1), std::vector<Eigen::MatrixXcd>{bad, bad}), LipError);

  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 2;
    auto y = oracle::random_space(rng, 2 + trial % 5);
    auto f = random_field(rng, y, n);
    auto t = matrix_trace_observable(f);
    for (std::size_t i = 0; i < y->size(); ++i) {
      CHECK(operator_norm(f.values[i]) == doctest::Approx(norm_oracle(f.values[i])).epsilon(1e-8));
      for (std::size_t j = 0; j < y->size(); ++j)
        CHECK(std::abs(t.values[i] - t.values[j]) <= norm_oracle(f.values[i] - f.values[j]) + 1e-9);
    }
  }
}

TEST_CASE("nucleus decomposition") {
  auto x = interval_net(4, 3);
  const std::vector<double> phi{0.0, 0.7, 1.5, 1.0};
  std::vector<Eigen::MatrixXcd> scalar;
  for (double p : phi) scalar.push_back(p * Eigen::MatrixXcd::Identity(2, 2));
  MatrixObservable fs(x, scalar);

  auto dp = nucleus_decompose(fs, radius(*x), DecomposeAnchor::DiameterPoint);
  CHECK(dp.x0 == 0);
  CHECK(dp.x1 == 3);
  CHECK(dp.c == phi[0]);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(dp.h.values[i].cwiseAbs().maxCoeff() == 0.0);
    CHECK((dp.g.values[i] - (phi[i] - phi[0]) * Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  }
  auto mid = nucleus_decompose(fs, radius(*x));
  CHECK(mid.c == doctest::Approx(0.75));
  CHECK(mid.g_membership.member);

  // Anchoring at a diameter endpoint can push |G| up to the diameter, past r.
  std::vector<Eigen::MatrixXcd> ramp;
  for (double p : {0.0, 1.0, 2.0, 3.0}) ramp.push_back(p * Eigen::MatrixXcd::Identity(2, 2));
  auto far = nucleus_decompose(MatrixObservable(x, ramp), radius(*x), DecomposeAnchor::DiameterPoint);
  CHECK_FALSE(far.g_membership.member);
  CHECK(nucleus_decompose(MatrixObservable(x, ramp), radius(*x)).g_membership.member);

  std::vector<Eigen::MatrixXcd> traceless;
  Eigen::MatrixXcd z(2, 2);
  z << 1, cd(0.5, 1), cd(0.5, -1), -1;
  for (int i = 0; i < 4; ++i) traceless.push_back(z * (i - 1.5));
  auto tl = nucleus_decompose(MatrixObservable(x, traceless), radius(*x));
  CHECK(tl.c == 0.0);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(tl.g.values[i].cwiseAbs().maxCoeff() == 0.0);
    CHECK((tl.h.values[i] - traceless[i]).cwiseAbs().maxCoeff() == 0.0);
  }

  std::vector<Eigen::MatrixXcd> steep;
  for (double p : {0.0, 5.0, 0.0, 0.0}) steep.push_back(p * Eigen::MatrixXcd::Identity(2, 2));
  CHECK_THROWS_AS(nucleus_decompose(MatrixObservable(x, steep), radius(*x)), LipError);
  CHECK_THROWS_AS(nucleus_decompose(fs, 0.1), LipError);
}
