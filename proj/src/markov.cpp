#include "qmlab/markov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/Dense>

#include "qmlab/parallel.hpp"

namespace qmlab {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  SplitMix64 g(seed ^ (stream * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull));
  return g.next();
}

MarkovKernel::MarkovKernel(SpacePtr s, Matrix m) : space(std::move(s)), p(std::move(m)) {
  if (!space) throw MarkovError("kernel without a space");
  const std::size_t n = space->size();
  if (p.rows() != n || p.cols() != n) throw MarkovError("kernel matrix does not match the space");
  for (std::size_t i = 0; i < n; ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (!(p(i, j) >= 0.0) || !std::isfinite(p(i, j))) throw MarkovError("kernel entries must be finite and >= 0");
      total += p(i, j);
    }
    if (std::abs(total - 1.0) > 1e-12) throw MarkovError("kernel row " + std::to_string(i) + " does not sum to 1");
  }
}

RandomMapFamily::RandomMapFamily(std::vector<DynMap> m, std::vector<double> pr)
    : maps(std::move(m)), probabilities(std::move(pr)) {
  if (maps.empty()) throw MarkovError("empty map family");
  if (maps.size() != probabilities.size()) throw MarkovError("one probability per map is required");
  double total = 0.0;
  for (double q : probabilities) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw MarkovError("map probabilities must be finite and >= 0");
    total += q;
  }
  if (std::abs(total - 1.0) > 1e-12) throw MarkovError("map probabilities do not sum to 1");
  for (const auto& g : maps)
    if (!g.space->same_as(*maps.front().space)) throw MarkovError("maps live on different spaces");
}

MarkovKernel kernel_from_maps(const RandomMapFamily& f) {
  const std::size_t n = f.space()->size();
  Matrix p(n, n);
  for (std::size_t k = 0; k < f.maps.size(); ++k)
    for (std::size_t x = 0; x < n; ++x) p(x, f.maps[k](x)) += f.probabilities[k];
  return MarkovKernel(f.space(), std::move(p));
}

Measure transition(const MarkovKernel& k, std::size_t x) {
  const auto r = k.p.row(x);
  return Measure(k.space, std::vector<double>(r.begin(), r.end()));
}

Measure step(const Measure& mu, const MarkovKernel& k) {
  if (!mu.space()->same_as(*k.space)) throw MarkovError("measure and kernel live on different spaces");
  const std::size_t n = k.space->size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (mu[i] > 0.0)
      for (std::size_t j = 0; j < n; ++j) w[j] += mu[i] * k.p(i, j);
  return Measure(k.space, std::move(w));
}

namespace {

// Tarjan's strongly connected components over the positive entries.
std::vector<std::vector<std::size_t>> components(const Matrix& p) {
  const std::size_t n = p.rows();
  std::vector<long> index(n, -1), low(n, 0);
  std::vector<char> on_stack(n, 0);
  std::vector<std::size_t> stack;
  std::vector<std::vector<std::size_t>> out;
  long counter = 0;
  std::function<void(std::size_t)> visit = [&](std::size_t v) {
    index[v] = low[v] = counter++;
    stack.push_back(v);
    on_stack[v] = 1;
    for (std::size_t w = 0; w < n; ++w) {
      if (p(v, w) <= 0.0) continue;
      if (index[w] < 0) {
        visit(w);
        low[v] = std::min(low[v], low[w]);
      } else if (on_stack[w]) {
        low[v] = std::min(low[v], index[w]);
      }
    }
    if (low[v] == index[v]) {
      std::vector<std::size_t> c;
      std::size_t w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack[w] = 0;
        c.push_back(w);
      } while (w != v);
      std::sort(c.begin(), c.end());
      out.push_back(std::move(c));
    }
  };
  for (std::size_t v = 0; v < n; ++v)
    if (index[v] < 0) visit(v);
  return out;
}

}  // namespace

StationaryResult stationary_measures(const MarkovKernel& k) {
  const std::size_t n = k.space->size();
  auto comps = components(k.p);
  std::sort(comps.begin(), comps.end());
  StationaryResult out;
  for (const auto& c : comps) {
    std::vector<char> inside(n, 0);
    for (std::size_t v : c) inside[v] = 1;
    bool closed = true;
    for (std::size_t v : c)
      for (std::size_t w = 0; w < n && closed; ++w)
        if (k.p(v, w) > 0.0 && !inside[w]) closed = false;
    if (!closed) continue;
    // pi (P_C - I) = 0 with the last equation replaced by sum(pi) = 1.
    const std::size_t m = c.size();
    Eigen::MatrixXd a(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) a(i, j) = k.p(c[j], c[i]) - (i == j ? 1.0 : 0.0);
    a.row(m - 1).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    b(m - 1) = 1.0;
    const Eigen::VectorXd pi = a.fullPivLu().solve(b);
    std::vector<double> w(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += (w[c[i]] = std::max(0.0, pi(i)));
    for (double& v : w) v /= total;
    out.measures.emplace_back(k.space, std::move(w));
  }
  return out;
}

std::size_t sample_index(std::span<const double> weights, double u) {
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = i;
    if (u < acc) return i;
  }
  return last;  // u beyond the rounded total
}

std::vector<std::size_t> simulate(const MarkovKernel& k, std::size_t x0, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw MarkovError("simulate needs at least one step");
  if (x0 >= k.space->size()) throw MarkovError("start point out of range");
  SplitMix64 rng(seed);
  std::vector<std::size_t> path{x0};
  path.reserve(n + 1);
  for (std::size_t s = 0; s < n; ++s) path.push_back(sample_index(k.p.row(path.back()), rng.uniform()));
  return path;
}

LinearFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw MarkovError("least squares needs two or more points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw MarkovError("least squares with a single distinct abscissa");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

void fit_ldp(LdpReport& r) {
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < r.n_values.size(); ++i)
    if (r.probabilities[i] > 0.0) {
      xs.push_back(static_cast<double>(r.n_values[i]));
      ys.push_back(std::log(r.probabilities[i]));
    }
  r.fitted_points = xs.size();
  if (xs.size() < 2) {
    r.c1 = r.c2 = r.r_squared = 0.0;
    return;
  }
  const auto fit = least_squares(xs, ys);
  r.c1 = std::exp(fit.intercept);
  r.c2 = -fit.slope / (r.eps * r.eps);
  r.r_squared = fit.r_squared;
}

bool nonincreasing_within_bands(const LdpReport& r, double z) {
  const double t = static_cast<double>(r.trials);
  for (std::size_t i = 0; i + 1 < r.probabilities.size(); ++i) {
    const double a = r.probabilities[i], b = r.probabilities[i + 1];
    const double se = std::sqrt(a * (1 - a) / t + b * (1 - b) / t);
    if (b > a + z * se + 1.0 / t) return false;
  }
  return true;
}

LdpReport ldp_experiment(const RandomMapFamily& f, const Nucleus& nucleus, double eps,
                         std::span<const std::size_t> n_values, const LdpOptions& options) {
  if (!(eps > 0.0)) throw MarkovError("ldp_experiment needs a positive epsilon");
  if (n_values.empty()) throw MarkovError("ldp_experiment needs n values");
  for (std::size_t i = 0; i < n_values.size(); ++i)
    if (n_values[i] == 0 || (i > 0 && n_values[i] <= n_values[i - 1]))
      throw MarkovError("n values must be positive and strictly increasing");
  if (options.trials == 0) throw MarkovError("ldp_experiment needs at least one trial");
  const SpacePtr& space = f.space();
  if (!nucleus.space->same_as(*space)) throw MarkovError("nucleus and maps live on different spaces");
  const auto stat = stationary_measures(kernel_from_maps(f));
  if (!stat.unique())
    throw MarkovError("the stationary measure is not unique (" + std::to_string(stat.measures.size()) + " found)");
  const Measure& nu = stat.measures.front();

  LdpReport rep;
  rep.eps = eps;
  rep.n_values.assign(n_values.begin(), n_values.end());
  rep.trials = options.trials;
  rep.seed = options.seed;
  for (std::size_t k = 0; k < f.maps.size(); ++k) {
    double excess = 0.0;
    for (std::size_t i = 0; i < space->size(); ++i)
      for (std::size_t j = 0; j < space->size(); ++j)
        excess = std::max(excess, (*space)(f.maps[k](i), f.maps[k](j)) - (*space)(i, j));
    if (excess > tolerances().lipschitz)
      rep.warnings.push_back("map " + std::to_string(k) + " is not 1-Lipschitz (excess " + std::to_string(excess) +
                             ")");
  }
  rep.start_net = epsilon_net(space, eps / 4).indices();

  const std::size_t nv = n_values.size(), ns = rep.start_net.size(), sz = space->size();
  const std::size_t n_max = n_values.back();
  std::vector<char> exceed(options.trials * nv, 0);
  parallel_for(options.trials, [&](std::size_t t) {
    SplitMix64 rng(derive_seed(options.seed, t));
    std::vector<std::size_t> pos = rep.start_net;
    std::vector<std::vector<double>> counts(ns, std::vector<double>(sz, 0.0));
    std::size_t next = 0;
    for (std::size_t k = 1; k <= n_max; ++k) {
      for (std::size_t s = 0; s < ns; ++s) counts[s][pos[s]] += 1.0;
      const DynMap& g = f.maps[sample_index(f.probabilities, rng.uniform())];
      for (auto& p : pos) p = g(p);
      if (k != n_values[next]) continue;
      std::vector<Measure> emp;
      for (std::size_t s = 0; s < ns; ++s) {
        std::vector<double> w(sz);
        for (std::size_t i = 0; i < sz; ++i) w[i] = counts[s][i] / static_cast<double>(k);
        emp.emplace_back(space, std::move(w));
      }
      double worst = 0.0;
      if (nucleus.exact()) {
        for (const auto& e : emp) worst = std::max(worst, w1(e, nu));
      } else {
        for (double g2 : nucleus_gaps(nucleus, emp, nu)) worst = std::max(worst, g2);
      }
      exceed[t * nv + next] = worst > eps;
      ++next;
    }
  });
  rep.exceed_counts.assign(nv, 0);
  for (std::size_t t = 0; t < options.trials; ++t)
    for (std::size_t i = 0; i < nv; ++i) rep.exceed_counts[i] += exceed[t * nv + i];
  rep.probabilities.resize(nv);
  for (std::size_t i = 0; i < nv; ++i)
    rep.probabilities[i] = static_cast<double>(rep.exceed_counts[i]) / static_cast<double>(options.trials);
  fit_ldp(rep);
  return rep;
}

SpacePtr cantor_net(std::size_t depth) {
  if (depth == 0 || depth > 12) throw MarkovError("cantor_net depth must be in 1..12");
  const std::size_t n = std::size_t{1} << depth;
  std::vector<double> x(n, 0.0);
  std::vector<std::string> labels(n);
  for (std::size_t idx = 0; idx < n; ++idx) {
    double scale = 1.0;
    for (std::size_t i = 1; i <= depth; ++i) {
      scale /= 3.0;
      const std::size_t bit = (idx >> (depth - i)) & 1u;
      x[idx] += 2.0 * static_cast<double>(bit) * scale;
      labels[idx] += bit ? '1' : '0';
    }
  }
  Matrix d(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d(i, j) = std::abs(x[i] - x[j]);
  return make_space(std::move(labels), std::move(d));
}

RandomMapFamily two_contractions(const SpacePtr& cantor, std::size_t depth) {
  const std::size_t n = std::size_t{1} << depth;
  if (cantor->size() != n) throw MarkovError("space size does not match the Cantor depth");
  std::vector<DynMap> maps;
  for (std::size_t a = 0; a < 2; ++a) {
    PointMap m(n);
    for (std::size_t idx = 0; idx < n; ++idx) m[idx] = (a << (depth - 1)) | (idx >> 1);
    maps.emplace_back(cantor, std::move(m));
  }
  return RandomMapFamily(std::move(maps), {0.5, 0.5});
}

}  // namespace qmlab
