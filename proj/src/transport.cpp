#include "qmlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

#include "qmlab/parallel.hpp"

namespace qmlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_space(const Measure& mu, const Measure& nu) {
  if (!mu.space()->same_as(*nu.space())) throw TransportError("measures live on different spaces");
}

}  // namespace

Measure::Measure(SpacePtr space, std::vector<double> weights) : space_(std::move(space)), weights_(std::move(weights)) {
  if (!space_) throw TransportError("measure without a space");
  if (weights_.size() != space_->size()) throw TransportError("weight count does not match the space size");
  double total = 0.0;
  for (double& w : weights_) {
    if (!std::isfinite(w)) throw TransportError("non-finite weight");
    if (w < 0.0) {
      if (w < -tolerances().measure_sum) throw TransportError("negative weight");
      w = 0.0;
    }
    total += w;
  }
  if (std::abs(total - 1.0) > tolerances().measure_sum)
    throw TransportError("weights sum to " + std::to_string(total) + ", not 1");
}

Measure Measure::point_mass(SpacePtr space, std::size_t i) {
  if (!space || i >= space->size()) throw TransportError("point mass index out of range");
  std::vector<double> w(space->size(), 0.0);
  w[i] = 1.0;
  return Measure(std::move(space), std::move(w));
}

Measure Measure::uniform(SpacePtr space, std::span<const std::size_t> support) {
  if (!space || support.empty()) throw TransportError("uniform measure needs a nonempty support");
  std::vector<double> w(space->size(), 0.0);
  for (std::size_t i : support) {
    if (i >= w.size()) throw TransportError("support index out of range");
    w[i] += 1.0 / static_cast<double>(support.size());
  }
  return Measure(std::move(space), std::move(w));
}

Measure Measure::uniform(SpacePtr space) {
  std::vector<std::size_t> all(space->size());
  std::iota(all.begin(), all.end(), 0);
  return uniform(std::move(space), all);
}

std::vector<std::size_t> Measure::support() const {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < weights_.size(); ++i)
    if (weights_[i] > 0.0) s.push_back(i);
  return s;
}

double integrate(const Measure& mu, std::span<const double> f) {
  if (f.size() != mu.size()) throw TransportError("function and measure sizes differ");
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) s += mu[i] * f[i];
  return s;
}

// ---------------------------------------------------------------------------
// Transportation simplex.
//
// The basis is a spanning tree on the bipartite graph rows + columns with exactly
// rows + cols - 1 cells (degenerate zero cells allowed). Each iteration computes the
// dual potentials from the tree, picks the most negative reduced cost, and pivots
// around the unique cycle it closes. After a run of degenerate pivots the rule falls
// back to lowest-index entering/leaving, which cannot cycle.
// ---------------------------------------------------------------------------

namespace {

struct Cell {
  std::size_t r, c;
  double flow;
};

class TransportSimplex {
 public:
  TransportSimplex(std::vector<double> a, std::vector<double> b, const Matrix& cost)
      : a_(std::move(a)), b_(std::move(b)), cost_(cost), m_(a_.size()), n_(b_.size()) {}

  double solve() {
    initial_basis();
    std::size_t degenerate_run = 0;
    const std::size_t max_iter = 50 * (m_ + n_) * (m_ + n_) + 1000;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
      compute_potentials();
      const bool bland = degenerate_run > m_ + n_;
      auto entering = choose_entering(bland);
      if (!entering) return objective();
      const double step = pivot(entering->first, entering->second, bland);
      degenerate_run = step > 0.0 ? 0 : degenerate_run + 1;
    }
    throw TransportError("transportation simplex did not converge");
  }

  void fill_plan(Matrix& plan) const {
    plan = Matrix(m_, n_, 0.0);
    for (const Cell& c : basis_) plan(c.r, c.c) += std::max(0.0, c.flow);
  }

 private:
  void initial_basis() {
    // North-west corner rule: a staircase spanning tree with exactly m + n - 1 cells.
    std::vector<double> ra = a_, rb = b_;
    std::size_t i = 0, j = 0;
    while (true) {
      const double x = std::min(ra[i], rb[j]);
      basis_.push_back({i, j, std::max(0.0, x)});
      ra[i] -= x;
      rb[j] -= x;
      if (i + 1 == m_ && j + 1 == n_) break;
      if (j + 1 == n_ || (i + 1 < m_ && ra[i] <= rb[j])) ++i;
      else ++j;
    }
    in_basis_.assign(m_ * n_, false);
    for (const Cell& c : basis_) in_basis_[c.r * n_ + c.c] = true;
  }

  void build_adjacency() {
    adj_.assign(m_ + n_, {});
    for (std::size_t k = 0; k < basis_.size(); ++k) {
      adj_[basis_[k].r].push_back(k);
      adj_[m_ + basis_[k].c].push_back(k);
    }
  }

  void compute_potentials() {
    build_adjacency();
    u_.assign(m_, kInf);
    v_.assign(n_, kInf);
    std::vector<bool> seen(m_ + n_, false);
    std::deque<std::size_t> queue{0};
    seen[0] = true;
    u_[0] = 0.0;
    while (!queue.empty()) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t k : adj_[node]) {
        const Cell& cell = basis_[k];
        const std::size_t other = node < m_ ? m_ + cell.c : cell.r;
        if (seen[other]) continue;
        seen[other] = true;
        if (node < m_) v_[cell.c] = cost_(cell.r, cell.c) - u_[cell.r];
        else u_[cell.r] = cost_(cell.r, cell.c) - v_[cell.c];
        queue.push_back(other);
      }
    }
  }

  std::optional<std::pair<std::size_t, std::size_t>> choose_entering(bool bland) const {
    double scale = 1.0;
    for (double x : cost_.data()) scale = std::max(scale, std::abs(x));
    const double tol = 1e-13 * scale;
    std::optional<std::pair<std::size_t, std::size_t>> best;
    double best_rc = -tol;
    for (std::size_t r = 0; r < m_; ++r)
      for (std::size_t c = 0; c < n_; ++c) {
        if (in_basis_[r * n_ + c]) continue;
        const double rc = cost_(r, c) - u_[r] - v_[c];
        if (rc < best_rc) {
          best = {r, c};
          if (bland) return best;
          best_rc = rc;
        }
      }
    return best;
  }

  // Adds cell (r, c), pushes flow around the cycle, removes the leaving cell.
  double pivot(std::size_t r, std::size_t c, bool bland) {
    // Path in the tree from column node m_+c back to row node r.
    std::vector<std::ptrdiff_t> via(m_ + n_, -1);
    std::vector<bool> seen(m_ + n_, false);
    std::deque<std::size_t> queue{m_ + c};
    seen[m_ + c] = true;
    while (!queue.empty() && !seen[r]) {
      const std::size_t node = queue.front();
      queue.pop_front();
      for (std::size_t k : adj_[node]) {
        const Cell& cell = basis_[k];
        const std::size_t other = node < m_ ? m_ + cell.c : cell.r;
        if (seen[other]) continue;
        seen[other] = true;
        via[other] = static_cast<std::ptrdiff_t>(k);
        queue.push_back(other);
      }
    }
    // Walk back from r to m_+c; cells alternate minus, plus, minus, ...
    std::vector<std::size_t> path;
    for (std::size_t node = r; node != m_ + c;) {
      const std::size_t k = static_cast<std::size_t>(via[node]);
      path.push_back(k);
      const Cell& cell = basis_[k];
      node = node < m_ ? m_ + cell.c : cell.r;
    }
    double step = kInf;
    std::size_t leave = path.front();
    for (std::size_t i = 0; i < path.size(); i += 2) {
      const Cell& cell = basis_[path[i]];
      const bool better = cell.flow < step ||
                          (bland && cell.flow == step &&
                           cell.r * n_ + cell.c < basis_[leave].r * n_ + basis_[leave].c);
      if (better) step = cell.flow, leave = path[i];
    }
    step = std::max(0.0, step);
    for (std::size_t i = 0; i < path.size(); ++i) basis_[path[i]].flow += (i % 2 == 0 ? -step : step);
    in_basis_[basis_[leave].r * n_ + basis_[leave].c] = false;
    basis_[leave] = {r, c, step};
    in_basis_[r * n_ + c] = true;
    return step;
  }

  double objective() const {
    double s = 0.0;
    for (const Cell& c : basis_) s += std::max(0.0, c.flow) * cost_(c.r, c.c);
    return s;
  }

  std::vector<double> a_, b_;
  const Matrix& cost_;
  std::size_t m_, n_;
  std::vector<Cell> basis_;
  std::vector<bool> in_basis_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<double> u_, v_;
};

}  // namespace

double solve_transport(std::span<const double> a, std::span<const double> b, const Matrix& cost, Matrix* plan) {
  if (cost.rows() != a.size() || cost.cols() != b.size()) throw TransportError("cost matrix shape mismatch");
  std::vector<std::size_t> rows, cols;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] > 0.0) rows.push_back(i);
  for (std::size_t j = 0; j < b.size(); ++j)
    if (b[j] > 0.0) cols.push_back(j);
  if (rows.empty() || cols.empty()) throw TransportError("empty marginal");
  std::vector<double> sa, sb;
  for (std::size_t i : rows) sa.push_back(a[i]);
  for (std::size_t j : cols) sb.push_back(b[j]);
  const double ta = std::accumulate(sa.begin(), sa.end(), 0.0);
  const double tb = std::accumulate(sb.begin(), sb.end(), 0.0);
  if (std::abs(ta - tb) > 1e-9 * std::max(1.0, ta)) throw TransportError("marginals have different total mass");
  for (double& x : sb) x *= ta / tb;

  Matrix sub(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) sub(i, j) = cost(rows[i], cols[j]);

  double value;
  Matrix sub_plan;
  if (rows.size() == 1 || cols.size() == 1) {
    // A single source or sink leaves exactly one feasible coupling.
    sub_plan = Matrix(rows.size(), cols.size());
    value = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) {
        const double x = rows.size() == 1 ? sb[j] : sa[i];
        sub_plan(i, j) = x;
        value += x * sub(i, j);
      }
  } else {
    TransportSimplex solver(sa, sb, sub);
    value = solver.solve();
    solver.fill_plan(sub_plan);
  }
  if (plan) {
    *plan = Matrix(a.size(), b.size(), 0.0);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < cols.size(); ++j) (*plan)(rows[i], cols[j]) = sub_plan(i, j);
  }
  return value;
}

W1Result wasserstein1(const Measure& mu, const Measure& nu) {
  require_same_space(mu, nu);
  W1Result res;
  res.value = solve_transport(mu.weights(), nu.weights(), mu.space()->dist(), &res.witness.plan);
  return res;
}

double w1(const Measure& mu, const Measure& nu) {
  require_same_space(mu, nu);
  return solve_transport(mu.weights(), nu.weights(), mu.space()->dist(), nullptr);
}

// ---------------------------------------------------------------------------
// Successive shortest paths on the complete graph with edge costs d(i,j) and
// unbounded capacities. Supplies are mu - nu. Reduced costs stay nonnegative, so
// each round is a dense Dijkstra from all remaining sources.
// ---------------------------------------------------------------------------

W1DualResult wasserstein1_dual(const Measure& mu, const Measure& nu) {
  require_same_space(mu, nu);
  const FiniteMetricSpace& x = *mu.space();
  const std::size_t n = x.size();
  std::vector<double> excess(n);
  for (std::size_t i = 0; i < n; ++i) excess[i] = mu[i] - nu[i];
  const double mass_tol = 1e-14;

  Matrix flow(n, n, 0.0);
  std::vector<double> pot(n, 0.0);
  std::vector<double> dist(n);
  std::vector<std::ptrdiff_t> prev(n);
  std::vector<bool> done(n);

  auto reduced = [&](std::size_t i, std::size_t j) { return x(i, j) + pot[i] - pot[j]; };

  for (std::size_t round = 0; round < 2 * n * n + 16; ++round) {
    bool any_source = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (excess[i] > mass_tol) any_source = true;
    }
    if (!any_source) break;

    std::fill(dist.begin(), dist.end(), kInf);
    std::fill(prev.begin(), prev.end(), -1);
    std::fill(done.begin(), done.end(), false);
    for (std::size_t i = 0; i < n; ++i)
      if (excess[i] > mass_tol) dist[i] = 0.0;

    for (std::size_t it = 0; it < n; ++it) {
      std::size_t u = n;
      for (std::size_t i = 0; i < n; ++i)
        if (!done[i] && (u == n || dist[i] < dist[u])) u = i;
      if (u == n || dist[u] == kInf) break;
      done[u] = true;
      for (std::size_t v = 0; v < n; ++v) {
        if (v == u || done[v]) continue;
        // Forward arcs are always residual; a backward arc v<-u exists when flow(v,u) > 0
        // and has reduced cost -reduced(v,u) = 0 on an optimal-so-far flow.
        double arc = reduced(u, v);
        if (flow(v, u) > mass_tol) arc = std::min(arc, -reduced(v, u));
        arc = std::max(arc, 0.0);
        if (dist[u] + arc < dist[v]) dist[v] = dist[u] + arc, prev[v] = static_cast<std::ptrdiff_t>(u);
      }
    }
    std::size_t sink = n;
    for (std::size_t i = 0; i < n; ++i)
      if (excess[i] < -mass_tol && (sink == n || dist[i] < dist[sink])) sink = i;
    if (sink == n) break;

    for (std::size_t i = 0; i < n; ++i) pot[i] += std::min(dist[i], dist[sink]);

    // Bottleneck along the path: source excess, sink deficit, and backward-arc flows.
    std::size_t src = sink;
    double amount = -excess[sink];
    for (std::size_t v = sink; prev[v] >= 0;) {
      const std::size_t u = static_cast<std::size_t>(prev[v]);
      if (flow(v, u) > mass_tol && reduced(u, v) > 1e-12) amount = std::min(amount, flow(v, u));
      v = u;
      src = v;
    }
    amount = std::min(amount, excess[src]);
    for (std::size_t v = sink; prev[v] >= 0;) {
      const std::size_t u = static_cast<std::size_t>(prev[v]);
      const double cancel = std::min(flow(v, u), amount);
      // Prefer cancelling opposite flow: it is never more expensive.
      flow(v, u) -= cancel;
      flow(u, v) += amount - cancel;
      v = u;
    }
    excess[src] -= amount;
    excess[sink] += amount;
  }

  for (double e : excess)
    if (std::abs(e) > 1e-9) throw TransportError("dual solver left unbalanced mass");

  W1DualResult res;
  res.witness.values = pot;
  double lip = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) lip = std::max(lip, std::abs(pot[i] - pot[j]) / x(i, j));
  res.witness.lipschitz = lip;
  res.value = integrate(nu, pot) - integrate(mu, pot);
  return res;
}

// ---------------------------------------------------------------------------
// W_infinity: bisection over the sorted distinct distances with a max-flow test.
// ---------------------------------------------------------------------------

namespace {

class MaxFlow {
 public:
  explicit MaxFlow(std::size_t n) : graph_(n) {}

  void add_edge(std::size_t u, std::size_t v, double cap) {
    graph_[u].push_back({v, graph_[v].size(), cap});
    graph_[v].push_back({u, graph_[u].size() - 1, 0.0});
  }

  double run(std::size_t s, std::size_t t) {
    double total = 0.0;
    const double tol = 1e-15;
    while (true) {
      std::vector<std::ptrdiff_t> level(graph_.size(), -1);
      std::deque<std::size_t> q{s};
      level[s] = 0;
      while (!q.empty()) {
        const std::size_t u = q.front();
        q.pop_front();
        for (const Edge& e : graph_[u])
          if (e.cap > tol && level[e.to] < 0) level[e.to] = level[u] + 1, q.push_back(e.to);
      }
      if (level[t] < 0) return total;
      std::vector<std::size_t> it(graph_.size(), 0);
      while (true) {
        const double pushed = dfs(s, t, kInf, level, it, tol);
        if (pushed <= tol) break;
        total += pushed;
      }
    }
  }

 private:
  struct Edge {
    std::size_t to, rev;
    double cap;
  };

  double dfs(std::size_t u, std::size_t t, double f, const std::vector<std::ptrdiff_t>& level,
             std::vector<std::size_t>& it, double tol) {
    if (u == t) return f;
    for (; it[u] < graph_[u].size(); ++it[u]) {
      Edge& e = graph_[u][it[u]];
      if (e.cap <= tol || level[e.to] != level[u] + 1) continue;
      const double got = dfs(e.to, t, std::min(f, e.cap), level, it, tol);
      if (got > tol) {
        e.cap -= got;
        graph_[e.to][e.rev].cap += got;
        return got;
      }
    }
    return 0.0;
  }

  std::vector<std::vector<Edge>> graph_;
};

}  // namespace

bool bottleneck_feasible(const Measure& mu, const Measure& nu, double threshold) {
  require_same_space(mu, nu);
  const FiniteMetricSpace& x = *mu.space();
  const std::size_t n = x.size();
  MaxFlow g(2 * n + 2);
  const std::size_t s = 2 * n, t = 2 * n + 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (mu[i] > 0.0) g.add_edge(s, i, mu[i]);
    if (nu[i] > 0.0) g.add_edge(n + i, t, nu[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (mu[i] <= 0.0) continue;
    for (std::size_t j = 0; j < n; ++j)
      if (nu[j] > 0.0 && x(i, j) <= threshold) g.add_edge(i, n + j, kInf);
  }
  return g.run(s, t) >= 1.0 - 1e-12;
}

double wasserstein_inf(const Measure& mu, const Measure& nu) {
  require_same_space(mu, nu);
  std::vector<double> levels(mu.space()->dist().data());
  levels.push_back(0.0);
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::size_t lo = 0, hi = levels.size() - 1;  // levels[hi] is always feasible
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (bottleneck_feasible(mu, nu, levels[mid])) hi = mid;
    else lo = mid + 1;
  }
  return levels[lo];
}

Measure pushforward(const Measure& mu, std::span<const std::size_t> h, SpacePtr target) {
  if (!target) target = mu.space();
  if (h.size() != mu.size()) throw TransportError("pushforward map must be total on the source space");
  std::vector<double> w(target->size(), 0.0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] >= w.size()) throw TransportError("pushforward map value out of range");
    w[h[i]] += mu[i];
  }
  return Measure(std::move(target), std::move(w));
}

Measure mix(std::span<const Measure> measures, std::span<const double> lambdas) {
  if (measures.empty() || measures.size() != lambdas.size()) throw TransportError("mix needs one weight per measure");
  double total = 0.0;
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw TransportError("mixing weights must be nonnegative");
    total += l;
  }
  if (std::abs(total - 1.0) > tolerances().measure_sum) throw TransportError("mixing weights must sum to 1");
  std::vector<double> w(measures.front().size(), 0.0);
  for (std::size_t k = 0; k < measures.size(); ++k) {
    if (!measures[k].space()->same_as(*measures.front().space())) throw TransportError("mixing measures on different spaces");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += lambdas[k] * measures[k][i];
  }
  return Measure(measures.front().space(), std::move(w));
}

std::size_t prob_net_size(std::size_t points, std::size_t m) {
  // C(m + points - 1, points - 1) with saturation.
  if (points == 0) return 0;
  const std::size_t k = points - 1;
  long double c = 1.0L;
  for (std::size_t i = 1; i <= k; ++i) {
    c = c * static_cast<long double>(m + i) / static_cast<long double>(i);
    if (c > 1e18L) return std::numeric_limits<std::size_t>::max();
  }
  return static_cast<std::size_t>(c + 0.5L);
}

ProbNet prob_net(const SpacePtr& space, std::size_t m, std::optional<std::vector<std::size_t>> support,
                 std::size_t cap) {
  if (m == 0) throw TransportError("prob_net resolution must be positive");
  std::vector<std::size_t> pts;
  if (support) {
    pts = *support;
    SubsetRef check(space, pts);  // validates range and duplicates
  } else {
    pts.resize(space->size());
    std::iota(pts.begin(), pts.end(), 0);
  }
  const std::size_t count = prob_net_size(pts.size(), m);
  if (count > cap)
    throw TransportError("prob_net would hold " + std::to_string(count) + " measures (cap " + std::to_string(cap) +
                         "); use a coarser resolution or a smaller support");
  ProbNet net;
  net.resolution = m;
  double diam = 0.0;
  for (std::size_t a : pts)
    for (std::size_t b : pts) diam = std::max(diam, (*space)(a, b));
  net.density = diam * static_cast<double>(pts.size() / 2) / static_cast<double>(m);
  net.measures.reserve(count);

  // Enumerate compositions of m into |pts| parts in lexicographically decreasing order.
  std::vector<std::size_t> parts(pts.size(), 0);
  auto emit = [&] {
    std::vector<double> w(space->size(), 0.0);
    for (std::size_t k = 0; k < pts.size(); ++k) w[pts[k]] = static_cast<double>(parts[k]) / static_cast<double>(m);
    net.measures.emplace_back(space, std::move(w));
  };
  auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == pts.size()) {
      parts[pos] = left;
      emit();
      return;
    }
    for (std::size_t v = left + 1; v-- > 0;) {
      parts[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, m);
  return net;
}

Matrix w1_matrix(std::span<const Measure> measures) {
  const std::size_t n = measures.size();
  Matrix out(n, n, 0.0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
  std::vector<double> vals(pairs.size());
  parallel_for(pairs.size(), [&](std::size_t k) { vals[k] = w1(measures[pairs[k].first], measures[pairs[k].second]); });
  for (std::size_t k = 0; k < pairs.size(); ++k)
    out(pairs[k].first, pairs[k].second) = out(pairs[k].second, pairs[k].first) = vals[k];
  return out;
}

}  // namespace qmlab
