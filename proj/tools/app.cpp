#include "app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>

#include "checks.hpp"
#include "plot.hpp"
#include "qmlab/distances.hpp"
#include "qmlab/dynamics.hpp"
#include "qmlab/fields.hpp"
#include "qmlab/lipgeometry.hpp"
#include "qmlab/markov.hpp"
#include "qmlab/transport.hpp"

namespace qmlab::app {

using namespace io;

namespace {

std::vector<std::string> index_labels(const std::string& prefix, std::size_t n) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

std::vector<std::string> value_labels(const std::string& prefix, const std::vector<double>& xs) {
  std::vector<std::string> v;
  for (double x : xs) v.push_back(prefix + format_double(x));
  return v;
}

json matrix_json(const Matrix& m) { return json(m.to_rows()); }

std::vector<double> as_doubles(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

SearchBudget load_budget(const json& c) {
  SearchBudget b;
  if (c.contains("budget")) {
    b.max_pairs = get_size(c.at("budget"), "max_pairs", b.max_pairs);
    b.max_local_rounds = get_size(c.at("budget"), "max_local_rounds", b.max_local_rounds);
  }
  return b;
}

NucleusKind load_nucleus_kind(const json& c) {
  const auto k = get_string(c, "nucleus_kind", "stored");
  if (k == "stored") return NucleusKind::Stored;
  if (k == "streamed") return NucleusKind::Streamed;
  throw ConfigError("nucleus_kind is 'stored' or 'streamed'");
}

Outcome wasserstein_scenario(const json& c) {
  const auto x = load_space(require(c, "space"));
  const auto mu = load_measure(require(c, "mu"), x), nu = load_measure(require(c, "nu"), x);
  const auto primal = wasserstein1(mu, nu);
  const auto dual = wasserstein1_dual(mu, nu);
  Outcome o;
  o.report["w1"] = primal.value;
  o.report["w1_dual"] = dual.value;
  o.report["duality_gap"] = std::abs(primal.value - dual.value);
  o.report["w_inf"] = wasserstein_inf(mu, nu);
  o.report["potential"] = dual.witness.values;
  o.report["potential_lipschitz"] = dual.witness.lipschitz;
  o.files.push_back({"coupling.csv", "csv", matrix_csv(primal.witness.plan, x->labels(), x->labels())});
  Matrix pot(x->size(), 1);
  for (std::size_t i = 0; i < x->size(); ++i) pot(i, 0) = dual.witness.values[i];
  const std::vector<std::string> head{"potential"};
  o.files.push_back({"potential.csv", "csv", matrix_csv(pot, x->labels(), head)});
  return o;
}

Outcome gh_scenario(const json& c) {
  const auto x = load_space(require(c, "x")), y = load_space(require(c, "y"));
  const auto r = gh_distance(*x, *y, load_budget(c));
  Outcome o;
  o.report["value"] = r.value;
  o.report["kind"] = to_string(r.kind);
  o.report["lower_bound"] = r.lower_bound;
  json w = json::array();
  std::vector<double> xi, yi;
  for (const auto& [a, b] : r.witness.pairs) {
    w.push_back({a, b});
    xi.push_back(static_cast<double>(a));
    yi.push_back(static_cast<double>(b));
  }
  o.report["witness"] = w;
  const std::vector<std::string> head{"x", "y"};
  const std::vector<std::vector<double>> cols{xi, yi};
  o.files.push_back({"correspondence.csv", "csv", columns_csv(head, cols)});
  return o;
}

Outcome gap_scenario(const json& c) {
  const auto x = load_space(require(c, "x")), y = load_space(require(c, "y"));
  const std::size_t m = get_size(c, "resolution", 2);
  const auto sx = simplex_net(x, m), sy = simplex_net(y, m);
  const auto budget = load_budget(c);
  const auto gap = intertwining_gap(sx, sy, budget);
  const auto fk = fukaya_distance(sx, sy, budget);
  PointMap f = gap.report.forward;
  if (c.contains("map")) {
    f.clear();
    for (const auto& e : c.at("map")) {
      if (!e.is_number_integer()) throw ConfigError("'map' entries are point indices");
      f.push_back(e.get<std::size_t>());
    }
  }
  std::optional<double> delta;
  if (c.contains("delta")) delta = get_double(c, "delta");
  const auto dq = dq_upper(sx, sy, f, delta, budget);
  Outcome o;
  o.report["gamma"] = gap.gamma;
  o.report["fukaya"] = fk.value;
  o.report["dq_upper"] = dq.value;
  o.report["delta"] = dq.delta;
  json flags = json::array();
  if (gap.report.kind == BoundKind::Upper) flags.push_back("gamma-upper-bound");
  if (fk.report.kind == BoundKind::Upper) flags.push_back("fukaya-upper-bound");
  o.report["flags"] = flags;
  o.report["witness"] = {{"forward", gap.report.forward}, {"backward", gap.report.backward}};
  o.report["net_density"] = {sx.density, sy.density};
  const std::vector<std::string> head{"source", "target"};
  std::vector<double> src, dst;
  for (std::size_t i = 0; i < gap.report.forward.size(); ++i) {
    src.push_back(static_cast<double>(i));
    dst.push_back(static_cast<double>(gap.report.forward[i]));
  }
  const std::vector<std::vector<double>> fw{src, dst};
  o.files.push_back({"forward.csv", "csv", columns_csv(head, fw)});
  src.clear();
  dst.clear();
  for (std::size_t i = 0; i < gap.report.backward.size(); ++i) {
    src.push_back(static_cast<double>(i));
    dst.push_back(static_cast<double>(gap.report.backward[i]));
  }
  const std::vector<std::vector<double>> bw{src, dst};
  o.files.push_back({"backward.csv", "csv", columns_csv(head, bw)});
  return o;
}

Outcome nucleus_scenario(const json& c, std::uint64_t seed) {
  const auto x = load_space(require(c, "space"));
  const double r = get_double(c, "r", radius(*x));
  const auto nuc = nucleus_net(x, r, get_double(c, "eps"));
  Outcome o;
  o.report["r"] = nuc.r;
  o.report["count"] = nuc.count;
  o.report["density"] = nuc.density;
  o.report["grid_step"] = nuc.grid_step;
  o.report["probe_density"] = nucleus_probe_density(nuc, get_size(c, "probes", 200), seed);
  Matrix rows(nuc.count, x->size());
  for (std::size_t k = 0; k < nuc.count; ++k)
    for (std::size_t i = 0; i < x->size(); ++i) rows(k, i) = nuc.function(k)[i];
  o.files.push_back({"nucleus.csv", "csv", matrix_csv(rows, index_labels("f", nuc.count), x->labels())});
  return o;
}

Outcome birkhoff_scenario(const json& c) {
  const auto x = load_space(require(c, "space"));
  const auto h = load_dynamics(require(c, "dynamics"), x);
  const double r = get_double(c, "r", radius(*x));
  const double eps = get_double(c, "eps");
  const auto nuc = nucleus_net(x, r, get_double(c, "nucleus_eps", eps), tolerances().nucleus_cap, load_nucleus_kind(c));
  const auto rep = birkhoff_rate(h, nuc, eps, get_size(c, "n_max", 4 * x->size()));
  Outcome o;
  o.report["epsilon"] = rep.epsilon;
  o.report["rate"] = rep.rate;
  o.report["resolved"] = rep.resolved;
  o.report["note"] = rep.note;
  o.report["projection_error"] = h.projection_error;
  o.report["nucleus_density"] = nuc.density;
  o.report["deviation"] = rep.deviation;
  std::vector<double> ns;
  for (std::size_t n = 1; n <= rep.deviation.size(); ++n) ns.push_back(static_cast<double>(n));
  const std::vector<std::string> head{"n", "deviation"};
  const std::vector<std::vector<double>> cols{ns, rep.deviation};
  o.files.push_back({"birkhoff.csv", "csv", columns_csv(head, cols)});
  plot::Plot p{"Birkhoff deviation", "n", "deviation", plot::Kind::Line, {}};
  p.series.push_back({"deviation(n)", ns, rep.deviation, true, false});
  p.series.push_back({"eps = " + format_double(eps), {ns.front(), ns.back()}, {eps, eps}, false, true});
  o.files.push_back({"birkhoff.svg", "svg", plot::emit_plot(p)});
  return o;
}

std::vector<std::size_t> load_n_values(const json& c) {
  const auto& v = require(c, "n_values");
  std::vector<std::size_t> ns;
  if (v.is_array()) {
    for (const auto& e : v) {
      if (!e.is_number_integer() || e.get<long long>() <= 0) throw ConfigError("'n_values' are positive integers");
      ns.push_back(e.get<std::size_t>());
    }
  } else {
    const std::size_t a = get_size(v, "from"), b = get_size(v, "to"), s = get_size(v, "step", 1);
    if (a == 0 || s == 0 || b < a) throw ConfigError("'n_values' range needs 0 < from <= to and step > 0");
    for (std::size_t n = a; n <= b; n += s) ns.push_back(n);
  }
  if (ns.empty()) throw ConfigError("'n_values' is empty");
  return ns;
}

RandomMapFamily load_family(const json& j) {
  if (get_string(j, "kind", "") == "cantor") {
    const std::size_t depth = get_size(j, "depth", 4);
    return two_contractions(cantor_net(depth), depth);
  }
  const auto x = load_space(require(j, "space"));
  std::vector<DynMap> maps;
  for (const auto& m : require(j, "maps")) maps.push_back(load_dynamics(m, x));
  return RandomMapFamily(maps, get_doubles(j, "probabilities"));
}

Outcome ldp_scenario(const json& c, std::uint64_t seed) {
  const auto fam = load_family(require(c, "family"));
  const auto& x = fam.space();
  const json nj = c.contains("nucleus") ? c.at("nucleus") : json::object();
  const double r = get_double(nj, "r", radius(*x));
  const auto nuc = get_string(nj, "kind", "exact") == "exact" ? exact_nucleus(x, r)
                                                               : nucleus_net(x, r, get_double(nj, "eps"));
  const auto ns = load_n_values(c);
  LdpOptions opt;
  opt.trials = get_size(c, "trials", opt.trials);
  opt.seed = seed;
  const double eps = get_double(c, "eps");
  const auto rep = ldp_experiment(fam, nuc, eps, ns, opt);
  Outcome o;
  o.report["eps"] = rep.eps;
  o.report["trials"] = rep.trials;
  o.report["rng"] = rep.rng;
  o.report["n_values"] = rep.n_values;
  o.report["probabilities"] = rep.probabilities;
  o.report["exceed_counts"] = rep.exceed_counts;
  o.report["start_net"] = rep.start_net;
  o.report["c1"] = rep.c1;
  o.report["c2"] = rep.c2;
  o.report["r_squared"] = rep.r_squared;
  o.report["fitted_points"] = rep.fitted_points;
  o.report["nonincreasing_within_bands"] = nonincreasing_within_bands(rep);
  o.report["warnings"] = rep.warnings;
  const auto nd = as_doubles(rep.n_values);
  const std::vector<std::string> head{"n", "probability", "exceed_count"};
  const std::vector<std::vector<double>> cols{nd, rep.probabilities, as_doubles(rep.exceed_counts)};
  o.files.push_back({"ldp.csv", "csv", columns_csv(head, cols)});
  plot::Plot p{"Deviation probability", "n", "p(n)", plot::Kind::Semilog, {}};
  p.series.push_back({"empirical", nd, rep.probabilities, true, false});
  if (rep.fitted_points >= 2) {
    std::vector<double> fit;
    for (double n : nd) fit.push_back(rep.c1 * std::exp(-rep.c2 * n * eps * eps));
    p.series.push_back({"fit c1 = " + format_double(rep.c1) + ", c2 = " + format_double(rep.c2), nd, fit, false, true});
  }
  o.files.push_back({"ldp.svg", "svg", plot::emit_plot(p)});
  return o;
}

WaveProfile load_profile(const json& p) {
  const std::string kind = get_string(p, "profile", "pluck");
  const double length = get_double(p, "length", std::numbers::pi);
  WaveProfile w;
  if (kind == "pluck") {
    std::optional<double> peak;
    if (p.contains("peak")) peak = get_double(p, "peak");
    w = triangular_pluck(get_size(p, "modes", 16), get_double(p, "height", 0.5), peak, length);
  } else if (kind == "flat") {
    w = flat_profile(length);
  } else if (kind == "single") {
    w = single_mode(get_double(p, "amplitude", 1.0), get_size(p, "mode", 1), length);
  } else if (kind == "series") {
    w.length = length;
    w.displacement = get_doubles(p, "displacement");
    if (p.contains("velocity")) w.velocity = get_doubles(p, "velocity");
  } else {
    throw ConfigError("unknown wave profile '" + kind + "'");
  }
  w.speed = get_double(p, "speed", 1.0);
  if (!(w.speed > 0.0)) throw ConfigError("wave speed must be positive");
  return w;
}

Outcome field_scenario(const json& c) {
  const std::string field = get_string(c, "field", "wave");
  const json params = c.contains("params") ? c.at("params") : json::object();
  const auto& grid = require(c, "grid");
  MetricField f;
  json defaults;
  if (field == "wave") {
    const auto w = load_profile(params);
    f = wave_metric_field(w, get_grid(grid, "t"), get_grid(grid, "x"));
    if (params.contains("circle") && params.at("circle").get<bool>()) f = circle_wave_metric(f);
    defaults = {{"profile", get_string(params, "profile", "pluck")},
                {"modes", std::max(w.displacement.size(), w.velocity.size())},
                {"speed", w.speed},
                {"length", w.length}};
    if (defaults["profile"] == "pluck") {
      defaults["height"] = get_double(params, "height", 0.5);
      defaults["peak"] = get_double(params, "peak", w.length / 2);
    }
  } else if (field == "scaled") {
    const auto x = load_space(require(params, "space"));
    const double a = get_double(params, "a", 1.0), b = get_double(params, "b", 1.0);
    f = scaled_field(x, get_grid(grid, "theta"), [a, b](double t) { return a + b * t; });
    defaults = {{"scale", "a + b theta"}, {"a", a}, {"b", b}};
  } else {
    throw ConfigError("wave-field scenarios take field 'wave' or 'scaled'");
  }
  Outcome o;
  o.report["field"] = field;
  o.report["profile"] = defaults;
  o.report["thetas"] = f.thetas;
  o.report["quadrature_error"] = f.quadrature_error;
  const auto& labels = f.labels();
  for (std::size_t k = 0; k < f.size(); ++k)
    o.files.push_back({"fibre_" + std::to_string(k) + ".csv", "csv", matrix_csv(f.fibres[k]->dist(), labels, labels)});
  const auto tl = value_labels("t=", f.thetas);
  if (f.size() >= 2) {
    const auto env = lipschitz_envelope(f);
    o.report["envelope"] = {{"m", env.m}, {"M", env.big_m}, {"max_violation", env.max_violation}, {"ok", env.ok()}};
    o.files.push_back({"envelope_k.csv", "csv", matrix_csv(env.k, tl, tl)});
    o.files.push_back({"envelope_K.csv", "csv", matrix_csv(env.big_k, tl, tl)});
  }
  // Sections: distance to each point on the first fibre, held fixed in theta.
  std::vector<std::vector<std::vector<double>>> sections;
  const auto& base = *f.fibres.front();
  for (std::size_t p = 0; p < base.size(); ++p) {
    const auto row = base.dist().row(p);
    sections.emplace_back(f.size(), std::vector<double>(row.begin(), row.end()));
  }
  const auto cont = field_continuity_check(f, sections);
  std::vector<std::string> head{"theta"};
  std::vector<std::vector<double>> cols{f.thetas};
  json jumps = json::array();
  for (std::size_t s = 0; s < sections.size(); ++s) {
    head.push_back("L_" + labels[s]);
    cols.push_back(cont.values[s]);
    jumps.push_back(cont.lower_jumps[s]);
  }
  o.report["continuity"] = {{"lower_jumps", jumps}, {"max_step", cont.max_step}};
  o.files.push_back({"continuity.csv", "csv", columns_csv(head, cols)});

  plot::Plot p{"Field diagnostics", "theta", "", plot::Kind::Line, {}};
  if (c.contains("nucleus")) {
    const auto& nj = c.at("nucleus");
    double r = 0.0;
    for (const auto& s : f.fibres) r = std::max(r, radius(*s));
    const auto nf = nucleus_field(f, get_double(nj, "r", r), get_double(nj, "eps"));
    json steps = json::array();
    for (const auto& st : nf.steps)
      steps.push_back({{"from", st.from}, {"to", st.to}, {"k", st.k}, {"hausdorff", st.hausdorff},
                       {"displacement", st.displacement}, {"bound", st.bound}, {"violations", st.violations}});
    o.report["nucleus_field"] = {{"ok", nf.ok()}, {"steps", steps}};
  }
  if (c.contains("birkhoff")) {
    const auto& bj = c.at("birkhoff");
    const auto h = load_dynamics(require(bj, "dynamics"), f.fibres.front());
    double r = 0.0;
    for (const auto& s : f.fibres) r = std::max(r, radius(*s));
    r = get_double(bj, "r", r);
    const double eps = get_double(bj, "eps");
    const auto bf = birkhoff_field(f, h.map, eps, r, get_size(bj, "n_max", 64), get_double(bj, "nucleus_eps", eps));
    o.report["birkhoff"] = {{"rates", bf.rates}, {"usc_flags", bf.usc_flags}};
    const std::vector<std::string> rh{"theta", "rate"};
    const std::vector<std::vector<double>> rc{f.thetas, as_doubles(bf.rates)};
    o.files.push_back({"rates.csv", "csv", columns_csv(rh, rc)});
    p.series.push_back({"Birkhoff rate", f.thetas, as_doubles(bf.rates), true, false});
  }
  for (std::size_t s = 0; s < std::min<std::size_t>(sections.size(), 3); ++s)
    p.series.push_back({"L(d(" + labels[s] + ", .))", f.thetas, cont.values[s], true, false});
  o.files.push_back({"field.svg", "svg", plot::emit_plot(p)});
  return o;
}

Outcome rotation_scenario(const json& c) {
  if (get_string(c, "field", "rotation") != "rotation") throw ConfigError("rotation-field scenarios take field 'rotation'");
  const json params = c.contains("params") ? c.at("params") : json::object();
  const std::size_t p = get_size(params, "p", 1), q = get_size(params, "q", 4), n = get_size(params, "n", 32);
  RotationFieldOptions opt;
  const auto mode = get_string(params, "mode", "exact");
  if (mode == "projected") opt.mode = RotationMode::Projected;
  else if (mode != "exact") throw ConfigError("rotation mode is 'exact' or 'projected'");
  opt.hull_resolution = get_size(params, "hull_resolution", opt.hull_resolution);
  opt.simplex_resolution = get_size(params, "simplex_resolution", opt.simplex_resolution);
  const auto rep = rotation_field(p, q, get_grid(require(c, "grid"), "t"), n, opt);
  Outcome o;
  o.report["p"] = p;
  o.report["q"] = q;
  o.report["net_size"] = rep.net_size;
  o.report["steps"] = rep.steps;
  o.report["mode"] = mode;
  o.report["ts"] = rep.ts;
  o.report["dhat"] = matrix_json(rep.dhat);
  o.report["gamma"] = matrix_json(rep.gamma);
  o.report["distortion"] = matrix_json(rep.distortion);
  json orbits = json::array();
  for (const auto& o_t : rep.orbits) orbits.push_back(o_t);
  o.report["orbits"] = orbits;
  const auto tl = value_labels("t=", rep.ts);
  o.files.push_back({"dhat.csv", "csv", matrix_csv(rep.dhat, tl, tl)});
  o.files.push_back({"gamma.csv", "csv", matrix_csv(rep.gamma, tl, tl)});
  o.files.push_back({"distortion.csv", "csv", matrix_csv(rep.distortion, tl, tl)});
  const std::size_t ref = rep.ts.size() / 2;
  std::vector<double> d, g;
  for (std::size_t k = 0; k < rep.ts.size(); ++k) {
    d.push_back(rep.dhat(ref, k));
    g.push_back(rep.gamma(ref, k));
  }
  plot::Plot pl{"Distances to the fibre at t = " + format_double(rep.ts[ref]), "t", "distance", plot::Kind::Line, {}};
  pl.series.push_back({"d_hat", rep.ts, d, true, false});
  pl.series.push_back({"gamma_hat", rep.ts, g, true, true});
  o.files.push_back({"rotation.svg", "svg", plot::emit_plot(pl)});
  return o;
}

Outcome check_scenario(std::uint64_t seed) {
  Outcome o;
  json list = json::array();
  for (const auto& r : checks::run_invariant_suite(seed)) {
    list.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    o.passed = o.passed && r.passed;
  }
  o.report["checks"] = list;
  o.report["passed"] = o.passed;
  return o;
}

const std::map<std::string, std::vector<std::string>>& required_keys() {
  static const std::map<std::string, std::vector<std::string>> k{
      {"wasserstein", {"w1", "w1_dual", "duality_gap", "w_inf", "potential"}},
      {"gh", {"value", "kind", "lower_bound", "witness"}},
      {"gap", {"gamma", "fukaya", "dq_upper", "flags", "witness"}},
      {"nucleus", {"r", "count", "density", "grid_step"}},
      {"birkhoff", {"epsilon", "rate", "resolved", "deviation"}},
      {"ldp", {"eps", "trials", "rng", "n_values", "probabilities", "c1", "c2", "r_squared"}},
      {"wave-field", {"field", "thetas", "continuity"}},
      {"rotation-field", {"ts", "dhat", "gamma", "distortion", "orbits"}},
      {"check", {"checks", "passed"}},
  };
  return k;
}

}  // namespace

Outcome run_scenario(const json& config, const Options& options) {
  if (!config.is_object()) throw ConfigError("the configuration must be a JSON object");
  const std::string kind = get_string(config, "kind", "");
  if (!required_keys().count(kind)) throw ConfigError("unknown scenario kind '" + kind + "'");
  const std::uint64_t seed = options.seed ? *options.seed : static_cast<std::uint64_t>(get_size(config, "seed", 0));
  Outcome o;
  if (kind == "wasserstein") o = wasserstein_scenario(config);
  else if (kind == "gh") o = gh_scenario(config);
  else if (kind == "gap") o = gap_scenario(config);
  else if (kind == "nucleus") o = nucleus_scenario(config, seed);
  else if (kind == "birkhoff") o = birkhoff_scenario(config);
  else if (kind == "ldp") o = ldp_scenario(config, seed);
  else if (kind == "wave-field") o = field_scenario(config);
  else if (kind == "rotation-field") o = rotation_scenario(config);
  else o = check_scenario(seed);
  json report;
  report["version"] = kVersion;
  report["kind"] = kind;
  report["seed"] = seed;
  report["rng"] = SplitMix64::kName;
  report["result"] = std::move(o.report);
  o.report = std::move(report);
  return o;
}

std::string report_problems(const json& report) {
  if (!report.is_object()) return "report is not an object";
  for (const char* k : {"version", "kind", "seed", "rng", "result"})
    if (!report.contains(k)) return std::string("missing '") + k + "'";
  if (report.at("version") != kVersion) return "version mismatch";
  const auto it = required_keys().find(report.at("kind").get<std::string>());
  if (it == required_keys().end()) return "unknown kind";
  for (const auto& k : it->second)
    if (!report.at("result").contains(k)) return "result lacks '" + k + "'";
  return {};
}

int run(const json& config, const Options& options, std::ostream& log) {
  try {
    if (options.threads > 0) set_thread_count(options.threads);
    for (const auto& f : options.formats)
      if (f != "json" && f != "csv" && f != "svg") throw ConfigError("unknown format '" + f + "'");
    auto outcome = run_scenario(config, options);
    if (const auto why = report_problems(outcome.report); !why.empty())
      throw std::logic_error("emitted report fails its schema: " + why);
    outcome.files.insert(outcome.files.begin(), {"report.json", "json", outcome.report.dump(2) + "\n"});
    std::error_code ec;
    std::filesystem::create_directories(options.out, ec);
    if (ec) throw ConfigError("cannot create output directory '" + options.out + "': " + ec.message());
    for (const auto& a : outcome.files) {
      if (std::find(options.formats.begin(), options.formats.end(), a.format) == options.formats.end()) continue;
      const auto path = std::filesystem::path(options.out) / a.name;
      std::ofstream out(path, std::ios::binary);
      out << a.content;
      if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    }
    if (!outcome.passed) {
      log << "check failed:\n";
      for (const auto& c : outcome.report["result"]["checks"])
        if (!c["passed"].get<bool>()) log << "  " << c["name"].get<std::string>() << ": " << c["detail"].get<std::string>() << "\n";
      return 1;
    }
    return 0;
  } catch (const ConfigError& e) {
    log << e.what() << "\n";
    return 2;
  } catch (const json::exception& e) {
    log << "config: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    log << "error in " << e.module() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    log << "internal error: " << e.what() << "\n";
    return 1;
  }
}

int main_entry(int argc, char** argv) {
  CLI::App cli{"Finite quantum metric experiments"};
  std::string config_path;
  Options opt;
  std::uint64_t seed = 0;
  std::vector<std::string> formats;
  cli.add_option("--config", config_path, "scenario JSON")->required();
  cli.add_option("--out", opt.out, "output directory");
  auto* seed_opt = cli.add_option("--seed", seed, "RNG seed (overrides the config)");
  cli.add_option("--threads", opt.threads, "worker threads");
  cli.add_option("--format", formats, "json, csv, svg (repeatable or comma separated)")->delimiter(',');
  cli.set_version_flag("--version", std::string(kVersion));
  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) opt.seed = seed;
  if (!formats.empty()) opt.formats = formats;
  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "config: cannot read '" << config_path << "'\n";
    return 2;
  }
  json config;
  try {
    config = json::parse(in);
  } catch (const json::exception& e) {
    std::cerr << "config: " << e.what() << "\n";
    return 2;
  }
  return run(config, opt, std::cerr);
}

}  // namespace qmlab::app
