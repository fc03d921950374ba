#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "app.hpp"
#include "plot.hpp"

using namespace qmlab;
using app::json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("qmlab_cli_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

int run_quiet(const json& config, const app::Options& opt) {
  std::ostringstream log;
  return app::run(config, opt, log);
}

}  // namespace

TEST_CASE("plot: single point is one marker") {
  plot::Plot p{"one", "x", "y", plot::Kind::Line, {{"s", {1.0}, {2.0}, false, false}}};
  const auto svg = plot::emit_plot(p);
  CHECK(count(svg, "<circle") == 1);
  CHECK(count(svg, "<polyline") == 0);
  CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("plot: byte-stable and validated") {
  plot::Plot p{"curve", "n", "deviation", plot::Kind::Line, {{"d", {1, 2, 3, 4}, {0.5, 0.25, 0.25, 0.0}, true, false}}};
  CHECK(plot::emit_plot(p) == plot::emit_plot(p));
  CHECK(count(plot::emit_plot(p), "<polyline") == 1);
  plot::Plot empty{"e", "x", "y", plot::Kind::Line, {{"s", {}, {}, true, false}}};
  CHECK_THROWS_AS(plot::emit_plot(empty), plot::PlotError);
  plot::Plot zeros{"z", "x", "y", plot::Kind::Semilog, {{"s", {1, 2}, {0.0, 0.0}, true, false}}};
  CHECK_THROWS_AS(plot::emit_plot(zeros), plot::PlotError);
  plot::Plot ragged{"r", "x", "y", plot::Kind::Line, {{"s", {1, 2}, {0.0}, true, false}}};
  CHECK_THROWS_AS(plot::emit_plot(ragged), plot::PlotError);
  plot::Plot tags{"a<b & c", "x", "y", plot::Kind::Line, {{"s", {1}, {1}, true, false}}};
  CHECK(plot::emit_plot(tags).find("a&lt;b &amp; c") != std::string::npos);
}

TEST_CASE("io: csv and number formatting") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) CHECK(std::stod(io::format_double(v)) == v);
  const std::vector<std::string> labels{"a,b", "c"};
  const auto csv = io::matrix_csv(Matrix::from_rows({{0, 1}, {1, 0}}), labels, labels);
  CHECK(csv == ",\"a,b\",c\n\"a,b\",0,1\nc,1,0\n");
  const std::vector<std::string> head{"n", "p"};
  const std::vector<std::vector<double>> cols{{1, 2}, {0.5, 0.25}};
  CHECK(io::columns_csv(head, cols) == "n,p\n1,0.5\n2,0.25\n");
}

TEST_CASE("io: loaders") {
  const auto x = io::load_space(json::parse(R"({"kind": "matrix", "labels": ["a", "b"], "dist": [[0, 2], [2, 0]]})"));
  CHECK((*x)(0, 1) == 2.0);
  CHECK(io::load_measure(json::parse(R"({"point": "b"})"), x)[1] == 1.0);
  CHECK(io::load_measure(json::parse("[0.25, 0.75]"), x)[0] == 0.25);
  CHECK_THROWS_AS(io::load_measure(json::parse("[1]"), x), io::ConfigError);
  CHECK_THROWS_AS(io::load_measure(json::parse(R"({"point": "z"})"), x), io::ConfigError);
  CHECK_THROWS_AS(io::load_space(json::parse(R"({"kind": "blob"})")), io::ConfigError);
  CHECK_THROWS_AS(io::load_space(json::parse(R"({"dist": [[0, 1]]})")), io::ConfigError);
  const auto c = io::load_space(json::parse(R"({"kind": "circle", "n": 4, "circumference": 1})"));
  const auto h = io::load_dynamics(json::parse(R"({"kind": "cyclic", "steps": -1})"), c);
  CHECK(h.map == PointMap{3, 0, 1, 2});
  CHECK(io::load_dynamics(json::parse(R"({"kind": "rotation", "steps": 1})"), c).map == PointMap{1, 2, 3, 0});
  CHECK(io::get_grid(json::parse(R"({"g": {"from": 0, "to": 1, "count": 3}})"), "g") == std::vector<double>{0, 0.5, 1});
}

TEST_CASE("cli: wasserstein between point masses is the distance") {
  const auto cfg = json::parse(R"({"kind": "wasserstein",
    "space": {"kind": "matrix", "dist": [[0, 1, 2.5], [1, 0, 1.5], [2.5, 1.5, 0]]},
    "mu": {"point": 0}, "nu": {"point": 2}})");
  const auto o = app::run_scenario(cfg, {});
  CHECK(o.report["result"]["w1"].get<double>() == 2.5);
  CHECK(o.report["result"]["w1_dual"].get<double>() == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(app::report_problems(o.report).empty());
}

TEST_CASE("cli: rotation field tables re-read as symmetric 5x5") {
  const auto dir = scratch("rotation");
  const auto cfg = json::parse(R"({"kind": "rotation-field", "field": "rotation",
    "params": {"p": 1, "q": 4, "n": 16}, "grid": {"t": {"from": -1, "to": 1, "count": 5}}})");
  app::Options opt;
  opt.out = dir.string();
  REQUIRE(run_quiet(cfg, opt) == 0);
  const auto report = json::parse(slurp(dir / "report.json"));
  CHECK(app::report_problems(report).empty());
  for (const char* name : {"dhat.csv", "gamma.csv", "distortion.csv"}) {
    CAPTURE(name);
    const auto rows = parse_csv(slurp(dir / name));
    REQUIRE(rows.size() == 6);
    for (std::size_t i = 1; i < 6; ++i) {
      REQUIRE(rows[i].size() == 6);
      CHECK(rows[i][0] == rows[0][i]);
      CHECK(std::stod(rows[i][i]) == 0.0);
      for (std::size_t j = 1; j < 6; ++j) CHECK(rows[i][j] == rows[j][i]);
    }
  }
  const auto rows = parse_csv(slurp(dir / "dhat.csv"));
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(std::stod(rows[i + 1][j + 1]) == report["result"]["dhat"][i][j].get<double>());
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli: same seed gives byte-identical output") {
  const auto cfg = json::parse(R"({"kind": "ldp", "family": {"kind": "cantor", "depth": 3},
    "eps": 0.2, "n_values": [4, 8, 12], "trials": 200, "seed": 5})");
  const auto a = scratch("ldp_a"), b = scratch("ldp_b"), c = scratch("ldp_c");
  app::Options opt;
  opt.formats = {"json", "csv", "svg"};
  opt.out = a.string();
  REQUIRE(run_quiet(cfg, opt) == 0);
  opt.out = b.string();
  opt.threads = 2;
  REQUIRE(run_quiet(cfg, opt) == 0);
  for (const char* f : {"ldp.csv", "report.json", "ldp.svg"}) CHECK(slurp(a / f) == slurp(b / f));
  CHECK(slurp(a / "ldp.svg").find("c2 = ") != std::string::npos);
  opt.out = c.string();
  opt.seed = 6;
  REQUIRE(run_quiet(cfg, opt) == 0);
  CHECK(json::parse(slurp(c / "report.json"))["seed"] == 6);
  for (const auto& d : {a, b, c}) std::filesystem::remove_all(d);
}

TEST_CASE("cli: formats select the artifacts") {
  const auto dir = scratch("formats");
  app::Options opt;
  opt.out = dir.string();
  opt.formats = {"csv"};
  const auto cfg = json::parse(R"({"kind": "birkhoff", "space": {"kind": "circle", "n": 4, "circumference": 1},
    "dynamics": {"kind": "rotation", "steps": 1}, "eps": 0.1, "n_max": 12})");
  REQUIRE(run_quiet(cfg, opt) == 0);
  CHECK(std::filesystem::exists(dir / "birkhoff.csv"));
  CHECK(!std::filesystem::exists(dir / "report.json"));
  CHECK(!std::filesystem::exists(dir / "birkhoff.svg"));
  opt.formats = {"pdf"};
  CHECK(run_quiet(cfg, opt) == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("cli: exit codes") {
  app::Options opt;
  opt.out = scratch("codes").string();
  CHECK(run_quiet(json::parse(R"({"kind": "teleport"})"), opt) == 2);
  CHECK(run_quiet(json::parse(R"({"kind": "wasserstein"})"), opt) == 2);
  CHECK(run_quiet(json::parse("[1, 2]"), opt) == 2);
  CHECK(run_quiet(json::parse(R"({"kind": "nucleus", "space": {"kind": "interval", "n": 3}, "eps": "big"})"), opt) == 2);
  // A matrix that breaks the triangle inequality is a domain error.
  CHECK(run_quiet(json::parse(R"({"kind": "gh", "x": {"dist": [[0, 1, 5], [1, 0, 1], [5, 1, 0]]},
    "y": {"kind": "interval", "n": 2}})"), opt) == 1);
  CHECK(run_quiet(json::parse(R"({"kind": "rotation-field", "params": {"q": 4, "n": 30}, "grid": {"t": [0]}})"), opt) == 1);
  CHECK(run_quiet(json::parse(R"({"kind": "check", "seed": 2})"), opt) == 0);
  std::filesystem::remove_all(opt.out);
}

TEST_CASE("cli: every scenario emits a schema-valid report") {
  const char* configs[] = {
      R"({"kind": "gh", "x": {"kind": "circle", "n": 4, "circumference": 1}, "y": {"kind": "interval", "n": 3, "length": 0.5}})",
      R"({"kind": "gap", "x": {"dist": [[0, 1], [1, 0]]}, "y": {"dist": [[0, 1.5], [1.5, 0]]}})",
      R"({"kind": "nucleus", "space": {"kind": "interval", "n": 3, "length": 1}, "eps": 0.25})",
      R"({"kind": "wave-field", "field": "scaled", "params": {"space": {"kind": "interval", "n": 3}},
          "grid": {"theta": [0, 0.5]}, "nucleus": {"eps": 0.5}})",
      R"({"kind": "wave-field", "field": "wave", "params": {"profile": "single", "amplitude": 0.3},
          "grid": {"t": [0, 1], "x": [0, 1, 2, 3]}, "birkhoff": {"dynamics": {"kind": "cyclic", "steps": 1}, "eps": 0.3}})",
  };
  for (const char* c : configs) {
    CAPTURE(c);
    const auto o = app::run_scenario(json::parse(c), {});
    CHECK(app::report_problems(o.report).empty());
    CHECK(app::report_problems(json::parse(o.report.dump())).empty());
  }
  CHECK(!app::report_problems(json::parse(R"({"version": "0", "kind": "gh", "seed": 0, "rng": "x", "result": {}})")).empty());
}

TEST_CASE("gap report carries both witnesses") {
  const auto o = app::run_scenario(json::parse(R"({"kind": "gap",
    "x": {"dist": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]}, "y": {"dist": [[0, 1, 1], [1, 0, 1], [1, 1, 0]]}})"), {});
  const auto& r = o.report["result"];
  CHECK(r["gamma"].get<double>() == 0.0);
  CHECK(r["fukaya"].get<double>() <= r["gamma"].get<double>());
  CHECK(r["witness"]["forward"].size() == 3);
  CHECK(r["witness"]["backward"].size() == 3);
}
