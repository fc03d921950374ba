#include "io.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "qmlab/markov.hpp"

namespace qmlab::io {

const json& require(const json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError("missing key '" + key + "'");
  return j.at(key);
}

double get_double(const json& j, const std::string& key) {
  const auto& v = require(j, key);
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  return v.get<double>();
}

double get_double(const json& j, const std::string& key, double fallback) {
  return j.contains(key) ? get_double(j, key) : fallback;
}

std::size_t get_size(const json& j, const std::string& key) {
  const auto& v = require(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError("'" + key + "' must be a nonnegative integer");
  return v.get<std::size_t>();
}

std::size_t get_size(const json& j, const std::string& key, std::size_t fallback) {
  return j.contains(key) ? get_size(j, key) : fallback;
}

std::string get_string(const json& j, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) throw ConfigError("'" + key + "' must be a string");
  return j.at(key).get<std::string>();
}

std::vector<double> get_doubles(const json& j, const std::string& key) {
  const auto& v = require(j, key);
  if (!v.is_array()) throw ConfigError("'" + key + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError("'" + key + "' must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<double> get_grid(const json& j, const std::string& key) {
  const auto& v = require(j, key);
  if (v.is_array()) return get_doubles(j, key);
  const double a = get_double(v, "from"), b = get_double(v, "to");
  const std::size_t n = get_size(v, "count");
  if (n == 0) throw ConfigError("'" + key + "' needs a positive count");
  if (n == 1) return {a};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

SpacePtr load_space(const json& j) {
  const std::string kind = get_string(j, "kind", "matrix");
  if (kind == "interval") return interval_net(get_size(j, "n"), get_double(j, "length", 1.0));
  if (kind == "circle") return circle_net(get_size(j, "n"), get_double(j, "circumference", 2 * std::numbers::pi));
  if (kind == "cantor") return cantor_net(get_size(j, "depth", 4));
  if (kind != "matrix") throw ConfigError("unknown space kind '" + kind + "'");
  const auto& rows = require(j, "dist");
  if (!rows.is_array()) throw ConfigError("'dist' must be a matrix");
  std::vector<std::vector<double>> d;
  for (const auto& r : rows) {
    if (!r.is_array()) throw ConfigError("'dist' must be a matrix");
    std::vector<double> row;
    for (const auto& e : r) {
      if (!e.is_number()) throw ConfigError("'dist' entries must be numbers");
      row.push_back(e.get<double>());
    }
    d.push_back(std::move(row));
  }
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    for (const auto& l : j.at("labels")) {
      if (!l.is_string()) throw ConfigError("'labels' must be strings");
      labels.push_back(l.get<std::string>());
    }
    if (labels.size() != d.size()) throw ConfigError("one label per row of 'dist' is required");
  }
  for (const auto& r : d)
    if (r.size() != d.size()) throw ConfigError("'dist' must be square");
  return validate_metric(Matrix::from_rows(d), labels);
}

namespace {

std::size_t point_index(const json& p, const SpacePtr& space) {
  if (p.is_number_integer()) {
    const auto i = p.get<long long>();
    if (i < 0 || static_cast<std::size_t>(i) >= space->size()) throw ConfigError("point index out of range");
    return static_cast<std::size_t>(i);
  }
  if (p.is_string()) {
    const auto& labels = space->labels();
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == p.get<std::string>()) return i;
    throw ConfigError("unknown point label '" + p.get<std::string>() + "'");
  }
  throw ConfigError("a point is an index or a label");
}

}  // namespace

Measure load_measure(const json& j, const SpacePtr& space) {
  if (j.is_array()) {
    std::vector<double> w;
    for (const auto& e : j) {
      if (!e.is_number()) throw ConfigError("measure weights must be numbers");
      w.push_back(e.get<double>());
    }
    if (w.size() != space->size()) throw ConfigError("measure needs one weight per point");
    return Measure(space, w);
  }
  if (j.is_object() && j.contains("point")) return Measure::point_mass(space, point_index(j.at("point"), space));
  if (j.is_object() && j.contains("uniform")) {
    std::vector<std::size_t> sup;
    for (const auto& p : j.at("uniform")) sup.push_back(point_index(p, space));
    return Measure::uniform(space, sup);
  }
  throw ConfigError("a measure is a weight array, {\"point\": ...} or {\"uniform\": [...]}");
}

json measure_to_json(const Measure& mu) { return json(mu.weights()); }

DynMap load_dynamics(const json& j, const SpacePtr& space) {
  const std::string kind = get_string(j, "kind", "");
  DynMap h = identity_map(space);
  if (kind == "rotation") {
    const auto& s = require(j, "steps");
    if (!s.is_number_integer()) throw ConfigError("'steps' must be an integer");
    h = rotation(space, s.get<long>());
  } else if (kind == "cyclic") {
    const auto& s = require(j, "steps");
    if (!s.is_number_integer()) throw ConfigError("'steps' must be an integer");
    const long n = static_cast<long>(space->size());
    PointMap m(space->size());
    for (long i = 0; i < n; ++i) m[static_cast<std::size_t>(i)] = static_cast<std::size_t>(((i + s.get<long>()) % n + n) % n);
    h = DynMap(space, m);
  } else if (kind == "table") {
    PointMap m;
    for (const auto& e : require(j, "map")) m.push_back(point_index(e, space));
    h = DynMap(space, m);
  } else if (kind == "analytic") {
    if (get_string(j, "map", "") != "sine_pluck") throw ConfigError("analytic maps: only 'sine_pluck' is known");
    h = project_circle_map(space, sine_pluck(get_double(j, "t")));
  } else {
    throw ConfigError("unknown dynamics kind '" + kind + "'");
  }
  if (j.contains("deform")) {
    const auto& d = j.at("deform");
    if (get_string(d, "kind", "") != "sine_pluck") throw ConfigError("deform: only 'sine_pluck' is known");
    h = deform(sine_pluck(get_double(d, "t")), h);
  }
  return h;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

}  // namespace

std::string matrix_csv(const Matrix& m, std::span<const std::string> row_labels, std::span<const std::string> col_labels) {
  if (row_labels.size() != m.rows() || col_labels.size() != m.cols()) throw ConfigError("label count mismatch in CSV");
  std::string out;
  for (const auto& l : col_labels) out += "," + csv_field(l);
  out += "\n";
  for (std::size_t i = 0; i < m.rows(); ++i) {
    out += csv_field(row_labels[i]);
    for (std::size_t k = 0; k < m.cols(); ++k) out += "," + format_double(m(i, k));
    out += "\n";
  }
  return out;
}

std::string columns_csv(std::span<const std::string> header, std::span<const std::vector<double>> columns) {
  if (header.size() != columns.size()) throw ConfigError("header and column counts differ");
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) out += (c ? "," : "") + csv_field(header[c]);
  out += "\n";
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (const auto& col : columns)
    if (col.size() != rows) throw ConfigError("ragged CSV columns");
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) out += (c ? "," : "") + format_double(columns[c][r]);
    out += "\n";
  }
  return out;
}

}  // namespace qmlab::io
