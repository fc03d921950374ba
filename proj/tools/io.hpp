#pragma once

#include <json.hpp>

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmlab/dynamics.hpp"
#include "qmlab/metric_space.hpp"
#include "qmlab/transport.hpp"

namespace qmlab::io {

using json = nlohmann::ordered_json;

// Malformed or inconsistent configuration. The CLI maps it to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error("config: " + what) {}
};

// Typed field access with config errors naming the key.
const json& require(const json& j, const std::string& key);
double get_double(const json& j, const std::string& key);
double get_double(const json& j, const std::string& key, double fallback);
std::size_t get_size(const json& j, const std::string& key);
std::size_t get_size(const json& j, const std::string& key, std::size_t fallback);
std::string get_string(const json& j, const std::string& key, const std::string& fallback);
std::vector<double> get_doubles(const json& j, const std::string& key);

// {"from": a, "to": b, "count": n} or an explicit array.
std::vector<double> get_grid(const json& j, const std::string& key);

// {"kind": "matrix", "dist": [[...]], "labels": [...]}, {"kind": "interval", "n", "length"},
// {"kind": "circle", "n", "circumference"}, {"kind": "cantor", "depth"}.
SpacePtr load_space(const json& j);

// Weights aligned with the label order, or {"point": index | label}, or {"uniform": [..]}.
Measure load_measure(const json& j, const SpacePtr& space);
json measure_to_json(const Measure& mu);

// {"kind": "rotation", "steps"} (circle nets) | {"kind": "cyclic", "steps"} (index shift on any
// space) | {"kind": "table", "map": [...]} |
// {"kind": "analytic", "map": "sine_pluck", "t"}, each with an optional
// "deform": {"kind": "sine_pluck", "t"} applied as g h g^-1.
DynMap load_dynamics(const json& j, const SpacePtr& space);

std::string format_double(double v);  // shortest round-trip text

// First row is the header; `labels` name the rows and columns.
std::string matrix_csv(const Matrix& m, std::span<const std::string> row_labels,
                       std::span<const std::string> col_labels);
std::string columns_csv(std::span<const std::string> header, std::span<const std::vector<double>> columns);

}  // namespace qmlab::io
