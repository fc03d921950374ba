#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "io.hpp"

namespace qmlab::app {

using io::json;

struct Options {
  std::string out = "out";
  std::optional<std::uint64_t> seed;  // overrides the config's "seed"
  unsigned threads = 0;               // 0 keeps the default
  std::vector<std::string> formats{"json", "csv"};
};

struct Artifact {
  std::string name;
  std::string format;  // json, csv or svg
  std::string content;
};

struct Outcome {
  json report;
  std::vector<Artifact> files;  // report.json is added by run()
  bool passed = true;           // false only for a failing check scenario
};

// Runs one scenario in memory. Throws io::ConfigError or DomainError.
Outcome run_scenario(const json& config, const Options& options);

// Empty when the report has every key its kind requires.
std::string report_problems(const json& report);

// Runs and writes the requested formats under options.out. Exit status: 0 success,
// 1 domain error or failing check, 2 configuration error.
int run(const json& config, const Options& options, std::ostream& log);

int main_entry(int argc, char** argv);

}  // namespace qmlab::app
