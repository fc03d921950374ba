#pragma once

#include <string>
#include <vector>

#include "qmlab/config.hpp"

namespace qmlab::plot {

class PlotError : public DomainError {
 public:
  explicit PlotError(const std::string& what) : DomainError("plot", what) {}
};

enum class Kind { Line, Semilog };

struct Series {
  std::string name;
  std::vector<double> xs, ys;
  bool markers = true;
  bool dashed = false;
};

struct Plot {
  std::string title, xlabel, ylabel;
  Kind kind = Kind::Line;
  std::vector<Series> series;
};

// Self-contained SVG. Output depends only on the input, byte for byte. Semilog plots
// use a log10 y axis and drop nonpositive values; a lone point is drawn as one marker.
std::string emit_plot(const Plot& p);

}  // namespace qmlab::plot
