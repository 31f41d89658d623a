#pragma once

#include <array>
#include <string>
#include <vector>

#include "keratoflow/gmm/gmm.hpp"
#include "keratoflow/metrics/metrics.hpp"

// Standalone SVG 1.1 charts. Every renderer returns the whole document.
namespace keratoflow::pipeline::svg {

struct ScatterSeries {
  std::string label;
  std::vector<std::array<double, 2>> points;
};

struct EllipseOverlay {
  std::string label;
  gmm::Ellipse ellipse;
  std::size_t series = 0;  // colour index
};

struct ScatterPlot {
  std::string title;
  std::string x_label = "z1";
  std::string y_label = "z2";
  std::vector<ScatterSeries> series;
  std::vector<EllipseOverlay> ellipses;
};

struct RocPlot {
  std::string title;
  std::vector<metrics::RocCurve> curves;  // class_id is the legend label
};

struct Band {
  std::string label;
  std::vector<double> mean;
  std::vector<double> variance;  // shaded as mean +/- sqrt(variance)
};

struct CurvePlot {
  std::string title;
  std::string x_label = "epoch";
  std::string y_label;
  std::vector<Band> bands;
};

std::string render_scatter(const ScatterPlot& plot);
std::string render_roc(const RocPlot& plot);
std::string render_curves(const CurvePlot& plot);

/// Series colour, cycling through a fixed palette.
const char* colour(std::size_t index) noexcept;

}  // namespace keratoflow::pipeline::svg
