#include "keratoflow/pipeline/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace keratoflow::pipeline::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 170.0;  // legend column
constexpr double kTop = 40.0;
constexpr double kBottom = 52.0;
constexpr int kTicks = 5;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void include(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  /// Falls back to [0, 1] when empty and pads by 5% otherwise.
  void finish() {
    if (lo > hi) {
      lo = 0.0;
      hi = 1.0;
      return;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

class Canvas {
 public:
  Canvas(Range x, Range y) : x_(x), y_(y) {}

  double px(double v) const {
    return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kLeft - kRight);
  }
  double py(double v) const {
    return kHeight - kBottom - (v - y_.lo) / (y_.hi - y_.lo) * (kHeight - kTop - kBottom);
  }
  /// Pixels per data unit.
  double sx() const { return (kWidth - kLeft - kRight) / (x_.hi - x_.lo); }
  double sy() const { return (kHeight - kTop - kBottom) / (y_.hi - y_.lo); }

  void open(const std::string& title, const std::string& x_label, const std::string& y_label) {
    out_ += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(kWidth) +
            "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
            num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out_ += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
            escape(title) + "</text>\n";
    axes(x_label, y_label);
  }

  void raw(const std::string& s) { out_ += s; }

  void polyline(const std::vector<std::array<double, 2>>& pts, const char* stroke,
                const std::string& extra = "") {
    if (pts.empty()) return;
    out_ += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"2\"" +
            extra + " points=\"";
    for (const auto& p : pts) out_ += num(px(p[0])) + "," + num(py(p[1])) + " ";
    out_ += "\"/>\n";
  }

  void legend_entry(const std::string& label, const char* fill) {
    const double y = kTop + 10.0 + 20.0 * static_cast<double>(legend_rows_++);
    const double x = kWidth - kRight + 14.0;
    out_ += "<g class=\"legend-entry\"><rect x=\"" + num(x) + "\" y=\"" + num(y - 9) +
            "\" width=\"12\" height=\"12\" fill=\"" + fill + "\"/><text x=\"" + num(x + 18) +
            "\" y=\"" + num(y + 1) + "\">" + escape(label) + "</text></g>\n";
  }

  std::string close() {
    out_ += "</svg>\n";
    return std::move(out_);
  }

 private:
  void axes(const std::string& x_label, const std::string& y_label) {
    const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
    out_ += "<g class=\"axes\" stroke=\"black\" fill=\"none\"><line x1=\"" + num(x0) + "\" y1=\"" +
            num(y0) + "\" x2=\"" + num(x1) + "\" y2=\"" + num(y0) + "\"/><line x1=\"" + num(x0) +
            "\" y1=\"" + num(y0) + "\" x2=\"" + num(x0) + "\" y2=\"" + num(y1) + "\"/></g>\n";
    out_ += "<g class=\"ticks\" font-size=\"10\">\n";
    for (int i = 0; i <= kTicks; ++i) {
      const double f = static_cast<double>(i) / kTicks;
      const double xv = x_.lo + f * (x_.hi - x_.lo);
      const double yv = y_.lo + f * (y_.hi - y_.lo);
      out_ += "<line x1=\"" + num(px(xv)) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(px(xv)) +
              "\" y2=\"" + num(y0 + 4) + "\" stroke=\"black\"/><text x=\"" + num(px(xv)) +
              "\" y=\"" + num(y0 + 16) + "\" text-anchor=\"middle\">" + tick_label(xv) +
              "</text>\n";
      out_ += "<line x1=\"" + num(x0 - 4) + "\" y1=\"" + num(py(yv)) + "\" x2=\"" + num(x0) +
              "\" y2=\"" + num(py(yv)) + "\" stroke=\"black\"/><text x=\"" + num(x0 - 7) +
              "\" y=\"" + num(py(yv) + 3) + "\" text-anchor=\"end\">" + tick_label(yv) +
              "</text>\n";
    }
    out_ += "</g>\n";
    out_ += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 14) +
            "\" text-anchor=\"middle\">" + escape(x_label) + "</text>\n";
    out_ += "<text x=\"16\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
            num((y0 + y1) / 2) + ")\">" + escape(y_label) + "</text>\n";
  }

  Range x_, y_;
  std::string out_;
  int legend_rows_ = 0;
};

}  // namespace

const char* colour(std::size_t index) noexcept {
  return kPalette[index % (sizeof kPalette / sizeof kPalette[0])];
}

std::string render_scatter(const ScatterPlot& plot) {
  Range xr, yr;
  for (const auto& s : plot.series) {
    for (const auto& p : s.points) {
      xr.include(p[0]);
      yr.include(p[1]);
    }
  }
  for (const auto& o : plot.ellipses) {
    // Bounding box of the rotated ellipse.
    const auto& e = o.ellipse;
    const double c = std::cos(e.angle), s = std::sin(e.angle);
    const double hx = std::hypot(e.semi_major * c, e.semi_minor * s);
    const double hy = std::hypot(e.semi_major * s, e.semi_minor * c);
    xr.include(e.center[0] - hx);
    xr.include(e.center[0] + hx);
    yr.include(e.center[1] - hy);
    yr.include(e.center[1] + hy);
  }
  xr.finish();
  yr.finish();
  Canvas canvas(xr, yr);
  canvas.open(plot.title, plot.x_label, plot.y_label);

  for (const auto& o : plot.ellipses) {
    const auto& e = o.ellipse;
    const double cx = canvas.px(e.center[0]), cy = canvas.py(e.center[1]);
    // The y axis points down on screen, so the rotation flips sign.
    const double deg = -e.angle * 180.0 / std::numbers::pi;
    canvas.raw("<ellipse class=\"confidence\" cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" rx=\"" +
               num(e.semi_major * canvas.sx()) + "\" ry=\"" + num(e.semi_minor * canvas.sy()) +
               "\" transform=\"rotate(" + num(deg) + " " + num(cx) + " " + num(cy) +
               ")\" fill=\"" + colour(o.series) + "\" fill-opacity=\"0.15\" stroke=\"" +
               colour(o.series) + "\"><title>" + escape(o.label) + "</title></ellipse>\n");
  }
  for (std::size_t s = 0; s < plot.series.size(); ++s) {
    canvas.raw("<g class=\"series\" fill=\"" + std::string(colour(s)) + "\">\n");
    for (const auto& p : plot.series[s].points) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      canvas.raw("<circle cx=\"" + num(canvas.px(p[0])) + "\" cy=\"" + num(canvas.py(p[1])) +
                 "\" r=\"3\"/>\n");
    }
    canvas.raw("</g>\n");
    canvas.legend_entry(plot.series[s].label, colour(s));
  }
  return canvas.close();
}

std::string render_roc(const RocPlot& plot) {
  Range unit;
  unit.include(0.0);
  unit.include(1.0);
  Canvas canvas(unit, unit);
  canvas.open(plot.title, "false positive rate", "true positive rate");
  canvas.polyline({{0.0, 0.0}, {1.0, 1.0}}, "#999999", " stroke-dasharray=\"6 4\" class=\"chance\"");
  for (std::size_t c = 0; c < plot.curves.size(); ++c) {
    const auto& curve = plot.curves[c];
    std::vector<std::array<double, 2>> pts;
    for (const auto& p : curve.points) pts.push_back({p.fpr, p.tpr});
    canvas.polyline(pts, colour(c));
    char auc[32];
    std::snprintf(auc, sizeof auc, "%.3f", curve.auc);
    canvas.legend_entry(curve.class_id + " (AUC " + auc + ")", colour(c));
  }
  return canvas.close();
}

std::string render_curves(const CurvePlot& plot) {
  Range xr, yr;
  for (const auto& b : plot.bands) {
    for (std::size_t e = 0; e < b.mean.size(); ++e) {
      const double sd = e < b.variance.size() ? std::sqrt(std::max(b.variance[e], 0.0)) : 0.0;
      xr.include(static_cast<double>(e + 1));
      yr.include(b.mean[e] - sd);
      yr.include(b.mean[e] + sd);
    }
  }
  xr.finish();
  yr.finish();
  Canvas canvas(xr, yr);
  canvas.open(plot.title, plot.x_label, plot.y_label);
  for (std::size_t i = 0; i < plot.bands.size(); ++i) {
    const auto& b = plot.bands[i];
    if (b.mean.empty()) continue;
    std::string poly = "<polygon class=\"band\" fill=\"" + std::string(colour(i)) +
                       "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (std::size_t e = 0; e < b.mean.size(); ++e) {
      const double sd = e < b.variance.size() ? std::sqrt(std::max(b.variance[e], 0.0)) : 0.0;
      poly += num(canvas.px(static_cast<double>(e + 1))) + "," + num(canvas.py(b.mean[e] + sd)) + " ";
    }
    for (std::size_t e = b.mean.size(); e-- > 0;) {
      const double sd = e < b.variance.size() ? std::sqrt(std::max(b.variance[e], 0.0)) : 0.0;
      poly += num(canvas.px(static_cast<double>(e + 1))) + "," + num(canvas.py(b.mean[e] - sd)) + " ";
    }
    canvas.raw(poly + "\"/>\n");
    std::vector<std::array<double, 2>> line;
    for (std::size_t e = 0; e < b.mean.size(); ++e) line.push_back({static_cast<double>(e + 1), b.mean[e]});
    canvas.polyline(line, colour(i));
    canvas.legend_entry(b.label, colour(i));
  }
  return canvas.close();
}

}  // namespace keratoflow::pipeline::svg
