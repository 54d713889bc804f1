#include "keptop/svg.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace keptop {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

// Winding-indexed fill palette; windings beyond the table wrap around.
const char* winding_color(int w) {
  static const char* positive[] = {"#c6dbef", "#9ecae1", "#6baed6", "#4292c6",
                                   "#2171b5", "#08519c"};
  static const char* negative[] = {"#fcbba1", "#fc9272", "#fb6a4a", "#ef3b2c",
                                   "#cb181d", "#99000d"};
  if (w == 0) return "#f0f0f0";
  if (w > 0) return positive[(w - 1) % 6];
  return negative[(-w - 1) % 6];
}

struct Frame {
  double x0, y0, x1, y1;  // world box
  double px, py, scale;   // pixel origin and scale

  double X(double x) const { return px + (x - x0) * scale; }
  double Y(double y) const { return py + (y1 - y) * scale; }  // flip y
};

void polyline_path(std::ostringstream& svg, const Frame& f, const Mat& poly, bool closed,
                   const std::string& style) {
  svg << "<path d=\"";
  for (int j = 0; j < poly.cols(); ++j)
    svg << (j == 0 ? "M" : "L") << num(f.X(poly(0, j))) << " " << num(f.Y(poly(1, j)));
  if (closed) svg << "Z";
  svg << "\" " << style << "/>\n";
}

}  // namespace

std::string svg_map(const ComplementMap& map,
                    const std::vector<std::pair<int, Mat>>& orbit_traces,
                    const std::vector<Vec2>& critical_points) {
  const double size = 760.0, margin = 20.0, legend_w = 150.0;
  Frame f{map.box_lo[0], map.box_lo[1], map.box_hi[0], map.box_hi[1], margin, margin,
          (size - 2 * margin) / (map.box_hi[0] - map.box_lo[0])};

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(size + legend_w)
      << "\" height=\"" << num(size) << "\" viewBox=\"0 0 " << num(size + legend_w) << " "
      << num(size) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  // Bounded components filled by winding color; boundaries extracted from a
  // one-cell erosion keep the polygons clean.
  std::map<int, int> seen_windings;
  for (const auto& comp : map.components) {
    if (!comp.bounded) continue;
    ++seen_windings[comp.winding];
    try {
      const Region region = erode_component(map, comp.id, 0.5 * map.cell_size());
      for (const auto& loop : region.boundary) {
        Mat poly(2, loop.size());
        for (size_t k = 0; k < loop.size(); ++k) poly.col(k) = loop[k];
        polyline_path(svg, f, poly, true,
                      std::string("fill=\"") + winding_color(comp.winding) +
                          "\" fill-rule=\"evenodd\" stroke=\"none\"");
      }
    } catch (const ValidationError&) {
      // Component thinner than a cell: skip the fill, keep the analysis.
    }
  }

  polyline_path(svg, f, map.polyline, true,
                "fill=\"none\" stroke=\"#222222\" stroke-width=\"1.4\"");

  for (const auto& [winding, trace] : orbit_traces) {
    (void)winding;
    polyline_path(svg, f, trace, true,
                  "fill=\"none\" stroke=\"#d95f02\" stroke-width=\"1.2\" "
                  "stroke-dasharray=\"5 3\"");
  }

  for (const auto& cp : critical_points) {
    const double x = f.X(cp.x()), y = f.Y(cp.y());
    svg << "<path d=\"M" << num(x - 5) << " " << num(y) << "L" << num(x + 5) << " "
        << num(y) << "M" << num(x) << " " << num(y - 5) << "L" << num(x) << " "
        << num(y + 5) << "\" stroke=\"#1b9e77\" stroke-width=\"2\"/>\n";
  }

  // Legend: winding swatches, component counts.
  double ly = margin + 10;
  svg << "<text x=\"" << num(size + 10) << "\" y=\"" << num(ly)
      << "\" font-family=\"monospace\" font-size=\"13\">winding</text>\n";
  ly += 10;
  for (const auto& [w, count] : seen_windings) {
    svg << "<rect x=\"" << num(size + 10) << "\" y=\"" << num(ly) << "\" width=\"14\" "
        << "height=\"14\" fill=\"" << winding_color(w) << "\" stroke=\"#555\"/>\n";
    svg << "<text x=\"" << num(size + 32) << "\" y=\"" << num(ly + 12)
        << "\" font-family=\"monospace\" font-size=\"13\">" << w << " (x" << count
        << ")</text>\n";
    ly += 22;
  }
  svg << "</svg>\n";
  return svg.str();
}

std::string svg_projections(const std::vector<Mat>& curve_polylines,
                            const std::vector<Vec>& critical_points,
                            const std::vector<Mat>& orbit_traces) {
  // Common world box over all inputs.
  double lo = 1e300, hi = -1e300;
  for (const auto& poly : curve_polylines) {
    lo = std::min(lo, poly.minCoeff());
    hi = std::max(hi, poly.maxCoeff());
  }
  for (const auto& cp : critical_points) {
    lo = std::min(lo, cp.minCoeff());
    hi = std::max(hi, cp.maxCoeff());
  }
  const double pad = 0.1 * (hi - lo);
  lo -= pad;
  hi += pad;

  const double panel = 320.0, margin = 16.0;
  const int axes[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  const char* names[3] = {"xy", "xz", "yz"};

  std::ostringstream svg;
  const double width = 3 * panel + 4 * margin;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width)
      << "\" height=\"" << num(panel + 2 * margin + 16) << "\" viewBox=\"0 0 "
      << num(width) << " " << num(panel + 2 * margin + 16) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (int p = 0; p < 3; ++p) {
    const double ox = margin + p * (panel + margin);
    Frame f{lo, lo, hi, hi, ox, margin, panel / (hi - lo)};
    svg << "<rect x=\"" << num(ox) << "\" y=\"" << num(margin) << "\" width=\""
        << num(panel) << "\" height=\"" << num(panel)
        << "\" fill=\"none\" stroke=\"#bbbbbb\"/>\n";
    svg << "<text x=\"" << num(ox + 4) << "\" y=\"" << num(margin + panel + 14)
        << "\" font-family=\"monospace\" font-size=\"12\">" << names[p] << "</text>\n";

    const int a = axes[p][0], b = axes[p][1];
    auto project = [&](const Mat& poly) {
      Mat out(2, poly.cols());
      out.row(0) = poly.row(a);
      out.row(1) = poly.row(b);
      return out;
    };
    for (const auto& poly : curve_polylines)
      polyline_path(svg, f, project(poly), true,
                    "fill=\"none\" stroke=\"#222222\" stroke-width=\"1.3\"");
    for (const auto& trace : orbit_traces)
      polyline_path(svg, f, project(trace), true,
                    "fill=\"none\" stroke=\"#d95f02\" stroke-width=\"1.1\" "
                    "stroke-dasharray=\"5 3\"");
    for (const auto& cp : critical_points) {
      const double x = f.X(cp[a]), y = f.Y(cp[b]);
      svg << "<path d=\"M" << num(x - 5) << " " << num(y) << "L" << num(x + 5) << " "
          << num(y) << "M" << num(x) << " " << num(y - 5) << "L" << num(x) << " "
          << num(y + 5) << "\" stroke=\"#1b9e77\" stroke-width=\"2\"/>\n";
    }
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace keptop
