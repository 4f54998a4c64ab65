#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "gravicat/dataio.hpp"
#include "gravicat/error.hpp"

namespace gravicat {
namespace {

constexpr std::size_t kMaxCells = 160;
constexpr double kPlotX = 70.0;
constexpr double kPlotY = 40.0;
constexpr double kPlotSize = 400.0;
constexpr double kBarX = 500.0;
constexpr double kBarWidth = 16.0;

struct Rgb {
  int r, g, b;
};

// Diverging map: white at zero, red (178, 24, 43) at +1, blue (33, 102, 172) at -1.
Rgb diverging(double v) {
  v = std::clamp(v, -1.0, 1.0);
  const Rgb end = v >= 0.0 ? Rgb{178, 24, 43} : Rgb{33, 102, 172};
  const double f = std::abs(v);
  auto mix = [f](int c) { return static_cast<int>(std::lround(255.0 + (c - 255.0) * f)); };
  return {mix(end.r), mix(end.g), mix(end.b)};
}

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string num(double v, int digits = 2) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
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

}  // namespace

std::string render_heatmap_svg(const WignerGrid& w, std::string_view title) {
  w.spec.validate();
  const GridSpec& g = w.spec;
  const std::size_t bx = (g.nx + kMaxCells - 1) / kMaxCells;
  const std::size_t bp = (g.np + kMaxCells - 1) / kMaxCells;
  const std::size_t cx = (g.nx + bx - 1) / bx;
  const std::size_t cp = (g.np + bp - 1) / bp;

  std::vector<double> cells(cx * cp, 0.0);
  for (std::size_t i = 0; i < cx; ++i) {
    for (std::size_t j = 0; j < cp; ++j) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t a = i * bx; a < std::min(g.nx, (i + 1) * bx); ++a)
        for (std::size_t b = j * bp; b < std::min(g.np, (j + 1) * bp); ++b, ++n) sum += w.at(a, b);
      cells[i * cp + j] = sum / static_cast<double>(n);
    }
  }
  double vmax = 0.0;
  for (double v : cells) vmax = std::max(vmax, std::abs(v));
  if (vmax == 0.0) vmax = 1.0;

  const double cw = kPlotSize / static_cast<double>(cx);
  const double ch = kPlotSize / static_cast<double>(cp);
  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"580\" height=\"500\" "
         "viewBox=\"0 0 580 500\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"580\" height=\"500\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    svg += "<text x=\"" + num(kPlotX + kPlotSize / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(title) + "</text>\n";
  }
  svg += "<g shape-rendering=\"crispEdges\">\n";
  for (std::size_t i = 0; i < cx; ++i) {
    for (std::size_t j = 0; j < cp; ++j) {
      const double v = cells[i * cp + j];
      // P increases upwards.
      const double x = kPlotX + static_cast<double>(i) * cw;
      const double y = kPlotY + kPlotSize - static_cast<double>(j + 1) * ch;
      svg += "<rect class=\"" + std::string(v < 0.0 ? "neg" : "pos") + "\" x=\"" + num(x) + "\" y=\"" + num(y) +
             "\" width=\"" + num(cw + 0.01) + "\" height=\"" + num(ch + 0.01) + "\" fill=\"" +
             hex(diverging(v / vmax)) + "\"/>\n";
    }
  }
  svg += "</g>\n";
  svg += "<rect x=\"" + num(kPlotX) + "\" y=\"" + num(kPlotY) + "\" width=\"" + num(kPlotSize) + "\" height=\"" +
         num(kPlotSize) + "\" fill=\"none\" stroke=\"#000000\"/>\n";

  const double bottom = kPlotY + kPlotSize;
  for (int k = 0; k <= 4; ++k) {
    const double f = k / 4.0;
    const double tx = kPlotX + f * kPlotSize;
    const double ty = bottom - f * kPlotSize;
    svg += "<text x=\"" + num(tx) + "\" y=\"" + num(bottom + 16) + "\" text-anchor=\"middle\">" +
           num(g.x_min + f * (g.x_max - g.x_min)) + "</text>\n";
    svg += "<text x=\"" + num(kPlotX - 6) + "\" y=\"" + num(ty + 4) + "\" text-anchor=\"end\">" +
           num(g.p_min + f * (g.p_max - g.p_min)) + "</text>\n";
  }
  svg += "<text x=\"" + num(kPlotX + kPlotSize / 2) + "\" y=\"" + num(bottom + 36) +
         "\" text-anchor=\"middle\">X (dimensionless quadrature)</text>\n";
  svg += "<text x=\"20\" y=\"" + num(kPlotY + kPlotSize / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         num(kPlotY + kPlotSize / 2) + ")\">P (dimensionless quadrature)</text>\n";

  constexpr int kBarSteps = 64;
  const double step = kPlotSize / kBarSteps;
  for (int k = 0; k < kBarSteps; ++k) {
    const double v = 1.0 - 2.0 * (k + 0.5) / kBarSteps;
    svg += "<rect x=\"" + num(kBarX) + "\" y=\"" + num(kPlotY + k * step) + "\" width=\"" + num(kBarWidth) +
           "\" height=\"" + num(step + 0.01) + "\" fill=\"" + hex(diverging(v)) + "\"/>\n";
  }
  svg += "<rect x=\"" + num(kBarX) + "\" y=\"" + num(kPlotY) + "\" width=\"" + num(kBarWidth) + "\" height=\"" +
         num(kPlotSize) + "\" fill=\"none\" stroke=\"#000000\"/>\n";
  const double tx = kBarX + kBarWidth + 4;
  svg += "<text x=\"" + num(tx) + "\" y=\"" + num(kPlotY + 4) + "\">" + num(vmax, 3) + "</text>\n";
  svg += "<text x=\"" + num(tx) + "\" y=\"" + num(kPlotY + kPlotSize / 2 + 4) + "\">0</text>\n";
  svg += "<text x=\"" + num(tx) + "\" y=\"" + num(bottom + 4) + "\">" + num(-vmax, 3) + "</text>\n";
  svg += "<text x=\"" + num(kBarX + kBarWidth / 2) + "\" y=\"" + num(bottom + 36) +
         "\" text-anchor=\"middle\">W</text>\n";
  svg += "</svg>\n";
  return svg;
}

void emit_heatmap(const WignerGrid& w, const std::filesystem::path& path, std::string_view title) {
  write_file(path, render_heatmap_svg(w, title));
}

}  // namespace gravicat
