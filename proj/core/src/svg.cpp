#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include "ergmeter/report.hpp"
#include "report_internal.hpp"
#include "text.hpp"

namespace ergmeter::report {

namespace {

constexpr double kWidth = 960.0;
constexpr double kHeight = 720.0;
constexpr double kLeft = 100.0;
constexpr double kRight = 220.0;  // legend column
constexpr double kTop = 60.0;
constexpr double kBottom = 80.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                                 "#8c564b", "#e377c2", "#7f7f7f", "#17becf"};
constexpr const char* kIsoColor = "#9ecae1";
constexpr const char* kIdleColor = "#ff7f0e";

std::string num(double v) { return ergmeter::detail::format_sig(v, 6); }

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

class Frame {
 public:
  Frame(const PlotSpec& plot)
      : log_x_(plot.axes.log_x),
        log_y_(plot.axes.log_y),
        xr_(detail::x_extent(plot)),
        yr_(detail::y_extent(plot)) {}

  double px(double x) const {
    const double f = log_x_ ? (std::log10(x) - std::log10(xr_.lo)) /
                                  (std::log10(xr_.hi) - std::log10(xr_.lo))
                            : (x - xr_.lo) / (xr_.hi - xr_.lo);
    return kLeft + f * (kWidth - kLeft - kRight);
  }
  double py(double y) const {
    const double f = log_y_ ? (std::log10(y) - std::log10(yr_.lo)) /
                                  (std::log10(yr_.hi) - std::log10(yr_.lo))
                            : (y - yr_.lo) / (yr_.hi - yr_.lo);
    return kHeight - kBottom - f * (kHeight - kTop - kBottom);
  }

  std::vector<double> ticks(bool x_axis) const {
    const auto& r = x_axis ? xr_ : yr_;
    const bool log = x_axis ? log_x_ : log_y_;
    std::vector<double> t;
    if (log) {
      const int a = static_cast<int>(std::lround(std::log10(r.lo)));
      const int b = static_cast<int>(std::lround(std::log10(r.hi)));
      const int step = std::max(1, (b - a + 7) / 8);
      for (int e = a; e <= b; e += step) t.push_back(std::pow(10.0, e));
    } else {
      for (int k = 0; k <= 5; ++k) t.push_back(r.lo + (r.hi - r.lo) * k / 5.0);
    }
    return t;
  }

  const detail::Range& xr() const { return xr_; }

 private:
  bool log_x_;
  bool log_y_;
  detail::Range xr_;
  detail::Range yr_;
};

void header(std::string& out, const PlotSpec& plot) {
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 960 720\" width=\"960\" "
         "height=\"720\" font-family=\"sans-serif\" font-size=\"13\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"960\" height=\"720\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"480\" y=\"32\" text-anchor=\"middle\" font-size=\"18\">" + escape(plot.title) +
         "</text>\n";
}

void legend_entry(std::string& out, int row, const std::string& color, const std::string& text,
                  bool dashed = false) {
  const double y = kTop + 10.0 + row * 22.0;
  const double x = kWidth - kRight + 20.0;
  out += "<line x1=\"" + num(x) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x + 24) + "\" y2=\"" +
         num(y) + "\" stroke=\"" + color + "\" stroke-width=\"2\"" +
         (dashed ? " stroke-dasharray=\"5,3\"" : "") + "/>\n";
  out += "<text x=\"" + num(x + 32) + "\" y=\"" + num(y + 4) + "\">" + escape(text) + "</text>\n";
}

std::string render_xy(const PlotSpec& plot) {
  std::string out;
  header(out, plot);
  const Frame f(plot);
  const double x0 = kLeft;
  const double x1 = kWidth - kRight;
  const double y0 = kTop;
  const double y1 = kHeight - kBottom;

  out += "<defs><clipPath id=\"plot-area\"><rect x=\"" + num(x0) + "\" y=\"" + num(y0) +
         "\" width=\"" + num(x1 - x0) + "\" height=\"" + num(y1 - y0) +
         "\"/></clipPath></defs>\n";
  out += "<g class=\"axes\" stroke=\"#000000\" fill=\"none\">\n";
  out += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" + num(x1 - x0) +
         "\" height=\"" + num(y1 - y0) + "\"/>\n";
  out += "</g>\n<g class=\"ticks\" font-size=\"11\">\n";
  for (double t : f.ticks(true)) {
    const double x = f.px(t);
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(y1 + 6) + "\" stroke=\"#000000\"/>\n";
    out += "<text x=\"" + num(x) + "\" y=\"" + num(y1 + 20) + "\" text-anchor=\"middle\">" +
           num(t) + "</text>\n";
  }
  for (double t : f.ticks(false)) {
    const double y = f.py(t);
    out += "<line x1=\"" + num(x0 - 6) + "\" y1=\"" + num(y) + "\" x2=\"" + num(x0) + "\" y2=\"" +
           num(y) + "\" stroke=\"#000000\"/>\n";
    out += "<text x=\"" + num(x0 - 10) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" +
           num(t) + "</text>\n";
  }
  out += "</g>\n";
  out += "<text x=\"" + num((x0 + x1) / 2) + "\" y=\"" + num(kHeight - 30) +
         "\" text-anchor=\"middle\">" + escape(plot.axes.x_label) + "</text>\n";
  out += "<text x=\"30\" y=\"" + num((y0 + y1) / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 30 " +
         num((y0 + y1) / 2) + ")\">" + escape(plot.axes.y_label) + "</text>\n";

  int legend_row = 0;
  out += "<g class=\"overlays\" clip-path=\"url(#plot-area)\">\n";
  for (const auto& o : plot.overlays) {
    if (o.kind == OverlayKind::iso_power || o.kind == OverlayKind::idle_line) {
      const bool idle = o.kind == OverlayKind::idle_line;
      std::string pts;
      for (const auto& p : overlay_samples(plot, o)) {
        if (!pts.empty()) pts += ' ';
        pts += num(f.px(p.x)) + "," + num(f.py(p.y));
      }
      out += "<polyline class=\"" + std::string(idle ? "idle" : "iso-power") + "\" points=\"" +
             pts + "\" fill=\"none\" stroke=\"" + (idle ? kIdleColor : kIsoColor) +
             "\" stroke-width=\"1.5\"/>\n";
    } else if (o.kind == OverlayKind::vline) {
      const double x = f.px(o.x);
      out += "<line class=\"vline\" x1=\"" + num(x) + "\" y1=\"" + num(y0) + "\" x2=\"" + num(x) +
             "\" y2=\"" + num(y1) + "\" stroke=\"#555555\" stroke-dasharray=\"5,3\"/>\n";
      out += "<text x=\"" + num(x + 4) + "\" y=\"" + num(y0 + 16) + "\">" + escape(o.label) +
             "</text>\n";
    }
  }
  out += "</g>\n";

  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const auto& s = plot.series[i];
    const char* color = kPalette[i % kPalette.size()];
    out += "<g class=\"series\" data-name=\"" + escape(s.name) + "\">\n";
    if (s.connect && s.points.size() > 1) {
      std::string pts;
      for (const auto& p : s.points) {
        if (!pts.empty()) pts += ' ';
        pts += num(f.px(p.x)) + "," + num(f.py(p.y));
      }
      out += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color +
             "\" stroke-width=\"1.5\"/>\n";
    }
    for (const auto& p : s.points) {
      const double cx = f.px(p.x);
      const double cy = f.py(p.y);
      if (plot.kind != PlotKind::roofline) {
        out += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"4\" fill=\"" + color +
               "\"/>\n";
      }
      if (!p.label.empty()) {
        out += "<text x=\"" + num(cx) + "\" y=\"" + num(cy + 16) +
               "\" text-anchor=\"middle\" font-size=\"10\">" + escape(p.label) + "</text>\n";
      }
    }
    out += "</g>\n";
    legend_entry(out, legend_row++, color, s.name);
  }

  for (const auto& o : plot.overlays) {
    switch (o.kind) {
      case OverlayKind::point: {
        const double cx = f.px(o.x);
        const double cy = f.py(o.y);
        out += "<circle class=\"marker\" data-label=\"" + escape(o.label) + "\" cx=\"" + num(cx) +
               "\" cy=\"" + num(cy) + "\" r=\"6\" fill=\"#000000\"/>\n";
        out += "<text x=\"" + num(cx + 9) + "\" y=\"" + num(cy - 7) + "\">" + escape(o.label) +
               "</text>\n";
        break;
      }
      case OverlayKind::iso_power:
        legend_entry(out, legend_row++, kIsoColor, num(o.power_w) + " W");
        break;
      case OverlayKind::idle_line:
        legend_entry(out, legend_row++, kIdleColor, "idle " + num(o.power_w) + " W");
        break;
      case OverlayKind::vline:
        legend_entry(out, legend_row++, "#555555", o.label + " = " + num(o.x), true);
        break;
    }
  }
  out += "</svg>\n";
  return out;
}

std::string render_pies(const PlotSpec& plot) {
  std::string out;
  header(out, plot);
  const std::size_t n = plot.series.size();
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const std::size_t rows = cols == 0 ? 0 : (n + cols - 1) / cols;
  const double area_w = kWidth - kLeft - kRight + 60.0;
  const double area_h = kHeight - kTop - kBottom;
  const double cell_w = cols ? area_w / static_cast<double>(cols) : area_w;
  const double cell_h = rows ? area_h / static_cast<double>(rows) : area_h;
  const double r = 0.38 * std::min(cell_w, cell_h);

  std::vector<std::string> legend_names;
  auto color_for = [&legend_names](const std::string& name) {
    for (std::size_t k = 0; k < legend_names.size(); ++k) {
      if (legend_names[k] == name) return kPalette[k % kPalette.size()];
    }
    legend_names.push_back(name);
    return kPalette[(legend_names.size() - 1) % kPalette.size()];
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = plot.series[i];
    const double cx = kLeft - 40.0 + cell_w * (static_cast<double>(i % cols) + 0.5);
    const double cy = kTop + cell_h * (static_cast<double>(i / cols) + 0.5);
    out += "<g class=\"pie\" data-name=\"" + escape(s.name) + "\">\n";
    double start = 0.0;  // degrees clockwise from 12 o'clock
    for (const auto& slice : s.points) {
      const double sweep = slice.x * 360.0;
      const char* color = color_for(slice.label);
      if (sweep >= 360.0 - 1e-9) {
        out += "<circle class=\"slice\" data-name=\"" + escape(slice.label) +
               "\" data-sweep=\"" + num(sweep) + "\" cx=\"" + num(cx) + "\" cy=\"" + num(cy) +
               "\" r=\"" + num(r) + "\" fill=\"" + color + "\" stroke=\"#ffffff\"/>\n";
      } else if (sweep > 0.0) {
        const double a0 = (start - 90.0) * std::numbers::pi / 180.0;
        const double a1 = (start + sweep - 90.0) * std::numbers::pi / 180.0;
        const double sx = cx + r * std::cos(a0);
        const double sy = cy + r * std::sin(a0);
        const double ex = cx + r * std::cos(a1);
        const double ey = cy + r * std::sin(a1);
        out += "<path class=\"slice\" data-name=\"" + escape(slice.label) + "\" data-sweep=\"" +
               num(sweep) + "\" d=\"M " + num(cx) + "," + num(cy) + " L " + num(sx) + "," +
               num(sy) + " A " + num(r) + "," + num(r) + " 0 " + (sweep > 180.0 ? "1" : "0") +
               ",1 " + num(ex) + "," + num(ey) + " Z\" fill=\"" + color +
               "\" stroke=\"#ffffff\"/>\n";
      }
      start += sweep;
    }
    out += "<text x=\"" + num(cx) + "\" y=\"" + num(cy + r + 20) + "\" text-anchor=\"middle\">" +
           escape(s.name) + "</text>\n";
    out += "</g>\n";
  }
  for (std::size_t k = 0; k < legend_names.size(); ++k) {
    legend_entry(out, static_cast<int>(k), kPalette[k % kPalette.size()], legend_names[k]);
  }
  out += "</svg>\n";
  return out;
}

}  // namespace

std::string to_svg(const PlotSpec& plot) {
  plot.validate();
  return plot.kind == PlotKind::pie ? render_pies(plot) : render_xy(plot);
}

}  // namespace ergmeter::report
