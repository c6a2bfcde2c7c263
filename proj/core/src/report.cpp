#include "ergmeter/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "ergmeter/error.hpp"
#include "report_internal.hpp"
#include "text.hpp"

namespace ergmeter::report {

using ergmeter::detail::csv_field;
using ergmeter::detail::format_number;

std::string_view to_string(PlotKind kind) noexcept {
  switch (kind) {
    case PlotKind::energy_walltime: return "energy_walltime";
    case PlotKind::power_cores: return "power_cores";
    case PlotKind::pie: return "pie";
    case PlotKind::roofline: return "roofline";
  }
  return "unknown";
}

PlotKind plot_kind_from_string(std::string_view name) {
  for (auto k : {PlotKind::energy_walltime, PlotKind::power_cores, PlotKind::pie,
                 PlotKind::roofline}) {
    if (to_string(k) == name) return k;
  }
  throw Error(Errc::parse_error, "unknown plot kind '" + std::string(name) + "'");
}

Format format_from_string(std::string_view name) {
  if (name == "csv") return Format::csv;
  if (name == "json") return Format::json;
  if (name == "svg") return Format::svg;
  throw Error(Errc::invalid_argument, "unknown format '" + std::string(name) + "'");
}

namespace {

std::string_view overlay_kind_name(OverlayKind k) {
  switch (k) {
    case OverlayKind::iso_power: return "iso_power";
    case OverlayKind::idle_line: return "idle_line";
    case OverlayKind::point: return "point";
    case OverlayKind::vline: return "vline";
  }
  return "unknown";
}

OverlayKind overlay_kind_from_string(std::string_view name) {
  for (auto k : {OverlayKind::iso_power, OverlayKind::idle_line, OverlayKind::point,
                 OverlayKind::vline}) {
    if (overlay_kind_name(k) == name) return k;
  }
  throw Error(Errc::parse_error, "unknown overlay kind '" + std::string(name) + "'");
}

bool line_is_diagonal(PlotKind kind) { return kind == PlotKind::energy_walltime; }

detail::Range snap(double lo, double hi, bool log) {
  if (!(lo <= hi)) return {log ? 1.0 : 0.0, log ? 10.0 : 1.0};
  if (log) {
    double a = std::pow(10.0, std::floor(std::log10(lo)));
    double b = std::pow(10.0, std::ceil(std::log10(hi)));
    if (b <= a) b = a * 10.0;
    return {a, b};
  }
  double a = std::min(lo, 0.0);
  double b = hi > a ? hi * 1.05 : a + 1.0;
  return {a, b};
}

std::string overlay_series_name(const Overlay& o) {
  switch (o.kind) {
    case OverlayKind::iso_power: return "iso_power_" + format_number(o.power_w) + "W";
    case OverlayKind::idle_line: return "idle_" + format_number(o.power_w) + "W";
    case OverlayKind::point: return "point";
    case OverlayKind::vline: return "vline";
  }
  return "overlay";
}

std::pair<const char*, const char*> csv_columns(PlotKind kind) {
  switch (kind) {
    case PlotKind::energy_walltime: return {"t_s", "energy_j"};
    case PlotKind::power_cores: return {"cores", "power_w"};
    case PlotKind::roofline: return {"intensity", "relative"};
    case PlotKind::pie: return {"fraction", "unused"};
  }
  return {"x", "y"};
}

}  // namespace

namespace detail {

Range x_extent(const PlotSpec& plot) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : plot.series) {
    for (const auto& p : s.points) {
      lo = std::min(lo, p.x);
      hi = std::max(hi, p.x);
    }
  }
  for (const auto& o : plot.overlays) {
    if (o.kind == OverlayKind::point || o.kind == OverlayKind::vline) {
      lo = std::min(lo, o.x);
      hi = std::max(hi, o.x);
    }
  }
  return snap(lo, hi, plot.axes.log_x);
}

Range y_extent(const PlotSpec& plot) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : plot.series) {
    for (const auto& p : s.points) {
      lo = std::min(lo, p.y);
      hi = std::max(hi, p.y);
    }
  }
  for (const auto& o : plot.overlays) {
    if (o.kind == OverlayKind::point) {
      lo = std::min(lo, o.y);
      hi = std::max(hi, o.y);
    } else if (!line_is_diagonal(plot.kind) &&
               (o.kind == OverlayKind::iso_power || o.kind == OverlayKind::idle_line)) {
      lo = std::min(lo, o.power_w);
      hi = std::max(hi, o.power_w);
    }
  }
  return snap(lo, hi, plot.axes.log_y);
}

}  // namespace detail

void PlotSpec::validate() const {
  for (const auto& s : series) {
    if (s.points.empty()) {
      throw Error(Errc::invalid_argument, "series '" + s.name + "' has no points");
    }
  }
  if (kind == PlotKind::pie) return;
  auto check = [this](double x, double y, bool has_y, const std::string& what) {
    if (axes.log_x && !(x > 0.0)) {
      throw Error(Errc::non_positive_on_log_axis,
                  what + " has x=" + format_number(x) + " on a log axis");
    }
    if (has_y && axes.log_y && !(y > 0.0)) {
      throw Error(Errc::non_positive_on_log_axis,
                  what + " has y=" + format_number(y) + " on a log axis");
    }
  };
  for (const auto& s : series) {
    for (const auto& p : s.points) check(p.x, p.y, true, "series '" + s.name + "'");
  }
  for (const auto& o : overlays) {
    switch (o.kind) {
      case OverlayKind::point: check(o.x, o.y, true, "overlay point '" + o.label + "'"); break;
      case OverlayKind::vline: check(o.x, 1.0, false, "overlay line '" + o.label + "'"); break;
      case OverlayKind::iso_power:
      case OverlayKind::idle_line:
        if (axes.log_y && !(o.power_w > 0.0)) {
          throw Error(Errc::non_positive_on_log_axis,
                      "zero-power line cannot be drawn on a log axis");
        }
        if (!(o.power_w >= 0.0)) throw Error(Errc::invalid_argument, "negative overlay power");
        break;
    }
  }
}

std::vector<PlotPoint> overlay_samples(const PlotSpec& plot, const Overlay& overlay) {
  if (overlay.kind != OverlayKind::iso_power && overlay.kind != OverlayKind::idle_line) {
    return {};
  }
  const auto xr = detail::x_extent(plot);
  std::vector<PlotPoint> out;
  if (line_is_diagonal(plot.kind)) {
    for (const auto& p : scaling::iso_power_points(overlay.power_w, xr.lo, xr.hi, kOverlaySamples)) {
      out.push_back({p.t_s, p.energy_j, {}});
    }
  } else {
    out.push_back({xr.lo, overlay.power_w, {}});
    out.push_back({xr.hi, overlay.power_w, {}});
  }
  return out;
}

std::string to_csv(const PlotSpec& plot) {
  plot.validate();
  std::string out;
  if (plot.kind == PlotKind::pie) {
    out = "chart,name,fraction\n";
    for (const auto& s : plot.series) {
      for (const auto& p : s.points) {
        out += csv_field(s.name) + ',' + csv_field(p.label) + ',' + format_number(p.x) + '\n';
      }
    }
    return out;
  }
  const auto [xc, yc] = csv_columns(plot.kind);
  out = std::string("series,label,") + xc + ',' + yc + '\n';
  for (const auto& s : plot.series) {
    for (const auto& p : s.points) {
      out += csv_field(s.name) + ',' + csv_field(p.label) + ',' + format_number(p.x) + ',' +
             format_number(p.y) + '\n';
    }
  }
  for (const auto& o : plot.overlays) {
    const auto name = csv_field(overlay_series_name(o));
    switch (o.kind) {
      case OverlayKind::iso_power:
      case OverlayKind::idle_line:
        for (const auto& p : overlay_samples(plot, o)) {
          out += name + ",," + format_number(p.x) + ',' + format_number(p.y) + '\n';
        }
        break;
      case OverlayKind::point:
        out += name + ',' + csv_field(o.label) + ',' + format_number(o.x) + ',' +
               format_number(o.y) + '\n';
        break;
      case OverlayKind::vline:
        out += name + ',' + csv_field(o.label) + ',' + format_number(o.x) + ",\n";
        break;
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const PlotSpec& p) {
  auto series = nlohmann::json::array();
  for (const auto& s : p.series) {
    auto pts = nlohmann::json::array();
    for (const auto& pt : s.points) pts.push_back({{"x", pt.x}, {"y", pt.y}, {"label", pt.label}});
    series.push_back({{"name", s.name}, {"connect", s.connect}, {"points", pts}});
  }
  auto overlays = nlohmann::json::array();
  for (const auto& o : p.overlays) {
    overlays.push_back({{"kind", overlay_kind_name(o.kind)},
                        {"power_w", o.power_w},
                        {"x", o.x},
                        {"y", o.y},
                        {"label", o.label}});
  }
  j = nlohmann::json{{"kind", to_string(p.kind)},
                     {"title", p.title},
                     {"series", series},
                     {"overlays", overlays},
                     {"axes",
                      {{"log_x", p.axes.log_x},
                       {"log_y", p.axes.log_y},
                       {"x_label", p.axes.x_label},
                       {"y_label", p.axes.y_label}}}};
}

void from_json(const nlohmann::json& j, PlotSpec& p) {
  p = PlotSpec{};
  p.kind = plot_kind_from_string(j.at("kind").get<std::string>());
  p.title = j.value("title", std::string{});
  for (const auto& s : j.at("series")) {
    Series out;
    out.name = s.at("name").get<std::string>();
    out.connect = s.value("connect", true);
    for (const auto& pt : s.at("points")) {
      out.points.push_back(
          {pt.at("x").get<double>(), pt.at("y").get<double>(), pt.value("label", std::string{})});
    }
    p.series.push_back(std::move(out));
  }
  for (const auto& o : j.value("overlays", nlohmann::json::array())) {
    p.overlays.push_back({overlay_kind_from_string(o.at("kind").get<std::string>()),
                          o.value("power_w", 0.0), o.value("x", 0.0), o.value("y", 0.0),
                          o.value("label", std::string{})});
  }
  const auto& a = j.at("axes");
  p.axes = Axes{a.value("log_x", true), a.value("log_y", true),
                a.value("x_label", std::string{}), a.value("y_label", std::string{})};
}

std::string to_json_text(const PlotSpec& plot) {
  plot.validate();
  return nlohmann::json(plot).dump(2) + "\n";
}

PlotSpec plot_from_json_text(std::string_view text) {
  PlotSpec p;
  try {
    p = nlohmann::json::parse(text).get<PlotSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("plot json: ") + e.what());
  }
  p.validate();
  return p;
}

PlotSpec load_plot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return plot_from_json_text(buf.str());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_write, "cannot create " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(Errc::io_write, "write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(Errc::io_write, "cannot move output into place at " + path.string());
  }
}

void export_plot(const PlotSpec& plot, Format format, const std::filesystem::path& path) {
  switch (format) {
    case Format::csv: write_file_atomic(path, to_csv(plot)); return;
    case Format::json: write_file_atomic(path, to_json_text(plot)); return;
    case Format::svg: write_file_atomic(path, to_svg(plot)); return;
  }
}

// --- builders -------------------------------------------------------------

PlotSpec build_energy_walltime_plot(const scaling::ScalingStudy& study, double idle_power_w,
                                    std::span<const double> iso_powers,
                                    std::optional<OpticsPoint> optics_point) {
  if (study.runs.empty()) throw Error(Errc::empty_study, "study has no runs");
  PlotSpec plot;
  plot.kind = PlotKind::energy_walltime;
  plot.title = "Energy vs wall-clock time";
  plot.axes = Axes{true, true, "wall-clock time (s)", "energy (J)"};

  std::map<int, std::vector<const scaling::RunRecord*>> by_omp;
  for (const auto& r : study.runs) by_omp[r.omp_threads].push_back(&r);
  for (auto& [omp, runs] : by_omp) {
    std::stable_sort(runs.begin(), runs.end(),
                     [](const auto* a, const auto* b) { return a->cores < b->cores; });
    Series s;
    s.name = "OMP " + std::to_string(omp);
    for (const auto* r : runs) {
      s.points.push_back({r->walltime_s(), r->energy_j,
                          std::to_string(r->mpi_tasks) + "×" + std::to_string(r->omp_threads)});
    }
    plot.series.push_back(std::move(s));
  }
  for (double p : iso_powers) plot.overlays.push_back(Overlay::iso_power(p));
  if (idle_power_w > 0.0) plot.overlays.push_back(Overlay::idle_line(idle_power_w));
  if (optics_point) {
    plot.overlays.push_back(Overlay::point(kOpticalLabel, optics_point->t_s, optics_point->energy_j));
  }
  plot.validate();
  return plot;
}

PlotSpec build_power_cores_plot(const scaling::ScalingStudy& study) {
  if (study.runs.empty()) throw Error(Errc::empty_study, "study has no runs");
  PlotSpec plot;
  plot.kind = PlotKind::power_cores;
  plot.title = "Average power vs cores";
  plot.axes = Axes{true, true, "cores", "average power (W)"};
  Series sub{"sub-node", {}, false};
  Series full{"full-node", {}, true};
  std::vector<const scaling::RunRecord*> runs;
  for (const auto& r : study.runs) runs.push_back(&r);
  std::stable_sort(runs.begin(), runs.end(),
                   [](const auto* a, const auto* b) { return a->cores < b->cores; });
  for (const auto* r : runs) {
    auto& s = r->cores % study.machine.cores_per_node == 0 ? full : sub;
    s.points.push_back({static_cast<double>(r->cores), r->power_w(), r->label});
  }
  if (!sub.points.empty()) plot.series.push_back(std::move(sub));
  if (!full.points.empty()) plot.series.push_back(std::move(full));
  if (study.idle_power_w > 0.0) plot.overlays.push_back(Overlay::idle_line(study.idle_power_w));
  plot.validate();
  return plot;
}

PlotSpec build_pie_plot(std::span<const PieChart> pies) {
  PlotSpec plot;
  plot.kind = PlotKind::pie;
  plot.title = "Estimated energy contributions";
  plot.axes = Axes{false, false, {}, {}};
  for (const auto& pie : pies) {
    Series s{pie.title, {}, false};
    for (const auto& slice : pie.slices) s.points.push_back({slice.fraction, 0.0, slice.name});
    plot.series.push_back(std::move(s));
  }
  plot.validate();
  return plot;
}

PlotSpec build_roofline_plot(const roofline::MachineEnergyParams& params, double i_min,
                             double i_max, int n_points) {
  const auto samples = roofline::curve(params, i_min, i_max, n_points);
  const double peak_eff = roofline::efficiency_asymptote(params);
  PlotSpec plot;
  plot.kind = PlotKind::roofline;
  plot.title = "Roofline and arch line";
  plot.axes = Axes{true, true, "intensity (flop/byte)", "relative to peak"};
  Series roof{"roofline (time)", {}, true};
  Series arch{"arch line (energy)", {}, true};
  for (const auto& s : samples) {
    roof.points.push_back({s.intensity, s.perf_flops / params.pi_flops, {}});
    arch.points.push_back({s.intensity, s.efficiency_flops_per_j / peak_eff, {}});
  }
  plot.series.push_back(std::move(roof));
  plot.series.push_back(std::move(arch));
  const auto b = roofline::balance_report(params);
  plot.overlays.push_back(Overlay::vline("B_tau", b.b_tau));
  plot.overlays.push_back(Overlay::vline("B_eps", b.b_eps));
  plot.validate();
  return plot;
}

}  // namespace ergmeter::report
