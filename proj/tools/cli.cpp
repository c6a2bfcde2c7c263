#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "ergmeter/attribution.hpp"
#include "ergmeter/counters.hpp"
#include "ergmeter/error.hpp"
#include "ergmeter/harness.hpp"
#include "ergmeter/optics.hpp"
#include "ergmeter/report.hpp"
#include "ergmeter/roofline.hpp"
#include "ergmeter/scaling.hpp"

namespace ergmeter::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kConfigEnv = "ERGMETER_CONFIG";

/// Settings resolvable from a config file and overridden by flags.
struct CliConfig {
  std::string backend_kind = "pm-dir";
  std::vector<std::string> paths;
  std::optional<std::int64_t> wrap_range_uj;
  double update_hz = 10.0;
  std::string script;
  int repeats = 1;
  std::optional<double> sample_hz;
  double min_duration_warn_s = 1.0;
  int cores_per_node = 36;
};

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, path + ": " + e.what());
  }
}

CliConfig load_cli_config(const std::string& explicit_path) {
  CliConfig cfg;
  std::string path = explicit_path;
  if (path.empty()) {
    if (const char* env = std::getenv(kConfigEnv); env != nullptr && *env != '\0') path = env;
  }
  if (path.empty()) return cfg;
  const auto j = read_json_file(path);
  if (j.contains("backend")) {
    const auto& b = j["backend"];
    cfg.backend_kind = b.value("kind", cfg.backend_kind);
    if (b.contains("paths")) cfg.paths = b["paths"].get<std::vector<std::string>>();
    if (b.contains("path")) cfg.paths = {b["path"].get<std::string>()};
    if (b.contains("wrap_range_uj")) cfg.wrap_range_uj = b["wrap_range_uj"].get<std::int64_t>();
    cfg.update_hz = b.value("update_hz", cfg.update_hz);
    cfg.script = b.value("script", cfg.script);
  }
  cfg.repeats = j.value("repeats", cfg.repeats);
  if (j.contains("sample_hz") && !j["sample_hz"].is_null()) {
    cfg.sample_hz = j["sample_hz"].get<double>();
  }
  cfg.min_duration_warn_s = j.value("min_duration_warn_s", cfg.min_duration_warn_s);
  cfg.cores_per_node = j.value("cores_per_node", cfg.cores_per_node);
  return cfg;
}

// Flags that select counter backends; unset values fall back to the config.
struct BackendFlags {
  std::string kind;
  std::vector<std::string> paths;
  std::string script;
  std::optional<std::int64_t> wrap_range_uj;
  std::optional<double> update_hz;

  void add_to(CLI::App* app) {
    app->add_option("--backend", kind, "Counter backend")
        ->check(CLI::IsMember({"pm-dir", "powercap", "synthetic"}));
    app->add_option("--path", paths,
                    "Counter directory; repeat once per node (pm-dir: energy + startup files; "
                    "powercap: energy_uj)");
    app->add_option("--script", script, "Synthetic power script (JSON)");
    app->add_option("--wrap-range-uj", wrap_range_uj, "Counter wrap range in microjoules");
    app->add_option("--update-hz", update_hz, "Counter update frequency");
  }

  std::vector<std::unique_ptr<counters::CounterBackend>> open(const CliConfig& cfg) const {
    counters::BackendDescriptor desc;
    desc.kind = counters::backend_kind_from_string(kind.empty() ? cfg.backend_kind : kind);
    desc.wrap_range_uj = wrap_range_uj ? wrap_range_uj : cfg.wrap_range_uj;
    desc.update_hz = update_hz.value_or(cfg.update_hz);
    std::vector<std::unique_ptr<counters::CounterBackend>> out;
    if (desc.kind == counters::BackendKind::synthetic) {
      const auto& s = script.empty() ? cfg.script : script;
      if (s.empty()) throw Error(Errc::invalid_argument, "synthetic backend needs --script");
      desc.script = counters::load_synthetic_script(s);
      out.push_back(counters::open_backend(desc));
      return out;
    }
    const auto& dirs = paths.empty() ? cfg.paths : paths;
    if (dirs.empty()) {
      throw Error(Errc::invalid_argument,
                  "no counter directory given; use --path or a config file");
    }
    for (const auto& d : dirs) {
      desc.path = d;
      out.push_back(counters::open_backend(desc));
    }
    return out;
  }
};

std::vector<counters::CounterBackend*> raw(
    const std::vector<std::unique_ptr<counters::CounterBackend>>& owned) {
  std::vector<counters::CounterBackend*> out;
  for (const auto& b : owned) out.push_back(b.get());
  return out;
}

std::pair<int, int> parse_grid(const std::string& text) {
  const auto x = text.find_first_of("xX");
  if (x == std::string::npos) throw Error(Errc::invalid_argument, "grid must look like 540x450");
  try {
    return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
  } catch (const std::exception&) {
    throw Error(Errc::invalid_argument, "grid must look like 540x450");
  }
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s.precision(prec);
  s << v;
  return s.str();
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    report::write_file_atomic(path, text);
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"ergmeter - energy measurement and analysis for HPC runs", "ergmeter"};
  app.require_subcommand(1);
  app.footer(
      "Exit status: 0 on success, 1 on usage or measurement error, 2 when a measurement was\n"
      "invalidated (counter startup token changed). Config file: --config, else $" +
      std::string(kConfigEnv) + ".");

  std::string config_path;
  app.add_option("--config", config_path, "CLI config JSON (backend, defaults, machine)");

  // measure ---------------------------------------------------------------
  auto* measure = app.add_subcommand("measure", "Measure energy and walltime of a command");
  BackendFlags m_backend;
  m_backend.add_to(measure);
  std::optional<int> m_repeats;
  std::optional<double> m_sample_hz;
  std::optional<double> m_min_warn;
  int m_retries = 2;
  std::string m_output;
  bool m_csv = false;
  bool m_json = false;
  std::vector<std::string> m_command;
  measure->add_option("--repeats", m_repeats, "Run the command N times and report mean/half-range")
      ->check(CLI::PositiveNumber);
  measure->add_option("--sample-hz", m_sample_hz, "Record a cumulative energy trace at this rate");
  measure->add_option("--min-duration-warn", m_min_warn,
                      "Flag runs shorter than this many seconds as low confidence");
  measure->add_option("--retries", m_retries, "Repeat an invalidated run up to N times")
      ->check(CLI::NonNegativeNumber);
  measure->add_option("-o,--output", m_output, "Write the record as JSON to this file");
  measure->add_flag("--csv", m_csv, "Print the record as a CSV row on stdout");
  measure->add_flag("--json", m_json, "Print the record as JSON on stdout");
  measure->add_option("command", m_command, "Command to run (after --)")->required();

  // baseline --------------------------------------------------------------
  auto* baseline = app.add_subcommand("baseline", "Measure idle power during a sleep");
  BackendFlags b_backend;
  b_backend.add_to(baseline);
  double b_seconds = 60.0;
  bool b_json = false;
  baseline->add_option("--seconds", b_seconds, "Idle duration")->check(CLI::PositiveNumber);
  baseline->add_flag("--json", b_json, "Print JSON on stdout");

  // study -----------------------------------------------------------------
  auto* study = app.add_subcommand("study", "Scaling study analysis");
  study->require_subcommand(1);
  auto* analyze = study->add_subcommand("analyze", "Minimum, metrics, power summary and models");
  std::string s_path;
  std::optional<int> s_cpn;
  double s_idle = 0.0;
  int s_max_cores = 2048;
  bool s_json = false;
  analyze->add_option("study", s_path, "Study CSV or JSON")->required()->check(CLI::ExistingFile);
  analyze->add_option("--cores-per-node", s_cpn, "Cores per node")->check(CLI::PositiveNumber);
  analyze->add_option("--idle-power", s_idle, "Idle node power in W (CSV input)");
  analyze->add_option("--max-cores", s_max_cores, "Upper end of the predicted curve")
      ->check(CLI::PositiveNumber);
  analyze->add_flag("--json", s_json, "Print JSON on stdout");

  auto* plot_cmd = study->add_subcommand("plot", "Build a plot spec from a study");
  std::string p_path;
  std::string p_kind = "energy_walltime";
  double p_idle = 0.0;
  std::vector<double> p_iso;
  std::vector<double> p_optics;
  std::optional<int> p_cpn;
  std::string p_out;
  plot_cmd->add_option("study", p_path, "Study CSV or JSON")->required()->check(CLI::ExistingFile);
  plot_cmd->add_option("--kind", p_kind, "Plot kind")
      ->check(CLI::IsMember({"energy_walltime", "power_cores"}));
  plot_cmd->add_option("--idle-power", p_idle, "Idle node power in W");
  plot_cmd->add_option("--iso-power", p_iso, "Constant-power lines in W")->delimiter(',');
  plot_cmd->add_option("--optics-point", p_optics, "Optical estimate as t_s,energy_j")
      ->delimiter(',')
      ->expected(2);
  plot_cmd->add_option("--cores-per-node", p_cpn, "Cores per node")->check(CLI::PositiveNumber);
  plot_cmd->add_option("-o,--output", p_out, "Plot spec JSON output (default stdout)");

  // attribute -------------------------------------------------------------
  auto* attribute = app.add_subcommand("attribute", "Per-component energy attribution");
  std::string a_input;
  std::string a_pie_csv;
  std::string a_plot_out;
  bool a_json = false;
  attribute->add_option("input", a_input, "Attribution input JSON")
      ->required()
      ->check(CLI::ExistingFile);
  attribute->add_option("--pie-csv", a_pie_csv, "Write pie slices as CSV");
  attribute->add_option("--plot-out", a_plot_out, "Write a pie plot spec (JSON)");
  attribute->add_flag("--json", a_json, "Print JSON on stdout");

  // roofline --------------------------------------------------------------
  auto* roof = app.add_subcommand("roofline", "Roofline / arch-line evaluation");
  std::string r_params;
  std::optional<double> r_intensity;
  bool r_curve = false;
  double r_min = 0.01;
  double r_max = 1000.0;
  int r_points = 100;
  std::string r_out;
  std::string r_plot_out;
  bool r_json = false;
  roof->add_option("--params", r_params, "Machine parameters JSON")
      ->required()
      ->check(CLI::ExistingFile);
  auto* r_int_opt = roof->add_option("--intensity", r_intensity, "Classify one intensity (flop/byte)");
  auto* r_curve_opt = roof->add_flag("--curve", r_curve, "Emit the curve over a log grid");
  r_int_opt->excludes(r_curve_opt);
  roof->add_option("--min", r_min, "Smallest intensity of the curve");
  roof->add_option("--max", r_max, "Largest intensity of the curve");
  roof->add_option("--points", r_points, "Curve samples")->check(CLI::PositiveNumber);
  roof->add_option("-o,--output", r_out, "Curve CSV output (default stdout)");
  roof->add_option("--plot-out", r_plot_out, "Write a roofline plot spec (JSON)");
  roof->add_flag("--json", r_json, "Print JSON on stdout");

  // optics ----------------------------------------------------------------
  auto* optics_cmd = app.add_subcommand("optics", "Optical coprocessor estimates");
  optics_cmd->require_subcommand(1);
  auto* compare = optics_cmd->add_subcommand("compare", "Transform workload time and energy");
  std::string o_config;
  int o_pairs = 525;
  std::string o_grid = "540x450";
  bool o_csv = false;
  bool o_json = false;
  compare->add_option("--config", o_config, "Optical system config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  compare->add_option("--pairs", o_pairs, "Forward+inverse transform pairs")
      ->check(CLI::NonNegativeNumber);
  compare->add_option("--grid", o_grid, "Transform grid WxH");
  compare->add_flag("--csv", o_csv, "Print the plot-overlay CSV row");
  compare->add_flag("--json", o_json, "Print JSON on stdout");

  auto* ops = optics_cmd->add_subcommand("ops", "Per-operation time and energy table");
  std::string ops_config;
  bool ops_json = false;
  ops->add_option("--config", ops_config, "Optical system config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  ops->add_flag("--json", ops_json, "Print JSON on stdout");

  // report ----------------------------------------------------------------
  auto* rep = app.add_subcommand("report", "Render a plot spec");
  std::string rep_input;
  std::string rep_format = "svg";
  std::string rep_out;
  rep->add_option("plot", rep_input, "Plot spec JSON")->required()->check(CLI::ExistingFile);
  rep->add_option("--format", rep_format, "Output format")
      ->check(CLI::IsMember({"svg", "csv", "json"}));
  rep->add_option("-o,--output", rep_out, "Output path")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitError;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitError;
  }

  try {
    const CliConfig cfg = load_cli_config(config_path);

    if (*measure) {
      harness::MeasureOptions opts;
      opts.repeats = m_repeats.value_or(cfg.repeats);
      opts.sample_hz = m_sample_hz ? m_sample_hz : cfg.sample_hz;
      opts.min_duration_warn_s = m_min_warn.value_or(cfg.min_duration_warn_s);
      const auto owned = m_backend.open(cfg);
      const auto backends = raw(owned);
      harness::MeasurementRecord rec;
      for (int attempt = 0;; ++attempt) {
        try {
          rec = harness::measure(m_command, backends, opts);
          break;
        } catch (const harness::InvalidRunError& e) {
          if (attempt >= m_retries) {
            err << "ergmeter: " << e.what() << "\n";
            if (!m_output.empty()) {
              report::write_file_atomic(m_output, json(e.record()).dump(2) + "\n");
            }
            if (m_json) out << json(e.record()).dump() << "\n";
            return kExitInvalidated;
          }
          err << "ergmeter: run invalidated, retrying (" << attempt + 1 << "/" << m_retries
              << ")\n";
        }
      }
      if (!m_output.empty()) report::write_file_atomic(m_output, json(rec).dump(2) + "\n");
      if (m_json) {
        out << json(rec).dump() << "\n";
      } else if (m_csv) {
        out << harness::kRecordCsvHeader << "\n" << harness::to_csv_row(rec) << "\n";
      }
      err << "ergmeter: energy " << fmt(rec.energy_j) << " J, walltime " << fmt(rec.walltime_ms)
          << " ms, power " << fmt(rec.power_w()) << " W, exit " << rec.exit_status;
      if (rec.repeats) {
        err << ", n=" << rec.repeats->n << " +/- " << fmt(rec.repeats->halfrange_j) << " J";
      }
      for (const auto& w : rec.warnings) err << " [" << w << "]";
      err << "\n";
      return kExitOk;
    }

    if (*baseline) {
      const auto owned = b_backend.open(cfg);
      const auto backends = raw(owned);
      const auto rec = harness::measure_idle(backends, b_seconds);
      if (b_json) {
        out << json(rec).dump() << "\n";
      } else {
        out << "idle power " << fmt(rec.idle_power_w) << " W (" << fmt(rec.energy_j) << " J over "
            << fmt(rec.duration_s) << " s)\n";
      }
      return kExitOk;
    }

    if (*analyze) {
      const scaling::Machine machine{s_cpn.value_or(cfg.cores_per_node)};
      auto st = scaling::load_study(s_path, machine, s_idle);
      if (s_cpn) st.machine = machine;
      const auto& minimum = scaling::find_measured_minimum(st);
      const scaling::RunRecord* reference = &st.runs.front();
      for (const auto& r : st.runs) {
        if (r.cores < reference->cores) reference = &r;
      }
      json metrics = json::array();
      for (const auto& r : st.runs) {
        const auto m = scaling::derive_metrics(r, reference);
        metrics.push_back({{"label", r.label},
                           {"cores", r.cores},
                           {"power_w", m.power_w},
                           {"speedup", *m.speedup},
                           {"parallel_efficiency", *m.parallel_efficiency}});
      }
      json result;
      result["energy_minimum"] = minimum;
      result["metrics"] = metrics;
      result["idle_power_w"] = st.idle_power_w;
      try {
        result["power_summary"] = scaling::power_scaling_summary(st, st.machine);
      } catch (const Error& e) {
        result["power_summary"] = nullptr;
        result["power_summary_error"] = e.what();
      }
      std::optional<scaling::TimeModel> tm;
      try {
        tm = scaling::fit_time_model(st);
        result["time_model"] = *tm;
      } catch (const Error& e) {
        result["time_model"] = nullptr;
        result["time_model_error"] = e.what();
      }
      const auto pm = scaling::fit_power_model(st);
      result["power_model"] = pm;
      if (tm) {
        const auto curve = scaling::predict_energy_curve(*tm, pm, st.machine, s_max_cores);
        json pts = json::array();
        for (const auto& p : curve.points) {
          const bool pow2 = (p.cores & (p.cores - 1)) == 0;
          if (pow2 || p.cores == curve.argmin_cores || p.cores == s_max_cores) {
            pts.push_back({{"cores", p.cores},
                           {"t_s", p.t_s},
                           {"power_w", p.power_w},
                           {"energy_j", p.energy_j}});
          }
        }
        result["predicted_curve"] = {{"argmin_cores", curve.argmin_cores}, {"points", pts}};
      } else {
        result["predicted_curve"] = nullptr;
      }
      if (s_json) {
        out << result.dump() << "\n";
      } else {
        out << "runs: " << st.runs.size() << "\n";
        out << "energy minimum: " << minimum.label << " (" << minimum.cores << " cores, "
            << fmt(minimum.energy_j) << " J, " << fmt(minimum.walltime_s()) << " s)\n";
        for (const auto& m : metrics) {
          out << "  " << m["label"].get<std::string>() << ": " << m["cores"].get<int>()
              << " cores, " << fmt(m["power_w"].get<double>()) << " W, speedup "
              << fmt(m["speedup"].get<double>(), 4) << ", efficiency "
              << fmt(m["parallel_efficiency"].get<double>(), 4) << "\n";
        }
        if (!result["power_summary"].is_null()) {
          out << "full-node log-log power slope: "
              << fmt(result["power_summary"]["fullnode_loglog_slope"].get<double>(), 4) << "\n";
        }
        if (tm) {
          out << "time model: t1 = " << fmt(tm->t1_ms) << " ms, serial fraction "
              << fmt(tm->serial_fraction, 4) << "\n";
          out << "power model: " << fmt(pm.p_idle_node_w) << " W/node + " << fmt(pm.p_core_w)
              << " W/core\n";
          out << "predicted energy minimum at " << result["predicted_curve"]["argmin_cores"]
              << " cores\n";
        }
      }
      return kExitOk;
    }

    if (*plot_cmd) {
      const scaling::Machine machine{p_cpn.value_or(cfg.cores_per_node)};
      auto st = scaling::load_study(p_path, machine, p_idle);
      if (p_cpn) st.machine = machine;
      if (p_idle > 0.0) st.idle_power_w = p_idle;
      report::PlotSpec plot;
      if (p_kind == "power_cores") {
        plot = report::build_power_cores_plot(st);
      } else {
        std::optional<report::OpticsPoint> op;
        if (p_optics.size() == 2) op = report::OpticsPoint{p_optics[0], p_optics[1]};
        plot = report::build_energy_walltime_plot(st, st.idle_power_w, p_iso, op);
      }
      write_text(p_out, report::to_json_text(plot), out);
      return kExitOk;
    }

    if (*attribute) {
      const auto input = read_json_file(a_input).get<attribution::AttributionInput>();
      const auto result = attribution::attribute(input.full_run, input.shares, input.power_refs);
      const auto slices = attribution::pie_data(result);
      if (!a_pie_csv.empty()) report::write_file_atomic(a_pie_csv, attribution::pie_csv(slices));
      if (!a_plot_out.empty()) {
        const report::PieChart chart{input.full_run.label, slices};
        report::export_plot(report::build_pie_plot(std::span(&chart, 1)), report::Format::json,
                            a_plot_out);
      }
      if (a_json) {
        out << json(result).dump() << "\n";
      } else {
        for (const auto& s : slices) out << s.name << ": " << fmt(100.0 * s.fraction, 4) << "%\n";
        out << "note: " << result.note << "\n";
      }
      return kExitOk;
    }

    if (*roof) {
      auto params = read_json_file(r_params).get<roofline::MachineEnergyParams>();
      params.validate();
      if (!r_plot_out.empty()) {
        report::export_plot(report::build_roofline_plot(params, r_min, r_max, r_points),
                            report::Format::json, r_plot_out);
      }
      if (r_curve) {
        const auto samples = roofline::curve(params, r_min, r_max, r_points);
        if (r_json) {
          ordered_json arr = ordered_json::array();
          for (const auto& s : samples) {
            arr.push_back({{"intensity", s.intensity},
                           {"perf_flops", s.perf_flops},
                           {"efficiency_flops_per_j", s.efficiency_flops_per_j}});
          }
          out << arr.dump() << "\n";
        } else {
          write_text(r_out, roofline::curve_csv(samples), out);
        }
        return kExitOk;
      }
      const auto b = roofline::balance_report(params);
      ordered_json j{{"b_tau", b.b_tau}, {"b_eps", b.b_eps}, {"gap", b.gap}};
      if (r_intensity) {
        const auto c = roofline::classify(params, *r_intensity);
        j["intensity"] = *r_intensity;
        j["perf_flops"] = roofline::perf_roofline(params, *r_intensity);
        j["efficiency_flops_per_j"] = roofline::efficiency_archline(params, *r_intensity);
        j["time_bound"] = std::string(roofline::to_string(c.time_bound));
        j["energy_bound"] = std::string(roofline::to_string(c.energy_bound));
        j["in_balance_gap"] = c.in_balance_gap;
      }
      if (r_json) {
        out << j.dump() << "\n";
      } else {
        out << "time balance B_tau = " << fmt(b.b_tau) << " flop/byte\n"
            << "energy balance B_eps = " << fmt(b.b_eps) << " flop/byte\n"
            << "balance gap = " << fmt(b.gap) << "\n"
            << "half-efficiency intensity (constant power included) = "
            << fmt(roofline::half_efficiency_intensity(params)) << " flop/byte\n";
        if (r_intensity) {
          out << "I = " << fmt(*r_intensity) << ": " << j["time_bound"].get<std::string>()
              << "-bound in time, " << j["energy_bound"].get<std::string>()
              << "-bound in energy" << (j["in_balance_gap"].get<bool>() ? ", inside the balance gap" : "")
              << "\n";
        }
      }
      return kExitOk;
    }

    if (*compare) {
      const auto config = optics::load_config(o_config);
      const auto [gw, gh] = parse_grid(o_grid);
      const optics::WorkloadSpec workload{o_pairs, gw, gh, 0, {}};
      const auto c = optics::workload_compare(config, workload);
      if (o_json) {
        const ordered_json j{{"delta_t_s", c.delta_t_s},
                             {"delta_e_j", c.delta_e_j},
                             {"avg_power_w", c.avg_power_w},
                             {"packed", c.packed},
                             {"per_pair_ms", c.per_pair_ms}};
        out << j.dump() << "\n";
      } else if (o_csv) {
        out << optics::comparison_csv(c);
      } else {
        const auto r = optics::display_rounded(c);
        out << c.packed << " grids per panel, " << fmt(c.per_pair_ms) << " ms per transform pair\n"
            << "delta t = " << fmt(c.delta_t_s, 12) << " s (" << fmt(r.delta_t_s) << " s)\n"
            << "delta E = " << fmt(c.delta_e_j, 12) << " J (" << fmt(r.delta_e_j) << " J)\n";
      }
      return kExitOk;
    }

    if (*ops) {
      const auto config = optics::load_config(ops_config);
      ordered_json rows = ordered_json::array();
      for (const auto& op : optics::standard_ops()) {
        const auto cost = optics::op_cost(config, op);
        const auto shown = optics::display_rounded(config, cost);
        ordered_json row{{"op", std::string(optics::to_string(op.kind))},
                         {"time_ms", cost.time_ms},
                         {"energy_mj", cost.energy_mj},
                         {"rounded_time_ms", shown.time_ms},
                         {"rounded_energy_mj", shown.energy_mj}};
        if (op.digital_equivalent) {
          const auto per = optics::digital_equivalent_cost(config, op);
          const auto per_shown = optics::display_rounded(config, per);
          row["digital_equivalent"] = {{"count", op.digital_equivalent->count},
                                       {"description", op.digital_equivalent->description},
                                       {"per_op_time_ms", per.time_ms},
                                       {"per_op_energy_mj", per.energy_mj},
                                       {"rounded_time_ms", per_shown.time_ms},
                                       {"rounded_energy_mj", per_shown.energy_mj}};
        }
        rows.push_back(row);
      }
      if (ops_json) {
        out << rows.dump() << "\n";
      } else {
        out << "op             time_ms   energy_mj   (rounded)\n";
        for (const auto& r : rows) {
          out << r["op"].get<std::string>() << "  " << fmt(r["time_ms"].get<double>()) << "  "
              << fmt(r["energy_mj"].get<double>()) << "  (" << fmt(r["rounded_time_ms"].get<double>())
              << " ms, " << fmt(r["rounded_energy_mj"].get<double>()) << " mJ)\n";
          if (r.contains("digital_equivalent")) {
            const auto& d = r["digital_equivalent"];
            out << "  per " << d["description"].get<std::string>() << ": "
                << fmt(d["per_op_time_ms"].get<double>()) << " ms, "
                << fmt(d["per_op_energy_mj"].get<double>()) << " mJ ("
                << fmt(d["rounded_time_ms"].get<double>()) << " ms, "
                << fmt(d["rounded_energy_mj"].get<double>()) << " mJ)\n";
          }
        }
      }
      return kExitOk;
    }

    if (*rep) {
      const auto plot = report::load_plot(rep_input);
      report::export_plot(plot, report::format_from_string(rep_format), rep_out);
      return kExitOk;
    }
  } catch (const harness::InvalidRunError& e) {
    err << "ergmeter: " << e.what() << "\n";
    return kExitInvalidated;
  } catch (const Error& e) {
    err << "ergmeter: " << e.what() << "\n";
    return (e.code() == Errc::invalid_run || e.code() == Errc::torn_read) ? kExitInvalidated
                                                                            : kExitError;
  } catch (const json::exception& e) {
    err << "ergmeter: malformed JSON input: " << e.what() << "\n";
    return kExitError;
  } catch (const std::exception& e) {
    err << "ergmeter: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace ergmeter::cli
