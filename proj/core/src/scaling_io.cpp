#include <charconv>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "ergmeter/error.hpp"
#include "ergmeter/scaling.hpp"
#include "text.hpp"

namespace ergmeter::scaling {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

template <typename T>
T parse_field(const std::string& text, const char* name, std::size_t line_no) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": bad " + name + " '" +
                                       text + "'");
  }
  return value;
}

}  // namespace

std::vector<RunRecord> parse_study_csv(std::string_view text) {
  std::vector<RunRecord> runs;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    const auto f = split_csv_line(line);
    if (!header_seen) {
      std::string joined;
      for (const auto& x : f) joined += (joined.empty() ? "" : ",") + x;
      if (joined != kStudyCsvHeader) {
        throw Error(Errc::parse_error, std::string("expected header '") + kStudyCsvHeader + "'");
      }
      header_seen = true;
      continue;
    }
    if (f.size() != 7) {
      throw Error(Errc::parse_error,
                  "line " + std::to_string(line_no) + ": expected 7 fields, got " +
                      std::to_string(f.size()));
    }
    RunRecord r;
    r.label = f[0];
    r.n_nodes = parse_field<int>(f[1], "n_nodes", line_no);
    r.mpi_tasks = parse_field<int>(f[2], "mpi_tasks", line_no);
    r.omp_threads = parse_field<int>(f[3], "omp_threads", line_no);
    r.cores = f[4].empty() ? r.mpi_tasks * r.omp_threads : parse_field<int>(f[4], "cores", line_no);
    r.walltime_ms = parse_field<double>(f[5], "walltime_ms", line_no);
    r.energy_j = parse_field<double>(f[6], "energy_j", line_no);
    runs.push_back(std::move(r));
  }
  if (!header_seen) throw Error(Errc::parse_error, "empty study file");
  return runs;
}

ScalingStudy load_study(const std::filesystem::path& path, const Machine& machine,
                        double idle_power_w) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_unreadable, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();

  ScalingStudy study;
  if (path.extension() == ".json") {
    try {
      study = nlohmann::json::parse(buf.str()).get<ScalingStudy>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::parse_error, path.string() + ": " + e.what());
    }
  } else {
    study.runs = parse_study_csv(buf.str());
    study.machine = machine;
    study.idle_power_w = idle_power_w;
  }
  study.validate();
  return study;
}

std::string study_to_csv(const ScalingStudy& study) {
  std::string out = std::string(kStudyCsvHeader) + "\n";
  for (const auto& r : study.runs) {
    out += detail::csv_field(r.label) + ',' + std::to_string(r.n_nodes) + ',' +
           std::to_string(r.mpi_tasks) + ',' + std::to_string(r.omp_threads) + ',' +
           std::to_string(r.cores) + ',' + detail::format_number(r.walltime_ms) + ',' +
           detail::format_number(r.energy_j) + '\n';
  }
  return out;
}

void to_json(nlohmann::json& j, const RunRecord& r) {
  j = nlohmann::json{{"label", r.label},         {"n_nodes", r.n_nodes},
                     {"mpi_tasks", r.mpi_tasks}, {"omp_threads", r.omp_threads},
                     {"cores", r.cores},         {"walltime_ms", r.walltime_ms},
                     {"energy_j", r.energy_j}};
}

void from_json(const nlohmann::json& j, RunRecord& r) {
  r.label = j.at("label").get<std::string>();
  r.n_nodes = j.value("n_nodes", 1);
  r.mpi_tasks = j.value("mpi_tasks", 1);
  r.omp_threads = j.value("omp_threads", 1);
  if (j.contains("cores") && !j["cores"].is_null()) {
    r.cores = j["cores"].get<int>();
  } else {
    r.cores = r.mpi_tasks * r.omp_threads;
  }
  r.walltime_ms = j.at("walltime_ms").get<double>();
  r.energy_j = j.at("energy_j").get<double>();
}

void to_json(nlohmann::json& j, const ScalingStudy& s) {
  j = nlohmann::json{{"runs", s.runs},
                     {"idle_power_w", s.idle_power_w},
                     {"machine", {{"cores_per_node", s.machine.cores_per_node}}}};
}

void from_json(const nlohmann::json& j, ScalingStudy& s) {
  s.runs = j.at("runs").get<std::vector<RunRecord>>();
  s.idle_power_w = j.value("idle_power_w", 0.0);
  if (j.contains("machine")) s.machine.cores_per_node = j["machine"].value("cores_per_node", 36);
}

void to_json(nlohmann::json& j, const TimeModel& m) {
  j = nlohmann::json{{"t1_ms", m.t1_ms}, {"serial_fraction", m.serial_fraction}};
}

void to_json(nlohmann::json& j, const PowerModel& m) {
  j = nlohmann::json{{"p_idle_node_w", m.p_idle_node_w}, {"p_core_w", m.p_core_w}};
}

void to_json(nlohmann::json& j, const EnergyCurve& c) {
  auto pts = nlohmann::json::array();
  for (const auto& p : c.points) {
    pts.push_back({{"cores", p.cores}, {"t_s", p.t_s}, {"power_w", p.power_w},
                   {"energy_j", p.energy_j}});
  }
  j = nlohmann::json{{"points", pts}, {"argmin_cores", c.argmin_cores}};
}

void to_json(nlohmann::json& j, const PowerSummary& s) {
  auto pts = [](const std::vector<PowerPoint>& v) {
    auto a = nlohmann::json::array();
    for (const auto& p : v) a.push_back({{"cores", p.cores}, {"power_w", p.power_w}});
    return a;
  };
  j = nlohmann::json{{"subnode_points", pts(s.subnode_points)},
                     {"fullnode_points", pts(s.fullnode_points)},
                     {"fullnode_loglog_slope", s.fullnode_loglog_slope}};
}

}  // namespace ergmeter::scaling
