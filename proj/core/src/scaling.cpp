#include "ergmeter/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ergmeter/error.hpp"

namespace ergmeter::scaling {

RunRecord make_run(std::string label, int n_nodes, int mpi_tasks, int omp_threads,
                   double walltime_ms, double energy_j) {
  return RunRecord{std::move(label), n_nodes,     mpi_tasks, omp_threads,
                   mpi_tasks * omp_threads, walltime_ms, energy_j};
}

void ScalingStudy::validate() const {
  if (runs.empty()) throw Error(Errc::empty_study, "study has no runs");
  if (machine.cores_per_node < 1) {
    throw Error(Errc::invalid_argument, "cores_per_node must be >= 1");
  }
  if (!(idle_power_w >= 0.0)) throw Error(Errc::invalid_argument, "idle power must be >= 0");
  std::set<std::string> labels;
  for (const auto& r : runs) {
    if (!labels.insert(r.label).second) {
      throw Error(Errc::invalid_argument, "duplicate run label '" + r.label + "'");
    }
    if (r.n_nodes < 1 || r.mpi_tasks < 1 || r.omp_threads < 1 || r.cores < 1) {
      throw Error(Errc::invalid_argument, "run '" + r.label + "' has a non-positive count");
    }
    if (!(r.walltime_ms > 0.0) || !(r.energy_j > 0.0)) {
      throw Error(Errc::invalid_argument, "run '" + r.label + "' needs positive time and energy");
    }
    if (static_cast<long long>(r.cores) >
        static_cast<long long>(r.n_nodes) * machine.cores_per_node) {
      throw Error(Errc::invalid_argument,
                  "run '" + r.label + "' uses more cores than its nodes provide");
    }
  }
}

double TimeModel::predict_ms(double cores) const {
  return t1_ms * (serial_fraction + (1.0 - serial_fraction) / cores);
}

double PowerModel::predict_w(int cores, const Machine& machine) const {
  const int nodes = (cores + machine.cores_per_node - 1) / machine.cores_per_node;
  return nodes * p_idle_node_w + cores * p_core_w;
}

Metrics derive_metrics(const RunRecord& run, const RunRecord* reference) {
  Metrics m;
  m.power_w = run.power_w();
  if (reference != nullptr) {
    const double speedup = reference->walltime_ms / run.walltime_ms;
    m.speedup = speedup;
    m.parallel_efficiency = speedup * reference->cores / run.cores;
  }
  return m;
}

RunRecord pseudo_parallel(const RunRecord& single_node, int n) {
  if (n < 1) throw Error(Errc::invalid_n, "node count must be >= 1, got " + std::to_string(n));
  if (single_node.n_nodes != 1) {
    throw Error(Errc::invalid_argument, "pseudo-parallel extrapolation starts from one node");
  }
  if (n == 1) return single_node;
  RunRecord out = single_node;
  out.label = single_node.label + "@" + std::to_string(n);
  out.n_nodes = n;
  out.mpi_tasks = single_node.mpi_tasks * n;
  out.cores = single_node.cores * n;
  out.energy_j = single_node.energy_j * n;
  return out;
}

const RunRecord& find_measured_minimum(const ScalingStudy& study) {
  if (study.runs.empty()) throw Error(Errc::empty_study, "study has no runs");
  const RunRecord* best = &study.runs.front();
  for (const auto& r : study.runs) {
    if (r.energy_j < best->energy_j || (r.energy_j == best->energy_j && r.cores < best->cores)) {
      best = &r;
    }
  }
  return *best;
}

namespace {

struct LogFitData {
  std::vector<double> cores;
  std::vector<double> log_t;  // centred
  double mean_log_t = 0.0;
};

// Returns (objective, log t1 relative to the centring offset).
std::pair<double, double> log_objective(const LogFitData& d, double s) {
  const std::size_t n = d.cores.size();
  std::vector<double> log_g(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    log_g[i] = std::log(s + (1.0 - s) / d.cores[i]);
    mean += d.log_t[i] - log_g[i];
  }
  mean /= static_cast<double>(n);
  double f = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = mean + log_g[i] - d.log_t[i];
    f += r * r;
  }
  return {f, mean};
}

// d/ds of the log objective. The centring term drops out because the
// residuals sum to zero.
double log_objective_slope(const LogFitData& d, double s) {
  const std::size_t n = d.cores.size();
  std::vector<double> log_g(n);
  std::vector<double> dlog_g(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = s + (1.0 - s) / d.cores[i];
    log_g[i] = std::log(g);
    dlog_g[i] = (1.0 - 1.0 / d.cores[i]) / g;
    mean += d.log_t[i] - log_g[i];
  }
  mean /= static_cast<double>(n);
  double slope = 0.0;
  for (std::size_t i = 0; i < n; ++i) slope += 2.0 * (mean + log_g[i] - d.log_t[i]) * dlog_g[i];
  return slope;
}

std::vector<double> serial_fraction_grid() {
  std::vector<double> grid{0.0};
  for (int e = -90; e <= -24; ++e) grid.push_back(std::pow(10.0, e / 10.0));
  for (int k = 1; k <= 200; ++k) grid.push_back(k * 0.005);
  std::sort(grid.begin(), grid.end());
  return grid;
}

}  // namespace

TimeModel fit_time_model(std::span<const RunRecord> runs) {
  std::set<int> distinct;
  for (const auto& r : runs) {
    if (!(r.walltime_ms > 0.0) || r.cores < 1) {
      throw Error(Errc::invalid_argument, "runs need positive walltime and cores");
    }
    distinct.insert(r.cores);
  }
  if (distinct.size() < 2) {
    throw Error(Errc::underdetermined, "need runs at two or more distinct core counts");
  }

  LogFitData d;
  for (const auto& r : runs) {
    d.cores.push_back(r.cores);
    d.log_t.push_back(std::log(r.walltime_ms));
    d.mean_log_t += d.log_t.back();
  }
  d.mean_log_t /= static_cast<double>(runs.size());
  for (auto& y : d.log_t) y -= d.mean_log_t;

  const auto grid = serial_fraction_grid();
  std::size_t best = 0;
  double best_f = log_objective(d, grid[0]).first;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double f = log_objective(d, grid[k]).first;
    if (f < best_f) {
      best_f = f;
      best = k;
    }
  }

  // Golden-section refinement inside the neighbouring grid cells.
  double lo = grid[best == 0 ? 0 : best - 1];
  double hi = grid[std::min(best + 1, grid.size() - 1)];
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - inv_phi * (hi - lo);
  double x2 = lo + inv_phi * (hi - lo);
  double f1 = log_objective(d, x1).first;
  double f2 = log_objective(d, x2).first;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - inv_phi * (hi - lo);
      f1 = log_objective(d, x1).first;
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + inv_phi * (hi - lo);
      f2 = log_objective(d, x2).first;
    }
  }
  double s = 0.5 * (lo + hi);
  // The objective is too flat near its minimum for comparisons of f to pin s
  // down to full precision; bisect on the slope's sign change instead.
  double a = grid[best == 0 ? 0 : best - 1];
  double b = grid[std::min(best + 1, grid.size() - 1)];
  const bool bracketed = log_objective_slope(d, a) < 0.0 && log_objective_slope(d, b) > 0.0;
  if (bracketed) {
    for (int it = 0; it < 200 && b - a > 0.0; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      (log_objective_slope(d, mid) < 0.0 ? a : b) = mid;
    }
    s = 0.5 * (a + b);
  }
  if (!bracketed) {
    double f = log_objective(d, s).first;
    for (double cand : {lo, hi, grid[best]}) {
      const double fc = log_objective(d, cand).first;
      if (fc < f) {
        f = fc;
        s = cand;
      }
    }
  }

  const double log_t1 = log_objective(d, s).second + d.mean_log_t;
  return TimeModel{std::exp(log_t1), s};
}

TimeModel fit_time_model(const ScalingStudy& study) { return fit_time_model(study.runs); }

PowerModel fit_power_model(const ScalingStudy& study) {
  if (study.runs.empty()) throw Error(Errc::empty_study, "study has no runs");
  const int cpn = study.machine.cores_per_node;
  // Relative residuals: minimise sum(((n a + c b) - P) / P)^2.
  double snn = 0, snc = 0, scc = 0, snp = 0, scp = 0;
  for (const auto& r : study.runs) {
    const double p = r.power_w();
    const double n = static_cast<double>((r.cores + cpn - 1) / cpn) / p;
    const double c = static_cast<double>(r.cores) / p;
    snn += n * n;
    snc += n * c;
    scc += c * c;
    snp += n;
    scp += c;
  }
  const double det = snn * scc - snc * snc;
  double a = -1.0;
  double b = -1.0;
  if (std::abs(det) > 1e-12 * snn * scc) {
    a = (snp * scc - scp * snc) / det;
    b = (scp * snn - snp * snc) / det;
  }
  if (a >= 0.0 && b >= 0.0) return PowerModel{a, b};

  const double b_only = scp / scc;
  const double a_only = snp / snn;
  auto cost = [&](double aa, double bb) {
    double f = 0.0;
    for (const auto& r : study.runs) {
      const double p = r.power_w();
      const double nodes = (r.cores + cpn - 1) / cpn;
      const double e = (nodes * aa + r.cores * bb - p) / p;
      f += e * e;
    }
    return f;
  };
  return cost(0.0, b_only) <= cost(a_only, 0.0) ? PowerModel{0.0, b_only}
                                                  : PowerModel{a_only, 0.0};
}

EnergyCurve predict_energy_curve(const TimeModel& time_model, const PowerModel& power_model,
                                 const Machine& machine, std::span<const int> cores_range) {
  if (cores_range.empty()) throw Error(Errc::invalid_argument, "empty core range");
  EnergyCurve curve;
  curve.points.reserve(cores_range.size());
  const CurvePoint* best = nullptr;
  for (int c : cores_range) {
    if (c < 1) throw Error(Errc::invalid_argument, "core counts must be >= 1");
    CurvePoint p;
    p.cores = c;
    p.t_s = time_model.predict_ms(c) / 1000.0;
    p.power_w = power_model.predict_w(c, machine);
    p.energy_j = p.power_w * p.t_s;
    curve.points.push_back(p);
  }
  for (const auto& p : curve.points) {
    if (best == nullptr || p.energy_j < best->energy_j ||
        (p.energy_j == best->energy_j && p.cores < best->cores)) {
      best = &p;
    }
  }
  curve.argmin_cores = best->cores;
  return curve;
}

EnergyCurve predict_energy_curve(const TimeModel& time_model, const PowerModel& power_model,
                                 const Machine& machine, int max_cores) {
  if (max_cores < 1) throw Error(Errc::invalid_argument, "max_cores must be >= 1");
  std::vector<int> range(static_cast<std::size_t>(max_cores));
  for (int c = 1; c <= max_cores; ++c) range[static_cast<std::size_t>(c - 1)] = c;
  return predict_energy_curve(time_model, power_model, machine, range);
}

PowerSummary power_scaling_summary(const ScalingStudy& study, const Machine& machine) {
  PowerSummary out;
  for (const auto& r : study.runs) {
    const PowerPoint p{r.cores, r.power_w()};
    if (r.cores % machine.cores_per_node == 0) {
      out.fullnode_points.push_back(p);
    } else {
      out.subnode_points.push_back(p);
    }
  }
  std::set<int> distinct;
  for (const auto& p : out.fullnode_points) distinct.insert(p.cores);
  if (distinct.size() < 2) {
    throw Error(Errc::insufficient_full_node_runs,
                "need full-node runs at two or more core counts for a slope");
  }
  double mx = 0, my = 0;
  const auto n = static_cast<double>(out.fullnode_points.size());
  for (const auto& p : out.fullnode_points) {
    mx += std::log(p.cores);
    my += std::log(p.power_w);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (const auto& p : out.fullnode_points) {
    const double dx = std::log(p.cores) - mx;
    sxy += dx * (std::log(p.power_w) - my);
    sxx += dx * dx;
  }
  out.fullnode_loglog_slope = sxy / sxx;
  return out;
}

std::vector<EnergyTimePoint> iso_power_points(double power_w, double t_min_s, double t_max_s,
                                              int n_points) {
  if (!(power_w >= 0.0)) throw Error(Errc::invalid_argument, "power must be >= 0");
  if (!(t_min_s > 0.0) || !(t_max_s >= t_min_s)) {
    throw Error(Errc::invalid_argument, "time range must be positive and ordered");
  }
  if (n_points < 1) throw Error(Errc::invalid_argument, "need at least one point");
  std::vector<EnergyTimePoint> pts;
  pts.reserve(static_cast<std::size_t>(n_points));
  const double l0 = std::log(t_min_s);
  const double l1 = std::log(t_max_s);
  for (int i = 0; i < n_points; ++i) {
    double t;
    if (i == 0) {
      t = t_min_s;
    } else if (i == n_points - 1) {
      t = t_max_s;
    } else {
      t = std::exp(l0 + (l1 - l0) * i / (n_points - 1));
    }
    pts.push_back({t, power_w * t});
  }
  return pts;
}

}  // namespace ergmeter::scaling
