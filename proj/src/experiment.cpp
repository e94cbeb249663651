#include "amcckf/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <json.hpp>

#include "amcckf/dataset.hpp"
#include "amcckf/sim_harness.hpp"

namespace amcckf {
namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open '" + path + "' for writing");
  return os;
}

nlohmann::json timing_json(const TimingStats& t) {
  return {{"steps", t.steps},     {"mean_ns", t.mean_ns}, {"min_ns", t.min_ns},
          {"max_ns", t.max_ns}, {"std_ns", t.std_ns}};
}

}  // namespace

TimingStats summarize_timing(const std::vector<double>& ns) {
  TimingStats s;
  s.steps = ns.size();
  if (ns.empty()) return s;
  double sum = 0.0;
  s.min_ns = ns.front();
  s.max_ns = ns.front();
  for (double v : ns) {
    sum += v;
    s.min_ns = std::min(s.min_ns, v);
    s.max_ns = std::max(s.max_ns, v);
  }
  s.mean_ns = sum / static_cast<double>(ns.size());
  double var = 0.0;
  for (double v : ns) var += (v - s.mean_ns) * (v - s.mean_ns);
  s.std_ns = std::sqrt(var / static_cast<double>(ns.size()));
  return s;
}

std::optional<Nominal> truth_at(const std::vector<Nominal>& truth, double t) {
  if (truth.empty()) return std::nullopt;
  constexpr double kSlack = 1e-9;
  if (t < truth.front().time - kSlack || t > truth.back().time + kSlack) return std::nullopt;
  auto hi = std::lower_bound(truth.begin(), truth.end(), t,
                             [](const Nominal& x, double v) { return x.time < v; });
  if (hi == truth.end()) return truth.back();
  if (hi == truth.begin() || std::abs(hi->time - t) <= kSlack) return *hi;
  const Nominal& a = *(hi - 1);
  const Nominal& b = *hi;
  if (std::abs(a.time - t) <= kSlack) return a;
  const double s = (t - a.time) / (b.time - a.time);
  Nominal x;
  x.time = t;
  x.p = a.p + s * (b.p - a.p);
  x.v = a.v + s * (b.v - a.v);
  x.q = a.q.slerp(s, b.q);
  return x;
}

Nominal initial_state(const RunInput& input) {
  if (input.events.empty()) return Nominal{};
  const double t0 = event_time(input.events.front());
  if (auto x = truth_at(input.truth, t0)) return *x;
  for (const Event& e : input.events) {
    if (const auto* z = std::get_if<Odometry>(&e)) {
      Nominal x;
      x.p = z->p;
      x.q = z->q;
      x.v = z->v;
      x.time = t0;
      return x;
    }
  }
  Nominal x;
  x.time = t0;
  return x;
}

MetricsReport run_filter(const FusionConfig& config, const RunInput& input,
                         const std::string& label) {
  MetricsReport rep;
  rep.filter = label;
  FusionEngine engine(config, initial_state(input));

  std::vector<double> all_ns;
  std::vector<double> corr_ns;
  all_ns.reserve(input.events.size());

  Vector3 se_pos = Vector3::Zero(), se_vel = Vector3::Zero(), se_att = Vector3::Zero();
  double nees_sum = 0.0;
  std::size_t scored = 0;

  for (const Event& e : input.events) {
    const auto start = Clock::now();
    const StepStatus status = engine.fuse_step(e);
    const double ns =
        std::chrono::duration<double, std::nano>(Clock::now() - start).count();
    all_ns.push_back(ns);
    ++rep.steps;
    if (status != StepStatus::kCorrected) continue;
    corr_ns.push_back(ns);
    ++rep.corrections;

    const Nominal& x = engine.nominal();
    const Matrix9& P = engine.covariance();
    rep.times.push_back(x.time);
    for (const auto& s : config.sensors) {
      rep.r_trace[s.id].push_back(engine.measurement_noise(s.id).trace());
      rep.kb_inverse[s.id].push_back(engine.bandwidth(s.id).cwiseInverse().mean());
    }
    EstimatePoint pt;
    pt.sensor_id = engine.last_correction().sensor_id;
    pt.state = x;
    pt.three_sigma = 3.0 * P.diagonal().cwiseMax(0.0).cwiseSqrt();
    rep.estimates.push_back(std::move(pt));

    if (auto truth = truth_at(input.truth, x.time)) {
      const Vector9 d = state_difference<double>(*truth, x);
      se_pos += d.segment<3>(kPos).cwiseAbs2();
      se_att += d.segment<3>(kRot).cwiseAbs2();
      se_vel += d.segment<3>(kVel).cwiseAbs2();
      nees_sum += d.dot(P.ldlt().solve(d));
      ++scored;
    }
  }

  if (scored > 0) {
    const double n = static_cast<double>(scored);
    rep.rmse_pos_axis = (se_pos / n).cwiseSqrt();
    rep.rmse_vel_axis = (se_vel / n).cwiseSqrt();
    rep.rmse_att_axis = (se_att / n).cwiseSqrt();
    rep.rmse_pos = std::sqrt(se_pos.sum() / n);
    rep.rmse_vel = std::sqrt(se_vel.sum() / n);
    rep.rmse_att = std::sqrt(se_att.sum() / n);
    rep.nees_mean = nees_sum / n;
  }
  rep.dropped = engine.dropped_events();
  rep.regularizations = engine.regularizations();
  rep.antipodal = engine.antipodal_events();
  rep.timing = summarize_timing(all_ns);
  rep.correction_timing = summarize_timing(corr_ns);
  return rep;
}

RunInput load_input(const RunConfig& rc) {
  rc.validate();
  RunInput in;
  if (!rc.dataset.empty()) {
    Dataset ds = ingest_dataset(rc.dataset);
    in.events = std::move(ds.events);
    if (!rc.truth.empty()) in.truth = read_truth(rc.truth);
    return in;
  }
  const ScenarioSpec spec = make_scenario_spec(rc);
  in.truth = generate_truth(spec);
  in.events = sample_sensors(in.truth, spec).events;
  return in;
}

namespace {

FusionConfig config_for(const RunConfig& rc, const RunInput& in) {
  std::vector<std::string> ids = sensor_ids(in.events);
  if (ids.empty()) {
    for (const auto& [id, v] : rc.r0_per_sensor) {
      (void)v;
      ids.push_back(id);
    }
  }
  if (ids.empty()) ids.push_back("odom");
  return make_fusion_config(rc, ids);
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& rc) {
  ExperimentResult res;
  res.input = load_input(rc);
  const FusionConfig fc = config_for(rc, res.input);
  res.report = run_filter(fc, res.input, std::string(to_string(rc.filter)));
  std::filesystem::create_directories(rc.out);
  const std::filesystem::path out(rc.out);
  write_estimates((out / "estimate.csv").string(), res.report);
  write_metrics((out / "metrics.json").string(), res.report);
  write_timing((out / "timing.json").string(), {res.report});
  return res;
}

std::vector<MetricsReport> compare(const RunConfig& rc,
                                   const std::vector<FilterVariant>& filters) {
  const RunInput in = load_input(rc);
  std::vector<std::future<MetricsReport>> jobs;
  for (FilterVariant v : filters) {
    RunConfig c = rc;
    c.filter = v;
    const FusionConfig fc = config_for(c, in);
    jobs.push_back(std::async(std::launch::async, [fc, &in, v] {
      return run_filter(fc, in, std::string(to_string(v)));
    }));
  }
  std::vector<MetricsReport> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

std::vector<BenchRow> bench(const std::vector<BenchCase>& cases, int repeats) {
  if (cases.empty()) throw ValidationError("bench: at least one configuration is required");
  if (repeats < 1) throw ValidationError("repeats: must be >= 1");
  const RunInput in = load_input(cases.front().config);
  std::vector<BenchRow> rows;
  for (const auto& c : cases) {
    BenchRow row;
    row.label = c.label;
    rows.push_back(std::move(row));
  }
  std::vector<std::vector<double>> pooled(cases.size()), pooled_corr(cases.size());
  // Interleave cases so slow drift of the machine hits all of them alike.
  for (int r = 0; r < repeats; ++r) {
    for (std::size_t i = 0; i < cases.size(); ++i) {
      const FusionConfig fc = config_for(cases[i].config, in);
      const MetricsReport rep = run_filter(fc, in, cases[i].label);
      rows[i].run_means_ns.push_back(rep.timing.mean_ns);
      pooled[i].push_back(rep.timing.mean_ns);
      pooled_corr[i].push_back(rep.correction_timing.mean_ns);
    }
  }
  for (std::size_t i = 0; i < cases.size(); ++i) {
    rows[i].timing = summarize_timing(pooled[i]);
    rows[i].correction_timing = summarize_timing(pooled_corr[i]);
  }
  return rows;
}

void write_estimates(const std::string& path, const MetricsReport& report) {
  std::ofstream os = open_out(path);
  os << "time_s,sensor_id,px,py,pz,qw,qx,qy,qz,vx,vy,vz";
  for (const char* n : {"p", "th", "v"}) {
    for (const char* a : {"x", "y", "z"}) os << ",sigma3_" << n << a;
  }
  os << '\n';
  for (const auto& e : report.estimates) {
    const Nominal& x = e.state;
    os << fmt(x.time) << ',' << e.sensor_id;
    for (int i = 0; i < 3; ++i) os << ',' << fmt(x.p(i));
    os << ',' << fmt(x.q.w()) << ',' << fmt(x.q.x()) << ',' << fmt(x.q.y()) << ','
       << fmt(x.q.z());
    for (int i = 0; i < 3; ++i) os << ',' << fmt(x.v(i));
    for (int i = 0; i < 9; ++i) os << ',' << fmt(e.three_sigma(i));
    os << '\n';
  }
}

void write_metrics(const std::string& path, const MetricsReport& r) {
  nlohmann::json j;
  j["filter"] = r.filter;
  j["steps"] = r.steps;
  j["corrections"] = r.corrections;
  j["dropped_events"] = r.dropped;
  j["regularizations"] = r.regularizations;
  j["antipodal_events"] = r.antipodal;
  const char* axes[] = {"x", "y", "z"};
  for (int i = 0; i < 3; ++i) {
    j[std::string("rmse_pos_") + axes[i]] = r.rmse_pos_axis(i);
    j[std::string("rmse_vel_") + axes[i]] = r.rmse_vel_axis(i);
    j[std::string("rmse_att_") + axes[i]] = r.rmse_att_axis(i);
  }
  j["rmse_pos"] = r.rmse_pos;
  j["rmse_vel"] = r.rmse_vel;
  j["rmse_att"] = r.rmse_att;
  j["nees_mean"] = r.nees_mean;
  j["times"] = r.times;
  for (const auto& [id, s] : r.r_trace) j["r_trace." + id] = s;
  for (const auto& [id, s] : r.kb_inverse) j["kb_inverse." + id] = s;
  std::ofstream os = open_out(path);
  os << j.dump(1) << '\n';
}

void write_timing(const std::string& path, const std::vector<MetricsReport>& reports) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : reports) {
    j.push_back({{"filter", r.filter},
                 {"per_step", timing_json(r.timing)},
                 {"per_correction", timing_json(r.correction_timing)}});
  }
  std::ofstream os = open_out(path);
  os << j.dump(1) << '\n';
}

void write_bench(const std::string& path, const std::vector<BenchRow>& rows) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"label", r.label},
                 {"run_means_ns", r.run_means_ns},
                 {"per_step", timing_json(r.timing)},
                 {"per_correction", timing_json(r.correction_timing)}});
  }
  std::ofstream os = open_out(path);
  os << j.dump(1) << '\n';
}

std::string format_bench_table(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-24s %12s %12s %12s %12s %14s\n", "config",
                "mean_ns", "min_ns", "max_ns", "std_ns", "corr_mean_ns");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof(line), "%-24s %12.1f %12.1f %12.1f %12.1f %14.1f\n",
                  r.label.c_str(), r.timing.mean_ns, r.timing.min_ns, r.timing.max_ns,
                  r.timing.std_ns, r.correction_timing.mean_ns);
    os << line;
  }
  return os.str();
}

std::string format_compare_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof(line), "%-10s %12s %12s %12s %10s %12s\n", "filter",
                "rmse_pos_m", "rmse_vel_mps", "rmse_att_rad", "nees", "step_ns");
  os << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof(line), "%-10s %12.5f %12.5f %12.5f %10.3f %12.1f\n",
                  r.filter.c_str(), r.rmse_pos, r.rmse_vel, r.rmse_att, r.nees_mean,
                  r.timing.mean_ns);
    os << line;
  }
  return os.str();
}

}  // namespace amcckf
