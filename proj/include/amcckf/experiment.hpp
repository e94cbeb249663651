#pragma once

// Replay of an event stream through one or more filter variants, with
// accuracy metrics against ground truth and per-step timing.

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "amcckf/fusion.hpp"
#include "amcckf/run_config.hpp"

namespace amcckf {

struct TimingStats {
  std::size_t steps = 0;
  double mean_ns = 0.0;
  double min_ns = 0.0;
  double max_ns = 0.0;
  double std_ns = 0.0;
};

TimingStats summarize_timing(const std::vector<double>& ns);

/// Filter output after one correction.
struct EstimatePoint {
  std::string sensor_id;
  Nominal state;
  Vector9 three_sigma = Vector9::Zero();
};

struct MetricsReport {
  std::string filter;
  std::size_t steps = 0;
  std::size_t corrections = 0;
  std::size_t dropped = 0;
  std::size_t regularizations = 0;
  std::size_t antipodal = 0;

  // NaN when no ground truth is available.
  Vector3 rmse_pos_axis = Vector3::Constant(std::numeric_limits<double>::quiet_NaN());
  Vector3 rmse_vel_axis = rmse_pos_axis;
  Vector3 rmse_att_axis = rmse_pos_axis;
  double rmse_pos = std::numeric_limits<double>::quiet_NaN();
  double rmse_vel = rmse_pos;
  double rmse_att = rmse_pos;
  double nees_mean = rmse_pos;

  // One entry per correction.
  std::vector<double> times;
  std::map<std::string, std::vector<double>> r_trace;
  std::map<std::string, std::vector<double>> kb_inverse;  // mean of 1/sigma
  std::vector<EstimatePoint> estimates;

  TimingStats timing;             // every fuse_step call
  TimingStats correction_timing;  // odometry steps only
};

struct RunInput {
  std::vector<Event> events;
  std::vector<Nominal> truth;  // may be empty
};

/// Ground truth at time t, interpolated between samples.
std::optional<Nominal> truth_at(const std::vector<Nominal>& truth, double t);

/// Initial nominal state: truth at the first event if available, otherwise
/// the first odometry sample.
Nominal initial_state(const RunInput& input);

MetricsReport run_filter(const FusionConfig& config, const RunInput& input,
                         const std::string& label = "");

/// Builds the input stream described by `rc`: a simulated scenario or a
/// dataset file (with optional truth file).
RunInput load_input(const RunConfig& rc);

struct ExperimentResult {
  MetricsReport report;
  RunInput input;
};

/// Runs `rc.filter` and writes estimate.csv, metrics.json and timing.json to
/// `rc.out`.
ExperimentResult run_experiment(const RunConfig& rc);

/// Runs every variant in `filters` on the same stream concurrently.
std::vector<MetricsReport> compare(const RunConfig& rc,
                                   const std::vector<FilterVariant>& filters);

struct BenchCase {
  std::string label;
  RunConfig config;
};

struct BenchRow {
  std::string label;
  std::vector<double> run_means_ns;  // mean per-step time of each repeat
  TimingStats timing;                // pooled over repeats
  TimingStats correction_timing;
};

/// Sequential timing runs; all cases replay the stream of the first case.
std::vector<BenchRow> bench(const std::vector<BenchCase>& cases, int repeats);

void write_estimates(const std::string& path, const MetricsReport& report);
void write_metrics(const std::string& path, const MetricsReport& report);
void write_timing(const std::string& path, const std::vector<MetricsReport>& reports);
void write_bench(const std::string& path, const std::vector<BenchRow>& rows);
std::string format_bench_table(const std::vector<BenchRow>& rows);
std::string format_compare_table(const std::vector<MetricsReport>& reports);

}  // namespace amcckf
